"""Hyperbolic cones over finite bounded spaces.

The cone point ``(z, t)`` sits at distance ``t`` from the vertex; two cone points are
as far apart as the corresponding vertices of a triangle in the hyperbolic plane with
sides ``t``, ``t'`` and angle ``mu * |zz'|`` at the vertex, ``mu = pi / diam Z``.
Written in half-angle form,

    sinh^2(d/2) = sinh^2((t - t')/2) + sinh(t) sinh(t') sin^2(angle/2),

which is evaluated in the log domain so radii in the thousands do not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metric import TOL, FiniteMetricSpace, _SpaceBase, hyperbolicity_delta, within_closed, within_open

DELTA_H2 = 1.0


def _log_sinh(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.log(np.sinh(np.minimum(x, 20.0)))
        big = x - math.log(2.0) + np.log1p(-np.exp(-2.0 * np.maximum(x, 20.0)))
    return np.where(x > 20.0, big, small)


def comparison_distance(t, t2, half_angle_sin):
    """Distance between the endpoints of an H^2 hinge with sides ``t, t2``.

    ``half_angle_sin`` is ``sin(angle / 2)``; all arguments broadcast.
    """
    t = np.asarray(t, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    s = np.asarray(half_angle_sin, dtype=np.float64)
    if np.any(t < 0) or np.any(t2 < 0):
        raise ValueError("cone radii must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = 2.0 * _log_sinh(np.abs(t - t2) / 2.0)
        angular = _log_sinh(t) + _log_sinh(t2) + 2.0 * np.log(s)
        log_s = np.logaddexp(radial, angular)
        # asinh(y) = log(2y) to double precision once y > 1e8
        direct = 2.0 * np.arcsinh(np.exp(0.5 * np.minimum(log_s, 40.0)))
        asym = log_s + 2.0 * math.log(2.0)
    out = np.where(log_s > 40.0, asym, direct)
    return np.where(np.isneginf(log_s), 0.0, out)


class HyperbolicCone(_SpaceBase):
    """Finite sample of ``Co(Z)``: the vertex plus ``Z x radii``.

    Point ``0`` is the vertex ``o``; point ``1 + b * R + k`` is ``(z_b, radii[k])``.
    A one-point base gives the metric ray.
    """

    def __init__(self, base: FiniteMetricSpace, radii):
        base = base.materialize()
        radii = np.unique(np.asarray(radii, dtype=np.float64))
        radii = radii[radii > 0]
        if radii.size == 0:
            raise ValueError("radial grid needs a positive radius")
        self.base = base
        self.radii = radii
        self.R = radii.size
        self.n = 1 + base.n * self.R
        diam = float(base.matrix.max()) if base.n > 1 else 0.0
        self.diam = diam
        self.mu = math.pi / diam if diam > 0 else 0.0
        angle = np.clip(self.mu * base.matrix, 0.0, math.pi)
        self.half_sin = np.sin(angle / 2.0)
        self.vertex = 0
        self._tvals = np.concatenate([[0.0], np.tile(radii, base.n)])
        self._zvals = np.concatenate([[0], np.repeat(np.arange(base.n), self.R)])

    # -- coordinates -------------------------------------------------------
    def t_of(self, idx):
        return self._tvals[idx]

    def z_of(self, idx):
        return self._zvals[idx]

    def point(self, z: int, k: int) -> int:
        return 1 + z * self.R + k

    def radius_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.radii - t)))
        if abs(self.radii[k] - t) > TOL:
            raise ValueError(f"radius {t} is not on the grid")
        return k

    # -- metric ------------------------------------------------------------
    def distance(self, z, t, z2, t2):
        """Cone distance between ``(z, t)`` and ``(z2, t2)`` for arbitrary radii."""
        return comparison_distance(t, t2, self.half_sin[z, z2])

    def dist(self, i, j):
        return self.distance(self._zvals[i], self._tvals[i], self._zvals[j], self._tvals[j])

    def _window(self, t: float, r: float) -> np.ndarray:
        lo = np.searchsorted(self.radii, t - r - TOL, side="left")
        hi = np.searchsorted(self.radii, t + r + TOL, side="right")
        ks = np.arange(lo, hi)
        cand = (1 + np.arange(self.base.n)[:, None] * self.R + ks[None, :]).ravel()
        if t - r <= TOL:
            cand = np.concatenate([[0], cand])
        return cand

    def ball(self, i, r, closed=False):
        cand = self._window(float(self._tvals[i]), r)
        d = self.dist(np.int64(i), cand)
        mask = within_closed(d, r) if closed else within_open(d, r)
        return np.sort(cand[mask])

    def dist_to_complement(self, i, member, cap=None):
        if len(member) == self.n:
            return math.inf
        step = float(np.min(np.diff(self.radii))) if self.R > 1 else float(self.radii[0])
        r = max(step, TOL)
        t = float(self._tvals[i])
        while True:
            cand = self._window(t, r)
            pos = np.minimum(np.searchsorted(member, cand), len(member) - 1)
            outside = cand[member[pos] != cand] if len(member) else cand
            if outside.size:
                d = float(np.min(self.dist(np.int64(i), outside)))
                # the window holds every point within r; a closer point cannot be missed
                if d <= r + TOL:
                    return d if cap is None else min(d, cap)
            if cap is not None and r >= cap:
                return cap
            if t - r <= 0 and t + r >= self.radii[-1]:
                return float(np.min(self.dist(np.int64(i), outside))) if outside.size else math.inf
            r *= 2.0

    def nearest_radius(self, t, z, z2) -> np.ndarray:
        """Radius on ray ``z2`` closest to ``(z, t)``: ``tanh t* = tanh t cos(angle)``.

        ``cosh d`` is convex in the second radius with this minimizer, so the nearest
        sampled point of a set on a ray is a grid neighbour of ``t*``.
        """
        t = np.asarray(t, dtype=np.float64)
        s = self.half_sin[z, z2]
        one_minus = 2.0 / (np.exp(np.minimum(2.0 * t, 700.0)) + 1.0) + np.tanh(t) * 2.0 * s * s
        cos_a = 1.0 - 2.0 * s * s
        with np.errstate(divide="ignore"):
            star = 0.5 * np.log((2.0 - one_minus) / one_minus)
        star = np.where(cos_a <= 0.0, 0.0, star)
        return np.where(np.asarray(z) == z2, t, star)

    def radial_window(self, lo: float, hi: float) -> np.ndarray:
        """Indices of the points with radius in ``[lo, hi]`` (the vertex counts as radius 0)."""
        return self._window(0.5 * (lo + hi), 0.5 * (hi - lo))

    def set_distance(self, subset, points, cap: float | None = None) -> np.ndarray:
        """Distance from each of ``points`` to the index set ``subset`` (``inf`` if empty).

        With ``cap``, values above it are only reported as ``>= cap``; rays whose
        distance from a point exceeds ``cap`` are skipped for that point.
        """
        subset = np.unique(np.asarray(subset, dtype=np.int64))
        points = np.asarray(points, dtype=np.int64)
        out = np.full(points.size, np.inf)
        if subset.size == 0 or points.size == 0:
            return out if cap is None else np.minimum(out, cap)
        zp, tp = self._zvals[points], self._tvals[points]
        if subset[0] == 0:
            out = np.minimum(out, tp)
            subset = subset[1:]
        zs, ts = self._zvals[subset], self._tvals[subset]
        vertex_pts = points == 0
        rays, starts = np.unique(zs, return_index=True)
        ends = np.r_[starts[1:], zs.size]
        near = None
        if cap is not None:
            # distance to a whole ray: sinh d = sinh t sin(angle), or t past a right angle
            log_cap = float(_log_sinh(max(cap, 1e-300)))
            s = self.half_sin[np.ix_(zp, rays)]
            sin_a = 2.0 * s * np.sqrt(np.maximum(1.0 - s * s, 0.0))
            with np.errstate(divide="ignore"):
                near = np.where(1.0 - 2.0 * s * s > 0, _log_sinh(tp)[:, None] + np.log(sin_a) <= log_cap,
                                tp[:, None] <= cap)
            near |= zp[:, None] == rays[None, :]
        for j, (z2, a, b) in enumerate(zip(rays, starts, ends)):
            radii = ts[a:b]                               # indices on a ray are ordered by radius
            sel = slice(None) if near is None else np.flatnonzero(near[:, j])
            if near is not None and sel.size == 0:
                continue
            t_sel, z_sel = tp[sel], zp[sel]
            star = self.nearest_radius(t_sel, z_sel, z2)
            pos = np.searchsorted(radii, star)
            best = out[sel]
            for k in (pos - 1, pos):
                k = np.clip(k, 0, radii.size - 1)
                best = np.minimum(best, comparison_distance(t_sel, radii[k], self.half_sin[z_sel, z2]))
            out[sel] = best
            if vertex_pts.any():
                out[vertex_pts] = np.minimum(out[vertex_pts], radii[0])
        return out if cap is None else np.minimum(out, cap)

    def diameter(self, idx) -> float:
        idx = np.unique(np.asarray(idx, dtype=np.int64))
        if idx.size <= 1:
            return 0.0
        has_vertex = idx[0] == 0
        rest = idx[1:] if has_vertex else idx
        if rest.size == 0:
            return 0.0
        z = self._zvals[rest]
        t = self._tvals[rest]
        rays = np.unique(z)
        tmin = np.full(self.base.n, np.inf)
        tmax = np.full(self.base.n, -np.inf)
        np.minimum.at(tmin, z, t)
        np.maximum.at(tmax, z, t)
        lo, hi = tmin[rays], tmax[rays]
        best = float(np.max(hi - lo))
        if has_vertex:
            best = max(best, float(hi.max()))
        if rays.size > 1:
            # f(t) = sinh^2((t-t')/2) + sinh t sinh t' s^2 is convex in each radius,
            # so a pair of rays attains its maximum at extreme radii
            S = self.half_sin[np.ix_(rays, rays)]
            for a in (lo, hi):
                for b in (lo, hi):
                    best = max(best, float(np.max(comparison_distance(a[:, None], b[None, :], S))))
        return best

    def gromov_at_vertex(self, i, j):
        return 0.5 * (self._tvals[i] + self._tvals[j] - self.dist(i, j))

    def spec(self) -> dict:
        return {"kind": "cone", "base": self.base.spec(), "radii": self.radii.tolist()}


def cone_distance(cone: HyperbolicCone, p, q) -> float:
    """Distance between cone points given as ``(z, t)`` pairs."""
    (z, t), (z2, t2) = p, q
    if t < 0 or t2 < 0:
        raise ValueError("cone radii must be nonnegative")
    return float(cone.distance(z, t, z2, t2))


class ConvergenceError(RuntimeError):
    pass


def cone_gromov_limit(cone: HyperbolicCone, z: int, z2: int, t_max: float = 60.0, tol: float = 1e-9,
                      step: float = 1.0) -> float:
    """Boundary Gromov product ``(z|z')_o`` as the limit of ``(x_t|x'_t)_o`` along radial rays."""
    if z == z2:
        raise ValueError("boundary Gromov product needs distinct points")
    s = cone.half_sin[z, z2]
    prev = None
    t = step
    while t <= t_max + 1e-12:
        cur = float(t - 0.5 * comparison_distance(t, t, s))
        if prev is not None and abs(cur - prev) < tol:
            return cur
        prev = cur
        t += step
    raise ConvergenceError(f"no convergence by t={t_max}; last increment {abs(cur - prev) if prev else 'n/a'}")


def gromov_limits(cone: HyperbolicCone, t_max: float = 60.0, tol: float = 1e-9) -> np.ndarray:
    """Matrix of converged boundary Gromov products (diagonal set to ``inf``)."""
    n = cone.base.n
    out = np.full((n, n), np.inf)
    iu = np.triu_indices(n, 1)
    s = cone.half_sin[iu]
    done = np.zeros(s.size, dtype=bool)
    vals = np.zeros(s.size)
    prev = None
    t = 1.0
    while t <= t_max + 1e-12 and not done.all():
        cur = t - 0.5 * comparison_distance(t, t, s)
        if prev is not None:
            newly = (~done) & (np.abs(cur - prev) < tol)
            vals[newly] = cur[newly]
            done |= newly
        prev = cur
        t += 1.0
    if not done.all():
        raise ConvergenceError(f"{int((~done).sum())} base pairs did not converge by t={t_max}")
    out[iu] = vals
    out[(iu[1], iu[0])] = vals
    return out


@dataclass(frozen=True)
class ConeConstants:
    delta: float
    c0: float
    c: float
    delta_config: float = DELTA_H2

    def to_json(self) -> dict:
        return {"delta": self.delta, "c0": self.c0, "c": self.c, "deltaConfig": self.delta_config}


def measure_c0(cone: HyperbolicCone, limits: np.ndarray | None = None) -> float:
    if cone.base.n < 2:
        raise ValueError("visual constant needs at least two base points")
    limits = gromov_limits(cone) if limits is None else limits
    iu = np.triu_indices(cone.base.n, 1)
    return float(np.max(np.abs(limits[iu] + np.log(cone.base.matrix[iu]))))


def measure_constants(cone: HyperbolicCone, delta_config: float = DELTA_H2,
                      measure_delta: bool = True) -> ConeConstants:
    delta = hyperbolicity_delta(cone, base=cone.vertex).delta if measure_delta else float("nan")
    c0 = measure_c0(cone)
    return ConeConstants(delta=delta, c0=c0, c=c0 + 2.0 * delta_config, delta_config=delta_config)
