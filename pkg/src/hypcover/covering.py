"""Colored coverings of finite spaces and their mesh, Lebesgue and multiplicity numbers.

Members are sorted ``int64`` index arrays into the ambient space; every subset of a
finite space is open, and openness is honored through the radius conventions:
positive neighborhoods are open (strict), negative ones remove a *closed*
neighborhood of the complement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .metric import TOL, FiniteMetricSpace, LineSpace, ProductSpace, within_closed, within_open


class CoveringError(ValueError):
    pass


def as_index_set(points: Iterable[int]) -> np.ndarray:
    return np.unique(np.asarray(list(points) if not isinstance(points, np.ndarray) else points,
                                dtype=np.int64))


def isin_sorted(values: np.ndarray, sorted_arr: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if sorted_arr.size == 0:
        return np.zeros(values.shape, dtype=bool)
    pos = np.minimum(np.searchsorted(sorted_arr, values), sorted_arr.size - 1)
    return sorted_arr[pos] == values


@dataclass
class ColoredCovering:
    """A family of point subsets, each with a color in ``range(color_count)``.

    ``target`` is the set the family must cover; members may stick out of it into
    the ambient ``space``.
    """

    space: object
    target: np.ndarray
    members: list
    colors: list
    color_count: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.target = as_index_set(self.target)
        self.members = [as_index_set(m) for m in self.members]
        self.colors = [int(c) for c in self.colors]
        if len(self.colors) != len(self.members):
            raise CoveringError("one color per member required")
        self._csr = None

    @classmethod
    def build(cls, space, target, members, colors, color_count=None, check=True, **meta):
        colors = list(colors)
        m = color_count if color_count is not None else (max(colors) + 1 if colors else 1)
        cov = cls(space, target, members, colors, m, dict(meta))
        if check:
            cov.validate()
        return cov

    def __len__(self):
        return len(self.members)

    def validate(self) -> None:
        if any(m.size == 0 for m in self.members):
            raise CoveringError("empty member")
        if any(not (0 <= c < self.color_count) for c in self.colors):
            raise CoveringError("color out of range")
        for m in self.members:
            if m[0] < 0 or m[-1] >= self.space.n:
                raise CoveringError("member point out of range")
        missing = self.uncovered()
        if missing.size:
            raise CoveringError(f"{missing.size} target points uncovered, e.g. {int(missing[0])}")
        clash = self.color_clash()
        if clash is not None:
            raise CoveringError(f"members {clash[0]} and {clash[1]} share color and point {clash[2]}")

    def point_members(self):
        """CSR map point -> member ids: ``(indptr, ids)``."""
        if self._csr is None:
            n = self.space.n
            if self.members:
                pts = np.concatenate(self.members)
                ids = np.repeat(np.arange(len(self.members)), [m.size for m in self.members])
            else:
                pts = np.zeros(0, dtype=np.int64)
                ids = np.zeros(0, dtype=np.int64)
            order = np.argsort(pts, kind="stable")
            counts = np.bincount(pts, minlength=n)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            self._csr = (indptr, ids[order])
        return self._csr

    def members_at(self, z: int) -> np.ndarray:
        indptr, ids = self.point_members()
        return ids[indptr[z]:indptr[z + 1]]

    def counts(self) -> np.ndarray:
        indptr, _ = self.point_members()
        return np.diff(indptr)

    def uncovered(self) -> np.ndarray:
        c = self.counts()
        return self.target[c[self.target] == 0]

    def color_clash(self):
        """First ``(member, member, point)`` witness of two same-colored members meeting."""
        indptr, ids = self.point_members()
        cols = np.asarray(self.colors, dtype=np.int64)
        counts = np.diff(indptr)
        for z in np.flatnonzero(counts > 1):
            here = ids[indptr[z]:indptr[z + 1]]
            c = cols[here]
            order = np.argsort(c, kind="stable")
            dup = np.flatnonzero(np.diff(c[order]) == 0)
            if dup.size:
                a, b = sorted((int(here[order[dup[0]]]), int(here[order[dup[0] + 1]])))
                return a, b, int(z)
        return None

    def with_color_count(self, m: int) -> "ColoredCovering":
        if m < self.color_count:
            raise CoveringError("cannot drop color classes")
        return ColoredCovering(self.space, self.target, self.members, self.colors, m, dict(self.meta))

    def restricted_to(self, target) -> "ColoredCovering":
        """Same members, smaller target; members missing ``target`` are dropped."""
        target = as_index_set(target)
        indptr, ids = self.point_members()
        hit = np.zeros(len(self.members), dtype=bool)
        if target.size:
            # member ids listed at the target points, read off the CSR map in one pass
            starts, stops = indptr[target], indptr[target + 1]
            sel = np.repeat(starts - np.cumsum(np.r_[0, (stops - starts)[:-1]]), stops - starts)
            hit[ids[np.arange(sel.size) + sel]] = True
        keep = np.flatnonzero(hit).tolist()
        return ColoredCovering(self.space, target, [self.members[i] for i in keep],
                               [self.colors[i] for i in keep], self.color_count, dict(self.meta))

    def on_space(self, space) -> "ColoredCovering":
        """Reinterpret the same index sets in another space with identical indexing."""
        if space.n != self.space.n:
            raise CoveringError("spaces differ in size")
        return ColoredCovering(space, self.target, self.members, self.colors, self.color_count, dict(self.meta))


@dataclass(frozen=True)
class CoveringMetrics:
    mesh: float
    lebesgue: float
    multiplicity: int
    pointwise_lebesgue: np.ndarray
    cap: float | None = None


@dataclass(frozen=True)
class BoxBound:
    radii: tuple
    kind: str = "mesh"

    def __post_init__(self):
        if any(r < 0 for r in self.radii):
            raise ValueError("box radii must be nonnegative")

    def __ge__(self, other):
        return all(a >= b - TOL for a, b in zip(self.radii, _radii(other)))

    def __le__(self, other):
        return all(a <= b + TOL for a, b in zip(self.radii, _radii(other)))

    def scaled(self, s) -> "BoxBound":
        s = np.broadcast_to(np.asarray(s, dtype=float), (len(self.radii),))
        return BoxBound(tuple(float(a * b) for a, b in zip(self.radii, s)), self.kind)


def _radii(b):
    return b.radii if isinstance(b, BoxBound) else tuple(b)


# -- neighborhoods -------------------------------------------------------------

def _closed_shrink(space, subset: np.ndarray, ball) -> np.ndarray:
    """Points of ``subset`` whose closed ball (given by ``ball(i)``) lies in ``subset``."""
    keep = np.zeros(subset.size, dtype=bool)
    for k, u in enumerate(subset):
        keep[k] = isin_sorted(ball(int(u)), subset).all()
    return subset[keep]


def _factor_reach(product: ProductSpace, f: int, proj: np.ndarray, reach: float) -> np.ndarray:
    """Indices of factor ``f`` within scaled distance ``reach`` of ``proj``."""
    fac = product.factors[f]
    if math.isinf(reach):
        return np.arange(fac.n)
    r = reach / product.scales[f]
    if isinstance(fac, LineSpace):
        xs = fac._sorted
        keep = np.zeros(fac.n, dtype=bool)
        for x in fac.coords[proj]:
            lo = np.searchsorted(xs, x - r - TOL, side="left")
            hi = np.searchsorted(xs, x + r + TOL, side="right")
            keep[fac._order[lo:hi]] = True
        return np.flatnonzero(keep)
    keep = np.zeros(fac.n, dtype=bool)
    for start in range(0, proj.size, 256):
        keep |= (fac.rows(proj[start:start + 256]) <= r + TOL).any(axis=0)
    return np.flatnonzero(keep)


def _factor_nearest(product: ProductSpace) -> list:
    """Per factor, scaled distance from each point to the nearest other point (``inf`` if alone)."""
    out = []
    for f, fac in enumerate(product.factors):
        if fac.n == 1:
            out.append(np.array([math.inf]))
        elif isinstance(fac, LineSpace):
            gaps = np.diff(fac._sorted)
            nn = np.minimum(np.r_[np.inf, gaps], np.r_[gaps, np.inf])
            res = np.empty(fac.n)
            res[fac._order] = nn
            out.append(product.scales[f] * res)
        else:
            D = np.array(fac.rows(np.arange(fac.n)), dtype=float)
            np.fill_diagonal(D, np.inf)
            out.append(product.scales[f] * D.min(axis=1))
    return out


def _minmax_field(product: ProductSpace, member: np.ndarray, offsets, reach, over_complement: bool = True):
    """``F(z) = min over sources w of max_f (scale_f d_f(z_f, w_f) - offsets[f])``.

    Sources are the complement of ``member`` (or ``member`` itself) inside the local
    grid of points within ``reach[f]`` of the member's projections.  The min-max is
    separable, so it is computed one factor at a time.  Returns the flat indices of the
    local grid and ``F`` on it (``+inf`` where no source exists).
    """
    coords = product.coords(member)
    subs = [_factor_reach(product, f, np.unique(coords[f]), float(reach[f])) for f in range(product.k)]
    shape = tuple(s.size for s in subs)
    grids = np.meshgrid(*subs, indexing="ij")
    flat = product.index([g.ravel() for g in grids])
    inside = isin_sorted(flat, member).reshape(shape)
    source = ~inside if over_complement else inside
    F = np.where(source, -np.inf, np.inf)
    for f in range(product.k):
        off = float(offsets[f])
        sub = subs[f]
        if math.isinf(off):
            # the factor imposes no constraint: sources anywhere along the fibre count
            F = np.minimum.reduce(F, axis=f, keepdims=True) * np.ones_like(F)
            continue
        G = product.scales[f] * product.factors[f].rows(sub)[:, sub] - off
        moved = np.moveaxis(F, f, -1)
        flatF = moved.reshape(-1, sub.size)
        out = np.empty_like(flatF)
        step = max(1, int(4_000_000 // max(1, sub.size * sub.size)))
        for a in range(0, flatF.shape[0], step):
            out[a:a + step] = np.maximum(G[None, :, :], flatF[a:a + step, None, :]).min(axis=2)
        F = np.moveaxis(out.reshape(moved.shape), -1, f)
    return flat, F.ravel()


def neighborhood(space, subset, r: float) -> np.ndarray:
    """Signed-radius neighborhood.

    ``r > 0``: open ``r``-neighborhood; ``r = 0``: the subset itself; ``r < 0``: the
    complement of the closed ``|r|``-neighborhood of the complement.
    """
    subset = as_index_set(subset)
    if r == 0 or subset.size == 0 and r < 0:
        return subset
    if isinstance(space, FiniteMetricSpace):
        M = space.matrix
        if r > 0:
            if subset.size == 0:
                return subset
            return np.flatnonzero(within_open(M[subset], r).any(axis=0))
        comp = np.setdiff1d(np.arange(space.n), subset)
        if comp.size == 0:
            return subset
        near = within_closed(M[np.ix_(subset, comp)], -r).any(axis=1)
        return subset[~near]
    if hasattr(space, "set_distance"):
        # distances beyond 2|r| are irrelevant, and only a radial window can be that close
        reach = 2.0 * abs(r) + TOL
        ts = space.t_of(subset)
        window = space.radial_window(float(ts.min()) - reach, float(ts.max()) + reach)
        if r > 0:
            d = space.set_distance(subset, window, cap=reach)
            return window[within_open(d, r)]
        comp = np.setdiff1d(window, subset, assume_unique=True)
        d = space.set_distance(comp, subset, cap=reach)
        return subset[~within_closed(d, -r)]
    if isinstance(space, ProductSpace):
        # balls of an l-infinity product are boxes with equal radii
        return box_neighborhood(space, subset, [r] * space.k)
    if r > 0:
        parts = [space.ball(int(u), r, closed=False) for u in subset]
        return np.unique(np.concatenate(parts)) if parts else subset
    return _closed_shrink(space, subset, lambda u: space.ball(u, -r, closed=True))


def box_neighborhood(product: ProductSpace, subset, radii) -> np.ndarray:
    """Box neighborhood ``B_(r1, ..., rk)`` on an l-infinity product."""
    subset = as_index_set(subset)
    radii = [float(r) for r in radii]
    if len(radii) != product.k:
        raise CoveringError("one radius per factor required")
    if all(r == 0 for r in radii):
        return subset
    if all(r > 0 for r in radii):
        if subset.size == 0:
            return subset
        flat, F = _minmax_field(product, subset, [r - TOL for r in radii], radii, over_complement=False)
        return np.unique(flat[F < 0])
    if all(r < 0 for r in radii):
        pos = [-r for r in radii]
        if subset.size == 0:
            return subset
        flat, F = _minmax_field(product, subset, [r + TOL for r in pos], [r + TOL for r in pos])
        keep = isin_sorted(flat, subset) & (F > 0)
        return np.unique(flat[keep])
    raise CoveringError("box radii must be all positive or all negative")


# -- metrics ---------------------------------------------------------------------

def pointwise_lebesgue(cov: ColoredCovering, points=None, cap: float | None = None, space=None) -> np.ndarray:
    """``L(U, z) = max over members U of dist(z, Z \\ U)`` for each requested point."""
    space = cov.space if space is None else space
    points = cov.target if points is None else as_index_set(points)
    out = np.zeros(points.size)
    if isinstance(space, FiniteMetricSpace):
        M = space.matrix
        pos = {int(p): k for k, p in enumerate(points)}
        allpts = np.arange(space.n)
        for m in cov.members:
            sel = m[isin_sorted(m, points)]
            if sel.size == 0:
                continue
            comp = np.setdiff1d(allpts, m, assume_unique=True)
            d = np.full(sel.size, np.inf) if comp.size == 0 else M[np.ix_(sel, comp)].min(axis=1)
            if cap is not None:
                d = np.minimum(d, cap)
            idx = np.fromiter((pos[int(p)] for p in sel), dtype=np.int64, count=sel.size)
            out[idx] = np.maximum(out[idx], d)
        return out
    if hasattr(space, "set_distance"):
        allpts = np.arange(space.n)
        for m in cov.members:
            sel = isin_sorted(points, m)
            if not sel.any():
                continue
            if cap is None:
                comp = np.setdiff1d(allpts, m, assume_unique=True)
            else:
                # points further than cap radially cannot matter
                tm = space.t_of(m)
                comp = np.setdiff1d(space.radial_window(float(tm.min()) - cap, float(tm.max()) + cap), m)
            d = space.set_distance(comp, points[sel], cap=cap)
            out[sel] = np.maximum(out[sel], d)
        return out
    if isinstance(space, ProductSpace):
        reach = [math.inf if cap is None else cap] * space.k
        nn = None
        for m in cov.members:
            if m.size == space.n:
                flat, val = m, np.full(m.size, math.inf)
            elif m.size == 1:
                # a singleton's nearest outside point differs from it in one factor only
                if nn is None:
                    nn = _factor_nearest(space)
                c = space.coords(m)
                flat = m
                val = np.array([min(float(nn[f][c[f][0]]) for f in range(space.k))])
            else:
                flat, val = _minmax_field(space, m, [0.0] * space.k, reach)
                hit = isin_sorted(flat, m)
                flat, val = flat[hit], val[hit]
            if cap is not None:
                val = np.minimum(val, cap)
            pos = np.searchsorted(points, flat)
            ok = pos < points.size
            ok[ok] = points[pos[ok]] == flat[ok]
            if ok.any():
                pos = pos[ok]
                out[pos] = np.maximum(out[pos], val[ok])
        return out
    for k, z in enumerate(points):
        best = 0.0
        for mid in cov.members_at(int(z)):
            d = space.dist_to_complement(int(z), cov.members[mid], cap)
            if d > best:
                best = d
                if math.isinf(best):
                    break
        out[k] = best
    return out


def covering_metrics(cov: ColoredCovering, cap: float | None = None) -> CoveringMetrics:
    """Mesh, Lebesgue number (over the target) and multiplicity.

    With ``cap`` set, pointwise Lebesgue numbers are clipped at ``cap``, which keeps
    the search local on large structured spaces.
    """
    missing = cov.uncovered()
    if missing.size:
        raise CoveringError(f"target point {int(missing[0])} uncovered")
    mesh = max((cov.space.diameter(m) for m in cov.members), default=0.0)
    pw = pointwise_lebesgue(cov, cap=cap)
    leb = float(pw.min()) if pw.size else math.inf
    mult = int(cov.counts().max()) if cov.members else 0
    return CoveringMetrics(mesh=float(mesh), lebesgue=leb, multiplicity=mult, pointwise_lebesgue=pw, cap=cap)


def _minimax_radius(factor, pts: np.ndarray) -> float:
    """Radius of the smallest closed ball centered at a point of ``factor`` containing ``pts``."""
    if pts.size <= 1:
        return 0.0
    coords = getattr(factor, "coords", None)
    if coords is not None and getattr(factor, "_sorted", None) is not None:
        lo, hi = coords[pts].min(), coords[pts].max()
        mid = 0.5 * (lo + hi)
        s = factor._sorted
        k = int(np.searchsorted(s, mid))
        best = math.inf
        for j in (k - 1, k):
            if 0 <= j < s.size:
                best = min(best, max(abs(s[j] - lo), abs(hi - s[j])))
        return float(best)
    rows = factor.rows(np.arange(factor.n))[:, pts]
    return float(rows.max(axis=1).min())


def member_box_radii(product: ProductSpace, member: np.ndarray) -> np.ndarray:
    c = product.coords(member)
    return np.array([product.scales[f] * _minimax_radius(product.factors[f], np.unique(c[f]))
                     for f in range(product.k)])


def box_mesh(cov: ColoredCovering) -> BoxBound:
    """Smallest per-factor radii ``(p, q, ...)`` with every member inside a closed box."""
    product = cov.space
    if not isinstance(product, ProductSpace):
        raise CoveringError("box_mesh needs a product space")
    best = np.zeros(product.k)
    for m in cov.members:
        best = np.maximum(best, member_box_radii(product, m))
    return BoxBound(tuple(float(x) for x in best), "mesh")


def box_lebesgue_check(cov: ColoredCovering, radii, points=None) -> np.ndarray:
    """Per target point: is the closed box of the given radii inside some member?"""
    product = cov.space
    if not isinstance(product, ProductSpace):
        raise CoveringError("box_lebesgue_check needs a product space")
    radii = [float(r) for r in _radii(radii)]
    points = cov.target if points is None else as_index_set(points)
    out = np.zeros(points.size, dtype=bool)
    zero = all(r == 0 for r in radii)
    reach = [r + TOL for r in radii]
    for m in cov.members:
        sel = isin_sorted(points, m) & ~out
        if not sel.any():
            continue
        if zero or m.size == product.n:
            out |= sel
            continue
        flat, F = _minmax_field(product, m, reach, reach)
        good = np.sort(flat[F > 0])
        out |= sel & isin_sorted(points, good)
    return out


def box_lebesgue_sup(cov: ColoredCovering, weights, points=None, cap: float | None = None) -> np.ndarray:
    """Pointwise sup of ``t`` with the *open* box ``t * weights`` inside a member.

    Equals the pointwise Lebesgue number in the product rescaled by ``1 / weights``;
    every closed box of radii ``(t - eps) * weights`` then fits.
    """
    product = cov.space
    w = np.asarray(_radii(weights), dtype=float)
    if np.any(w <= 0):
        raise CoveringError("weights must be positive")
    return pointwise_lebesgue(cov, points=points, cap=cap, space=product.rescaled(1.0 / w))


def closed_fit(t: float) -> float:
    """Radius just below ``t``: a closed ball of this radius sits inside the open ``t``-ball.

    The relative margin clears the absolute comparison tolerance at any grid scale
    used here.
    """
    if math.isinf(t):
        return t
    return max(t * (1.0 - 1e-6), 0.0)


# -- constructions -----------------------------------------------------------------

def shrink(cov: ColoredCovering, s: float) -> ColoredCovering:
    """Replace each member by ``B_{-s}(U)``; requires ``s < L(U)``."""
    if s <= 0:
        raise CoveringError("shrink radius must be positive")
    L = float(pointwise_lebesgue(cov, cap=2 * s + 1).min()) if cov.target.size else math.inf
    if not s < L - TOL:
        raise CoveringError(f"shrink radius {s} not below Lebesgue number {L}")
    members, colors = [], []
    for m, c in zip(cov.members, cov.colors):
        v = neighborhood(cov.space, m, -s)
        if v.size:
            members.append(v)
            colors.append(c)
    out = ColoredCovering(cov.space, cov.target, members, colors, cov.color_count, dict(cov.meta))
    if out.uncovered().size:
        raise CoveringError("shrunk family lost coverage")
    return out


def union_colored(U: ColoredCovering, V: ColoredCovering, cap: float | None = None) -> ColoredCovering:
    """Colored union: cover ``A u B`` from a covering ``U`` of ``A`` and ``V`` of ``B``.

    Each ``U`` member shrinks by ``L(U)/2``; a ``V`` member meeting a shrunk member of
    its own color is absorbed into it, the others are kept as they are.  Needs equal
    color counts and ``mesh(V) <= L(U)/2``.
    """
    if U.space is not V.space and U.space.key() != V.space.key():
        raise CoveringError("coverings live in different spaces")
    if U.color_count != V.color_count:
        raise CoveringError("color counts differ; pad with with_color_count")
    LU = float(pointwise_lebesgue(U, cap=cap).min()) if U.target.size else math.inf
    if not (math.isfinite(LU) and LU > 0):
        raise CoveringError(f"L(U) must be finite and positive, got {LU}")
    mesh_v = max((V.space.diameter(m) for m in V.members), default=0.0)
    if mesh_v > LU / 2 + TOL:
        raise CoveringError(f"mesh(V)={mesh_v} exceeds L(U)/2={LU / 2}")
    space = U.space
    shrunk = [neighborhood(space, m, -LU / 2) for m in U.members]
    # owner[p] = index of the shrunk U member of a given color containing p
    absorbed = [[] for _ in U.members]
    kept_v = []
    by_color: dict[int, np.ndarray] = {}
    for c in range(U.color_count):
        owner = np.full(space.n, -1, dtype=np.int64)
        for i, (m, col) in enumerate(zip(shrunk, U.colors)):
            if col == c and m.size:
                if np.any(owner[m] >= 0):
                    raise CoveringError("same-colored shrunk members overlap")
                owner[m] = i
        by_color[c] = owner
    for j, (v, col) in enumerate(zip(V.members, V.colors)):
        hits = np.unique(by_color[col][v])
        hits = hits[hits >= 0]
        if hits.size > 1:
            raise CoveringError(f"V member {j} meets {hits.size} same-colored shrunk members")
        if hits.size == 1:
            absorbed[int(hits[0])].append(v)
        else:
            kept_v.append(j)
    members, colors = [], []
    for i, m in enumerate(shrunk):
        w = np.unique(np.concatenate([m] + absorbed[i])) if absorbed[i] else m
        if w.size:
            members.append(w)
            colors.append(U.colors[i])
    for j in kept_v:
        members.append(V.members[j])
        colors.append(V.colors[j])
    target = np.union1d(U.target, V.target)
    out = ColoredCovering(space, target, members, colors, U.color_count)
    clash = out.color_clash()
    if clash is not None:
        raise CoveringError(f"union produced same-colored overlap {clash}")
    if out.uncovered().size:
        raise CoveringError("union lost coverage")
    return out
