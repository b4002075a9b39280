"""From coverings of a cone to coverings of ``Z x [0, 1]^n``.

A covering of ``Co Z`` with Lebesgue number ``L`` and mesh ``M`` is read far out, on
the annulus ``r <= t <= r + M / eps``: members meeting it are pulled back to
``Z x [r, r + M/eps]`` and the radial axis is shrunk by ``eps tau / M``.  Far out
the rays separate, so the base factor of each pulled-back member is tiny while the
axis keeps a fixed fraction ``L / M`` of its extent.  The result is a
``(delta(eps) tau, eps tau)``-covering of ``Z x [0, tau]``.

:func:`cube_assembly` then tiles ``[0, 1]^n`` into ``m^n`` cells, covers cells of
parity class ``s`` at ``eps_s`` (``eps_{s+1} = delta(eps_s) / 2``) and merges the
classes with the colored union, giving a ``(c/m, C/m)``-covering with ``c, C``
independent of ``m``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..cone import HyperbolicCone
from ..covering import (TOL, ColoredCovering, CoveringError, box_lebesgue_check, box_mesh, covering_metrics,
                        pointwise_lebesgue, union_colored)
from ..metric import LineSpace, ProductSpace
from .strips import MARGIN, interval_members


class RayIntervalCover:
    """Two-colored covering of a cone sample by radial intervals on each ray.

    Intervals ``(j u, (j + 2) u)`` with ``u = 2L(1 + margin)`` give every point an
    interval reaching ``L`` radially on both sides; the mesh stays below ``M = 2u``.
    Points of other rays must be at least ``L`` away, which holds far from the vertex
    and is checked on every sample.
    """

    def __init__(self, L: float):
        self.L = float(L)
        self.unit = 2 * self.L * (1 + MARGIN) + 8 * TOL
        self.M = 2 * self.unit

    def cover(self, cone: HyperbolicCone) -> ColoredCovering:
        line = LineSpace(cone.radii)
        members, colors = interval_members(line, self.unit)
        out_m, out_c = [], []
        for z in range(cone.base.n):
            for m, col in zip(members, colors):
                out_m.append(cone.point(z, 0) + m)
                out_c.append(col)
        target = np.arange(1, cone.n)
        return ColoredCovering(cone, target, out_m, out_c, 2, {"construction": "ray-intervals", "unit": self.unit})


@dataclass
class LiftResult:
    covering: ColoredCovering         # on base x axis, axis in local coordinates
    target: np.ndarray
    eps: float
    tau: float
    r: float
    L: float
    M: float
    lebesgue: float
    mesh: float
    claims: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.lebesgue / self.tau

    @property
    def log_delta0(self) -> float:
        """``log(c1' eps exp(-M / eps))`` with ``c1' = exp(-L/4 - 5M/2 - 2c)``."""
        return self.claims["log_c1"] + math.log(self.eps) - self.M / self.eps


def annulus_lift(base, ray_cover, c: float, eps: float, tau: float, axis: np.ndarray,
                 delta_config: float = 1.0) -> LiftResult:
    """``(delta tau, eps tau, 2)``-covering of ``base x [0, tau]`` pulled back from the cone.

    ``axis`` is the sorted local grid of the interval factor; it must contain ``[0, tau]``
    and may overhang it, since members are open subsets of ``base x R``.  The cone is
    sampled exactly at the radii ``r + x M / (eps tau)``, ``x`` in ``axis``.
    """
    L, M = ray_cover.L, ray_cover.M
    if L <= 8 * delta_config:
        raise CoveringError("the lift needs L > 8 delta")
    if not (0 < eps < 1 and 0 < tau < 1):
        raise CoveringError("eps and tau must lie in (0, 1)")
    axis = np.asarray(axis, dtype=float)
    if axis.min() > TOL or axis.max() < tau - TOL:
        raise CoveringError("axis grid must contain [0, tau]")
    r = -math.log(eps * tau) + 2.5 * M + c
    stretch = M / (eps * tau)
    # members reach at most eps tau past the annulus; sample the cone on that window only
    win = np.flatnonzero((axis >= -2 * eps * tau - TOL) & (axis <= tau + 2 * eps * tau + TOL))
    radii = r + axis[win] * stretch
    if radii.min() <= 0:
        raise CoveringError("axis overhang reaches the vertex")
    cone = HyperbolicCone(base, radii)
    cone_cov = ray_cover.cover(cone)
    cm = covering_metrics(cone_cov, cap=2 * L)
    if cm.mesh > M + TOL or cm.lebesgue < L - TOL:
        raise CoveringError(f"cone covering is not an (L, M)-covering: L={cm.lebesgue}, mesh={cm.mesh}")
    t = cone.t_of(np.arange(cone.n))
    annulus = (t >= r - TOL) & (t <= r + M / eps + TOL)
    members, colors = [], []
    for m, col in zip(cone_cov.members, cone_cov.colors):
        if annulus[m].any():
            members.append(m - 1)             # (z, k) -> product index z R + k
            colors.append(col)
    pre = ProductSpace([base, LineSpace(radii - r)])
    target = np.flatnonzero(annulus[1:])
    lifted = ColoredCovering(pre, target, members, colors, 2, {"construction": "annulus-lift"})
    # bounds transferred from the cone: mesh^x <= (eps tau, M), L^x >= (exp(-(r + M/eps) - L/4 - c), L/2)
    pre_mesh = box_mesh(lifted)
    log_z = -(r + M / eps) - L / 4 - c
    claims = {
        "mesh_ok": bool(pre_mesh <= (eps * tau, M)),
        "lebesgue_ok": bool(box_lebesgue_check(lifted, (math.exp(log_z), L / 2)).all()),
        "log_lebesgue_base": log_z,
        "log_c1": -L / 4 - 2.5 * M - 2 * c,
    }
    if not (claims["mesh_ok"] and claims["lebesgue_ok"]):
        raise CoveringError(f"lifted covering misses its transferred bounds: {claims}")
    # the homothety with coefficient eps tau / M, written into the full local grid
    space = ProductSpace([base, LineSpace(axis)])

    def widen(idx):
        z, k = pre.coords(idx)
        return space.index([z, win[k]])

    cov = ColoredCovering(space, widen(target), [widen(u) for u in lifted.members], colors, 2,
                          {"construction": "annulus-lift", "eps": eps, "tau": tau})
    target = cov.target
    pad = min(-axis.min(), axis.max() - tau)
    leb = float(pointwise_lebesgue(cov, cap=max(pad, TOL)).min())
    mesh = max(space.diameter(u) for u in cov.members)
    return LiftResult(cov, target, eps, tau, r, L, M, leb, mesh, claims)


@dataclass
class DeltaTable:
    """``delta(eps)`` at the points of a schedule: measured lift ratios capped by ``L eps / 2M``."""

    eps: list = field(default_factory=list)
    measured: list = field(default_factory=list)
    linear: list = field(default_factory=list)
    log_delta0: list = field(default_factory=list)

    def __call__(self, eps: float) -> float:
        for e, m, lin in zip(self.eps, self.measured, self.linear):
            if abs(e - eps) <= 1e-12 * max(1.0, eps):
                return min(m, lin)
        raise KeyError(f"delta not tabulated at eps={eps}")

    def to_json(self) -> dict:
        return {"eps": self.eps, "measured": self.measured, "linear": self.linear, "logDelta0": self.log_delta0}


def cell_axis(K: int, m: int, pad_points: int) -> np.ndarray:
    """Local grid of one cell: ``K`` steps of ``1 / (K m)`` with ``pad_points`` on each side."""
    return np.arange(-pad_points, K + pad_points + 1) / (K * m)


def pad_points_for(K: int, eps0: float) -> int:
    """Enough overhang for members of mesh ``eps0 / m`` plus their Lebesgue reach."""
    return int(math.ceil(2 * eps0 * K)) + 1


def build_schedule(base, ray_cover, c: float, ms, n: int = 1, K: int = 32, eps0: float = 0.25):
    """``eps_0 = eps0``, ``eps_{s+1} = delta(eps_s) / 2`` for ``s < 2^n - 1``; lifts are cached."""
    if n != 1:
        raise CoveringError("annulus lifts are implemented for one cone factor")
    table = DeltaTable()
    lifts = {}
    eps = eps0
    schedule = [eps]
    P = pad_points_for(K, eps0)
    for s in range(2 ** n):
        ratios = []
        for m in ms:
            res = annulus_lift(base, ray_cover, c, eps, 1.0 / m, cell_axis(K, m, P))
            lifts[(s, m)] = res
            ratios.append(res.delta)
        table.eps.append(eps)
        table.measured.append(min(ratios))
        table.linear.append(ray_cover.L * eps / (2 * ray_cover.M))
        table.log_delta0.append(lifts[(s, ms[0])].log_delta0)
        if s < 2 ** n - 1:
            eps = table(eps) / 2
            schedule.append(eps)
    return schedule, table, lifts


@dataclass
class CubeResult:
    covering: ColoredCovering
    m: int
    n: int
    c: float
    C: float
    schedule: list
    metrics: object = None
    meta: dict = field(default_factory=dict)

    def passes(self) -> bool:
        mt = self.metrics
        return (mt.lebesgue >= self.c / self.m - TOL and mt.mesh <= self.C / self.m + TOL
                and mt.multiplicity <= self.covering.color_count)


def parity_scale(l) -> int:
    return sum((int(v) % 2) << j for j, v in enumerate(l))


def cube_assembly(base, m: int, n: int, cell_cover, schedule, delta, K: int = 32, measure: bool = True) -> CubeResult:
    """Tile ``[0, 1]^n`` into ``m^n`` cells and merge their coverings class by class.

    ``cell_cover(s)`` returns the covering of ``base x [0, 1/m]^n`` for parity class
    ``s`` on the local grid ``cell_axis(K, m, P)`` in every axis (``P`` from
    :func:`pad_points_for`); the same covering is translated to every cell of the class.
    """
    eps0 = schedule[0]
    P = pad_points_for(K, eps0)
    g = np.arange(-P, K * m + P + 1) / (K * m)
    space = ProductSpace([base] + [LineSpace(g)] * n)
    local_len = K + 2 * P + 1
    classes = []
    for s in range(2 ** n):
        local = cell_cover(s)
        lsp = local.space
        if lsp.shape != (base.n,) + (local_len,) * n:
            raise CoveringError("cell covering lives on the wrong local grid")
        members, colors, targets = [], [], []
        for cell in itertools.product(range(m), repeat=n):
            if parity_scale(cell) != s:
                continue
            shift = [0] + [K * l for l in cell]

            def move(idx, shift=shift):
                co = lsp.coords(idx)
                return np.sort(space.index([co[0]] + [co[f] + shift[f] for f in range(1, n + 1)]))

            members.extend(move(u) for u in local.members)
            colors.extend(local.colors)
            targets.append(move(local.target))
        tgt = np.unique(np.concatenate(targets)) if targets else np.zeros(0, np.int64)
        U = ColoredCovering(space, tgt, members, colors, local.color_count, {"class": s})
        if U.color_clash() is not None:
            raise CoveringError(f"class {s}: cells of one class overlap in a color")
        classes.append(U)
    W = classes[0]
    cap = eps0 / m
    for s in range(1, len(classes)):
        W = union_colored(W, classes[s], cap=cap)
    c = delta(schedule[-1])
    res = CubeResult(W, m, n, c, eps0, list(schedule), meta={"K": K, "pad": P})
    if measure:
        res.metrics = covering_metrics(W, cap=2 * cap)
    return res


def lower_chain(base, L: float, c: float, ms=(8, 16, 32), K: int = 32, eps0: float = 0.25) -> dict:
    """Lift then assemble for every ``m``; returns per-``m`` results and the shared constants."""
    cover = RayIntervalCover(L)
    schedule, table, lifts = build_schedule(base, cover, c, list(ms), 1, K, eps0)
    out = {}
    for m in ms:
        res = cube_assembly(base, m, 1, lambda s, m=m: lifts[(s, m)].covering, schedule, table, K)
        out[m] = res
    return {"results": out, "schedule": schedule, "table": table, "M": cover.M, "L": L}
