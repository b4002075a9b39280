"""Bounded coverings of ``Co(Z1) x Co(Z2)`` with ``k + 3`` colors and large Lebesgue number.

The product of two cones splits along the radii ``(t1, t2)`` into four regions::

    P0(T) = [0, T] x [0, T]      P1(T) = [T, oo) x [0, T]
    P2(T) = [0, T] x [T, oo)     P3(T) = [T, oo) x [T, oo)

``P3`` is cut into blocks ``A_{m,n}`` at four scales ``i = m mod 2 + 2 (n mod 2)``, each
covered by the two-axes covering of ``Z1 x Z2 x R x R``; ``P1`` and ``P2`` use radial
blocks of one cone crossed with a ball of the other; ``P0`` is a single box around the
vertex.  Each stage runs at twice the mesh bound of the previous one, so the colored
union of the four coverings (coarsest first) keeps the Lebesgue number of ``P3``.

All constants come from :func:`plan_cascade`, which fixes them from formulas before any
sample is built; measured meshes and Lebesgue numbers are checked against them.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..cone import HyperbolicCone
from ..covering import TOL, BoxBound, ColoredCovering, CoveringError, box_lebesgue_check, box_mesh, pointwise_lebesgue, union_colored
from ..gluing import Piece, ScaleFamily, glue
from ..metric import FiniteMetricSpace, LineSpace, ProductSpace, make_product
from .cones import block_pieces, strip_sigma
from .constants import make_constants
from .strips import MARGIN, ProductStripOracle, cluster_threshold, single_linkage, two_axes_covering


# -- pair oracle ------------------------------------------------------------------------

class ClusterPairOracle:
    """Products of single-linkage clusters of ``Z1`` and ``Z2``: a one-colored covering of the pair."""

    def __init__(self, Z1, Z2):
        self.Z1, self.Z2 = Z1, Z2
        self.space = make_product([Z1, Z2])

    def cover(self, tau1: float, tau2: float) -> ColoredCovering:
        c1 = single_linkage(self.Z1, cluster_threshold(tau1))
        c2 = single_linkage(self.Z2, cluster_threshold(tau2))
        members = []
        for a in c1:
            for b in c2:
                g1, g2 = np.meshgrid(a, b, indexing="ij")
                members.append(np.sort(self.space.index([g1.ravel(), g2.ravel()])))
        return ColoredCovering(self.space, np.arange(self.space.n), members, [0] * len(members), 1,
                               {"construction": "cluster-pair", "tau": [tau1, tau2]})

    @property
    def k(self) -> int:
        return 0


def calibrate_two_axes(step: float = 0.25, extent: float = 24.0) -> tuple:
    """``(q, sigma)`` of the two-axes covering over a one-point pair, on a fine line grid."""
    pt = FiniteMetricSpace(np.zeros((1, 1)))
    pair = make_product([pt, pt])
    line = LineSpace(np.arange(0.0, extent, step))
    space = ProductSpace([pt, pt, line, line])
    whole = ColoredCovering(pair, np.arange(1), [np.arange(1)], [0], 1)
    res = two_axes_covering(space, whole, (1.0, 1.0), (1.0, 1.0))
    leb, mesh = res.lebesgue_box.radii, res.mesh_box.radii
    sigma = max(mesh[2] / leb[2], mesh[3] / leb[3])
    return res.q, sigma * (1 + MARGIN)


# -- constants --------------------------------------------------------------------------

@dataclass
class StagePlan:
    name: str
    L: float
    sigma: float
    H: float
    N: int
    T: float
    M: float
    rule: str

    def constants(self, c: float):
        return make_constants(self.L, self.sigma, c, self.rule, {"H": self.H})


@dataclass
class CascadePlan:
    c: float
    D: float
    gap: float
    L0: float
    q: float
    stages: dict
    T0: float
    T_star: float
    L_core: float
    core_radius: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "stages"}
        out["stages"] = {k: asdict(v) for k, v in self.stages.items()}
        return out


def _first_block(log_scale, limit: float, scales) -> int:
    """Smallest ``N >= max(scales)`` with every base scale of blocks ``m >= N`` below ``limit``."""
    N = max(scales)
    while any(log_scale(i, N) >= math.log(limit) for i in scales):
        N += 1
        if N > 100_000:
            raise CoveringError("no block start found")
    return N


def plan_cascade(Z1, Z2, L0: float, c: float, q: float, sigma_pair: float, sigma_strip: float,
                 overrides: dict | None = None) -> CascadePlan:
    """Stage constants for ``P3`` at ``L0``, ``P2`` at ``2 M3``, ``P1`` at ``2 M2`` and the core at ``2 M1``.

    Block starts are chosen so that every base scale is below the smallest base distance
    (times ``q`` for the pair), i.e. far enough out that members never join two rays.
    ``overrides`` may set ``H3``, ``H2`` or ``H1``.
    """
    overrides = dict(overrides or {})
    gaps = [float(np.min(Z.matrix[Z.matrix > 0])) if Z.n > 1 else math.inf for Z in (Z1, Z2)]
    gap = min(gaps)
    D = max(float(Z.matrix.max()) for Z in (Z1, Z2))
    stages = {}
    # P3
    k3 = make_constants(L0, sigma_pair, c, "two-axes", {"H": overrides["H3"]} if "H3" in overrides else None)
    N3 = _first_block(k3.base_scale_log, q * gap, range(4)) if math.isfinite(gap) else 3
    T3 = k3.H * N3
    M3 = 2 * (0.75 * k3.H + 2 * (k3.H + D + c))
    stages["P3"] = StagePlan("P3", L0, sigma_pair, k3.H, N3, T3, M3, "two-axes")
    # P2 then P1: one axis each
    T_prev = T3
    L = 2 * M3
    for name, key in (("P2", "H2"), ("P1", "H1")):
        kk = make_constants(L, sigma_strip, c, "single-axis", {"H": overrides[key]} if key in overrides else None)
        N = _first_block(kk.base_scale_log, gap, range(2)) if math.isfinite(gap) else 1
        T = max(T_prev, kk.H * N)
        M = 2 * max(0.75 * kk.H + 2 * (2 * kk.H + D + c), T + L)
        stages[name] = StagePlan(name, L, sigma_strip, kk.H, N, T, M, "single-axis")
        T_prev = T
        L = 2 * M
    T0, T_star = stages["P2"].T, stages["P1"].T
    return CascadePlan(c, D, gap, L0, q, stages, T0, T_star, L, T_star + 2 * L,
                       {"sigmaPair": sigma_pair, "sigmaStrip": sigma_strip, "overrides": overrides})


def miniature_radii(plan: CascadePlan, fine: int = 4, p3_blocks: int = 4, p3_per_block: int = 8) -> np.ndarray:
    """A sparse radial grid resolving the scale of each stage near where that stage starts."""
    s3, s2, s1 = plan.stages["P3"], plan.stages["P2"], plan.stages["P1"]
    pts = [s3.T / 2]
    pts += list(s3.T + s3.H * np.arange(p3_blocks * p3_per_block + 1) / p3_per_block)
    pts += list(s3.T + s3.L * np.arange(-fine, fine + 1) / 2)
    pts += list(plan.T0 + s2.H * np.arange(-1, 9) / 4)
    pts += [plan.T0 + s2.L * f for f in (0.5, 1.5)]
    pts += list(plan.T_star + s1.H * np.arange(-1, 5) / 2)
    pts += [plan.T_star + s1.L * f for f in (0.5, 1.5)]
    R0, Lc = plan.core_radius, plan.L_core
    pts += [R0 - Lc / 2, R0 + Lc / 2, R0 + 2 * Lc]
    r = np.unique(np.round(np.asarray(pts, dtype=float), 12))
    return r[r > 0]


# -- stages ---------------------------------------------------------------------------

@dataclass
class StageResult:
    name: str
    covering: ColoredCovering         # on the product of cones
    plan: StagePlan
    lebesgue: float
    mesh: float
    pieces: int
    claims: dict = field(default_factory=dict)

    def check(self) -> None:
        if self.lebesgue < self.plan.L - TOL:
            raise CoveringError(f"{self.name}: Lebesgue number {self.lebesgue} below {self.plan.L}")
        if self.mesh > self.plan.M + TOL:
            raise CoveringError(f"{self.name}: mesh {self.mesh} above {self.plan.M}")


def _blocks(radii: np.ndarray, H: float, start: int) -> list:
    """Block indices ``m >= start`` whose closed block ``[Hm, Hm + H]`` holds a radius."""
    ms = set()
    for r in radii:
        lo = math.ceil((r - TOL) / H - 1)
        hi = math.floor((r + TOL) / H)
        ms.update(range(max(lo, start), hi + 1))
    return sorted(ms)


def _radius_masks(X: ProductSpace):
    C1, C2 = X.factors
    a, b = X.coords(np.arange(X.n))
    return C1.t_of(a), C2.t_of(b)


def cover_P3(X: ProductSpace, plan: CascadePlan, oracle: ClusterPairOracle) -> StageResult:
    """Four-scale block covering of ``Z1 x Z2 x [T3, oo)^2`` pushed into the product of cones."""
    st = plan.stages["P3"]
    C1, C2 = X.factors
    if not np.array_equal(C1.radii, C2.radii):
        raise CoveringError("both cones must share one radial grid")
    radii = C1.radii
    consts = st.constants(plan.c)
    line = LineSpace(radii)
    Y = ProductSpace([C1.base, C2.base, line, line])
    _, _, k1, k2 = Y.coords(np.arange(Y.n))
    t1, t2 = radii[k1], radii[k2]
    ms = _blocks(radii, st.H, st.N)
    cache = {}
    pieces = []
    for m in ms:
        for n in ms:
            i = m % 2 + 2 * (n % 2)
            sel = ((t1 >= st.H * m - TOL) & (t1 <= st.H * (m + 1) + TOL)
                   & (t2 >= st.H * n - TOL) & (t2 <= st.H * (n + 1) + TOL))
            target = np.flatnonzero(sel)
            if target.size == 0:
                continue
            tau1, tau2 = consts.base_scale(i, m), consts.base_scale(i, n)
            R = consts.radial_scale(i)
            pair = oracle.cover(tau1 / plan.q, tau2 / plan.q)
            key = (i, tuple(tuple(u) for u in pair.members))
            if key not in cache:
                cache[key] = two_axes_covering(Y, pair, (tau1 / plan.q, tau2 / plan.q), (R / plan.q, R / plan.q),
                                               measure=False).covering
            cov = cache[key].restricted_to(target)
            leb = BoxBound((tau1, tau2, R, R), "lebesgue")
            pieces.append(Piece(target, cov, i, leb, box_mesh(cov)))
    W = glue(ScaleFamily(Y, pieces, 3 + oracle.k)).covering
    # before projecting: base boxes shrink like exp(-Hm) while the radial box stays at L
    log_base = -st.H * st.N + 1.5 * st.L + plan.c
    pre_ok = bool(box_lebesgue_check(W, (math.exp(log_base), math.exp(log_base), st.L, st.L)).all())
    if not pre_ok:
        raise CoveringError("P3: pre-projection Lebesgue bound fails")

    def project(idx):
        z1, z2, a, b = Y.coords(idx)
        return np.sort(X.index([C1.point(z1, a), C2.point(z2, b)]))

    r1, r2 = _radius_masks(X)
    target = np.flatnonzero((r1 >= st.T - TOL) & (r2 >= st.T - TOL))
    U = ColoredCovering(X, target, [project(u) for u in W.members], list(W.colors), W.color_count,
                        {"construction": "P3-blocks"}).restricted_to(target)
    return _measured("P3", U, st, len(pieces), {"preProjection": pre_ok, "blocks": len(ms)})


def cover_P1_P2(X: ProductSpace, plan: CascadePlan, axis: int) -> StageResult:
    """Radial blocks of cone ``axis`` crossed with the ball of radius ``T + L`` in the other cone.

    ``axis = 0`` covers ``P1(T*)``; ``axis = 1`` covers ``P2(T0)``.
    """
    name = "P1" if axis == 0 else "P2"
    st = plan.stages[name]
    C = X.factors[axis]
    other = X.factors[1 - axis]
    sigma = max(st.sigma, strip_sigma(C.base, st.constants(plan.c), range(st.N, st.N + 64)))
    if sigma > st.sigma:
        raise CoveringError(f"{name}: strip sigma {sigma} exceeds the planned {st.sigma}")
    consts = st.constants(plan.c)
    Y = ProductSpace([C.base, LineSpace(C.radii)])
    start = int(math.floor(st.T / st.H + TOL))
    blocks = _blocks(C.radii, st.H, max(start, st.N))
    # on a sparse grid minimax centers are sample points, so declare the measured mesh
    pieces = [replace(p, mesh_box=box_mesh(p.covering))
              for p in block_pieces(Y, ProductStripOracle(C.base), consts, blocks)]
    W = glue(ScaleFamily(Y, pieces, 2)).covering
    log_base = -st.H * st.N + 1.5 * st.L + plan.c
    pre_ok = bool(box_lebesgue_check(W, (math.exp(log_base), st.L)).all())
    if not pre_ok:
        raise CoveringError(f"{name}: pre-projection Lebesgue bound fails")
    ball = np.flatnonzero(other.t_of(np.arange(other.n)) <= st.T + st.L + TOL)

    def cross(u):
        pts = u + 1                                 # (z, k) -> 1 + z R + k
        g1, g2 = np.meshgrid(pts, ball, indexing="ij")
        parts = [g1.ravel(), g2.ravel()] if axis == 0 else [g2.ravel(), g1.ravel()]
        return np.sort(X.index(parts))

    r = _radius_masks(X)
    target = np.flatnonzero((r[axis] >= st.T - TOL) & (r[1 - axis] <= st.T + TOL))
    U = ColoredCovering(X, target, [cross(u) for u in W.members], list(W.colors), 2,
                        {"construction": f"{name}-blocks"}).restricted_to(target)
    return _measured(name, U, st, len(pieces), {"preProjection": pre_ok, "blocks": len(blocks)})


def cover_P0(X: ProductSpace, plan: CascadePlan) -> StageResult:
    """The single member ``{t1 < T* + 2L} x {t2 < T* + 2L}`` over ``P0(T*)``."""
    L, T = plan.L_core, plan.T_star
    r1, r2 = _radius_masks(X)
    member = np.flatnonzero((r1 < T + 2 * L - TOL) & (r2 < T + 2 * L - TOL))
    target = np.flatnonzero((r1 <= T + TOL) & (r2 <= T + TOL))
    U = ColoredCovering(X, target, [member], [0], 1, {"construction": "core-box"})
    st = StagePlan("P0", L, 1.0, 0.0, 0, T, 2 * (T + 2 * L), "core")
    return _measured("P0", U, st, 1, {})


def _measured(name, U: ColoredCovering, st: StagePlan, pieces: int, claims: dict) -> StageResult:
    if U.uncovered().size:
        raise CoveringError(f"{name}: target point {int(U.uncovered()[0])} uncovered")
    leb = float(pointwise_lebesgue(U, cap=2 * st.L).min()) if U.target.size else math.inf
    mesh = max((U.space.diameter(u) for u in U.members), default=0.0)
    res = StageResult(name, U, st, leb, mesh, pieces, claims)
    res.check()
    return res


# -- assembly -------------------------------------------------------------------------

@dataclass
class AsprodResult:
    covering: ColoredCovering
    plan: CascadePlan
    stages: dict
    k: int
    lebesgue: float
    mesh: float

    def summary(self) -> dict:
        return {"k": self.k, "colors": self.covering.color_count, "lebesgue": self.lebesgue, "mesh": self.mesh,
                "L0": self.plan.L0, "points": self.covering.space.n,
                "stages": {k: {"L": v.plan.L, "M": v.plan.M, "T": v.plan.T, "H": v.plan.H,
                               "lebesgue": v.lebesgue, "mesh": v.mesh, "pieces": v.pieces}
                           for k, v in self.stages.items()}}


def decomposition_covers(X: ProductSpace, plan: CascadePlan) -> bool:
    """``P0(T*) u P1(T*) u P2(T0) u P3(T3)`` is the whole sample."""
    r1, r2 = _radius_masks(X)
    Ts, T0, T3 = plan.T_star, plan.T0, plan.stages["P3"].T
    inside = (((r1 <= Ts) & (r2 <= Ts)) | ((r1 >= Ts) & (r2 <= Ts))
              | ((r1 <= T0) & (r2 >= T0)) | ((r1 >= T3) & (r2 >= T3)))
    return bool(inside.all())


def assemble_asprod(Z1, Z2, L0: float, c: float, overrides: dict | None = None, radii=None) -> AsprodResult:
    """Run the four stages on a shared radial grid and merge them, coarsest first."""
    oracle = ClusterPairOracle(Z1, Z2)
    q, sigma_pair = calibrate_two_axes()
    sigma_strip = 2.0 * (1 + MARGIN) + 1e-6
    plan = plan_cascade(Z1, Z2, L0, c, q, sigma_pair, sigma_strip, overrides)
    radii = miniature_radii(plan) if radii is None else np.asarray(radii, dtype=float)
    X = ProductSpace([HyperbolicCone(Z1, radii), HyperbolicCone(Z2, radii)])
    if not decomposition_covers(X, plan):
        raise CoveringError("the four regions miss part of the sample")
    colors = oracle.k + 3
    stages = {}
    stages["P3"] = cover_P3(X, plan, oracle)
    stages["P2"] = cover_P1_P2(X, plan, 1)
    stages["P1"] = cover_P1_P2(X, plan, 0)
    stages["P0"] = cover_P0(X, plan)
    W = stages["P0"].covering.with_color_count(colors)
    for name in ("P1", "P2", "P3"):
        W = union_colored(W, stages[name].covering.with_color_count(colors), cap=4 * plan.L_core)
    W.meta.update({"construction": "asprod", "L0": L0})
    leb = float(pointwise_lebesgue(W, cap=2 * L0).min())
    mesh = max(X.diameter(u) for u in W.members)
    return AsprodResult(W, plan, stages, oracle.k, leb, mesh)
