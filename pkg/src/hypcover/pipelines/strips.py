"""Coverings of ``Z x R`` and ``Z1 x Z2 x R x R`` with prescribed box Lebesgue numbers.

Two routes lead to a covering of ``Z x R`` with ``L^x >= (tau, tau')`` and
``mesh^x <= sigma (tau, tau')``:

* :class:`ProductStripOracle` crosses single-linkage clusters of ``Z`` with two
  staggered families of intervals.  It needs one color on ``Z`` (clusters at the
  requested scale must exist) and gives ``sigma`` close to 2.
* :func:`strip_covering_R` works from any oracle covering ``Z x I`` at a single scale.
  The line is split into two families of strips at two scales; the strips are covered
  separately and glued, then the line axis is rescaled.  ``sigma`` grows like
  ``8 / delta^2`` for an oracle with Lebesgue ratio ``delta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..covering import (TOL, BoxBound, ColoredCovering, CoveringError, box_lebesgue_check, box_mesh,
                        closed_fit)
from ..gluing import Piece, ScaleFamily, declared_boxes, glue
from ..metric import FiniteMetricSpace, LineSpace, ProductSpace, make_product
from ..nerve import product_covering
from .util import cross_total, product_members

MARGIN = 1e-6


# -- factor coverings ---------------------------------------------------------------

def single_linkage(space, t: float) -> list:
    """Connected components of the graph joining points at distance below ``t``."""
    n = space.n
    if math.isinf(t):
        return [np.arange(n)]
    if isinstance(space, LineSpace):
        xs = space._sorted
        cuts = np.flatnonzero(np.diff(xs) >= t) + 1
        return [np.sort(space._order[a:b]) for a, b in zip(np.r_[0, cuts], np.r_[cuts, n])]
    label = np.full(n, -1, dtype=np.int64)
    comps = []
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = len(comps)
        frontier = [s]
        comp = [s]
        while frontier:
            rows = space.rows(np.asarray(frontier))
            nxt = np.flatnonzero((rows < t).any(axis=0) & (label < 0))
            label[nxt] = len(comps)
            comp.extend(nxt.tolist())
            frontier = nxt.tolist()
        comps.append(np.sort(np.asarray(comp, dtype=np.int64)))
    return comps


def minimax_radius(space, idx) -> float:
    """Smallest radius of a closed ball centered at a point of ``idx`` containing ``idx``."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size <= 1:
        return 0.0
    if isinstance(space, LineSpace):
        c = space.coords[idx]
        mid = (c.max() + c.min()) / 2
        return float(np.max(np.abs(c - c[np.argmin(np.abs(c - mid))])))
    return float(space.rows(idx)[:, idx].max(axis=1).min())


def cluster_threshold(tau: float) -> float:
    """Linkage threshold whose clusters admit closed ``tau``-balls at every point."""
    return tau * (1 + MARGIN) + 2 * TOL


def cluster_ratio(space, taus) -> float:
    """``max`` over the requested scales of (largest cluster radius) / scale."""
    worst = 0.0
    for tau in taus:
        if math.isinf(tau) or tau <= 0:
            continue
        comps = single_linkage(space, cluster_threshold(tau))
        if len(comps) == 1:
            continue                       # a single cluster has no complement
        worst = max(worst, max(minimax_radius(space, c) for c in comps) / tau)
    return worst


def interval_members(line: LineSpace, unit: float, offset: float = 0.0) -> tuple:
    """Open intervals ``(offset + j unit, offset + (j + 2) unit)``, colored ``j mod 2``.

    Every point lies at distance at least ``unit / 2`` from both ends of one of them.
    """
    xs = line._sorted
    # only intervals holding a sample point: j within two of floor((x - offset) / unit)
    base = np.floor((xs - offset) / unit).astype(np.int64)
    js = np.unique(np.concatenate([base - 2, base - 1, base, base + 1]))
    members, colors = [], []
    for j in js:
        a = offset + int(j) * unit
        lo = np.searchsorted(xs, a + TOL, side="right")
        hi = np.searchsorted(xs, a + 2 * unit - TOL, side="left")
        if hi > lo:
            members.append(np.sort(line._order[lo:hi]))
            colors.append(int(j) % 2)
    return members, colors


def interval_covering(line: LineSpace, lebesgue: float, offset: float = 0.0) -> ColoredCovering:
    """Two-colored interval covering of a line with Lebesgue number at least ``lebesgue``."""
    unit = 2 * lebesgue * (1 + MARGIN) + 8 * TOL
    members, colors = interval_members(line, unit, offset)
    return ColoredCovering(line, np.arange(line.n), members, colors, 2,
                           {"construction": "intervals", "unit": unit})


# -- strip coverings -------------------------------------------------------------------

@dataclass
class StripCover:
    covering: ColoredCovering
    lebesgue_box: BoxBound
    mesh_box: BoxBound
    meta: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return max((m / l for m, l in zip(self.mesh_box.radii, self.lebesgue_box.radii)
                    if l > 0 and math.isfinite(l)), default=0.0)


class ProductStripOracle:
    """Clusters of the base crossed with two staggered interval families (two colors)."""

    name = "product"

    def __init__(self, base):
        self.base = base

    def cover(self, space: ProductSpace, tau_z: float, tau_r: float) -> StripCover:
        if space.k != 2 or space.factors[0] is not self.base and space.factors[0].key() != self.base.key():
            raise CoveringError("strip oracle expects the product of its base with a line")
        sz, sr = space.scales
        comps = single_linkage(self.base, cluster_threshold(tau_z) / sz)
        line = space.factors[1]
        members, colors = interval_members(line, (2 * tau_r * (1 + MARGIN) + 8 * TOL) / sr)
        out, out_colors = [], []
        for c in comps:
            for m, col in zip(members, colors):
                out.append(product_members(space, [c, m]))
                out_colors.append(col)
        cov = ColoredCovering(space, np.arange(space.n), out, out_colors, 2,
                              {"construction": "strip-product", "tau": [tau_z, tau_r]})
        return StripCover(cov, BoxBound((tau_z, tau_r), "lebesgue"), box_mesh(cov), {"clusters": len(comps)})


def strip_covering_R(space: ProductSpace, tau: float, tau_prime: float, oracle, delta: float,
                     max_rounds: int = 6) -> StripCover:
    """Covering of ``Z x R`` (a finite line grid) glued from coverings of strips.

    ``oracle(space, target, t)`` must cover ``target`` by members of diameter at most
    ``t`` with Lebesgue number about ``delta t`` on ``target``.  The line is rescaled
    by ``tau / tau_prime`` so both axes are handled at the scale ``tau``; strips
    ``(k, k + 3/4)`` (scale 0) and ``(k - 1/2, k + 1/4)`` (scale 1), in units of ``16
    t1``, are covered at scales ``t0 <= t1 / 4`` and ``t1``.
    """
    if space.k != 2 or not isinstance(space.factors[1], LineSpace):
        raise CoveringError("strip covering needs a product of a base with a line")
    rho = tau / tau_prime
    work = ProductSpace(space.factors, [space.scales[0], space.scales[1] * rho])
    y = space.factors[1].coords * work.scales[1]
    line_of = np.unravel_index(np.arange(space.n), space.shape)[1]
    t1 = 8 * tau / delta ** 2
    for _ in range(max_rounds):
        unit = 16 * t1
        pieces1 = _strip_pieces(work, y, line_of, unit, -0.5, 0.25, oracle, t1, scale=1)
        lam1 = min(p.lebesgue_box.radii[0] for p in pieces1)
        # a strip covered by one total member has no finite Lebesgue bound
        t0 = min(lam1, t1) / 4
        pieces0 = _strip_pieces(work, y, line_of, unit, 0.0, 0.75, oracle, t0, scale=0)
        lam0 = min(p.lebesgue_box.radii[0] for p in pieces0)
        if min(lam0, lam1) / 2 >= tau:
            break
        t1 *= 1.05 * 2 * tau / min(lam0, lam1)
    else:
        raise CoveringError("strip oracle too weak for the requested scale")
    pieces = pieces0 + pieces1
    m = _color_count(pieces)
    for p in pieces:
        p.covering = p.covering.with_color_count(m)
    family = ScaleFamily(work, pieces, m)
    res = glue(family)
    cov = res.covering.on_space(space)
    leb = BoxBound((tau, tau_prime), "lebesgue")
    if not box_lebesgue_check(cov, leb).all():
        raise CoveringError("glued strip covering misses its Lebesgue box")
    return StripCover(cov, leb, box_mesh(cov), {"t0": t0, "t1": t1, "unit": unit, "rho": rho,
                                                 "construction": "strip-glue"})


def _color_count(pieces) -> int:
    return max(p.covering.color_count for p in pieces)


def _strip_pieces(work, y, line_of, unit, start, stop, oracle, t, scale) -> list:
    lo = math.floor(y.min() / unit) - 1
    hi = math.ceil(y.max() / unit) + 1
    pieces = []
    yy = y[line_of]
    for k in range(lo, hi + 1):
        a, b = (k + start) * unit, (k + stop) * unit
        target = np.flatnonzero((yy > a + TOL) & (yy < b - TOL))
        if target.size == 0:
            continue
        cov = oracle(work, target, t).restricted_to(target)
        leb, mesh = declared_boxes(cov, points=target)
        pieces.append(Piece(target, cov, scale, leb, mesh))
    return pieces


def greedy_oracle(max_colors: int = 3, delta_target: float = 0.05):
    """Oracle for :func:`strip_covering_R` built on the product-strategy search (cached per scale)."""
    from .ldim import product_covering_search

    cache: dict = {}

    def oracle(space, target, t):
        key = (space.key(), round(t, 15))
        if key not in cache:
            cache[key] = product_covering_search(space, t, max_colors, delta_target)
        return cache[key]

    return oracle


# -- two axes --------------------------------------------------------------------------

@dataclass
class TwoAxesCover:
    covering: ColoredCovering
    q: float
    lebesgue_box: BoxBound
    mesh_box: BoxBound


def two_axes_covering(space: ProductSpace, pair: ColoredCovering, pair_box, ell, measure: bool = True) -> TwoAxesCover:
    """``(V * U) * U`` on ``Z1 x Z2 x R x R`` for a covering ``V`` of ``Z1 x Z2``.

    ``pair`` lives on the product of the first two factors with ``L^x >= pair_box``; the
    interval coverings of the two lines have Lebesgue numbers ``ell``.  The measured
    ``q`` gives ``L^x >= q (pair_box, ell)``; colors go up by two.
    """
    if space.k != 4:
        raise CoveringError("two-axes covering needs four factors")
    a = [float(v) for v in (pair_box.radii if isinstance(pair_box, BoxBound) else pair_box)]
    ell = [float(v) for v in ell]
    lines = []
    for f, lf in zip((2, 3), ell):
        iso_line = LineSpace(space.factors[f].coords * space.scales[f] / lf)
        lines.append(interval_covering(iso_line, 1.0))
    whole_pair = len(pair.members) == 1 and pair.members[0].size == pair.space.n
    # one color means pairwise disjoint members: the nerve of V is discrete and each
    # member of V simply carries its own copy of U * U
    discrete = len(set(pair.colors)) == 1 and pair.color_clash() is None
    if whole_pair:
        res = product_covering(lines[0], lines[1], measure=False)
        sub = res.covering.on_space(make_product([space.factors[2], space.factors[3]]))
        W = cross_total(space, [2, 3], sub)
        color_count = sub.color_count + pair.color_count - 1
        W = W.with_color_count(max(color_count, W.color_count))
    elif discrete:
        res = product_covering(lines[0], lines[1], measure=False)
        sub = res.covering
        plane_shape = (space.shape[2], space.shape[3])
        members, colors = [], []
        for P in pair.members:
            z1, z2 = np.unravel_index(P, pair.space.shape)
            for S, col in zip(sub.members, sub.colors):
                r1, r2 = np.unravel_index(S, plane_shape)
                members.append(np.sort(space.index([np.repeat(z1, r1.size), np.repeat(z2, r1.size),
                                                    np.tile(r1, z1.size), np.tile(r2, z1.size)])))
                colors.append(col)
        W = ColoredCovering(space, np.arange(space.n), members, colors, sub.color_count,
                            {"construction": "two-axes", "pair": "discrete"})
    else:
        iso_pair = pair.space.rescaled([1.0 / v if math.isfinite(v) else 1.0 for v in a])
        V = pair.on_space(iso_pair)
        W1 = product_covering(V, lines[0], measure=False).covering
        W1 = W1.on_space(make_product([iso_pair, lines[0].space]))
        W2 = product_covering(W1, lines[1], measure=False).covering
        W = W2.on_space(space)
    weights = [v if math.isfinite(v) else 1e300 for v in a] + ell
    q = float("nan")
    if measure:
        from ..covering import box_lebesgue_sup
        # a cap keeps the search local; values above it only understate q
        t = box_lebesgue_sup(W, weights, cap=4.0)
        q = closed_fit(float(t.min()))
    leb = BoxBound(tuple(q * w for w in weights), "lebesgue") if measure else None
    return TwoAxesCover(W, q, leb, box_mesh(W))
