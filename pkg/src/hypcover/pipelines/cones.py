"""Coverings of a hyperbolic cone with multiplicity ``k + 1`` at every large scale.

The cone minus a ball is ``h(Z x [T, oo))`` with ``h(z, t) = (z, t)``.  Radial blocks
``Z x [Hm, Hm + H]`` alternate between two scales; each is covered by a strip
covering of ``Z x R`` whose base factor shrinks like ``exp(-Hm)`` (the rate at which
rays approach each other near infinity), the blocks are glued, and the result is
pushed to the cone.  A single ball around the vertex covers the rest and is joined
in by the colored union.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cone import ConeConstants, HyperbolicCone
from ..covering import BoxBound, ColoredCovering, CoveringError, covering_metrics, union_colored
from ..gluing import Piece, ScaleFamily, glue
from ..metric import LineSpace, ProductSpace
from .constants import PipelineConstants, make_constants
from .strips import MARGIN, TOL, ProductStripOracle, cluster_ratio


def strip_sigma(base, consts_for_sigma, blocks) -> float:
    """``sigma`` for the product strip oracle at the base scales the blocks will request."""
    interval = 2.0 * (1 + MARGIN) + 1e-6
    taus = [consts_for_sigma.base_scale(m % 2, m) for m in blocks]
    return max(interval, cluster_ratio(base, taus))


def first_block(base, consts: PipelineConstants) -> int:
    """Smallest ``N >= 1`` from which every block's base scale is below the smallest base distance."""
    gap = float(np.min(base.matrix[base.matrix > 0])) if base.n > 1 else math.inf
    N = 1
    while any(consts.base_scale(i, N + j) >= gap for j, i in enumerate((N % 2, (N + 1) % 2))):
        N += 1
        if N > 10_000:
            raise CoveringError("no block start found")
    return N


@dataclass
class ConeCoveringResult:
    cone: HyperbolicCone
    covering: ColoredCovering
    constants: PipelineConstants
    C: float
    N: int
    blocks: int
    far: ColoredCovering
    metrics: object = None
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        m = self.metrics
        return {"L": self.constants.L, "C": self.C, "N": self.N, "blocks": self.blocks,
                "H": self.constants.H, "sigma": self.constants.sigma, "points": self.cone.n,
                "mesh": m.mesh if m else None, "lebesgue": m.lebesgue if m else None,
                "multiplicity": m.multiplicity if m else None}


def block_pieces(Y: ProductSpace, oracle, consts: PipelineConstants, blocks) -> list:
    """One glue piece per radial block ``Z x [Hm, Hm + H]`` at scale ``m mod 2``."""
    t = Y.factors[1].coords
    line_of = np.unravel_index(np.arange(Y.n), Y.shape)[1]
    H = consts.H
    pieces = []
    for m in blocks:
        i = m % 2
        sel = (t >= H * m - TOL) & (t <= H * (m + 1) + TOL)
        target = np.flatnonzero(sel[line_of])
        if target.size == 0:
            continue
        tau_z, tau_r = consts.base_scale(i, m), consts.radial_scale(i)
        sc = oracle.cover(Y, tau_z, tau_r)
        cov = sc.covering.restricted_to(target)
        leb = BoxBound((tau_z, tau_r), "lebesgue")
        mesh = BoxBound((consts.sigma * tau_z, consts.sigma * tau_r), "mesh")
        pieces.append(Piece(target, cov, i, leb, mesh))
    return pieces


def cone_covering_lasdim(base, L: float, cone_constants: ConeConstants, step: float | None = None,
                         N: int | None = None, overrides: dict | None = None, radial_margin: float = 1.1,
                         measure: bool = True) -> ConeCoveringResult:
    """An ``(L, 6CL, k+1)``-covering of a finite cone sample over ``base``.

    The radial grid has spacing ``step`` (default ``L / 2``) and runs past ``3CL`` so the
    vertex ball is a proper subset.  ``C`` is measured: ``max(T, mesh of the far part) / L``
    with ``T = HN`` the start of the first block.
    """
    if L <= 4 * cone_constants.delta_config:
        raise CoveringError("the block construction needs L > 4 delta")
    step = L / 2 if step is None else step
    # sigma depends on the base scales requested, which depend on sigma: iterate
    sigma = 2.0 * (1 + MARGIN) + 1e-6
    for _ in range(5):
        consts = make_constants(L, sigma, cone_constants.c, "single-axis", overrides)
        start = first_block(base, consts) if N is None else N
        new_sigma = strip_sigma(base, consts, range(start, start + 64))
        if new_sigma <= sigma:
            break
        sigma = new_sigma
    else:
        raise CoveringError("sigma did not settle")
    H = consts.H
    blocks = 2
    while True:
        t_max = H * (start + blocks)
        radii = np.arange(step, t_max + step / 2, step)
        cone = HyperbolicCone(base, radii)
        Y = ProductSpace([cone.base, LineSpace(cone.radii)])
        oracle = ProductStripOracle(cone.base)
        family = ScaleFamily(Y, block_pieces(Y, oracle, consts, range(start, start + blocks)), 2)
        W = glue(family).covering
        far_members = [m + 1 for m in W.members]          # h(z, t): flat index shifts past the vertex
        T = H * start
        mesh_far = max(cone.diameter(m) for m in far_members)
        C = max(T, mesh_far, L) / L
        if t_max >= radial_margin * 3 * C * L + step:
            break
        blocks = int(math.ceil((radial_margin * 3 * C * L + step) / H)) - start + 1
    t = cone.t_of(np.arange(cone.n))
    far_target = np.flatnonzero(t >= C * L - TOL)
    far = ColoredCovering(cone, far_target, far_members, list(W.colors), 2).restricted_to(far_target)
    core_target = np.flatnonzero(t < C * L - TOL)
    ball = np.flatnonzero(t < 3 * C * L - TOL)
    core = ColoredCovering(cone, core_target, [ball], [0], 2)
    out = union_colored(core, far)
    out.meta.update({"construction": "cone-blocks", "C": C})
    res = ConeCoveringResult(cone, out, consts, C, start, blocks, far)
    if measure:
        res.metrics = covering_metrics(out, cap=2 * L)
    return res
