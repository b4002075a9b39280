"""Greedy search for ``(delta tau, tau, k+1)``-coverings at a list of scales."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..covering import ColoredCovering, covering_metrics, pointwise_lebesgue
from ..metric import ProductSpace
from .util import cross_total


@dataclass(frozen=True)
class LDimSearchParams:
    scales: tuple
    max_colors: int
    delta_target: float
    strategy: str = "auto"          # "greedy", "product" or "auto" (product on product spaces)

    def __post_init__(self):
        s = list(self.scales)
        if any(b >= a for a, b in zip(s, s[1:])):
            raise ValueError("scales must be strictly decreasing")
        if not 0 < self.delta_target < 1:
            raise ValueError("delta_target must lie in (0, 1)")
        if self.max_colors < 1:
            raise ValueError("need at least one color")
        if self.strategy not in ("auto", "greedy", "product"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class ScaleResult:
    tau: float
    covering: ColoredCovering
    colors_used: int
    mesh: float
    lebesgue: float

    @property
    def delta(self) -> float:
        return self.lebesgue / self.tau

    def ok(self, delta_target: float) -> bool:
        return self.lebesgue >= delta_target * self.tau and self.mesh <= self.tau + 1e-9


@dataclass
class LDimReport:
    params: LDimSearchParams
    results: list = field(default_factory=list)

    @property
    def colors(self) -> int:
        return max((r.colors_used for r in self.results), default=1)

    @property
    def success(self) -> bool:
        return all(r.ok(self.params.delta_target) for r in self.results)

    @property
    def best_delta(self) -> float:
        return min((r.delta for r in self.results), default=math.inf)

    @property
    def dimension_bound(self) -> int | None:
        """``k`` with ``k + 1`` the colors needed at every scale (``None`` on failure)."""
        return self.colors - 1 if self.success else None


def greedy_covering(space, tau: float, max_colors: int, delta_target: float, target=None,
                    cap: float | None = None) -> ColoredCovering:
    """Color by color, grow closed balls of radius ``tau/2`` over points still lacking margin.

    A point lacks margin while its pointwise Lebesgue number is below ``delta_target *
    tau``.  Each ball starts from the smallest such point not yet taken by the current
    color; its center is picked near that seed to hold as many lacking points as
    possible with margin, and its radius is trimmed to cut through a sparse shell.
    Same-colored balls are made disjoint, so every member has diameter at most ``tau``.
    """
    target = np.arange(space.n) if target is None else np.asarray(target, dtype=np.int64)
    need = delta_target * tau
    cap = 2 * need if cap is None else cap
    members, colors = [], []
    lacking = np.zeros(space.n, dtype=bool)
    lacking[target] = True
    for color in range(max_colors):
        taken = np.zeros(space.n, dtype=bool)
        for z in np.flatnonzero(lacking):
            if taken[z]:
                continue
            ball = _seeded_ball(space, int(z), tau / 2, need, taken, lacking)
            taken[ball] = True
            members.append(ball)
            colors.append(color)
        cov = ColoredCovering(space, target, members, colors, color + 1)
        pw = pointwise_lebesgue(cov, cap=cap)
        lacking[:] = False
        lacking[target[pw < need - 1e-12]] = True
        if not lacking.any():
            break
    return ColoredCovering(space, target, members, colors, max(colors) + 1 if colors else 1,
                           {"construction": "greedy", "tau": tau})


def _seeded_ball(space, z: int, r: float, need: float, taken: np.ndarray, lacking: np.ndarray) -> np.ndarray:
    free = ~taken
    row_z = space.rows([z])[0]
    near = np.flatnonzero(row_z <= r + 1e-12)
    near = near[np.argsort(row_z[near], kind="stable")]
    picks = near[np.unique(np.linspace(0, near.size - 1, min(9, near.size)).round().astype(int))]
    best, row, center = -1, row_z, z
    for c in picks:
        rc = row_z if c == z else space.rows([int(c)])[0]
        score = int(np.count_nonzero(free & lacking & (rc <= r - need + 1e-12)))
        if score > best:
            best, row, center = score, rc, int(c)
    # trim the radius where the shell of width ``need`` holds the fewest free points
    best_shell, best_r = None, r
    for rr in np.linspace(r, r / 2, 9):
        shell = int(np.count_nonzero(free & (row > rr + 1e-12) & (row <= rr + need + 1e-12)))
        if best_shell is None or shell < best_shell:
            best_shell, best_r = shell, rr
        if shell == 0:
            break
    ball = np.flatnonzero(free & (row <= best_r + 1e-12))
    if not np.any(ball == z):
        # keep the seed; the ball then has diameter at most tau via the center
        ball = np.union1d(ball, [z]) if row[z] <= r + 1e-12 else ball
    return ball


def product_covering_search(space: ProductSpace, tau: float, max_colors: int, delta_target: float):
    """Cover each factor greedily at mesh ``tau`` and combine them through the nerve product."""
    from ..nerve import iterated_product_covering

    factor_covs, total = [], []
    for f, fac in enumerate(space.factors):
        cov = greedy_covering(fac, tau / space.scales[f], max_colors, delta_target)
        if len(cov.members) == 1 and cov.members[0].size == fac.n:
            total.append(f)          # a single member equal to the factor: just cross with it
        else:
            factor_covs.append((f, cov))
    if not factor_covs:
        whole = np.arange(space.n)
        return ColoredCovering(space, whole, [whole], [0], 1, {"construction": "product"})
    if len(factor_covs) > 1:
        sub, _ = iterated_product_covering([c for _, c in factor_covs])
    else:
        sub = factor_covs[0][1]
    return cross_total(space, [f for f, _ in factor_covs], sub)


def ldim_search(space, params: LDimSearchParams, target=None) -> LDimReport:
    report = LDimReport(params)
    use_product = (params.strategy == "product" or params.strategy == "auto"
                   and isinstance(space, ProductSpace) and space.k > 1 and target is None)
    for tau in params.scales:
        if use_product:
            cov = product_covering_search(space, tau, params.max_colors, params.delta_target)
        else:
            cov = greedy_covering(space, tau, params.max_colors, params.delta_target, target=target)
        m = covering_metrics(cov, cap=2 * tau)
        report.results.append(ScaleResult(tau, cov, cov.color_count, m.mesh, m.lebesgue))
    return report
