"""Numerical checks of the distance estimates for the cone projection ``h(z, t)``.

Every check samples instances, evaluates the premise exactly and the conclusion with
``TOL`` slack, and reports the number of sampled and premise-satisfying instances,
the violations (with witnesses) and the worst margin of the conclusion.

Claim ids:

``grprest``  Gromov products of points on two radial segments vs. their endpoints.
``gromprod`` Gromov products at equal radii vs. the boundary Gromov product.
``h1.1``, ``h1.2``  base distance bounds force cone distance bounds at radius ``R``.
``h2.1``, ``h2.2``  the converse implications.
``h3.1``, ``h3.2``  images of ``B_r(x) x [R - l, R + l]`` vs. cone balls.
``h4.1``, ``h4.2``  preimages of cone balls vs. products of balls and intervals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cone import ConeConstants, HyperbolicCone, comparison_distance, gromov_limits
from .metric import TOL

CLAIMS = ("grprest", "gromprod", "h1.1", "h1.2", "h2.1", "h2.2", "h3.1", "h3.2", "h4.1", "h4.2")


class ClaimHypothesisError(ValueError):
    pass


@dataclass
class ClaimReport:
    claim: str
    params: dict
    sampled: int
    checked: int
    violations: list = field(default_factory=list)
    worst_margin: float = math.inf

    @property
    def passed(self) -> bool:
        return not self.violations

    def merge(self, other: "ClaimReport") -> "ClaimReport":
        return ClaimReport(self.claim, {"runs": self.params.get("runs", [self.params]) + [other.params]},
                           self.sampled + other.sampled, self.checked + other.checked,
                           (self.violations + other.violations)[:50], min(self.worst_margin, other.worst_margin))

    def to_json(self) -> dict:
        return {"claim": self.claim, "params": self.params, "sampled": self.sampled, "checked": self.checked,
                "violations": self.violations[:20], "violationCount": len(self.violations),
                "worstMargin": self.worst_margin, "pass": self.passed}


def _report(claim, params, premise, margin, witness_cols, limit=20):
    """Summarize a vectorized check; ``margin < -TOL`` on a premise instance is a violation."""
    premise = np.asarray(premise, dtype=bool)
    margin = np.broadcast_to(np.asarray(margin, dtype=float), premise.shape)
    sampled = int(premise.size)
    checked = int(premise.sum())
    worst = float(margin[premise].min()) if checked else math.inf
    bad = np.flatnonzero(premise.ravel() & (margin.ravel() < -TOL))
    violations = []
    for k in bad[:limit]:
        violations.append({name: float(np.broadcast_to(col, premise.shape).ravel()[k])
                           for name, col in witness_cols.items()} | {"margin": float(margin.ravel()[k])})
    if bad.size > limit:
        violations.append({"truncated": int(bad.size - limit)})
    return ClaimReport(claim, dict(params), sampled, checked, violations, worst)


def _pairs(cone: HyperbolicCone, ordered=True):
    n = cone.base.n
    if ordered:
        a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return a.ravel(), b.ravel()
    return np.triu_indices(n, 1)


def _require(ok: bool, msg: str):
    if not ok:
        raise ClaimHypothesisError(msg)


class ClaimContext:
    """Shared state: the cone, its constants and (lazily) the boundary Gromov products."""

    def __init__(self, cone: HyperbolicCone, constants: ConeConstants, limits=None):
        self.cone = cone
        self.constants = constants
        self._limits = limits

    @property
    def delta(self) -> float:
        return self.constants.delta_config

    @property
    def c(self) -> float:
        return self.constants.c

    @property
    def limits(self) -> np.ndarray:
        if self._limits is None:
            self._limits = gromov_limits(self.cone)
        return self._limits

    def d(self, z, t, z2, t2):
        return comparison_distance(t, t2, self.cone.half_sin[z, z2])

    def base_d(self, z, z2):
        return self.cone.base.matrix[z, z2]


# -- individual claims --------------------------------------------------------------

def _grprest(ctx: ClaimContext, params, rng):
    n_combos = int(params.get("combos", 64))
    t_max = float(params.get("t_max", 10.0))
    a, b = _pairs(ctx.cone, ordered=False)
    grid = np.arange(0.0, t_max + 1e-12, float(params.get("step", 0.25)))
    k = a.size
    T1 = rng.choice(grid, size=(k, n_combos))
    T2 = rng.choice(grid, size=(k, n_combos))
    s1 = T1 * rng.random((k, n_combos))
    s2 = T2 * rng.random((k, n_combos))
    s1 = np.round(s1 / 0.05) * 0.05
    s2 = np.round(s2 / 0.05) * 0.05
    s1 = np.minimum(s1, T1)
    s2 = np.minimum(s2, T2)
    A = a[:, None]
    B = b[:, None]
    gz = 0.5 * (T1 + T2 - ctx.d(A, T1, B, T2))
    gx = 0.5 * (s1 + s2 - ctx.d(A, s1, B, s2))
    m = np.minimum(np.minimum(s1, s2), gz)
    margin = np.minimum(gx - (m - 2 * ctx.delta), (m + 2 * ctx.delta) - gx)
    return _report("grprest", params, np.ones_like(gx, dtype=bool), margin,
                   {"z1": A, "z2": B, "t1": T1, "t2": T2, "s1": s1, "s2": s2})


def _gromprod(ctx: ClaimContext, params, rng):
    a, b = _pairs(ctx.cone, ordered=False)
    ts = np.arange(float(params.get("t_min", 0.05)), float(params.get("t_max", 25.0)) + 1e-12,
                   float(params.get("step", 0.05)))
    A, B, T = a[:, None], b[:, None], ts[None, :]
    dxx = ctx.d(A, T, B, T)
    gx = T - 0.5 * dxx
    xi = ctx.limits[a, b][:, None]
    premise = dxx > 4 * ctx.delta
    margin = np.minimum(xi - (gx - 2 * ctx.delta), gx + 2 * ctx.delta - xi)
    return _report("gromprod", params, premise, margin, {"z1": A, "z2": B, "t": T})


def _h1(ctx: ClaimContext, params, part):
    R, D = float(params["R"]), float(params["D"])
    _require(R > 0, "R must be positive")
    if part == 1:
        _require(D > 0, "D must be positive")
    else:
        _require(D > 2 * ctx.delta, f"D={D} must exceed 2*delta={2 * ctx.delta}")
    a, b = _pairs(ctx.cone)
    zz = ctx.base_d(a, b)
    dx = ctx.d(a, R, b, R)
    if part == 1:
        premise = zz >= math.exp(-R + D + ctx.c)
        margin = dx - 2 * D
    else:
        premise = zz <= math.exp(-R + D - ctx.c)
        margin = 2 * D - dx
    return _report(f"h1.{part}", params, premise, margin, {"z1": a, "z2": b})


def _h2(ctx: ClaimContext, params, part):
    R, D = float(params["R"]), float(params["D"])
    _require(R > 0, "R must be positive")
    if part == 1:
        _require(D > 2 * ctx.delta, f"D={D} must exceed 2*delta={2 * ctx.delta}")
    else:
        _require(D > 0, "D must be positive")
    a, b = _pairs(ctx.cone)
    zz = ctx.base_d(a, b)
    dx = ctx.d(a, R, b, R)
    if part == 1:
        premise = dx >= 2 * D
        margin = zz - math.exp(-R + D - ctx.c)
    else:
        premise = dx <= 2 * D
        margin = math.exp(-R + D + ctx.c) - zz
    return _report(f"h2.{part}", params, premise, margin, {"z1": a, "z2": b})


def _radial_window(lo, hi, count):
    return np.linspace(max(lo, 0.0), hi, count)


def _h3(ctx: ClaimContext, params, part):
    a, b = _pairs(ctx.cone)
    R, l = float(params["R"]), float(params["l"])
    count = int(params.get("radial", 49))
    A, B = a[:, None], b[:, None]
    zz = ctx.base_d(A, B)
    if part == 1:
        R1 = float(params["R1"])
        _require(l > 0 and R >= R1 >= l, "need l > 0 and R >= R1 >= l")
        r = math.exp(-R1 + 1.5 * l + ctx.c)
        R0 = _radial_window(R - l - 1.0, R + l + 1.0, count)[None, :]
        dist = ctx.d(A, R0, B, R)
        premise = dist < l
        # the vertex is h(anything, 0); only reachable when R - l <= 0
        radial_margin = np.minimum(R0 - (R - l), (R + l) - R0)
        margin = np.minimum(radial_margin, r - zz)
        return _report("h3.1", params, premise, margin, {"x": A, "y": B, "t": R0})
    t, R2 = float(params["t"]), float(params["R2"])
    _require(l > 2 * ctx.delta and t > 0 and R2 >= R >= t, "need l > 2*delta, t > 0, R2 >= R >= t")
    r = math.exp(-R2 + l - ctx.c)
    R0 = _radial_window(R - t, R + t, count)[None, :]
    premise = np.broadcast_to(zz < r, (a.size, R0.shape[1]))
    dist = ctx.d(A, R0, B, R)
    margin = (3 * t + 2 * l) - dist
    return _report("h3.2", params, premise, margin, {"x": A, "y": B, "t": R0})


def _h4(ctx: ClaimContext, params, part):
    a, b = _pairs(ctx.cone)
    R, l = float(params["R"]), float(params["l"])
    count = int(params.get("radial", 49))
    A, B = a[:, None], b[:, None]
    zz = ctx.base_d(A, B)
    if part == 1:
        R1 = float(params["R1"])
        _require(R1 >= R > 0 and l > 8 * ctx.delta, "need R1 >= R > 0 and l > 8*delta")
        r1 = math.exp(-R1 - l / 4 - ctx.c)
        R0 = _radial_window(R - l / 2, R + l / 2, count)[None, :]
        premise = np.broadcast_to(zz < r1, (a.size, R0.shape[1]))
        margin = l - ctx.d(A, R0, B, R)
        return _report("h4.1", params, premise, margin, {"x": A, "y": B, "t": R0})
    R2 = float(params["R2"])
    _require(l > 0 and R >= R2 >= l, "need l > 0 and R >= R2 >= l")
    r2 = math.exp(-R2 + 1.5 * l + ctx.c)
    R0 = _radial_window(R - l - 1.0, R + l + 1.0, count)[None, :]
    premise = ctx.d(A, R0, B, R) < l
    margin = np.minimum(np.minimum(R0 - (R - l), (R + l) - R0), r2 - zz)
    return _report("h4.2", params, premise, margin, {"x": A, "y": B, "t": R0})


def verify_claim(ctx: ClaimContext, claim: str, params: dict, seed: int = 0) -> ClaimReport:
    rng = np.random.default_rng(seed)
    if claim == "grprest":
        return _grprest(ctx, params, rng)
    if claim == "gromprod":
        return _gromprod(ctx, params, rng)
    if claim in ("h1.1", "h1.2"):
        return _h1(ctx, params, int(claim[-1]))
    if claim in ("h2.1", "h2.2"):
        return _h2(ctx, params, int(claim[-1]))
    if claim in ("h3.1", "h3.2"):
        return _h3(ctx, params, int(claim[-1]))
    if claim in ("h4.1", "h4.2"):
        return _h4(ctx, params, int(claim[-1]))
    raise ValueError(f"unknown claim {claim!r}")


def sweep_params(claim: str, delta: float, Rs=(3.0, 5.0, 8.0), Ds=(1.0, 2.0)) -> list:
    """Parameter grid per claim; ``D`` and ``l`` are shifted past ``2 delta`` or ``8 delta`` where required."""
    out = []
    if claim in ("grprest", "gromprod"):
        return [{}]
    for R in Rs:
        if claim in ("h1.1", "h2.2"):
            out += [{"R": R, "D": D} for D in Ds]
        elif claim in ("h1.2", "h2.1"):
            out += [{"R": R, "D": D + 2 * delta} for D in Ds]
        elif claim == "h3.1":
            for l in (0.5, 1.0, 2.0):
                for R1 in sorted({l, (l + R) / 2, R}):
                    if R >= R1 >= l:
                        out.append({"R": R, "l": l, "R1": R1})
        elif claim == "h3.2":
            for l in (2 * delta + 0.5, 2 * delta + 1.0):
                for t in (0.5, 1.0, R):
                    for R2 in (R, R + 2.0):
                        out.append({"R": R, "l": l, "t": t, "R2": R2})
        elif claim == "h4.1":
            for l in (8 * delta + 0.5, 8 * delta + 2.0):
                for R1 in (R, R + 2.0):
                    out.append({"R": R, "l": l, "R1": R1})
        elif claim == "h4.2":
            for l in (0.5, 1.0, 2.0):
                for R2 in sorted({l, (l + R) / 2, R}):
                    if R >= R2 >= l:
                        out.append({"R": R, "l": l, "R2": R2})
    return out


def verify_sweep(ctx: ClaimContext, claim: str, params_list=None, seed: int = 0) -> ClaimReport:
    params_list = sweep_params(claim, ctx.delta) if params_list is None else params_list
    total = None
    for k, p in enumerate(params_list):
        rep = verify_claim(ctx, claim, p, seed=seed + k)
        total = rep if total is None else total.merge(rep)
    return total
