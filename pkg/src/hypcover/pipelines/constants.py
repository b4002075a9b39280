"""Constants of the block constructions, with explicit overrides for small instances."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

TINY = 1e-300

# block height as a multiple of L: sigma exponent and coefficient per construction
HEIGHT_RULES = {"single-axis": (2, 40.0), "two-axes": (4, 512.0)}


@dataclass(frozen=True)
class PipelineConstants:
    L: float
    sigma: float
    c: float
    H: float
    rule: str = "single-axis"
    overrides: dict = field(default_factory=dict)

    @property
    def log_c1(self) -> float:
        """``log c1`` with ``c1 = 2 exp(3L/2 + c)``."""
        return math.log(2.0) + 1.5 * self.L + self.c

    @property
    def log_b(self) -> float:
        return -self.H

    def base_scale_log(self, i: int, m: int) -> float:
        """``log((4 sigma)^i c1 b^(m - i))``: the base-factor Lebesgue bound of block ``m`` at scale ``i``."""
        return i * math.log(4.0 * self.sigma) + self.log_c1 + (m - i) * self.log_b

    def base_scale(self, i: int, m: int) -> float:
        v = self.base_scale_log(i, m)
        if v > 690:
            return math.inf
        return max(math.exp(v), TINY)

    def radial_scale(self, i: int) -> float:
        """``(4 sigma)^i 2L``: the radial Lebesgue bound at scale ``i``."""
        return (4.0 * self.sigma) ** i * 2.0 * self.L

    def to_json(self) -> dict:
        out = asdict(self)
        out["logC1"] = self.log_c1
        return out


def make_constants(L: float, sigma: float, c: float, rule: str = "single-axis",
                   overrides: dict | None = None) -> PipelineConstants:
    """Constants from the formulas; ``overrides`` may replace ``H`` (the only derived one)."""
    if rule not in HEIGHT_RULES:
        raise ValueError(f"unknown rule {rule!r}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"H"}
    if unknown:
        raise ValueError(f"cannot override {sorted(unknown)}")
    power, coef = HEIGHT_RULES[rule]
    H = float(overrides.get("H", coef * sigma ** power * L))
    if H <= 0:
        raise ValueError("block height must be positive")
    return PipelineConstants(L=float(L), sigma=float(sigma), c=float(c), H=H, rule=rule, overrides=overrides)
