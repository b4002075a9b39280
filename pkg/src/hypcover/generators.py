"""Built-in finite spaces: Cantor approximations, circle nets, convergent sequences."""
from __future__ import annotations

import itertools

import numpy as np

from .metric import FiniteMetricSpace, LineSpace, make_product


def cantor_points(level: int) -> np.ndarray:
    """Left endpoints of the ``2**level`` middle-thirds intervals of generation ``level``."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    pts = np.zeros(1)
    for k in range(1, level + 1):
        pts = np.concatenate([pts, pts + 2.0 * 3.0 ** -k])
    return np.sort(pts)


def cantor(level: int) -> FiniteMetricSpace:
    x = cantor_points(level)
    return FiniteMetricSpace(np.abs(x[:, None] - x[None, :]), labels=[repr(float(v)) for v in x], validate=False)


def circle(m: int) -> FiniteMetricSpace:
    """``m`` equally spaced points on a circle of circumference 1 with the arc metric."""
    if m < 1:
        raise ValueError("need at least one point")
    k = np.arange(m)
    gap = np.abs(k[:, None] - k[None, :])
    return FiniteMetricSpace(np.minimum(gap, m - gap) / m, validate=False)


def seq(M: int) -> FiniteMetricSpace:
    """``{0} u {1/m : 1 <= m <= M}``, ordered as listed."""
    if M < 1:
        raise ValueError("M must be positive")
    x = np.concatenate([[0.0], 1.0 / np.arange(1, M + 1)])
    return FiniteMetricSpace(np.abs(x[:, None] - x[None, :]), labels=[repr(float(v)) for v in x], validate=False)


def seq_points(M: int) -> np.ndarray:
    return np.concatenate([[0.0], 1.0 / np.arange(1, M + 1)])


GENERATORS = {
    "cantor": (cantor, ("level",)),
    "circle": (circle, ("m",)),
    "seq": (seq, ("M",)),
    "grid": (lambda n, step=1.0: LineSpace.grid(0.0, (n - 1) * step, step), ("n", "step")),
}


def generate(name: str, **params):
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    fn, _ = GENERATORS[name]
    return fn(**params)
