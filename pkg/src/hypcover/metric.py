"""Finite metric spaces, l-infinity products, Gromov products and hyperbolicity.

Every space exposes the same small duck-typed surface used by the covering code:

* ``n`` -- number of points, indexed ``0..n-1``;
* ``dist(i, j)`` -- elementwise distances for broadcastable index arrays;
* ``ball(i, r, closed)`` -- sorted indices of the (open or closed) ball;
* ``diameter(idx)`` -- diameter of a subset;
* ``spec()`` -- a JSON-able description from which the space can be rebuilt.

Distances are float64; comparisons use the absolute tolerance :data:`TOL`.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOL = 1e-9
DEFAULT_PRODUCT_CAP = 10**7


class MetricError(ValueError):
    pass


def within_open(d, r):
    """Membership test for the open ball of radius ``r`` (``d == 0`` always inside)."""
    d = np.asarray(d)
    return (d < r - TOL) | (d <= 0.0)


def within_closed(d, r):
    return np.asarray(d) <= r + TOL


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class _SpaceBase:
    n: int

    def dist(self, i, j):
        raise NotImplementedError

    def rows(self, idx) -> np.ndarray:
        """Distances from each point of ``idx`` to every point, shape ``(len(idx), n)``."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        return self.dist(idx[:, None], np.arange(self.n)[None, :])

    def ball(self, i: int, r: float, closed: bool = False) -> np.ndarray:
        row = self.rows([i])[0]
        mask = within_closed(row, r) if closed else within_open(row, r)
        return np.flatnonzero(mask)

    def diameter(self, idx) -> float:
        idx = np.unique(np.asarray(idx, dtype=np.int64))
        if idx.size <= 1:
            return 0.0
        best = 0.0
        for start in range(0, idx.size, 512):
            block = idx[start:start + 512]
            best = max(best, float(self.dist(block[:, None], idx[None, :]).max()))
        return best

    def dist_to_set(self, i: int, others, cap: float | None = None) -> float:
        """``dist(i, others)``; ``inf`` for an empty set; values above ``cap`` are clipped."""
        others = np.asarray(others, dtype=np.int64)
        if others.size == 0:
            return math.inf
        d = float(np.min(self.dist(np.int64(i), others)))
        return d if cap is None else min(d, cap)

    def dist_to_complement(self, i: int, member: np.ndarray, cap: float | None = None) -> float:
        """Distance from point ``i`` to the complement of the sorted index array ``member``."""
        row = self.rows([i])[0]
        mask = np.ones(self.n, dtype=bool)
        mask[member] = False
        if not mask.any():
            return math.inf
        d = float(row[mask].min())
        return d if cap is None else min(d, cap)

    def key(self) -> str:
        return hashlib.sha256(canonical_json(self.spec()).encode()).hexdigest()

    def spec(self) -> dict:
        raise NotImplementedError

    def materialize(self) -> "FiniteMetricSpace":
        idx = np.arange(self.n)
        return FiniteMetricSpace(self.rows(idx))


class FiniteMetricSpace(_SpaceBase):
    """A finite metric space given by an explicit symmetric distance matrix."""

    def __init__(self, matrix, labels: Sequence[str] | None = None, validate: bool = True):
        m = np.array(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MetricError("distance matrix must be square")
        self.matrix = m
        self.matrix.setflags(write=False)
        self.n = m.shape[0]
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.n:
            raise MetricError("labels length does not match point count")
        if validate:
            self.validate()

    def validate(self) -> None:
        m = self.matrix
        if self.n == 0:
            raise MetricError("empty space")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise MetricError("distances must be finite and nonnegative")
        if np.any(np.abs(np.diag(m)) > TOL):
            raise MetricError("nonzero diagonal")
        if np.any(np.abs(m - m.T) > TOL):
            raise MetricError("matrix is not symmetric")
        # d[i,k] <= d[i,j] + d[j,k]; one j at a time keeps memory at O(n^2)
        for j in range(self.n):
            if np.any(m > m[:, j][:, None] + m[j, :][None, :] + TOL):
                raise MetricError("triangle inequality violated")

    def dist(self, i, j):
        return self.matrix[i, j]

    def rows(self, idx):
        return self.matrix[np.atleast_1d(np.asarray(idx, dtype=np.int64))]

    def dist_to_complement(self, i, member, cap=None):
        row = self.matrix[i]
        mask = np.ones(self.n, dtype=bool)
        mask[member] = False
        if not mask.any():
            return math.inf
        d = float(row[mask].min())
        return d if cap is None else min(d, cap)

    def diameter(self, idx) -> float:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size <= 1:
            return 0.0
        return float(self.matrix[np.ix_(idx, idx)].max())

    def scaled(self, a: float) -> "FiniteMetricSpace":
        if a <= 0:
            raise MetricError("scale must be positive")
        return FiniteMetricSpace(self.matrix * a, self.labels, validate=False)

    def subspace(self, idx) -> "FiniteMetricSpace":
        idx = np.asarray(idx, dtype=np.int64)
        labels = [self.labels[i] for i in idx] if self.labels else None
        return FiniteMetricSpace(self.matrix[np.ix_(idx, idx)], labels, validate=False)

    def spec(self) -> dict:
        out = {"n": self.n, "matrix": self.matrix.tolist()}
        if self.labels is not None:
            out["labels"] = self.labels
        return out

    def materialize(self):
        return self


class LineSpace(_SpaceBase):
    """Points of the real line with the absolute-value metric (grids, nets, Cantor sets)."""

    def __init__(self, coords, labels: Sequence[str] | None = None):
        self.coords = np.asarray(coords, dtype=np.float64).ravel()
        if self.coords.size == 0:
            raise MetricError("empty space")
        self.n = self.coords.size
        self._order = np.argsort(self.coords, kind="stable")
        self._sorted = self.coords[self._order]
        self.labels = list(labels) if labels is not None else None

    @classmethod
    def grid(cls, start: float, stop: float, step: float) -> "LineSpace":
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(start + step * np.arange(count))

    def dist(self, i, j):
        return np.abs(self.coords[i] - self.coords[j])

    def ball(self, i, r, closed=False):
        x = self.coords[i]
        if closed:
            lo = np.searchsorted(self._sorted, x - r - TOL, side="left")
            hi = np.searchsorted(self._sorted, x + r + TOL, side="right")
        else:
            eff = max(r - TOL, 0.0)
            lo = np.searchsorted(self._sorted, x - eff, side="right")
            hi = np.searchsorted(self._sorted, x + eff, side="left")
            if eff == 0.0:
                lo = np.searchsorted(self._sorted, x, side="left")
                hi = np.searchsorted(self._sorted, x, side="right")
        return np.sort(self._order[lo:hi])

    def diameter(self, idx) -> float:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size <= 1:
            return 0.0
        c = self.coords[idx]
        return float(c.max() - c.min())

    def dist_to_complement(self, i, member, cap=None):
        # nearest non-member on either side in sorted order
        inside = np.zeros(self.n, dtype=bool)
        inside[member] = True
        if inside.all():
            return math.inf
        pos = int(np.searchsorted(self._sorted, self.coords[i], side="left"))
        best = math.inf
        x = self.coords[i]
        k = pos
        while k < self.n:
            j = self._order[k]
            if not inside[j]:
                best = self._sorted[k] - x
                break
            if cap is not None and self._sorted[k] - x >= cap:
                break
            k += 1
        k = pos - 1
        while k >= 0:
            j = self._order[k]
            if x - self._sorted[k] >= best:
                break
            if not inside[j]:
                best = min(best, x - self._sorted[k])
                break
            if cap is not None and x - self._sorted[k] >= cap:
                break
            k -= 1
        return best if cap is None else min(best, cap)

    def spec(self) -> dict:
        out = {"kind": "line", "coords": self.coords.tolist()}
        if self.labels is not None:
            out["labels"] = self.labels
        return out


class ProductSpace(_SpaceBase):
    """l-infinity product of factor spaces, each with a positive scale.

    Points are flat indices in C order over the factor index tuples; distances are
    computed from the factors on demand.
    """

    def __init__(self, factors, scales=None, cap: int = DEFAULT_PRODUCT_CAP):
        factors = list(factors)
        if not factors:
            raise MetricError("product needs at least one factor")
        scales = [1.0] * len(factors) if scales is None else [float(s) for s in scales]
        if len(scales) != len(factors):
            raise MetricError("one scale per factor required")
        if any(s <= 0 for s in scales):
            raise MetricError("scales must be positive")
        if any(f.n == 0 for f in factors):
            raise MetricError("empty factor")
        self.factors = factors
        self.scales = np.asarray(scales)
        self.shape = tuple(f.n for f in factors)
        total = int(np.prod(self.shape, dtype=object))
        if total > cap:
            raise MetricError(f"product has {total} points, above cap {cap}")
        self.n = total

    @property
    def k(self) -> int:
        return len(self.factors)

    def coords(self, idx) -> tuple:
        return np.unravel_index(np.asarray(idx, dtype=np.int64), self.shape)

    def index(self, coords) -> np.ndarray:
        return np.ravel_multi_index(tuple(np.asarray(c, dtype=np.int64) for c in coords), self.shape)

    def factor_dist(self, f: int, a, b):
        return self.scales[f] * self.factors[f].dist(a, b)

    def dist(self, i, j):
        ci, cj = self.coords(i), self.coords(j)
        out = None
        for f in range(self.k):
            d = self.factor_dist(f, ci[f], cj[f])
            out = d if out is None else np.maximum(out, d)
        return out

    def box(self, i: int, radii, closed: bool = True) -> np.ndarray:
        """Indices of the product of per-factor balls around point ``i``."""
        c = self.coords(int(i))
        parts = []
        for f in range(self.k):
            r, s = float(radii[f]), self.scales[f]
            if math.isinf(r):
                parts.append(np.arange(self.factors[f].n))
                continue
            # factor balls add TOL in unscaled units; convert so the test is scale*d vs r
            r_f = (r + TOL) / s - TOL if closed else (r - TOL) / s + TOL
            parts.append(self.factors[f].ball(int(c[f]), r_f, closed=closed))
        grids = np.meshgrid(*parts, indexing="ij")
        return np.sort(self.index([g.ravel() for g in grids]))

    def ball(self, i, r, closed=False):
        return self.box(i, [r] * self.k, closed=closed)

    def diameter(self, idx) -> float:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size <= 1:
            return 0.0
        c = self.coords(idx)
        return max(self.scales[f] * self.factors[f].diameter(np.unique(c[f])) for f in range(self.k))

    def projection_diameters(self, idx) -> np.ndarray:
        c = self.coords(np.asarray(idx, dtype=np.int64))
        return np.array([self.scales[f] * self.factors[f].diameter(np.unique(c[f])) for f in range(self.k)])

    def dist_to_complement(self, i, member, cap=None):
        if len(member) == self.n:
            return math.inf
        if self.n <= 4096:
            return super().dist_to_complement(i, member, cap)
        r = _initial_radius(self)
        while True:
            cand = self.ball(i, r, closed=True)
            outside = cand[~_isin_sorted(cand, member)]
            if outside.size:
                return float(np.min(self.dist(np.int64(i), outside))) if cap is None else min(
                    float(np.min(self.dist(np.int64(i), outside))), cap)
            if cap is not None and r >= cap:
                return cap
            if cand.size == self.n:
                return math.inf
            r *= 2.0

    def rescaled(self, factors_scale) -> "ProductSpace":
        """Same points with every factor distance multiplied by ``factors_scale[f]``."""
        return ProductSpace(self.factors, self.scales * np.asarray(factors_scale, dtype=float))

    def spec(self) -> dict:
        return {"kind": "product", "factors": [f.spec() for f in self.factors],
                "scales": self.scales.tolist()}


def _initial_radius(space: ProductSpace) -> float:
    r = math.inf
    for f, fac in enumerate(space.factors):
        if fac.n > 1:
            r = min(r, space.scales[f] * float(np.min(fac.dist(np.int64(0), np.arange(1, fac.n)))))
    return r if math.isfinite(r) and r > 0 else 1.0


def _isin_sorted(values: np.ndarray, sorted_arr: np.ndarray) -> np.ndarray:
    if sorted_arr.size == 0:
        return np.zeros(values.shape, dtype=bool)
    pos = np.searchsorted(sorted_arr, values)
    pos = np.minimum(pos, sorted_arr.size - 1)
    return sorted_arr[pos] == values


def make_product(factors, scales=None, cap: int = DEFAULT_PRODUCT_CAP) -> ProductSpace:
    return ProductSpace(factors, scales, cap=cap)


def _check_index(space, *pts):
    for p in pts:
        if not (0 <= int(p) < space.n):
            raise IndexError(f"point {p} out of range for space of size {space.n}")


def gromov_product(space, o: int, x: int, y: int) -> float:
    """``(x|y)_o = (|xo| + |yo| - |xy|) / 2``."""
    _check_index(space, o, x, y)
    d = lambda a, b: float(space.dist(np.int64(a), np.int64(b)))
    return 0.5 * (d(x, o) + d(y, o) - d(x, y))


@dataclass(frozen=True)
class HyperbolicityReport:
    delta: float
    witness: tuple  # (o, x, y, z)


def _fixed_base_delta(D: np.ndarray, o: int) -> tuple[float, tuple]:
    G = 0.5 * (D[:, o][:, None] + D[o, :][None, :] - D)
    n = D.shape[0]
    best, wit = 0.0, (o, o, o, o)
    for x in range(n):
        # M[z, y] = min((x|z), (z|y)); maximise over z
        M = np.minimum(G[x][:, None], G)
        zs = np.argmax(M, axis=0)
        defect = M[zs, np.arange(n)] - G[x]
        y = int(np.argmax(defect))
        if defect[y] > best + 1e-15:
            best, wit = float(defect[y]), (o, x, y, int(zs[y]))
    return best, wit


def hyperbolicity_delta(space, base: int | None = None) -> HyperbolicityReport:
    """Minimal delta with ``(x|y)_o >= min((x|z)_o, (z|y)_o) - delta`` over all quadruples.

    With ``base`` set only that base point is scanned (O(n^3)); otherwise every base
    point is (O(n^4)).  The witness is the first maximiser in (o, x, y, z) order.
    """
    D = np.asarray(space.materialize().matrix)
    if base is not None:
        _check_index(space, base)
        delta, wit = _fixed_base_delta(D, int(base))
        return HyperbolicityReport(delta, wit)
    best, wit = 0.0, (0, 0, 0, 0)
    for o in range(D.shape[0]):
        d, w = _fixed_base_delta(D, o)
        if d > best + 1e-15:
            best, wit = d, w
    return HyperbolicityReport(best, wit)


def space_from_spec(spec: dict):
    """Rebuild a space from :meth:`spec` output (or the plain matrix file format)."""
    kind = spec.get("kind", "matrix")
    if kind == "matrix" or "matrix" in spec:
        return FiniteMetricSpace(spec["matrix"], spec.get("labels"))
    if kind == "line":
        return LineSpace(spec["coords"], spec.get("labels"))
    if kind == "product":
        return ProductSpace([space_from_spec(f) for f in spec["factors"]], spec["scales"])
    if kind == "cone":
        from .cone import HyperbolicCone
        return HyperbolicCone(space_from_spec(spec["base"]), spec["radii"])
    raise MetricError(f"unknown space kind {kind!r}")
