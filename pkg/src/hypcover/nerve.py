"""Nerves, barycentric maps and the barycentric triangulation of products of simplices.

Complexes are abstract: a vertex count plus maximal simplices (sorted tuples).  The
geometric realization is always the standard one, vertex ``j`` at the basis vector
``e_j``, which makes every complex uniform.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .covering import ColoredCovering, CoveringError, box_lebesgue_sup, closed_fit
from .metric import ProductSpace, make_product

COORD_TOL = 1e-12


@dataclass
class SimplicialComplex:
    n_vertices: int
    maximal: list
    vertex_colors: list | None = None
    labels: list | None = None

    def __post_init__(self):
        tops = {tuple(sorted(set(s))) for s in self.maximal if len(s)}
        # drop simplices that are faces of others
        tops = sorted(tops, key=lambda s: (-len(s), s))
        kept = []
        for s in tops:
            ss = set(s)
            if not any(ss <= set(t) for t in kept):
                kept.append(s)
        self.maximal = sorted(kept)

    @property
    def dim(self) -> int:
        return max((len(s) for s in self.maximal), default=0) - 1

    def simplices(self) -> set:
        out = set()
        for s in self.maximal:
            for r in range(1, len(s) + 1):
                out.update(itertools.combinations(s, r))
        return out

    def is_simplex(self, verts) -> bool:
        vs = set(verts)
        return any(vs <= set(t) for t in self.maximal)

    def to_json(self) -> dict:
        return {"vertices": self.n_vertices, "simplices": [list(s) for s in self.maximal]}


def nerve(cov: ColoredCovering) -> SimplicialComplex:
    """Vertices are members; a set of members spans a simplex iff they share a point."""
    _reject_total(cov)
    indptr, ids = cov.point_members()
    sets = {tuple(sorted(ids[indptr[z]:indptr[z + 1]].tolist())) for z in range(cov.space.n)
            if indptr[z + 1] > indptr[z]}
    return SimplicialComplex(len(cov.members), list(sets))


def _reject_total(cov: ColoredCovering) -> None:
    for i, m in enumerate(cov.members):
        if m.size == cov.space.n:
            raise CoveringError(f"member {i} is the whole space")


# -- barycentric map ------------------------------------------------------------------

@dataclass
class BarycentricCoords:
    """Sparse rows: point ``points[r]`` has weights ``weights[indptr[r]:indptr[r+1]]`` on members ``ids``."""

    points: np.ndarray
    indptr: np.ndarray
    ids: np.ndarray
    weights: np.ndarray
    q: np.ndarray

    def row(self, r: int):
        sl = slice(self.indptr[r], self.indptr[r + 1])
        return self.ids[sl], self.weights[sl]

    def dense(self, n_members: int) -> np.ndarray:
        out = np.zeros((self.points.size, n_members))
        rows = np.repeat(np.arange(self.points.size), np.diff(self.indptr))
        out[rows, self.ids] = self.weights
        return out


def barycentric_coords(cov: ColoredCovering, points=None) -> BarycentricCoords:
    """``p_j(z) = q_j(z) / sum q(z)`` with ``q_j(z) = dist(z, Z \\ U_j)``."""
    _reject_total(cov)
    points = cov.target if points is None else np.asarray(points, dtype=np.int64)
    space = cov.space
    indptr = [0]
    ids, qs = [], []
    for z in points:
        here = cov.members_at(int(z))
        if here.size == 0:
            raise CoveringError(f"point {int(z)} is not covered")
        q = np.array([space.dist_to_complement(int(z), cov.members[j]) for j in here])
        ids.append(here)
        qs.append(q)
        indptr.append(indptr[-1] + here.size)
    ids = np.concatenate(ids) if ids else np.zeros(0, np.int64)
    q = np.concatenate(qs) if qs else np.zeros(0)
    indptr = np.asarray(indptr)
    sums = np.add.reduceat(q, indptr[:-1]) if q.size else np.zeros(0)
    w = q / np.repeat(sums, np.diff(indptr))
    return BarycentricCoords(points, indptr, ids, w, q)


def barycentric_map(cov: ColoredCovering, z: int) -> np.ndarray:
    """Dense nerve coordinates of one point."""
    bc = barycentric_coords(cov, [z])
    return bc.dense(len(cov.members))[0]


def lipschitz_ratio(cov: ColoredCovering, pairs=None, rng=None, n_pairs: int = 2000):
    """Largest ``|p(z) - p(z')|_1 / |zz'|`` over the given (or sampled) pairs."""
    bc = barycentric_coords(cov)
    P = bc.dense(len(cov.members))
    pts = bc.points
    if pairs is None:
        if pts.size <= 80:
            a, b = np.triu_indices(pts.size, 1)
        else:
            rng = np.random.default_rng(0) if rng is None else rng
            a = rng.integers(0, pts.size, n_pairs)
            b = rng.integers(0, pts.size, n_pairs)
            keep = a != b
            a, b = a[keep], b[keep]
    else:
        a, b = np.asarray(pairs).T
    d = np.array([cov.space.dist(int(pts[i]), int(pts[j])) for i, j in zip(a, b)])
    num = np.abs(P[a] - P[b]).sum(axis=1)
    ok = d > 0
    return float(np.max(num[ok] / d[ok])) if ok.any() else 0.0


def lipschitz_bound(multiplicity: int, lebesgue: float) -> float:
    """``(m + 2)^2 / d`` where the multiplicity is ``m + 1``."""
    m = multiplicity - 1
    return (m + 2) ** 2 / lebesgue


# -- barycentric subdivision --------------------------------------------------------

def _maximal_chains(top, children):
    out = []

    def walk(chain):
        kids = children(chain[-1])
        if not kids:
            out.append(tuple(chain))
            return
        for k in kids:
            walk(chain + [k])

    for t in top:
        walk([t])
    return out


def barycentric_subdivision(K: SimplicialComplex) -> SimplicialComplex:
    """Vertices are the simplices of ``K``; simplices are chains; colored by dimension."""
    faces = sorted(K.simplices(), key=lambda s: (len(s), s))
    index = {f: i for i, f in enumerate(faces)}

    def children(f):
        if len(f) == 1:
            return []
        return [f[:i] + f[i + 1:] for i in range(len(f))]

    chains = _maximal_chains(K.maximal, children)
    maximal = [tuple(index[f] for f in c) for c in chains]
    return SimplicialComplex(len(faces), maximal, vertex_colors=[len(f) - 1 for f in faces], labels=faces)


# -- product triangulation ------------------------------------------------------------

@dataclass
class BarycentricProductComplex:
    """Faces ``S1 x S2`` of ``K1 x K2``; simplices are chains under double inclusion."""

    K1: SimplicialComplex
    K2: SimplicialComplex
    faces: list = field(init=False)
    index: dict = field(init=False)
    _chains: list | None = field(default=None, init=False)

    def __post_init__(self):
        f1 = sorted(self.K1.simplices(), key=lambda s: (len(s), s))
        f2 = sorted(self.K2.simplices(), key=lambda s: (len(s), s))
        self.faces = [(a, b) for a in f1 for b in f2]
        self.index = {f: i for i, f in enumerate(self.faces)}

    @property
    def n_vertices(self) -> int:
        return len(self.faces)

    def color(self, v: int) -> int:
        a, b = self.faces[v]
        return len(a) - 1 + len(b) - 1

    @property
    def color_count(self) -> int:
        return self.K1.dim + self.K2.dim + 1

    def maximal_chains(self) -> list:
        if self._chains is None:
            def children(f):
                a, b = f
                out = [(a[:i] + a[i + 1:], b) for i in range(len(a))] if len(a) > 1 else []
                out += [(a, b[:i] + b[i + 1:]) for i in range(len(b))] if len(b) > 1 else []
                return out

            tops = [(a, b) for a in self.K1.maximal for b in self.K2.maximal]
            self._chains = [tuple(self.index[f] for f in c) for c in _maximal_chains(tops, children)]
        return self._chains

    def as_complex(self) -> SimplicialComplex:
        return SimplicialComplex(self.n_vertices, self.maximal_chains(),
                                 vertex_colors=[self.color(v) for v in range(self.n_vertices)])

    def barycenter(self, v: int, n1: int, n2: int) -> np.ndarray:
        a, b = self.faces[v]
        x = np.zeros(n1 + n2)
        x[list(a)] = 1.0 / len(a)
        x[[n1 + j for j in b]] = 1.0 / len(b)
        return x


def product_complex(K1: SimplicialComplex, K2: SimplicialComplex) -> BarycentricProductComplex:
    return BarycentricProductComplex(K1, K2)


def _support(x: np.ndarray) -> tuple:
    return tuple(np.flatnonzero(x > COORD_TOL).tolist())


def peel(a: np.ndarray, b: np.ndarray):
    """Radial peeling of ``(a, b)`` in a product of simplices.

    Returns the chain of faces ``(S1, S2)`` (largest first) and the convex weights on
    their barycenters.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < -1e-9) or np.any(b < -1e-9) or abs(a.sum() - 1) > 1e-9 or abs(b.sum() - 1) > 1e-9:
        raise ValueError("point lies outside the product of simplices")
    x = np.concatenate([np.clip(a, 0, None), np.clip(b, 0, None)])
    n1 = a.size
    chain, weights = [], []
    remaining = 1.0
    while True:
        s1 = _support(x[:n1])
        s2 = _support(x[n1:])
        c = np.zeros_like(x)
        c[list(s1)] = 1.0 / len(s1)
        c[[n1 + j for j in s2]] = 1.0 / len(s2)
        chain.append((s1, s2))
        diff = c - x
        below = diff > COORD_TOL
        if not below.any() or (len(s1) == 1 and len(s2) == 1):
            weights.append(remaining)
            break
        # exit parameter of the ray c + s (x - c) through the boundary of the face
        s_star = float(np.min(c[below] / diff[below]))
        if s_star <= 1.0 + 1e-15:
            weights.append(remaining)
            break
        w = 1.0 - 1.0 / s_star
        weights.append(remaining * w)
        remaining *= 1.0 / s_star
        y = c + s_star * (x - c)
        y[below & (np.abs(y) < 1e-9)] = 0.0
        y[np.abs(y) < COORD_TOL] = 0.0
        # renormalize each block against drift
        y[:n1] /= y[:n1].sum()
        y[n1:] /= y[n1:].sum()
        x = y
    return chain, np.asarray(weights)


def triangulation_map(P: BarycentricProductComplex, a, b):
    """``phi``: chain vertex ids and their weights in the uniformized product complex."""
    chain, w = peel(a, b)
    ids = []
    for s1, s2 in chain:
        key = (s1, s2)
        if key not in P.index:
            raise ValueError(f"face {key} is not in the product complex")
        ids.append(P.index[key])
    keep = w > 0
    return np.asarray(ids)[keep], w[keep]


def triangulation_inverse(P: BarycentricProductComplex, ids, weights, n1: int, n2: int) -> np.ndarray:
    x = np.zeros(n1 + n2)
    for v, w in zip(ids, weights):
        x += w * P.barycenter(int(v), n1, n2)
    return x


def uniform_point(ids, weights, n_vertices: int) -> np.ndarray:
    y = np.zeros(n_vertices)
    y[np.asarray(ids, dtype=np.int64)] = weights
    return y


def bilipschitz_constants(P: BarycentricProductComplex, samples_a: np.ndarray, samples_b: np.ndarray,
                          rng=None, n_pairs: int = 20000):
    """Measured ``(Lip phi, Lip phi^-1)`` (Euclidean norms) over sampled point pairs.

    Half the pairs are random, half are close pairs obtained by small perturbations.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n1, n2 = samples_a.shape[1], samples_b.shape[1]
    X = np.hstack([samples_a, samples_b])
    Y = np.array([uniform_point(*triangulation_map(P, a, b), P.n_vertices) for a, b in zip(samples_a, samples_b)])
    k = X.shape[0]
    i = rng.integers(0, k, n_pairs)
    j = rng.integers(0, k, n_pairs)
    dx = np.linalg.norm(X[i] - X[j], axis=1)
    dy = np.linalg.norm(Y[i] - Y[j], axis=1)
    keep = (dx > 1e-12) & (dy > 1e-12)
    fwd = [float(np.max(dy[keep] / dx[keep]))] if keep.any() else [0.0]
    bwd = [float(np.max(dx[keep] / dy[keep]))] if keep.any() else [0.0]
    # close pairs
    m = min(k, 2000)
    for r in range(m):
        eps = 1e-3
        a2 = _perturb(samples_a[r], rng, eps)
        b2 = _perturb(samples_b[r], rng, eps)
        x2 = np.concatenate([a2, b2])
        y2 = uniform_point(*triangulation_map(P, a2, b2), P.n_vertices)
        ddx = np.linalg.norm(X[r] - x2)
        ddy = np.linalg.norm(Y[r] - y2)
        if ddx > 0 and ddy > 0:
            fwd.append(ddy / ddx)
            bwd.append(ddx / ddy)
    return float(max(fwd)), float(max(bwd))


def _perturb(a, rng, eps):
    """Move within the support face of ``a`` (keeps the point in the same closed face)."""
    s = a > COORD_TOL
    d = np.zeros_like(a)
    d[s] = rng.normal(size=int(s.sum()))
    d[s] -= d[s].mean()
    nrm = np.linalg.norm(d)
    if nrm == 0:
        return a.copy()
    d *= eps / nrm
    out = a + d
    if np.any(out[s] < 0):
        t = np.min(a[s][d[s] < 0] / -d[s][d[s] < 0]) if np.any(d[s] < 0) else 1.0
        out = a + 0.5 * min(t, 1.0) * d
    return out


def random_simplex_points(rng, n: int, count: int, face_prob: float = 0.3) -> np.ndarray:
    """Uniform points in ``Delta^(n-1)``; a fraction lands on random proper faces."""
    x = rng.dirichlet(np.ones(n), size=count)
    if n > 1:
        hit = rng.random(count) < face_prob
        for r in np.flatnonzero(hit):
            k = int(rng.integers(1, n))
            drop = rng.choice(n, size=n - k, replace=False)
            x[r, drop] = 0.0
            x[r] /= x[r].sum()
    return x


# -- product coverings ------------------------------------------------------------

@dataclass
class ProductCoveringResult:
    covering: ColoredCovering
    q: float
    lebesgue: tuple
    rescale: float
    complex: BarycentricProductComplex


def _embed_simplex(ids, weights, n):
    x = np.zeros(n)
    x[ids] = weights
    return x


def product_covering(U1: ColoredCovering, U2: ColoredCovering, space: ProductSpace | None = None,
                     measure: bool = True) -> ProductCoveringResult:
    """Colored covering of ``X1 x X2`` pulled back from the open stars of the product triangulation.

    A point ``(x1, x2)`` joins the member of vertex ``v`` when ``v`` carries positive
    weight in ``phi(p1(x1), p2(x2))``; colors are ``dim S1 + dim S2``.  The barycentric
    maps are scale invariant, so the rescaling that balances the two Lebesgue numbers
    only enters the constants, which are measured: ``q`` is the largest factor with
    closed boxes of radii ``q (L1, L2)`` inside members at every point.
    """
    for U in (U1, U2):
        if not U.members:
            raise CoveringError("empty covering")
    space = make_product([U1.space, U2.space]) if space is None else space
    n1 = int(U1.counts().max()) - 1
    n2 = int(U2.counts().max()) - 1
    K1, K2 = nerve(U1), nerve(U2)
    P = product_complex(K1, K2)
    b1 = barycentric_coords(U1)
    b2 = barycentric_coords(U2)
    J1, J2 = len(U1.members), len(U2.members)
    A = [_embed_simplex(*b1.row(r), J1) for r in range(b1.points.size)]
    B = [_embed_simplex(*b2.row(r), J2) for r in range(b2.points.size)]
    n_second = U2.space.n
    buckets: dict[int, list] = {}
    for r1, x1 in enumerate(b1.points):
        for r2, x2 in enumerate(b2.points):
            ids, _ = triangulation_map(P, A[r1], B[r2])
            z = int(x1) * n_second + int(x2)
            for v in ids:
                buckets.setdefault(int(v), []).append(z)
    verts = sorted(buckets)
    members = [np.asarray(sorted(buckets[v]), dtype=np.int64) for v in verts]
    colors = [P.color(v) for v in verts]
    target = (b1.points[:, None] * n_second + b2.points[None, :]).ravel()
    cov = ColoredCovering(space, target, members, colors, n1 + n2 + 1,
                          {"construction": "product", "vertices": verts})
    L1 = _lebesgue(U1)
    L2 = _lebesgue(U2)
    rescale = ((n2 + 2) ** 2 / (n1 + 2) ** 2) * L1 / L2
    q = float("nan")
    if measure:
        t = box_lebesgue_sup(cov, (L1 * space.scales[0], L2 * space.scales[1]))
        q = closed_fit(float(t.min())) if t.size else float("inf")
    return ProductCoveringResult(cov, q, (L1, L2), rescale, P)


def _lebesgue(U: ColoredCovering) -> float:
    from .covering import pointwise_lebesgue
    pw = pointwise_lebesgue(U)
    return float(pw.min()) if pw.size else math.inf


def iterated_product_covering(coverings: list) -> tuple:
    """``W_i = W_(i-1) * U_i`` over several factors; returns the covering on the flat product and all ``q``."""
    W = coverings[0]
    qs = []
    factors = [coverings[0].space]
    for U in coverings[1:]:
        res = product_covering(W, U)
        qs.append(res.q)
        factors.append(U.space)
        flat = make_product(factors)
        W = res.covering.on_space(flat)
    return W, qs
