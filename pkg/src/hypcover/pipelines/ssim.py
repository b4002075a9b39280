"""Anisotropic coverings of ``X x Y`` for a self-similar factor ``X``.

A coarse covering ``V''`` of ``X`` at scale ``alpha`` cuts ``X x Y`` into slabs
``V x Y``.  Each slab is blown up along ``X`` by a quasi-homothety of coefficient about
``1 / alpha``, covered there by a fixed isotropic covering of ``X x Y``, and pulled
back.  Slabs of the ``a``-th color use the covering at scale ``(delta'/4 lambda^2)^a``;
gluing them gives ``mesh^x <= (alpha tau, tau)`` and ``L^x >= delta (alpha tau, tau)``
with ``delta`` independent of ``alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..covering import BoxBound, ColoredCovering, CoveringError, box_lebesgue_check, box_mesh, neighborhood
from ..gluing import Piece, ScaleFamily, declared_boxes, glue
from ..metric import LineSpace, ProductSpace


@dataclass
class QuasiHomothety:
    """A map ``domain[i] -> image[i]`` between index sets of two spaces."""

    source: object
    target: object
    domain: np.ndarray
    image: np.ndarray
    coefficient: float
    lam: float = 1.0

    def check(self) -> float:
        """Smallest ``lambda`` making the map ``lambda``-quasi-homothetic; raises above ``self.lam``."""
        d = self.source.rows(self.domain)[:, self.domain]
        e = self.target.rows(self.image)[:, self.image]
        iu = np.triu_indices(self.domain.size, 1)
        d, e = d[iu], e[iu]
        if d.size == 0:
            return 1.0
        if np.any(d <= 0):
            raise CoveringError("domain has repeated points")
        ratio = e / (self.coefficient * d)
        worst = float(max(ratio.max(), 1.0 / ratio.min()))
        if worst > self.lam * (1 + 1e-9):
            raise CoveringError(f"map is only {worst}-quasi-homothetic, {self.lam} required")
        return worst


def affine_homothety(X: LineSpace, member: np.ndarray, coefficient: float) -> QuasiHomothety:
    """``x -> coefficient (x - left end)`` on ``member``; every image must be a sample point."""
    xs = X.coords
    left = float(xs[member].min())
    img = coefficient * (xs[member] - left)
    pos = np.searchsorted(X._sorted, img)
    pos = np.clip(pos, 0, X.n - 1)
    alt = np.clip(pos - 1, 0, X.n - 1)
    pick = np.where(np.abs(X._sorted[alt] - img) < np.abs(X._sorted[pos] - img), alt, pos)
    if np.max(np.abs(X._sorted[pick] - img)) > 1e-9 * max(1.0, coefficient):
        raise CoveringError("cylinder image is not a set of sample points")
    return QuasiHomothety(X, X, np.asarray(member), X._order[pick], coefficient, 1.0)


@dataclass
class SsimResult:
    covering: ColoredCovering
    alpha: float
    tau: float
    delta: float
    delta_prime: float
    lam: float
    slabs: int
    meta: dict = field(default_factory=dict)

    def bounds(self) -> tuple:
        w = (1.0, self.alpha) if self.meta.get("swapped") else (self.alpha, 1.0)
        mesh = BoxBound((w[0] * self.tau, w[1] * self.tau), "mesh")
        return mesh, mesh.scaled(self.delta)

    def verify(self) -> dict:
        mesh, leb = self.bounds()
        measured = box_mesh(self.covering)
        return {"mesh_ok": bool(measured <= mesh), "lebesgue_ok": bool(box_lebesgue_check(self.covering, leb).all()),
                "colors": self.covering.color_count, "mesh": list(measured.radii), "lebesgue_box": list(leb.radii)}


def ssim_covering(Z: ProductSpace, coarse: ColoredCovering, fine: list, alpha: float, tau: float,
                  delta_prime: float, homothety, lam: float = 1.0) -> SsimResult:
    """Glue pulled-back copies of isotropic coverings of ``Z = X x Y`` over the slabs of ``coarse``.

    ``coarse`` is an ``(N+1)``-colored covering of ``X`` with mesh at most ``alpha / lam``
    and Lebesgue number at least ``delta_prime alpha / lam``.  ``fine[a]`` covers ``Z``
    with mesh at most ``s_a tau / 4`` and Lebesgue number at least ``delta_prime s_a tau
    / 4``, ``s_a = (delta_prime / 4 lam^2)^a``.  ``homothety(X, member, R)`` returns a
    quasi-homothety of coefficient ``R = lam / alpha`` defined on ``member``.
    """
    X, Y = Z.factors
    if Z.k != 2 or coarse.space is not X and coarse.space.key() != X.key():
        raise CoveringError("coarse covering must live on the first factor")
    if not 0 < alpha <= 1:
        raise CoveringError("alpha must lie in (0, 1]")
    if not tau < min(delta_prime / lam, Y.diameter(np.arange(Y.n))):
        raise CoveringError("tau must stay below delta'/lambda and diam Y")
    N = coarse.color_count - 1
    R = lam / alpha
    shrink_by = delta_prime * alpha / (2 * lam)
    all_y = np.arange(Y.n)
    pieces = []
    n_colors = max(f.color_count for f in fine)
    for V, a in zip(coarse.members, coarse.colors):
        if a >= len(fine):
            raise CoveringError(f"no fine covering for color {a}")
        # V' = B_{-shrink}(V x Y) in Z; only the X factor matters since the slab is full in Y
        Vp = neighborhood(X, V, -shrink_by) if V.size < X.n else V
        if Vp.size == 0:
            continue
        f = homothety(X, V, R)
        f.check()
        inv = np.full(X.n, -1, dtype=np.int64)
        inv[f.image] = f.domain
        fine_a = fine[a]
        gx, gy = np.meshgrid(f.image[np.isin(f.domain, Vp)], all_y, indexing="ij")
        tilde_V = np.sort(Z.index([gx.ravel(), gy.ravel()]))
        pulled, colors = [], []
        for U, col in zip(fine_a.members, fine_a.colors):
            if not np.intersect1d(U, tilde_V, assume_unique=True).size:
                continue
            ux, uy = Z.coords(U)
            px = inv[ux]
            keep = px >= 0
            pulled.append(np.sort(Z.index([px[keep], uy[keep]])))
            colors.append(col)
        gx, gy = np.meshgrid(Vp, all_y, indexing="ij")
        target = np.sort(Z.index([gx.ravel(), gy.ravel()]))
        cov = ColoredCovering(Z, target, pulled, colors, n_colors)
        leb_box, mesh_box = declared_boxes(cov, points=target, weights=(alpha, 1.0))
        pieces.append(Piece(target, cov, N - a, leb_box, mesh_box))
    family = ScaleFamily(Z, pieces, n_colors)
    W = glue(family).covering
    delta = (delta_prime / (4 * lam ** 2)) ** (N + 1) / 2
    return SsimResult(W, alpha, tau, delta, delta_prime, lam, len(pieces),
                      {"construction": "self-similar", "N": N})


def cantor_slabs(X: LineSpace, alpha: float) -> ColoredCovering:
    """Cantor cylinders of length ``alpha`` (a power of 1/3) as a one-colored covering."""
    level = int(round(-math.log(alpha) / math.log(3)))
    if abs(3.0 ** -level - alpha) > 1e-12:
        raise CoveringError("alpha must be a power of 1/3")
    key = np.floor(X.coords * 3 ** level + 1e-9).astype(np.int64)
    members = [np.flatnonzero(key == k) for k in np.unique(key)]
    return ColoredCovering(X, np.arange(X.n), members, [0] * len(members), 1,
                           {"construction": "cylinders", "level": level})


def cylinder_covering(Z: ProductSpace, level: int) -> ColoredCovering:
    """Products of Cantor cylinders of one level: a one-colored covering of ``X x Y``."""
    X, Y = Z.factors
    kx = np.floor(X.coords * 3 ** level + 1e-9).astype(np.int64)
    ky = np.floor(Y.coords * 3 ** level + 1e-9).astype(np.int64)
    members = []
    for a in np.unique(kx):
        for b in np.unique(ky):
            gx, gy = np.meshgrid(np.flatnonzero(kx == a), np.flatnonzero(ky == b), indexing="ij")
            members.append(np.sort(Z.index([gx.ravel(), gy.ravel()])))
    return ColoredCovering(Z, np.arange(Z.n), members, [0] * len(members), 1,
                           {"construction": "cylinders", "level": level})


def swap_covering(cov: ColoredCovering, swapped: ProductSpace) -> ColoredCovering:
    """The same covering of ``X x Y`` read on ``Y x X``."""
    Z = cov.space
    def move(idx):
        a, b = Z.coords(idx)
        return np.sort(swapped.index([b, a]))
    return ColoredCovering(swapped, move(cov.target), [move(m) for m in cov.members], list(cov.colors),
                           cov.color_count, dict(cov.meta))


def ssim_covering_beta(Z: ProductSpace, coarse_y: ColoredCovering, fine: list, beta: float, tau: float,
                       delta_prime: float, homothety, lam: float = 1.0) -> SsimResult:
    """The ``(tau, beta tau)`` variant: run the construction on ``Y x X`` and swap back."""
    X, Y = Z.factors
    W = ProductSpace([Y, X], [Z.scales[1], Z.scales[0]])
    res = ssim_covering(W, coarse_y, [swap_covering(f, W) for f in fine], beta, tau, delta_prime, homothety, lam)
    res.covering = swap_covering(res.covering, Z)
    res.meta["swapped"] = True
    return res
