"""Small helpers shared by the pipelines: crossing coverings with whole factors."""
from __future__ import annotations

import numpy as np

from ..covering import ColoredCovering
from ..metric import ProductSpace


def cross_members(space: ProductSpace, used: list, sub_shape: tuple, members: list) -> list:
    """Members of a covering of the product of factors ``used``, crossed with all other factors."""
    rest = [f for f in range(space.k) if f not in used]
    grids = np.meshgrid(*[np.arange(space.shape[f]) for f in rest], indexing="ij") if rest else []
    rest_flat = [g.ravel() for g in grids]
    cnt = rest_flat[0].size if rest else 1
    out = []
    for m in members:
        sc = np.unravel_index(np.asarray(m, dtype=np.int64), sub_shape)
        coords = [None] * space.k
        for j, f in enumerate(used):
            coords[f] = np.repeat(sc[j], cnt)
        for j, f in enumerate(rest):
            coords[f] = np.tile(rest_flat[j], len(m))
        out.append(np.sort(space.index(coords)))
    return out


def cross_total(space: ProductSpace, used: list, sub: ColoredCovering) -> ColoredCovering:
    """Lift a covering of the product of factors ``used`` to ``space`` by crossing with the rest."""
    sub_shape = tuple(space.shape[f] for f in used)
    members = cross_members(space, used, sub_shape, sub.members)
    target = cross_members(space, used, sub_shape, [sub.target])[0]
    return ColoredCovering(space, target, members, list(sub.colors), sub.color_count, dict(sub.meta))


def product_members(space: ProductSpace, factor_sets: list) -> np.ndarray:
    """Flat indices of the product of one index set per factor."""
    grids = np.meshgrid(*[np.asarray(s, dtype=np.int64) for s in factor_sets], indexing="ij")
    return np.sort(space.index([g.ravel() for g in grids]))
