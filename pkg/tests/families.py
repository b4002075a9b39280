"""Random separated and qualified scale families on a line-by-strip product."""
import numpy as np

from hypcover.covering import ColoredCovering, box_neighborhood
from hypcover.gluing import Piece, ScaleFamily, check_qualified, check_separated, declared_boxes
from hypcover.metric import LineSpace, make_product

# interval width and overlap per scale; scale 0 uses singletons
WIDTHS = {1: (3, 2), 2: (13, 8), 3: (80, 60)}


def _intervals(lo, hi, width, overlap, n, offset):
    step = width - overlap
    start = lo - offset
    out = []
    while start <= hi:
        a, b = max(start, 0), min(start + width - 1, n - 1)
        out.append((a, b))
        start += step
    return out


def random_family(rng, n_line=None, strip=2, max_scale=3, colors=None):
    n_line = n_line or int(rng.integers(60, 240))
    m = colors or int(rng.integers(1, 5))
    line = LineSpace(np.arange(n_line, dtype=float))
    fiber = LineSpace(np.arange(strip) * 0.1)
    space = make_product([line, fiber])
    cuts = np.sort(rng.choice(np.arange(8, n_line - 8), size=int(rng.integers(1, 5)), replace=False))
    bounds = [0, *cuts.tolist(), n_line]
    pieces, prev = [], None
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        choices = [s for s in range(max_scale + 1) if s != prev and (s < 3 or hi - lo >= 40)]
        s = int(rng.choice(choices))
        prev = s
        rows = np.arange(lo, hi)
        target = (rows[:, None] * strip + np.arange(strip)[None, :]).ravel()
        if s == 0:
            members = [[int(z)] for z in target]
            cols = rng.integers(0, m, size=len(members)).tolist()
        else:
            w, o = WIDTHS[s]
            if m == 2:
                o = w // 2
            ivs = _intervals(lo, hi - 1, w, o, n_line, int(rng.integers(0, w - o)))
            members = [(np.arange(a, b + 1)[:, None] * strip + np.arange(strip)[None, :]).ravel() for a, b in ivs]
            k = int(rng.integers(0, m))
            # consecutive intervals overlap, so neighbors get distinct colors
            cols = [(k + i) % m for i in range(len(members))]
        cov = ColoredCovering(space, target, members, cols, m)
        if cov.color_clash() is not None or cov.uncovered().size:
            return None
        leb, mesh = declared_boxes(cov, points=target)
        pieces.append(Piece(target, cov, s, leb, mesh))
    fam = ScaleFamily(space, pieces, m)
    if not check_separated(fam) or not check_qualified(fam):
        return None
    return fam


def family_stream(seed, count, **kw):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        fam = random_family(rng, **kw)
        if fam is not None:
            out.append(fam)
    return out


def interval_covering(space, rows, width, depth, m, rng, fiber=1):
    """Sliding windows over ``rows`` (line indices) with ``depth``-fold overlap, colors cycled mod ``m``.

    On a product with a fiber of ``fiber`` points every window is crossed with the whole fiber.
    Windows ``i`` and ``j`` meet only when ``|i - j| < depth``, so ``m >= depth`` keeps colors disjoint.
    """
    rows = np.asarray(rows)
    step = max(1, -(-width // depth))
    start = -int(rng.integers(0, step))
    members = []
    while start < rows.size:
        a, b = max(start, 0), min(start + width, rows.size)
        idx = rows[a:b]
        members.append((idx[:, None] * fiber + np.arange(fiber)[None, :]).ravel())
        start += step
    k = int(rng.integers(0, m))
    colors = [(k + i) % m for i in range(len(members))]
    target = (rows[:, None] * fiber + np.arange(fiber)[None, :]).ravel()
    return ColoredCovering(space, np.sort(target), [np.sort(u) for u in members], colors, m)


def random_line(rng, n):
    """Sorted random coordinates with gaps in ``[0.5, 1.5]``."""
    return LineSpace(np.cumsum(rng.uniform(0.5, 1.5, n)))
