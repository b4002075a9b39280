"""Gluing coverings of pieces at several scales into one colored covering.

Each piece ``Z_a`` of a product space carries an ``m``-colored covering, a scale in
``{0..N}`` and two fixed boxes: one dominating its mesh and one its Lebesgue number.
Same-scale pieces must have disjoint members (separated) and a fine piece touching a
coarser one must fit four times over into the coarser Lebesgue box (qualified).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covering import (TOL, BoxBound, ColoredCovering, CoveringError, as_index_set, box_lebesgue_check,
                       box_mesh, box_neighborhood)
from .metric import ProductSpace


@dataclass
class Piece:
    target: np.ndarray
    covering: ColoredCovering
    scale: int
    lebesgue_box: BoxBound
    mesh_box: BoxBound

    def __post_init__(self):
        self.target = as_index_set(self.target)


@dataclass
class ScaleFamily:
    space: ProductSpace
    pieces: list
    color_count: int
    meta: dict = field(default_factory=dict)

    @property
    def top_scale(self) -> int:
        return max((p.scale for p in self.pieces), default=0)

    def validate(self) -> None:
        """Check the declared boxes against the coverings they describe."""
        for a, p in enumerate(self.pieces):
            if p.scale < 0:
                raise CoveringError(f"piece {a}: negative scale")
            if p.covering.space is not self.space and p.covering.space.key() != self.space.key():
                raise CoveringError(f"piece {a}: covering lives in another space")
            if p.covering.color_count != self.color_count:
                raise CoveringError(f"piece {a}: color count {p.covering.color_count} != {self.color_count}")
            if not np.all(np.isin(p.target, p.covering.target)):
                raise CoveringError(f"piece {a}: covering target misses part of the piece")
            ok = box_lebesgue_check(p.covering, p.lebesgue_box, points=p.target)
            if not ok.all():
                bad = int(p.target[np.flatnonzero(~ok)[0]])
                raise CoveringError(f"piece {a}: declared Lebesgue box fails at point {bad}")
            if not box_mesh(p.covering) <= p.mesh_box:
                raise CoveringError(f"piece {a}: declared mesh box {p.mesh_box.radii} too small")


@dataclass(frozen=True)
class FamilyReport:
    ok: bool
    violations: list

    def __bool__(self):
        return self.ok


def _piece_cover(space, piece: Piece) -> np.ndarray:
    return np.unique(np.concatenate(piece.covering.members)) if piece.covering.members else np.zeros(0, np.int64)


def check_separated(family: ScaleFamily) -> FamilyReport:
    """Members of distinct pieces at the same scale must be disjoint."""
    n = family.space.n
    violations = []
    for s in sorted({p.scale for p in family.pieces}):
        owner = np.full(n, -1, dtype=np.int64)
        where = np.full(n, -1, dtype=np.int64)
        for a, p in enumerate(family.pieces):
            if p.scale != s:
                continue
            for i, m in enumerate(p.covering.members):
                prev = owner[m]
                hit = np.flatnonzero((prev >= 0) & (prev != a))
                for h in hit[:1]:
                    z = int(m[h])
                    violations.append(((int(prev[h]), int(where[z])), (a, i), z))
                owner[m] = a
                where[m] = i
    return FamilyReport(not violations, violations)


def check_qualified(family: ScaleFamily) -> FamilyReport:
    """If pieces at scales ``i < i'`` touch, ``L_box(coarse) >= 4 mesh_box(fine)``."""
    covers = [_piece_cover(family.space, p) for p in family.pieces]
    # touching pairs from point incidences rather than all pairs of pieces
    pts = np.concatenate(covers) if covers else np.zeros(0, np.int64)
    owner = np.repeat(np.arange(len(covers)), [c.size for c in covers])
    order = np.lexsort((owner, pts))
    pts, owner = pts[order], owner[order]
    bounds = np.flatnonzero(np.diff(pts)) + 1
    pairs = set()
    for grp in np.split(owner, bounds):
        if grp.size > 1:
            pairs.update((int(a), int(b)) for k, a in enumerate(grp) for b in grp[k + 1:])
    violations = []
    for x, y in sorted(pairs):
        for a, b in ((x, y), (y, x)):
            p, q = family.pieces[a], family.pieces[b]
            if not p.scale < q.scale:
                continue
            need = p.mesh_box.scaled(4.0)
            if not q.lebesgue_box >= need:
                violations.append((a, b, q.lebesgue_box.radii, need.radii))
    return FamilyReport(not violations, violations)


@dataclass
class GlueResult:
    covering: ColoredCovering
    origins: list          # per output member: (piece, member) whose shrunk copy or original it grew from
    shrunk: list           # per piece: list of box-shrunk members (empty arrays kept for indexing)


def _shrink_piece(space, p: Piece) -> list:
    radii = [-r / 2.0 for r in p.lebesgue_box.radii]
    if any(r == 0 for r in radii):
        if not all(r == 0 for r in radii):
            raise CoveringError("a declared Lebesgue box with a zero radius cannot be halved uniformly")
        return list(p.covering.members)
    return [box_neighborhood(space, m, radii) for m in p.covering.members]


def glue(family: ScaleFamily, check: bool = True) -> GlueResult:
    """Glue a separated, qualified scale family.

    Members of scale 0 enter unchanged; coarser members enter box-shrunk by half their
    declared Lebesgue box.  Passing from scale ``j`` to ``j+1``, every current member
    meeting a shrunk scale-``(j+1)`` member of its color merges into it (that member is
    unique), all others carry over.
    """
    if check:
        family.validate()
        sep = check_separated(family)
        if not sep:
            raise CoveringError(f"family not separated: {sep.violations[:3]}")
        qual = check_qualified(family)
        if not qual:
            raise CoveringError(f"family not qualified: {qual.violations[:3]}")
    space = family.space
    n = space.n
    shrunk = [_shrink_piece(space, p) for p in family.pieces]
    for a, p in enumerate(family.pieces):
        lost = np.setdiff1d(p.target, np.concatenate(shrunk[a]) if shrunk[a] else np.zeros(0, np.int64))
        if lost.size:
            raise CoveringError(f"piece {a}: shrunk covering misses point {int(lost[0])}")
    N = family.top_scale
    order = sorted(range(len(family.pieces)), key=lambda a: (family.pieces[a].scale, a))
    members, colors, origins = [], [], []
    for color in range(family.color_count):
        # current family W_j: list of (points, origin)
        current = []
        for a in order:
            p = family.pieces[a]
            if p.scale != 0:
                continue
            for i, (m, c) in enumerate(zip(p.covering.members, p.covering.colors)):
                if c == color:
                    current.append((m, (a, i)))
        for j in range(N):
            level = []
            owner = np.full(n, -1, dtype=np.int64)
            for a in order:
                p = family.pieces[a]
                if p.scale != j + 1:
                    continue
                for i, (m, c) in enumerate(zip(shrunk[a], p.covering.colors)):
                    if c == color and m.size:
                        if np.any(owner[m] >= 0):
                            raise CoveringError(f"shrunk scale-{j + 1} members of color {color} overlap")
                        owner[m] = len(level)
                        level.append((m, (a, i)))
            grown = [[v] for v, _ in level]
            nxt = []
            for w, origin in current:
                hits = np.unique(owner[w])
                hits = hits[hits >= 0]
                if hits.size > 1:
                    raise CoveringError(f"member from {origin} meets {hits.size} scale-{j + 1} members of color {color}")
                if hits.size == 1:
                    grown[int(hits[0])].append(w)
                else:
                    nxt.append((w, origin))
            for (v, origin), parts in zip(level, grown):
                nxt.append((np.unique(np.concatenate(parts)) if len(parts) > 1 else v, origin))
            current = nxt
        current.sort(key=lambda item: (family.pieces[item[1][0]].scale, item[1][0], item[1][1]))
        for w, origin in current:
            members.append(w)
            colors.append(color)
            origins.append(origin)
    target = np.unique(np.concatenate([p.target for p in family.pieces])) if family.pieces else np.zeros(0, np.int64)
    out = ColoredCovering(space, target, members, colors, family.color_count,
                          {"construction": "glue", "scales": N + 1})
    if out.uncovered().size:
        raise CoveringError(f"glued family misses point {int(out.uncovered()[0])}")
    clash = out.color_clash()
    if clash is not None:
        raise CoveringError(f"glued family has same-colored overlap {clash}")
    return GlueResult(out, origins, shrunk)


def declared_boxes(covering: ColoredCovering, points=None, weights=None):
    """Measured ``(lebesgue_box, mesh_box)`` for a covering of a product piece.

    The Lebesgue box is the largest multiple of ``weights`` (default: all ones) whose
    closed box fits at every point, slightly reduced so closed containment is exact.
    """
    from .covering import box_lebesgue_sup, closed_fit

    space = covering.space
    w = np.ones(space.k) if weights is None else np.asarray(weights, dtype=float)
    t = box_lebesgue_sup(covering, w, points=points)
    tmin = float(t.min()) if t.size else float("inf")
    t_closed = closed_fit(tmin)
    leb = BoxBound(tuple(float(x) for x in t_closed * w), "lebesgue")
    return leb, box_mesh(covering)
