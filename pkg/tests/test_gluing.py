import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from families import random_family
from hypcover.covering import BoxBound, ColoredCovering, CoveringError, box_lebesgue_check, member_box_radii, TOL
from hypcover.gluing import Piece, ScaleFamily, check_qualified, check_separated, declared_boxes, glue
from hypcover.metric import LineSpace, make_product


def line_product(n):
    return make_product([LineSpace(np.arange(float(n))), LineSpace([0.0])])


def piece(space, target, members, colors, m, scale):
    cov = ColoredCovering(space, np.asarray(target), [np.asarray(u) for u in members], colors, m)
    leb, mesh = declared_boxes(cov, points=np.asarray(target))
    return Piece(np.asarray(target), cov, scale, leb, mesh)


def test_single_piece_is_shrunk_copy():
    Y = line_product(12)
    p = piece(Y, np.arange(12), [np.arange(0, 7), np.arange(5, 12)], [0, 1], 2, 1)
    res = glue(ScaleFamily(Y, [p], 2))
    assert len(res.covering.members) == 2
    for w, u in zip(res.covering.members, p.covering.members):
        assert np.isin(w, u).all()
    assert res.covering.uncovered().size == 0


def test_two_scale_absorption():
    Y = line_product(11)
    fine = piece(Y, [0, 1, 2], [[0], [1], [2]], [0, 0, 0], 1, 0)
    coarse = piece(Y, np.arange(3, 11), [np.arange(2, 11)], [0], 1, 1)
    fam = ScaleFamily(Y, [fine, coarse], 1)
    assert check_separated(fam) and check_qualified(fam)
    out = sorted(tuple(w.tolist()) for w in glue(fam).covering.members)
    assert out == [(0,), (1,), tuple(range(2, 11))]


def test_separation_violation_reported():
    Y = line_product(10)
    a = piece(Y, np.arange(5), [np.arange(0, 6)], [0], 1, 0)
    b = piece(Y, np.arange(5, 10), [np.arange(4, 10)], [0], 1, 0)
    rep = check_separated(ScaleFamily(Y, [a, b], 1))
    assert not rep and rep.violations[0][1][0] == 1


def test_checkerboard_strips_separated():
    Y = line_product(60)
    pieces = [piece(Y, np.arange(10 * k, 10 * k + 10), [np.arange(10 * k, 10 * k + 10)], [0], 1, k % 2)
              for k in range(6)]
    assert check_separated(ScaleFamily(Y, pieces, 1))


def test_qualification_boundary_equality_accepted():
    Y = line_product(10)
    cov = ColoredCovering(Y, np.arange(10), [np.arange(10)], [0], 1)
    fine = Piece(np.arange(5), cov, 0, BoxBound((1.0, 1.0)), BoxBound((0.5, 0.25)))
    ok = Piece(np.arange(5, 10), cov, 1, BoxBound((2.0, 1.0)), BoxBound((9.0, 0.0)))
    assert check_qualified(ScaleFamily(Y, [fine, ok], 1))
    short = Piece(np.arange(5, 10), cov, 1, BoxBound((2.0, 0.99)), BoxBound((9.0, 0.0)))
    rep = check_qualified(ScaleFamily(Y, [fine, short], 1))
    assert not rep and rep.violations[0][:2] == (0, 1)


def test_glue_rejects_unqualified():
    Y = line_product(10)
    cov = ColoredCovering(Y, np.arange(10), [np.arange(10)], [0], 1)
    fine = Piece(np.arange(5), cov, 0, BoxBound((1.0, 1.0)), BoxBound((0.5, 0.5)))
    coarse = Piece(np.arange(5, 10), cov, 1, BoxBound((1.0, 1.0)), BoxBound((9.0, 0.0)))
    with pytest.raises(CoveringError):
        glue(ScaleFamily(Y, [fine, coarse], 1), check=True)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_glue_postconditions(seed):
    fam = random_family(np.random.default_rng(seed), n_line=int(np.random.default_rng(seed).integers(60, 140)))
    assume(fam is not None)
    res = glue(fam)
    W = res.covering
    assert W.color_count == fam.color_count and W.color_clash() is None and W.uncovered().size == 0
    inputs = [u for p in fam.pieces for u in p.covering.members]
    for w in W.members:
        assert any(np.isin(w, u).all() for u in inputs)
        assert any(np.all(member_box_radii(fam.space, w) <= member_box_radii(fam.space, u) + TOL)
                   for u in inputs if np.isin(w, u).all())
    for shrunk in res.shrunk:
        for v in shrunk:
            assert v.size == 0 or any(np.isin(v, w).all() for w in W.members)
    for p in fam.pieces:
        assert box_lebesgue_check(W, p.lebesgue_box.scaled(0.5).radii, points=p.target).all()
