import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from families import interval_covering, random_line
from hypcover.covering import (ColoredCovering, CoveringError, box_lebesgue_check, box_lebesgue_sup, box_mesh,
                               box_neighborhood, covering_metrics, neighborhood, pointwise_lebesgue, shrink,
                               union_colored)
from hypcover.metric import LineSpace, make_product

Z3 = LineSpace([0.0, 1.0, 2.0])


def grid(n, m=None):
    return make_product([LineSpace(np.arange(float(n))), LineSpace(np.arange(float(m or n)))])


def cov(space, members, colors=None, m=None, target=None):
    members = [np.sort(np.asarray(u)) for u in members]
    colors = colors if colors is not None else list(range(len(members)))
    target = np.arange(space.n) if target is None else np.asarray(target)
    return ColoredCovering(space, target, members, colors, m or max(colors) + 1)


def test_signed_neighborhoods():
    assert list(neighborhood(Z3, [0, 1], -0.5)) == [0, 1]
    assert list(neighborhood(Z3, [0, 1], -1.0)) == [0]
    assert list(neighborhood(Z3, [0, 1], 0.0)) == [0, 1]
    assert list(neighborhood(Z3, [0], 1.0)) == [0]
    assert list(neighborhood(Z3, [0], 1.5)) == [0, 1]


def test_box_neighborhoods():
    G = grid(3)
    centre = G.index([[1], [1]])
    box = box_neighborhood(G, centre, (1.0, 1.0))
    assert list(box) == list(centre)                       # open unit box on an integer grid
    everything = np.arange(G.n)
    assert list(box_neighborhood(G, everything, (-1.0, -2.0))) == list(everything)
    row = np.sort(G.index([[1, 1, 1], [0, 1, 2]]))
    assert box_neighborhood(G, row, (-1.0, -1.0)).size == 0


def test_metrics_examples():
    m = covering_metrics(cov(Z3, [[0, 1], [1, 2]]))
    assert (m.mesh, m.lebesgue, m.multiplicity) == (1.0, 1.0, 2)
    assert np.argmin(m.pointwise_lebesgue) in (0, 1, 2)
    whole = covering_metrics(cov(Z3, [[0, 1, 2]]))
    assert whole.mesh == 2.0 and whole.lebesgue == math.inf and whole.multiplicity == 1
    single = covering_metrics(cov(Z3, [[0], [1], [2]], [0, 0, 0]))
    assert (single.mesh, single.lebesgue, single.multiplicity) == (0.0, 1.0, 1)


def test_box_mesh_examples():
    G = grid(4, 5)
    block = np.sort(G.index([np.repeat([0, 1, 2], 3), np.tile([1, 2, 3], 3)]))
    assert box_mesh(cov(G, [block])).radii == (1.0, 1.0)
    assert box_mesh(cov(G, [[z] for z in range(G.n)], [0] * G.n)).radii == (0.0, 0.0)
    G3 = grid(3)
    pair = np.sort(G3.index([[0, 1], [0, 2]]))
    assert box_mesh(cov(G3, [pair], target=pair)).radii == (1.0, 1.0)


def test_box_lebesgue_quadrants():
    G = grid(4)
    quads = [np.sort(G.index([np.repeat(a, 2), np.tile(b, 2)])) for a in ([0, 1], [2, 3]) for b in ([0, 1], [2, 3])]
    C = cov(G, quads)
    assert box_lebesgue_check(C, (0.0, 0.0)).all()
    assert box_lebesgue_check(cov(G, [np.arange(16)]), (5.0, 5.0)).all()
    got = box_lebesgue_check(C, (1.0, 1.0))
    x, y = G.coords(np.arange(16))
    want = np.zeros(16, bool)
    for z in range(16):
        box = {(a, b) for a in range(4) for b in range(4) if abs(a - x[z]) <= 1 and abs(b - y[z]) <= 1}
        want[z] = any(box <= set(zip(*G.coords(q))) for q in quads)
    assert np.array_equal(got, want)


def test_shrink_examples():
    out = shrink(cov(Z3, [[0, 1], [1, 2]]), 0.5)
    assert [list(u) for u in out.members] == [[0, 1], [1, 2]]
    net = LineSpace(np.round(np.arange(31) * 0.1, 10))
    xs = net.coords
    U = cov(net, [np.flatnonzero(xs < 2), np.flatnonzero(xs > 1)])
    out = shrink(U, 0.4)
    assert out.uncovered().size == 0
    assert all(u.size < v.size for u, v in zip(out.members, U.members))
    # L = 0.5 is attained at 1.5; shrinking by exactly L would uncover it
    with pytest.raises(CoveringError):
        shrink(U, 0.5)


def test_union_example():
    Z = LineSpace(np.arange(11.0))
    U = cov(Z, [[0, 1, 2, 3], [3, 4, 5, 6]], [0, 1], 2, target=np.arange(6))
    V = cov(Z, [[z] for z in range(6, 11)], [z % 2 for z in range(6, 11)], 2, target=np.arange(6, 11))
    W = union_colored(U, V)
    m = covering_metrics(W)
    assert W.uncovered().size == 0 and list(W.target) == list(range(11))
    assert m.multiplicity <= 2 and m.mesh <= 3 and m.lebesgue >= 0.5


def test_union_rejects_bad_inputs():
    Z = LineSpace(np.arange(11.0))
    U = cov(Z, [[0, 1, 2, 3], [3, 4, 5, 6]], [0, 1], 2, target=np.arange(6))
    with pytest.raises(CoveringError):
        union_colored(U, cov(Z, [np.arange(11)], [0], 1))
    with pytest.raises(CoveringError):
        union_colored(U, cov(Z, [np.arange(6, 11)], [0], 2, target=np.arange(6, 11)))


def test_union_with_subset_target_keeps_bounds():
    Z = LineSpace(np.arange(11.0))
    U = cov(Z, [[0, 1, 2, 3], [3, 4, 5, 6]], [0, 1], 2, target=np.arange(6))
    V = cov(Z, [[1], [2]], [1, 0], 2, target=[1, 2])
    W = union_colored(U, V)
    assert list(W.target) == list(range(6)) and W.uncovered().size == 0


@st.composite
def line_coverings(draw):
    seed = draw(st.integers(0, 10 ** 6))
    rng = np.random.default_rng(seed)
    m = draw(st.integers(1, 4))
    n = draw(st.integers(10, 80))
    space = random_line(rng, n)
    return interval_covering(space, np.arange(n), draw(st.integers(2, 10)), draw(st.integers(1, m)), m, rng)


@given(line_coverings())
@settings(max_examples=40, deadline=None)
def test_lebesgue_matches_brute_force(U):
    M = U.space.materialize().matrix
    pw = pointwise_lebesgue(U)
    for k, z in enumerate(U.target):
        best = 0.0
        for u in U.members:
            if z in u:
                out = np.setdiff1d(np.arange(U.space.n), u)
                best = max(best, M[z, out].min() if out.size else math.inf)
        assert pw[k] == pytest.approx(best)
    m = covering_metrics(U)
    assert m.multiplicity == U.counts().max() <= U.color_count
    assert m.mesh == pytest.approx(max(M[np.ix_(u, u)].max() for u in U.members))


@given(line_coverings(), st.floats(0.05, 0.95))
@settings(max_examples=40, deadline=None)
def test_shrink_keeps_coverage(U, frac):
    L = covering_metrics(U).lebesgue
    if not math.isfinite(L):
        return
    out = shrink(U, frac * L)
    assert out.uncovered().size == 0
    for u in out.members:
        assert any(np.isin(u, v).all() for v in U.members)


@given(st.integers(0, 10 ** 6), st.integers(2, 6), st.integers(2, 6))
@settings(max_examples=30, deadline=None)
def test_box_lebesgue_sup_consistent_with_check(seed, n1, n2):
    rng = np.random.default_rng(seed)
    G = make_product([random_line(rng, n1), random_line(rng, n2)])
    members = [np.flatnonzero(rng.random(G.n) < 0.6) for _ in range(4)]
    members.append(np.arange(G.n)[rng.random(G.n) < 0.3])
    members = [u for u in members if u.size]
    C = ColoredCovering(G, np.unique(np.concatenate(members)), members, list(range(len(members))), len(members))
    t = box_lebesgue_sup(C, (1.0, 2.0), cap=10.0)
    for k, z in enumerate(C.target):
        if t[k] > 1e-6:
            r = 0.999 * t[k]
            assert box_lebesgue_check(C, (r, 2 * r), points=[z]).all()
        if t[k] < 10.0:
            r = 1.001 * t[k] + 1e-9
            assert not box_lebesgue_check(C, (r, 2 * r), points=[z]).all()


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_box_neighborhood_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    G = make_product([random_line(rng, 5), random_line(rng, 4)])
    A = np.flatnonzero(rng.random(G.n) < 0.5)
    radii = rng.uniform(0.1, 2, 2) * rng.choice([-1, 1])
    got = set(box_neighborhood(G, A, radii).tolist())
    x, y = G.coords(np.arange(G.n))
    cx, cy = G.factors[0].coords[x], G.factors[1].coords[y]

    def near(z, pts, closed):
        dx, dy = np.abs(cx[pts] - cx[z]), np.abs(cy[pts] - cy[z])
        r = np.abs(radii)
        if closed:
            return bool(np.any((dx <= r[0]) & (dy <= r[1])))
        return bool(np.any((dx < r[0]) & (dy < r[1])))

    if np.all(radii > 0):
        want = {z for z in range(G.n) if near(z, A, False)}
    elif np.all(radii < 0):
        comp = np.setdiff1d(np.arange(G.n), A)
        want = {z for z in range(G.n) if not (comp.size and near(z, comp, True))}
    else:
        raise AssertionError("mixed signs")
    assert got == want
