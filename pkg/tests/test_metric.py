import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypcover.cone import HyperbolicCone
from hypcover.generators import circle
from hypcover.metric import (FiniteMetricSpace, LineSpace, MetricError, ProductSpace, gromov_product,
                             hyperbolicity_delta, make_product, space_from_spec)

coords = st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=12, unique=True)


def cycle4():
    d = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    return FiniteMetricSpace(d)


def test_gromov_product_collinear():
    X = LineSpace([0.0, 3.0, 5.0])
    assert gromov_product(X, 0, 1, 2) == 3.0
    assert gromov_product(X, 0, 0, 2) == 0.0
    assert gromov_product(X, 0, 1, 1) == 3.0


def test_delta_degenerate_and_cycle():
    tri = FiniteMetricSpace(np.array([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]]))
    assert hyperbolicity_delta(tri, base=0).delta == 0.0
    rep = hyperbolicity_delta(cycle4())
    assert rep.delta == 1.0
    o, x, y, z = rep.witness
    assert gromov_product(cycle4(), o, x, y) == pytest.approx(
        min(gromov_product(cycle4(), o, x, z), gromov_product(cycle4(), o, z, y)) - 1.0)


def test_delta_of_cone_sample_below_plane_constant():
    cone = HyperbolicCone(circle(4), np.array([0.5, 1.5, 3.0, 4.5, 6.0]))
    assert cone.n == 21
    assert hyperbolicity_delta(cone).delta <= 1.0


def test_product_max_metric():
    P = ProductSpace([LineSpace([0.0, 1.0]), LineSpace([0.0, 2.0])])
    i, j = P.index([[0], [0]])[0], P.index([[1], [1]])[0]
    assert P.dist(i, j) == 2.0
    Q = ProductSpace([LineSpace([0.0, 1.0]), LineSpace([0.0, 2.0])], [3.0, 1.0])
    assert Q.dist(i, j) == 3.0
    one = make_product([LineSpace([0.0]), LineSpace([4.0])])
    assert one.n == 1 and one.dist(0, 0) == 0.0


@pytest.mark.parametrize("d", [
    [[0, 1], [2, 0]],
    [[1, 1], [1, 0]],
    [[0, 1, 5], [1, 0, 1], [5, 1, 0]],
    [[0, -1], [-1, 0]],
])
def test_invalid_matrices_rejected(d):
    with pytest.raises(MetricError):
        FiniteMetricSpace(np.array(d, dtype=float))


def test_product_cap():
    with pytest.raises(MetricError):
        make_product([LineSpace(np.arange(100.0))] * 3, cap=10 ** 5)


@given(coords, st.data())
def test_gromov_product_bounds(xs, data):
    X = LineSpace(xs)
    o, x, y = (data.draw(st.integers(0, X.n - 1)) for _ in range(3))
    g = gromov_product(X, o, x, y)
    assert g == pytest.approx(gromov_product(X, o, y, x))
    assert -1e-9 <= g <= min(X.dist(x, o), X.dist(y, o)) + 1e-9


@given(coords)
@settings(max_examples=30)
def test_line_is_zero_hyperbolic(xs):
    assert hyperbolicity_delta(LineSpace(xs)).delta <= 1e-9


@given(coords, coords, st.floats(0.1, 5), st.floats(0.1, 5))
@settings(max_examples=40)
def test_product_distance_matches_materialized(a, b, s1, s2):
    P = ProductSpace([LineSpace(a), LineSpace(b)], [s1, s2])
    M = P.materialize().matrix
    ca, cb = P.coords(np.arange(P.n))
    A, B = np.asarray(a), np.asarray(b)
    want = np.maximum(s1 * np.abs(A[ca][:, None] - A[ca][None, :]), s2 * np.abs(B[cb][:, None] - B[cb][None, :]))
    assert np.allclose(M, want)
    member = np.arange(0, P.n, 2)
    for i in range(0, P.n, 3):
        outside = np.setdiff1d(np.arange(P.n), member)
        want_c = M[i, outside].min() if outside.size else np.inf
        assert P.dist_to_complement(i, member) == pytest.approx(want_c)


@given(coords)
@settings(max_examples=30)
def test_spec_round_trip(xs):
    for space in (LineSpace(xs), LineSpace(xs).materialize(), make_product([LineSpace(xs), LineSpace([0.0, 1.0])])):
        again = space_from_spec(json.loads(json.dumps(space.spec())))
        assert again.key() == space.key()
        assert np.allclose(again.materialize().matrix, space.materialize().matrix)


def test_cone_spec_round_trip():
    cone = HyperbolicCone(circle(6), np.arange(1, 5) * 0.5)
    again = space_from_spec(json.loads(json.dumps(cone.spec())))
    assert np.allclose(again.materialize().matrix, cone.materialize().matrix)


def test_balls_open_and_closed():
    X = LineSpace([0.0, 1.0, 2.0, 3.0])
    assert list(X.ball(1, 1.0)) == [1]
    assert list(X.ball(1, 1.0, closed=True)) == [0, 1, 2]
