import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypcover.claims import CLAIMS, ClaimContext, ClaimHypothesisError, verify_claim, verify_sweep
from hypcover.cone import (ConeConstants, HyperbolicCone, comparison_distance, cone_distance, cone_gromov_limit,
                           gromov_limits, measure_c0, measure_constants)
from hypcover.generators import cantor, circle
from hypcover.metric import FiniteMetricSpace, hyperbolicity_delta

radius = st.floats(0, 12, allow_nan=False)
small_radius = st.floats(0, 8, allow_nan=False)


def disk_distance(t, theta, t2, theta2):
    """Distance in the Poincare disk between polar points at hyperbolic radii ``t, t2``."""
    u = math.tanh(t / 2) * complex(math.cos(theta), math.sin(theta))
    v = math.tanh(t2 / 2) * complex(math.cos(theta2), math.sin(theta2))
    return 2 * math.atanh(abs(u - v) / abs(1 - u * v.conjugate()))


@given(st.integers(0, 15), st.integers(0, 15), small_radius, small_radius)
@settings(max_examples=200)
def test_distance_matches_hyperboloid(z, z2, t, t2):
    cone = HyperbolicCone(circle(16), [1.0])
    # circle(16) has diameter 1/2, so the angle is 2 pi times the arc
    theta = 2 * math.pi * z / 16
    theta2 = 2 * math.pi * z2 / 16
    want = disk_distance(t, theta, t2, theta2)
    assert cone.distance(z, t, z2, t2) == pytest.approx(want, abs=1e-7, rel=1e-7)


@given(radius, radius)
def test_distance_special_cases(t, t2):
    cone = HyperbolicCone(circle(8), [1.0])
    assert cone.distance(3, t, 3, t2) == pytest.approx(abs(t - t2), abs=1e-9)
    assert cone.distance(3, t, 5, 0.0) == pytest.approx(t, abs=1e-9)
    assert cone.distance(0, t, 4, t2) == pytest.approx(t + t2, abs=1e-9)


def test_far_out_distances_stay_finite():
    cone = HyperbolicCone(circle(64), [1.0])
    d = cone.distance(0, 1000.0, 1, 1200.0)
    assert math.isfinite(d) and 200.0 < d < 2200.0
    assert cone.distance(0, 1000.0, 32, 1200.0) == pytest.approx(2200.0)
    assert cone_distance(cone, (0, 2.0), (32, 3.0)) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        comparison_distance(-1.0, 1.0, 0.5)


def test_cone_matrix_matches_pointwise():
    cone = HyperbolicCone(cantor(2), [0.5, 1.0, 2.5])
    M = cone.materialize().matrix
    assert M.shape == (13, 13)
    for i in range(cone.n):
        z, t = cone.z_of(i), cone.t_of(i)
        assert M[0, i] == pytest.approx(t)
        for j in range(1, cone.n):
            assert M[i, j] == pytest.approx(cone.distance(int(z), float(t), int(cone.z_of(j)), float(cone.t_of(j))))


def test_gromov_limits():
    cone = HyperbolicCone(circle(4), [1.0])
    assert cone_gromov_limit(cone, 0, 2) == pytest.approx(0.0, abs=1e-9)
    near = HyperbolicCone(circle(64), [1.0])
    v = cone_gromov_limit(near, 0, 1)
    assert math.isfinite(v) and v > 2.0
    L = gromov_limits(near)
    assert L[0, 1] == pytest.approx(v, abs=1e-8)
    with pytest.raises(ValueError):
        cone_gromov_limit(cone, 1, 1)


def test_visual_constant_reported():
    cone = HyperbolicCone(circle(64), [1.0])
    c0 = measure_c0(cone)
    L = gromov_limits(cone)
    iu = np.triu_indices(64, 1)
    assert c0 == pytest.approx(np.max(np.abs(L[iu] + np.log(cone.base.matrix[iu]))))
    K = measure_constants(cone, measure_delta=False)
    assert K.c == pytest.approx(c0 + 2.0)


def test_two_point_cone_is_a_line():
    Z = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))
    cone = HyperbolicCone(Z, np.arange(1, 9) * 0.5)
    assert hyperbolicity_delta(cone, base=cone.vertex).delta <= 1e-9
    assert cone.distance(0, 2.0, 1, 3.0) == pytest.approx(5.0)


def claim_context(base, c=None):
    cone = HyperbolicCone(base, np.arange(0.25, 10.01, 0.25))
    K = measure_constants(cone, measure_delta=False)
    if c is not None:
        K = ConeConstants(K.delta, K.c0, c, K.delta_config)
    return ClaimContext(cone, K)


def test_h1_exhaustive_on_circle():
    rep = verify_claim(claim_context(circle(64)), "h1.1", {"R": 5.0, "D": 1.0})
    assert rep.passed and rep.checked > 0


def test_h3_inclusion_on_cantor():
    rep = verify_claim(claim_context(cantor(5)), "h3.1", {"R": 3.0, "l": 1.0, "R1": 2.0})
    assert rep.passed and rep.checked > 0


@pytest.mark.parametrize("claim", CLAIMS)
def test_all_claims_hold_on_circle(claim):
    assert verify_sweep(claim_context(circle(32)), claim).passed


def test_claims_detect_a_constant_that_is_too_small():
    rep = verify_sweep(claim_context(circle(64), c=-3.0), "h1.1")
    assert not rep.passed
    assert rep.violations[0]["margin"] < 0


def test_claim_hypotheses_enforced():
    ctx = claim_context(circle(16))
    with pytest.raises(ClaimHypothesisError):
        verify_claim(ctx, "h4.1", {"R": 3.0, "l": 1.0, "R1": 3.0})
