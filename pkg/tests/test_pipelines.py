import math

import numpy as np
import pytest

from hypcover.cone import HyperbolicCone, measure_constants
from hypcover.covering import (TOL, ColoredCovering, CoveringError, box_lebesgue_check, box_mesh,
                               covering_metrics)
from hypcover.generators import cantor, cantor_points, seq
from hypcover.metric import FiniteMetricSpace, LineSpace, ProductSpace, make_product
from hypcover.pipelines.asprod import (ClusterPairOracle, calibrate_two_axes, miniature_radii, plan_cascade)
from hypcover.pipelines.cones import cone_covering_lasdim
from hypcover.pipelines.ldim import LDimSearchParams, greedy_covering, ldim_search
from hypcover.pipelines.lower import RayIntervalCover, annulus_lift, cell_axis, lower_chain, pad_points_for
from hypcover.pipelines.ssim import (QuasiHomothety, affine_homothety, cantor_slabs, cylinder_covering,
                                     ssim_covering, ssim_covering_beta)
from hypcover.pipelines.strips import (MARGIN, ProductStripOracle, greedy_oracle, interval_covering,
                                       single_linkage, strip_covering_R, two_axes_covering)

POINT = FiniteMetricSpace(np.zeros((1, 1)))
TWO = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))


# -- l-dim search --------------------------------------------------------------------

def test_single_point_needs_one_color():
    rep = ldim_search(POINT, LDimSearchParams((1.0, 0.1, 0.01), 1, 0.5))
    assert rep.success and rep.colors == 1


def test_cantor_cylinders_one_color():
    scales = tuple(3.0 ** -j for j in range(1, 5))
    rep = ldim_search(cantor(7), LDimSearchParams(scales, 1, 0.3))
    assert rep.success and rep.colors == 1
    assert min(r.delta for r in rep.results) >= 1 / 3 - 1e-9


def test_convergent_sequence_needs_two_colors():
    X = seq(64)
    scales = (0.05, 0.02, 0.01, 0.005)
    one = ldim_search(X, LDimSearchParams(scales, 1, 0.05))
    two = ldim_search(X, LDimSearchParams(scales, 2, 0.05))
    assert not one.success
    assert two.success and two.colors == 2


def test_greedy_members_have_bounded_diameter():
    X = LineSpace(np.sort(np.random.default_rng(1).uniform(0, 10, 200)))
    U = greedy_covering(X, 0.5, 2, 0.05)
    m = covering_metrics(U)
    assert U.uncovered().size == 0 and U.color_clash() is None
    assert m.mesh <= 0.5 + TOL


# -- strips --------------------------------------------------------------------------

def test_single_linkage_on_line():
    X = LineSpace([0.0, 0.1, 0.2, 1.0, 1.05, 3.0])
    comps = single_linkage(X, 0.5)
    assert [c.tolist() for c in comps] == [[0, 1, 2], [3, 4], [5]]


def test_interval_covering_has_requested_lebesgue():
    line = LineSpace.grid(0, 20, 0.25)
    U = interval_covering(line, 2.0)
    m = covering_metrics(U, cap=4.0)
    assert U.color_count == 2 and m.multiplicity <= 2 and m.lebesgue >= 2.0 - TOL


def test_point_times_line_strip_covering():
    X = make_product([POINT, LineSpace.grid(0, 2, 1 / 128)])
    sc = strip_covering_R(X, 0.004, 0.004, greedy_oracle(), delta=0.1)
    cov = sc.covering
    assert cov.color_count <= 2 and cov.uncovered().size == 0 and cov.color_clash() is None
    assert box_lebesgue_check(cov, sc.lebesgue_box).all()
    assert box_mesh(cov) <= sc.mesh_box


def test_product_strip_oracle_on_cantor():
    X = make_product([cantor(4), LineSpace.grid(-1, 3, 1 / 64)])
    sc = ProductStripOracle(cantor(4)).cover(X, 3.0 ** -4, 3.0 ** -4)
    cov = sc.covering
    assert cov.color_count == 2 and cov.color_clash() is None
    assert box_lebesgue_check(cov, sc.lebesgue_box).all()
    assert box_mesh(cov) <= sc.mesh_box


def test_two_axes_single_points():
    pair = make_product([TWO, TWO])
    singles = ColoredCovering(pair, np.arange(4), [np.array([i]) for i in range(4)], [0] * 4, 1)
    S = ProductSpace([TWO, TWO, LineSpace(np.arange(0, 40, 0.5)), LineSpace(np.arange(0, 40, 0.5))])
    r = two_axes_covering(S, singles, (0.5, 0.5), (2.0, 2.0))
    W = r.covering
    assert W.color_count == 3 and W.color_clash() is None and W.uncovered().size == 0
    assert r.q == pytest.approx(0.5, rel=1e-5)
    assert box_lebesgue_check(W, r.lebesgue_box).all()
    assert box_mesh(W) <= r.mesh_box


def test_two_axes_whole_pair():
    pair = make_product([TWO, TWO])
    whole = ColoredCovering(pair, np.arange(4), [np.arange(4)], [0], 1)
    S = ProductSpace([TWO, TWO, LineSpace(np.arange(0, 20, 0.5)), LineSpace(np.arange(0, 20, 0.5))])
    r = two_axes_covering(S, whole, (0.5, 0.5), (2.0, 2.0))
    assert r.covering.color_count == 3
    assert box_lebesgue_check(r.covering, r.lebesgue_box).all()


# -- cones ---------------------------------------------------------------------------

def test_cone_over_two_points():
    K = measure_constants(HyperbolicCone(TWO, np.arange(0.5, 20, 0.5)), measure_delta=False)
    res = cone_covering_lasdim(TWO, 5.0, K)
    m = res.metrics
    assert m.multiplicity <= 2 and m.lebesgue >= 5.0 - TOL
    assert m.mesh <= 6 * res.C * 5.0 + TOL
    assert res.covering.uncovered().size == 0


def test_cone_needs_large_L():
    K = measure_constants(HyperbolicCone(TWO, np.arange(0.5, 20, 0.5)), measure_delta=False)
    with pytest.raises(CoveringError):
        cone_covering_lasdim(TWO, 2.0, K)


def test_ray_interval_cover():
    # away from the vertex the two rays are more than L apart
    cone = HyperbolicCone(TWO, np.arange(30.0, 120.0, 0.5))
    cov = RayIntervalCover(12.0).cover(cone)
    m = covering_metrics(cov, cap=24.0)
    assert m.lebesgue >= 12.0 - TOL and m.mesh <= RayIntervalCover(12.0).M + TOL


def test_annulus_lift_on_cantor():
    base = cantor(3)
    K = measure_constants(HyperbolicCone(base, np.arange(0.5, 20, 0.5)), measure_delta=False)
    res = annulus_lift(base, RayIntervalCover(10.0), K.c, 0.25, 0.5, cell_axis(16, 2, pad_points_for(16, 0.25)))
    assert res.claims["mesh_ok"] and res.claims["lebesgue_ok"]
    assert res.covering.color_count == 2 and res.covering.color_clash() is None
    assert res.mesh <= res.eps * res.tau + TOL
    assert res.lebesgue > 0


def test_lower_chain_small():
    out = lower_chain(seq(8), 10.0, 2.5, ms=(8,), K=16)
    r = out["results"][8]
    assert r.passes() and r.covering.color_count == 2
    assert len(out["schedule"]) == 2 and out["schedule"][1] < out["schedule"][0]


# -- self-similar --------------------------------------------------------------------

def test_affine_homothety_is_exact_on_cylinders():
    X = LineSpace(cantor_points(4))
    member = np.flatnonzero(X.coords < 1 / 3 - 1e-9)
    f = affine_homothety(X, member, 3.0)
    assert f.check() == pytest.approx(1.0)
    with pytest.raises(CoveringError):
        QuasiHomothety(X, X, member, member[::-1], 3.0).check()


@pytest.mark.parametrize("swap", [False, True])
def test_ssim_uniform_delta(swap):
    level = 4
    X = LineSpace(cantor_points(level))
    Z = ProductSpace([X, LineSpace(cantor_points(level))])
    dp, tau = 0.15, 3.0 ** -2
    fine = [cylinder_covering(Z, level - 1)]
    deltas = set()
    for p in range(2):
        alpha = 3.0 ** -p
        run = ssim_covering_beta if swap else ssim_covering
        res = run(Z, cantor_slabs(X, alpha), fine, alpha, tau, dp, affine_homothety)
        v = res.verify()
        assert res.covering.color_count == 1 and v["mesh_ok"] and v["lebesgue_ok"]
        deltas.add(res.delta)
    assert len(deltas) == 1


def test_cantor_slabs_need_powers_of_three():
    with pytest.raises(CoveringError):
        cantor_slabs(LineSpace(cantor_points(3)), 0.5)


# -- products of cones ---------------------------------------------------------------

def test_cluster_pair_oracle():
    o = ClusterPairOracle(TWO, TWO)
    assert o.k == 0
    assert len(o.cover(0.5, 0.5).members) == 4
    assert len(o.cover(2.0, 2.0).members) == 1


def test_two_axes_calibration():
    q, sigma = calibrate_two_axes()
    assert q == pytest.approx(0.5, rel=1e-5)
    assert sigma == pytest.approx(2.5, rel=1e-5)


def test_cascade_plan_on_two_point_bases():
    q, sigma_pair = calibrate_two_axes()
    plan = plan_cascade(TWO, TWO, 1e-3, 2.0, q, sigma_pair, 2.0 * (1 + MARGIN) + 1e-6)
    s3, s2, s1 = plan.stages["P3"], plan.stages["P2"], plan.stages["P1"]
    assert (s3.N, s2.N, s1.N) == (4, 2, 2)
    assert s3.H == pytest.approx(20.00016, rel=1e-6)
    assert s3.M == pytest.approx(122.00088, rel=1e-6)
    # each stage starts at twice the mesh of the one inside it
    assert s2.L == pytest.approx(2 * s3.M) and s1.L == pytest.approx(2 * s2.M)
    assert plan.L_core == pytest.approx(2 * s1.M)
    assert s3.M == pytest.approx(2 * (0.75 * s3.H + 2 * (s3.H + plan.D + 2.0)))
    for s in (s2, s1):
        assert s.M == pytest.approx(2 * max(0.75 * s.H + 2 * (2 * s.H + plan.D + 2.0), s.T + s.L))
    assert plan.T0 == pytest.approx(s2.T) and plan.T_star == pytest.approx(s1.T)
    radii = miniature_radii(plan)
    assert np.all(np.diff(radii) > 0) and radii[-1] >= plan.core_radius
