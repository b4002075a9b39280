import copy
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from families import interval_covering, random_line
from hypcover.certificates import CertificateError, dumps, emit, space_file, space_hash, verify_certificate, write
from hypcover.covering import ColoredCovering
from hypcover.metric import LineSpace, make_product


def two_colored():
    line = LineSpace(np.arange(12.0))
    return ColoredCovering(line, np.arange(12), [np.arange(0, 7), np.arange(5, 12)], [0, 1], 2)


def test_fresh_certificate_passes(tmp_path):
    U = two_colored()
    cert = emit(U, claims={"lebesgueAtLeast": 1.0, "meshAtMost": 6.0, "colorsAtMost": 2})
    v = verify_certificate(cert, U.space)
    assert v.passed, v.failures
    assert v.recomputed == {"multiplicity": 2, "mesh": 6.0, "lebesgue": 2.0}
    write(cert, tmp_path / "c.json")
    (tmp_path / "s.json").write_text(dumps(space_file(U.space)))
    assert verify_certificate(str(tmp_path / "c.json"), str(tmp_path / "s.json")).passed


def test_deleted_point_is_reported():
    U = two_colored()
    cert = emit(U)
    cert["members"][0]["points"] = cert["members"][0]["points"][1:]
    checks = {f["check"] for f in verify_certificate(cert, U.space).failures}
    assert "coverage" in checks or "lebesgue" in checks


def test_color_reassignment_gives_witness():
    U = two_colored()
    cert = emit(U)
    cert["members"][1]["color"] = 0
    v = verify_certificate(cert, U.space)
    dis = [f for f in v.failures if f["check"] == "disjointness"]
    assert dis and dis[0]["members"] == [0, 1] and dis[0]["point"] == 5 and dis[0]["color"] == 0


def test_tampered_metrics_and_claims():
    U = two_colored()
    cert = emit(U, claims={"lebesgueAtLeast": 3.0, "colorsAtMost": 1})
    cert["metrics"]["mesh"] = 5.0
    cert["metrics"]["multiplicity"] = 1
    checks = {f["check"] for f in verify_certificate(cert, U.space).failures}
    assert {"mesh", "multiplicity", "lebesgueAtLeast", "colorsAtMost"} <= checks


def test_bad_inputs_raise():
    U = two_colored()
    cert = emit(U)
    with pytest.raises(CertificateError):
        verify_certificate(cert, LineSpace(np.arange(13.0)))
    broken = copy.deepcopy(cert)
    del broken["members"]
    with pytest.raises(CertificateError):
        verify_certificate(broken, U.space)
    bad = copy.deepcopy(cert)
    bad["members"][0]["points"] = [0, 99]
    assert not verify_certificate(bad, U.space).passed


def test_box_bounds_on_products():
    P = make_product([LineSpace(np.arange(6.0)), LineSpace(np.arange(4.0))])
    rows = lambda a, b: np.sort(P.index([np.repeat(np.arange(a, b), 4), np.tile(np.arange(4), b - a)]))
    U = ColoredCovering(P, np.arange(P.n), [rows(0, 4), rows(2, 6)], [0, 1], 2)
    cert = emit(U, box_lebesgue=(1.0, 0.0))
    assert cert["boxMesh"] == [2.0, 2.0]
    assert verify_certificate(cert, P).passed
    cert["boxLebesgueRadii"] = [2.0, 0.0]
    assert any(f["check"] == "boxLebesgue" for f in verify_certificate(cert, P).failures)


def test_canonical_json():
    assert dumps({"b": 1, "a": [np.float64(0.1), np.int64(2), float("inf")]}) == '{"a":[0.1,2,"inf"],"b":1}'
    assert space_hash(LineSpace([0.0, 1.0])) == space_hash(LineSpace([0.0, 1.0]))
    assert space_hash(LineSpace([0.0, 1.0])) != space_hash(LineSpace([0.0, 2.0]))


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_round_trip_through_json(seed, m):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 60))
    U = interval_covering(random_line(rng, n), np.arange(n), int(rng.integers(3, 9)), int(rng.integers(1, m + 1)), m, rng)
    cert = json.loads(dumps(emit(U, lebesgue_cap=5.0)))
    assert verify_certificate(cert, json.loads(dumps(space_file(U.space)))).passed
