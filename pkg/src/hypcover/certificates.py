"""Self-contained covering certificates and their independent re-verification.

A certificate lists the raw members and colors of a covering together with the metrics
it claims.  :func:`verify_certificate` rebuilds everything from the member lists and a
space file whose hash must match; nothing computed by the emitting pipeline is trusted.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .covering import (BoxBound, ColoredCovering, box_lebesgue_check, box_mesh, pointwise_lebesgue)
from .metric import ProductSpace, space_from_spec

TOLERANCE = 1e-9
FORMAT = "hypcover-certificate/1"


class CertificateError(ValueError):
    """Malformed certificate or a space that does not match it."""


def _encode(x):
    if isinstance(x, dict):
        return {str(k): _encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_encode(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_encode(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, no whitespace, shortest round-trip floats, infinities as strings."""
    return json.dumps(_encode(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def space_hash(space) -> str:
    return hashlib.sha256(dumps(space.spec()).encode()).hexdigest()


def space_file(space) -> dict:
    return _encode(space.spec())


def load_space(obj):
    """A space from a parsed space file (or a path to one)."""
    if isinstance(obj, str):
        with open(obj) as fh:
            obj = json.load(fh)
    try:
        return space_from_spec(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError(f"malformed space file: {exc}") from exc


# -- emission -------------------------------------------------------------------------

def emit(cov: ColoredCovering, lebesgue_cap: float | None = None, claims: dict | None = None,
         box_lebesgue=None, constants: dict | None = None, stage_log: list | None = None) -> dict:
    """Certificate of ``cov`` with its measured metrics.

    ``lebesgue_cap`` clips pointwise Lebesgue numbers (the verifier uses the same cap);
    ``claims`` may hold ``lebesgueAtLeast``, ``meshAtMost`` and ``colorsAtMost``.
    """
    space = cov.space
    pw = pointwise_lebesgue(cov, cap=lebesgue_cap)
    metrics = {
        "mesh": max((space.diameter(m) for m in cov.members), default=0.0),
        "lebesgue": float(pw.min()) if pw.size else math.inf,
        "multiplicity": int(cov.counts().max()) if cov.members else 0,
    }
    if lebesgue_cap is not None:
        metrics["lebesgueCap"] = float(lebesgue_cap)
    cert = {
        "format": FORMAT,
        "spaceHash": space_hash(space),
        "colorCount": int(cov.color_count),
        "target": cov.target,
        "members": [{"points": m, "color": int(c)} for m, c in zip(cov.members, cov.colors)],
        "metrics": metrics,
    }
    if isinstance(space, ProductSpace):
        cert["boxMesh"] = list(box_mesh(cov).radii)
    if box_lebesgue is not None:
        radii = box_lebesgue.radii if isinstance(box_lebesgue, BoxBound) else tuple(box_lebesgue)
        cert["boxLebesgueRadii"] = [float(r) for r in radii]
    if claims:
        cert["claims"] = dict(claims)
    if constants:
        cert["constants"] = constants
    if stage_log:
        cert["stageLog"] = stage_log
    return json.loads(dumps(cert))


def write(cert: dict, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(cert))
        fh.write("\n")


# -- verification ---------------------------------------------------------------------

@dataclass
class Verdict:
    passed: bool
    failures: list = field(default_factory=list)
    recomputed: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"pass": self.passed, "failures": self.failures, "recomputed": _encode(self.recomputed)}


def _close(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= TOLERANCE


def _parse(cert: dict, space):
    try:
        n = space.n
        m = int(cert["colorCount"])
        target = np.asarray(cert["target"], dtype=np.int64)
        members = [np.asarray(e["points"], dtype=np.int64) for e in cert["members"]]
        colors = [int(e["color"]) for e in cert["members"]]
        metrics = cert["metrics"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CertificateError(f"malformed certificate: {exc}") from exc
    problems = []
    for k, pts in enumerate(members):
        if pts.size == 0:
            problems.append({"check": "member", "member": k, "detail": "empty member"})
        elif pts.min() < 0 or pts.max() >= n:
            problems.append({"check": "member", "member": k, "detail": "point out of range"})
        elif np.any(np.diff(pts) <= 0):
            problems.append({"check": "member", "member": k, "detail": "points not strictly increasing"})
    for k, c in enumerate(colors):
        if not 0 <= c < m:
            problems.append({"check": "color", "member": k, "detail": f"color {c} outside range({m})"})
    if target.size and (target.min() < 0 or target.max() >= n or np.any(np.diff(target) <= 0)):
        problems.append({"check": "target", "detail": "target indices invalid"})
    return m, target, members, colors, metrics, problems


def _color_witness(members, colors, n):
    """First pair of same-colored members sharing a point, or ``None``."""
    for c in sorted(set(colors)):
        owner = np.full(n, -1, dtype=np.int64)
        for k, (pts, col) in enumerate(zip(members, colors)):
            if col != c:
                continue
            prev = owner[pts]
            hit = np.flatnonzero(prev >= 0)
            if hit.size:
                return int(prev[hit[0]]), k, int(pts[hit[0]])
            owner[pts] = k
    return None


def verify_certificate(cert, space) -> Verdict:
    """Recompute coverage, color disjointness, multiplicity, mesh, Lebesgue number and box bounds.

    ``cert`` is a parsed certificate or a path; ``space`` a space object, a parsed space
    file or a path.  Raises :class:`CertificateError` on a hash mismatch or malformed input.
    """
    if isinstance(cert, str):
        try:
            with open(cert) as fh:
                cert = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CertificateError(f"malformed JSON: {exc}") from exc
    if not isinstance(cert, dict):
        raise CertificateError("certificate must be a JSON object")
    if not hasattr(space, "n"):
        space = load_space(space)
    if cert.get("spaceHash") != space_hash(space):
        raise CertificateError("space hash does not match the certificate")
    m, target, members, colors, metrics, failures = _parse(cert, space)
    if failures:
        return Verdict(False, failures, {})
    n = space.n
    counts = np.zeros(n, dtype=np.int64)
    for pts in members:
        counts[pts] += 1
    rec = {}
    uncovered = target[counts[target] == 0]
    if uncovered.size:
        failures.append({"check": "coverage", "point": int(uncovered[0]), "count": int(uncovered.size)})
    clash = _color_witness(members, colors, n)
    if clash is not None:
        failures.append({"check": "disjointness", "members": [clash[0], clash[1]], "point": clash[2],
                         "color": colors[clash[1]]})
    rec["multiplicity"] = int(counts.max()) if members else 0
    rec["mesh"] = max((space.diameter(p) for p in members), default=0.0)
    cov = ColoredCovering(space, target, members, colors, m)
    cap = metrics.get("lebesgueCap")
    cap = None if cap is None else float(cap)
    if uncovered.size:
        rec["lebesgue"] = 0.0
    else:
        pw = pointwise_lebesgue(cov, cap=cap)
        rec["lebesgue"] = float(pw.min()) if pw.size else math.inf
    for key in ("mesh", "lebesgue"):
        claimed = float(metrics.get(key, "nan"))
        if not _close(claimed, rec[key]):
            failures.append({"check": key, "claimed": claimed, "recomputed": rec[key]})
    if int(metrics.get("multiplicity", -1)) != rec["multiplicity"]:
        failures.append({"check": "multiplicity", "claimed": metrics.get("multiplicity"),
                         "recomputed": rec["multiplicity"]})
    if rec["multiplicity"] > m:
        failures.append({"check": "multiplicity", "detail": f"{rec['multiplicity']} exceeds {m} colors"})
    if "boxMesh" in cert:
        if not isinstance(space, ProductSpace):
            failures.append({"check": "boxMesh", "detail": "box bounds need a product space"})
        else:
            got = box_mesh(cov).radii
            rec["boxMesh"] = list(got)
            claimed = [float(v) for v in cert["boxMesh"]]
            if len(claimed) != len(got) or not all(_close(a, b) for a, b in zip(claimed, got)):
                failures.append({"check": "boxMesh", "claimed": claimed, "recomputed": list(got)})
    if "boxLebesgueRadii" in cert:
        radii = [float(v) for v in cert["boxLebesgueRadii"]]
        ok = box_lebesgue_check(cov, radii) if isinstance(space, ProductSpace) else np.zeros(target.size, bool)
        if not ok.all():
            bad = int(target[np.flatnonzero(~ok)[0]]) if target.size else -1
            failures.append({"check": "boxLebesgue", "radii": radii, "point": bad})
    claims = cert.get("claims", {})
    if "lebesgueAtLeast" in claims and rec["lebesgue"] < float(claims["lebesgueAtLeast"]) - TOLERANCE:
        failures.append({"check": "lebesgueAtLeast", "claimed": claims["lebesgueAtLeast"], "recomputed": rec["lebesgue"]})
    if "meshAtMost" in claims and rec["mesh"] > float(claims["meshAtMost"]) + TOLERANCE:
        failures.append({"check": "meshAtMost", "claimed": claims["meshAtMost"], "recomputed": rec["mesh"]})
    if "colorsAtMost" in claims and m > int(claims["colorsAtMost"]):
        failures.append({"check": "colorsAtMost", "claimed": claims["colorsAtMost"], "colorCount": m})
    return Verdict(not failures, failures, rec)
