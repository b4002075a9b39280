"""Command-line entry points: spaces, covering searches, cone claims, pipelines, verification.

Exit codes: 0 pass, 1 a verdict failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .certificates import CertificateError, dumps, emit, load_space, space_file, verify_certificate
from .generators import GENERATORS, generate
from .metric import LineSpace, ProductSpace, make_product

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# -- argument helpers -------------------------------------------------------------------

def _number(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def parse_params(items) -> dict:
    """``k=v`` pairs; values become int or float when they parse as one."""
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"parameter {item!r} is not of the form k=v")
        k, v = item.split("=", 1)
        out[k.strip()] = _number(v.strip())
    return out


def parse_overrides(text: str | None) -> dict:
    """``H=1.5,L=2`` into ``{"H": 1.5, "L": 2.0}``."""
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"override {part!r} is not of the form k=v")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise UsageError(f"override {k} needs a number") from exc
    return out


def _floats(v) -> list:
    """A number or a ``:``-separated list of numbers."""
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in str(v).split(":") if x]


def _generator_call(name: str, args: str):
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    _, names = GENERATORS[name]
    params = {}
    for k, piece in enumerate(a for a in args.split(";") if a):
        if "=" in piece:
            key, val = piece.split("=", 1)
            params[key] = _number(val)
        else:
            params[names[k]] = _number(piece)
    return generate(name, **params)


def build_space(name: str, params: dict):
    if name == "product":
        spec = str(params.get("factors", ""))
        calls = re.findall(r"(\w+)\(([^)]*)\)", spec)
        if len(calls) < 2:
            raise UsageError("product needs factors=name(args),name(args)")
        return make_product([_generator_call(n, a) for n, a in calls])
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}; choose from {sorted(GENERATORS) + ['product']}")
    try:
        return generate(name, **params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {exc}") from exc


def _write(obj, path: str | None) -> None:
    text = dumps(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _result(space, cert, label: str) -> dict:
    return {"label": label, "space": space_file(space), "certificate": cert}


# -- subcommands ----------------------------------------------------------------------

def cmd_space_gen(args) -> int:
    space = build_space(args.name, parse_params(args.params))
    _write(space_file(space), args.out)
    return EXIT_PASS


def cmd_cover_search(args) -> int:
    from .pipelines.ldim import LDimSearchParams, ldim_search

    space = load_space(args.space)
    p = parse_params(args.params)
    if "scales" not in p:
        raise UsageError("cover search needs --params scales=t1:t2:...")
    params = LDimSearchParams(tuple(_floats(p["scales"])), int(p.get("max_colors", 2)),
                              float(p.get("delta", 0.05)), str(p.get("strategy", "auto")))
    report = ldim_search(space, params)
    results = []
    for r in report.results:
        cert = emit(r.covering, lebesgue_cap=2 * r.tau,
                    claims={"meshAtMost": r.tau, "lebesgueAtLeast": params.delta_target * r.tau,
                            "colorsAtMost": params.max_colors},
                    constants={"tau": r.tau, "delta": r.delta})
        results.append(_result(space, cert, f"tau={r.tau!r}"))
    out = {"command": "cover search", "params": p, "verdict": {"success": report.success, "colors": report.colors,
           "bestDelta": report.best_delta}, "results": results}
    _write(out, args.out)
    return EXIT_PASS if report.success else EXIT_FAIL


def _claim_job(job):
    from .claims import ClaimContext, verify_sweep
    from .cone import HyperbolicCone, measure_constants

    base_spec, radii, claim, seed = job
    cone = HyperbolicCone(load_space(base_spec), radii)
    ctx = ClaimContext(cone, measure_constants(cone, measure_delta=False))
    return verify_sweep(ctx, claim, seed=seed).to_json()


def cmd_cone_claims(args) -> int:
    from .claims import CLAIMS

    base = load_space(args.space)
    p = parse_params(args.params)
    claims = str(p.get("claims", ":".join(CLAIMS))).split(":")
    unknown = set(claims) - set(CLAIMS)
    if unknown:
        raise UsageError(f"unknown claims {sorted(unknown)}")
    step = args.grid_step or 0.25
    radii = np.arange(step, float(p.get("t_max", 10.0)) + step / 2, step)
    jobs = [(space_file(base), radii, c, args.seed) for c in claims]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            reports = list(ex.map(_claim_job, jobs))
    else:
        reports = [_claim_job(j) for j in jobs]
    _write({"command": "cone claims", "reports": reports}, args.out)
    return EXIT_PASS if all(r["pass"] for r in reports) else EXIT_FAIL


def _cone_constants(base, delta_config: float = 1.0):
    from .cone import HyperbolicCone, measure_constants

    return measure_constants(HyperbolicCone(base, np.arange(0.5, 20.0, 0.5)), delta_config, measure_delta=False)


def run_cone_lasdim(base, p: dict, overrides: dict, grid_step):
    from .pipelines.cones import cone_covering_lasdim

    L = float(overrides.pop("L", p.get("L", 5.0)))
    K = _cone_constants(base)
    res = cone_covering_lasdim(base, L, K, step=grid_step, overrides=overrides or None)
    cov = res.covering
    cert = emit(cov, lebesgue_cap=2 * L,
                claims={"lebesgueAtLeast": L, "meshAtMost": 6 * res.C * L, "colorsAtMost": 2},
                constants={"cone": K.to_json(), "pipeline": res.constants.to_json(), "C": res.C, "N": res.N})
    return [_result(cov.space, cert, f"L={L!r}")], res.summary()


def run_lower(base, p: dict, overrides: dict, grid_step):
    from .pipelines.lower import lower_chain

    L = float(overrides.pop("L", p.get("L", 10.0)))
    ms = [int(m) for m in _floats(p.get("ms", "8:16:32"))]
    K = _cone_constants(base)
    out = lower_chain(base, L, K.c, ms=tuple(ms), K=int(p.get("K", 32)), eps0=float(p.get("eps0", 0.25)))
    results = []
    for m, r in out["results"].items():
        cert = emit(r.covering, lebesgue_cap=2 * r.C / m,
                    claims={"lebesgueAtLeast": r.c / m, "meshAtMost": r.C / m, "colorsAtMost": 2},
                    constants={"c": r.c, "C": r.C, "m": m, "schedule": r.schedule,
                               "delta": out["table"].to_json(), "cone": K.to_json()})
        results.append(_result(r.covering.space, cert, f"m={m}"))
    return results, {"schedule": out["schedule"], "M": out["M"], "L": L}


def run_ssim(base, p: dict, overrides: dict, grid_step):
    from .generators import cantor_points
    from .pipelines.ldim import LDimSearchParams, ldim_search
    from .pipelines.ssim import affine_homothety, cantor_slabs, cylinder_covering, ssim_covering

    level = int(p.get("level", 5))
    tau = 3.0 ** -int(p.get("tau_exp", 3))
    X = LineSpace(cantor_points(level))
    Z = ProductSpace([X, LineSpace(cantor_points(level))])
    scales = tuple(3.0 ** -k for k in range(1, 5))
    dps = []
    for S in (X, Z):
        rep = ldim_search(S, LDimSearchParams(scales, 1, 0.05))
        dps.append(min(r.delta for r in rep.results))
    dp = min(dps)
    results, log = [], {"deltaPrime": dp}
    for a in _floats(p.get("alpha_exps", "0:1:2")):
        alpha = 3.0 ** -int(a)
        res = ssim_covering(Z, cantor_slabs(X, alpha), [cylinder_covering(Z, level - 1)], alpha, tau, dp,
                            affine_homothety)
        mesh, leb = res.bounds()
        cert = emit(res.covering, lebesgue_cap=2 * tau, box_lebesgue=leb, claims={"colorsAtMost": 1},
                    constants={"alpha": alpha, "tau": tau, "delta": res.delta, "deltaPrime": dp,
                               "boxMeshBound": list(mesh.radii)})
        results.append(_result(Z, cert, f"alpha={alpha!r}"))
    return results, log


def run_asprod(base, p: dict, overrides: dict, grid_step):
    from .metric import FiniteMetricSpace
    from .pipelines.asprod import assemble_asprod

    Z = base if base is not None else FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))
    L0 = float(overrides.pop("L", p.get("L0", 1e-3)))
    K = _cone_constants(Z)
    res = assemble_asprod(Z, Z, L0, K.c, overrides=overrides or None)
    cert = emit(res.covering, lebesgue_cap=2 * L0,
                claims={"lebesgueAtLeast": L0, "colorsAtMost": res.k + 3},
                constants={"plan": res.plan.to_json(), "cone": K.to_json(), "k": res.k})
    return [_result(res.covering.space, cert, "asprod")], res.summary()


PIPELINES = {"cone-lasdim": run_cone_lasdim, "lower": run_lower, "ssim": run_ssim, "asprod": run_asprod}


def cmd_pipeline_run(args) -> int:
    if args.name not in PIPELINES:
        raise UsageError(f"unknown pipeline {args.name!r}; choose from {sorted(PIPELINES)}")
    base = load_space(args.space) if args.space else None
    if base is None and args.name in ("cone-lasdim", "lower"):
        raise UsageError(f"{args.name} needs --space")
    p = parse_params(args.params)
    results, log = PIPELINES[args.name](base, p, parse_overrides(args.override), args.grid_step)
    verdicts = [verify_certificate(r["certificate"], r["space"]) for r in results]
    _write({"command": "pipeline run", "pipeline": args.name, "params": p,
            "overrides": parse_overrides(args.override), "stageLog": log, "results": results,
            "verdicts": [v.to_json() for v in verdicts]}, args.out)
    return EXIT_PASS if all(v.passed for v in verdicts) else EXIT_FAIL


def _verify_job(item):
    cert, space = item
    return verify_certificate(cert, space).to_json()


def cmd_verify(args) -> int:
    try:
        with open(args.certificate) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"malformed JSON: {exc}") from exc
    if "results" in doc:
        items = [(r["certificate"], r["space"]) for r in doc["results"]]
    else:
        if not args.space:
            raise UsageError("a bare certificate needs --space")
        with open(args.space) as fh:
            items = [(doc, json.load(fh))]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            verdicts = list(ex.map(_verify_job, items))
    else:
        verdicts = [_verify_job(i) for i in items]
    _write({"command": "verify", "verdicts": verdicts}, args.out)
    return EXIT_PASS if all(v["pass"] for v in verdicts) else EXIT_FAIL


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space file (JSON)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--params", nargs="*", default=[], metavar="K=V")
    common.add_argument("--grid-step", type=float, default=None, help="radial grid step")
    common.add_argument("--override", default=None, help="constant overrides, e.g. H=40,L=5")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="hypcover", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space").add_subparsers(dest="action", required=True)
    g = sp.add_parser("gen", parents=[common], help="write a built-in space")
    g.add_argument("name", help="cantor, circle, seq, grid or product")
    g.set_defaults(func=cmd_space_gen)

    cp = sub.add_parser("cover").add_subparsers(dest="action", required=True)
    s = cp.add_parser("search", parents=[common], help="greedy (delta tau, tau)-coverings per scale")
    s.set_defaults(func=cmd_cover_search)

    kp = sub.add_parser("cone").add_subparsers(dest="action", required=True)
    c = kp.add_parser("claims", parents=[common], help="sampled checks of the cone distance estimates")
    c.set_defaults(func=cmd_cone_claims)

    pp = sub.add_parser("pipeline").add_subparsers(dest="action", required=True)
    r = pp.add_parser("run", parents=[common], help="run a covering pipeline and emit certificates")
    r.add_argument("name", help=", ".join(sorted(PIPELINES)))
    r.set_defaults(func=cmd_pipeline_run)

    v = sub.add_parser("verify", parents=[common], help="re-verify a certificate or a result bundle")
    v.add_argument("certificate")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CertificateError, FileNotFoundError, ValueError) as exc:
        print(f"hypcover: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
