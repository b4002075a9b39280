import json

import numpy as np
import pytest

from hypcover.cli import build_space, main, parse_overrides, parse_params
from hypcover.certificates import load_space
from hypcover.generators import cantor, circle, seq


def test_generators():
    c = cantor(1)
    assert np.allclose(np.sort(np.unique(c.matrix)), [0.0, 2 / 3])
    d = circle(4).matrix
    assert set(np.round(d[np.triu_indices(4, 1)], 12)) == {0.25, 0.5}
    s = seq(3)
    assert s.n == 4 and pytest.approx(1 / 6) in list(s.matrix.ravel())


def test_parsing():
    assert parse_params(["a=1", "b=0.5", "c=x:y"]) == {"a": 1, "b": 0.5, "c": "x:y"}
    assert parse_overrides("H=40,L=5") == {"H": 40.0, "L": 5.0}
    P = build_space("product", {"factors": "cantor(2),seq(3)"})
    assert P.n == 4 * 4 and P.k == 2


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_space_search_verify(tmp_path, capsys):
    sp, out = tmp_path / "c.json", tmp_path / "s.json"
    assert run(["space", "gen", "cantor", "--params", "level=3", "--out", str(sp)], capsys)[0] == 0
    assert load_space(str(sp)).n == 8
    code, _ = run(["cover", "search", "--space", str(sp), "--params", "scales=0.3:0.1", "max_colors=1",
                   "delta=0.1", "--out", str(out)], capsys)
    assert code == 0
    code, io = run(["verify", str(out)], capsys)
    assert code == 0 and all(v["pass"] for v in json.loads(io.out)["verdicts"])


def test_verify_failure_and_usage_errors(tmp_path, capsys):
    sp, out = tmp_path / "c.json", tmp_path / "s.json"
    main(["space", "gen", "seq", "--params", "M=4", "--out", str(sp)])
    main(["cover", "search", "--space", str(sp), "--params", "scales=0.2", "max_colors=2", "--out", str(out)])
    capsys.readouterr()
    bundle = json.loads(out.read_text())
    cert = bundle["results"][0]["certificate"]
    cert["metrics"]["mesh"] += 1.0
    bare = tmp_path / "cert.json"
    bare.write_text(json.dumps(cert))
    assert run(["verify", str(bare), "--space", str(sp)], capsys)[0] == 1
    assert run(["verify", str(bare)], capsys)[0] == 2
    other = tmp_path / "o.json"
    main(["space", "gen", "seq", "--params", "M=5", "--out", str(other)])
    assert run(["verify", str(bare), "--space", str(other)], capsys)[0] == 2
    assert run(["space", "gen", "nope"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify"])
    assert exc.value.code == 2


def test_cone_claims_and_pipeline(tmp_path, capsys):
    sp = tmp_path / "circ.json"
    main(["space", "gen", "circle", "--params", "m=16", "--out", str(sp)])
    code, io = run(["cone", "claims", "--space", str(sp), "--params", "claims=h1.1:h4.2", "t_max=6",
                    "--grid-step", "0.5"], capsys)
    assert code == 0 and len(json.loads(io.out)["reports"]) == 2
    base = tmp_path / "two.json"
    main(["space", "gen", "seq", "--params", "M=1", "--out", str(base)])
    out = tmp_path / "run.json"
    code, _ = run(["pipeline", "run", "cone-lasdim", "--space", str(base), "--params", "L=5", "--out", str(out)],
                  capsys)
    assert code == 0
    assert run(["verify", str(out)], capsys)[0] == 0
    assert run(["pipeline", "run", "cone-lasdim"], capsys)[0] == 2


def test_identical_runs_give_identical_bytes(tmp_path, capsys):
    sp = tmp_path / "c.json"
    main(["space", "gen", "cantor", "--params", "level=3", "--out", str(sp)])
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        main(["cover", "search", "--space", str(sp), "--params", "scales=0.3:0.1", "--out", str(out)])
        outs.append(out.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]
