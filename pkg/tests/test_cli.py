from __future__ import annotations

import json

from qmor.cli import main
from qmor.model import HamiltonianModel, tfim_periodic


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_certify_exit_codes(capsys):
    code, out, _ = run(capsys, "certify", "--builtin", "collective", "--n", "3")
    rep = json.loads(out)
    assert code == 0 and rep["reducible"] and (rep["dim_algebra"], rep["dim_full"]) == (20, 64)
    code, out, _ = run(capsys, "certify", "--builtin", "collective", "--n", "1")
    assert code == 1 and json.loads(out)["reducible"] is False
    code, out, _ = run(capsys, "certify", "--builtin", "random-tfim", "--n", "5")
    assert code == 0 and json.loads(out)["method"] == "pauli-count"


def test_certify_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "terms": [{"paulis": [{"coeff": 1, "pauli": "XQ"}]}]}')
    code, _, err = run(capsys, "certify", "--model", str(bad))
    assert code == 2 and "error" in err
    assert run(capsys, "certify", "--model", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "certify", "--builtin", "tfim")[0] == 2
    assert run(capsys, "certify", "--builtin", "nope", "--n", "2")[0] == 2
    assert run(capsys, "certify", "--builtin", "tfim", "--n", "3", "--tol", "-1")[0] == 2


def test_reduce_reports(capsys, tmp_path):
    code, out, _ = run(capsys, "reduce", "--builtin", "tfim", "--n", "6", "--state", "+^6")
    rep = json.loads(out)
    assert code == 0 and (rep["r"], rep["basis_size"]) == (8, 126)
    path = tmp_path / "bundle.json"
    code, out, _ = run(capsys, "reduce", "--builtin", "random-tfim", "--n", "4", "--state", "++++", "--out", str(path))
    rep = json.loads(out)
    assert (rep["r"], rep["basis_size"], rep["method"]) == (8, 128, "gramian")
    bundle = json.loads(path.read_text())
    assert bundle["map"]["r"] == 8 and len(bundle["reduced_model"]["terms"]) == 7


def test_reduce_methods_agree(capsys):
    rs = set()
    for method in ("burnside", "pauli", "gramian"):
        code, out, _ = run(capsys, "reduce", "--builtin", "random-tfim", "--n", "3", "--state", "+0+", "--method", method)
        assert code == 0
        rs.add(json.loads(out)["r"])
    assert len(rs) == 1
    assert run(capsys, "reduce", "--builtin", "tfim", "--n", "3", "--state", "gs(1,1)", "--method", "gramian")[0] == 2


def test_simulate_compare_and_truncate(capsys):
    base = ("simulate", "--builtin", "tfim", "--n", "4", "--state", "gs(B=0.05,J=1)", "--degeneracy-tol", "1e-2",
            "--lambda", "B=0.5,J=1", "--lambda", "B=2,J=1", "--times", "0:10:40")
    code, out, err = run(capsys, *base, "--compare")
    assert code == 0
    meta = json.loads(err[err.index("{"):])
    assert meta["r"] == 6 and all(q["max_abs_error"] <= 1e-8 for q in meta["quenches"])
    assert out.splitlines()[0] == "time,value,model_kind,quench" and len(out.splitlines()) == 1 + 2 * 2 * 40
    code, out, err = run(capsys, *base, "--truncate", "1")
    meta = json.loads(err[err.index("{"):])
    assert max(q["max_abs_error"] for q in meta["quenches"]) > 1e-3
    assert "truncated(5)" in out


def test_simulate_single_time(capsys):
    code, out, _ = run(capsys, "simulate", "--builtin", "tfim", "--n", "3", "--state", "+++", "--lambda", "1,1", "--times", "0")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "time,value,model_kind" and len(lines) == 2
    t, v, kind = lines[1].split(",")
    assert float(t) == 0 and abs(float(v) - 3) <= 1e-12 and kind == "full"


def test_sample_commands(capsys, tmp_path):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps([{"lambda": lam, "times": {"random": {"count": 6}}}
                                 for lam in ([1, 0.3, 0.2], [0.2, 1, 0.5], [0.7, 0.1, 1])]))
    code, out, _ = run(capsys, "sample", "--builtin", "collective", "--n", "3", "--state", "000",
                       "--schedule", str(sched), "--seed", "4")
    rep = json.loads(out)["report"]
    assert code == 0 and rep["r"] == 4 and rep["residual_pass"]
    alias = tmp_path / "alias.json"
    alias.write_text(json.dumps([{"lambda": [0, 0, 1], "times": {"uniform": {"step": 3.141592653589793, "count": 2}}}]))
    code, out, _ = run(capsys, "sample", "--builtin", "collective", "--n", "1", "--state", "+", "--schedule", str(alias))
    rep = json.loads(out)["report"]
    assert rep["uniform_step_valid"] == [False] and rep["span_dim"] == 1
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert run(capsys, "sample", "--builtin", "collective", "--n", "1", "--state", "0", "--schedule", str(empty))[0] == 2


def test_outputs_are_deterministic(capsys, tmp_path):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps([{"lambda": [1, 0.5, 0.2], "times": {"random": {"count": 4}}}]))
    args = ("sample", "--builtin", "collective", "--n", "2", "--state", "01", "--schedule", str(sched), "--seed", "9")
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    out1 = run(capsys, *args, "--out", str(a))[1]
    out2 = run(capsys, *args, "--out", str(b))[1]
    assert out1 == out2 and a.read_bytes() == b.read_bytes()


def test_model_roundtrip(capsys, tmp_path):
    path = tmp_path / "m.json"
    assert run(capsys, "model", "--builtin", "tfim", "--n", "3", "--out", str(path))[0] == 0
    assert HamiltonianModel.from_dict(json.loads(path.read_text())) == tfim_periodic(3)
    code, out, _ = run(capsys, "certify", "--model", str(path))
    assert code == 0 and json.loads(out)["reducible"]


def test_usage_errors(capsys):
    assert run(capsys, "reduce", "--builtin", "tfim", "--n", "3")[0] == 2
    assert run(capsys, "reduce", "--builtin", "tfim", "--n", "3", "--state", "++")[0] == 2
    assert run(capsys, "simulate", "--builtin", "tfim", "--n", "3", "--state", "+++")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert main(["--help"]) == 0
