import json

import numpy as np
import pytest

from bellgate.cli import main
from bellgate.io import dumps, read_json
from bellgate.registry import lookup


@pytest.fixture
def files(tmp_path):
    def make(name="chsh_d2"):
        e = lookup(name)
        sc = tmp_path / f"{name}_scenario.json"
        ph = tmp_path / f"{name}_phases.json"
        sc.write_text(dumps(e.scenario.to_dict()))
        ph.write_text(dumps(e.optimal_phases.to_dict()))
        return sc, ph
    return make


def run(argv, tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    code = main(["--manifest", str(manifest), *map(str, argv)])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), read_json(manifest)


def test_correlations_marginals(files, tmp_path, capsys):
    sc, ph = files("i_2x3_d3_universal")
    code, table, man = run(["correlations", sc, ph], tmp_path, capsys)
    assert code == 0
    p = np.array(table["p"])
    assert np.allclose(p[:, :, :3, :3].sum(axis=3), 1 / 3)
    assert np.allclose(p[:, :, :3, :3].sum(axis=2), 1 / 3)
    assert man["exit_code"] == 0 and len(man["inputs"]) == 2
    assert all(v.startswith("sha256:") for v in man["inputs"].values())


def test_correlations_zero_efficiency(files, tmp_path, capsys):
    sc, ph = files()
    _, table, _ = run(["correlations", sc, ph, "--eta", 0], tmp_path, capsys)
    p = np.array(table["p"])
    assert np.allclose(p[:, :, 2, 2], 1.0)


def test_correlations_full_noise(files, tmp_path, capsys):
    sc, ph = files("chsh_d3")
    _, table, _ = run(["correlations", sc, ph, "--noise-p", 1], tmp_path, capsys)
    assert np.allclose(np.array(table["p"])[:, :, :3, :3], 1 / 9)


def test_threshold_commands(files, tmp_path, capsys):
    sc, ph = files()
    code, rep, _ = run(["threshold", sc, ph, "--lambda", 1], tmp_path, capsys)
    assert code == 0 and rep["eta_star"] == pytest.approx(0.8284, abs=1e-3)
    sc, ph = files("i_3x3_d2_universal")
    code, rep, _ = run(["threshold", sc, ph, "--forall-lambda"], tmp_path, capsys)
    assert code == 0 and rep["eta_star"] == pytest.approx(0.8217, abs=2e-3)


def test_threshold_no_violation(tmp_path, capsys):
    sc = tmp_path / "s.json"
    ph = tmp_path / "p.json"
    sc.write_text(dumps({"d": 2, "na": 2, "nb": 2}))
    ph.write_text(dumps({"alice": [[0, 0], [0, 0]], "bob": [[0, 0], [0, 0]]}))
    code, rep, man = run(["threshold", sc, ph, "--forall-lambda"], tmp_path, capsys)
    assert code == 3 and man["exit_code"] == 3
    assert rep["violated"] is False


def test_inequality_examples(tmp_path, capsys):
    code, out, _ = run(["inequality", "bound", "i_4x2x3"], tmp_path, capsys)
    assert code == 0 and out["bound"] == "8"
    code, out, _ = run(["inequality", "thresholds", "chsh_d", "--d", 7], tmp_path, capsys)
    assert code == 0 and out["eta_universal"] == pytest.approx(0.8119, abs=1e-3)
    assert set(out) == {"eta_universal", "eta_at_lambda", "noise_p", "noise_p_inequality"}
    code, out, _ = run(["inequality", "evaluate", "i_2x3x3_lambda"], tmp_path, capsys)
    assert code == 0 and out["i_rr"] == pytest.approx(3.0, abs=1e-9)


def test_inequality_list(tmp_path, capsys):
    code, out, _ = run(["inequality", "list"], tmp_path, capsys)
    assert code == 0 and "i_3x3_d4_universal" in out["inequalities"]


def test_inequality_file_round_trip(tmp_path, capsys):
    path = tmp_path / "ineq.json"
    path.write_text(dumps(lookup("chsh_d3").inequality.to_dict()))
    code, out, _ = run(["inequality", "bound", path], tmp_path, capsys)
    assert code == 0 and out["bound"] == "2"


def test_extract_pipeline_and_tampering(files, tmp_path, capsys):
    sc, ph = files()
    rep = tmp_path / "rep.json"
    assert main(["--manifest", str(tmp_path / "m0.json"), "threshold", str(sc), str(ph), "--lambda", "1",
                 "--out", str(rep)]) == 0
    code, out, man = run(["extract", sc, ph, rep], tmp_path, capsys)
    assert code == 0
    assert out["eta_threshold"] == pytest.approx(0.8284, abs=1e-3)
    assert out["certificate"]["max_residual"] <= 1e-8
    data = read_json(rep)
    data["eta_star"] = 0.7
    data["bracket"] = None
    rep.write_text(dumps(data))
    code, _, man = run(["extract", sc, ph, rep], tmp_path, capsys)
    assert code == 4 and man["exit_code"] == 4


@pytest.mark.parametrize("argv,code", [
    (["inequality", "bound", "no_such_inequality"], 2),
    (["inequality", "bound", "chsh_d"], 2),
    (["correlations", "MISSING", "MISSING"], 1),
])
def test_exit_codes(argv, code, tmp_path, capsys):
    got, _, man = run(argv, tmp_path, capsys)
    assert got == code == man["exit_code"]


def test_invalid_efficiency(files, tmp_path, capsys):
    sc, ph = files()
    code, _, _ = run(["correlations", sc, ph, "--eta", 1.5], tmp_path, capsys)
    assert code == 2


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(["correlations", bad, bad], tmp_path, capsys)
    assert code == 2


def test_scenario_mismatch(files, tmp_path, capsys):
    sc, _ = files("chsh_d2")
    _, ph = files("chsh_d3")
    code, _, _ = run(["correlations", sc, ph], tmp_path, capsys)
    assert code == 2


def test_manifest_on_stderr_exactly_once(capsys):
    assert main(["inequality", "bound", "chsh_d2"]) == 0
    err = capsys.readouterr().err
    assert err.count('"tool_version"') == 1


def test_output_deterministic_and_round_trips(files, tmp_path, capsys):
    sc, ph = files("chsh_d3")
    outs = []
    for k in range(2):
        out = tmp_path / f"t{k}.json"
        assert main(["--manifest", str(tmp_path / "m.json"), "correlations", str(sc), str(ph),
                     "--eta", "0.9", "--lambda", "0.7", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert dumps(json.loads(outs[0])).encode() == outs[0]


def test_search_with_trace(tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    code, out, man = run(["search", "--d", 2, "--na", 2, "--nb", 2, "--restarts", 5, "--hops", 0,
                          "--seed", 3, "--simplex-tolerance", 1e-3, "--trace", trace], tmp_path, capsys)
    assert code == 0 and man["seed"] == 3
    lines = [json.loads(x) for x in trace.read_text().splitlines()]
    assert lines and {"eval", "objective", "phases"} <= set(lines[0])
    assert out["objective"] == pytest.approx(min(x["objective"] for x in lines))
