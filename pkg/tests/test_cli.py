import json

import jsonschema
import numpy as np
import pytest

from optcons.cli import main, sweep
from optcons.scenario import shipped_scenario

from test_sim import SCHEMA

DISCONNECTED = '{"n": 4, "edges": [[0, 1, 1], [1, 0, 1], [2, 3, 1], [3, 2, 1]]}'
K3 = '{"n": 3, "edges": [[0, 1, 1], [1, 0, 1], [1, 2, 1], [2, 1, 1], [0, 2, 1], [2, 0, 1]]}'


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _field(out, name):
    for line in out.splitlines():
        if line.startswith(name + " = "):
            return line.split(" = ", 1)[1]
    raise AssertionError(f"{name} not printed:\n{out}")


def test_spectrum_example_graph(capsys, tmp_path):
    code, out, _ = _run(capsys, "spectrum", "--scenario", "example1", "--out", str(tmp_path))
    assert code == 0
    assert float(_field(out, "lambda2")) == pytest.approx(2.0, abs=1e-12)
    assert float(_field(out, "lambdaN")) == pytest.approx(3.0, abs=1e-12)
    rep = json.loads((tmp_path / "spectrum.json").read_text())
    assert rep["weight_balanced"] and rep["strongly_connected"]


def test_spectrum_empty_graph(capsys):
    code, out, err = _run(capsys, "spectrum", "--scenario", "example1", "--set", 'graph={"n": 4, "edges": []}')
    assert code == 2
    assert _field(out, "strongly_connected") == "false"
    assert "strongly connected" in err


def test_spectrum_k3(capsys):
    code, out, _ = _run(capsys, "spectrum", "--scenario", "example1", "--set", f"graph={K3}")
    assert code == 0
    assert _field(out, "weight_balanced") == "true"
    assert float(_field(out, "lambda2")) == pytest.approx(3.0)


def test_gains_example1(capsys):
    code, out, _ = _run(capsys, "gains", "--scenario", "example1")
    assert code == 0
    assert float(_field(out, "alpha")) == 1.0
    assert float(_field(out, "beta")) == pytest.approx(13.5)


def test_gains_example2(capsys, tmp_path):
    code, out, _ = _run(capsys, "gains", "--scenario", "example2", "--out", str(tmp_path))
    assert code == 0
    assert float(_field(out, "alpha")) == pytest.approx(9.0)
    assert float(_field(out, "beta")) == pytest.approx(1093.5)
    assert "warning" not in out
    assert json.loads((tmp_path / "gains.json").read_text())["below_bound"] is False


def test_gains_override_warns(capsys):
    code, out, _ = _run(capsys, "gains", "--scenario", "example2", "--alpha", "1", "--beta", "15")
    assert code == 0
    assert float(_field(out, "alpha")) == 1.0 and float(_field(out, "beta")) == 15.0
    assert "below the sufficient bound" in out


def test_oracle_example2(capsys):
    code, out, _ = _run(capsys, "oracle", "--scenario", "example2")
    assert code == 0
    assert abs(float(_field(out, "y_star")) - 3.24) <= 0.01


def test_oracle_example1_mean(capsys):
    values = json.dumps([{"q": [q, 0.0, q, 0.0]} for q in (1, 2, 3, 4)])
    code, out, _ = _run(capsys, "oracle", "--scenario", "example1", "--set", f"initial.values={values}")
    assert code == 0
    assert float(_field(out, "y_star")) == pytest.approx(2.5, abs=1e-9)


def test_oracle_single_agent(capsys, tmp_path):
    doc = {
        "graph": {"n": 1, "edges": []},
        "costs": [{"kind": "quadratic", "center": -0.75, "weight": 2.0}],
        "plants": [{"type": "integrator"}],
    }
    path = tmp_path / "single.json"
    path.write_text(json.dumps(doc))
    code, out, _ = _run(capsys, "oracle", "--scenario", str(path))
    assert code == 0
    assert float(_field(out, "y_star")) == pytest.approx(-0.75, abs=1e-9)


def test_run_writes_artifacts(capsys, tmp_path):
    code, out, _ = _run(capsys, "run", "--scenario", "generator_only", "--out", str(tmp_path), "--set", "integrator.T=12")
    assert code == 0
    assert _field(out, "semistable") == "true"
    report = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    assert report["meta"]["T"] == 12
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t,y_1,y_2,y_3,y_4,r_1")


def test_run_not_converged_exits_1(capsys):
    code, out, _ = _run(capsys, "run", "--scenario", "generator_only", "--set", "integrator.T=0.5")
    assert code == 1
    assert _field(out, "semistable") == "false"


def test_run_divergence_exits_1(capsys):
    code, _, err = _run(capsys, "run", "--scenario", "example1", "--set", 'initial.boxes={"x": 2.0}')
    assert code == 1
    assert "t =" in err


def test_run_disconnected_exits_2(capsys):
    code, _, err = _run(capsys, "run", "--scenario", "example2", "--set", f"graph={DISCONNECTED}")
    assert code == 2
    assert "weight-balanced and strongly connected" in err


@pytest.mark.parametrize("override", ["controller.design=\"example7\"", "integrator.h=-1", "gains.alpha=0"])
def test_bad_configuration_exits_2(capsys, override):
    code, _, _ = _run(capsys, "run", "--scenario", "example2", "--set", override)
    assert code == 2


def test_parse_error_exits_3(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "graph": {"n": 2,\n}')
    code, _, err = _run(capsys, "spectrum", "--scenario", str(path))
    assert code == 3
    assert "bad.json:3:" in err
    code, _, _ = _run(capsys, "spectrum", "--scenario", str(tmp_path / "missing.json"))
    assert code == 3
    code, _, _ = _run(capsys, "spectrum", "--scenario", "example1", "--set", "graph")
    assert code == 3


def test_sweep_zero_seeds(capsys, tmp_path):
    code, out, _ = _run(capsys, "sweep", "--scenario", "example1", "--n-seeds", "0", "--out", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["n_seeds"] == 0 and summary["failing_seeds"] == []
    assert json.loads((tmp_path / "summary.json").read_text())["runs"] == []


def test_sweep_reports_failing_seeds(capsys, tmp_path):
    doc = shipped_scenario("generator_only")
    doc["integrator"]["T"] = 1.0
    doc["metrics"]["tol_out"] = 1e9
    probe = sweep(doc, range(6))
    errors = {r["seed"]: r["max_final_error"] for r in probe["runs"]}
    cut = float(np.median(list(errors.values())))
    expected = sorted(s for s, e in errors.items() if e > cut)
    assert 0 < len(expected) < 6

    path = tmp_path / "short.json"
    doc["metrics"]["tol_out"] = cut
    path.write_text(json.dumps(doc))
    code, out, _ = _run(capsys, "sweep", "--scenario", str(path), "--seed", "0", "--n-seeds", "6", "--out", str(tmp_path / "o"))
    assert code == 1
    summary = json.loads(out)
    assert summary["failing_seeds"] == expected
    assert summary["n_semistable"] == 6 - len(expected)
    for seed in range(6):
        assert (tmp_path / "o" / f"seed_{seed}" / "report.json").exists()


def test_sweep_parallel_matches_serial():
    doc = shipped_scenario("generator_only")
    doc["integrator"]["T"] = 0.5
    assert sweep(doc, range(3), workers=2) == sweep(doc, range(3))
