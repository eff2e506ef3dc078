import json
import subprocess
import sys

import pytest

from mfsobol.cli import EXIT_CONFIG, EXIT_OK, EXIT_UNSUPPORTED, dumps_document, main
from mfsobol.models import Heston

TINY_HESTON = ["--model", "heston", "--param", "m_fine=100", "--param", "m_coarse=50", "--param", "h=0.01"]


def injected_pilot(path, sigma_t_eta=0.8491, sigma_c=0.9017, sigma_e=0.4909):
    model = Heston()
    doc = {
        "kind": "pilot",
        "tool_version": "0.1.0",
        "master_seed": 0,
        "model": model.descriptor(),
        "model_fingerprint": model.fingerprint(),
        "cost_model": {"rho": 0.5, "hierarchical": True},
        "estimates": {"sigma_t_eta": sigma_t_eta, "sigma_c": sigma_c, "sigma_e": sigma_e, "pilot_size": 100},
    }
    path.write_text(dumps_document(doc))
    return path


def read(path):
    return json.loads(path.read_text())


class TestPilot:
    def test_heston_pilot(self, tmp_path):
        out = tmp_path / "pilot.json"
        assert main(["pilot", *TINY_HESTON, "--n", "10", "--seed", "3", "--out", str(out)]) == EXIT_OK
        doc = read(out)
        for key in ("sigma_c", "sigma_e", "sigma_t_eta"):
            assert doc["estimates"][key] > 0
        assert doc["estimates"]["pilot_size"] == 10
        assert doc["master_seed"] == 3 and doc["model_fingerprint"]

    def test_size_one_rejected(self, tmp_path):
        assert main(["pilot", "--model", "linear-gaussian", "--n", "1", "--out", str(tmp_path / "p")]) == EXIT_CONFIG

    def test_unknown_param(self, tmp_path):
        argv = ["pilot", "--model", "linear-gaussian", "--param", "gamma=1", "--out", str(tmp_path / "p")]
        assert main(argv) == EXIT_CONFIG

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        base = ["pilot", *TINY_HESTON, "--n", "8", "--seed", "1"]
        main([*base, "--out", str(a)])
        main([*base, "--out", str(b), "--workers", "3"])
        assert a.read_bytes() == b.read_bytes()

    def test_seventeen_digits(self):
        assert dumps_document({"x": 0.1, "n": 3, "b": None}) == '{"b": null, "n": 3, "x": 0.10000000000000001}\n'


class TestPlan:
    def test_heston_pilot_sigmas(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        out = tmp_path / "plan.json"
        argv = ["plan", "--pilot", str(pilot), "--alpha", "0.05", "--length", "0.1", "--mode", "paper-figure"]
        assert main([*argv, "--out", str(out)]) == EXIT_OK
        plan = read(out)["plan"]
        assert 0.50 <= plan["efficiency"] <= 0.60
        assert plan["classical_cost"] > 0 and plan["split_mode"] == "paper_figure"

    def test_loose_target(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        out = tmp_path / "plan.json"
        assert main(["plan", "--pilot", str(pilot), "--alpha", "0.5", "--length", "10", "--out", str(out)]) == EXIT_OK
        plan = read(out)["plan"]
        assert 1 <= plan["psi_n"] <= plan["n"] <= 5

    def test_theorem_mode_negative_efficiency(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        out = tmp_path / "plan.json"
        argv = ["plan", "--pilot", str(pilot), "--alpha", "0.05", "--length", "0.1", "--mode", "theorem"]
        assert main([*argv, "--out", str(out)]) == EXIT_OK
        assert read(out)["plan"]["efficiency"] < 0

    def test_degenerate_pilot_flagged(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json", sigma_c=0.0, sigma_e=0.0)
        out = tmp_path / "plan.json"
        assert main(["plan", "--pilot", str(pilot), "--alpha", "0.05", "--length", "0.1", "--out", str(out)]) == EXIT_OK
        assert read(out)["plan"]["warning"]

    def test_unknown_keys_rejected(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        doc = read(pilot)
        doc["extra"] = 1
        pilot.write_text(json.dumps(doc))
        argv = ["plan", "--pilot", str(pilot), "--alpha", "0.05", "--length", "0.1", "--out", str(tmp_path / "x")]
        assert main(argv) == EXIT_CONFIG

    def test_bad_mode(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["plan", "--pilot", "p", "--alpha", "0.05", "--length", "0.1", "--mode", "x", "--out", "o"])
        assert exc.value.code == EXIT_CONFIG


def pilot_and_plan(tmp_path, params=(), alpha="0.1"):
    model = ["--model", "linear-gaussian", *[a for p in params for a in ("--param", p)]]
    pilot, plan = tmp_path / "pilot.json", tmp_path / "plan.json"
    assert main(["pilot", *model, "--n", "2000", "--seed", "1", "--out", str(pilot)]) == EXIT_OK
    assert main(["plan", "--pilot", str(pilot), "--alpha", alpha, "--length", "0.1", "--out", str(plan)]) == EXIT_OK
    return model, plan


class TestEstimate:
    def test_linear_gaussian(self, tmp_path):
        model, plan = pilot_and_plan(tmp_path)
        out = tmp_path / "report.json"
        assert main(["estimate", *model, "--plan", str(plan), "--seed", "7", "--out", str(out)]) == EXIT_OK
        report = read(out)["report"]
        assert report["interval"]["lower"] <= 0.5 <= report["interval"]["upper"]
        assert report["fine_evals"] == 2 * report["psi_n"]
        assert report["v_n"] == pytest.approx(report["t_n_coarse"] + report["e_n"], abs=1e-15)

    def test_identical_fidelities(self, tmp_path):
        model, plan = pilot_and_plan(tmp_path, params=["delta=0"])
        out = tmp_path / "report.json"
        assert main(["estimate", *model, "--plan", str(plan), "--seed", "7", "--out", str(out)]) == EXIT_OK
        assert read(out)["report"]["e_n"] == 0.0

    def test_fingerprint_mismatch(self, tmp_path):
        _, plan = pilot_and_plan(tmp_path)
        argv = ["estimate", "--model", "linear-gaussian", "--param", "delta=0.5", "--plan", str(plan)]
        assert main([*argv, "--seed", "1", "--out", str(tmp_path / "r.json")]) == EXIT_CONFIG


class TestCurve:
    def test_two_points(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        out = tmp_path / "curve.csv"
        argv = ["curve", "--pilot", str(pilot), "--alpha-min", "0.0001", "--alpha-max", "0.05", "--points", "2"]
        assert main([*argv, "--mode", "paper-figure", "--out", str(out)]) == EXIT_OK
        text = out.read_text()
        lines = text.splitlines()
        assert lines[0] == "alpha,alpha_e,mu,efficiency" and len(lines) == 3 and text.endswith("\n")
        eff = [float(line.split(",")[3]) for line in lines[1:]]
        assert eff[0] > eff[1]
        assert [float(line.split(",")[0]) for line in lines[1:]] == [0.0001, 0.05]

    def test_empty_range(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        argv = ["curve", "--pilot", str(pilot), "--alpha-min", "0.05", "--alpha-max", "0.05", "--points", "3"]
        assert main([*argv, "--out", str(tmp_path / "c.csv")]) == EXIT_CONFIG

    def test_rerun_identical(self, tmp_path):
        pilot = injected_pilot(tmp_path / "p.json")
        outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for out, workers in zip(outs, ("1", "4")):
            main(["curve", "--pilot", str(pilot), "--points", "6", "--workers", workers, "--out", str(out)])
        assert outs[0].read_bytes() == outs[1].read_bytes()


class TestTruth:
    def test_linear_gaussian(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["truth", "--model", "linear-gaussian", "--out", str(out)]) == EXIT_OK
        assert read(out)["s"] == 0.5

    def test_ishigami(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["truth", "--model", "ishigami", "--out", str(out)]) == EXIT_OK
        assert read(out)["s"] == pytest.approx(0.31390519, abs=1e-8)

    def test_heston_unsupported(self, tmp_path):
        assert main(["truth", "--model", "heston", "--out", str(tmp_path / "t.json")]) == EXIT_UNSUPPORTED


def test_module_entry_point(tmp_path):
    out = tmp_path / "t.json"
    proc = subprocess.run([sys.executable, "-m", "mfsobol", "truth", "--model", "linear-gaussian", "--out", str(out)])
    assert proc.returncode == 0 and out.exists()
