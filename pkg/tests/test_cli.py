import csv
import json

import numpy as np
import pandas as pd
import pytest

from app import commands
from app.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from app.errors import NonFiniteState
from app.integrator import IntegrationConfig, integrate_many
from app.model_core import dee, lift_state, vector_field
from app.params_io import dump_params

FAST = ["--h", "0.05", "--t-end", "2000"]


@pytest.fixture
def case1_file(data_dir):
    return str(data_dir / "case1.params")


@pytest.fixture
def case2_file(data_dir):
    return str(data_dir / "case2.params")


@pytest.fixture
def below_threshold_file(tmp_path, case2_below_threshold):
    path = tmp_path / "below.params"
    path.write_text(dump_params(case2_below_threshold))
    return str(path)


class TestR0:
    def test_case1(self, case1_file, capsys):
        assert main(["r0", "--params", case1_file]) == EXIT_OK
        assert capsys.readouterr().out == "2.863636\n"

    def test_case2(self, case2_file, capsys):
        assert main(["r0", "--params", case2_file]) == EXIT_OK
        assert capsys.readouterr().out == "1.428571\n"

    def test_invalid_delta(self, tmp_path, case1, capsys):
        path = tmp_path / "bad.params"
        path.write_text(dump_params(case1).replace("delta = 0.9", "delta = 1.5"))
        assert main(["r0", "--params", str(path)]) == EXIT_CONFIG
        assert "delta" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["r0", "--params", str(tmp_path / "missing.params")]) == EXIT_CONFIG


class TestEquilibria:
    def test_case1(self, case1_file, capsys):
        assert main(["equilibria", "--params", case1_file]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["dee"]["S"] == pytest.approx(15.2778, rel=1e-5)
        assert set(report["dee_mir"]) == {"M", "I", "R"}
        assert report["dee_full"]["N"] == pytest.approx(200.0)
        assert len(report["local_eigenvalues"]["dee"]) == 3
        assert max(report["residual_norm"].values()) <= 1e-9 * 200.0

    def test_below_threshold(self, below_threshold_file, capsys):
        assert main(["equilibria", "--params", below_threshold_file]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["r0"] < 1.0
        assert report["dee"] is None
        assert report["table_order"] is None

    def test_writes_file(self, case1_file, tmp_path, capsys):
        out = tmp_path / "eq.json"
        assert main(["equilibria", "--params", case1_file, "--out", str(out)]) == EXIT_OK
        assert json.loads(out.read_text()) == json.loads(capsys.readouterr().out)


class TestCheck:
    def test_case1(self, case1_file, capsys):
        assert main(["check", "--params", case1_file]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["verdict"] == "GAS-certified"
        assert report["gas_holds"] is True
        assert report["legacy_2b_holds"] is False
        assert report["certificate_verified"] is True
        assert report["in_class_p"] is True
        assert report["omega1"]["hi"] == "inf"
        assert report["omega1_as_printed"] == pytest.approx(0.2258, rel=1e-3)
        assert report["legacy_2a_holds"] is None

    def test_case2(self, case2_file, capsys):
        assert main(["check", "--params", case2_file, "--c", "200"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["remark_automatic"] is True
        assert report["verdict"] == "GAS-certified"
        assert report["legacy_2b_holds"] is False
        assert isinstance(report["legacy_2a_holds"], bool)

    def test_below_threshold(self, below_threshold_file, capsys):
        assert main(["check", "--params", below_threshold_file]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["verdict"] == "DFE-GAS"

    def test_tiny_cross_coefficient(self, tmp_path, capsys):
        path = tmp_path / "tiny_k.params"
        path.write_text(
            "A = 2\nepsilon = 0.0018538875781431289\na = 0.0006400677900893795\nv = 0.04178490134258239\n"
            "mu = 0.01\ndelta = 0.3467585448491829\nb_I = 0.04939580500550778\nb_C = 0.03774482419228239\n"
        )
        assert main(["check", "--params", str(path)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["gas_holds"] is True
        assert report["remark_automatic"] is False


class TestSimulate:
    def test_sampled_runs_converge(self, case1_file, tmp_path):
        out = tmp_path / "sim"
        assert main(["-q", "simulate", "--params", case1_file, "--out", str(out), "--n-init", "5", *FAST]) == EXIT_OK

        summary = json.loads((out / "summary.json").read_text())
        assert [run["file"] for run in summary["runs"]] == [f"run_{i:03d}.csv" for i in range(5)]
        assert all(run["converged_at"] is not None for run in summary["runs"])

        frame = pd.read_csv(out / "run_000.csv")
        assert list(frame.columns) == ["t", "S", "C", "I"]

    def test_full_system_population(self, case1_file, tmp_path):
        out = tmp_path / "full"
        args = ["simulate", "--params", case1_file, "--out", str(out), "--system", "full", "--init", "40,5,5,0,50", *FAST]
        assert main(args) == EXIT_OK

        frame = pd.read_csv(out / "run_000.csv")
        assert list(frame.columns) == ["t", "S", "C", "I", "R", "N"]
        assert frame["N"].iloc[-1] == pytest.approx(200.0, rel=1e-6)

    def test_csv_round_trips_exact_values(self, case1, case1_file, tmp_path):
        out = tmp_path / "exact"
        args = ["simulate", "--params", case1_file, "--out", str(out), "--n-init", "2", "--h", "0.1", "--t-end", "50"]
        assert main(args) == EXIT_OK

        with open(out / "run_001.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        recorded = np.array([[float(x) for x in row] for row in rows[1:]])

        from app.integrator import sample_omega

        starts = [lift_state(case1, s, "limit") for s in sample_omega(case1, 2, 0)]
        expected = integrate_many(vector_field(case1, "limit"), starts, IntegrationConfig.every(0.1, 50.0, 1.0))[1]
        assert np.array_equal(recorded[:, 1:], expected.states)
        assert np.array_equal(recorded[:, 0], expected.times)

    def test_lf_line_endings(self, case1_file, tmp_path):
        out = tmp_path / "lf"
        assert main(["simulate", "--params", case1_file, "--out", str(out), "--n-init", "1", "--t-end", "3", "--h", "0.1"]) == EXIT_OK
        assert b"\r\n" not in (out / "run_000.csv").read_bytes()

    def test_json_format(self, case1_file, tmp_path):
        out = tmp_path / "js"
        args = ["simulate", "--params", case1_file, "--out", str(out), "--n-init", "1", "--t-end", "3", "--h", "0.1", "--format", "json"]
        assert main(args) == EXIT_OK
        data = json.loads((out / "run_000.json").read_text())
        assert list(data) == ["t", "S", "C", "I"]
        assert len(data["t"]) == 4

    def test_equilibrium_start_stays(self, case1, case1_file, tmp_path):
        out = tmp_path / "eq"
        start = ",".join(repr(v) for v in dee(case1))
        assert main(["simulate", "--params", case1_file, "--out", str(out), "--init", start, "--t-end", "100", "--h", "0.1"]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["runs"][0]["converged_at"] == 0.0

    def test_wrong_dimension(self, case1_file, tmp_path):
        assert main(["simulate", "--params", case1_file, "--out", str(tmp_path), "--init", "1,2"]) == EXIT_CONFIG

    def test_non_finite_exit_code(self, case1_file, tmp_path, monkeypatch, capsys):
        def explode(*args, **kwargs):
            raise NonFiniteState(12.5, run=2)

        monkeypatch.setattr(commands, "integrate_many", explode)
        assert main(["simulate", "--params", case1_file, "--out", str(tmp_path)]) == EXIT_NUMERIC
        err = capsys.readouterr().err
        assert "run 2" in err and "12.5" in err


class TestPhase:
    def test_case1(self, case1, case1_file, tmp_path):
        out = tmp_path / "phase.csv"
        assert main(["phase", "--params", case1_file, "--out", str(out), "--n-init", "10", *FAST]) == EXIT_OK

        frame = pd.read_csv(out, dtype={"run_id": str})
        assert list(frame.columns) == ["run_id", "t", "S", "C", "I"]
        assert set(frame["run_id"]) == {str(i) for i in range(10)} | {"equilibrium"}

        equilibrium = frame[frame["run_id"] == "equilibrium"][["S", "C", "I"]].to_numpy()[0]
        for _, run in frame[frame["run_id"] != "equilibrium"].groupby("run_id"):
            assert np.max(np.abs(run[["S", "C", "I"]].to_numpy()[-1] - equilibrium)) < 1e-2

    def test_case2_converges_too(self, case2_file, tmp_path):
        out = tmp_path / "phase.csv"
        assert main(["phase", "--params", case2_file, "--out", str(out), "--n-init", "3", *FAST]) == EXIT_OK
        frame = pd.read_csv(out, dtype={"run_id": str})
        equilibrium = frame[frame["run_id"] == "equilibrium"][["S", "C", "I"]].to_numpy()[0]
        finals = frame[frame["run_id"] != "equilibrium"].groupby("run_id")[["S", "C", "I"]].last().to_numpy()
        assert np.max(np.abs(finals - equilibrium)) < 1e-2

    def test_single_state_rejected(self, case1_file, tmp_path):
        assert main(["phase", "--params", case1_file, "--out", str(tmp_path / "p.csv"), "--init", "10,10,10"]) == EXIT_CONFIG
        assert main(["phase", "--params", case1_file, "--out", str(tmp_path / "p.csv"), "--n-init", "1"]) == EXIT_CONFIG


class TestSweep:
    def test_r0_increases_with_a(self, case1_file, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--params", case1_file, "--axis", "a", "--values", "0.001,0.008", "--out", str(out)]) == EXIT_OK

        frame = pd.read_csv(out)
        assert list(frame.columns) == ["value", "r0", "gas_holds", "legacy_2b", "verdict", "converged_at"]
        assert frame["value"].tolist() == [0.001, 0.008]
        assert frame["r0"].is_monotonic_increasing
        assert frame["converged_at"].isna().all()

    def test_verdict_switches_at_threshold(self, data_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--spec", str(data_dir / "sweep_a.yaml"), "--out", str(out)]) == EXIT_OK

        frame = pd.read_csv(out)
        below = frame[frame["r0"] <= 1.0]
        above = frame[frame["r0"] > 1.0]
        assert (below["verdict"] == "DFE-GAS").all()
        assert (above["verdict"] == "GAS-certified").all()
        assert len(below) == 2 and len(above) == 2

    def test_delta_towards_one(self, case1_file, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--params", case1_file, "--axis", "delta", "--values", "0.9,0.99,0.999,0.9999", "--out", str(out)]
        assert main(args) == EXIT_OK
        assert len(pd.read_csv(out)) == 4

    def test_invalid_value(self, case1_file, tmp_path, capsys):
        args = ["sweep", "--params", case1_file, "--axis", "delta", "--values", "0.5,1.0", "--out", str(tmp_path / "s.csv")]
        assert main(args) == EXIT_CONFIG
        assert "delta" in capsys.readouterr().err

    def test_missing_axis(self, case1_file, tmp_path):
        assert main(["sweep", "--params", case1_file, "--out", str(tmp_path / "s.csv")]) == EXIT_CONFIG

    def test_simulated_sweep(self, case1_file, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--params", case1_file, "--axis", "a", "--values", "0.002,0.008", "--simulate", "--out", str(out), *FAST]
        assert main(args) == EXIT_OK
        assert pd.read_csv(out)["converged_at"].notna().all()
