"""Scenario runner: reports, log-recomputability, batch determinism."""

import json

import pytest

from boltsim.runner import (batch_summary, report_from_logs, run_batch,
                            run_scenario)
from boltsim.scenario import load_document, load_spec, locate


class TestRunScenario:
    def test_nominal_success(self, tmp_path):
        spec = load_spec("nominal")
        report = run_scenario(spec, seed=0, out_dir=tmp_path / "run")
        assert report.outcome == "Success"
        assert report.final_bolt_torque >= spec.bolt.target_torque
        assert report.safety_trip_count == 0
        assert (tmp_path / "run" / "report.json").exists()

    def test_report_recomputable_from_logs(self, tmp_path):
        spec = load_spec("exp_compliance_ab", variant="B")
        live = run_scenario(spec, seed=4, out_dir=tmp_path / "b")
        redone = report_from_logs(tmp_path / "b" / "telemetry.jsonl", spec, 4)
        assert redone.outcome == live.outcome
        assert redone.peak_normal_force == pytest.approx(live.peak_normal_force)
        assert redone.final_bolt_torque == pytest.approx(live.final_bolt_torque)
        assert redone.safety_trip_count == live.safety_trip_count
        assert redone.coupling_error == pytest.approx(live.coupling_error)

    def test_full_rate_telemetry(self, tmp_path):
        spec = load_spec("exp_compliance_ab", variant="B")
        run_scenario(spec, seed=0, out_dir=tmp_path / "t")
        frames = [json.loads(l) for l in
                  open(tmp_path / "t" / "telemetry.jsonl")]
        seqs = [f["seq"] for f in frames]
        assert seqs == list(range(len(seqs)))  # one frame per tick, no gaps
        assert frames[1]["time"] - frames[0]["time"] == pytest.approx(0.002)


class TestBatch:
    def test_single_run_equals_batch_of_one(self, tmp_path):
        doc = load_document(locate("exp_compliance_ab"))
        results = run_batch(doc, 1, seed_base=7, out_dir=tmp_path / "batch",
                            variants=["B"])
        solo = run_scenario(load_spec("exp_compliance_ab", variant="B"), seed=7)
        got = results["B"][0]
        assert got.outcome == solo.outcome
        assert got.peak_normal_force == solo.peak_normal_force

    def test_byte_identical_reruns(self, tmp_path):
        doc = load_document(locate("exp_compliance_ab"))
        run_batch(doc, 2, seed_base=0, out_dir=tmp_path / "one")
        run_batch(doc, 2, seed_base=0, out_dir=tmp_path / "two")
        for rel in ("runs.csv", "summary.json",
                    "A_seed0/telemetry.jsonl", "A_seed1/telemetry.jsonl",
                    "B_seed0/telemetry.jsonl", "B_seed1/telemetry.jsonl",
                    "A_seed0/events.jsonl", "B_seed0/events.jsonl"):
            a = (tmp_path / "one" / rel).read_bytes()
            b = (tmp_path / "two" / rel).read_bytes()
            assert a == b, rel

    def test_summary_statistics(self, tmp_path):
        doc = load_document(locate("exp_compliance_ab"))
        results = run_batch(doc, 3, seed_base=0)
        summary = batch_summary(results)
        assert summary["A"]["trip_rate"] == 0.0
        assert summary["B"]["trip_rate"] == 1.0
        assert summary["A"]["peak_normal_force_mean"] < \
            0.5 * summary["B"]["peak_normal_force_mean"]


class TestCli:
    def test_run_with_expected_outcome(self, tmp_path, capsys):
        from boltsim.cli import main
        rc = main(["run", "exp_compliance_ab", "--variant", "B",
                   "--seed", "0", "--out", str(tmp_path / "cli")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "SafetyTrip" in out

    def test_exit_nonzero_on_mismatch(self, tmp_path):
        from boltsim.cli import main
        # variant A expects Success; forcing rigid mode via B... instead use
        # a spec whose expectation cannot hold: B expects SafetyTrip, runs B
        # honestly, so craft a file with a wrong expectation
        doc = load_document(locate("exp_compliance_ab"))
        doc.pop("variants")
        doc["admittance"] = dict(doc.get("admittance", {}), rigid_mode=True)
        doc["expected_outcome"] = "Success"
        p = tmp_path / "wrong.json"
        p.write_text(json.dumps(doc))
        rc = main(["run", str(p), "--seed", "0"])
        assert rc == 1

    def test_batch_summary_output(self, tmp_path, capsys):
        from boltsim.cli import main
        rc = main(["run", "exp_compliance_ab", "--batch", "2",
                   "--seed", "0", "--out", str(tmp_path / "b")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "trip_rate" in out
        assert (tmp_path / "b" / "runs.csv").exists()
