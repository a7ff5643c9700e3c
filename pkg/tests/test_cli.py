import json

import numpy as np
import pytest

import recoursekit as rk
from recoursekit.cli import main


@pytest.fixture
def workspace(tmp_path):
    model = {"intercept": -2.5, "coefficients": {"f1": 1.0, "f2": 1.0, "f3": 1.0}}
    (tmp_path / "model.json").write_text(json.dumps(model))
    actions = [
        {"name": "f1", "kind": "binary", "lb": 0, "ub": 1, "actionability": "fixed"},
        {"name": "f2", "kind": "binary", "lb": 0, "ub": 1, "actionability": "any"},
        {"name": "f3", "kind": "binary", "lb": 0, "ub": 1, "actionability": "any"},
    ]
    (tmp_path / "actions.json").write_text(json.dumps(actions))
    rows = ["f1,f2,f3,y"]
    rng = np.random.default_rng(7)
    for _ in range(24):
        f1, f2, f3 = rng.integers(0, 2, size=3)
        label = 1 if f1 + f2 + f3 >= 2 else -1
        rows.append(f"{f1},{f2},{f3},{label}")
    (tmp_path / "data.csv").write_text("\n".join(rows) + "\n")
    (tmp_path / "point.json").write_text(json.dumps({"f1": 0, "f2": 1, "f3": 1}))
    return tmp_path


def run(args):
    return main([str(a) for a in args])


class TestAudit:
    def test_happy_path_writes_json_and_csv(self, workspace):
        rc = run([
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--cost", "max_pct",
            "--label-column", "y", "--out", workspace / "report",
        ])
        assert rc == 0
        report = json.loads((workspace / "report.json").read_text())
        assert report["n_rows"] == 24
        assert 0.0 <= (report["feasibility_rate"] or 0.0) <= 1.0
        csv_text = (workspace / "report.csv").read_text()
        assert csv_text.startswith("row,label,status,cost,support\n")

    def test_reruns_are_byte_identical(self, workspace):
        args = [
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--label-column", "y",
            "--out", workspace / "r1",
        ]
        assert run(args) == 0
        first = (workspace / "r1.json").read_bytes()
        args[-1] = workspace / "r2"
        assert run(args) == 0
        assert first == (workspace / "r2.json").read_bytes()

    def test_worker_count_does_not_change_bytes(self, workspace):
        base = [
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--label-column", "y",
        ]
        assert run(base + ["--jobs", "1", "--out", workspace / "serial"]) == 0
        assert run(base + ["--jobs", "8", "--out", workspace / "pooled"]) == 0
        assert (workspace / "serial.json").read_bytes() == (workspace / "pooled.json").read_bytes()
        assert (workspace / "serial.csv").read_bytes() == (workspace / "pooled.csv").read_bytes()

    def test_column_missing_from_action_set(self, workspace, capsys):
        actions = json.loads((workspace / "actions.json").read_text())[:2]
        (workspace / "partial.json").write_text(json.dumps(actions))
        rc = run([
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "partial.json", "--label-column", "y",
            "--out", workspace / "nope",
        ])
        assert rc == 1
        assert "f3" in capsys.readouterr().err
        assert not (workspace / "nope.json").exists()

    def test_all_infeasible_report_is_valid_json(self, workspace):
        # freeze every feature: every denied row becomes certified infeasible
        actions = [
            {"name": n, "kind": "binary", "lb": 0, "ub": 1, "actionability": "fixed"}
            for n in ("f1", "f2", "f3")
        ]
        (workspace / "frozen.json").write_text(json.dumps(actions))
        rc = run([
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "frozen.json", "--label-column", "y",
            "--out", workspace / "frozen_report",
        ])
        assert rc == 0
        report = json.loads((workspace / "frozen_report.json").read_text())
        assert report["feasibility_rate"] in (0.0, None)
        assert report["cost_quantiles"] is None


class TestFlipset:
    def test_denied_point_certified_infeasible_exit_zero(self, workspace, capsys):
        rc = run([
            "flipset", "--model", workspace / "model.json",
            "--actions", workspace / "actions.json",
            "--point", workspace / "point.json", "--items", "5",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "No actionable recourse" in out

    def test_writes_documents(self, workspace):
        # use a feasible point: (0, 0, 0) with f2/f3 actionable cannot flip
        # (max score -0.5), so relax the threshold via a friendlier model
        model = {"intercept": -0.5, "coefficients": {"f1": 1.0, "f2": 1.0, "f3": 1.0}}
        (workspace / "model2.json").write_text(json.dumps(model))
        (workspace / "p2.json").write_text(json.dumps({"f1": 0, "f2": 0, "f3": 0}))
        rc = run([
            "flipset", "--model", workspace / "model2.json",
            "--actions", workspace / "actions.json",
            "--point", workspace / "p2.json", "--items", "3",
            "--out", workspace / "fs",
        ])
        assert rc == 0
        doc = json.loads((workspace / "fs.json").read_text())
        assert doc["items"]
        assert doc["items"][0]["cost"] <= doc["items"][-1]["cost"]
        assert "->" in (workspace / "fs.txt").read_text()

    def test_percentile_cost_needs_population(self, workspace, capsys):
        rc = run([
            "flipset", "--model", workspace / "model.json",
            "--actions", workspace / "actions.json",
            "--point", workspace / "point.json", "--cost", "total_log_pct",
        ])
        assert rc == 1
        assert "population" in capsys.readouterr().err

    def test_row_selector(self, workspace, capsys):
        rc = run([
            "flipset", "--model", workspace / "model.json",
            "--actions", workspace / "actions.json",
            "--data", workspace / "data.csv", "--label-column", "y", "--row", "0",
            "--cost", "linear",
        ])
        assert rc in (0, 1)  # row 0 may be predicted +1, which is an input error
        if rc == 1:
            assert "already predicted" in capsys.readouterr().err


class TestCalibrate:
    def test_rewrites_intercept_for_target_rate(self, workspace):
        rc = run([
            "calibrate", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--label-column", "y", "--rate", "0.25", "--out", workspace / "calibrated.json",
        ])
        assert rc == 0
        model = rk.load_model(workspace / "calibrated.json")
        data = rk.load_dataset(workspace / "data.csv", label_column="y")
        scores = data.rows @ model.coefficient_vector() + model.intercept
        rate = float(np.mean(scores >= 0))
        assert rate >= 0.25
        assert model.coefficients == (1.0, 1.0, 1.0)


class TestAnalyze:
    def test_writes_guarantee_and_bound(self, workspace):
        rc = run([
            "analyze", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--label-column", "y",
            "--out", workspace / "analysis.json",
        ])
        assert rc == 0
        doc = json.loads((workspace / "analysis.json").read_text())
        assert doc["guarantee"]["verdict"] == "indeterminate"
        assert "bound" in doc["expected_cost_bound"]
        assert doc["bound_check"]["holds"] is True

    def test_disparity_with_group_column(self, workspace):
        rc = run([
            "analyze", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--label-column", "y",
            "--group", "f1", "--out", workspace / "analysis2.json",
        ])
        assert rc == 0
        doc = json.loads((workspace / "analysis2.json").read_text())
        assert "disparity" in doc
        assert set(doc["disparity"]["groups"]) <= {"0.0", "1.0"}


class TestExitCodes:
    def test_missing_file_is_input_error(self, workspace, capsys):
        rc = run([
            "audit", "--model", workspace / "missing.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--out", workspace / "x",
        ])
        assert rc == 1

    def test_bad_rate_is_input_error(self, workspace):
        rc = run([
            "calibrate", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--rate", "1.5", "--out", workspace / "m.json",
        ])
        assert rc == 1

    def test_unexpected_failure_is_exit_two(self, workspace, capsys, monkeypatch):
        import recoursekit.cli as cli_module

        def boom(*args, **kwargs):
            raise RuntimeError("wires crossed")

        monkeypatch.setattr(cli_module, "run_audit", boom)
        rc = run([
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--label-column", "y",
            "--out", workspace / "boom",
        ])
        assert rc == 2
        assert "internal error" in capsys.readouterr().err
        assert not (workspace / "boom.json").exists()

    def test_l2_cost_flag_is_accepted_but_unsolvable(self, workspace, capsys):
        rc = run([
            "audit", "--model", workspace / "model.json", "--data", workspace / "data.csv",
            "--actions", workspace / "actions.json", "--cost", "l2",
            "--label-column", "y", "--out", workspace / "l2report",
        ])
        assert rc == 1
        assert "l2" in capsys.readouterr().err
