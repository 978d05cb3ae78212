import json

import pytest

from ruleboost.cli import main


def test_cli_run_and_report(small_task, capsys):
    task, cfg_path = small_task
    assert main(["run", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    rows = [json.loads(line) for line in out]
    assert [r["iteration"] for r in rows] == [0, 1, 2, 3]

    assert main(["report", "--config", str(cfg_path)]) == 0
    table = capsys.readouterr().out
    assert "coverage" in table and " 3 " in table


def test_cli_evaluate_and_export(small_task, capsys):
    task, cfg_path = small_task
    main(["run", "--config", str(cfg_path)])
    capsys.readouterr()

    assert main(["evaluate", "--config", str(cfg_path)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["metric"] == "accuracy"
    assert 0.0 <= result["value"] <= 1.0

    assert main(["export-rules", "--config", str(cfg_path)]) == 0
    rules = json.loads(capsys.readouterr().out)
    assert all(r["status"] == "accepted" for r in rules)


def test_cli_sweep_sigma(small_task, capsys):
    task, cfg_path = small_task
    assert main(["sweep-sigma", "--config", str(cfg_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    best = json.loads(lines[-1])
    assert "best_sigma" in best
    grid_rows = [json.loads(line) for line in lines[:-1]]
    assert all({"sigma", "coverage", "precision", "recall", "f1"} <= set(r) for r in grid_rows)


def test_cli_resume_flag(small_task, capsys):
    task, cfg_path = small_task
    assert main(["run", "--config", str(cfg_path)]) == 0
    capsys.readouterr()
    assert main(["run", "--config", str(cfg_path), "--resume"]) == 0
    rows = [json.loads(line) for line in capsys.readouterr().out.strip().splitlines()]
    assert len(rows) == 4


def test_cli_reports_missing_config():
    assert main(["run", "--config", "/nonexistent/config.yaml"]) == 1


def test_cli_report_before_run(small_task, capsys):
    task, cfg_path = small_task
    assert main(["report", "--config", str(cfg_path)]) == 1
    assert "run the pipeline first" in capsys.readouterr().err
