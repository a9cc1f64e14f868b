import csv
import io
import json
import os
import subprocess
import sys

import pytest

from rewrite_arena.cli import main
from rewrite_arena.runner import CSV_COLUMNS


def run_cli(args, env=None):
    """Run the CLI in-process, capturing stdout."""
    import contextlib

    buf = io.StringIO()
    old_env = {}
    env = env or {}
    for k, v in env.items():
        old_env[k] = os.environ.get(k)
        os.environ[k] = v
    try:
        with contextlib.redirect_stdout(buf):
            code = main(args)
    finally:
        for k, v in old_env.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v
    return code, buf.getvalue()


def strip_wall_time(csv_text):
    rows = list(csv.reader(io.StringIO(csv_text)))
    idx = rows[0].index("wall_time_s")
    return [tuple(v for i, v in enumerate(row) if i != idx) for row in rows]


def test_bench_csv_schema_and_determinism():
    args = ["bench", "halide-mini", "--engine", "stochastic",
            "--workers", "1", "--seed", "7", "--format", "csv",
            "--time-limit", "2"]
    code1, out1 = run_cli(args)
    code2, out2 = run_cli(args)
    assert code1 == 0 and code2 == 0
    header = out1.splitlines()[0].split(",")
    assert header == CSV_COLUMNS
    assert strip_wall_time(out1) == strip_wall_time(out2)


def test_bench_json_schema_versioned():
    code, out = run_cli(["bench", "needle", "--n", "6", "--engine", "eqsat",
                         "--format", "json"])
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == 1
    row = data["rows"][0]
    assert row["engine"] == "eqsat"
    assert row["solved"] == 1
    assert row["units"] <= 2
    assert "aggregate" in data


def test_bench_both_engines_partition():
    code, out = run_cli(["bench", "needle", "--n", "4", "--engine", "both",
                         "--format", "json", "--workers", "1", "--seed", "3",
                         "--time-limit", "2"])
    assert code == 0
    data = json.loads(out)
    agg = data["aggregate"]
    assert set(agg["partition"]) == {
        "both_solved", "only_eqsat", "only_stochastic", "neither"}
    assert sum(agg["partition"].values()) == 1


def test_engine_specific_flags_rejected():
    with pytest.raises(SystemExit) as err:
        run_cli(["bench", "trig", "--engine", "eqsat", "--workers", "4"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        run_cli(["bench", "trig", "--engine", "stochastic",
                 "--iterations", "5"])
    assert err.value.code == 2


def test_unknown_suite_exits_2():
    code, _ = run_cli(["bench", "definitely-not-a-suite"])
    assert code == 2


def test_unreadable_suite_file_exits_2():
    code, _ = run_cli(["bench", "/nonexistent/path/suite.json"])
    assert code == 2


def test_gen_matmul_roundtrips_through_bench(tmp_path):
    out_path = tmp_path / "suite.json"
    code, _ = run_cli(["gen", "matmul", "--n", "4", "--count", "2",
                       "--seed", "5", "--output", str(out_path)])
    assert code == 0
    data = json.loads(out_path.read_text())
    assert data["schema"] == 1 and len(data["cases"]) == 2
    code, out = run_cli(["bench", str(out_path), "--engine", "eqsat",
                         "--format", "csv"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    assert all(r["solved"] == "1" for r in rows)
    assert all(float(r["ratio"]) == 1.0 for r in rows)


def test_output_file_written_atomically(tmp_path):
    out_path = tmp_path / "rows.csv"
    code, _ = run_cli(["bench", "needle", "--n", "3", "--engine", "eqsat",
                       "--format", "csv", "--output", str(out_path)])
    assert code == 0
    assert out_path.exists()
    assert not (tmp_path / "rows.csv.tmp").exists()
    header = out_path.read_text().splitlines()[0]
    assert header.split(",") == CSV_COLUMNS


def test_env_seed_overrides_flag():
    args = ["bench", "halide-mini", "--engine", "stochastic", "--workers",
            "1", "--seed", "7", "--format", "csv", "--time-limit", "2"]
    _, with_env = run_cli(args, env={"REWRITE_ARENA_SEED": "99"})
    _, with_flag = run_cli(["bench", "halide-mini", "--engine", "stochastic",
                            "--workers", "1", "--seed", "99", "--format",
                            "csv", "--time-limit", "2"])
    assert strip_wall_time(with_env) == strip_wall_time(with_flag)


def test_scale_rows(tmp_path):
    code, out = run_cli(["scale", "--suite", "halide-mini",
                         "--workers-list", "1", "--time-limit", "0.3",
                         "--seed", "2", "--format", "json"])
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[0]["workers"] == 1
    assert rows[0]["proposals"] > 0
    assert rows[0]["proposals_per_sec"] > 0


def test_bench_with_case_level_jobs():
    code, out = run_cli(["bench", "halide-mini", "--engine", "eqsat",
                         "--format", "csv", "--jobs", "2"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 12
    assert all(r["solved"] == "1" for r in rows)


def test_list_subcommand():
    code, out = run_cli(["list"])
    assert code == 0
    for token in ("matmul", "needle", "trig", "integration", "halide-mini"):
        assert token in out


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "rewrite_arena.cli", "list"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "trig" in proc.stdout
