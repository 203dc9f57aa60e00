import csv
import io
import json
import subprocess
import sys

from gramkit import cli, gen_matrix
from gramkit.matrix import write_binary_matrix, write_text_matrix


def run_cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "gramkit", *args],
                          capture_output=True, text=True, timeout=300, **kw)


class TestExitCodes:
    def test_success(self):
        proc = run_cli("--rows", "16", "--cols", "12", "--workers", "1",
                       "--reps", "1", "--check")
        assert proc.returncode == 0, proc.stderr

    def test_usage_error_without_dims(self):
        assert run_cli().returncode == 2

    def test_usage_error_bad_workers(self):
        assert run_cli("--rows", "4", "--cols", "4", "--workers", "0").returncode == 2

    def test_usage_error_missing_input_file(self):
        assert run_cli("--input", "/nonexistent/matrix.txt").returncode == 2

    def test_verification_failure_returns_one(self, monkeypatch, capsys):
        real = cli.run_bench

        def tampered(*args, **kw):
            report = real(*args, **kw)
            report.check_passed = False
            report.check_max_error = 1.0
            report.check_error_loc = (0, 0)
            return report

        monkeypatch.setattr(cli, "run_bench", tampered)
        rc = cli.main(["--rows", "8", "--cols", "8", "--reps", "1", "--check"])
        assert rc == 1
        assert "FAILED" in capsys.readouterr().err


class TestOutputs:
    def test_csv_on_stdout(self):
        proc = run_cli("--rows", "20", "--cols", "15", "--workers", "2",
                       "--reps", "1", "--check", "--count-mults")
        assert proc.returncode == 0, proc.stderr
        rows = list(csv.DictReader(io.StringIO(proc.stdout)))
        assert len(rows) == 1
        assert rows[0]["check_passed"] == "true"
        assert int(rows[0]["mult_count"]) > 0

    def test_json_format(self):
        proc = run_cli("--rows", "12", "--cols", "12", "--reps", "1",
                       "--format", "json")
        assert proc.returncode == 0, proc.stderr
        rows = json.loads(proc.stdout)
        assert rows[0]["n"] == 12 and rows[0]["workers"] == 1

    def test_dump_tree(self):
        proc = run_cli("--rows", "64", "--cols", "64", "--workers", "15",
                       "--dump-tree")
        assert proc.returncode == 0, proc.stderr
        tree = json.loads(proc.stdout)
        assert tree["total_ranks"] == 15 and tree["max_levels"] == 1
        assert tree["root"]["kind"] == "gram"

    def test_trace_written(self, tmp_path):
        trace = tmp_path / "msgs.csv"
        proc = run_cli("--rows", "32", "--cols", "32", "--workers", "6",
                       "--reps", "1", "--trace", str(trace))
        assert proc.returncode == 0, proc.stderr
        assert trace.read_text().splitlines()[0] == "sender,receiver,words,node"

    def test_sweep_smoke(self):
        proc = run_cli("--rows", "16", "--cols", "16", "--sweep", "--reps", "1")
        assert proc.returncode == 0, proc.stderr
        rows = list(csv.DictReader(io.StringIO(proc.stdout)))
        assert len(rows) >= 1
        assert rows[0]["workers"] == "1"


class TestInputFiles:
    def test_text_input(self, tmp_path):
        path = tmp_path / "m.txt"
        write_text_matrix(gen_matrix(18, 11, seed=1), path)
        proc = run_cli("--input", str(path), "--reps", "1", "--check")
        assert proc.returncode == 0, proc.stderr
        rows = list(csv.DictReader(io.StringIO(proc.stdout)))
        assert rows[0]["m"] == "18" and rows[0]["n"] == "11"

    def test_binary_input(self, tmp_path):
        path = tmp_path / "m.bin"
        write_binary_matrix(gen_matrix(9, 14, seed=2), path)
        proc = run_cli("--input", str(path), "--reps", "1", "--check",
                       "--workers", "2")
        assert proc.returncode == 0, proc.stderr
        rows = list(csv.DictReader(io.StringIO(proc.stdout)))
        assert rows[0]["m"] == "9" and rows[0]["n"] == "14"
        assert rows[0]["check_passed"] == "true"
