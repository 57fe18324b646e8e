import csv
import json

import pytest

from hypermatch.cli import CSV_COLUMNS, main
from hypermatch.core import parse_instance, parse_vertex_instance, serialize_vertex_instance
from hypermatch.adversaries import gen_random_vertex_arrival


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def gk_file(tmp_path):
    path = tmp_path / "gk.json"
    assert run_cli("gen", "--adversary", "gk", "--k", "8", "--seed", "3", "--out", str(path)) == 0
    return path


class TestGen:
    def test_writes_instance_and_colors(self, gk_file):
        inst = parse_instance(gk_file.read_text())
        assert inst.rank_k == 8
        colors = json.loads((gk_file.parent / "gk.json.colors.json").read_text())
        assert set(colors["colors"].values()) == {"red", "blue"}

    def test_random_needs_size_flags(self, capsys):
        assert run_cli("gen", "--adversary", "random", "--k", "3") == 2
        assert "edges" in capsys.readouterr().err

    def test_staircase_not_generable(self):
        assert run_cli("gen", "--adversary", "staircase", "--k", "8") == 2

    def test_unknown_flag_is_usage_error(self):
        assert run_cli("gen", "--adversary", "gk", "--k", "8", "--frobnicate") == 2


class TestRun:
    def test_csv_row_schema(self, gk_file, tmp_path, capsys):
        out = tmp_path / "row.csv"
        code = run_cli(
            "run", str(gk_file), "--algorithm", "waterfill",
            "--certify", "--opt", "both", "--out", str(out),
        )
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert list(rows[0]) == CSV_COLUMNS
        assert rows[0]["cert_pass"] == "true"
        assert float(rows[0]["OPT_int"]) == 4.0

    def test_missing_instance_file(self, capsys):
        assert run_cli("run", "/nonexistent.json", "--algorithm", "greedy") == 2

    def test_greedy_cannot_certify(self, gk_file):
        assert run_cli("run", str(gk_file), "--algorithm", "greedy", "--certify") == 2

    def test_transcript_then_certify_round_trip(self, gk_file, tmp_path):
        t = tmp_path / "transcript.json"
        assert run_cli(
            "run", str(gk_file), "--algorithm", "waterfill",
            "--certify", "--transcript", str(t),
        ) == 0
        assert run_cli("certify", str(t)) == 0

    def test_certify_detects_tampered_transcript(self, gk_file, tmp_path, capsys):
        t = tmp_path / "transcript.json"
        run_cli("run", str(gk_file), "--algorithm", "waterfill", "--certify",
                "--transcript", str(t))
        obj = json.loads(t.read_text())
        obj["arrivals"][2]["dy"] += 0.01
        t.write_text(json.dumps(obj))
        assert run_cli("certify", str(t)) == 1
        assert "index 2" in capsys.readouterr().err


class TestBench:
    def test_csv_report_with_json_mirror(self, tmp_path):
        out = tmp_path / "report.csv"
        code = run_cli(
            "bench", "--algorithm", "greedy", "--adversary", "gk", "--k", "8",
            "--trials", "4", "--seed", "100", "--opt", "int", "--out", str(out),
        )
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 4
        assert [r["seed"] for r in rows] == ["100", "101", "102", "103"]
        mirror = json.loads((tmp_path / "report.csv.json").read_text())
        assert mirror["summary"]["trials"] == 4
        assert mirror["summary"]["mean_ALG"] == 2.0

    def test_parallel_trials_match_serial(self, tmp_path):
        args = [
            "bench", "--algorithm", "waterfill", "--adversary", "random",
            "--k", "3", "--edges", "10", "--resources", "9",
            "--trials", "3", "--seed", "7", "--format", "json",
        ]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run_cli(*args, "--out", str(a)) == 0
        assert run_cli(*args, "--jobs", "2", "--out", str(b)) == 0
        ra = json.loads(a.read_text())["rows"]
        rb = json.loads(b.read_text())["rows"]
        strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_ms"} for r in rows]
        assert strip(ra) == strip(rb)

    def test_staircase_bench(self, tmp_path):
        out = tmp_path / "s.json"
        code = run_cli(
            "bench", "--algorithm", "waterfill", "--adversary", "staircase",
            "--k", "64", "--l", "8", "--delta", "0.25", "--trials", "1",
            "--format", "json", "--out", str(out),
        )
        assert code == 0
        row = json.loads(out.read_text())["rows"][0]
        assert float(row["ALG"]) > 0 and float(row["OPT_int"]) > 0


class TestReduceAndOpt:
    def test_reduce_round_trip(self, tmp_path):
        v = gen_random_vertex_arrival(3, 5, 10, seed=4)
        src = tmp_path / "groups.json"
        src.write_text(serialize_vertex_instance(v))
        out = tmp_path / "reduced.json"
        assert run_cli("reduce", str(src), "--out", str(out)) == 0
        inst = parse_instance(out.read_text())
        assert inst.rank_k == 4
        mapping = json.loads((tmp_path / "reduced.json.map.json").read_text())
        assert len(mapping["group_resources"]) == 5

    def test_opt_both(self, gk_file, tmp_path):
        out = tmp_path / "opt.json"
        assert run_cli("opt", str(gk_file), "--which", "both", "--out", str(out)) == 0
        obj = json.loads(out.read_text())
        assert obj["opt_int"] == 4.0
        assert obj["opt_frac"] == pytest.approx(4.0, abs=1e-9)
