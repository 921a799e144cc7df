import json

import numpy as np
import pytest

import coax.cli as cli
from coax.bench import BenchCorrectnessError
from coax.dataset import load_csv
from coax.grid import full_scan
from coax.translate import QueryRect

from synth import PlantedFd, planted_dataset

TIMING_FIELDS = ("build_ms", "median_query_us", "p99_query_us")


@pytest.fixture(scope="module")
def fd_csv(tmp_path_factory):
    d, _ = planted_dataset(
        4000, 3, (PlantedFd(x_dim=0, d_dim=1, slope=2.0, intercept=5.0, noise=3.0),), 0.10, seed=41
    )
    p = tmp_path_factory.mktemp("data") / "fd.csv"
    rows = d.matrix()
    with open(p, "w") as f:
        f.write(",".join(d.names) + "\n")
        for r in rows:
            f.write(",".join(f"{v:.9g}" for v in r) + "\n")
    return p


def run(argv):
    return cli.main(argv)


class TestDetect:
    def test_finds_planted_group(self, fd_csv, tmp_path):
        out = tmp_path / "models.json"
        assert run(["detect", str(fd_csv), "--sample", "4000", "--seed", "1", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["groups"]) == 1
        deps = {m["dependent"] for m in doc["groups"][0]["models"]}
        assert doc["groups"][0]["predictor"] in (0, 1)
        assert len(deps) == 1

    def test_byte_identical_reruns(self, fd_csv, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        argv = ["detect", str(fd_csv), "--sample", "4000", "--seed", "1"]
        assert run(argv + ["-o", str(a)]) == 0
        assert run(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_file_is_usage_error(self, tmp_path):
        assert run(["detect", str(tmp_path / "none.csv")]) == 1


class TestBuildAndQuery:
    def test_round_trip_matches_oracle(self, fd_csv, tmp_path, capsys):
        models = tmp_path / "models.json"
        ixp = tmp_path / "ix.bin"
        assert run(["detect", str(fd_csv), "--sample", "4000", "--seed", "1", "-o", str(models)]) == 0
        assert run(
            ["build", str(fd_csv), "--models", str(models), "--cells", "8", "-o", str(ixp)]
        ) == 0
        capsys.readouterr()

        assert run(["query", str(ixp), "--rect", '{"1": [100, 160]}']) == 0
        doc = json.loads(capsys.readouterr().out)
        d = load_csv(fd_csv)
        want = full_scan(d.matrix(), QueryRect.from_bounds(3, {1: (100.0, 160.0)}))
        assert doc["count"] == len(want)
        assert doc["row_ids"] == sorted(int(i) for i in want)

    def test_query_rect_list_form(self, fd_csv, tmp_path, capsys):
        ixp = tmp_path / "ix.bin"
        assert run(["build", str(fd_csv), "--sample", "4000", "-o", str(ixp)]) == 0
        capsys.readouterr()
        rect = json.dumps([[None, None], [100, 160], [None, None]])
        assert run(["query", str(ixp), "--rect", rect, "--limit", "3"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["row_ids"]) <= 3
        assert doc["truncated"] in (True, False)

    def test_malformed_rect_is_usage_error(self, fd_csv, tmp_path, capsys):
        ixp = tmp_path / "ix.bin"
        assert run(["build", str(fd_csv), "--sample", "4000", "-o", str(ixp)]) == 0
        capsys.readouterr()
        assert run(["query", str(ixp), "--rect", "{not json"]) == 1
        assert run(["query", str(ixp), "--rect", '{"9": [0, 1]}']) == 1
        assert run(["query", str(ixp), "--rect", '{"0": [5, 1]}']) == 1


class TestBench:
    def test_report_csv_and_figures(self, fd_csv, tmp_path):
        out = tmp_path / "report.json"
        rc = run(
            [
                "bench",
                str(fd_csv),
                "--workload-k",
                "20",
                "--queries",
                "12",
                "--kinds",
                "point,range",
                "--indexes",
                "coax,fullscan",
                "--cells",
                "4,8",
                "--sample",
                "4000",
                "--seed",
                "2",
                "-o",
                str(out),
            ]
        )
        assert rc == 0
        report = json.loads(out.read_text())
        assert len(report["runs"]) == 2
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "report_latency_memory.png").exists()
        assert (tmp_path / "report_rows_scanned.png").exists()

    def test_non_timing_fields_byte_identical(self, fd_csv, tmp_path):
        def strip_timings(path):
            doc = json.loads(path.read_text())
            for run_ in doc["runs"]:
                for e in run_["indexes"]:
                    for k in TIMING_FIELDS:
                        e.pop(k)
            return json.dumps(doc, sort_keys=True)

        argv = [
            "bench",
            str(fd_csv),
            "--workload-k",
            "10",
            "--queries",
            "8",
            "--indexes",
            "coax,fullscan",
            "--cells",
            "4",
            "--sample",
            "4000",
            "--seed",
            "3",
            "--no-figures",
        ]
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert run(argv + ["-o", str(a)]) == 0
        assert run(argv + ["-o", str(b)]) == 0
        assert strip_timings(a) == strip_timings(b)

    def test_unknown_workload_kind_is_usage_error(self, fd_csv):
        assert run(["bench", str(fd_csv), "--kinds", "zigzag"]) == 1

    def test_unknown_index_kind_is_usage_error(self, fd_csv):
        assert run(["bench", str(fd_csv), "--indexes", "rtree"]) == 1

    def test_unknown_flag_is_usage_error(self, fd_csv):
        assert run(["bench", str(fd_csv), "--definitely-not-a-flag"]) == 1

    def test_correctness_failure_exits_two(self, fd_csv, monkeypatch):
        def boom(*a, **k):
            raise BenchCorrectnessError("coax[cells=4]", [{"query": 0}])

        monkeypatch.setattr(cli, "run_bench", boom)
        rc = run(
            ["bench", str(fd_csv), "--queries", "4", "--indexes", "fullscan", "--cells", "4", "--sample", "4000"]
        )
        assert rc == 2

    def test_memory_cap_skips_oversized_grids(self, fd_csv, tmp_path):
        out = tmp_path / "report.json"
        rc = run(
            [
                "bench",
                str(fd_csv),
                "--queries",
                "4",
                "--workload-k",
                "5",
                "--indexes",
                "uniformgrid,fullscan",
                "--cells",
                "4,64",
                "--sample",
                "4000",
                "--no-figures",
                "-o",
                str(out),
            ]
        )
        assert rc == 0
        report = json.loads(out.read_text())
        names = [e["name"] for e in report["runs"][0]["indexes"]]
        assert "uniformgrid[cells=64]" not in names  # 64^3 cells outweigh 4000 rows
        assert any(s["name"] == "uniformgrid[cells=64]" for s in report["skipped"])


class TestTheoryCli:
    def test_byte_identical_reruns(self, tmp_path):
        argv = [
            "theory",
            "--eps-over-sigma",
            "5",
            "--trials",
            "60",
            "--n",
            "20000",
            "--seed",
            "1",
            "--no-figures",
        ]
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert run(argv + ["-o", str(a)]) == 0
        assert run(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_writes_csv_and_figure(self, tmp_path):
        out = tmp_path / "theory.json"
        rc = run(
            ["theory", "--eps-over-sigma", "5", "--trials", "40", "--n", "20000", "--seed", "2", "-o", str(out)]
        )
        assert rc == 0
        assert (tmp_path / "theory.csv").exists()
        assert (tmp_path / "theory_convergence.png").exists()

    def test_empty_ratio_list_is_usage_error(self):
        assert run(["theory", "--eps-over-sigma", ","]) == 1


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert run([]) == 1

    def test_unknown_command_is_usage_error(self):
        assert run(["frobnicate"]) == 1
