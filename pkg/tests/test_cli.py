import json

import pytest

from legpcg.cli import main


def write_config(tmp_path, **cfg):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestSolve:
    def test_benchmark_preset(self, tmp_path, capsys):
        cfg = write_config(tmp_path, example="example1a", n=320, t1=6, t2=2)
        assert main(["solve", "--config", cfg]) == 0
        out = capsys.readouterr().out
        line = next(l for l in out.splitlines() if l.startswith("iterations:"))
        assert 5 <= int(line.split()[1]) <= 9  # published value 7

    def test_constant_problem_single_iteration(self, tmp_path, capsys):
        cfg = write_config(tmp_path, coefficients={"beta": 1.0}, dim=1, n=64)
        assert main(["solve", "--config", cfg]) == 0
        assert "iterations: 1" in capsys.readouterr().out

    def test_output_file(self, tmp_path, capsys):
        out_file = tmp_path / "report.json"
        cfg = write_config(tmp_path, example="example2b", n=20, t1=5, t2=0,
                           output=str(out_file))
        assert main(["solve", "--config", cfg]) == 0
        capsys.readouterr()
        report = json.loads(out_file.read_text())
        assert report["converged"] is True
        assert report["N"] == 20

    def test_malformed_config_names_bad_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, example="example1a", n=320, tee1=6)
        assert main(["solve", "--config", cfg]) == 1
        assert "tee1" in capsys.readouterr().err

    def test_unknown_preset(self, tmp_path, capsys):
        cfg = write_config(tmp_path, example="example9x", n=320)
        assert main(["solve", "--config", cfg]) == 1

    def test_unparseable_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["solve", "--config", str(path)]) == 1

    def test_non_convergence_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, example="example2a", n=16,
                           preconditioner="none", epsilon=1e-12, kmax=3)
        assert main(["solve", "--config", cfg]) == 2


class TestTable:
    def test_csv_shape(self, tmp_path, capsys):
        out = tmp_path / "table.csv"
        assert main(["table", "--example", "example4b", "--n", "12,16",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ("example,d,N,t1,t2,iterations,converged,"
                            "rel_residual,setup_s,iter_mean_s")
        assert len(lines) == 1 + 3 * 2  # header + 3 t-configs x 2 N

    def test_csv_is_deterministic(self, tmp_path, capsys):
        texts = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert main(["table", "--example", "example2b", "--n", "16",
                         "--t", "5,0", "--out", str(out)]) == 0
            rows = [l.split(",")[:8] for l in out.read_text().splitlines()]
            texts.append(rows)  # drop the timing columns
        assert texts[0] == texts[1]

    def test_unknown_example(self, capsys):
        assert main(["table", "--example", "nosuch"]) == 1

    def test_empty_n_list(self, capsys):
        assert main(["table", "--example", "example1a", "--n", ""]) == 1

    def test_bad_t_pair(self, capsys):
        assert main(["table", "--example", "example1a", "--n", "64",
                     "--t", "6"]) == 1

    def test_json_format(self, tmp_path, capsys):
        out = tmp_path / "t.json"
        assert main(["table", "--example", "example1b", "--n", "64",
                     "--t", "4,0", "--format", "json",
                     "--out", str(out)]) == 0
        rows = json.loads(out.read_text())
        assert len(rows) == 1
        assert rows[0]["converged"] is True


class TestBenchMatvec:
    def test_smoke_3d(self, tmp_path, capsys):
        out = tmp_path / "m.csv"
        assert main(["bench-matvec", "--dim", "3", "--n", "16", "--preset",
                     "example3a", "--reps", "3", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "d,N,op,time_s"
        assert len(lines) == 3  # header + one row per operator
        assert {l.split(",")[2] for l in lines[1:]} == {"A", "B"}

    def test_too_few_repetitions(self, capsys):
        assert main(["bench-matvec", "--dim", "1", "--n", "64",
                     "--reps", "1"]) == 1

    def test_dimension_mismatch(self, capsys):
        assert main(["bench-matvec", "--dim", "2", "--n", "16",
                     "--preset", "example1a", "--reps", "3"]) == 1


class TestRank:
    def test_rank_table(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert main(["rank", "--preset", "expx", "--which", "B",
                     "--n", "320", "--tau", "1e-6", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1].split(",") == ["expx", "B", "320", "3"]

    def test_odd_n_rejected(self, capsys):
        assert main(["rank", "--preset", "expx", "--which", "B",
                     "--n", "321"]) == 1

    def test_unknown_preset(self, capsys):
        assert main(["rank", "--preset", "nosuch", "--which", "B",
                     "--n", "320"]) == 1


class TestParser:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 1

    def test_unknown_flag(self, capsys):
        assert main(["table", "--example", "example1a", "--frobnicate"]) == 1
