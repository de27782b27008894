import textwrap

import pytest

import awae.experiment as experiment
from awae.cli import main
from awae.evaluation import RESULTS_COLUMNS, read_results
from awae.stream import StreamConfig, generate_synthetic_stream, write_csv_stream

SMALL = """\
stream:
  n_chunks: 8
  chunk_size: 60
  n_features: 3
  n_drifts: 1
  drift_type: sudden
methods:
  - {method: awae, learner: gnb}
  - {method: sea, learner: gnb}
seeds: [0, 1, 2, 3, 4]
checkpoint_every: 3
output: out
"""


def write(tmp_path, text, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


class TestGenerate:
    def test_default_config_row_count(self, tmp_path):
        cfg = write(tmp_path, "stream: {}\nmethods: [{method: awae}]\nseeds: [0]\n")
        out = tmp_path / "s.csv"
        assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 50_001

    def test_byte_identical(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["generate", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["generate", "--config", str(cfg), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["generate", "--config", str(cfg), "--out", str(a)])
        main(["generate", "--config", str(cfg), "--out", str(b), "--seed-override", "9"])
        assert a.read_bytes() != b.read_bytes()

    def test_malformed_yaml_names_line(self, tmp_path, capsys):
        cfg = write(tmp_path, "stream:\n  n_chunks: 8\n  chunk_size: [1,\nmethods: []\n")
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
        assert "line " in capsys.readouterr().err

    def test_bad_value_names_line(self, tmp_path, capsys):
        cfg = write(tmp_path, SMALL.replace("n_drifts: 1", "n_drifts: -4"))
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
        err = capsys.readouterr().err
        assert "line 5" in err and "n_drifts" in err

    def test_unknown_key_names_line(self, tmp_path, capsys):
        cfg = write(tmp_path, SMALL.replace("  drift_type: sudden", "  drift_type: sudden\n  colour: red"))
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
        assert "line 7" in capsys.readouterr().err

    def test_learner_list_under_singular_key(self, tmp_path):
        cfg = write(tmp_path, SMALL.replace("{method: awae, learner: gnb}", "{method: awae, learner: [gnb, ht]}"))
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 0

    def test_unknown_learner(self, tmp_path, capsys):
        cfg = write(tmp_path, SMALL.replace("{method: awae, learner: gnb}", "{method: awae, learner: svm}"))
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
        assert "line 8" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["generate", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path / "x")]) == 2

    def test_usage_error(self):
        assert main(["generate"]) == 2


class TestRun:
    def test_grid_of_ten_runs(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        assert main(["run", "--config", str(cfg)]) == 0
        rows = read_results(tmp_path / "out" / "results.csv")
        assert len({r["run_id"] for r in rows}) == 10
        assert len(rows) == 10 * 7

    def test_refuses_overwrite_without_force(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        assert main(["run", "--config", str(cfg)]) == 0
        assert main(["run", "--config", str(cfg)]) == 2
        assert main(["run", "--config", str(cfg), "--force"]) == 0

    def test_deterministic(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()

    def test_workers_match_serial(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"])
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()

    def test_resume_after_interruption(self, tmp_path, monkeypatch):
        cfg = write(tmp_path, SMALL)
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "straight")])

        real_save = experiment.save_pool
        calls = {"n": 0}

        def interrupting_save(path, method, extra=None):
            real_save(path, method, extra)
            calls["n"] += 1
            if calls["n"] == 7:
                raise KeyboardInterrupt

        monkeypatch.setattr(experiment, "save_pool", interrupting_save)
        with pytest.raises(KeyboardInterrupt):
            main(["run", "--config", str(cfg), "--out", str(tmp_path / "resumed")])
        monkeypatch.setattr(experiment, "save_pool", real_save)
        assert not (tmp_path / "resumed" / "results.csv").exists()
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "resumed")]) == 0
        assert (tmp_path / "straight" / "results.csv").read_bytes() == (
            tmp_path / "resumed" / "results.csv"
        ).read_bytes()

    def test_missing_stream_file(self, tmp_path):
        cfg = write(tmp_path, "stream: {kind: csv, path: nowhere.csv, chunk_size: 10}\n"
                              "methods: [{method: awae}]\nseeds: [0]\noutput: out\n")
        assert main(["run", "--config", str(cfg)]) == 2

    def test_csv_stream_uses_balanced_accuracy(self, tmp_path):
        chunks = generate_synthetic_stream(StreamConfig(n_chunks=5, chunk_size=40, n_features=2, n_drifts=0))
        write_csv_stream(chunks, tmp_path / "data.csv")
        cfg = write(tmp_path, "stream: {kind: csv, path: data.csv, chunk_size: 40}\n"
                              "methods: [{method: awae}, {method: single}]\nseeds: [0]\noutput: out\n")
        assert main(["run", "--config", str(cfg)]) == 0
        rows = read_results(tmp_path / "out" / "results.csv")
        assert len(rows) == 2 * 4

    def test_failed_run_exits_one(self, tmp_path, monkeypatch):
        cfg = write(tmp_path, SMALL)

        def broken(*args, **kwargs):
            raise RuntimeError("learner exploded")

        monkeypatch.setattr("awae.learners.fit_arrays", broken)
        monkeypatch.setattr("awae.learners.fit", broken)
        assert main(["run", "--config", str(cfg)]) == 1
        assert (tmp_path / "out" / "failures.csv").exists()


class TestReport:
    def _results(self, tmp_path, text=SMALL):
        cfg = write(tmp_path, text)
        assert main(["run", "--config", str(cfg)]) == 0
        return tmp_path / "out" / "results.csv"

    def test_outputs(self, tmp_path, capsys):
        results = self._results(tmp_path)
        capsys.readouterr()
        assert main(["report", str(results)]) == 0
        table = capsys.readouterr().out
        assert "awae" in table.lower() or "AWAE" in table
        report = tmp_path / "out" / "report"
        assert (report / "table.md").exists() and (report / "comparisons.csv").exists()
        assert len(list((report / "curves").glob("*.csv"))) == 10

    def test_pure(self, tmp_path):
        results = self._results(tmp_path)
        main(["report", str(results), "--out", str(tmp_path / "r1")])
        main(["report", str(results), "--out", str(tmp_path / "r2")])
        for name in ("table.md", "table.csv", "comparisons.csv"):
            assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()

    def test_single_method_has_no_markers(self, tmp_path, capsys):
        results = self._results(tmp_path, SMALL.replace("  - {method: sea, learner: gnb}\n", ""))
        capsys.readouterr()
        assert main(["report", str(results)]) == 0
        out = capsys.readouterr().out
        assert "(" not in out

    def test_empty_results(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("# awae-results v1\n" + ",".join(RESULTS_COLUMNS) + "\n")
        assert main(["report", str(path)]) == 3

    def test_missing_results(self, tmp_path):
        assert main(["report", str(tmp_path / "none.csv")]) == 2


@pytest.mark.parametrize("name", ["default_grid.yaml", "desk_bals.yaml"])
def test_shipped_configs_parse(name):
    from pathlib import Path

    config = experiment.load_config(Path(__file__).parent.parent / "configs" / name)
    assert experiment.run_grid(config)
