import json

import pytest

from hgmlink.cli import STAGES, main

ARTIFACTS = ("a.csv", "b.csv", "gold.csv", "candidates.csv", "features.csv", "model.txt",
             "ranking.csv", "metrics.txt", "metrics.json")


def write_config(tmp_path, name="run", **extra):
    lines = ["seed = 7", f"out_dir = {tmp_path / name}", "record_count = 120", "max_iter = 25"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path = tmp_path / f"{name}.cfg"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp)
    with pytest.warns(UserWarning):
        assert main(["all", "-c", str(cfg)]) == 0
    return tmp, cfg


class TestPipeline:
    def test_all_writes_every_artifact(self, finished):
        tmp, _ = finished
        for name in ARTIFACTS:
            assert (tmp / "run" / name).is_file(), name
        metrics = json.loads((tmp / "run" / "metrics.json").read_text())
        assert 0.0 <= metrics["ranking"]["avg_precision"] <= 1.0
        assert "ranking.avg_precision = " in (tmp / "run" / "metrics.txt").read_text()

    @pytest.mark.parametrize("stage", STAGES)
    def test_stage_rerun_is_byte_identical(self, finished, stage):
        tmp, cfg = finished
        outputs = {"synth": ("a.csv", "b.csv", "gold.csv"), "block": ("candidates.csv",),
                   "featurize": ("features.csv",), "train": ("model.txt",),
                   "rank": ("ranking.csv",), "eval": ("metrics.txt", "metrics.json")}[stage]
        before = {n: (tmp / "run" / n).read_bytes() for n in outputs}
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert main([stage, "-c", str(cfg)]) == 0
        for n in outputs:
            assert (tmp / "run" / n).read_bytes() == before[n], n

    def test_supervised_eval_reports_folds(self, tmp_path):
        cfg = write_config(tmp_path, method="winkler-sup")
        assert main(["all", "-c", str(cfg)]) == 0
        metrics = json.loads((tmp_path / "run" / "metrics.json").read_text())
        assert metrics["cross_validation"]["folds"] == 3
        assert set(metrics["cross_validation"]) >= {"mean", "fold0", "fold1", "fold2"}

    def test_flags_override(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["synth", "-c", str(cfg), "--out-dir", str(tmp_path / "other"),
                     "-s", "record_count=40"]) == 0
        assert (tmp_path / "other" / "a.csv").read_text().count("\n") == 21


class TestErrors:
    def test_missing_ranking(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["eval", "-c", str(cfg)]) == 2
        assert "eval" in capsys.readouterr().err

    def test_bad_config_line(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("seed = 1\nout_dir = x\nnope = 2\n")
        assert main(["all", "-c", str(path)]) == 1
        assert "line 3" in capsys.readouterr().err

    def test_unknown_method(self, tmp_path):
        assert main(["all", "-c", str(write_config(tmp_path)), "--method", "svm"]) == 1

    def test_seed_required(self, tmp_path):
        assert main(["synth", "--out-dir", str(tmp_path)]) == 1

    def test_runtime_failure_names_stage(self, tmp_path, capsys):
        out = tmp_path / "run"
        out.mkdir()
        (out / "a.csv").write_text("id,last_name\nx,1\n")
        (out / "b.csv").write_text("id,last_name\nx,1\n")
        assert main(["block", "-c", str(write_config(tmp_path))]) == 1
        assert "block failed" in capsys.readouterr().err
