import json

import pytest

from slotforge.cli import build_parser, main

ROWS = ["--rows", "0:30:130:10:5:30:5", "--rows", "90:30:130:10:5:30:5"]
FAST = ["--pca-d", "12", "--max-iter", "2000"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["generate", "--out-dir", str(out), *ROWS]) == 0
    assert main(["train", "--out-dir", str(out), "--dataset", str(out / "dataset.csv"), *FAST]) == 0
    return out


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenerate:
    def test_single_row_count(self, tmp_path, capsys):
        code, out, _ = run(["generate", "--out-dir", str(tmp_path), "--rows", "10:25:125:3:5:45:3"], capsys)
        assert code == 0
        assert out.startswith("476 samples")
        assert len((tmp_path / "dataset.csv").read_text().splitlines()) == 477

    def test_idempotent(self, tmp_path):
        main(["generate", "--out-dir", str(tmp_path), *ROWS])
        first = (tmp_path / "dataset.csv").read_bytes()
        main(["generate", "--out-dir", str(tmp_path), *ROWS])
        assert (tmp_path / "dataset.csv").read_bytes() == first

    def test_unwritable_dir(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, err = run(["generate", "--out-dir", str(blocker / "sub"), *ROWS], capsys)
        assert code == 2
        assert "slotforge:" in err

    def test_bad_row_spec(self, tmp_path):
        assert main(["generate", "--out-dir", str(tmp_path), "--rows", "10:25"]) == 5

    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"rows": ["20:50:50:1:5:10:5"], "out_dir": str(tmp_path / "o")}))
        code, out, _ = run(["generate", "--config", str(cfg)], capsys)
        assert code == 0 and out.startswith("2 samples")
        code, out, _ = run(["generate", "--config", str(cfg), "--rows", "20:50:50:1:5:15:5"], capsys)
        assert out.startswith("3 samples")

    def test_config_unknown_field(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        assert main(["generate", "--config", str(cfg)]) == 3

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--coarsen", "two"])
        assert exc.value.code == 5


class TestTrain:
    def test_outputs(self, trained):
        for name in ("model.slotforge.json", "train_report.csv", "train_report.json",
                     "test_report.csv", "test_report.json"):  # fmt: skip
            assert (trained / name).is_file()

    def test_headline(self, trained, tmp_path, capsys):
        code, out, _ = run(
            ["train", "--out-dir", str(tmp_path), "--dataset", str(trained / "dataset.csv"), *FAST], capsys
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("train: R2=") and lines[1].startswith("test: R2=")
        assert "MSE=" in lines[0] and "MSE=" in lines[1]
        # rerun on the same inputs reproduces the model byte for byte
        assert (tmp_path / "model.slotforge.json").read_bytes() == (trained / "model.slotforge.json").read_bytes()

    def test_seed_env(self, trained, tmp_path, monkeypatch):
        monkeypatch.setenv("SLOTFORGE_SEED", "7")
        assert main(["train", "--out-dir", str(tmp_path), "--dataset", str(trained / "dataset.csv"), *FAST]) == 0
        ids = lambda d: [ln.split(",")[0] for ln in (d / "test_report.csv").read_text().splitlines()[1:]]
        assert ids(tmp_path) != ids(trained)

    def test_corrupt_header(self, trained, tmp_path):
        text = (trained / "dataset.csv").read_text().replace("theta_deg", "angle", 1)
        (tmp_path / "bad.csv").write_text(text)
        assert main(["train", "--out-dir", str(tmp_path), "--dataset", str(tmp_path / "bad.csv")]) == 3

    def test_missing_dataset(self, tmp_path):
        assert main(["train", "--out-dir", str(tmp_path), "--dataset", str(tmp_path / "none.csv")]) == 2


class TestEvaluate:
    def test_report(self, trained, tmp_path, capsys):
        code, out, _ = run(
            ["evaluate", "--out-dir", str(tmp_path), "--model", str(trained / "model.slotforge.json"),
             "--dataset", str(trained / "dataset.csv")],
            capsys,
        )  # fmt: skip
        assert code == 0 and out.startswith("eval_report: R2=")
        assert (tmp_path / "eval_report.csv").is_file()

    def test_bad_model(self, trained, tmp_path):
        (tmp_path / "m.json").write_text("{}")
        argv = ["evaluate", "--model", str(tmp_path / "m.json"), "--dataset", str(trained / "dataset.csv")]
        assert main(argv) == 3


class TestPredict:
    def test_csv_and_touchstone_agree(self, trained, tmp_path):
        model = str(trained / "model.slotforge.json")
        ds = str(trained / "dataset.csv")
        assert main(["export-touchstone", "--dataset", ds, "--row-id", "0", "--out", str(tmp_path / "r.s1p")]) == 0
        assert main(["export-touchstone", "--dataset", ds, "--row-id", "0", "--out", str(tmp_path / "r.csv")]) == 0
        assert main(["predict", "--model", model, "--spectrum", str(tmp_path / "r.s1p"), "--out", str(tmp_path / "a.json")]) == 0
        assert main(["predict", "--model", model, "--spectrum", str(tmp_path / "r.csv"), "--out", str(tmp_path / "b.json")]) == 0
        a = json.loads((tmp_path / "a.json").read_text())
        assert a == json.loads((tmp_path / "b.json").read_text())
        assert set(a) == {"raw", "rounded"}

    def test_wrong_point_count(self, trained, tmp_path):
        out = tmp_path / "g.s1p"
        assert main(["export-touchstone", "--geometry", "60", "10", "0", "--n-points", "501", "--out", str(out)]) == 0
        assert main(["predict", "--model", str(trained / "model.slotforge.json"), "--spectrum", str(out)]) == 4

    def test_bad_geometry(self, tmp_path):
        assert main(["export-touchstone", "--geometry", "60", "10", "120", "--out", str(tmp_path / "x.s1p")]) == 5

    def test_unknown_row(self, trained, tmp_path):
        argv = ["export-touchstone", "--dataset", str(trained / "dataset.csv"), "--row-id", "99999",
                "--out", str(tmp_path / "x.s1p")]  # fmt: skip
        assert main(argv) == 5


class TestInverse:
    def test_synth_row_a(self, tmp_path):
        (tmp_path / "t.csv").write_text("center_ghz,upper_ghz,lower_ghz\n2.493,2.501,2.485\n")
        assert main(["synth", "--targets", str(tmp_path / "t.csv"), "--out", str(tmp_path / "s.csv")]) == 0
        rows = [ln.split(",") for ln in (tmp_path / "s.csv").read_text().splitlines()[1:]]
        best = min(rows, key=lambda r: float(r[1]))
        assert abs(float(best[0]) - 2.493) <= 0.007

    def test_synth_invalid_row(self, tmp_path, capsys):
        (tmp_path / "t.csv").write_text("2.493,2.501,2.485\n2.57,2.541,2.501\n")
        code, _, err = run(["synth", "--targets", str(tmp_path / "t.csv"), "--out", str(tmp_path / "s.csv")], capsys)
        assert code == 5
        assert "line 2" in err

    def test_roundtrip_outputs(self, trained, tmp_path):
        (tmp_path / "t.csv").write_text(
            "2.493,2.501,2.485\n3.757,3.789,3.726\n6.825,6.936,6.816\n"
        )
        out = tmp_path / "rt"
        argv = ["roundtrip", "--model", str(trained / "model.slotforge.json"),
                "--targets", str(tmp_path / "t.csv"), "--out-dir", str(out)]  # fmt: skip
        assert main(argv) == 0
        report = json.loads((out / "roundtrip.json").read_text())
        assert len(report["targets"]) == 3
        svg = (out / "roundtrip.svg").read_text()
        assert svg.startswith("<svg") or svg.startswith("<?xml")
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert main(argv) == 0
        assert {p.name: p.read_bytes() for p in out.iterdir()} == first


class TestHelp:
    @pytest.mark.parametrize(
        "cmd", ["generate", "train", "evaluate", "predict", "synth", "roundtrip", "export-touchstone"]
    )
    def test_help_lists_flags(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        sub = next(a for a in build_parser()._subparsers._group_actions[0].choices.items() if a[0] == cmd)[1]
        for action in sub._actions:
            for opt in action.option_strings:
                assert opt in text
            if action.option_strings and action.dest != "help":
                assert action.help
