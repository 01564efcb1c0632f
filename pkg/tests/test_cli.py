"""End-to-end CLI behavior: exit codes, artifacts, determinism."""

import json

import pytest

from calibwalk.cli import main
from calibwalk.dataio import read_report_json, read_study_json

TWO_POINT = "p,y\n0.6,1\n0.2,0\n"


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("CALIBWALK_OUTDIR", raising=False)
    monkeypatch.setenv("CALIBWALK_TIMESTAMP", "2024-01-01T00:00:00+00:00")


def _write_csv(tmp_path, text=TWO_POINT, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestArgumentHandling:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_subcommand_help_documents_flags(self, capsys):
        for sub, flags in [
            ("test", ["--groups", "--alpha", "--seed", "--mc", "--clamp",
                      "--df-rule", "--out", "--no-plots"]),
            ("simulate", ["--beta0", "--family", "--a", "--b", "--n",
                          "--reps", "--seed", "--alpha", "--out"]),
            ("plot", ["--report", "--data", "--out"]),
            ("casestudy", ["--seed", "--dev-n", "--small-n", "--holdout-n"]),
        ]:
            with pytest.raises(SystemExit) as exc:
                main([sub, "--help"])
            assert exc.value.code == 0
            text = capsys.readouterr().out
            for flag in flags:
                assert flag in text

    def test_unknown_flag_exits_two(self, tmp_path):
        csv = _write_csv(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["test", str(csv), "--frobnicate"])
        assert exc.value.code == 2

    def test_missing_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0


class TestCmdTest:
    def test_two_point_demo(self, tmp_path, capsys):
        csv = _write_csv(tmp_path)
        out = tmp_path / "out"
        assert main(["test", str(csv), "--out", str(out)]) == 0
        report = read_report_json(out / "report.json")
        assert report.bb.s_n == pytest.approx(0.31623, abs=5e-6)
        assert report.bb.b_star == pytest.approx(0.44272, abs=5e-6)
        assert report.dataset.small_sample_warning
        printed = capsys.readouterr().out
        assert "total variance below 30" in printed
        assert (out / "cumulative_bm.svg").exists()
        assert (out / "cumulative_bb.svg").exists()

    def test_saturated_prediction_exits_two(self, tmp_path, capsys):
        csv = _write_csv(tmp_path, "p,y\n1.0,1\n0.5,0\n")
        assert main(["test", str(csv), "--out", str(tmp_path / "o")]) == 2
        assert "outside (0, 1)" in capsys.readouterr().err

    def test_clamp_flag_rescues_saturated_prediction(self, tmp_path):
        csv = _write_csv(tmp_path, "p,y\n1.0,1\n0.5,0\n")
        out = tmp_path / "o"
        assert main(["test", str(csv), "--clamp", "1e-6",
                     "--out", str(out)]) == 0

    def test_missing_file_exits_two(self, tmp_path):
        assert main(["test", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path)]) == 2

    def test_monte_carlo_deterministic(self, tmp_path):
        csv = _write_csv(tmp_path)
        reports = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            assert main(["test", str(csv), "--mc", "10000", "--seed", "7",
                         "--no-plots", "--out", str(out)]) == 0
            reports.append(read_report_json(out / "report.json"))
        assert reports[0].monte_carlo == reports[1].monte_carlo
        assert 0.0 < reports[0].monte_carlo["bm_p_value"] <= 1.0

    def test_no_plots_suppresses_svg(self, tmp_path):
        csv = _write_csv(tmp_path)
        out = tmp_path / "o"
        assert main(["test", str(csv), "--no-plots", "--out", str(out)]) == 0
        assert not list(out.glob("*.svg"))

    def test_outdir_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CALIBWALK_OUTDIR", str(tmp_path / "envout"))
        csv = _write_csv(tmp_path)
        assert main(["test", str(csv), "--no-plots"]) == 0
        assert (tmp_path / "envout" / "report.json").exists()


class TestCmdSimulate:
    def test_null_study_desk_scale(self, tmp_path):
        out = tmp_path / "study"
        assert main(["simulate", "null", "--beta0", "-1", "--n", "1000",
                     "--reps", "1000", "--seed", "1",
                     "--out", str(out)]) == 0
        study = read_study_json(out / "study.json")
        cell = study["cells"][0]
        for name in ("bm", "bb"):
            assert 0.03 <= cell["rejections"][name] <= 0.07
        assert (out / "null_beta0=-1_n=1000.svg").exists()

    def test_power_central_cell(self, tmp_path):
        out = tmp_path / "power"
        assert main(["simulate", "power", "--family", "logit-linear",
                     "--a", "0", "--b", "1", "--n", "250",
                     "--reps", "500", "--seed", "1",
                     "--out", str(out)]) == 0
        cell = read_study_json(out / "study.json")["cells"][0]
        for name in ("lr", "hl", "bm", "bb"):
            assert cell["rejections"][name] == pytest.approx(0.05, abs=0.03)

    def test_bad_replication_count_exits_two(self, tmp_path):
        assert main(["simulate", "null", "--beta0", "-1", "--n", "100",
                     "--reps", "0", "--seed", "1",
                     "--out", str(tmp_path)]) == 2

    def test_missing_grid_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "null", "--reps", "10",
                  "--out", str(tmp_path)])
        assert exc.value.code == 2


class TestCmdPlot:
    def test_rerender_matches_original(self, tmp_path):
        csv = _write_csv(tmp_path)
        first = tmp_path / "first"
        assert main(["test", str(csv), "--out", str(first)]) == 0
        second = tmp_path / "second"
        assert main(["plot", "--report", str(first / "report.json"),
                     "--data", str(csv), "--out", str(second)]) == 0
        for name in ("cumulative_bm.svg", "cumulative_bb.svg"):
            assert (second / name).read_bytes() == \
                (first / name).read_bytes()

    def test_mismatched_data_exits_two(self, tmp_path, capsys):
        csv = _write_csv(tmp_path)
        out = tmp_path / "out"
        assert main(["test", str(csv), "--out", str(out)]) == 0
        other = _write_csv(tmp_path, "p,y\n0.4,1\n0.5,0\n", name="other.csv")
        assert main(["plot", "--report", str(out / "report.json"),
                     "--data", str(other), "--out", str(tmp_path)]) == 2
        assert "does not match" in capsys.readouterr().err


class TestCmdCasestudy:
    def test_same_seed_identical_artifacts(self, tmp_path):
        args = ["casestudy", "--seed", "5", "--dev-n", "2000",
                "--small-n", "200", "--holdout-n", "800"]
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert main(args + ["--out", str(d)]) == 0
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        assert len([n for n in names if n.endswith(".svg")]) == 8
        for name in names:
            assert (dirs[0] / name).read_bytes() == \
                (dirs[1] / name).read_bytes()

    def test_report_and_plot_agree(self, tmp_path):
        out = tmp_path / "case"
        assert main(["casestudy", "--seed", "3", "--dev-n", "2000",
                     "--small-n", "200", "--holdout-n", "800",
                     "--out", str(out)]) == 0
        for label in ("full", "small"):
            report = read_report_json(out / f"{label}_report.json")
            svg = (out / f"{label}_cumulative_bb.svg").read_text()
            assert f"unified p = {report.bb.p_unified:.4f}" in svg
            bm_svg = (out / f"{label}_cumulative_bm.svg").read_text()
            assert f"p = {report.bm.p_value:.4f}" in bm_svg

    def test_invalid_split_exits_two(self, tmp_path):
        assert main(["casestudy", "--seed", "1", "--dev-n", "100",
                     "--small-n", "200", "--holdout-n", "100",
                     "--out", str(tmp_path)]) == 2

    def test_full_model_calibrated_across_seeds(self):
        # the large-split model is calibrated by construction, so its
        # holdout p-values should look uniform: rejection near the level
        from calibwalk.cli import run_case_study

        rejections = sum(
            run_case_study(seed, out_dir=None,
                           render_figures=False)["full"]["report"]
            .bb.p_unified < 0.05
            for seed in range(50)
        )
        slack = 2.0 * (0.05 * 0.95 / 50) ** 0.5
        assert rejections / 50 <= 0.10 + slack
