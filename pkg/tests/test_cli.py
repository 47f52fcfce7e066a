import json

import pytest

from afpopt.cli import CSV_HEADER, FIGURE_IDS, run


def invoke(args, capfd):
    code = run(args)
    out, err = capfd.readouterr()
    return code, out, err


class TestParsing:
    def test_alpha_out_of_range_message(self, capfd):
        with pytest.raises(SystemExit) as e:
            run(["optimal-k", "--alpha", "1.5"])
        assert e.value.code == 2
        out, err = capfd.readouterr()
        assert out == ""
        assert len(err.strip().splitlines()) == 1
        assert "alpha" in err

    def test_unknown_flag_rejected(self, capfd):
        with pytest.raises(SystemExit) as e:
            run(["optimal-k", "--nonsense", "1"])
        assert e.value.code == 2

    def test_help_lists_every_subcommand(self, capsys):
        with pytest.raises(SystemExit) as e:
            run(["--help"])
        assert e.value.code == 0
        out = capsys.readouterr().out
        for cmd in (
            "analytic",
            "large-system",
            "simulate",
            "optimal-k",
            "afp-range",
            "compare-codebooks",
            "reproduce-figure",
        ):
            assert cmd in out


class TestHeadlines:
    def test_optimal_k_prints_interval(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = invoke(
            ["optimal-k", "--nt", "2", "--nr", "3", "--bits", "1", "--alpha", "0.8"], capfd
        )
        assert code == 0
        assert out.strip() == "K*=3"

    def test_optimal_k_horizon_limited_flag(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = invoke(
            ["optimal-k", "--nt", "2", "--nr", "2", "--bits", "1", "--alpha", "1.0",
             "--k-max", "8"],
            capfd,
        )
        assert code == 0
        assert out.strip() == "K*=8 (horizon-limited)"

    def test_large_system_prints_interval(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = invoke(
            ["large-system", "--nr-bar", "0", "--b-bar", "1", "--alpha", "0.9"], capfd
        )
        assert code == 0
        assert out.strip() == "K*=3"

    def test_afp_range_prints_window(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = invoke(
            ["afp-range", "--nt", "2", "--nr", "2", "--bits", "1", "--alpha", "0.8"], capfd
        )
        assert code == 0
        assert out.strip() == "K in [2,8]"


class TestTables:
    def test_csv_schema_and_digits(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _, _ = invoke(
            ["analytic", "--nt", "2", "--nr", "2", "--bits", "1", "--alpha", "0.8",
             "--k-max", "4"],
            capfd,
        )
        assert code == 0
        text = (tmp_path / "analytic.csv").read_text()
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 5
        assert text.endswith("\n")
        assert lines[3].split(",")[6] == "2.79706666667"  # 12 significant digits

    def test_json_round_trip(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _, _ = invoke(
            ["analytic", "--nt", "2", "--nr", "2", "--format", "json", "--k-max", "3"], capfd
        )
        assert code == 0
        rows = json.loads((tmp_path / "analytic.json").read_text())
        assert [r["K"] for r in rows] == [1, 2, 3]
        assert set(rows[0]) == set(CSV_HEADER.split(","))
        assert rows[0]["value"] == 2.5

    def test_reruns_are_byte_identical(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        args = ["simulate", "--nt", "2", "--nr", "2", "--bits", "1", "--alpha", "0.8",
                "--k-max", "3", "--trials", "100", "--seed", "42", "--output", "a.csv"]
        assert invoke(args, capfd)[0] == 0
        args[-1] = "b.csv"
        assert invoke(args, capfd)[0] == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_output_dir_env_var(self, tmp_path, capfd, monkeypatch):
        outdir = tmp_path / "results"
        outdir.mkdir()
        monkeypatch.setenv("AFPOPT_OUTPUT_DIR", str(outdir))
        code, _, _ = invoke(["analytic", "--k-max", "2"], capfd)
        assert code == 0
        assert (outdir / "analytic.csv").exists()

    def test_unwritable_output_fails_with_code_1(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _, err = invoke(
            ["analytic", "--k-max", "2", "--output", str(tmp_path / "no" / "dir.csv")], capfd
        )
        assert code == 1
        assert "cannot write" in err


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"nt": 2, "nr": 4, "bits": 1.0, "alpha": 0.8}))
        code, out, _ = invoke(["optimal-k", "--config", str(cfg)], capfd)
        assert code == 0
        assert out.strip() == "K*=3"
        code, out, _ = invoke(
            ["optimal-k", "--config", str(cfg), "--alpha", "0.0", "--bits", "4"], capfd
        )
        assert code == 0
        assert out.strip() == "K*=1"

    def test_bad_config_exits_2(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(SystemExit) as e:
            run(["optimal-k", "--config", str(bad)])
        assert e.value.code == 2


class TestFigurePresets:
    def test_fig1_cardinality(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _, _ = invoke(
            ["reproduce-figure", "--id", "fig1", "--trials", "25", "--seed", "7"], capfd
        )
        assert code == 0
        lines = (tmp_path / "reproduce_figure.csv").read_text().splitlines()
        assert len(lines) == 61  # header + 60 grid cells

    def test_fig3_contains_both_sources(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _, _ = invoke(["reproduce-figure", "--id", "fig3", "--format", "json"], capfd)
        assert code == 0
        rows = json.loads((tmp_path / "reproduce_figure.json").read_text())
        assert {r["source"] for r in rows} == {"finite", "large-system"}
        assert len(rows) == 20

    def test_every_preset_id_is_wired(self):
        from afpopt.cli import _figure_specs

        for fig in FIGURE_IDS:
            analytic, specs, _ = _figure_specs(fig, trials=1, seed=0)
            assert analytic or specs


class TestCompareCodebooks:
    def test_prints_both_optima_and_saves_codebook(self, tmp_path, capfd, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = invoke(
            ["compare-codebooks", "--nt", "2", "--nr", "2", "--bits", "1", "--alpha", "0.9",
             "--k-max", "3", "--trials", "150", "--candidates", "60",
             "--save-codebook", "cb.json"],
            capfd,
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("rvq K*=")
        assert lines[1].startswith("maximin K*=")
        from afpopt.codebook import load_codebook

        cb = load_codebook(tmp_path / "cb.json")
        assert cb.kind == "maximin"
        assert cb.bits == 3
