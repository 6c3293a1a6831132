import json

import pytest

from dostbc.cli import EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE, main
from dostbc.code_core import construct_alamouti, parse_code, serialize_code


def run_json(capsys, argv):
    code = main(argv + ["--format", "json"])
    return code, json.loads(capsys.readouterr().out)


class TestVerify:
    def test_rate_halving_passes(self, capsys, assets):
        code, data = run_json(capsys, ["verify", str(assets / "rate_halving_4x4.code")])
        assert code == EXIT_OK
        assert data["verdict"] == "pass"
        assert data["reports"]["dostbc-cpi"]["profiles"]["G"]["values"] == [[2] * 4] * 4
        assert data["rates"]["cpi"]["achieves_bound"] is True

    def test_corrupted_fails_with_named_condition(self, capsys, assets):
        code = main(["verify", str(assets / "rate_halving_4x4_corrupted.code")])
        out = capsys.readouterr().out
        assert code == EXIT_NEGATIVE
        assert "gram-offdiagonal" in out
        assert "overall: FAIL" in out

    def test_missing_file(self, capsys, tmp_path):
        assert main(["verify", str(tmp_path / "nope.code")]) == EXIT_USAGE
        assert "dostbc verify" in capsys.readouterr().err

    def test_malformed_file(self, capsys, tmp_path):
        p = tmp_path / "bad.code"
        p.write_text("dostbc 2 1 2\nrelay 1\n1 0\n0 1\n0 0\n--\n0 0\n0 0\n")
        assert main(["verify", str(p)]) == EXIT_USAGE
        assert "dimension mismatch" in capsys.readouterr().err

    def test_no_csi_only(self, capsys, assets):
        code, data = run_json(capsys, ["verify", str(assets / "alamouti.code"), "--kind", "dostbc"])
        assert code == EXIT_OK
        assert set(data["reports"]) == {"gram-conditions", "dostbc"}

    def test_json_records_resolved_config(self, capsys, assets):
        _, data = run_json(capsys, ["verify", str(assets / "alamouti.code"), "--draws", "4", "--seed", "3"])
        cfg = data["config"]
        assert (cfg["draws"], cfg["tol"], cfg["seed"], cfg["kind"]) == (4, 1e-9, 3, "any")
        assert cfg["code_file"] == str(assets / "alamouti.code")

    def test_environment_fills_unset_flags(self, capsys, assets, monkeypatch):
        monkeypatch.setenv("DOSTBC_DRAWS", "5")
        monkeypatch.setenv("DOSTBC_SEED", "8")
        _, data = run_json(capsys, ["verify", str(assets / "alamouti.code"), "--seed", "2"])
        assert (data["config"]["draws"], data["config"]["seed"]) == (5, 2)

    def test_environment_selects_format(self, capsys, assets, monkeypatch):
        monkeypatch.setenv("DOSTBC_FORMAT", "json")
        assert main(["verify", str(assets / "alamouti.code")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["verdict"] == "pass"

    def test_bad_environment_value(self, capsys, assets, monkeypatch):
        monkeypatch.setenv("DOSTBC_KIND", "everything")
        assert main(["verify", str(assets / "alamouti.code")]) == EXIT_USAGE
        assert "kind must be one of" in capsys.readouterr().err

    def test_text_output_to_file(self, capsys, assets, tmp_path):
        out = tmp_path / "reports" / "alamouti.txt"
        assert main(["verify", str(assets / "alamouti.code"), "--out", str(out)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        assert "overall: PASS" in out.read_text()


class TestBounds:
    @pytest.mark.parametrize(
        "n,k,no_csi,cpi", [("4", "4", "1/2", "1/2"), ("8", "6", "1/3", "1/2"), ("1", "2", "1", "1")]
    )
    def test_values(self, capsys, n, k, no_csi, cpi):
        code, data = run_json(capsys, ["bounds", n, k])
        assert code == EXIT_OK
        assert (data["dostbc_bound"], data["cpi_bound"]) == (no_csi, cpi)

    def test_text_starts_with_config(self, capsys):
        assert main(["bounds", "4", "4"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "# resolved configuration"
        assert "# k = 4" in lines and "# format = text" in lines

    def test_non_positive_sizes(self, capsys):
        assert main(["bounds", "0", "2"]) == EXIT_USAGE

    def test_csv_only_for_simulate(self):
        with pytest.raises(SystemExit) as info:
            main(["bounds", "2", "2", "--format", "csv"])
        assert info.value.code == 2


class TestConstructAndPartition:
    def test_construct_writes_code_text(self, capsys):
        assert main(["construct", "alamouti", "2", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("# resolved configuration\n")
        assert "# family = alamouti" in out
        assert out.endswith(serialize_code(construct_alamouti()))
        assert parse_code(out) == construct_alamouti()

    def test_construct_round_trips_through_verify(self, capsys, tmp_path):
        path = tmp_path / "rh.code"
        assert main(["construct", "rate-halving", "4", "3", "--out", str(path)]) == EXIT_OK
        assert parse_code(path.read_text()).n_relays == 3
        assert main(["verify", str(path), "--kind", "cpi"]) == EXIT_OK

    def test_unsupported_size(self, capsys):
        assert main(["construct", "rate-halving", "3", "3"]) == EXIT_USAGE

    def test_partition(self, capsys, assets):
        code, data = run_json(capsys, ["partition", str(assets / "rate_halving_4x4.code")])
        assert code == EXIT_OK
        assert data["partition"] == [{"columns": list(range(1, 9)), "relays": [1, 2, 3, 4], "n_w": 4}]
        assert data["verdicts"][0]["verdict"] == "equals 1/2 as required"

    def test_partition_of_mixed_code(self, capsys, assets):
        code, data = run_json(capsys, ["partition", str(assets / "alamouti_plus_repetition.code")])
        assert code == EXIT_OK
        assert [p["columns"] for p in data["partition"]] == [[1, 2], [3]]

    def test_partition_rejects_invalid_block(self, capsys, assets):
        assert main(["partition", str(assets / "rate_halving_4x4_corrupted.code")]) == EXIT_NEGATIVE


class TestSearch:
    def test_no_code(self, capsys):
        assert main(["search", "--preset", "cpi-n1k2t1"]) == EXIT_NEGATIVE
        assert "no code in this space" in capsys.readouterr().out

    def test_found_with_witness_file(self, capsys, tmp_path):
        code, data = run_json(capsys, ["search", "--preset", "cpi-n1k2t2", "--witness-dir", str(tmp_path)])
        assert code == EXIT_OK
        assert data["verdict"] is True
        written = sorted(tmp_path.glob("*.code"))
        assert [p.name for p in written] == ["n1k2t2_witness1.code"]
        assert parse_code(written[0].read_text()).n_slots == 2

    def test_max_rate_sweep(self, capsys):
        code, data = run_json(capsys, ["search", "--n", "2", "--k", "2", "--t-max", "2"])
        assert code == EXIT_OK
        assert data["minimal_t"] == 2
        assert data["rate"] == "1"

    def test_search_records_its_options(self, capsys):
        _, data = run_json(capsys, ["search", "--preset", "cpi-n1k2t2", "--budget", "100000"])
        cfg = data["config"]
        assert (cfg["budget"], cfg["method"], cfg["workers"], cfg["canonicalize"]) == (100_000, "clique", 1, False)

    def test_sweep_honours_search_options(self, capsys):
        argv = ["search", "--n", "1", "--k", "2", "--t-max", "2", "--canonicalize", "--method", "brute_force"]
        code, data = run_json(capsys, argv)
        assert code == EXIT_OK
        assert data["minimal_t"] == 2
        assert data["config"]["canonicalize"] is True

    def test_sweep_budget_applies_per_t(self, capsys):
        code, data = run_json(capsys, ["search", "--n", "1", "--k", "2", "--t-max", "2", "--budget", "1000"])
        assert code == EXIT_NEGATIVE
        assert data["per_t"]["2"].startswith("budget exceeded")

    def test_budget_exceeded(self, capsys):
        assert main(["search", "--n", "2", "--k", "3", "--t", "4", "--budget", "1000"]) == EXIT_USAGE
        assert "budget" in capsys.readouterr().err

    def test_missing_dimensions(self, capsys):
        assert main(["search", "--n", "1"]) == EXIT_USAGE


class TestSimulate:
    def test_dry_run_preset(self, capsys):
        code, data = run_json(capsys, ["simulate", "--preset", "n4k4-trend", "--dry-run"])
        assert code == EXIT_OK
        assert [r["scheme"] for r in data["runs"]] == ["dostbc", "dostbc_cpi", "repetition"]
        assert {r["bps_hz"] for r in data["runs"]} == {2.0}
        assert data["config"]["snr_db"] == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]

    @pytest.mark.parametrize("name", ["fig1-trend", "n4k4-trend"])
    def test_trend_preset_names(self, capsys, name):
        code, data = run_json(capsys, ["simulate", "--preset", name, "--dry-run"])
        assert code == EXIT_OK
        assert data["config"]["preset"] == name
        assert [(r["scheme"], r["n_symbols"], r["n_relays"]) for r in data["runs"]] == [
            ("dostbc", 4, 4), ("dostbc_cpi", 4, 4), ("repetition", 1, 4),
        ]

    def test_second_trend_preset(self, capsys):
        code, data = run_json(capsys, ["simulate", "--preset", "fig2-trend", "--dry-run"])
        assert code == EXIT_OK
        assert [r["n_slots"] for r in data["runs"]] == [24, 16]
        assert {r["bps_hz"] for r in data["runs"]} == {2.0}

    def test_dry_run_from_json_config(self, capsys, assets):
        code, data = run_json(capsys, ["simulate", "--config", str(assets / "n4k4_trend.json"), "--dry-run"])
        assert code == EXIT_OK
        assert data["config"]["seed"] == 2024
        assert data["config"]["snr_db"] == [0.0, 5.0, 10.0, 15.0, 20.0]

    def test_csv_with_sidecar_and_plot(self, capsys, assets, tmp_path):
        out = tmp_path / "ber.csv"
        argv = [
            "simulate", "--config", str(assets / "alamouti_quick.cfg"),
            "--min-trials", "500", "--max-trials", "500",
            "--format", "csv", "--out", str(out), "--plot",
        ]
        assert main(argv) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "scheme,snr_db,trials,bit_errors,ber"
        assert len(lines) == 4
        sidecar = json.loads((tmp_path / "ber.csv.config.json").read_text())
        assert sidecar["config"]["seed"] == 7
        assert (tmp_path / "ber.csv.plot.py").exists()

    def test_csv_to_stdout_is_deterministic(self, capsys):
        argv = ["simulate", "--snr-db", "0,10", "--max-trials", "300", "--min-trials", "300", "--format", "csv", "--seed", "3"]
        assert main(argv) == EXIT_OK
        first = capsys.readouterr().out
        assert main(argv) == EXIT_OK
        assert capsys.readouterr().out == first

    def test_unknown_config_key(self, capsys, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("snr = 3\n")
        assert main(["simulate", "--config", str(p), "--dry-run"]) == EXIT_USAGE
        assert "unknown key" in capsys.readouterr().err

    def test_bad_construction_size(self, capsys):
        argv = ["simulate", "--construction", "rate-halving", "--n-symbols", "3", "--n-relays", "3", "--dry-run"]
        assert main(argv) == EXIT_USAGE
