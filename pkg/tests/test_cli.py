import csv

import numpy as np
import pytest

from oamlink.cli import main, run_selftest
from oamlink.geometry import distance_term_arrays


def read_rows(path):
    with open(path) as handle:
        rows = list(csv.reader(line for line in handle if not line.startswith("#")))
    header, data = rows[0], rows[1:]
    index = {name: pos for pos, name in enumerate(header)}
    return header, data, index


class TestSelftest:
    def test_all_checks_pass(self):
        results = run_selftest()
        assert len(results) == 5
        assert all(ok for _, ok, _ in results)

    def test_injected_sign_flip_breaks_identity_check(self):
        def flipped(cfg, pose):
            rx_terms, cross_terms, tx_terms = distance_term_arrays(cfg, pose)
            return rx_terms, -cross_terms, tx_terms

        results = dict((name, ok) for name, ok, _ in run_selftest(distance_terms_fn=flipped))
        assert not results["distance-identity"]

    def test_exit_status(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert "FAIL" not in out


class TestSweepSnr:
    def test_row_count_and_columns(self, tmp_path):
        out = tmp_path / "snr.csv"
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[sweep]\nsnr_db_stop = 10\n[run]\nnum_seeds = 2\n"
                       "\n[array]\nk = 4\nv = 4\n")
        assert main(["sweep-snr", "--config", str(cfg), "--out", str(out), "--no-timestamp"]) == 0
        header, data, index = read_rows(out)
        # schemes x variants x K x snr x seeds = 2 * 2 * 3 * 2 * 2
        assert len(data) == 48
        assert header[:10] == [
            "scheme", "model", "se_variant", "K", "V", "snr_db",
            "theta_deg", "phi_deg", "seed", "se_total",
        ]
        assert header[-4:] == ["theta_hat_deg", "phi_hat_deg", "ambiguous", "residual"]
        assert [h for h in header if h.startswith("se_mode_")] == [f"se_mode_{i}" for i in range(16)]

    def test_single_variant_row_count(self, tmp_path):
        # schemes x K x snr x seeds exactly, once one variant is selected
        out = tmp_path / "snr.csv"
        assert main(["sweep-snr", "--out", str(out), "--no-timestamp", "--se", "sinr"]) == 0
        header, data, index = read_rows(out)
        assert len(data) == 2 * 3 * 5 * 1
        assert {row[index["se_variant"]] for row in data} == {"sinr"}

    def test_baseline_rows_have_no_estimates(self, tmp_path):
        out = tmp_path / "snr.csv"
        main(["sweep-snr", "--out", str(out), "--no-timestamp"])
        header, data, index = read_rows(out)
        for row in data:
            if row[index["scheme"]] == "no_ma":
                assert row[index["theta_hat_deg"]] == ""
                assert row[index["ambiguous"]] == ""
            else:
                assert row[index["ambiguous"]] in ("true", "false")

    def test_small_k_rows_pad_mode_columns(self, tmp_path):
        out = tmp_path / "snr.csv"
        main(["sweep-snr", "--out", str(out), "--no-timestamp"])
        header, data, index = read_rows(out)
        for row in data:
            if row[index["K"]] == "4":
                assert row[index["se_mode_3"]] != ""
                assert row[index["se_mode_4"]] == ""


class TestSweepAngle:
    def test_grid_and_flatness(self, tmp_path):
        out = tmp_path / "ang.csv"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[sweep]\ntheta_deg_stop = 90\ntheta_deg_step = 30\n"
            "phi_deg_stop = 0.8\nphi_deg_step = 0.2\n"
        )
        assert main(["sweep-angle", "--config", str(cfg), "--out", str(out), "--no-timestamp"]) == 0
        header, data, index = read_rows(out)
        assert len(data) == 4 * 5 * 2 * 2
        ma = {
            (row[index["theta_deg"]], row[index["phi_deg"]]): float(row[index["se_total"]])
            for row in data
            if row[index["scheme"]] == "ma" and row[index["se_variant"]] == "sinr"
        }
        values = np.array(list(ma.values()))
        assert (values.max() - values.min()) / values.max() < 1e-12
        assert ma[("0", "0")] == values.max()

    def test_uncorrected_decreases_with_tilt(self, tmp_path):
        out = tmp_path / "ang.csv"
        main(["sweep-angle", "--out", str(out), "--no-timestamp", "--se", "sinr"])
        header, data, index = read_rows(out)
        along_zero = [
            (float(row[index["phi_deg"]]), float(row[index["se_total"]]))
            for row in data
            if row[index["scheme"]] == "no_ma" and row[index["theta_deg"]] == "0"
        ]
        along_zero.sort()
        values = [se for _, se in along_zero]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestDeterminism:
    @pytest.mark.parametrize("command", ["sweep-snr", "sweep-angle"])
    def test_byte_identical_reruns(self, tmp_path, command):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[sweep]\nsnr_db_stop = 10\ntheta_deg_stop = 40\ntheta_deg_step = 20\n"
            "phi_deg_stop = 0.4\nphi_deg_step = 0.2\nelement_counts = 4,8\n"
            "[run]\npilot_snr_db = 20\nnum_seeds = 2\n"
        )
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        main([command, "--config", str(cfg), "--out", str(first), "--no-timestamp"])
        main([command, "--config", str(cfg), "--out", str(second), "--no-timestamp"])
        assert first.read_bytes() == second.read_bytes()

    def test_timestamp_line_present_by_default(self, tmp_path, capsys):
        main(["sweep-snr", "--out", str(tmp_path / "x.csv")])
        text = (tmp_path / "x.csv").read_text()
        assert "# generated" in text
        main(["sweep-snr", "--out", str(tmp_path / "y.csv"), "--no-timestamp"])
        assert "# generated" not in (tmp_path / "y.csv").read_text()


class TestSingleCommands:
    def test_channel_prints_constants(self, capsys):
        assert main(["channel"]) == 0
        out = capsys.readouterr().out
        assert "|prefactor| = 0.00397887358" in out
        assert "max_rel_distance_error" in out

    def test_estimate_reports_both_methods(self, capsys):
        assert main(["estimate"]) == 0
        out = capsys.readouterr().out
        assert "closed_form:" in out and "nls:" in out
        assert "ambiguity_bound_deg = 1.79432058" in out

    def test_align_reports_improvement(self, capsys):
        assert main(["align"]) == 0
        out = capsys.readouterr().out
        se_before = float(out.split("se_before = ")[1].split()[0])
        se_after = float(out.split("se_after = ")[1].split()[0])
        assert se_after > se_before

    def test_estimate_csv_output(self, tmp_path):
        out = tmp_path / "est.csv"
        assert main(["estimate", "--out", str(out), "--no-timestamp"]) == 0
        header, data, index = read_rows(out)
        assert [row[index["method"]] for row in data] == ["closed_form", "nls"]

    def test_bad_config_path_is_error(self, capsys):
        assert main(["channel", "--config", "/nonexistent/run.cfg"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_config_value_is_error(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[pose]\nphi_deg = -1\n")
        assert main(["channel", "--config", str(cfg)]) == 2
        assert "out-of-range" in capsys.readouterr().err

    def test_model_override(self, tmp_path):
        out_far = tmp_path / "far.csv"
        out_exact = tmp_path / "exact.csv"
        main(["sweep-angle", "--out", str(out_far), "--no-timestamp"])
        main(["sweep-angle", "--out", str(out_exact), "--no-timestamp", "--model", "exact"])
        _, far_rows, index = read_rows(out_far)
        _, exact_rows, _ = read_rows(out_exact)
        assert far_rows[0][index["model"]] == "farfield"
        assert exact_rows[0][index["model"]] == "exact"
        assert far_rows[0][index["se_total"]] != exact_rows[0][index["se_total"]]
