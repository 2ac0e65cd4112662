"""CLI contract: determinism, golden files, exit codes, config schema."""

import json
from pathlib import Path

import numpy as np
import pytest

from spectral_dropout.cli import main, validate_train_config
from spectral_dropout.pgm import read_pgm

DATA = Path(__file__).parent / "data"
TEST_IMAGE = DATA / "test32.pgm"
GOLDEN_DEC2D = DATA / "golden_dec2d"


class TestDecomposeReconstruct:
    def test_golden_byte_comparison(self, tmp_path):
        out = tmp_path / "dec"
        assert main(
            ["decompose", str(TEST_IMAGE), "--wavelet", "db3", "--mode", "2d",
             "--out", str(out)]
        ) == 0
        for name in ("ll", "lh", "hl", "hh"):
            for ext in (".pgm", ".bin"):
                got = (out / f"{name}{ext}").read_bytes()
                want = (GOLDEN_DEC2D / f"{name}{ext}").read_bytes()
                assert got == want, f"{name}{ext} differs from golden"
        assert (out / "manifest.json").read_bytes() == (
            GOLDEN_DEC2D / "manifest.json"
        ).read_bytes()

    def test_reconstruct_within_one_gray_level(self, tmp_path):
        rec = tmp_path / "rec.pgm"
        assert main(["reconstruct", str(GOLDEN_DEC2D), "--out", str(rec)]) == 0
        a = read_pgm(TEST_IMAGE)
        b = read_pgm(rec)
        assert int(np.max(np.abs(a.pixels - b.pixels))) <= 1

    def test_1d_mode_round_trip(self, tmp_path):
        out = tmp_path / "dec1d"
        assert main(
            ["decompose", str(TEST_IMAGE), "--mode", "1d", "--out", str(out)]
        ) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["bands"]) == {"ap", "l1", "l2", "l3"}
        assert manifest["lens"] == [1024, 514, 259]
        rec = tmp_path / "rec.pgm"
        assert main(["reconstruct", str(out), "--out", str(rec)]) == 0
        a, b = read_pgm(TEST_IMAGE), read_pgm(rec)
        assert int(np.max(np.abs(a.pixels - b.pixels))) <= 1

    def test_constant_image_detail_bands_midgray(self, tmp_path):
        from spectral_dropout.pgm import write_pgm

        flat = tmp_path / "flat.pgm"
        write_pgm(flat, np.full((16, 16), 120.0))
        out = tmp_path / "dec"
        assert main(["decompose", str(flat), "--wavelet", "haar", "--out",
                     str(out)]) == 0
        for name in ("lh", "hl", "hh"):
            band = read_pgm(out / f"{name}.pgm")
            assert np.all(band.pixels == 128)

    def test_missing_manifest_is_usage_error(self, tmp_path):
        assert main(["reconstruct", str(tmp_path), "--out",
                     str(tmp_path / "x.pgm")]) == 2


class TestDropoutCommand:
    def test_p0_reproduces_input(self, tmp_path):
        out = tmp_path / "d"
        assert main(
            ["dropout", str(TEST_IMAGE), "--variant", "swd1d", "--p", "0",
             "--out", str(out)]
        ) == 0
        a = read_pgm(TEST_IMAGE)
        b = read_pgm(out / "output.pgm")
        assert int(np.max(np.abs(a.pixels - b.pixels))) <= 1

    def test_same_seed_byte_identical(self, tmp_path):
        outs = []
        for sub in ("d1", "d2"):
            out = tmp_path / sub
            assert main(
                ["dropout", str(TEST_IMAGE), "--variant", "sfd2d", "--p", "0.3",
                 "--eta", "0.2", "--seed", "11", "--out", str(out)]
            ) == 0
            outs.append(out)
        for name in ("output.pgm", "mask.bin", "summary.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_forced_hl_drop_matches_library(self, tmp_path):
        out = tmp_path / "d"
        assert main(
            ["dropout", str(TEST_IMAGE), "--variant", "swd2d", "--p", "0.5",
             "--wavelet", "haar", "--force-bits", "1,0,1", "--out", str(out)]
        ) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["bands_dropped"] == ["HL"]
        from spectral_dropout import dropout as dp
        from spectral_dropout.rng import SeededRng

        img = read_pgm(TEST_IMAGE)
        cfg = dp.SpectralDropoutConfig(variant="swd2d", p=0.5, wavelet="haar")
        ref, _ = dp.forward(
            img.as_float.reshape(1, 1, 32, 32), cfg, SeededRng(0),
            forced_bits=np.array([1, 0, 1], dtype=np.uint8),
        )
        got = read_pgm(out / "output.pgm").pixels
        assert np.array_equal(got, np.clip(np.rint(ref[0, 0]), 0, 255))

    def test_bad_p_is_usage_error(self, tmp_path):
        assert main(
            ["dropout", str(TEST_IMAGE), "--variant", "swd1d", "--p", "1.5",
             "--out", str(tmp_path / "d")]
        ) == 2


class TestVerifyCommand:
    def test_quick_all_passes_and_writes_json(self, tmp_path):
        report = tmp_path / "report.json"
        assert main(["verify", "--suite", "wavelet", "--quick", "--json",
                     str(report)]) == 0
        payload = json.loads(report.read_text())
        assert payload["passed"] is True
        assert payload["suites"][0]["suite"] == "wavelet"

    def test_unknown_suite_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--suite", "fourier"])
        assert exc.value.code == 2


class TestBenchCommand:
    def test_single_size_emits_one_row(self, tmp_path):
        csv = tmp_path / "b.csv"
        gp = tmp_path / "b.dat"
        assert main(
            ["bench", "--op", "dwt2d", "--sizes", "32", "--repeats", "5",
             "--out", str(csv), "--gnuplot", str(gp)]
        ) == 0
        lines = csv.read_text().strip().splitlines()
        assert len(lines) == 2  # header + one row
        assert gp.read_text().startswith("32 ")

    def test_ttm_mode(self, tmp_path):
        out = tmp_path / "ttm.json"
        assert main(
            ["bench", "--ttm", "--variant", "swd1d", "--p", "0.1",
             "--epochs", "2", "--out", str(out)]
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["ttm"] > 0

    def test_missing_op_is_usage_error(self):
        assert main(["bench"]) == 2


MINIMAL_CONFIG = {
    "dataset": {"train_count": 32, "test_count": 32, "seed": 1, "noise": 0.4},
    "net": {"channels": [4, 8]},
    "dropout": None,
    "optimizer": {"batch_size": 16},
    "epochs": 2,
    "seed": 0,
}


class TestTrainCommand:
    def test_minimal_baseline_trains(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(MINIMAL_CONFIG))
        out = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,train_acc,test_loss,test_acc,epoch_seconds"
        assert len(lines) == 3

    def test_rerun_reproduces_csv_modulo_timing(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        config = dict(MINIMAL_CONFIG)
        config["dropout"] = {"variant": "swd1d", "p": 0.2}
        cfg.write_text(json.dumps(config))
        csvs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
            rows = [
                line.rsplit(",", 1)[0]  # strip wall-clock column
                for line in (out / "metrics.csv").read_text().splitlines()
            ]
            csvs.append(rows)
        assert csvs[0] == csvs[1]

    def test_schema_violations_reported_with_paths(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "dataset": {"train_count": 30},
            "net": {"placement": "sideways", "bogus": 1},
            "dropout": {"variant": "swd9d"},
            "epochs": -3,
        }))
        assert main(["train", "--config", str(cfg), "--out",
                     str(tmp_path / "x")]) == 2
        err = capsys.readouterr().err
        assert "dataset.train_count" in err
        assert "net.placement" in err
        assert "net.bogus" in err
        assert "dropout" in err
        assert "epochs" in err

    def test_invalid_json_reported(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["train", "--config", str(cfg), "--out",
                     str(tmp_path / "x")]) == 2


class TestSweepCommand:
    def test_tiny_hparam_sweep(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        config = dict(MINIMAL_CONFIG)
        config["epochs"] = 1
        config["sweep"] = {"kind": "hparams", "variant": "sfd1d",
                          "p_grid": [0.2], "eta_grid": [0.1], "seeds": [0]}
        cfg.write_text(json.dumps(config))
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "sweep.csv").read_text().strip().splitlines()
        assert len(rows) == 2
        best = json.loads((out / "best.json").read_text())
        assert best["p"] == 0.2

    def test_band_sweep_accepts_ap_diagnostic(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        config = dict(MINIMAL_CONFIG)
        config["epochs"] = 1
        config["dropout"] = {"variant": "swd1d", "p": 0.2}
        config["sweep"] = {"kind": "bands", "subsets": [["L3"], ["AP"]],
                          "seeds": [0]}
        cfg.write_text(json.dumps(config))
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        body = (out / "sweep.csv").read_text()
        assert "L3" in body and "AP" in body

    def test_sweep_requires_section(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(MINIMAL_CONFIG))
        assert main(["sweep", "--config", str(cfg), "--out",
                     str(tmp_path / "x")]) == 2


class TestConfigValidation:
    def test_defaults_fill_in(self):
        resolved, errors = validate_train_config({})
        assert errors == []
        assert resolved["dataset"]["train_count"] == 256
        assert resolved["optimizer"]["momentum"] == 0.9

    def test_unknown_top_level_field(self):
        _, errors = validate_train_config({"versions": 1})
        assert any(e.startswith("versions:") for e in errors)

    def test_band_select_passes_through(self):
        resolved, errors = validate_train_config(
            {"dropout": {"variant": "swd1d", "p": 0.1, "band_select": ["L3"]}}
        )
        assert errors == []
        assert resolved["dropout"].band_select == ("L3",)
