import json

import pytest

import fractalab as fl
from fractalab.cli import main as cli_main
from fractalab.errors import ValidationError


def mt_config(kind, out, level=5, **extra):
    payload = {
        "kind": kind,
        "output_dir": str(out),
        "factors": [{"base": 3, "digits": [0, 2], "level": level}] * 2,
        "seed": 7,
    }
    payload.update(extra)
    return fl.ExperimentConfig.from_dict(payload)


class TestConfig:
    def test_round_trip_is_idempotent(self, tmp_path):
        config = mt_config("spherical", tmp_path, gamma0=0.2, dz_k=1.5)
        text = config.to_json()
        again = fl.ExperimentConfig.from_json(text)
        assert again.to_json() == text
        assert again.to_dict() == config.to_dict()

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValidationError, match="unknown config fields"):
            fl.ExperimentConfig.from_dict({"kind": "energy", "turbo": True})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError, match="kind"):
            fl.ExperimentConfig.from_dict({"kind": "warp"})

    def test_sweep_needs_three_points(self):
        with pytest.raises(ValidationError, match="3 points"):
            fl.GeometricSweep(1.0, 10.0, 2)

    def test_sweep_order_enforced(self):
        with pytest.raises(ValidationError, match="start"):
            fl.GeometricSweep(10.0, 1.0, 5)

    def test_stationary_requires_gap(self):
        with pytest.raises(ValidationError, match="gaps"):
            fl.ExperimentConfig.from_dict({"kind": "stationary"})

    def test_product_kind_requires_two_factors(self):
        with pytest.raises(ValidationError, match="factors"):
            fl.ExperimentConfig.from_dict(
                {"kind": "spherical", "factors": [{"base": 3, "digits": [0, 2], "level": 4}]}
            )

    def test_factor_spec_parsing(self):
        spec = fl.parse_factor_spec("3:0,2:8")
        assert (spec.base, spec.digits, spec.level) == (3, (0, 2), 8)
        with pytest.raises(ValidationError, match="factor"):
            fl.parse_factor_spec("3:8")


class TestRunner:
    def test_energy_experiment_artifacts(self, tmp_path):
        config = mt_config("energy", tmp_path / "energy", level=7)
        files = fl.run_experiment(config)
        assert set(files) == {"energy.csv", "results.json", "manifest.json"}
        csv = (tmp_path / "energy" / "energy.csv").read_text()
        assert csv.splitlines()[0] == "r,E,log_r,log_E"
        assert "# fitted_exponent=" in csv
        results = json.loads((tmp_path / "energy" / "results.json").read_text())
        assert results["fitted_exponent"] >= results["alpha"] - 0.05

    def test_thresholds_d3_contains_nine_fifths(self, tmp_path):
        config = fl.ExperimentConfig.from_dict(
            {"kind": "thresholds", "output_dir": str(tmp_path), "dims": ["0.7", "0.7", "0.7"]}
        )
        fl.run_experiment(config)
        text = (tmp_path / "thresholds.txt").read_text()
        assert "sum_threshold=9/5" in text

    def test_determinism_byte_identical(self, tmp_path):
        out = tmp_path / "run"
        config = mt_config("spherical", out, level=6)
        fl.run_experiment(config)
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        fl.run_experiment(mt_config("spherical", out, level=6))
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_manifest_hashes_every_artifact(self, tmp_path):
        import hashlib

        config = mt_config("distance", tmp_path, level=3, bin_width=0.05)
        files = fl.run_experiment(config)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["versions"]["fractalab"] == fl.__version__
        for name, digest in manifest["files"].items():
            assert digest == hashlib.sha256(files[name].read_bytes()).hexdigest()

    def test_cantor_run_emits_loadable_measures(self, tmp_path):
        config = mt_config("cantor", tmp_path, level=4)
        fl.run_experiment(config)
        nu = fl.load_grid_measure(tmp_path / "factor_0.measure")
        assert nu.atom_count == 16

    def test_stationary_run_emits_one_csv_per_gap(self, tmp_path):
        config = fl.ExperimentConfig.from_dict(
            {
                "kind": "stationary",
                "output_dir": str(tmp_path),
                "gaps": [[0.0, 1.0], [0.6, 0.8]],
                "sweep": {"start": 100.0, "stop": 1000.0, "count": 4},
            }
        )
        fl.run_experiment(config)
        for k in (0, 1):
            text = (tmp_path / f"stationary_gap{k}.csv").read_text()
            assert text.splitlines()[0] == "t,exact_re,exact_im,main,resid"
            assert "# residual_slope=" in text

    def test_parallel_solid_sweep_matches_serial(self, tmp_path):
        serial = mt_config("solid", tmp_path / "serial", level=6)
        parallel = mt_config("solid", tmp_path / "parallel", level=6, parallelism=4)
        fl.run_experiment(serial)
        fl.run_experiment(parallel)
        a = (tmp_path / "serial" / "solid.csv").read_bytes()
        b = (tmp_path / "parallel" / "solid.csv").read_bytes()
        assert a == b

    def test_full_report_produces_summary(self, tmp_path):
        config = mt_config("full-report", tmp_path, level=6)
        files = fl.run_experiment(config)
        summary = files["summary.txt"].read_text()
        assert "energy" in summary and "thresholds" in summary
        assert "[d = 2]" in summary

    def test_emit_report_requires_manifest(self, tmp_path):
        with pytest.raises(ValidationError, match="manifest"):
            fl.emit_report(tmp_path)

    def test_emit_report_rejects_corrupt_manifest(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{not json")
        with pytest.raises(ValidationError, match="corrupt"):
            fl.emit_report(tmp_path)

    def test_emit_report_groups_dimensions(self, tmp_path):
        fl.run_experiment(mt_config("distance", tmp_path / "a", level=3, bin_width=0.05))
        config3 = fl.ExperimentConfig.from_dict(
            {
                "kind": "mattila",
                "output_dir": str(tmp_path / "b"),
                "factors": [{"base": 2, "digits": [0], "level": 0}] * 3,
                "truncation": 3.0,
                "seed": 1,
                "mc_nodes": 500,
            }
        )
        fl.run_experiment(config3)
        summary = fl.emit_report(tmp_path).read_text()
        assert "[d = 2]" in summary and "[d = 3]" in summary


class TestCli:
    def test_energy_exit_zero(self, tmp_path, capsys):
        code = cli_main(["energy", "--factor", "3:0,2:6", "--output", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "energy.csv" in out
        assert (tmp_path / "manifest.json").exists()

    def test_validation_error_exits_two(self, tmp_path, capsys):
        code = cli_main(["energy", "--factor", "3:0,9:6", "--output", str(tmp_path)])
        assert code == 2
        assert "validation error" in capsys.readouterr().err

    def test_budget_error_exits_three(self, tmp_path, capsys):
        code = cli_main(
            ["distance", "--factor", "3:0,2:8", "--factor", "3:0,2:8", "--output", str(tmp_path)]
        )
        assert code == 3
        assert "budget error" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "config.json"
        cfg.write_text(
            json.dumps(
                {
                    "factors": [{"base": 3, "digits": [0, 2], "level": 6}],
                    "output_dir": str(tmp_path / "ignored"),
                }
            )
        )
        out = tmp_path / "actual"
        code = cli_main(["solid", "--config", str(cfg), "--output", str(out)])
        assert code == 0
        assert (out / "solid.csv").exists()

    def test_thresholds_subcommand(self, tmp_path):
        code = cli_main(["thresholds", "--dims", "2/3,2/3", "--output", str(tmp_path)])
        assert code == 0
        assert "sum_threshold=4/3" in (tmp_path / "thresholds.txt").read_text()
