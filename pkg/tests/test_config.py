"""
Unit tests for presets, config documents and overrides
"""
import math
import os
import tempfile
import unittest
from dataclasses import replace

from potentials import ECKART
from propagator import EXPLICIT, IMPLICIT
from utils.config import (
    KNOWN_KEYS, PAPER_REGIME_STEPS, build_config, describe_config, load_config,
    parse_document, parse_override, resolve_config
)
from utils.errors import ConfigError, ValidationError


class TestPresets(unittest.TestCase):

    def test_free_preset(self):
        config = resolve_config(preset="free")
        self.assertEqual(config.scenario, "free")
        self.assertEqual(config.grid.n_points, 2500)
        self.assertEqual(config.grid.n_steps, 100000)
        self.assertAlmostEqual(config.grid.dt, 4e-6, places=18)
        self.assertEqual(config.schedule.scheme, IMPLICIT)
        self.assertTrue(config.potential.is_free)
        self.assertEqual(config.n_traj, 19)
        self.assertAlmostEqual(config.half_span, 1.0, places=15)
        self.assertEqual(config.split_position, 0.0)
        self.assertIsNone(config.amplitude_floor)
        self.assertEqual(config.output_dir, "runs/free")

    def test_eckart_preset(self):
        config = resolve_config(preset="eckart")
        self.assertEqual(config.potential.kind, ECKART)
        self.assertEqual((config.potential.V0, config.potential.beta, config.potential.qv), (200.0, 20.0, -0.5))
        self.assertEqual(config.split_position, -0.5)
        self.assertAlmostEqual(config.grid.t_final, 0.35, places=12)
        self.assertEqual(config.onset_threshold, 0.05)
        self.assertTrue(config.free_baseline().potential.is_free)
        self.assertEqual(config.free_baseline().grid, config.grid)

    def test_paper_regime_key(self):
        config = resolve_config(preset="free", overrides=["paper_regime=true"])
        self.assertEqual(config.grid.n_steps, PAPER_REGIME_STEPS)
        self.assertAlmostEqual(config.grid.dt, 4e-8, places=20)
        self.assertEqual(config.schedule.scheme, EXPLICIT)
        self.assertEqual(config.trajectory_stride, 1)
        self.assertEqual(config.schedule.snapshot_stride, 250000)
        self.assertEqual(config.grid.n_steps // config.schedule.snapshot_stride + 1, 41)

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError):
            resolve_config(preset="harmonic")


class TestOverrides(unittest.TestCase):

    def test_overrides_apply_after_preset(self):
        config = resolve_config(preset="free", overrides=["n_steps=1000", "snapshot_stride=100", "scheme=explicit"])
        self.assertEqual(config.grid.n_steps, 1000)
        self.assertEqual(config.schedule.snapshot_stride, 100)
        self.assertEqual(config.schedule.scheme, EXPLICIT)
        self.assertAlmostEqual(config.grid.dt, 4e-4, places=15)

    def test_output_dir_wins(self):
        config = resolve_config(preset="free", overrides=["output_dir=elsewhere"], output_dir="final")
        self.assertEqual(config.output_dir, "final")

    def test_onset_threshold_accepts_infinity(self):
        config = resolve_config(preset="eckart", overrides=["onset_threshold=inf"])
        self.assertTrue(math.isinf(config.onset_threshold))

    def test_malformed_override(self):
        with self.assertRaises(ConfigError):
            parse_override("n_steps")
        self.assertEqual(parse_override(" n_steps = 10 "), ("n_steps", "10"))

    def test_invalid_values(self):
        cases = [
            ["n_points=2"],
            ["n_traj=4"],
            ["gamma=0"],
            ["q0=12"],
            ["split_position=-10"],
            ["snapshot_stride=0"],
            ["snapshot_stride=200000"],
            ["scheme=leapfrog"],
            ["onset_threshold=-1"],
        ]
        for overrides in cases:
            with self.subTest(overrides=overrides):
                with self.assertRaises(ValidationError):
                    resolve_config(preset="free", overrides=overrides)

    def test_error_names_the_key(self):
        with self.assertRaises(ConfigError) as ctx:
            resolve_config(preset="free", overrides=["n_points=2"])
        self.assertEqual(ctx.exception.key, "n_points")
        self.assertIn("n_points", str(ctx.exception))


class TestConfigDocument(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.temp_dir.cleanup()

    def _write(self, text):
        path = os.path.join(self.temp_dir.name, "run.conf")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_parse_document_keeps_line_numbers(self):
        text = "# barrier run\nscenario = eckart\n\nV0 = 150  # lower barrier\nbeta=20\n"
        self.assertEqual(list(parse_document(text)),
                         [(2, "scenario", "eckart"), (4, "V0", "150"), (5, "beta", "20")])

    def test_scenario_key_selects_preset(self):
        config = load_config(self._write("scenario = eckart\nV0 = 150\nn_steps = 2000\nsnapshot_stride = 500\n"))
        self.assertEqual(config.scenario, "eckart")
        self.assertEqual(config.potential.V0, 150.0)
        self.assertEqual(config.grid.n_steps, 2000)

    def test_invalid_value_reports_line(self):
        path = self._write("scenario = free\n# tiny grid\nn_points = 2\n")
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertEqual(ctx.exception.key, "n_points")
        self.assertEqual(ctx.exception.line, 3)
        self.assertTrue(str(ctx.exception).startswith("line 3: n_points: "))

    def test_unknown_key_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write("scenario = free\nmass = 2\n"))
        self.assertEqual(ctx.exception.key, "mass")
        self.assertEqual(ctx.exception.line, 2)

    def test_unparseable_line_reports_line(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write("scenario = free\n\nthis is not a binding\n"))
        self.assertEqual(ctx.exception.line, 3)

    def test_key_without_value(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write("scenario = free\nn_steps\n"))
        self.assertEqual(ctx.exception.key, "n_steps")

    def test_duplicate_key(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self._write("scenario = free\nn_steps = 10\nn_steps = 20\n"))
        self.assertEqual(ctx.exception.line, 3)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.temp_dir.name, "absent.conf"))

    def test_described_config_validates_back(self):
        config = resolve_config(preset="eckart", overrides=["n_steps=1000", "snapshot_stride=100"])
        described = describe_config(config)
        self.assertTrue(set(described) <= set(KNOWN_KEYS))

        rebuilt = build_config(described)
        # dt is re-derived from the printed t_final
        self.assertAlmostEqual(rebuilt.grid.dt, config.grid.dt, places=18)
        self.assertEqual(replace(rebuilt, grid=config.grid), config)


if __name__ == "__main__":
    unittest.main()
