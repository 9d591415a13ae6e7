# Copyright 2024 The droplet-stability Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Scenario Test Suite

Test cases can be run with the following:
  pytest -v --pspec tests/test_scenarios.py
"""
import os
import json
import tempfile
from unittest import TestCase
from unittest.mock import patch
import numpy as np
from droplet import scenarios
from droplet.common import status
from droplet.config import ScenarioConfig
from droplet.geometry import ReferenceCircle
from droplet.models import DataValidationError
from tests.factories import ShapeFactory, UnitDropletFactory


######################################################################
#  S H A P E   I N P U T
######################################################################
class TestShapeInput(TestCase):
    """Inline and file shape tests"""

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with

    def tearDown(self):
        self.folder.cleanup()

    def test_parse_shape(self):
        """It should turn cos/sin amplitudes into coefficients"""
        shape = scenarios.parse_shape("cos2=0.01, sin3=0.005,cos0=0.002", ReferenceCircle(1.0, 8), 0.5)
        self.assertAlmostEqual(shape.mode(2), 0.005)
        self.assertAlmostEqual(shape.mode(-3), 0.0025j)
        self.assertAlmostEqual(shape.mode(0), 0.002)
        theta = shape.reference.theta
        np.testing.assert_allclose(shape.rho, 0.01 * np.cos(2 * theta) + 0.005 * np.sin(3 * theta) + 0.002, atol=1e-15)

    def test_empty_shape(self):
        """It should give the reference circle for an empty description"""
        self.assertEqual(scenarios.parse_shape("", ReferenceCircle(1.0, 8), 0.5).sup_norm, 0.0)

    def test_bad_shape(self):
        """It should reject unknown terms and modes outside the truncation"""
        reference = ReferenceCircle(1.0, 8)
        self.assertRaises(DataValidationError, scenarios.parse_shape, "tan2=0.1", reference, 0.5)
        self.assertRaises(DataValidationError, scenarios.parse_shape, "cos9=0.1", reference, 0.5)
        self.assertRaises(DataValidationError, scenarios.parse_shape, "sin0=0.1", reference, 0.5)
        self.assertRaises(DataValidationError, scenarios.parse_shape, "cos2", reference, 0.5)

    def test_shape_file(self):
        """It should read the initial shape from a shape file"""
        shape = ShapeFactory()
        path = os.path.join(self.folder.name, "shape.txt")
        with open(path, "w", encoding="utf-8") as stream:
            stream.write(shape.dumps())
        cfg = ScenarioConfig(shape_file=path)
        loaded = scenarios.initial_shape(cfg, cfg.model_params())
        np.testing.assert_allclose(loaded.rho_hat, shape.rho_hat, atol=1e-15)

    def test_default_shapes(self):
        """It should default to the circle of radius R0 or to the standard perturbation"""
        cfg = ScenarioConfig(n_modes=8, volume=np.pi * 8.0 / 4.0)
        disk = scenarios.initial_shape(cfg, cfg.model_params())
        self.assertEqual(disk.sup_norm, 0.0)
        self.assertAlmostEqual(disk.reference.radius, 2.0)
        perturbed = scenarios.initial_shape(cfg, cfg.model_params(), scenarios.DEFAULT_PERTURBATION)
        self.assertAlmostEqual(perturbed.mode(2), 0.005)


######################################################################
#  C O M M A N D S
######################################################################
class TestCommands(TestCase):
    """Command handler tests"""

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with
        self.out_dir = os.path.join(self.folder.name, "results")

    def tearDown(self):
        self.folder.cleanup()

    def _config(self, **kwargs) -> ScenarioConfig:
        return ScenarioConfig(out_dir=self.out_dir, **kwargs)

    def _read_json(self, name: str) -> dict:
        with open(os.path.join(self.out_dir, name), "r", encoding="utf-8") as stream:
            return json.load(stream)

    def test_registry(self):
        """It should register a handler for every command"""
        expected = ["solve", "spectrum", "evolve", "stability", "sweep-mu", "validate"]
        self.assertEqual(sorted(scenarios.COMMANDS), sorted(expected))

    def test_solve(self):
        """It should solve on the disk and write the boundary table"""
        code = scenarios.run(self._config(command="solve", mu=0.1, format="json"))
        self.assertEqual(code, status.EXIT_0_OK)
        document = self._read_json("solve.json")
        self.assertAlmostEqual(document["summary"]["lambda"], 2.0, delta=1e-12)
        self.assertTrue(document["summary"]["positive_regime"])
        self.assertEqual(len(document["rows"]), 64)
        self.assertEqual(document["config"]["command"], "solve")

    def test_spectrum(self):
        """It should write both spectra and the matrix dump"""
        code = scenarios.run(self._config(command="spectrum", mu=0.05, n_modes=8))
        self.assertEqual(code, status.EXIT_0_OK)
        for name in ("spectrum.csv", "spectrum_perp.csv", "DH0_matrix.txt"):
            self.assertTrue(os.path.isfile(os.path.join(self.out_dir, name)))
        summary, _ = scenarios.run_spectrum(self._config(command="spectrum", mu=0.05, n_modes=8))
        self.assertEqual(summary["DH0"]["kernel_count"], 2)
        self.assertEqual(summary["DH0_perp"]["kernel_count"], 0)

    def test_evolve(self):
        """It should write a trajectory for a short co-moving run"""
        cfg = self._config(command="evolve", mu=0.05, n_modes=8, dt=1e-2, t_end=0.1, record_every=5)
        self.assertEqual(scenarios.run(cfg), status.EXIT_0_OK)
        with open(os.path.join(self.out_dir, "trajectory.csv"), "r", encoding="utf-8") as stream:
            lines = stream.read().splitlines()
        self.assertTrue(lines[-1].startswith("# summary"))
        self.assertEqual(sum(1 for line in lines if not line.startswith("#")), 1 + 3)

    def test_evolve_ill_posed(self):
        """It should halt at mu = 5, keep the partial trajectory and exit 2"""
        cfg = self._config(command="evolve", mu=5.0, n_modes=8, dt=1e-2, t_end=1.0)
        self.assertEqual(scenarios.run(cfg), status.EXIT_2_NUMERICAL_FAILURE)
        self.assertEqual(self._read_json("error.json")["error"], "ParabolicityLost")
        self.assertTrue(os.path.isfile(os.path.join(self.out_dir, "trajectory.csv")))

    def test_stability(self):
        """It should evolve the decomposed system and report the spectral gap"""
        cfg = self._config(command="stability", mu=0.05, n_modes=8, dt=2e-2, t_end=2.0, record_every=5, format="json")
        self.assertEqual(scenarios.run(cfg), status.EXIT_0_OK)
        summary = self._read_json("stability.json")["summary"]
        self.assertGreater(summary["spectral_gap"], 0.9)
        self.assertIsNotNone(summary["omega0_fit"])
        self.assertIn("z_inf", summary)
        self.assertIn("z1", self._read_json("stability.json")["columns"])

    def test_sweep_mu(self):
        """It should bisect the critical incline mu* = 4 on the disk"""
        summary, code = scenarios.run_sweep_mu(self._config(command="sweep-mu", n_modes=8, mu_max=6.0, mu_samples=7))
        self.assertEqual(code, status.EXIT_0_OK)
        self.assertAlmostEqual(summary["mu_star"], 4.0, delta=1e-6)
        self.assertAlmostEqual(summary["positivity_bound"], 4.0)
        self.assertTrue(os.path.isfile(os.path.join(self.out_dir, "sweep_mu.csv")))

    def test_sweep_mu_without_crossing(self):
        """It should report no critical incline below mu_max"""
        summary, _ = scenarios.run_sweep_mu(self._config(command="sweep-mu", n_modes=8, mu_max=3.0, mu_samples=4))
        self.assertIsNone(summary["mu_star"])

    def test_validate(self):
        """It should pass every analytic check"""
        summary, code = scenarios.run_validate(self._config(command="validate"))
        self.assertEqual(summary["failed"], [])
        self.assertTrue(summary["passed"])
        self.assertEqual(code, status.EXIT_0_OK)
        self.assertTrue(os.path.isfile(os.path.join(self.out_dir, "validate.csv")))

    @patch("droplet.scenarios.check_dtn")
    def test_validate_failure(self, check_mock):
        """It should exit 2 when a check fails"""
        check_mock.return_value = [{"check": "dtn_multiplier", "value": 1.0, "tolerance": 1e-8, "passed": False}]
        summary, code = scenarios.run_validate(self._config(command="validate", n_modes=8))
        self.assertEqual(code, status.EXIT_2_NUMERICAL_FAILURE)
        self.assertIn("dtn_multiplier", summary["failed"])

    @patch("droplet.scenarios.solve_full")
    def test_unexpected_error(self, solve_mock):
        """It should map unexpected failures to exit 2"""
        solve_mock.side_effect = RuntimeError("boom")
        self.assertEqual(scenarios.run(self._config(command="solve")), status.EXIT_2_NUMERICAL_FAILURE)

    def test_checks(self):
        """It should evaluate single checks within tolerance"""
        params = UnitDropletFactory(mu=0.1)
        for check in scenarios.check_stationarity(params, 8) + scenarios.check_critical_incline(params, 8):
            self.assertTrue(check["passed"], check)
