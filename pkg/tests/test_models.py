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
Test cases for the droplet models and the configuration layer
"""
import os
import math
import tempfile
from unittest import TestCase
import numpy as np
from droplet import config
from droplet.config import ScenarioConfig, parse_config, read_config_file
from droplet.models import ContactLineLaw, DataValidationError, ModelParams, MonotonicityWarning
from tests.factories import ModelParamsFactory


######################################################################
#  M O D E L   P A R A M E T E R S
######################################################################
class TestModelParams(TestCase):
    """Model parameter tests"""

    def test_create_params(self):
        """It should derive the translating circle of the unit droplet"""
        params = ModelParams(a=1.0, b=1.0, mu=0.05, volume=math.pi / 4)
        self.assertEqual(str(params), f"<ModelParams a=1.0 b=1.0 mu=0.05 V={math.pi / 4}>")
        self.assertAlmostEqual(params.R0, 1.0, places=14)
        self.assertAlmostEqual(params.v0, 0.0125, places=14)
        self.assertAlmostEqual(params.lambda0, 2.0, places=13)
        self.assertAlmostEqual(params.omega, 0.25, places=14)
        self.assertAlmostEqual(params.positivity_bound, 4.0, places=13)
        self.assertTrue(params.is_positive_regime)
        self.assertFalse(params.with_mu(5.0).is_positive_regime)

    def test_radius_scaling(self):
        """It should scale R0 like (4 V a / (pi b))^(1/3)"""
        params = ModelParams(a=2.0, b=1.0, volume=math.pi)
        self.assertAlmostEqual(params.R0, 2.0, places=13)
        self.assertAlmostEqual(params.lambda0, 8.0 * math.pi / (math.pi * 16.0), places=13)

    def test_with_mu(self):
        """It should copy the parameters at another incline"""
        params = ModelParamsFactory()
        steeper = params.with_mu(0.5)
        self.assertEqual(steeper.mu, 0.5)
        self.assertEqual(steeper.a, params.a)
        self.assertEqual(steeper.R0, params.R0)

    def test_invalid_params(self):
        """It should reject nonpositive constants and negative inclines"""
        self.assertRaises(DataValidationError, ModelParams, a=0.0)
        self.assertRaises(DataValidationError, ModelParams, b=-1.0)
        self.assertRaises(DataValidationError, ModelParams, volume=0.0)
        self.assertRaises(DataValidationError, ModelParams, mu=-0.1)
        self.assertRaises(DataValidationError, ModelParams, a="one")

    def test_serialize_params(self):
        """It should serialize parameters with the derived values"""
        params = ModelParamsFactory()
        data = params.serialize()
        self.assertEqual(data["a"], params.a)
        self.assertEqual(data["mu"], params.mu)
        self.assertEqual(data["R0"], params.R0)
        self.assertEqual(data["omega"], params.omega)

    def test_deserialize_params(self):
        """It should deserialize parameters"""
        params = ModelParamsFactory()
        copy = ModelParams.deserialize(params.serialize())
        self.assertEqual(copy, params)

    def test_deserialize_missing_data(self):
        """It should not deserialize parameters with missing data"""
        self.assertRaises(DataValidationError, ModelParams.deserialize, {"a": 1.0, "b": 1.0})

    def test_deserialize_bad_data(self):
        """It should not deserialize bad data"""
        self.assertRaises(DataValidationError, ModelParams.deserialize, {"a": "x", "b": 1, "mu": 0, "volume": 1})
        self.assertRaises(DataValidationError, ModelParams.deserialize, {"a": None, "b": 1, "mu": 0, "volume": 1})


######################################################################
#  C O N T A C T   L I N E   L A W
######################################################################
class TestContactLineLaw(TestCase):
    """Contact line law tests"""

    def test_affine_law(self):
        """It should evaluate F(q) = a q - b and F' = a"""
        law = ContactLineLaw.affine(2.0, 1.0)
        self.assertTrue(law.is_affine)
        self.assertEqual(str(law), "<ContactLineLaw affine>")
        np.testing.assert_allclose(law(np.array([0.0, 1.0, 2.0])), [-1.0, 1.0, 3.0])
        np.testing.assert_allclose(law.derivative(np.array([0.0, 5.0])), [2.0, 2.0])
        self.assertTrue(law.check_monotone(np.array([-1.0, 1.0])))

    def test_law_from_params(self):
        """It should build the affine law of the model"""
        law = ContactLineLaw.from_params(ModelParams(a=3.0, b=2.0))
        self.assertEqual(law.coefficients, (3.0, 2.0))

    def test_invalid_affine_law(self):
        """It should reject nonpositive coefficients"""
        self.assertRaises(DataValidationError, ContactLineLaw.affine, 0.0, 1.0)
        self.assertRaises(DataValidationError, ContactLineLaw.affine, 1.0, -1.0)

    def test_custom_law(self):
        """It should evaluate a custom law and its derivative"""
        law = ContactLineLaw.custom(lambda q: q**3 - 1.0, lambda q: 3.0 * q**2, name="cubic")
        self.assertFalse(law.is_affine)
        np.testing.assert_allclose(law(np.array([1.0, 2.0])), [0.0, 7.0])
        np.testing.assert_allclose(law.derivative(np.array([1.0, 2.0])), [3.0, 12.0])
        self.assertTrue(law.check_monotone(np.array([0.5, 1.5])))

    def test_non_monotone_law(self):
        """It should warn when F' <= 0 on the encountered slopes"""
        law = ContactLineLaw.custom(lambda q: q**3 - 1.0, lambda q: 3.0 * q**2, name="cubic")
        with self.assertWarns(MonotonicityWarning):
            self.assertFalse(law.check_monotone(np.array([0.0, 1.0])))

    def test_constant_derivative_broadcasts(self):
        """It should broadcast scalar results to the slope shape"""
        law = ContactLineLaw.custom(lambda q: 1.0, lambda q: 2.0)
        self.assertEqual(law(np.zeros(4)).shape, (4,))
        self.assertEqual(law.derivative(np.zeros(4)).shape, (4,))


######################################################################
#  C O N F I G U R A T I O N
######################################################################
class TestScenarioConfig(TestCase):
    """Configuration tests"""

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with

    def tearDown(self):
        self.folder.cleanup()

    def _write(self, text: str) -> str:
        path = os.path.join(self.folder.name, "run.cfg")
        with open(path, "w", encoding="utf-8") as stream:
            stream.write(text)
        return path

    def test_defaults(self):
        """It should default to the unit droplet"""
        cfg = parse_config()
        self.assertEqual(cfg.command, "solve")
        self.assertEqual(cfg.n_modes, config.N_MODES)
        self.assertEqual(cfg.grid_size, 4 * cfg.n_modes)
        params = cfg.model_params()
        self.assertAlmostEqual(params.R0, 1.0)
        self.assertEqual(params.mu, 0.1)

    def test_flags_override_file(self):
        """It should resolve defaults < config file < flags"""
        path = self._write("# a comment\ncommand = evolve\nmu = 0.2\nn-modes = 8  # trailing comment\ndt = 1e-2\n\n")
        cfg = parse_config({"mu": "0.05", "--t-end": "2", "a": None}, path)
        self.assertEqual(cfg.command, "evolve")
        self.assertEqual(cfg.mu, 0.05)
        self.assertEqual(cfg.n_modes, 8)
        self.assertEqual(cfg.dt, 1e-2)
        self.assertEqual(cfg.t_end, 2.0)
        self.assertEqual(cfg.a, 1.0)

    def test_read_config_file(self):
        """It should convert file values by key"""
        values = read_config_file(self._write("halt_on_parabolicity_loss = no\nn_grid = none\nshape = cos2=0.01\n"))
        self.assertEqual(values, {"halt_on_parabolicity_loss": False, "n_grid": None, "shape": "cos2=0.01"})

    def test_missing_config_file(self):
        """It should reject a missing config file"""
        self.assertRaises(DataValidationError, parse_config, {}, os.path.join(self.folder.name, "nope.cfg"))

    def test_malformed_config_file(self):
        """It should reject lines without '='"""
        self.assertRaises(DataValidationError, read_config_file, self._write("mu 0.1\n"))

    def test_unknown_key(self):
        """It should reject unknown keys"""
        self.assertRaises(DataValidationError, parse_config, {"colour": "red"})

    def test_bad_values(self):
        """It should reject values that do not convert or violate invariants"""
        self.assertRaises(DataValidationError, parse_config, {"mu": "steep"})
        self.assertRaises(DataValidationError, parse_config, {"mu": "-1"})
        self.assertRaises(DataValidationError, parse_config, {"n_modes": "3"})
        self.assertRaises(DataValidationError, parse_config, {"n_modes": "8", "n_grid": "10"})
        self.assertRaises(DataValidationError, parse_config, {"frame": "rotating"})
        self.assertRaises(DataValidationError, parse_config, {"format": "xml"})
        self.assertRaises(DataValidationError, parse_config, {"command": "dance"})
        self.assertRaises(DataValidationError, parse_config, {"dt": "0"})
        self.assertRaises(DataValidationError, parse_config, {"tube_ratio": "1.5"})
        self.assertRaises(DataValidationError, parse_config, {"tail_fraction": "1"})
        self.assertRaises(DataValidationError, parse_config, {"record_every": "0"})
        self.assertRaises(DataValidationError, parse_config, {"halt_on_parabolicity_loss": "maybe"})
        self.assertRaises(DataValidationError, parse_config, {"shape_file": os.path.join(self.folder.name, "none.txt")})

    def test_serialize(self):
        """It should serialize into a dictionary and header lines"""
        cfg = ScenarioConfig(command="spectrum", mu=0.05)
        data = cfg.serialize()
        self.assertEqual(data["command"], "spectrum")
        self.assertIn("mu=0.05", cfg.header_lines())
