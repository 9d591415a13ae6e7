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
Test cases for the contact line dynamics
"""
import os
import tempfile
from unittest import TestCase
from unittest.mock import patch
import numpy as np
from droplet import config
from droplet.decomposition import recenter
from droplet.dynamics import (
    EvolutionConfig,
    Frame,
    Trajectory,
    check_stiffness,
    evolve,
    normal_velocity,
    step,
    stiffness_factor,
    velocity,
    velocity_G,
    velocity_H,
)
from droplet.geometry import ReferenceCircle, circle, frame, from_grid, make_shape
from droplet.models import ContactLineLaw, DataValidationError, NonAffineLaw, ParabolicityWarning, StiffnessWarning
from tests.factories import ShapeFactory, UnitDropletFactory


def perturbed_circle(n_modes: int = 12):
    """rho = 0.01 cos(2 theta) + 0.005 sin(3 theta) over the unit circle"""
    coeffs = np.zeros(2 * n_modes + 1, dtype=complex)
    coeffs[n_modes + 2] = coeffs[n_modes - 2] = 0.005
    coeffs[n_modes + 3], coeffs[n_modes - 3] = -0.0025j, 0.0025j
    return make_shape(ReferenceCircle(1.0, n_modes), coeffs)


######################################################################
#  S E T T I N G S
######################################################################
class TestEvolutionConfig(TestCase):
    """Time stepping settings tests"""

    def test_defaults(self):
        """It should default to the co-moving frame and the configured time stepping"""
        settings = EvolutionConfig()
        self.assertEqual(settings.frame, Frame.COMOVING)
        self.assertEqual(settings.dt, config.DT)
        self.assertEqual(settings.t_end, config.T_END)

    @patch("droplet.config.T_END", 2.0)
    @patch("droplet.config.DT", 0.5)
    def test_defaults_follow_configuration(self):
        """It should read dt and t_end from the environment configuration"""
        settings = EvolutionConfig()
        self.assertEqual(settings.dt, 0.5)
        self.assertEqual(settings.n_steps, 4)

    def test_frame_from_text(self):
        """It should accept the frame by name"""
        self.assertEqual(EvolutionConfig(frame="lab").frame, Frame.LAB)
        self.assertEqual(EvolutionConfig(dt=0.1, t_end=0.35).n_steps, 4)

    def test_invalid_settings(self):
        """It should reject bad frames, steps and record intervals"""
        self.assertRaises(DataValidationError, EvolutionConfig, frame="rotating")
        self.assertRaises(DataValidationError, EvolutionConfig, dt=0.0)
        self.assertRaises(DataValidationError, EvolutionConfig, t_end=-1.0)
        self.assertRaises(DataValidationError, EvolutionConfig, record_every=0)


######################################################################
#  V E L O C I T I E S
######################################################################
class TestVelocities(TestCase):
    """Velocity functional tests"""

    def test_stationary_circle(self):
        """It should give H = 0 on the translating circle"""
        disk = circle(ReferenceCircle(1.0, 16))
        for mu in (0.0, 0.05, 0.1):
            self.assertLessEqual(np.max(np.abs(velocity_H(disk, UnitDropletFactory(mu=mu)))), 1e-10)

    def test_lab_velocity_of_disk(self):
        """It should move the disk rigidly with speed v0 along e1"""
        params = UnitDropletFactory(mu=0.05)
        disk = circle(ReferenceCircle(1.0, 16))
        speed = velocity_G(disk, params, ContactLineLaw.from_params(params))
        np.testing.assert_allclose(speed, params.v0 * np.cos(disk.reference.theta), atol=1e-10)

    def test_frames_differ_by_drift(self):
        """It should subtract v0 e1 . nu in the co-moving frame"""
        params = UnitDropletFactory(mu=0.08)
        shape = ShapeFactory()
        lab = normal_velocity(shape, params, frame=Frame.LAB)
        moving = normal_velocity(shape, params, frame="comoving")
        np.testing.assert_allclose(lab - moving, params.v0 * frame(shape).normal[:, 0], atol=1e-14)

    def test_velocity_dispatch(self):
        """It should return the grid velocity together with its field"""
        params = UnitDropletFactory()
        shape = ShapeFactory()
        grid, solution = velocity(shape, params, None, Frame.COMOVING)
        np.testing.assert_allclose(grid, velocity_H(shape, params), atol=1e-13)
        self.assertEqual(solution.rhs_tag, "full")
        grid, _ = velocity(shape, params, None, Frame.LAB)
        np.testing.assert_allclose(grid, velocity_G(shape, params, ContactLineLaw.from_params(params)), atol=1e-13)

    def test_frame_computed_once(self):
        """It should build the boundary frame once per velocity evaluation"""
        params = UnitDropletFactory()
        shape = ShapeFactory()
        with patch("droplet.elliptic.frame", wraps=frame) as frame_mock:
            velocity_H(shape, params)
            velocity_G(shape, params, ContactLineLaw.from_params(params))
        self.assertEqual(frame_mock.call_count, 2)

    def test_kernel_direction_is_quadratic(self):
        """It should give |H| = O(eps^2) along the translation direction eps cos(theta)"""
        params = UnitDropletFactory(mu=0.05)
        reference = ReferenceCircle(1.0, 12)
        norms = []
        for eps in (1e-2, 5e-3):
            coeffs = np.zeros(2 * 12 + 1, dtype=complex)
            coeffs[12 + 1] = coeffs[12 - 1] = eps / 2.0
            norms.append(np.max(np.abs(velocity_H(make_shape(reference, coeffs), params))))
        self.assertAlmostEqual(norms[0] / norms[1], 4.0, delta=0.4)

    def test_uniform_expansion_relaxes(self):
        """It should shrink a uniformly expanded circle at the closed-form rate 4V/(pi R^3) - 1"""
        params = UnitDropletFactory(mu=0.05)
        reference = ReferenceCircle(1.0, 12)
        coeffs = np.zeros(2 * 12 + 1, dtype=complex)
        coeffs[12] = 0.01
        rate = from_grid(velocity_H(make_shape(reference, coeffs), params), 12)
        expected = 4.0 * params.volume / (np.pi * 1.01**3) - 1.0
        self.assertLess(rate[12].real, 0.0)
        self.assertAlmostEqual(rate[12].real, expected, delta=1e-9)

    def test_non_affine_law(self):
        """It should refuse a custom law in the co-moving frame"""
        law = ContactLineLaw.custom(lambda q: q - 1.0, lambda q: 1.0, name="linear")
        self.assertRaises(NonAffineLaw, velocity_H, ShapeFactory(), UnitDropletFactory(), law)

    def test_parabolicity_warning(self):
        """It should warn when the contact slope turns negative"""
        disk = circle(ReferenceCircle(1.0, 8))
        with self.assertWarns(ParabolicityWarning):
            velocity_H(disk, UnitDropletFactory(mu=5.0))


######################################################################
#  T I M E   S T E P P I N G
######################################################################
class TestStepping(TestCase):
    """Runge-Kutta tests"""

    def test_stiffness(self):
        """It should warn when dt amplifies the fastest mode"""
        params = UnitDropletFactory()
        self.assertLess(stiffness_factor(1e-3, params, 16), 1.0)
        self.assertTrue(check_stiffness(1e-3, params, 16))
        with self.assertWarns(StiffnessWarning):
            self.assertFalse(check_stiffness(0.5, params, 32))

    def test_step_keeps_circle(self):
        """It should leave the translating circle in place"""
        disk = circle(ReferenceCircle(1.0, 8))
        moved = step(disk, UnitDropletFactory(mu=0.1), None, 1e-2)
        self.assertLessEqual(moved.sup_norm, 1e-11)

    def test_step_doubling(self):
        """It should agree with two half steps to within the RK4 local error"""
        params = UnitDropletFactory(mu=0.05)
        shape = perturbed_circle(8)
        whole = step(shape, params, None, 0.1)
        halves = step(step(shape, params, None, 0.05), params, None, 0.05)
        self.assertLessEqual(np.max(np.abs(whole.rho_hat - halves.rho_hat)), 1e-7)

    def test_step_decays_mode_two(self):
        """It should shrink a cos(2 theta) perturbation at rate close to 4 omega"""
        params = UnitDropletFactory(mu=0.0)
        shape = perturbed_circle(8)
        moved = step(shape, params, None, 1e-2, dealias=True)
        ratio = abs(moved.mode(2)) / abs(shape.mode(2))
        self.assertAlmostEqual(ratio, np.exp(-1e-2), delta=1e-3)


######################################################################
#  E V O L U T I O N
######################################################################
class TestEvolve(TestCase):
    """Evolution tests"""

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with

    def tearDown(self):
        self.folder.cleanup()

    def test_comoving_decay(self):
        """It should decay a small perturbation in the co-moving frame"""
        params = UnitDropletFactory(mu=0.05)
        trajectory = evolve(perturbed_circle(), params, settings=EvolutionConfig(dt=1e-2, t_end=2.0, record_every=20))
        self.assertIsNone(trajectory.halt_reason)
        self.assertEqual(len(trajectory), 11)
        self.assertAlmostEqual(trajectory.times[-1], 2.0)
        self.assertLess(trajectory.sup_norms[-1], 0.5 * trajectory.sup_norms[0])
        for record in trajectory.records:
            self.assertLessEqual(record.volume_residual, 1e-9)
            self.assertGreater(record.min_contact_slope, 0.0)
        self.assertFalse(trajectory.has_translation)

    def test_reflection_symmetry(self):
        """It should keep a curve that is even in theta even for all time"""
        params = UnitDropletFactory(mu=0.05)
        coeffs = np.zeros(2 * 8 + 1, dtype=complex)
        coeffs[8 + 2] = coeffs[8 - 2] = 0.005
        coeffs[8 + 3] = coeffs[8 - 3] = 0.0025
        shape = make_shape(ReferenceCircle(1.0, 8), coeffs)
        trajectory = evolve(shape, params, settings=EvolutionConfig(dt=5e-2, t_end=1.0, frame="lab"))
        self.assertIsNone(trajectory.halt_reason)
        for record in trajectory.records:
            self.assertLessEqual(np.max(np.abs(record.rho_hat.imag)), 1e-12)

    def test_rigid_translation(self):
        """It should translate the disk by T v0 e1 in the lab frame"""
        params = UnitDropletFactory(mu=0.05)
        disk = circle(ReferenceCircle(1.0, 16))
        settings = EvolutionConfig(dt=1e-2, t_end=1.0, frame=Frame.LAB, record_every=100)
        trajectory = evolve(disk, params, settings=settings)
        state = recenter(trajectory.final_shape)
        target = np.array([params.v0, 0.0])
        self.assertLessEqual(np.linalg.norm(state.z - target), 0.01 * params.v0)
        self.assertLessEqual(state.rho_bar.sup_norm, 1e-4)

    def test_halts_when_ill_posed(self):
        """It should halt immediately with ParabolicityLost at mu = 5"""
        params = UnitDropletFactory(mu=5.0)
        with self.assertWarns(ParabolicityWarning):
            trajectory = evolve(perturbed_circle(), params, settings=EvolutionConfig(dt=1e-2, t_end=1.0))
        self.assertTrue(trajectory.halt_reason.startswith("ParabolicityLost"))
        self.assertEqual(len(trajectory), 1)
        self.assertLessEqual(trajectory.records[0].min_contact_slope, 0.0)
        self.assertIsNotNone(trajectory.halt_error)

    def test_continues_without_halting(self):
        """It should only warn when halting is disabled"""
        params = UnitDropletFactory(mu=5.0)
        settings = EvolutionConfig(dt=1e-3, t_end=2e-3, record_every=1, halt_on_parabolicity_loss=False)
        with self.assertWarns(ParabolicityWarning):
            trajectory = evolve(perturbed_circle(), params, settings=settings)
        self.assertIsNone(trajectory.halt_reason)
        self.assertEqual(len(trajectory), 3)

    def test_lab_frame_custom_law(self):
        """It should evolve a custom law in the lab frame"""
        params = UnitDropletFactory(mu=0.05)
        law = ContactLineLaw.custom(lambda q: q**2 - 1.0, lambda q: 2.0 * q, name="square")
        trajectory = evolve(perturbed_circle(8), params, law, EvolutionConfig(dt=1e-2, t_end=0.1, frame=Frame.LAB))
        self.assertIsNone(trajectory.halt_reason)
        self.assertGreater(trajectory.final_shape.mode(1).real, 0.0)

    def test_trajectory_csv(self):
        """It should export records with a trailing summary line"""
        settings = EvolutionConfig(dt=1e-2, t_end=0.05, record_every=1)
        trajectory = evolve(perturbed_circle(8), UnitDropletFactory(), settings=settings)
        path = os.path.join(self.folder.name, "trajectory.csv")
        trajectory.to_csv(path, config_lines=["mu=0.05"])
        with open(path, "r", encoding="utf-8") as stream:
            lines = stream.read().splitlines()
        self.assertEqual(lines[0], "# mu=0.05")
        self.assertTrue(lines[1].startswith("t,lambda,min_contact_slope,volume_residual,sup_rho,re_rho_0,im_rho_0"))
        self.assertEqual(len(lines), 2 + 6 + 1)
        self.assertTrue(lines[-1].startswith("# summary {"))
        self.assertEqual(len(trajectory.columns()), 5 + 2 * 9)

    def test_records_increase(self):
        """It should refuse records that do not advance in time"""
        trajectory = evolve(perturbed_circle(8), UnitDropletFactory(), settings=EvolutionConfig(dt=1e-2, t_end=0.0))
        self.assertEqual(len(trajectory), 1)
        self.assertIn("Trajectory", repr(trajectory))
        blank = Trajectory(reference=trajectory.reference, frame=Frame.LAB)
        blank.append(trajectory.records[0])
        self.assertRaises(DataValidationError, blank.append, trajectory.records[0])
