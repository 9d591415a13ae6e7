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
Sliding Droplet Scenarios

Command handlers for solve, spectrum, evolve, stability, sweep-mu and
validate. Each handler takes a resolved ScenarioConfig, writes its
artifacts into the output directory and returns a summary payload with
an exit status.
"""
import re
import logging
from typing import Callable, Dict, Tuple
import numpy as np
from droplet.common import error_handlers, output, status
from droplet.config import ScenarioConfig
from droplet.decomposition import evolve_decomposed, recenter, translation_identity_defect
from droplet.dynamics import EvolutionConfig, Frame, evolve, velocity_H
from droplet.elliptic import dirichlet_to_neumann, dtn_disk, lagrange_multiplier, solve_components, solve_full
from droplet.geometry import BoundaryShape, ReferenceCircle, circle, make_shape, random_coefficients
from droplet.linearization import (
    assemble_DG0_disk,
    assemble_DH0,
    assemble_DH0_perp,
    contact_slope_curve,
    critical_incline,
    fd_jacobian_G,
    fd_jacobian_H,
    spectral_threshold_incline,
    spectrum,
    variation_lambda,
    variation_volume_unit,
    variation_volume_x1,
)
from droplet.models import BracketInvalid, DataValidationError, ModelParams

logger = logging.getLogger(__name__)

Payload = Tuple[dict, int]
COMMANDS: Dict[str, Callable[[ScenarioConfig], Payload]] = {}

DEFAULT_PERTURBATION = "cos2=0.01,sin3=0.005"

_TERM = re.compile(r"^(cos|sin)(\d+)=([-+0-9.eE]+)$")


def command(name: str):
    """Registers the decorated function as the handler of a command"""

    def register(function):
        COMMANDS[name] = function
        return function

    return register


######################################################################
#  S H A P E   I N P U T
######################################################################
def parse_shape(text: str, reference: ReferenceCircle, tube_ratio: float) -> BoundaryShape:
    """Builds a shape from terms like 'cos2=0.01,sin3=0.005' (amplitudes of cos(n theta) and sin(n theta))"""
    coeffs = np.zeros(2 * reference.n_modes + 1, dtype=complex)
    for term in filter(None, (part.strip() for part in text.split(","))):
        match = _TERM.match(term.replace(" ", ""))
        if not match:
            raise DataValidationError(f"Invalid shape term {term!r}, expected cos<n>=<amplitude> or sin<n>=<amplitude>")
        kind, n, amplitude = match.group(1), int(match.group(2)), float(match.group(3))
        if n > reference.n_modes or (kind == "sin" and n == 0):
            raise DataValidationError(f"Invalid shape term {term!r}: mode outside 1..{reference.n_modes}")
        if n == 0:
            coeffs[reference.mode_index(0)] += amplitude
        elif kind == "cos":
            coeffs[reference.mode_index(n)] += amplitude / 2.0
            coeffs[reference.mode_index(-n)] += amplitude / 2.0
        else:
            coeffs[reference.mode_index(n)] += -0.5j * amplitude
            coeffs[reference.mode_index(-n)] += 0.5j * amplitude
    return make_shape(reference, coeffs, tube_ratio=tube_ratio)


def initial_shape(cfg: ScenarioConfig, params: ModelParams, default: str = "") -> BoundaryShape:
    """Shape from the shape file, the inline shape, or the default perturbation of the translating circle"""
    if cfg.shape_file:
        try:
            with open(cfg.shape_file, "r", encoding="utf-8") as stream:
                return BoundaryShape.loads(stream.read(), tube_ratio=cfg.tube_ratio)
        except OSError as error:
            raise DataValidationError(f"Cannot read shape file {cfg.shape_file!r}: {error}") from error
    reference = ReferenceCircle(params.R0, cfg.n_modes, cfg.grid_size)
    return parse_shape(cfg.shape if cfg.shape is not None else default, reference, cfg.tube_ratio)


def _settings(cfg: ScenarioConfig, frame: str) -> EvolutionConfig:
    return EvolutionConfig(
        dt=cfg.dt,
        t_end=cfg.t_end,
        frame=Frame(frame),
        record_every=cfg.record_every,
        halt_on_parabolicity_loss=cfg.halt_on_parabolicity_loss,
    )


######################################################################
# SOLVE
######################################################################
@command("solve")
def run_solve(cfg: ScenarioConfig) -> Payload:
    """Solves the volume-constrained problem on the configured shape"""
    params = cfg.model_params()
    logger.info("Request to solve: %s", params)
    shape = initial_shape(cfg, params)
    field = solve_full(shape, params)
    summary = field.serialize()
    summary.update(
        {
            "volume_residual": abs(field.volume - params.volume) / params.volume,
            "positive_regime": params.is_positive_regime,
            "params": params.serialize(),
        }
    )
    rows = [
        [theta, rho, derivative, -derivative]
        for theta, rho, derivative in zip(shape.reference.theta, shape.rho, field.boundary_normal_derivative)
    ]
    columns = ["theta", "rho", "normal_derivative", "contact_slope"]
    output.write_table(cfg.out_dir, "solve", columns, rows, cfg.serialize(), summary, cfg.format)
    return summary, status.EXIT_0_OK


######################################################################
# SPECTRUM
######################################################################
@command("spectrum")
def run_spectrum(cfg: ScenarioConfig) -> Payload:
    """Eigenvalues of DH(0) and of its kernel-orthogonal restriction"""
    params = cfg.model_params()
    logger.info("Request for the spectrum: N=%d mu=%g", cfg.n_modes, params.mu)
    matrix = assemble_DH0(cfg.n_modes, params)
    full = spectrum(matrix, cfg.kernel_tol)
    perp = spectrum(assemble_DH0_perp(cfg.n_modes, params), cfg.kernel_tol)
    summary = {"DH0": full.serialize(), "DH0_perp": perp.serialize(), "omega": params.omega}
    output.write_table(cfg.out_dir, "spectrum", ["re", "im"], full.rows(), cfg.serialize(), summary, cfg.format)
    output.write_table(cfg.out_dir, "spectrum_perp", ["re", "im"], perp.rows(), cfg.serialize(), perp.serialize(), cfg.format)
    output.write_text(output.ensure_dir(cfg.out_dir) / "DH0_matrix.txt", matrix.dump(), cfg.serialize())
    return summary, status.EXIT_0_OK


######################################################################
# EVOLVE
######################################################################
@command("evolve")
def run_evolve(cfg: ScenarioConfig) -> Payload:
    """Evolves the configured shape in the lab or co-moving frame"""
    params = cfg.model_params()
    shape = initial_shape(cfg, params, DEFAULT_PERTURBATION)
    trajectory = evolve(shape, params, settings=_settings(cfg, cfg.frame))
    _write_trajectory(cfg, "trajectory", trajectory)
    if trajectory.halt_error is not None:
        raise trajectory.halt_error
    return trajectory.summary(), status.EXIT_0_OK


def _write_trajectory(cfg: ScenarioConfig, name: str, trajectory) -> None:
    output.write_table(
        cfg.out_dir, name, trajectory.columns(), trajectory.rows(), cfg.serialize(), trajectory.summary(), cfg.format
    )


######################################################################
# STABILITY
######################################################################
@command("stability")
def run_stability(cfg: ScenarioConfig) -> Payload:
    """Evolves the decomposed system and compares the fitted decay with the spectral gap"""
    params = cfg.model_params()
    state = recenter(initial_shape(cfg, params, DEFAULT_PERTURBATION))
    logger.info("Request for stability run from %s", state)
    trajectory = evolve_decomposed(state, params, _settings(cfg, "comoving"), tail_fraction=cfg.tail_fraction)
    gap = spectrum(assemble_DH0_perp(state.rho_bar.n_modes, params), cfg.kernel_tol).gap
    fitted = trajectory.summary_extra.get("omega0_fit")
    trajectory.summary_extra.update(
        {
            "spectral_gap": gap,
            "rate_relative_error": abs(fitted - gap) / gap if fitted is not None else None,
            "initial_z": [float(state.z[0]), float(state.z[1])],
        }
    )
    _write_trajectory(cfg, "stability", trajectory)
    if trajectory.halt_error is not None:
        raise trajectory.halt_error
    return trajectory.summary(), status.EXIT_0_OK


######################################################################
# SWEEP MU
######################################################################
@command("sweep-mu")
def run_sweep_mu(cfg: ScenarioConfig) -> Payload:
    """Tabulates the contact slope minimum and the leading eigenvalue against the incline"""
    params = cfg.model_params()
    shape = initial_shape(cfg, params)
    slope = contact_slope_curve(shape, params)
    rows = []
    for mu in np.linspace(0.0, cfg.mu_max, cfg.mu_samples):
        leading = spectrum(assemble_DH0(cfg.n_modes, params.with_mu(mu)), cfg.kernel_tol).leading_nonzero
        rows.append([float(mu), slope(mu), leading.real])
    summary = {"positivity_bound": params.positivity_bound}
    try:
        summary["mu_star"] = critical_incline(shape, params, bracket=(0.0, cfg.mu_max))
    except BracketInvalid as error:
        logger.warning("No critical incline below mu_max: %s", error)
        summary["mu_star"] = None
    summary["mu_spectral"] = spectral_threshold_incline(
        cfg.n_modes, params, bracket=(0.0, cfg.mu_max), kernel_tol=cfg.kernel_tol
    )
    output.write_table(
        cfg.out_dir, "sweep_mu", ["mu", "min_contact_slope", "leading_real"], rows, cfg.serialize(), summary, cfg.format
    )
    return summary, status.EXIT_0_OK


######################################################################
# VALIDATE
######################################################################
def _check(name: str, value: float, tolerance: float) -> dict:
    passed = bool(np.isfinite(value) and value <= tolerance)
    logger.info("Check %-22s %.3e <= %.1e : %s", name, value, tolerance, "PASS" if passed else "FAIL")
    return {"check": name, "value": float(value), "tolerance": tolerance, "passed": passed}


def check_closed_form(params: ModelParams, n_modes: int) -> list:
    """Disk solution against the closed form profile on a 64 x 64 polar grid"""
    radius = params.R0
    field = solve_full(circle(ReferenceCircle(radius, n_modes)), params)
    r, theta = np.meshgrid(np.linspace(0.0, radius, 64), np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False))
    exact = params.mu * r * (radius**2 - r**2) * np.cos(theta) / 8.0 + params.lambda0 * (radius**2 - r**2) / 4.0
    return [
        _check("disk_profile", np.max(np.abs(field.value(r, theta) - exact)), 1e-10),
        _check("disk_lambda", abs(field.lam - params.lambda0), 1e-12),
    ]


def check_dtn(params: ModelParams, n_modes: int) -> list:
    """Solve-based Dirichlet-to-Neumann map against the |n|/R0 multiplier"""
    shape = circle(ReferenceCircle(params.R0, n_modes))
    error = 0.0
    for n in range(n_modes - 1):
        h = np.zeros(2 * n_modes + 1, dtype=complex)
        h[n_modes + n] += 0.5
        h[n_modes - n] += 0.5
        error = max(error, float(np.max(np.abs(dirichlet_to_neumann(shape, h) - dtn_disk(h, params.R0)))))
    return [_check("dtn_multiplier", error, 1e-8)]


def check_stationarity(params: ModelParams, n_modes: int) -> list:
    """The translating circle is a fixed point of the co-moving velocity"""
    shape = circle(ReferenceCircle(params.R0, n_modes))
    value = max(float(np.max(np.abs(velocity_H(shape, params.with_mu(mu))))) for mu in (0.0, 0.05, 0.1))
    return [_check("stationary_circle", value, 1e-10)]


def check_linearization(params: ModelParams) -> list:
    """Finite difference Jacobian of H against A + mu B at N = 8"""
    value = 0.0
    for mu in (0.0, 0.05, 0.1):
        analytic = assemble_DH0(8, params.with_mu(mu)).entries
        numeric = fd_jacobian_H(params.with_mu(mu), 8, 1e-5).entries
        value = max(value, float(np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)))
    return [_check("fd_linearization", value, 1e-4)]


def check_lab_linearization(params: ModelParams) -> list:
    """Finite difference Jacobian of G at the disk against the analytic lab frame linearization"""
    analytic = assemble_DG0_disk(8, params).entries
    numeric = fd_jacobian_G(circle(ReferenceCircle(params.R0, 8)), params).entries
    return [_check("fd_lab_linearization", float(np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)), 1e-4)]


def check_kernel_gap(params: ModelParams, n_modes: int, kernel_tol: float) -> list:
    """Two kernel eigenvalues, the rest at least 0.8 omega left of the axis"""
    result = spectrum(assemble_DH0(n_modes, params.with_mu(0.05)), kernel_tol)
    return [
        _check("kernel_count", abs(result.kernel_count - 2), 0),
        _check("spectral_gap", result.leading_nonzero.real + 0.8 * params.omega, 0.0),
    ]


def check_hadamard(params: ModelParams, n_modes: int, seed: int, eps: float = 1e-4) -> list:
    """Closed-form domain variations against central differences in 5 seeded directions"""
    reference = ReferenceCircle(params.R0, n_modes)
    rng = np.random.default_rng(seed)
    error = 0.0
    for _ in range(5):
        h = random_coefficients(n_modes, rng, amplitude=1.0, max_mode=4)
        plus, minus = make_shape(reference, eps * h), make_shape(reference, -eps * h)
        unit_plus, x1_plus = solve_components(plus)
        unit_minus, x1_minus = solve_components(minus)
        pairs = (
            ((unit_plus.volume - unit_minus.volume) / (2 * eps), variation_volume_unit(h, params)),
            ((x1_plus.volume - x1_minus.volume) / (2 * eps), variation_volume_x1(h, params)),
            (
                (
                    lagrange_multiplier(plus, params, (unit_plus, x1_plus))
                    - lagrange_multiplier(minus, params, (unit_minus, x1_minus))
                )
                / (2 * eps),
                variation_lambda(h, params),
            ),
        )
        error = max(error, max(abs(numeric - exact) for numeric, exact in pairs))
    return [_check("hadamard_variations", error, 1e-5)]


def check_critical_incline(params: ModelParams, n_modes: int) -> list:
    """Bisected critical incline on the disk against 16 V/(pi R0^5)"""
    shape = circle(ReferenceCircle(params.R0, n_modes))
    mu_star = critical_incline(shape, params, bracket=(0.0, 2.0 * params.positivity_bound))
    return [_check("critical_incline", abs(mu_star - params.positivity_bound), 1e-6)]


def check_translation_identity(params: ModelParams, n_modes: int) -> list:
    """Normal velocities of a curve and of its recentred copy agree at corresponding points"""
    reference = ReferenceCircle(params.R0, n_modes)
    shape = parse_shape("cos1=0.01,cos2=0.02", reference, 0.5)
    return [_check("translation_identity", translation_identity_defect(shape, params), 1e-8)]


@command("validate")
def run_validate(cfg: ScenarioConfig) -> Payload:
    """Runs the analytic-versus-numerical checks and reports pass/fail per check"""
    params = cfg.model_params()
    logger.info("Request to validate with %s", params)
    checks = []
    checks += check_closed_form(params, cfg.n_modes)
    checks += check_dtn(params, cfg.n_modes)
    checks += check_stationarity(params, cfg.n_modes)
    checks += check_linearization(params)
    checks += check_lab_linearization(params)
    checks += check_kernel_gap(params, cfg.n_modes, cfg.kernel_tol)
    checks += check_hadamard(params, cfg.n_modes, cfg.seed)
    checks += check_critical_incline(params, cfg.n_modes)
    checks += check_translation_identity(params, cfg.n_modes)
    passed = all(check["passed"] for check in checks)
    rows = [[check["check"], check["value"], check["tolerance"], check["passed"]] for check in checks]
    summary = {"passed": passed, "checks": len(checks), "failed": [check["check"] for check in checks if not check["passed"]]}
    columns = ["check", "value", "tolerance", "passed"]
    output.write_table(cfg.out_dir, "validate", columns, rows, cfg.serialize(), summary, cfg.format)
    return summary, status.EXIT_0_OK if passed else status.EXIT_2_NUMERICAL_FAILURE


######################################################################
#  D I S P A T C H
######################################################################
def run(cfg: ScenarioConfig) -> int:
    """Runs one command and returns the process exit status

    :param cfg: the resolved configuration
    :type cfg: ScenarioConfig

    :return: 0 on success, 1 on configuration errors, 2 on numerical failures
    :rtype: int

    """
    handler = COMMANDS[cfg.command]
    logger.info("Running command %s", cfg.command)
    try:
        payload, code = handler(cfg)
    except Exception as error:  # pylint: disable=broad-except
        _, code = error_handlers.handle_error(error, cfg.out_dir)
        return code
    print(output.dumps(payload))
    return code
