"""
Translation / perturbation splitting

A curve close to the reference circle is written as a rigid translation z
of a curve rho_bar whose Fourier modes +/-1 vanish. The pair (z, rho_bar)
then obeys

    dz/dt       = M(rho_bar)^-1 Pi H(rho_bar)
    drho_bar/dt = Pi_perp H(rho_bar) + Pi_perp(g (-sin(phi) z1' + cos(phi) z2'))

with g = rho_bar'/(R_ref + rho_bar) and Pi the projection onto the
modes (+1, -1).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union
import numpy as np
from droplet import config
from droplet.dynamics import (
    HALTING_ERRORS,
    EvolutionConfig,
    Frame,
    Trajectory,
    TrajectoryRecord,
    check_stiffness,
    normal_velocity,
    velocity_H,
)
from droplet.elliptic import FieldSolution, min_contact_slope, solve_full
from droplet.geometry import (
    BoundaryShape,
    differentiate,
    evaluate,
    from_grid,
    make_shape,
    n_modes_of,
    to_grid,
)
from droplet.models import (
    DataValidationError,
    ModelParams,
    ParabolicityLost,
    RecenterDiverged,
    SingularM,
    StarShapeViolation,
    TubularViolation,
)

logger = logging.getLogger(__name__)

RECENTER_TOLERANCE = 1e-12
RECENTER_MAX_ITERATIONS = 25
IMAGINARY_TOLERANCE = 1e-10


######################################################################
#  P R O J E C T I O N S
######################################################################
def _coefficients(h: Union[BoundaryShape, Sequence[complex]]) -> np.ndarray:
    return np.asarray(h.rho_hat if isinstance(h, BoundaryShape) else h, dtype=complex)


def project_pm1(h: Union[BoundaryShape, Sequence[complex]]) -> Tuple[complex, complex]:
    """Returns the coefficients (Pi_+1 h, Pi_-1 h) of the modes +1 and -1"""
    coeffs = _coefficients(h)
    n_modes = n_modes_of(coeffs)
    return complex(coeffs[n_modes + 1]), complex(coeffs[n_modes - 1])


def project_perp(h: Union[BoundaryShape, Sequence[complex]]):
    """Zeroes the modes +/-1; returns the same kind (shape or coefficients) it was given"""
    coeffs = np.array(_coefficients(h))
    n_modes = n_modes_of(coeffs)
    coeffs[n_modes + 1] = coeffs[n_modes - 1] = 0.0
    if isinstance(h, BoundaryShape):
        return h.with_coefficients(coeffs)
    return coeffs


######################################################################
#  D E C O M P O S E D   S T A T E
######################################################################
@dataclass(frozen=True, eq=False)
class DecomposedState:
    """A translation z and a kernel-orthogonal curve rho_bar"""

    z: np.ndarray
    rho_bar: BoundaryShape

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        if z.shape != (2,):
            raise DataValidationError(f"Translation must be a 2-vector, got shape {z.shape}")
        plus, minus = project_pm1(self.rho_bar)
        if max(abs(plus), abs(minus)) > RECENTER_TOLERANCE:
            raise DataValidationError(f"rho_bar carries kernel modes of size {max(abs(plus), abs(minus)):.3e}")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    def __repr__(self):
        return f"<DecomposedState z=({self.z[0]:.6g}, {self.z[1]:.6g}) |rho_bar|={self.rho_bar.sup_norm:.3e}>"

    def serialize(self) -> dict:
        """Translation and perturbation size"""
        return {"z": [float(self.z[0]), float(self.z[1])], "norm_rho_bar": self.rho_bar.sup_norm}


######################################################################
#  C U R V E   T R A N S L A T I O N
######################################################################
def correspondence(shape: BoundaryShape, shift: Sequence[float], theta: Optional[np.ndarray] = None) -> np.ndarray:
    """Angles phi with arg(X(phi) + shift) = theta, X(phi) the boundary point at angle phi

    Solved by a vectorized Newton iteration started at phi = theta.
    """
    angles = shape.reference.theta if theta is None else np.asarray(theta, dtype=float)
    shift = np.asarray(shift, dtype=float)
    slope_coeffs = differentiate(shape.rho_hat)
    phi = angles.copy()
    for _ in range(50):
        radius = shape.radius_at(phi)
        slope = evaluate(slope_coeffs, phi)
        px, py = radius * np.cos(phi) + shift[0], radius * np.sin(phi) + shift[1]
        dx = slope * np.cos(phi) - radius * np.sin(phi)
        dy = slope * np.sin(phi) + radius * np.cos(phi)
        turning = (px * dy - py * dx) / (px**2 + py**2)
        if np.any(turning <= 0):
            raise StarShapeViolation("Translated curve is not a radial graph over the reference centre")
        mismatch = np.angle(np.exp(1j * (np.arctan2(py, px) - angles)))
        phi = phi - mismatch / turning
        if np.max(np.abs(mismatch)) < 1e-15:
            break
    else:
        if np.max(np.abs(mismatch)) > 1e-12:
            raise RecenterDiverged(f"Angle correspondence stalled at {np.max(np.abs(mismatch)):.3e}")
    return phi


def shifted_graph(shape: BoundaryShape, shift: Sequence[float]) -> BoundaryShape:
    """The curve shape + shift as a radial graph over the same reference circle"""
    theta = shape.reference.theta
    phi = correspondence(shape, shift, theta)
    radius = shape.radius_at(phi)
    px = radius * np.cos(phi) + shift[0]
    py = radius * np.sin(phi) + shift[1]
    values = np.hypot(px, py) - shape.reference.radius
    return make_shape(shape.reference, from_grid(values, shape.n_modes), tube_ratio=shape.tube_ratio)


def compose(state: DecomposedState) -> BoundaryShape:
    """Rebuilds the curve z + Gamma(rho_bar) as a radial graph"""
    return shifted_graph(state.rho_bar, state.z)


def recenter(shape: BoundaryShape) -> DecomposedState:
    """Splits a curve into a translation z and a curve without modes +/-1

    :param shape: a curve well inside the tubular chart
    :type shape: BoundaryShape

    :return: (z, rho_bar) with shape = z + rho_bar
    :rtype: DecomposedState

    """
    plus, _ = project_pm1(shape)
    z = np.array([2.0 * plus.real, -2.0 * plus.imag])

    def residual(guess: np.ndarray) -> Tuple[np.ndarray, BoundaryShape]:
        moved = shifted_graph(shape, -guess)
        mode, _ = project_pm1(moved)
        return np.array([mode.real, mode.imag]), moved

    try:
        current, moved = residual(z)
        for iteration in range(RECENTER_MAX_ITERATIONS):
            if np.max(np.abs(current)) <= RECENTER_TOLERANCE:
                logger.debug("Recentered in %d Newton iterations: z=%s", iteration, z)
                break
            step = 1e-7
            jacobian = np.column_stack(
                [(residual(z + step * axis)[0] - residual(z - step * axis)[0]) / (2.0 * step) for axis in np.eye(2)]
            )
            z = z - np.linalg.solve(jacobian, current)
            current, moved = residual(z)
        else:
            if np.max(np.abs(current)) > RECENTER_TOLERANCE:
                raise RecenterDiverged(
                    f"Kernel modes still {np.max(np.abs(current)):.3e} after {RECENTER_MAX_ITERATIONS} iterations"
                )
    except (StarShapeViolation, TubularViolation, np.linalg.LinAlgError) as error:
        raise RecenterDiverged(f"Cannot recenter the curve: {error}") from error
    return DecomposedState(z=z, rho_bar=project_perp(moved))


######################################################################
#  D E C O M P O S E D   S Y S T E M
######################################################################
def _tangential_weight(rho_bar: BoundaryShape) -> np.ndarray:
    """g = rho_bar'/(R_ref + rho_bar) on the grid"""
    slope = to_grid(differentiate(rho_bar.rho_hat), rho_bar.reference.n_grid)
    return slope / rho_bar.radius_grid


def assemble_M(rho_bar: BoundaryShape) -> np.ndarray:  # pylint: disable=invalid-name
    """2x2 coupling matrix of the kernel constraints, trapezoid quadrature on the grid"""
    phi = rho_bar.reference.theta
    g = _tangential_weight(rho_bar)

    def integral(values: np.ndarray) -> complex:
        return complex(2.0 * np.pi * np.mean(values))

    twice = np.exp(2j * phi)
    matrix = np.array(
        [
            [
                0.5 + integral(g * (1.0 - np.conj(twice))) / (4j * np.pi),
                1.0 / 2j - integral(g * (np.conj(twice) + 1.0)) / (4.0 * np.pi),
            ],
            [
                0.5 + integral(g * (twice - 1.0)) / (4j * np.pi),
                -1.0 / 2j - integral(g * (twice + 1.0)) / (4.0 * np.pi),
            ],
        ],
        dtype=complex,
    )
    condition = np.linalg.cond(matrix)
    if not condition <= config.M_CONDITION_LIMIT:
        raise SingularM(f"Coupling matrix condition number {condition:.3e} exceeds {config.M_CONDITION_LIMIT:.1e}")
    return matrix


def _z_velocity_from(rho_bar: BoundaryShape, rate_coeffs: np.ndarray) -> np.ndarray:
    plus, minus = project_pm1(rate_coeffs)
    solution = np.linalg.solve(assemble_M(rho_bar), np.array([plus, minus]))
    if np.max(np.abs(solution.imag)) > IMAGINARY_TOLERANCE * max(1.0, float(np.max(np.abs(solution)))):
        logger.warning("Translation velocity has imaginary residual %.3e", np.max(np.abs(solution.imag)))
    return solution.real


def _correction(rho_bar: BoundaryShape, z_dot: np.ndarray) -> np.ndarray:
    phi = rho_bar.reference.theta
    grid = _tangential_weight(rho_bar) * (-np.sin(phi) * z_dot[0] + np.cos(phi) * z_dot[1])
    return project_perp(from_grid(grid, rho_bar.n_modes))


def decomposed_rates(
    rho_bar: BoundaryShape, params: ModelParams, field_solution: Optional[FieldSolution] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (dz/dt, Fourier coefficients of drho_bar/dt) from a single evaluation of H"""
    rate = from_grid(velocity_H(rho_bar, params, field_solution=field_solution), rho_bar.n_modes)
    z_dot = _z_velocity_from(rho_bar, rate)
    return z_dot, project_perp(rate) + _correction(rho_bar, z_dot)


def z_velocity(rho_bar: BoundaryShape, params: ModelParams) -> np.ndarray:
    """dz/dt = M(rho_bar)^-1 Pi H(rho_bar), a real 2-vector"""
    z_dot, _ = decomposed_rates(rho_bar, params)
    return z_dot


def rhobar_velocity(rho_bar: BoundaryShape, params: ModelParams) -> np.ndarray:
    """Grid values of drho_bar/dt = Pi_perp H(rho_bar) + f(rho_bar)"""
    _, rate = decomposed_rates(rho_bar, params)
    return to_grid(rate, rho_bar.reference.n_grid)


def nonlinear_remainder(rho_bar: BoundaryShape, params: ModelParams) -> np.ndarray:
    """Grid values of f(rho_bar) = Pi_perp(g (-sin(phi) z1' + cos(phi) z2'))"""
    return to_grid(_correction(rho_bar, z_velocity(rho_bar, params)), rho_bar.reference.n_grid)


def translation_identity_defect(shape: BoundaryShape, params: ModelParams) -> float:
    """max difference of the co-moving normal velocities of Gamma(rho) and of Gamma(rho_bar) at corresponding points"""
    state = recenter(shape)
    direct = normal_velocity(shape, params, frame=Frame.COMOVING)
    centred = normal_velocity(state.rho_bar, params, frame=Frame.COMOVING)
    phi = correspondence(state.rho_bar, state.z)
    transported = evaluate(from_grid(centred, state.rho_bar.n_modes), phi)
    return float(np.max(np.abs(direct - transported)))


######################################################################
#  E V O L U T I O N
######################################################################
def _record(t: float, state: DecomposedState, solution: FieldSolution, params: ModelParams) -> TrajectoryRecord:
    shape = state.rho_bar
    offset = shape.n_modes
    return TrajectoryRecord(
        t=float(t),
        rho_hat=np.array(shape.rho_hat),
        # lambda of the translated domain z + Gamma(rho_bar)
        lam=float(solution.lam - params.mu * state.z[0]),
        min_contact_slope=min_contact_slope(solution),
        volume_residual=abs(solution.volume - params.volume) / params.volume,
        sup_rho=shape.sup_norm,
        mode_magnitudes=np.abs(shape.rho_hat[offset:]),
        z=np.array(state.z),
        norm_rho_bar=shape.sup_norm,
    )


def evolve_decomposed(
    initial: DecomposedState, params: ModelParams, settings: Optional[EvolutionConfig] = None, tail_fraction: float = 0.5
) -> Trajectory:
    """Integrates (z, rho_bar) with RK4 in the co-moving frame and fits the decay of rho_bar

    The summary of the returned trajectory carries omega0_fit, C_fit and z_inf.
    """
    settings = settings or EvolutionConfig()
    reference = initial.rho_bar.reference
    trajectory = Trajectory(reference=reference, frame=Frame.COMOVING)
    check_stiffness(settings.dt, params, reference.n_modes)
    logger.info("Evolving the decomposed system: dt=%g t_end=%g mu=%g", settings.dt, settings.t_end, params.mu)

    def rate(coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        shape = initial.rho_bar.with_coefficients(coeffs)
        return decomposed_rates(shape, params)

    state, t, drift = initial, 0.0, 0.0
    n_steps = settings.n_steps
    try:
        for index in range(n_steps + 1):
            t = index * settings.dt
            solution = solve_full(state.rho_bar, params)
            slope = min_contact_slope(solution)
            if index % settings.record_every == 0 or index == n_steps or slope <= 0:
                trajectory.append(_record(t, state, solution, params))
            if slope <= 0 and settings.halt_on_parabolicity_loss:
                raise ParabolicityLost(f"min(-d_nu u) = {slope:.6g} <= 0 at t = {t:.6g}")
            if index == n_steps:
                break
            z, coeffs, dt = state.z, state.rho_bar.rho_hat, settings.dt
            k1 = decomposed_rates(state.rho_bar, params, field_solution=solution)
            k2 = rate(coeffs + 0.5 * dt * k1[1])
            k3 = rate(coeffs + 0.5 * dt * k2[1])
            k4 = rate(coeffs + dt * k3[1])
            z_new = z + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            coeffs_new = coeffs + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            drift = max(drift, *(abs(value) for value in project_pm1(coeffs_new)))
            state = DecomposedState(z=z_new, rho_bar=project_perp(state.rho_bar.with_coefficients(coeffs_new)))
    except HALTING_ERRORS + (SingularM,) as error:
        trajectory.halt_reason = f"{type(error).__name__}: {error}"
        trajectory.halt_error = error
        logger.warning("Decomposed evolution halted at t=%.6g: %s", t, trajectory.halt_reason)
    trajectory.summary_extra["kernel_drift"] = drift
    trajectory.summary_extra.update(fit_decay(trajectory, tail_fraction).serialize())
    return trajectory


######################################################################
#  D E C A Y   F I T
######################################################################
@dataclass(frozen=True)
class DecayFit:
    """Exponential fit |rho_bar(t)| ~ C exp(-omega0 t) and the limit translation"""

    omega0: Optional[float]
    C: Optional[float]  # pylint: disable=invalid-name
    z_inf: Tuple[float, float]
    z_cauchy: Optional[float] = None
    samples: int = 0

    def serialize(self) -> dict:
        """Summary fields omega0_fit, C_fit, z_inf and z_cauchy_fit"""
        return {
            "omega0_fit": self.omega0,
            "C_fit": self.C,
            "z_inf": list(self.z_inf),
            "z_cauchy_fit": self.z_cauchy,
            "fit_samples": self.samples,
        }


def fit_decay(trajectory: Trajectory, tail_fraction: float = 0.5) -> DecayFit:
    """Least-squares fit of log sup|rho_bar| over the tail of a run, with z_inf extrapolated from the exponential tail"""
    if not 0 < tail_fraction <= 1:
        raise DataValidationError(f"Invalid tail_fraction: {tail_fraction}")
    times = trajectory.times
    norms = trajectory.sup_norms
    z = trajectory.translations if trajectory.has_translation else np.zeros((len(times), 2))
    z_final = (float(z[-1][0]), float(z[-1][1])) if len(times) else (0.0, 0.0)
    count = max(2, int(np.ceil(tail_fraction * len(times))))
    tail = slice(len(times) - count, len(times))
    usable = norms[tail] > 0
    if len(times) < 2 or np.count_nonzero(usable) < 2:
        return DecayFit(omega0=None, C=None, z_inf=z_final, samples=int(np.count_nonzero(usable)))
    slope, intercept = np.polyfit(times[tail][usable], np.log(norms[tail][usable]), 1)
    omega0 = float(-slope)
    z_inf = np.array(z_final)
    cauchy = None
    if omega0 > 0:
        spacing = times[-1] - times[-2]
        decay = np.exp(-omega0 * spacing)
        z_inf = z[-1] + (z[-1] - z[-2]) * decay / (1.0 - decay)
        cauchy = float(np.max(np.linalg.norm(z - z_inf, axis=1) * np.exp(omega0 * times)))
    logger.info("Decay fit: omega0=%.6g C=%.3e z_inf=(%.6g, %.6g)", omega0, np.exp(intercept), z_inf[0], z_inf[1])
    return DecayFit(
        omega0=omega0,
        C=float(np.exp(intercept)),
        z_inf=(float(z_inf[0]), float(z_inf[1])),
        z_cauchy=cauchy,
        samples=int(np.count_nonzero(usable)),
    )
