"""
Contact line dynamics

Velocity functionals of the radial graph rho:

    lab frame       G(rho) = F(-d_nu u) / (nu_0 . nu_rho)
    co-moving frame H(rho) = [F(-d_nu u) - v0 e1 . nu_rho] / (nu_0 . nu_rho)

and a classical four stage Runge-Kutta integrator on the Fourier
coefficients of rho with per-record diagnostics.
"""
import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple
import numpy as np
from droplet import config
from droplet.common import output
from droplet.elliptic import FieldSolution, min_contact_slope, solve_full
from droplet.geometry import BoundaryShape, ReferenceCircle, from_grid, make_shape, mode_numbers
from droplet.models import (
    ContactLineLaw,
    DataValidationError,
    DegenerateVolume,
    IllConditioned,
    ModelParams,
    NonAffineLaw,
    ParabolicityLost,
    ParabolicityWarning,
    StarShapeViolation,
    StiffnessWarning,
    TubularViolation,
)

logger = logging.getLogger(__name__)

STIFFNESS_LIMIT = 1.5

# failures that end an evolution with a partial trajectory
HALTING_ERRORS = (StarShapeViolation, TubularViolation, ParabolicityLost, IllConditioned, DegenerateVolume)


class Frame(Enum):
    """Frame of reference of an evolution"""

    LAB = "lab"
    COMOVING = "comoving"


@dataclass(frozen=True)
class EvolutionConfig:
    """Time stepping settings"""

    dt: float = field(default_factory=lambda: config.DT)
    t_end: float = field(default_factory=lambda: config.T_END)
    frame: Frame = Frame.COMOVING
    record_every: int = 10
    halt_on_parabolicity_loss: bool = True
    dealias: bool = False

    def __post_init__(self):
        if isinstance(self.frame, str):
            try:
                object.__setattr__(self, "frame", Frame(self.frame))
            except ValueError as error:
                raise DataValidationError(f"Invalid frame: {self.frame!r}") from error
        if not self.dt > 0:
            raise DataValidationError(f"Invalid dt: must be positive, got {self.dt}")
        if self.t_end < 0:
            raise DataValidationError(f"Invalid t_end: must be nonnegative, got {self.t_end}")
        if self.record_every < 1:
            raise DataValidationError(f"Invalid record_every: must be at least 1, got {self.record_every}")

    @property
    def n_steps(self) -> int:
        """Number of steps needed to reach t_end"""
        return int(round(self.t_end / self.dt))


######################################################################
#  T R A J E C T O R Y
######################################################################
@dataclass(frozen=True, eq=False)
class TrajectoryRecord:  # pylint: disable=too-many-instance-attributes
    """One recorded state of an evolution"""

    t: float
    rho_hat: np.ndarray
    lam: float
    min_contact_slope: float
    volume_residual: float
    sup_rho: float
    mode_magnitudes: np.ndarray
    z: Optional[np.ndarray] = None
    norm_rho_bar: Optional[float] = None


@dataclass(eq=False)
class Trajectory:
    """
    Class that represents a recorded time series of shapes

    halt_reason is None when the run reached t_end.
    """

    reference: ReferenceCircle
    frame: Frame
    records: List[TrajectoryRecord] = field(default_factory=list)
    halt_reason: Optional[str] = None
    summary_extra: dict = field(default_factory=dict)
    halt_error: Optional[Exception] = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    def __repr__(self):
        return f"<Trajectory frame={self.frame.value} records={len(self.records)} halt={self.halt_reason}>"

    def append(self, record: TrajectoryRecord) -> None:
        """Adds a record, keeping the timestamps strictly increasing"""
        if self.records and not record.t > self.records[-1].t:
            raise DataValidationError(f"Record time {record.t} does not follow {self.records[-1].t}")
        self.records.append(record)

    @property
    def times(self) -> np.ndarray:
        """Recorded times"""
        return np.array([record.t for record in self.records])

    @property
    def sup_norms(self) -> np.ndarray:
        """sup|rho| per record"""
        return np.array([record.sup_rho for record in self.records])

    @property
    def translations(self) -> np.ndarray:
        """z per record, shape (records, 2); only for decomposed runs"""
        return np.array([record.z for record in self.records])

    @property
    def has_translation(self) -> bool:
        """True when records carry a z channel"""
        return bool(self.records) and self.records[0].z is not None

    def shape_at(self, index: int) -> BoundaryShape:
        """Rebuilds the recorded curve at a record index"""
        return make_shape(self.reference, self.records[index].rho_hat)

    @property
    def final_shape(self) -> BoundaryShape:
        """The last recorded curve"""
        return self.shape_at(-1)

    def columns(self) -> List[str]:
        """CSV header"""
        names = ["t", "lambda", "min_contact_slope", "volume_residual", "sup_rho"]
        if self.has_translation:
            names += ["z1", "z2", "norm_rho_bar"]
        for n in range(self.reference.n_modes + 1):
            names += [f"re_rho_{n}", f"im_rho_{n}"]
        return names

    def rows(self) -> List[list]:
        """CSV rows, one per record"""
        table = []
        offset = self.reference.n_modes
        for record in self.records:
            row = [record.t, record.lam, record.min_contact_slope, record.volume_residual, record.sup_rho]
            if self.has_translation:
                row += [float(record.z[0]), float(record.z[1]), record.norm_rho_bar]
            for n in range(self.reference.n_modes + 1):
                value = record.rho_hat[offset + n]
                row += [float(value.real), float(value.imag)]
            table.append(row)
        return table

    def summary(self) -> dict:
        """Summary record written after the table"""
        result = {
            "frame": self.frame.value,
            "halt_reason": self.halt_reason,
            "records": len(self.records),
            "t_final": float(self.records[-1].t) if self.records else 0.0,
            "sup_rho_final": float(self.records[-1].sup_rho) if self.records else None,
        }
        result.update(self.summary_extra)
        return result

    def to_csv(self, path, config_lines=()) -> None:
        """Exports the trajectory with a trailing JSON summary record"""
        output.write_csv(path, self.columns(), self.rows(), config_lines=config_lines, summary=self.summary())


######################################################################
#  V E L O C I T I E S
######################################################################
def _affine_law(params: ModelParams, law: Optional[ContactLineLaw]) -> ContactLineLaw:
    if law is None:
        return ContactLineLaw.from_params(params)
    if not law.is_affine:
        raise NonAffineLaw(f"The co-moving frame requires the affine law, got {law.name}")
    return law


def _check_parabolicity(field_solution: FieldSolution) -> float:
    slope = min_contact_slope(field_solution)
    if slope <= 0:
        message = f"Contact slope -d_nu u reaches {slope:.6g} <= 0; the evolution is ill-posed"
        logger.warning(message)
        warnings.warn(message, ParabolicityWarning, stacklevel=3)
    return slope


def normal_velocity(
    shape: BoundaryShape,
    params: ModelParams,
    law: Optional[ContactLineLaw] = None,
    frame: Frame = Frame.COMOVING,
    field_solution: Optional[FieldSolution] = None,
) -> np.ndarray:
    """Normal speed of the contact line on the grid, F(-d_nu u) minus the drift v0 e1.nu in the co-moving frame"""
    frame = Frame(frame)
    law = _affine_law(params, law) if frame is Frame.COMOVING else (law or ContactLineLaw.from_params(params))
    solution = field_solution if field_solution is not None else solve_full(shape, params)
    slope = solution.contact_slope
    law.check_monotone(slope)
    speed = law(slope)
    if frame is Frame.COMOVING:
        speed = speed - params.v0 * solution.boundary_frame.normal[:, 0]
    return speed


def velocity_G(
    shape: BoundaryShape, params: ModelParams, law: ContactLineLaw, field_solution: Optional[FieldSolution] = None
) -> np.ndarray:
    """Lab frame velocity (nu_0 . nu_rho)^-1 F(-d_nu u) on the grid"""
    solution = field_solution if field_solution is not None else solve_full(shape, params)
    _check_parabolicity(solution)
    speed = normal_velocity(shape, params, law, Frame.LAB, field_solution=solution)
    return speed / solution.boundary_frame.normal_factor


def velocity_H(
    shape: BoundaryShape,
    params: ModelParams,
    law: Optional[ContactLineLaw] = None,
    field_solution: Optional[FieldSolution] = None,
) -> np.ndarray:
    """Co-moving frame velocity (nu_0 . nu_rho)^-1 [F(-d_nu u) - v0 e1 . nu_rho] on the grid"""
    law = _affine_law(params, law)
    solution = field_solution if field_solution is not None else solve_full(shape, params)
    _check_parabolicity(solution)
    speed = normal_velocity(shape, params, law, Frame.COMOVING, field_solution=solution)
    return speed / solution.boundary_frame.normal_factor


def velocity(
    shape: BoundaryShape, params: ModelParams, law: Optional[ContactLineLaw], frame: Frame
) -> Tuple[np.ndarray, FieldSolution]:
    """Grid velocity in the given frame together with the field it was computed from"""
    solution = solve_full(shape, params)
    if Frame(frame) is Frame.LAB:
        return velocity_G(shape, params, law or ContactLineLaw.from_params(params), field_solution=solution), solution
    return velocity_H(shape, params, law, field_solution=solution), solution


######################################################################
#  T I M E   S T E P P I N G
######################################################################
def stiffness_factor(dt: float, params: ModelParams, n_modes: int) -> float:
    """RK4 amplification |1 + z + z^2/2 + z^3/6 + z^4/24| at z = -dt 4 omega (N - 1)"""
    z = -dt * 4.0 * params.omega * (n_modes - 1)
    return abs(1.0 + z + z**2 / 2.0 + z**3 / 6.0 + z**4 / 24.0)


def check_stiffness(dt: float, params: ModelParams, n_modes: int) -> bool:
    """Warns when the fastest resolved mode is amplified by more than STIFFNESS_LIMIT per step"""
    factor = stiffness_factor(dt, params, n_modes)
    if factor <= STIFFNESS_LIMIT:
        return True
    limit = 2.78 / (4.0 * params.omega * (n_modes - 1))
    message = f"dt={dt} amplifies mode {n_modes} by {factor:.3g} per step; use dt < {limit:.3g}"
    logger.warning(message)
    warnings.warn(message, StiffnessWarning, stacklevel=2)
    return False


def _dealias(coeffs: np.ndarray) -> np.ndarray:
    modes = mode_numbers((len(coeffs) - 1) // 2)
    cutoff = 2 * modes.max() // 3
    return np.where(np.abs(modes) <= cutoff, coeffs, 0.0)


def _rk4(
    shape: BoundaryShape,
    rate: Callable[[BoundaryShape], np.ndarray],
    dt: float,
    first: Optional[np.ndarray] = None,
) -> BoundaryShape:
    coeffs = shape.rho_hat
    k1 = rate(shape) if first is None else first
    k2 = rate(shape.with_coefficients(coeffs + 0.5 * dt * k1))
    k3 = rate(shape.with_coefficients(coeffs + 0.5 * dt * k2))
    k4 = rate(shape.with_coefficients(coeffs + dt * k3))
    return shape.with_coefficients(coeffs + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def _coefficient_rate(params, law, frame, dealias):
    def rate(shape: BoundaryShape) -> np.ndarray:
        grid_velocity, _ = velocity(shape, params, law, frame)
        coeffs = from_grid(grid_velocity, shape.n_modes)
        return _dealias(coeffs) if dealias else coeffs

    return rate


def step(
    shape: BoundaryShape,
    params: ModelParams,
    law: Optional[ContactLineLaw],
    dt: float,
    frame: Frame = Frame.COMOVING,
    dealias: bool = False,
    warn_stiff: bool = True,
) -> BoundaryShape:
    """Advances the curve by one RK4 step of size dt

    :param shape: the current curve
    :param params: the model constants
    :param law: contact-line law (affine required in the co-moving frame)
    :param dt: the time step
    :param frame: lab or co-moving

    :return: the new curve, conjugate symmetric and truncated to N modes
    :rtype: BoundaryShape

    """
    if warn_stiff:
        check_stiffness(dt, params, shape.n_modes)
    return _rk4(shape, _coefficient_rate(params, law, Frame(frame), dealias), dt)


def _record(t: float, shape: BoundaryShape, solution: FieldSolution, params: ModelParams) -> TrajectoryRecord:
    offset = shape.n_modes
    return TrajectoryRecord(
        t=float(t),
        rho_hat=np.array(shape.rho_hat),
        lam=float(solution.lam),
        min_contact_slope=min_contact_slope(solution),
        volume_residual=abs(solution.volume - params.volume) / params.volume,
        sup_rho=shape.sup_norm,
        mode_magnitudes=np.abs(shape.rho_hat[offset:]),
    )


def evolve(
    initial: BoundaryShape,
    params: ModelParams,
    law: Optional[ContactLineLaw] = None,
    settings: Optional[EvolutionConfig] = None,
) -> Trajectory:
    """Integrates the contact line from an initial curve

    Geometric and parabolicity failures end the run early; the partial
    trajectory is returned with halt_reason set.
    """
    settings = settings or EvolutionConfig()
    law = _affine_law(params, law) if settings.frame is Frame.COMOVING else (law or ContactLineLaw.from_params(params))
    trajectory = Trajectory(reference=initial.reference, frame=settings.frame)
    check_stiffness(settings.dt, params, initial.n_modes)
    rate = _coefficient_rate(params, law, settings.frame, settings.dealias)
    logger.info(
        "Evolving in the %s frame: dt=%g t_end=%g N=%d mu=%g",
        settings.frame.value,
        settings.dt,
        settings.t_end,
        initial.n_modes,
        params.mu,
    )
    shape, t = initial, 0.0
    n_steps = settings.n_steps
    try:
        for index in range(n_steps + 1):
            t = index * settings.dt
            grid_velocity, solution = velocity(shape, params, law, settings.frame)
            slope = min_contact_slope(solution)
            if index % settings.record_every == 0 or index == n_steps or slope <= 0:
                trajectory.append(_record(t, shape, solution, params))
            if slope <= 0 and settings.halt_on_parabolicity_loss:
                raise ParabolicityLost(f"min(-d_nu u) = {slope:.6g} <= 0 at t = {t:.6g}")
            if index == n_steps:
                break
            first = from_grid(grid_velocity, shape.n_modes)
            if settings.dealias:
                first = _dealias(first)
            shape = _rk4(shape, rate, settings.dt, first=first)
    except HALTING_ERRORS as error:
        trajectory.halt_reason = f"{type(error).__name__}: {error}"
        trajectory.halt_error = error
        logger.warning("Evolution halted at t=%.6g: %s", t, trajectory.halt_reason)
    else:
        logger.info("Evolution reached t=%.6g with sup|rho|=%.3e", t, shape.sup_norm)
    return trajectory

