"""
Volume-constrained Poisson solver on star-shaped domains

The droplet profile solves -Laplace(u) = mu x1 + lambda in the wetted
region, u = 0 on the contact line and integral(u) = V. Every solve is
split into an analytic particular part and a harmonic completion
sum c_k (r/R_ref)^|k| e^{ik theta}, fitted by least squares at boundary
collocation points.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple
import numpy as np
from scipy import linalg
from scipy.special import roots_legendre
from droplet import config
from droplet.geometry import (
    BoundaryFrame,
    BoundaryShape,
    evaluate,
    frame,
    from_grid,
    mode_numbers,
    n_modes_of,
    trig_table,
    uniform_angles,
)
from droplet.models import DataValidationError, DegenerateVolume, IllConditioned, ModelParams

logger = logging.getLogger(__name__)

RHS_TAGS = ("unit", "x1", "full", "harmonic")

# particular part weights (w_unit, w_x1) of each right-hand side
_PARTICULAR = {"unit": (1.0, 0.0), "x1": (0.0, 1.0), "harmonic": (0.0, 0.0)}


def harmonic_degree(n_modes: int) -> int:
    """Degree K of the harmonic completion for curves carrying N modes"""
    return 2 * n_modes


def collocation_size(degree: int) -> int:
    """Number of boundary collocation points for a completion of degree K"""
    return 4 * degree + 4


######################################################################
#  F I E L D   S O L U T I O N
######################################################################
@dataclass(frozen=True, eq=False)
class FieldSolution:  # pylint: disable=too-many-instance-attributes
    """
    Class that represents a solution u of the Dirichlet problem on a shape

    u = w_unit (-r^2/4) + w_x1 (-r^3 cos(theta)/8) + harmonic completion

    Boundary traces are sampled on the shape's grid angles.
    """

    shape: BoundaryShape
    rhs_tag: str
    harmonic_coeffs: np.ndarray
    particular: Tuple[float, float]
    boundary_normal_derivative: np.ndarray
    boundary_radial_derivative: np.ndarray
    volume: float
    boundary_residual: float
    condition: float = 1.0
    lam: Optional[float] = None
    boundary: Optional[BoundaryFrame] = None

    def __repr__(self):
        return f"<FieldSolution {self.rhs_tag} volume={self.volume:.6g} residual={self.boundary_residual:.2e}>"

    @property
    def degree(self) -> int:
        """Degree K of the harmonic completion"""
        return n_modes_of(self.harmonic_coeffs)

    @property
    def contact_slope(self) -> np.ndarray:
        """-d_nu u on the grid"""
        return -self.boundary_normal_derivative

    def value(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Evaluates u at polar points (r, theta); arrays broadcast"""
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        w_unit, w_x1 = self.particular
        result = -w_unit * r**2 / 4.0 - w_x1 * r**3 * np.cos(theta) / 8.0
        return result + _harmonic_value(self.harmonic_coeffs, self.shape.reference.radius, r, theta)

    def polar_derivatives(self, r: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Returns (du/dr, (1/r) du/dtheta) at polar points"""
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        w_unit, w_x1 = self.particular
        u_r = -w_unit * r / 2.0 - 3.0 * w_x1 * r**2 * np.cos(theta) / 8.0
        u_t = w_x1 * r**2 * np.sin(theta) / 8.0
        h_r, h_t = _harmonic_derivatives(self.harmonic_coeffs, self.shape.reference.radius, r, theta)
        return u_r + h_r, u_t + h_t

    def gradient(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Cartesian gradient of u at polar points, stacked on the last axis"""
        u_r, u_t = self.polar_derivatives(r, theta)
        theta = np.broadcast_to(np.asarray(theta, dtype=float), u_r.shape)
        cos, sin = np.cos(theta), np.sin(theta)
        return np.stack((u_r * cos - u_t * sin, u_r * sin + u_t * cos), axis=-1)

    def combine(self, other: "FieldSolution", weight: float, other_weight: float, rhs_tag: str) -> "FieldSolution":
        """Returns weight * self + other_weight * other on the same shape"""
        return FieldSolution(
            shape=self.shape,
            rhs_tag=rhs_tag,
            harmonic_coeffs=weight * self.harmonic_coeffs + other_weight * other.harmonic_coeffs,
            particular=(
                weight * self.particular[0] + other_weight * other.particular[0],
                weight * self.particular[1] + other_weight * other.particular[1],
            ),
            boundary_normal_derivative=weight * self.boundary_normal_derivative
            + other_weight * other.boundary_normal_derivative,
            boundary_radial_derivative=weight * self.boundary_radial_derivative
            + other_weight * other.boundary_radial_derivative,
            volume=weight * self.volume + other_weight * other.volume,
            boundary_residual=abs(weight) * self.boundary_residual + abs(other_weight) * other.boundary_residual,
            condition=max(self.condition, other.condition),
            boundary=self.boundary,
        )

    @property
    def boundary_frame(self) -> BoundaryFrame:
        """Normals and metric factors of the shape, computed once per solve"""
        return self.boundary if self.boundary is not None else frame(self.shape)

    def serialize(self) -> dict:
        """Summary of the solution for artifacts"""
        return {
            "rhs_tag": self.rhs_tag,
            "lambda": self.lam,
            "volume": self.volume,
            "boundary_residual": self.boundary_residual,
            "condition": self.condition,
            "min_contact_slope": min_contact_slope(self),
        }


def _harmonic_value(coeffs: np.ndarray, r_ref: float, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
    modes = mode_numbers(n_modes_of(coeffs))
    scaled = (r[..., None] / r_ref) ** np.abs(modes)
    return np.real(np.sum(coeffs * scaled * np.exp(1j * theta[..., None] * modes), axis=-1))


def _harmonic_derivatives(
    coeffs: np.ndarray, r_ref: float, r: np.ndarray, theta: np.ndarray, table: Optional[np.ndarray] = None
):
    modes = mode_numbers(n_modes_of(coeffs))
    lowered = (r[..., None] / r_ref) ** np.maximum(np.abs(modes) - 1, 0) / r_ref
    waves = coeffs * lowered * (np.exp(1j * theta[..., None] * modes) if table is None else table)
    return np.real(np.sum(waves * np.abs(modes), axis=-1)), np.real(np.sum(waves * 1j * modes, axis=-1))


######################################################################
#  C O L L O C A T I O N
######################################################################
def _fit_harmonic(shape: BoundaryShape, targets, degree: int):
    """Least-squares harmonic completions matching target boundary functions

    targets is a callable (radius, theta) -> array of shape (points, columns).
    Returns complex coefficient arrays (columns, 2K+1), residuals and the
    condition estimate of the column-scaled collocation matrix.
    """
    r_ref = shape.reference.radius
    n_points = collocation_size(degree)
    theta = uniform_angles(n_points)
    waves = trig_table(n_points, degree)[:, degree + 1:]
    radius = shape.radius_at(theta)
    scaled = (radius[:, None] / r_ref) ** np.arange(1, degree + 1)
    basis = np.hstack((np.ones((n_points, 1)), scaled * waves.real, scaled * waves.imag))
    column_scale = np.max(np.abs(basis), axis=0)
    basis = basis / column_scale
    rhs = targets(radius, theta)
    # economic QR; the triangular factor carries the singular values of the basis
    orthonormal, triangular = linalg.qr(basis, mode="economic", check_finite=False)
    singular = linalg.svdvals(triangular, check_finite=False)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else np.inf
    if not condition <= config.CONDITION_LIMIT:
        raise IllConditioned(f"Collocation condition estimate {condition:.3e} exceeds {config.CONDITION_LIMIT:.1e}")
    solution = linalg.solve_triangular(triangular, orthonormal.T @ rhs, check_finite=False)
    residual = np.max(np.abs(basis @ solution - rhs), axis=0)
    real = solution / column_scale[:, None]
    coeffs = np.zeros((rhs.shape[1], 2 * degree + 1), dtype=complex)
    cos_part, sin_part = real[1: degree + 1].T, real[degree + 1:].T
    coeffs[:, degree] = real[0]
    coeffs[:, degree + 1:] = (cos_part - 1j * sin_part) / 2.0
    coeffs[:, :degree] = ((cos_part + 1j * sin_part) / 2.0)[:, ::-1]
    return coeffs, residual, condition


def _radial_moments(shape: BoundaryShape, degree: int, particular: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Exact radial integration of the polynomial fields, trapezoid in theta

    particular holds one (w_unit, w_x1) row and coeffs one completion row per field.
    """
    n_points = max(collocation_size(degree), shape.reference.n_grid)
    theta = uniform_angles(n_points)
    radius = shape.radius_at(theta)
    orders = np.abs(mode_numbers(degree))
    moments = radius[:, None] ** (orders + 2) / ((orders + 2) * shape.reference.radius**orders)
    harmonic = np.real((trig_table(n_points, degree) * moments) @ np.atleast_2d(coeffs).T)
    weights = np.atleast_2d(particular)
    inner = harmonic - np.outer(radius**4 / 16.0, weights[:, 0]) - np.outer(radius**5 * np.cos(theta) / 40.0, weights[:, 1])
    return 2.0 * np.pi * np.mean(inner, axis=0)


def _assemble(
    shape: BoundaryShape,
    rhs_tag: str,
    coeffs: np.ndarray,
    residual: float,
    condition: float,
    volume: float = 0.0,
    boundary: Optional[BoundaryFrame] = None,
) -> FieldSolution:
    particular = _PARTICULAR[rhs_tag]
    theta = shape.reference.theta
    radius = shape.radius_grid
    boundary = boundary if boundary is not None else frame(shape)
    w_unit, w_x1 = particular
    u_r = -w_unit * radius / 2.0 - 3.0 * w_x1 * radius**2 * np.cos(theta) / 8.0
    u_t = w_x1 * radius**2 * np.sin(theta) / 8.0
    table = trig_table(shape.reference.n_grid, n_modes_of(coeffs))
    h_r, h_t = _harmonic_derivatives(coeffs, shape.reference.radius, radius, theta, table=table)
    u_r, u_t = u_r + h_r, u_t + h_t
    cos, sin = np.cos(theta), np.sin(theta)
    normal_derivative = (u_r * cos - u_t * sin) * boundary.normal[:, 0] + (u_r * sin + u_t * cos) * boundary.normal[:, 1]
    return FieldSolution(
        shape=shape,
        rhs_tag=rhs_tag,
        harmonic_coeffs=coeffs,
        particular=particular,
        boundary_normal_derivative=normal_derivative,
        boundary_radial_derivative=u_r,
        volume=float(volume),
        boundary_residual=float(residual),
        condition=condition,
        boundary=boundary,
    )


def _tolerance(shape: BoundaryShape) -> float:
    return config.DISK_TOLERANCE if shape.sup_norm == 0.0 else config.SHAPE_TOLERANCE


def _check_residual(field: FieldSolution, scale: float = 1.0) -> None:
    if field.boundary_residual > _tolerance(field.shape) * max(scale, 1.0):
        logger.warning(
            "Boundary residual %.3e of %s solve exceeds tolerance %.1e",
            field.boundary_residual,
            field.rhs_tag,
            _tolerance(field.shape),
        )


######################################################################
#  O P E R A T I O N S
######################################################################
def solve_components(shape: BoundaryShape) -> Tuple[FieldSolution, FieldSolution]:
    """Solves -Laplace(u) = 1 and -Laplace(u) = x1 with u = 0 on the boundary in one factorization

    :param shape: the wetted region
    :type shape: BoundaryShape

    :return: the (unit, x1) component solutions
    :rtype: tuple

    """
    degree = harmonic_degree(shape.n_modes)

    def targets(radius, theta):
        return np.column_stack((radius**2 / 4.0, radius**3 * np.cos(theta) / 8.0))

    coeffs, residual, condition = _fit_harmonic(shape, targets, degree)
    volumes = _radial_moments(shape, degree, np.array([_PARTICULAR["unit"], _PARTICULAR["x1"]]), coeffs)
    boundary = frame(shape)
    unit = _assemble(shape, "unit", coeffs[0], residual[0], condition, volume=volumes[0], boundary=boundary)
    x1 = _assemble(shape, "x1", coeffs[1], residual[1], condition, volume=volumes[1], boundary=boundary)
    _check_residual(unit)
    _check_residual(x1)
    logger.debug("Component solves: volume(1)=%.12g volume(x1)=%.12g cond=%.3g", unit.volume, x1.volume, condition)
    return unit, x1


def solve_component(shape: BoundaryShape, rhs_tag: str) -> FieldSolution:
    """Solves the Dirichlet problem for the right-hand side 'unit' (f = 1) or 'x1' (f = x1)"""
    if rhs_tag not in ("unit", "x1"):
        raise DataValidationError(f"Invalid right-hand side {rhs_tag!r}, expected 'unit' or 'x1'")
    unit, x1 = solve_components(shape)
    return unit if rhs_tag == "unit" else x1


def solve_harmonic(shape: BoundaryShape, boundary_coeffs: Sequence[complex]) -> FieldSolution:
    """Harmonic function whose trace at boundary angle theta is the given trigonometric polynomial"""
    data = np.asarray(boundary_coeffs, dtype=complex)
    degree = max(harmonic_degree(shape.n_modes), n_modes_of(data))

    def targets(_radius, theta):
        return evaluate(data, theta)[:, None]

    coeffs, residual, condition = _fit_harmonic(shape, targets, degree)
    field = _assemble(shape, "harmonic", coeffs[0], residual[0], condition)
    _check_residual(field, scale=float(np.max(np.abs(data))))
    return field


def dirichlet_to_neumann(shape: BoundaryShape, h: Sequence[complex]) -> np.ndarray:
    """Solve-based Dirichlet-to-Neumann map: Fourier coefficients of d_nu of the harmonic extension of h"""
    field = solve_harmonic(shape, h)
    return from_grid(field.boundary_normal_derivative, n_modes_of(np.asarray(h)))


def dtn_disk(h: Sequence[complex], radius: float) -> np.ndarray:
    """Dirichlet-to-Neumann multiplier |n|/R0 on the disk of the given radius"""
    values = np.asarray(h, dtype=complex)
    return values * np.abs(mode_numbers(n_modes_of(values))) / radius


def lagrange_multiplier(shape: BoundaryShape, params: ModelParams, components: Optional[tuple] = None) -> float:
    """lambda = (V - mu * integral(u_x1)) / integral(u_unit)"""
    unit, x1 = components if components is not None else solve_components(shape)
    if not unit.volume > 0:
        raise DegenerateVolume(f"Volume of the unit-load solution is {unit.volume:.6g} <= 0")
    return (params.volume - params.mu * x1.volume) / unit.volume


def solve_full(shape: BoundaryShape, params: ModelParams) -> FieldSolution:
    """Solves the volume-constrained problem u = mu u_x1 + lambda u_unit

    :param shape: the wetted region
    :param params: the model constants

    :return: the full solution with lam set
    :rtype: FieldSolution

    """
    unit, x1 = solve_components(shape)
    lam = lagrange_multiplier(shape, params, components=(unit, x1))
    full = unit.combine(x1, lam, params.mu, "full")
    full = replace(full, lam=float(lam))
    residual = abs(full.volume - params.volume)
    if residual > 1e-10 * params.volume:
        logger.warning("Volume constraint residual %.3e exceeds 1e-10 V", residual)
    logger.debug("Full solve: lambda=%.12g min slope=%.6g", lam, min_contact_slope(full))
    return full


def min_contact_slope(field: FieldSolution) -> float:
    """Minimum over the grid of -d_nu u"""
    return float(np.min(field.contact_slope))


def volume_integral(
    shape: BoundaryShape, field: FieldSolution, n_radial: int = config.RADIAL_NODES, n_theta: Optional[int] = None
) -> float:
    """Polar quadrature of u: Gauss-Legendre in r on [0, R(theta)], trapezoid in theta"""
    nodes, weights = roots_legendre(n_radial)
    theta = uniform_angles(n_theta or max(collocation_size(field.degree), shape.reference.n_grid))
    radius = shape.radius_at(theta)
    r = radius[:, None] * (nodes + 1.0) / 2.0
    values = field.value(r, np.broadcast_to(theta[:, None], r.shape))
    inner = radius / 2.0 * np.sum(weights * values * r, axis=1)
    return float(2.0 * np.pi * np.mean(inner))
