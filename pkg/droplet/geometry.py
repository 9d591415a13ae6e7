"""
Star-shaped curves as radial graphs over a reference circle

A curve is stored through the Fourier coefficients rho_hat[n], n = -N..N,
of its radial perturbation, so that the boundary point at angle theta is
(R_ref + rho(theta)) (cos theta, sin theta). Coefficient arrays are laid
out with mode n at index n + N.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence
import numpy as np
from scipy import fft
from droplet import config
from droplet.models import DataValidationError, StarShapeViolation, TubularViolation

logger = logging.getLogger(__name__)


######################################################################
#  F O U R I E R   H E L P E R S
######################################################################
def mode_numbers(n_modes: int) -> np.ndarray:
    """Returns the mode numbers -N..N in storage order"""
    return np.arange(-n_modes, n_modes + 1)


def n_modes_of(coeffs: np.ndarray) -> int:
    """Returns N for a coefficient array of length 2N+1"""
    return (len(coeffs) - 1) // 2


def symmetrize(coeffs: Sequence[complex]) -> np.ndarray:
    """Averages c[n] with conj(c[-n]) so the synthesized function is real"""
    values = np.asarray(coeffs, dtype=complex)
    return 0.5 * (values + np.conj(values[::-1]))


def to_grid(coeffs: Sequence[complex], n_grid: int) -> np.ndarray:
    """Synthesizes real grid values at theta_j = 2 pi j / M"""
    values = np.asarray(coeffs, dtype=complex)
    n_modes = n_modes_of(values)
    if n_grid < 2 * n_modes + 1:
        raise DataValidationError(f"Grid of {n_grid} points cannot carry {n_modes} modes")
    spectrum = np.zeros(n_grid, dtype=complex)
    spectrum[mode_numbers(n_modes) % n_grid] = values
    return np.real(fft.ifft(spectrum) * n_grid)


def from_grid(values: Sequence[float], n_modes: int) -> np.ndarray:
    """Analyzes grid values into the coefficients of modes -N..N"""
    samples = np.asarray(values, dtype=float)
    n_grid = len(samples)
    if n_grid < 2 * n_modes + 1:
        raise DataValidationError(f"Grid of {n_grid} points cannot resolve {n_modes} modes")
    spectrum = fft.fft(samples) / n_grid
    return spectrum[mode_numbers(n_modes) % n_grid]


def differentiate(coeffs: Sequence[complex], order: int = 1) -> np.ndarray:
    """Applies d/dtheta as the multiplier (i n)^order"""
    values = np.asarray(coeffs, dtype=complex)
    return values * (1j * mode_numbers(n_modes_of(values))) ** order


def resize(coeffs: Sequence[complex], n_modes: int) -> np.ndarray:
    """Truncates or zero-pads a coefficient array to modes -n_modes..n_modes"""
    values = np.asarray(coeffs, dtype=complex)
    current = n_modes_of(values)
    if n_modes <= current:
        return values[current - n_modes: current + n_modes + 1].copy()
    padded = np.zeros(2 * n_modes + 1, dtype=complex)
    padded[n_modes - current: n_modes + current + 1] = values
    return padded


@lru_cache(maxsize=64)
def _synthesis_matrix(theta_key: bytes, n_modes: int) -> np.ndarray:
    theta = np.frombuffer(theta_key)
    matrix = np.exp(1j * np.outer(theta, mode_numbers(n_modes)))
    matrix.setflags(write=False)
    return matrix


def evaluate(coeffs: Sequence[complex], theta: Sequence[float]) -> np.ndarray:
    """Evaluates the real trigonometric polynomial at arbitrary angles"""
    values = np.asarray(coeffs, dtype=complex)
    angles = np.ascontiguousarray(theta, dtype=float)
    if angles.size <= 4096:
        matrix = _synthesis_matrix(angles.tobytes(), n_modes_of(values))
    else:
        matrix = np.exp(1j * np.outer(angles, mode_numbers(n_modes_of(values))))
    return np.real(matrix @ values)


def uniform_angles(n_points: int) -> np.ndarray:
    """Returns theta_j = 2 pi j / n_points"""
    return 2.0 * np.pi * np.arange(n_points) / n_points


@lru_cache(maxsize=64)
def trig_table(n_points: int, n_modes: int) -> np.ndarray:
    """Read-only table e^{i n theta_j} on n_points uniform angles, columns in storage order -N..N"""
    table = np.exp(1j * np.outer(uniform_angles(n_points), mode_numbers(n_modes)))
    table.setflags(write=False)
    return table


######################################################################
#  R E F E R E N C E   C I R C L E
######################################################################
@dataclass(frozen=True)
class ReferenceCircle:
    """
    The circle of radius R_ref carrying the curve parametrization

    n_modes is the number N of retained Fourier modes and n_grid the
    number M of uniform grid angles (4N unless given).
    """

    radius: float
    n_modes: int
    n_grid: Optional[int] = None

    def __post_init__(self):
        if self.n_grid is None:
            object.__setattr__(self, "n_grid", 4 * self.n_modes)
        if not self.radius > 0:
            raise DataValidationError(f"Invalid reference radius: {self.radius}")
        if self.n_modes < 4:
            raise DataValidationError(f"Invalid number of modes: {self.n_modes} (need N >= 4)")
        if self.n_grid < 2 * self.n_modes + 2:
            raise DataValidationError(f"Invalid grid size: {self.n_grid} (need M >= {2 * self.n_modes + 2})")

    @property
    def theta(self) -> np.ndarray:
        """Uniform grid angles"""
        return uniform_angles(self.n_grid)

    @property
    def modes(self) -> np.ndarray:
        """Mode numbers -N..N"""
        return mode_numbers(self.n_modes)

    def mode_index(self, n: int) -> int:
        """Storage index of mode n"""
        if abs(n) > self.n_modes:
            raise IndexError(f"Mode {n} outside -{self.n_modes}..{self.n_modes}")
        return n + self.n_modes


######################################################################
#  B O U N D A R Y   S H A P E
######################################################################
@dataclass(frozen=True, eq=False)
class BoundaryShape:
    """
    Class that represents a star-shaped curve over a reference circle

    Instances are immutable; the coefficient array is read-only. Use
    make_shape() to build one from arbitrary coefficients.
    """

    reference: ReferenceCircle
    rho_hat: np.ndarray
    tube_ratio: float = field(default=config.TUBE_RATIO)

    def __post_init__(self):
        coeffs = np.array(self.rho_hat, dtype=complex)
        if coeffs.shape != (2 * self.reference.n_modes + 1,):
            raise DataValidationError(
                f"Expected {2 * self.reference.n_modes + 1} coefficients, got {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "rho_hat", coeffs)
        self._check_invariants()

    def __repr__(self):
        return f"<BoundaryShape R_ref={self.reference.radius} N={self.reference.n_modes} sup={self.sup_norm:.3e}>"

    def _check_invariants(self) -> None:
        radius = self.radius_grid
        if np.min(radius) <= 0:
            raise StarShapeViolation(f"R_ref + rho reaches {np.min(radius):.6g} <= 0")
        if self.sup_norm >= self.tube_ratio * self.reference.radius:
            raise TubularViolation(
                f"max|rho| = {self.sup_norm:.6g} >= {self.tube_ratio} * R_ref = {self.tube_ratio * self.reference.radius:.6g}"
            )

    @property
    def n_modes(self) -> int:
        """Number of retained modes N"""
        return self.reference.n_modes

    @property
    def rho(self) -> np.ndarray:
        """Grid values rho(theta_j)"""
        return to_grid(self.rho_hat, self.reference.n_grid)

    @property
    def radius_grid(self) -> np.ndarray:
        """Grid values R(theta_j) = R_ref + rho(theta_j)"""
        return self.reference.radius + self.rho

    @property
    def sup_norm(self) -> float:
        """max |rho| over the grid"""
        return float(np.max(np.abs(self.rho)))

    def mode(self, n: int) -> complex:
        """Returns the coefficient of mode n"""
        return complex(self.rho_hat[self.reference.mode_index(n)])

    def radius_at(self, theta: Sequence[float]) -> np.ndarray:
        """R(theta) at arbitrary angles"""
        return self.reference.radius + evaluate(self.rho_hat, theta)

    def radius_derivative_at(self, theta: Sequence[float]) -> np.ndarray:
        """dR/dtheta at arbitrary angles"""
        return evaluate(differentiate(self.rho_hat), theta)

    def points(self, theta: Optional[Sequence[float]] = None) -> np.ndarray:
        """Cartesian boundary points, shape (len(theta), 2)"""
        angles = self.reference.theta if theta is None else np.asarray(theta, dtype=float)
        radius = self.radius_at(angles)
        return np.column_stack((radius * np.cos(angles), radius * np.sin(angles)))

    def with_coefficients(self, coeffs: Sequence[complex]) -> "BoundaryShape":
        """Builds a new shape over the same reference"""
        return make_shape(self.reference, coeffs, tube_ratio=self.tube_ratio)

    def dumps(self) -> str:
        """Serializes into the plain-text shape record"""
        lines = [f"{self.reference.radius!r} {self.reference.n_modes} {self.reference.n_grid}"]
        for n in range(self.reference.n_modes + 1):
            value = self.mode(n)
            lines.append(f"{n} {value.real!r} {value.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, tube_ratio: float = config.TUBE_RATIO) -> "BoundaryShape":
        """
        Deserializes a shape record
        Args:
            text (str): header 'R_ref N M' followed by lines 'n re im' for n = 0..N
        """
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
        try:
            radius, n_modes, n_grid = float(rows[0][0]), int(rows[0][1]), int(rows[0][2])
            reference = ReferenceCircle(radius, n_modes, n_grid)
            coeffs = np.zeros(2 * n_modes + 1, dtype=complex)
            for row in rows[1:]:
                n, value = int(row[0]), complex(float(row[1]), float(row[2]))
                if not 0 <= n <= n_modes:
                    raise DataValidationError(f"Invalid shape record: mode {n} outside 0..{n_modes}")
                coeffs[reference.mode_index(n)] = value
                coeffs[reference.mode_index(-n)] = np.conj(value)
        except (IndexError, ValueError) as error:
            raise DataValidationError(f"Invalid shape record: {error}") from error
        return make_shape(reference, coeffs, tube_ratio=tube_ratio)


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
    """Per grid point normal, tangent, normal factor nu_0.nu_rho and ds/dtheta"""

    theta: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    normal_factor: np.ndarray
    arc_element: np.ndarray

    @property
    def radial(self) -> np.ndarray:
        """The reference normal nu_0 = (cos theta, sin theta)"""
        return np.column_stack((np.cos(self.theta), np.sin(self.theta)))


######################################################################
#  O P E R A T I O N S
######################################################################
def make_shape(reference: ReferenceCircle, coeffs: Sequence[complex], tube_ratio: float = config.TUBE_RATIO) -> BoundaryShape:
    """Creates a shape from coefficients indexed -N..N, enforcing conjugate symmetry

    :param reference: the reference circle
    :param coeffs: 2N+1 complex coefficients

    :return: a validated shape
    :rtype: BoundaryShape

    """
    values = np.asarray(coeffs, dtype=complex)
    if values.shape != (2 * reference.n_modes + 1,):
        raise DataValidationError(f"Expected {2 * reference.n_modes + 1} coefficients, got {values.shape}")
    return BoundaryShape(reference, symmetrize(values), tube_ratio=tube_ratio)


def circle(reference: ReferenceCircle) -> BoundaryShape:
    """The reference circle itself (rho = 0)"""
    return BoundaryShape(reference, np.zeros(2 * reference.n_modes + 1, dtype=complex))


def shape_from_grid(
    reference: ReferenceCircle, values: Sequence[float], tube_ratio: float = config.TUBE_RATIO
) -> BoundaryShape:
    """Creates a shape from grid samples of rho (modes above N are dropped)"""
    return make_shape(reference, from_grid(values, reference.n_modes), tube_ratio=tube_ratio)


def frame(shape: BoundaryShape) -> BoundaryFrame:
    """Computes normals, tangents and metric factors on the grid"""
    theta = shape.reference.theta
    radius = shape.radius_grid
    slope = to_grid(differentiate(shape.rho_hat), shape.reference.n_grid)
    speed = np.hypot(slope, radius)
    nu0 = np.column_stack((np.cos(theta), np.sin(theta)))
    tau0 = np.column_stack((-np.sin(theta), np.cos(theta)))
    normal = (radius[:, None] * nu0 - slope[:, None] * tau0) / speed[:, None]
    tangent = (radius[:, None] * tau0 + slope[:, None] * nu0) / speed[:, None]
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    tangent /= np.linalg.norm(tangent, axis=1)[:, None]
    factor = np.einsum("ij,ij->i", nu0, normal)
    return BoundaryFrame(theta=theta, normal=normal, tangent=tangent, normal_factor=factor, arc_element=speed)


def enclosed_area(shape: BoundaryShape) -> float:
    """Area 1/2 * integral of R(theta)^2 (trapezoid rule, exact for the retained modes)"""
    return float(np.pi * np.mean(shape.radius_grid**2))


def random_coefficients(
    n_modes: int, rng: np.random.Generator, amplitude: float = 1.0, max_mode: Optional[int] = None
) -> np.ndarray:
    """Seeded smooth conjugate-symmetric coefficients with |c_n| decaying like 1/(1 + n^2)"""
    top = n_modes if max_mode is None else min(max_mode, n_modes)
    coeffs = np.zeros(2 * n_modes + 1, dtype=complex)
    for n in range(top + 1):
        value = complex(rng.standard_normal(), 0.0 if n == 0 else rng.standard_normal()) / (1.0 + n * n)
        coeffs[n_modes + n] = value
        coeffs[n_modes - n] = np.conj(value)
    scale = np.max(np.abs(to_grid(coeffs, 4 * n_modes)))
    return amplitude * coeffs / scale if scale > 0 else coeffs
