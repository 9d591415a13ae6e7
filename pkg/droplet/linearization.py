"""
Linearization at the translating circle

Fourier matrices of the linearized co-moving velocity DH(0) = A + mu B,
its restriction to the modes orthogonal to the translation kernel, the
lab frame linearization at the disk for a general contact-line law,
dense spectra, finite difference Jacobians of the nonlinear maps and the
closed-form domain variations of the volume integrals and lambda.

Matrices act on coefficient vectors indexed by mode numbers; row n and
column m hold the response of mode n to mode m.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple
import numpy as np
from scipy import linalg, optimize
from droplet import config
from droplet.dynamics import velocity_G, velocity_H
from droplet.elliptic import solve_components, solve_full
from droplet.geometry import (
    BoundaryShape,
    ReferenceCircle,
    circle,
    from_grid,
    mode_numbers,
    n_modes_of,
    uniform_angles,
)
from droplet.models import BracketInvalid, ContactLineLaw, DataValidationError, DegenerateVolume, ModelParams, NoConvergence

logger = logging.getLogger(__name__)


######################################################################
#  O P E R A T O R   M A T R I X
######################################################################
@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex truncation of a linear operator on Fourier modes"""

    entries: np.ndarray
    modes: np.ndarray
    label: str

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        modes = np.array(self.modes, dtype=int)
        if entries.shape != (modes.size, modes.size):
            raise DataValidationError(f"Operator {self.label}: {entries.shape} entries for {modes.size} modes")
        entries.setflags(write=False)
        modes.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "modes", modes)

    def __repr__(self):
        return f"<OperatorMatrix {self.label} size={self.modes.size}>"

    @property
    def n_modes(self) -> int:
        """Largest retained mode N"""
        return int(np.max(np.abs(self.modes)))

    def index(self, n: int) -> int:
        """Row/column position of mode n"""
        positions = np.flatnonzero(self.modes == n)
        if positions.size == 0:
            raise IndexError(f"Mode {n} is not retained by {self.label}")
        return int(positions[0])

    def entry(self, n: int, m: int) -> complex:
        """Entry at row mode n, column mode m"""
        return complex(self.entries[self.index(n), self.index(m)])

    def apply(self, coeffs: Sequence[complex]) -> np.ndarray:
        """Applies the operator to coefficients indexed like self.modes"""
        return self.entries @ np.asarray(coeffs, dtype=complex)

    def without_modes(self, dropped: Sequence[int], label: Optional[str] = None) -> "OperatorMatrix":
        """Deletes the rows and columns of the given modes"""
        keep = ~np.isin(self.modes, dropped)
        return OperatorMatrix(self.entries[np.ix_(keep, keep)], self.modes[keep], label or self.label)

    def reality_defect(self) -> float:
        """max |entry(-n,-m) - conj(entry(n,m))|; zero for operators mapping real functions to real functions"""
        order = np.argsort(-self.modes)
        if not np.array_equal(self.modes[order], -self.modes):
            raise DataValidationError(f"Operator {self.label} is not closed under n -> -n")
        mirrored = self.entries[np.ix_(order, order)]
        return float(np.max(np.abs(mirrored - np.conj(self.entries)))) if self.entries.size else 0.0

    def dump(self) -> str:
        """Plain-text dense dump, one 'row col re im' line per entry"""
        lines = []
        for i, n in enumerate(self.modes):
            for j, m in enumerate(self.modes):
                value = self.entries[i, j]
                lines.append(f"{n} {m} {value.real!r} {value.imag!r}")
        return "\n".join(lines) + "\n"


def _square(n_modes: int) -> Tuple[np.ndarray, np.ndarray]:
    if n_modes < 2:
        raise DataValidationError(f"Invalid number of modes: {n_modes} (need N >= 2)")
    modes = mode_numbers(n_modes)
    return np.zeros((modes.size, modes.size), dtype=complex), modes


######################################################################
#  C O - M O V I N G   L I N E A R I Z A T I O N
######################################################################
def assemble_A(n_modes: int, params: ModelParams) -> OperatorMatrix:  # pylint: disable=invalid-name
    """Diagonal part: -12 omega on mode 0 and -4 omega (|n| - 1) elsewhere"""
    entries, modes = _square(n_modes)
    diagonal = -4.0 * params.omega * (np.abs(modes) - 1.0)
    diagonal[modes == 0] = -12.0 * params.omega
    entries[np.diag_indices(modes.size)] = diagonal
    return OperatorMatrix(entries, modes, "A")


def assemble_B(n_modes: int, params: ModelParams) -> OperatorMatrix:  # pylint: disable=invalid-name
    """Incline part: row n couples to modes n -/+ 1 with -(a R0/8)(|n| +/- n - 4); row 0 vanishes"""
    entries, modes = _square(n_modes)
    scale = -params.a * params.R0 / 8.0
    for i, n in enumerate(modes):
        if n == 0:
            continue
        if i > 0:
            entries[i, i - 1] = scale * (abs(n) + n - 4)
        if i < modes.size - 1:
            entries[i, i + 1] = scale * (abs(n) - n - 4)
    return OperatorMatrix(entries, modes, "B")


def assemble_DH0(n_modes: int, params: ModelParams) -> OperatorMatrix:  # pylint: disable=invalid-name
    """DH(0) = A + mu B"""
    entries = assemble_A(n_modes, params).entries + params.mu * assemble_B(n_modes, params).entries
    return OperatorMatrix(entries, mode_numbers(n_modes), "DH0")


def assemble_DH0_perp(n_modes: int, params: ModelParams) -> OperatorMatrix:  # pylint: disable=invalid-name
    """DH(0) restricted to the modes n != +/-1"""
    return assemble_DH0(n_modes, params).without_modes((-1, 1), label="DH0_perp")


def _trace_variation_rows(n_modes: int, params: ModelParams, rows: np.ndarray) -> np.ndarray:
    """Variation of -d_nu u under a normal displacement h of the disk of radius R0"""
    radius, volume, mu = params.R0, params.volume, params.mu
    columns = mode_numbers(n_modes)
    entries = np.zeros((rows.size, columns.size), dtype=complex)
    slope = 4.0 * volume / (np.pi * radius**4)
    for i, k in enumerate(rows):
        for j, m in enumerate(columns):
            if m == k:
                entries[i, j] += slope * (1.0 - abs(k))
            if abs(m - k) == 1:
                entries[i, j] += mu * radius / 8.0 * (3.0 - abs(k))
            if k == 0 and m == 0:
                entries[i, j] -= radius / 2.0 * 32.0 * volume / (np.pi * radius**5)
            if k == 0 and abs(m) == 1:
                entries[i, j] -= radius / 2.0 * mu
    return entries


def assemble_trace_variation(n_modes: int, params: ModelParams) -> OperatorMatrix:
    """Fourier matrix of the first variation of the contact slope -d_nu u at the disk

    Sum of the Dirichlet-to-Neumann response, the second radial derivative
    of the disk profile and the constant shift from the variation of lambda.
    """
    _, modes = _square(n_modes)
    return OperatorMatrix(_trace_variation_rows(n_modes, params, modes), modes, "L")


def assemble_drift(n_modes: int, params: ModelParams) -> OperatorMatrix:
    """Variation of -v0 e1 . nu: (Dh)_k = -(mu a R0/8)[(k-1) h_{k-1} - (k+1) h_{k+1}]"""
    entries, modes = _square(n_modes)
    scale = -params.mu * params.a * params.R0 / 8.0
    for i, k in enumerate(modes):
        if i > 0:
            entries[i, i - 1] = scale * (k - 1)
        if i < modes.size - 1:
            entries[i, i + 1] = -scale * (k + 1)
    return OperatorMatrix(entries, modes, "D")


def assemble_DG0_disk(  # pylint: disable=invalid-name
    n_modes: int, params: ModelParams, law: Optional[ContactLineLaw] = None
) -> OperatorMatrix:
    """Lab frame linearization at the disk: multiplication by F'(-d_nu u0) after the trace variation"""
    law = law or ContactLineLaw.from_params(params)
    rows, modes = mode_numbers(n_modes + 1), mode_numbers(n_modes)
    extended = _trace_variation_rows(n_modes, params, rows)
    theta = uniform_angles(8 * n_modes + 8)
    slope = params.mu * params.R0**2 / 4.0 * np.cos(theta) + 4.0 * params.volume / (np.pi * params.R0**3)
    weights = from_grid(law.derivative(slope), 2 * n_modes + 1)
    offset = 2 * n_modes + 1
    convolution = weights[offset + modes[:, None] - rows[None, :]]
    return OperatorMatrix(convolution @ extended, modes, "DG0")


######################################################################
#  S P E C T R A
######################################################################
@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues sorted by real part (descending) with the kernel count"""

    eigenvalues: np.ndarray
    kernel_count: int
    kernel_tol: float
    label: str = ""

    @property
    def nonzero(self) -> np.ndarray:
        """Eigenvalues outside the kernel tolerance"""
        return self.eigenvalues[np.abs(self.eigenvalues) > self.kernel_tol]

    @property
    def leading_nonzero(self) -> complex:
        """Nonzero eigenvalue with the largest real part"""
        values = self.nonzero
        return complex(values[0]) if values.size else complex("nan")

    @property
    def gap(self) -> float:
        """Distance of the nonzero spectrum from the imaginary axis"""
        return -self.leading_nonzero.real

    def rows(self) -> list:
        """(re, im) rows for export"""
        return [[float(value.real), float(value.imag)] for value in self.eigenvalues]

    def serialize(self) -> dict:
        """Summary for artifacts"""
        return {
            "label": self.label,
            "size": int(self.eigenvalues.size),
            "kernel_count": self.kernel_count,
            "kernel_tol": self.kernel_tol,
            "leading_nonzero": [self.leading_nonzero.real, self.leading_nonzero.imag],
            "gap": self.gap,
        }


def spectrum(matrix: OperatorMatrix, kernel_tol: float = config.KERNEL_TOL) -> Spectrum:
    """Dense nonsymmetric eigensolve of an operator truncation

    :param matrix: the operator
    :param kernel_tol: eigenvalues with modulus at most this count as kernel

    :return: sorted eigenvalues and kernel count
    :rtype: Spectrum

    """
    try:
        values = linalg.eigvals(matrix.entries)
    except (linalg.LinAlgError, ValueError) as error:
        raise NoConvergence(f"Eigenvalue solver failed on {matrix.label}: {error}") from error
    order = np.lexsort((values.imag, -values.real))
    values = values[order]
    kernel = int(np.count_nonzero(np.abs(values) <= kernel_tol))
    logger.debug("Spectrum of %s: kernel=%d leading=%s", matrix.label, kernel, values[:3])
    return Spectrum(eigenvalues=values, kernel_count=kernel, kernel_tol=kernel_tol, label=matrix.label)


######################################################################
#  F I N I T E   D I F F E R E N C E   J A C O B I A N S
######################################################################
def _real_direction(n_modes: int, order: int, kind: str) -> np.ndarray:
    direction = np.zeros(2 * n_modes + 1, dtype=complex)
    if order == 0:
        direction[n_modes] = 1.0
    elif kind == "cos":
        direction[n_modes + order] = direction[n_modes - order] = 0.5
    else:
        direction[n_modes + order], direction[n_modes - order] = -0.5j, 0.5j
    return direction


def _fd_jacobian(base: BoundaryShape, rate: Callable[[BoundaryShape], np.ndarray], eps: float, label: str) -> OperatorMatrix:
    if not 1e-6 <= eps <= 1e-3:
        raise DataValidationError(f"Invalid eps: {eps} outside [1e-6, 1e-3]")
    n_modes = base.n_modes
    modes = mode_numbers(n_modes)
    entries = np.zeros((modes.size, modes.size), dtype=complex)

    def column(direction: np.ndarray) -> np.ndarray:
        plus = rate(base.with_coefficients(base.rho_hat + eps * direction))
        minus = rate(base.with_coefficients(base.rho_hat - eps * direction))
        return from_grid((plus - minus) / (2.0 * eps), n_modes)

    entries[:, n_modes] = column(_real_direction(n_modes, 0, "cos"))
    for order in range(1, n_modes + 1):
        cos_column = column(_real_direction(n_modes, order, "cos"))
        sin_column = column(_real_direction(n_modes, order, "sin"))
        entries[:, n_modes + order] = cos_column + 1j * sin_column
        entries[:, n_modes - order] = cos_column - 1j * sin_column
    return OperatorMatrix(entries, modes, label)


def fd_jacobian_H(  # pylint: disable=invalid-name
    params: ModelParams, n_modes: int, eps: float = 1e-5, n_grid: Optional[int] = None
) -> OperatorMatrix:
    """Central difference Jacobian of the co-moving velocity at the translating circle"""
    base = circle(ReferenceCircle(params.R0, n_modes, n_grid))
    logger.info("Finite difference Jacobian of H: N=%d mu=%g eps=%g", n_modes, params.mu, eps)
    return _fd_jacobian(base, lambda shape: velocity_H(shape, params), eps, "FD_DH0")


def fd_jacobian_G(  # pylint: disable=invalid-name
    shape: BoundaryShape, params: ModelParams, law: Optional[ContactLineLaw] = None, eps: float = 1e-5
) -> OperatorMatrix:
    """Central difference Jacobian of the lab frame velocity at an arbitrary curve"""
    law = law or ContactLineLaw.from_params(params)
    logger.info("Finite difference Jacobian of G: N=%d mu=%g law=%s", shape.n_modes, params.mu, law.name)
    return _fd_jacobian(shape, lambda curve: velocity_G(curve, params, law), eps, "FD_DG")


######################################################################
#  D O M A I N   V A R I A T I O N S
######################################################################
def _low_modes(h: Sequence[complex]) -> Tuple[complex, complex, complex]:
    values = np.asarray(h, dtype=complex)
    n_modes = n_modes_of(values)
    return values[n_modes], values[n_modes - 1], values[n_modes + 1]


def variation_volume_unit(h: Sequence[complex], params: ModelParams) -> float:
    """First variation of integral(u_unit) on the disk: (pi R0^3 / 2) h_0"""
    h0, _, _ = _low_modes(h)
    return float(np.real(np.pi * params.R0**3 / 2.0 * h0))


def variation_volume_x1(h: Sequence[complex], params: ModelParams) -> float:
    """First variation of integral(u_x1) on the disk: (pi R0^4 / 8)(h_-1 + h_1)"""
    _, h_minus, h_plus = _low_modes(h)
    return float(np.real(np.pi * params.R0**4 / 8.0 * (h_minus + h_plus)))


def variation_lambda(h: Sequence[complex], params: ModelParams) -> float:
    """First variation of lambda: -(32 V/(pi R0^5)) h_0 - mu (h_-1 + h_1)"""
    h0, h_minus, h_plus = _low_modes(h)
    return float(np.real(-32.0 * params.volume / (np.pi * params.R0**5) * h0 - params.mu * (h_minus + h_plus)))


######################################################################
#  W E L L - P O S E D N E S S
######################################################################
def principal_symbol_coefficient(
    shape: BoundaryShape, params: ModelParams, law: Optional[ContactLineLaw] = None
) -> np.ndarray:
    """Coefficient a_0 = F'(-d_nu u)(-d_r u)/(nu_0 . nu_rho) of the principal symbol a_0 |xi|"""
    law = law or ContactLineLaw.from_params(params)
    solution = solve_full(shape, params)
    slope_derivative = law.derivative(solution.contact_slope)
    return slope_derivative * (-solution.boundary_radial_derivative) / solution.boundary_frame.normal_factor


def contact_slope_curve(shape: BoundaryShape, params: ModelParams) -> Callable[[float], float]:
    """Returns mu -> min over the grid of -d_nu u, reusing one pair of component solves"""
    unit, x1 = solve_components(shape)
    if not unit.volume > 0:
        raise DegenerateVolume(f"Unit-load volume {unit.volume:.6g} <= 0")

    def minimum(mu: float) -> float:
        lam = (params.volume - mu * x1.volume) / unit.volume
        return float(np.min(-(mu * x1.boundary_normal_derivative + lam * unit.boundary_normal_derivative)))

    return minimum


def critical_incline(
    shape: BoundaryShape,
    params: ModelParams,
    law: Optional[ContactLineLaw] = None,
    bracket: Optional[Tuple[float, float]] = None,
) -> float:
    """Bisects the incline at which min over the boundary of -d_nu u changes sign

    :param shape: the wetted region
    :param params: model constants (mu is ignored)
    :param law: optional law; the threshold depends only on the contact slope
    :param bracket: (low, high) with positive slope at low and negative at high

    :return: the critical incline to within 1e-8
    :rtype: float

    """
    low, high = bracket if bracket is not None else (0.0, 2.0 * params.positivity_bound)
    slope = contact_slope_curve(shape, params)
    at_low, at_high = slope(low), slope(high)
    if not (at_low > 0 > at_high):
        raise BracketInvalid(f"No sign change of the contact slope on [{low}, {high}]: {at_low:.6g}, {at_high:.6g}")
    if law is not None:
        law.check_monotone(np.array([at_low, at_high]))
    mu_star = optimize.bisect(slope, low, high, xtol=1e-8, rtol=4 * np.finfo(float).eps, maxiter=200)
    logger.info("Critical incline %.10g on [%g, %g]", mu_star, low, high)
    return float(mu_star)


def spectral_threshold_incline(
    n_modes: int,
    params: ModelParams,
    bracket: Optional[Tuple[float, float]] = None,
    samples: int = 64,
    kernel_tol: float = config.KERNEL_TOL,
) -> Optional[float]:
    """Smallest incline at which the leading nonzero eigenvalue of DH(0) reaches Re = -omega/2

    The bracket is scanned on a uniform grid for the first sign change,
    which is then bisected. Returns None when no crossing lies in the bracket.
    """
    low, high = bracket if bracket is not None else (0.0, 2.0 * params.positivity_bound)

    def distance(mu: float) -> float:
        return spectrum(assemble_DH0(n_modes, params.with_mu(mu)), kernel_tol).leading_nonzero.real + params.omega / 2.0

    grid = np.linspace(low, high, samples)
    values = np.array([distance(mu) for mu in grid])
    crossings = np.flatnonzero((values[:-1] < 0) & (values[1:] >= 0))
    if crossings.size == 0:
        logger.info("No spectral crossing of -omega/2 for mu in [%g, %g]", low, high)
        return None
    left = crossings[0]
    if values[left + 1] == 0:
        return float(grid[left + 1])
    return float(optimize.bisect(distance, grid[left], grid[left + 1], xtol=1e-8))
