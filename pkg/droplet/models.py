# Copyright 2024 The droplet-stability Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the 'License');
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an 'AS IS' BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Models for the Sliding Droplet Simulator

Physical parameters, contact-line laws and the error types shared by
every module live here.

Models
------
ModelParams - the constants of the droplet model
ContactLineLaw - the kinematic law V = F(-d_nu u)

Attributes:
-----------
a (float) - mobility coefficient of the affine law F(q) = a q - b
b (float) - offset of the affine law
mu (float) - incline parameter (Bond number times sine of the incline)
volume (float) - droplet volume V

"""
import math
import logging
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional
import numpy as np

logger = logging.getLogger(__name__)


######################################################################
#  E R R O R S
######################################################################
class DataValidationError(Exception):
    """Used for invalid configuration or input data"""


class NonAffineLaw(DataValidationError):
    """The co-moving reduction was requested with a non-affine law"""


class NumericalError(Exception):
    """Base class of all numerical failures"""


class StarShapeViolation(NumericalError):
    """The curve is not a radial graph over the reference circle"""


class TubularViolation(NumericalError):
    """The perturbation left the tubular neighbourhood of the reference circle"""


class IllConditioned(NumericalError):
    """The collocation system is too ill-conditioned to trust"""


class DegenerateVolume(NumericalError):
    """The volume of the unit-load solution is not positive"""


class ParabolicityLost(NumericalError):
    """The contact slope -d_nu u is no longer positive on the boundary"""


class BracketInvalid(NumericalError):
    """A bisection bracket does not enclose a sign change"""


class RecenterDiverged(NumericalError):
    """The translation/perturbation split could not be computed"""


class SingularM(NumericalError):
    """The 2x2 kernel coupling matrix is numerically singular"""


class NoConvergence(NumericalError):
    """The dense eigenvalue solver did not converge"""


class StiffnessWarning(RuntimeWarning):
    """The time step is too large for the fastest resolved mode"""


class ParabolicityWarning(RuntimeWarning):
    """A velocity was evaluated on a state with nonpositive contact slope"""


class MonotonicityWarning(RuntimeWarning):
    """A custom contact-line law has F' <= 0 on the encountered slopes"""


######################################################################
#  M O D E L   P A R A M E T E R S
######################################################################
@dataclass(frozen=True)
class ModelParams:
    """
    Class that represents the physical constants of the model

    The translating circle quantities (R0, v0, lambda0, omega) are
    derived on access so they can never go stale.
    """

    a: float = 1.0
    b: float = 1.0
    mu: float = 0.0
    volume: float = math.pi / 4

    def __post_init__(self):
        for name in ("a", "b", "volume"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value > 0:
                raise DataValidationError(f"Invalid model parameter {name}: must be positive, got {value!r}")
        if not isinstance(self.mu, (int, float)) or self.mu < 0:
            raise DataValidationError(f"Invalid model parameter mu: must be nonnegative, got {self.mu!r}")

    def __repr__(self):
        return f"<ModelParams a={self.a} b={self.b} mu={self.mu} V={self.volume}>"

    @property
    def R0(self) -> float:  # pylint: disable=invalid-name
        """Radius of the translating circle"""
        return (4.0 * self.volume * self.a / (math.pi * self.b)) ** (1.0 / 3.0)

    @property
    def v0(self) -> float:
        """Speed of the translating circle"""
        return self.mu * self.a * self.R0**2 / 4.0

    @property
    def lambda0(self) -> float:
        """Lagrange multiplier on the translating circle"""
        return 8.0 * self.volume / (math.pi * self.R0**4)

    @property
    def omega(self) -> float:
        """Spectral scale Va/(pi R0^4) of the linearization"""
        return self.volume * self.a / (math.pi * self.R0**4)

    @property
    def positivity_bound(self) -> float:
        """Largest incline for which the disk profile stays nonnegative"""
        return 16.0 * self.volume / (math.pi * self.R0**5)

    @property
    def is_positive_regime(self) -> bool:
        """True when the translating disk profile is nonnegative"""
        return self.mu <= self.positivity_bound

    def with_mu(self, mu: float) -> "ModelParams":
        """Returns a copy at another incline"""
        return replace(self, mu=mu)

    def serialize(self) -> dict:
        """Serializes the parameters (and derived values) into a dictionary"""
        return {
            "a": self.a,
            "b": self.b,
            "mu": self.mu,
            "volume": self.volume,
            "R0": self.R0,
            "v0": self.v0,
            "lambda0": self.lambda0,
            "omega": self.omega,
        }

    @classmethod
    def deserialize(cls, data: dict) -> "ModelParams":
        """
        Deserializes parameters from a dictionary
        Args:
            data (dict): A dictionary with keys a, b, mu, volume
        """
        try:
            return cls(a=float(data["a"]), b=float(data["b"]), mu=float(data["mu"]), volume=float(data["volume"]))
        except KeyError as error:
            raise DataValidationError("Invalid parameters: missing " + error.args[0]) from error
        except (TypeError, ValueError) as error:
            raise DataValidationError("Invalid parameters: bad or no data " + str(error)) from error


######################################################################
#  C O N T A C T   L I N E   L A W
######################################################################
class ContactLineLaw:
    """
    Kinematic law relating normal speed to the contact slope

    Either affine, F(q) = a q - b, or a custom smooth map with its
    derivative supplied by the caller.
    """

    def __init__(
        self,
        function: Callable[[np.ndarray], np.ndarray],
        derivative: Callable[[np.ndarray], np.ndarray],
        name: str = "custom",
        coefficients: Optional[tuple] = None,
    ):
        self._function = function
        self._derivative = derivative
        self.name = name
        self.coefficients = coefficients

    def __repr__(self):
        return f"<ContactLineLaw {self.name}>"

    @classmethod
    def affine(cls, a: float, b: float) -> "ContactLineLaw":
        """Creates the affine law F(q) = a q - b"""
        if not a > 0 or not b > 0:
            raise DataValidationError(f"Invalid affine law: a and b must be positive, got a={a}, b={b}")
        return cls(
            lambda q: a * np.asarray(q, dtype=float) - b,
            lambda q: np.full_like(np.asarray(q, dtype=float), a),
            name="affine",
            coefficients=(a, b),
        )

    @classmethod
    def from_params(cls, params: ModelParams) -> "ContactLineLaw":
        """Creates the affine law carried by the model parameters"""
        return cls.affine(params.a, params.b)

    @classmethod
    def custom(cls, function: Callable, derivative: Callable, name: str = "custom") -> "ContactLineLaw":
        """Creates a law from a smooth map F and its derivative F'"""
        return cls(function, derivative, name=name)

    @property
    def is_affine(self) -> bool:
        """True for the affine law"""
        return self.coefficients is not None

    def __call__(self, slope: np.ndarray) -> np.ndarray:
        return np.asarray(self._function(slope), dtype=float) * np.ones_like(slope, dtype=float)

    def derivative(self, slope: np.ndarray) -> np.ndarray:
        """Evaluates F' at the given slopes"""
        return np.asarray(self._derivative(slope), dtype=float) * np.ones_like(slope, dtype=float)

    def check_monotone(self, slope: np.ndarray) -> bool:
        """Warns when F' <= 0 at any of the encountered slopes"""
        if self.is_affine:
            return True
        if np.all(self.derivative(slope) > 0):
            return True
        message = f"Law {self.name} has F' <= 0 on encountered slopes [{np.min(slope):.4g}, {np.max(slope):.4g}]"
        logger.warning(message)
        warnings.warn(message, MonotonicityWarning, stacklevel=2)
        return False
