"""
Global Configuration for Application

Numerical defaults are read from the environment (a local .env file is
honoured) so that runs can be tuned without touching the code. Scenario
settings given on the command line or in a config file are resolved into a
ScenarioConfig by parse_config().
"""
import os
import math
import logging
from dataclasses import dataclass, asdict
from typing import Any, Mapping, Optional
from dotenv import load_dotenv
from droplet.models import DataValidationError, ModelParams

load_dotenv()

# Get configuration from environment
LOGGING_LEVEL = getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)

N_MODES = int(os.getenv("DROPLET_N_MODES", "16"))
DT = float(os.getenv("DROPLET_DT", "1e-3"))
T_END = float(os.getenv("DROPLET_T_END", "10"))
OUT_DIR = os.getenv("DROPLET_OUT_DIR", "results")

# Geometry
TUBE_RATIO = float(os.getenv("DROPLET_TUBE_RATIO", "0.5"))

# Elliptic solver
RADIAL_NODES = int(os.getenv("DROPLET_RADIAL_NODES", "32"))
CONDITION_LIMIT = float(os.getenv("DROPLET_CONDITION_LIMIT", "1e12"))
DISK_TOLERANCE = float(os.getenv("DROPLET_DISK_TOLERANCE", "1e-10"))
SHAPE_TOLERANCE = float(os.getenv("DROPLET_SHAPE_TOLERANCE", "1e-8"))

# Linearization and decomposition
KERNEL_TOL = float(os.getenv("DROPLET_KERNEL_TOL", "1e-10"))
M_CONDITION_LIMIT = float(os.getenv("DROPLET_M_CONDITION_LIMIT", "1e8"))

COMMANDS = ("solve", "spectrum", "evolve", "stability", "sweep-mu", "validate")
FRAMES = ("lab", "comoving")
FORMATS = ("csv", "json")


######################################################################
# S C E N A R I O   C O N F I G U R A T I O N
######################################################################
@dataclass(frozen=True)
class ScenarioConfig:  # pylint: disable=too-many-instance-attributes
    """Fully resolved settings for one command run"""

    command: str = "solve"
    a: float = 1.0
    b: float = 1.0
    mu: float = 0.1
    volume: float = math.pi / 4
    n_modes: int = N_MODES
    n_grid: Optional[int] = None
    dt: float = DT
    t_end: float = T_END
    frame: str = "comoving"
    shape_file: Optional[str] = None
    shape: Optional[str] = None
    out_dir: str = OUT_DIR
    format: str = "csv"
    seed: int = 0
    record_every: int = 10
    kernel_tol: float = KERNEL_TOL
    tube_ratio: float = TUBE_RATIO
    mu_max: float = 6.0
    mu_samples: int = 13
    tail_fraction: float = 0.5
    eps: float = 1e-5
    halt_on_parabolicity_loss: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Checks the invariants of a resolved configuration"""
        if self.command not in COMMANDS:
            raise DataValidationError(f"Invalid command: {self.command!r}, expected one of {', '.join(COMMANDS)}")
        for key in ("a", "b", "volume", "dt", "kernel_tol", "mu_max", "eps"):
            if not getattr(self, key) > 0:
                raise DataValidationError(f"Invalid {key}: must be positive, got {getattr(self, key)}")
        if self.mu < 0:
            raise DataValidationError(f"Invalid mu: must be nonnegative, got {self.mu}")
        if self.t_end < 0:
            raise DataValidationError(f"Invalid t_end: must be nonnegative, got {self.t_end}")
        if self.n_modes < 4:
            raise DataValidationError(f"Invalid n_modes: must be at least 4, got {self.n_modes}")
        if self.n_grid is not None and self.n_grid < 2 * self.n_modes + 2:
            raise DataValidationError(f"Invalid n_grid: must be at least {2 * self.n_modes + 2}, got {self.n_grid}")
        if self.record_every < 1 or self.mu_samples < 2:
            raise DataValidationError("Invalid record_every/mu_samples: must be positive counts")
        if not 0 < self.tube_ratio < 1:
            raise DataValidationError(f"Invalid tube_ratio: must lie in (0, 1), got {self.tube_ratio}")
        if not 0 < self.tail_fraction < 1:
            raise DataValidationError(f"Invalid tail_fraction: must lie in (0, 1), got {self.tail_fraction}")
        if self.frame not in FRAMES:
            raise DataValidationError(f"Invalid frame: {self.frame!r}, expected one of {', '.join(FRAMES)}")
        if self.format not in FORMATS:
            raise DataValidationError(f"Invalid format: {self.format!r}, expected one of {', '.join(FORMATS)}")
        if self.shape_file is not None and not os.path.isfile(self.shape_file):
            raise DataValidationError(f"Invalid shape_file: {self.shape_file!r} does not exist")

    @property
    def grid_size(self) -> int:
        """Number of boundary grid points (4N unless given)"""
        return self.n_grid if self.n_grid is not None else 4 * self.n_modes

    def model_params(self) -> ModelParams:
        """Physical constants of this scenario"""
        return ModelParams(a=self.a, b=self.b, mu=self.mu, volume=self.volume)

    def serialize(self) -> dict:
        """Serializes the resolved configuration into a dictionary"""
        return asdict(self)

    def header_lines(self) -> list:
        """Renders the configuration as 'key=value' lines for artifact headers"""
        return [f"{key}={value}" for key, value in self.serialize().items()]


######################################################################
#  P A R S I N G
######################################################################
def _to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(converter):
    def convert(text):
        if text is None or str(text).strip().lower() in ("", "none"):
            return None
        return converter(text)

    return convert


_CONVERTERS = {
    "command": str,
    "a": float,
    "b": float,
    "mu": float,
    "volume": float,
    "n_modes": int,
    "n_grid": _optional(int),
    "dt": float,
    "t_end": float,
    "frame": str,
    "shape_file": _optional(str),
    "shape": _optional(str),
    "out_dir": str,
    "format": str,
    "seed": int,
    "record_every": int,
    "kernel_tol": float,
    "tube_ratio": float,
    "mu_max": float,
    "mu_samples": int,
    "tail_fraction": float,
    "eps": float,
    "halt_on_parabolicity_loss": lambda value: value if isinstance(value, bool) else _to_bool(str(value)),
}


def normalize_key(key: str) -> str:
    """Maps flag spellings (--n-modes, t-end) onto field names"""
    return key.strip().lstrip("-").replace("-", "_").lower()


def convert_value(key: str, value: Any) -> Any:
    """Converts a raw value for key, raising DataValidationError naming the key"""
    name = normalize_key(key)
    if name not in _CONVERTERS:
        raise DataValidationError(f"Unknown configuration key: {key!r}")
    if value is None:
        return None
    try:
        return _CONVERTERS[name](value)
    except (TypeError, ValueError) as error:
        raise DataValidationError(f"Invalid value for {name}: {value!r} ({error})") from error


def read_config_file(path: str) -> dict:
    """Reads a flat 'key = value' configuration file

    :param path: the file to read; '#' starts a comment
    :type path: str

    :return: converted values keyed by field name
    :rtype: dict

    """
    if not os.path.isfile(path):
        raise DataValidationError(f"Configuration file not found: {path!r}")
    values = {}
    with open(path, "r", encoding="utf-8") as stream:
        for number, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataValidationError(f"{path}:{number}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            name = normalize_key(key)
            values[name] = convert_value(name, value)
    return values


def parse_config(flags: Optional[Mapping[str, Any]] = None, config_file: Optional[str] = None) -> ScenarioConfig:
    """Resolves defaults < config file < flags into a ScenarioConfig

    :param flags: values given on the command line; None means 'not given'
    :param config_file: optional path of a 'key = value' file

    :return: the validated configuration
    :rtype: ScenarioConfig

    """
    resolved = {}
    if config_file:
        resolved.update(read_config_file(config_file))
    for key, value in (flags or {}).items():
        if value is None:
            continue
        name = normalize_key(key)
        resolved[name] = convert_value(name, value)
    return ScenarioConfig(**resolved)
