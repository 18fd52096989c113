"""Configuration loading and validation.

Run configurations are flat text files of ``section.key = value`` lines.
``#`` starts a comment; blank lines are ignored. Lists are comma separated.
"""
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from .dirichlet import SolveConfig
from .exceptions import ConfigurationError, InvalidDomainError, InvalidOperatorError
from .grid import DomainSpec
from .models import RunConfig
from .operators import OperatorSpec
from .verify import SUITES

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "eig", "verify", "sweep")
SWEEP_COMMANDS = ("solve", "eig")
SWEEP_PARAMETERS = ("problem.lambda", "grid.n", "operator.alpha", "domain.scale")
EIGEN_METHODS = ("power", "bisection")


def _optional_float(value: Any) -> Optional[float]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    return float(value)


def _optional_str(value: Any) -> Optional[str]:
    if value is None:
        return None
    text = str(value).strip()
    return None if text.lower() in ("", "none") else text


def _boolean(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1", "on"):
        return True
    if text in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _integer(value: Any) -> int:
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"not an integer: {value!r}")
    return int(number)


def _float_list(value: Any) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(t) for t in str(value).split(",") if t.strip()]


def _int_list(value: Any) -> List[int]:
    if isinstance(value, (list, tuple)):
        return [_integer(v) for v in value]
    return [_integer(t) for t in str(value).split(",") if t.strip()]


Converter = Callable[[Any], Any]

# key -> (converter, default)
KEYS: Dict[str, Tuple[Converter, Any]] = {
    "run.command": (str, "eig"),
    "domain.shape": (str, "interval"),
    "domain.length": (float, 1.0),
    "domain.width": (float, 1.0),
    "domain.radius": (float, 1.0),
    "domain.inner_radius": (float, 0.5),
    "domain.origin_x": (float, 0.0),
    "domain.origin_y": (float, 0.0),
    "domain.center_x": (float, 0.0),
    "domain.center_y": (float, 0.0),
    "domain.mask_path": (_optional_str, None),
    "domain.scale": (float, 1.0),
    "grid.n": (_integer, 64),
    "grid.stencil_order": (_integer, 2),
    "operator.kind": (str, "pucci_plus"),
    "operator.a": (float, 1.0),
    "operator.A": (float, 1.0),
    "operator.q": (float, 0.0),
    "operator.alpha": (float, 0.0),
    "drift.hx": (float, 0.0),
    "drift.hy": (float, 0.0),
    "c.constant": (float, 0.0),
    "problem.f": (float, -1.0),
    "problem.lambda": (float, 0.0),
    "solver.delta_min": (_optional_float, None),
    "solver.damping": (float, 0.5),
    "solver.tol": (float, 1e-7),
    "solver.max_iter": (_integer, 500),
    "solver.max_inner": (_integer, 50),
    "solver.cap": (_optional_float, None),
    "solver.cap_factor": (float, 10.0),
    "solver.anderson": (_integer, 5),
    "solver.epsilon": (float, 0.0),
    "eigen.method": (str, "power"),
    "eigen.tol": (float, 1e-6),
    "eigen.max_iter": (_integer, 200),
    "eigen.lambda_lo": (_optional_float, None),
    "eigen.lambda_hi": (_optional_float, None),
    "verify.suite": (str, "all"),
    "verify.seeds": (_int_list, [0, 1, 2]),
    "verify.refine": (_boolean, False),
    "sweep.command": (str, "eig"),
    "sweep.parameter": (_optional_str, None),
    "sweep.values": (_float_list, []),
    "output.dir": (str, "./results"),
    "output.prefix": (str, "run"),
}


def parse_config(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse flat config text into converted values.

    Args:
        text: File contents
        source: Name used in error messages

    Returns:
        Mapping of the keys present to converted values

    Raises:
        ConfigurationError: On malformed lines, unknown or duplicate keys and
            unconvertible values, with the 1-based line number
    """
    values: Dict[str, Any] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigurationError(f"{source}:{number}: unknown key '{key}'")
        if key in values:
            raise ConfigurationError(f"{source}:{number}: duplicate key '{key}'")
        converter = KEYS[key][0]
        try:
            values[key] = converter(value)
        except ValueError as e:
            raise ConfigurationError(f"{source}:{number}: invalid value for '{key}': {e}") from e
    return values


def load_config(config_path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a run configuration file.

    Args:
        config_path: Path to the configuration file

    Returns:
        Validated run configuration

    Raises:
        ConfigurationError: If the file is missing, malformed or invalid
    """
    path = Path(config_path)
    try:
        text = path.read_text()
    except FileNotFoundError as e:
        raise ConfigurationError(f"Configuration file not found: {path}") from e
    except OSError as e:
        raise ConfigurationError(f"Cannot read configuration file {path}: {e}") from e
    return validate_config(parse_config(text, str(path)))


def validate_config(config_data: Dict[str, Any]) -> RunConfig:
    """
    Validate configuration data and apply defaults.

    Args:
        config_data: Flat mapping of ``section.key`` to raw or converted values

    Returns:
        Validated configuration with defaults applied

    Raises:
        ConfigurationError: If a key is unknown or a value is out of range
    """
    unknown = sorted(set(config_data) - set(KEYS))
    if unknown:
        raise ConfigurationError(f"Unknown configuration keys: {', '.join(unknown)}")

    merged: Dict[str, Any] = {}
    for key, (converter, default) in KEYS.items():
        if key in config_data:
            try:
                merged[key] = converter(config_data[key])
            except (TypeError, ValueError) as e:
                raise ConfigurationError(f"Invalid value for '{key}': {e}") from e
        else:
            merged[key] = list(default) if isinstance(default, list) else default

    config: RunConfig = {
        "command": merged["run.command"],
        "domain": {
            "shape": merged["domain.shape"],
            "length": merged["domain.length"],
            "width": merged["domain.width"],
            "radius": merged["domain.radius"],
            "inner_radius": merged["domain.inner_radius"],
            "origin": (merged["domain.origin_x"], merged["domain.origin_y"]),
            "center": (merged["domain.center_x"], merged["domain.center_y"]),
            "mask_path": merged["domain.mask_path"],
            "scale": merged["domain.scale"],
        },
        "grid_n": merged["grid.n"],
        "stencil_order": merged["grid.stencil_order"],
        "operator": {
            "kind": merged["operator.kind"],
            "a": merged["operator.a"],
            "A": merged["operator.A"],
            "q": merged["operator.q"],
            "alpha": merged["operator.alpha"],
        },
        "drift": [merged["drift.hx"], merged["drift.hy"]],
        "c_constant": merged["c.constant"],
        "problem_f": merged["problem.f"],
        "problem_lambda": merged["problem.lambda"],
        "solver": {
            "delta_min": merged["solver.delta_min"],
            "damping": merged["solver.damping"],
            "tol": merged["solver.tol"],
            "max_iter": merged["solver.max_iter"],
            "max_inner": merged["solver.max_inner"],
            "cap": merged["solver.cap"],
            "cap_factor": merged["solver.cap_factor"],
            "anderson_depth": merged["solver.anderson"],
            "epsilon": merged["solver.epsilon"],
        },
        "eigen": {
            "method": merged["eigen.method"],
            "tol": merged["eigen.tol"],
            "max_iter": merged["eigen.max_iter"],
            "lambda_lo": merged["eigen.lambda_lo"],
            "lambda_hi": merged["eigen.lambda_hi"],
        },
        "verify_suite": merged["verify.suite"],
        "verify_seeds": merged["verify.seeds"],
        "verify_refine": merged["verify.refine"],
        "sweep_command": merged["sweep.command"],
        "sweep_parameter": merged["sweep.parameter"],
        "sweep_values": merged["sweep.values"],
        "output_dir": merged["output.dir"],
        "output_prefix": merged["output.prefix"],
    }
    _check_choices(config)

    # Build the domain objects once so their invariants are enforced here
    domain_spec(config)
    operator_spec(config)
    solve_config(config)

    logger.info(
        f"Configuration loaded for command '{config['command']}'",
        extra={"shape": config["domain"]["shape"], "n": config["grid_n"]},
    )
    return config


def _check_choices(config: RunConfig) -> None:
    if config["command"] not in COMMANDS:
        raise ConfigurationError(
            f"run.command must be one of {', '.join(COMMANDS)}, got '{config['command']}'"
        )
    if config["grid_n"] < 4:
        raise ConfigurationError(f"grid.n must be at least 4, got {config['grid_n']}")
    if config["stencil_order"] not in (1, 2, 3):
        raise ConfigurationError(f"grid.stencil_order must be 1, 2 or 3, got {config['stencil_order']}")
    if config["eigen"]["method"] not in EIGEN_METHODS:
        raise ConfigurationError(f"Unknown eigen.method: {config['eigen']['method']}")
    lo, hi = config["eigen"]["lambda_lo"], config["eigen"]["lambda_hi"]
    if (lo is None) != (hi is None):
        raise ConfigurationError("eigen.lambda_lo and eigen.lambda_hi must be set together")
    if lo is not None and hi is not None and not lo < hi:
        raise ConfigurationError(f"eigen.lambda_lo must be below eigen.lambda_hi: {lo}, {hi}")
    suite = config["verify_suite"]
    if suite != "all" and suite not in SUITES:
        raise ConfigurationError(f"Unknown verify.suite: {suite}")
    if not config["verify_seeds"]:
        raise ConfigurationError("verify.seeds must not be empty")
    if config["sweep_command"] not in SWEEP_COMMANDS:
        raise ConfigurationError(f"sweep.command must be solve or eig, got {config['sweep_command']}")
    parameter = config["sweep_parameter"]
    if parameter is not None and parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(f"Unknown sweep.parameter: {parameter}")
    if config["command"] == "sweep" and parameter is None:
        raise ConfigurationError("sweep needs sweep.parameter")


def domain_spec(config: RunConfig) -> DomainSpec:
    """DomainSpec described by a run configuration."""
    try:
        return DomainSpec(**config["domain"])
    except InvalidDomainError as e:
        raise ConfigurationError(f"Invalid domain: {e}") from e


def operator_spec(config: RunConfig) -> OperatorSpec:
    """OperatorSpec described by a run configuration."""
    try:
        return OperatorSpec(
            drift=tuple(config["drift"]),
            c=config["c_constant"],
            **config["operator"],
        )
    except InvalidOperatorError as e:
        raise ConfigurationError(f"Invalid operator: {e}") from e


def solve_config(config: RunConfig) -> SolveConfig:
    """SolveConfig described by a run configuration."""
    solver = config["solver"]
    eigen = config["eigen"]
    return SolveConfig(
        delta_min=solver["delta_min"],
        damping=solver["damping"],
        tol=solver["tol"],
        max_iter=solver["max_iter"],
        max_inner=solver["max_inner"],
        cap=solver["cap"],
        cap_factor=solver["cap_factor"],
        epsilon=solver["epsilon"],
        anderson_depth=solver["anderson_depth"],
        stencil_order=config["stencil_order"],
        eig_tol=eigen["tol"],
        max_eig_iter=eigen["max_iter"],
    )
