"""Command dispatch for configuration-driven runs."""
import copy
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .config import domain_spec, load_config, operator_spec, solve_config
from .dirichlet import solve_dirichlet
from .eigen import principal_eigenvalue
from .exceptions import ConfigurationError, SingularEigenError
from .field_io import write_csv, write_field
from .grid import build_domain
from .models import RunConfig
from .verify import PASS, SuiteContext, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

Row = Dict[str, Any]


def _case(config: RunConfig) -> str:
    return f"{config['domain']['shape']}-{config['operator']['kind']}"


def _output(config: RunConfig, suffix: str) -> Path:
    return Path(config["output_dir"]) / f"{config['output_prefix']}_{suffix}"


def _solve_row(config: RunConfig, write_fields: bool = True) -> Tuple[Row, bool]:
    """Run one Dirichlet solve; returns (row, success)."""
    row: Row = {
        "case": _case(config),
        "n": config["grid_n"],
        "lambda": config["problem_lambda"],
        "converged": False,
        "iterations": 0,
        "residual": float("nan"),
        "delta": float("nan"),
        "sup_norm": float("nan"),
        "status": "failed",
    }
    try:
        g = build_domain(domain_spec(config), config["grid_n"])
        u, report = solve_dirichlet(
            operator_spec(config),
            g,
            g.field(config["problem_f"]),
            config["problem_lambda"],
            solve_config(config),
        )
    except ConfigurationError:
        raise
    except SingularEigenError as e:
        logger.error(f"Solve failed: {e}", extra={"case": row["case"]})
        return row, False

    row.update(
        converged=report["converged"],
        iterations=report["iterations"],
        residual=report["residual"],
        delta=report["delta"],
        sup_norm=g.sup_norm(u),
        status="ok" if report["converged"] else "failed",
    )
    if write_fields:
        write_field(u, g, _output(config, "u.field"))
    return row, bool(report["converged"])


def _eig_row(config: RunConfig, write_fields: bool = True) -> Tuple[Row, bool]:
    """Run one eigenvalue computation; returns (row, success)."""
    eigen = config["eigen"]
    bracket = None
    if eigen["lambda_lo"] is not None and eigen["lambda_hi"] is not None:
        bracket = (eigen["lambda_lo"], eigen["lambda_hi"])
    try:
        g = build_domain(domain_spec(config), config["grid_n"])
        result = principal_eigenvalue(
            operator_spec(config),
            g,
            solve_config(config),
            method=eigen["method"],
            bracket=bracket,
        )
    except ConfigurationError:
        raise
    except SingularEigenError as e:
        logger.error(f"Eigenvalue computation failed: {e}", extra={"case": _case(config)})
        nan = float("nan")
        return {"lambda": nan, "residual": nan, "cw_lower": nan, "iterations": 0, "method": "failed"}, False

    if write_fields:
        write_field(result["eigenfunction"], g, _output(config, "phi.field"))
    return {
        "lambda": result["eigenvalue"],
        "residual": result["residual"],
        "cw_lower": result["cw_lower"],
        "iterations": result["iterations"],
        "method": result["method"],
    }, True


def run_solve(config: RunConfig) -> int:
    """Solve the Dirichlet problem and write the field and report row."""
    row, ok = _solve_row(config)
    write_csv([row], "solve", _output(config, "solve.csv"))
    return EXIT_OK if ok else EXIT_FAILURE


def run_eig(config: RunConfig) -> int:
    """Compute λ⁺ and write the result row and eigenfunction."""
    row, ok = _eig_row(config)
    write_csv([row], "eig", _output(config, "eig.csv"))
    if ok:
        logger.info(f"lambda = {row['lambda']:.10g}", extra={"case": _case(config)})
    return EXIT_OK if ok else EXIT_FAILURE


def run_verify(config: RunConfig) -> int:
    """Run the configured verify suite; exit 0 only if every verdict passes."""
    ctx = SuiteContext(
        spec=operator_spec(config),
        domain=domain_spec(config),
        n=config["grid_n"],
        cfg=solve_config(config),
        seeds=tuple(config["verify_seeds"]),
        refine=config["verify_refine"],
    )
    reports = run_suite(config["verify_suite"], ctx)
    rows = [{key: r[key] for key in ("check", "case", "n", "measured", "threshold", "verdict")} for r in reports]
    write_csv(rows, "verify", _output(config, "verify.csv"))
    failed = [r for r in reports if r["verdict"] != PASS]
    logger.info(
        f"Verify suite '{config['verify_suite']}': {len(reports) - len(failed)}/{len(reports)} passed",
        extra={"case": _case(config)},
    )
    return EXIT_OK if not failed else EXIT_FAILURE


def with_parameter(config: RunConfig, parameter: str, value: float) -> RunConfig:
    """Copy of ``config`` with one sweep parameter replaced."""
    updated = copy.deepcopy(config)
    if parameter == "problem.lambda":
        updated["problem_lambda"] = float(value)
    elif parameter == "grid.n":
        if not float(value).is_integer():
            raise ConfigurationError(f"grid.n sweep values must be integers, got {value}")
        updated["grid_n"] = int(value)
    elif parameter == "operator.alpha":
        updated["operator"]["alpha"] = float(value)
    elif parameter == "domain.scale":
        updated["domain"]["scale"] = float(value)
    else:
        raise ConfigurationError(f"Unknown sweep.parameter: {parameter}")
    return updated


def run_sweep(config: RunConfig) -> int:
    """Repeat a solve or eig run over the declared parameter values."""
    parameter = config["sweep_parameter"]
    if parameter is None:
        raise ConfigurationError("sweep needs sweep.parameter")
    command = config["sweep_command"]
    rows: List[Row] = []
    status = EXIT_OK
    for value in config["sweep_values"]:
        point = with_parameter(config, parameter, value)
        row, ok = _solve_row(point, False) if command == "solve" else _eig_row(point, False)
        rows.append({"parameter": parameter, "value": value, **row})
        if not ok:
            status = EXIT_FAILURE
        logger.debug(f"Sweep point {parameter}={value} done", extra={"ok": ok})
    write_csv(rows, f"sweep_{command}", _output(config, "sweep.csv"))
    return status


COMMAND_RUNNERS = {
    "solve": run_solve,
    "eig": run_eig,
    "verify": run_verify,
    "sweep": run_sweep,
}


def run_config(
    path: Union[str, Path],
    command: Optional[str] = None,
    output_dir: Optional[str] = None,
) -> int:
    """
    Load a configuration file and run its command.

    Args:
        path: Configuration file
        command: Command overriding ``run.command``
        output_dir: Directory overriding ``output.dir``

    Returns:
        0 if every run succeeded and every verdict passed, 1 on numerical or
        verdict failure, 2 on configuration errors
    """
    try:
        config = load_config(path)
        if command is not None:
            config["command"] = command
        if output_dir is not None:
            config["output_dir"] = output_dir
        if config["command"] not in COMMAND_RUNNERS:
            raise ConfigurationError(f"Unknown command: {config['command']}")
        logger.info(f"Running '{config['command']}' from {path}")
        return COMMAND_RUNNERS[config["command"]](config)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except SingularEigenError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_FAILURE
    except OSError as e:
        logger.error(f"Cannot write results: {e}")
        return EXIT_FAILURE
