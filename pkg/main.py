"""Command-line entry point for singular elliptic eigenvalue runs."""
import argparse
import logging
import sys
from typing import List, Optional

from src.runner import COMMAND_RUNNERS, run_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per run type."""
    parser = argparse.ArgumentParser(
        description="Dirichlet solves, principal eigenvalues and property checks "
        "for singular fully nonlinear elliptic operators."
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--output-dir", help="Override output.dir from the config")
    parser.add_argument(
        "command",
        choices=sorted(COMMAND_RUNNERS) + ["run"],
        help="What to run; 'run' uses run.command from the config",
    )
    parser.add_argument("config", help="Path to a flat 'section.key = value' config file")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    command = None if args.command == "run" else args.command
    return run_config(args.config, command=command, output_dir=args.output_dir)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Run stopped by user")
        sys.exit(1)
