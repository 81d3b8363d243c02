#!/usr/bin/env python3

import argparse
import logging
import os
import sys
from typing import List, Optional

from .core.experiments import COMMANDS, execute
from .errors import ConfigError, ConsistencyError, FeasibilityError, KicLabError
from .parsers.config_parser import ExperimentConfig, parse_config

OUTPUT_DIR_ENV = 'KIC_LAB_OUTPUT_DIR'

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INCONSISTENT = 4


def load_config(config_path: Optional[str]) -> ExperimentConfig:
    """Load configuration from a JSON file, or the defaults when no file is given."""
    if config_path is None:
        return ExperimentConfig()
    return parse_config(config_path)


def setup_logging(level: str = 'INFO') -> None:
    """Configure logging."""
    numeric = getattr(logging, level.upper(), None)
    if not isinstance(numeric, int):
        raise ConfigError(f"Unknown log level '{level}'")
    logging.basicConfig(
        level=numeric,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description='Known-interference cancellation experiments for multi-hop line networks'
    )
    parser.add_argument('command', choices=sorted(COMMANDS), help='Experiment to run')
    parser.add_argument('-c', '--config', help='Configuration file (built-in defaults when omitted)')
    parser.add_argument('-o', '--out', help=f'Output directory (overrides ${OUTPUT_DIR_ENV} and the config)')
    parser.add_argument('--seed', type=int, help='Monte Carlo seed (overrides the config)')
    parser.add_argument('-l', '--log-level', default='INFO', help='Logging level')
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = parse_args(argv)
    try:
        setup_logging(args.log_level)
        config = load_config(args.config)
        output_dir = args.out or os.environ.get(OUTPUT_DIR_ENV)
        config = config.with_overrides(output_dir=output_dir, seed=args.seed)

        paths = execute(args.command, config)
    except ConfigError as e:
        logging.error(str(e))
        return EXIT_CONFIG
    except FeasibilityError as e:
        logging.error(str(e))
        return EXIT_INFEASIBLE
    except ConsistencyError as e:
        logging.error(str(e))
        return EXIT_INCONSISTENT
    except KicLabError as e:
        logging.error(str(e))
        return EXIT_CONFIG

    logging.info(f"{args.command}: wrote {len(paths)} files to {config.output_dir}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
