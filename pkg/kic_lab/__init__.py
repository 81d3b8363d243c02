"""KIC Lab Package.

This package models end-to-end known-interference cancellation in multi-hop
line networks. It includes a symbolic signal algebra, a path-loss channel
model, the iterative cancellation engine, closed-form bounds, a Monte Carlo
check and the experiment drivers behind the ``kic-lab`` command.
"""

from .core.signal_algebra import SignalExpr, Term, TermKind, power_split
from .core.channel_model import ChannelModel, RoundsPolicy, ScenarioConfig, build_channel_matrix
from .core.kic_engine import Schedule, build_schedule, cancel_rounds_expanded, cancel_rounds_recursive
from .core.analysis import interference_bound, max_chain_length, min_rounds, sinr_lower_bound
from .core.monte_carlo import McConfig, run_monte_carlo
from .parsers.config_parser import ConfigParser, ExperimentConfig, parse_config
from .writers.csv_writer import CsvWriter, Dataset

__version__ = '0.1.0'

__all__ = [
    'SignalExpr',
    'Term',
    'TermKind',
    'power_split',
    'ChannelModel',
    'RoundsPolicy',
    'ScenarioConfig',
    'build_channel_matrix',
    'Schedule',
    'build_schedule',
    'cancel_rounds_expanded',
    'cancel_rounds_recursive',
    'interference_bound',
    'max_chain_length',
    'min_rounds',
    'sinr_lower_bound',
    'McConfig',
    'run_monte_carlo',
    'ConfigParser',
    'ExperimentConfig',
    'parse_config',
    'CsvWriter',
    'Dataset',
]
