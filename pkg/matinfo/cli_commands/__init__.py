"""Registry for CLI subcommands."""

from .etf_command import EtfCommand
from .interpolate_command import InterpolateCommand
from .metric_command import MetricCommand
from .nc_check_command import NcCheckCommand
from .train_command import TrainCommand
from .verify_command import VerifyCommand

COMMANDS = (
    MetricCommand,
    EtfCommand,
    NcCheckCommand,
    VerifyCommand,
    TrainCommand,
    InterpolateCommand,
)

__all__ = [
    "COMMANDS",
    "EtfCommand",
    "InterpolateCommand",
    "MetricCommand",
    "NcCheckCommand",
    "TrainCommand",
    "VerifyCommand",
]
