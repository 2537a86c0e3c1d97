"""Command-line interface."""

from semzk.cli.dispatch import cli_dispatch, load_run_config
from semzk.cli.parser import SUBCOMMANDS, build_parser

__all__ = ["cli_dispatch", "load_run_config", "build_parser", "SUBCOMMANDS"]
