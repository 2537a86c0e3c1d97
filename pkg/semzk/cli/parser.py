"""
Argument parsing for the ``semzk`` command line.
"""

import argparse
from typing import NoReturn

from semzk.utils.error_handlers import ValidationError

SUBCOMMANDS = (
    "simulate",
    "riesz-check",
    "ap-check",
    "carleman-check",
    "commutator-check",
    "persistence-check",
    "interp-check",
    "annulus-report",
    "uniqueness-experiment",
)

_HELP = {
    "simulate": "Evolve ZK or SEM initial data and write snapshots and invariants",
    "riesz-check": "Riesz identity, non-local ratios and an operator-norm search",
    "ap-check": "A_p constant of the regularised proof weight",
    "carleman-check": "Carleman ratios over sampled admissible test functions",
    "commutator-check": "Commutator form against its lower bound",
    "persistence-check": "Weighted persistence inequality for the linear operator",
    "interp-check": "Weighted interpolation inequality",
    "annulus-report": "Annulus norms and decay fits of a stored trajectory",
    "uniqueness-experiment": "Two SEM runs contrasted through their annulus decay",
}


class CliArgumentParser(argparse.ArgumentParser):
    """Raises ValidationError instead of printing usage and exiting."""

    def error(self, message: str) -> NoReturn:
        raise ValidationError(f"usage: {message}")


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="semzk", description="Pseudospectral ZK/SEM toolkit and estimate harness")
    subparsers = parser.add_subparsers(dest="command", parser_class=CliArgumentParser)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=_HELP[name], description=_HELP[name])
        sub.add_argument("--config", help="JSON run configuration")
        sub.add_argument("--out", help="Output directory (default: the config's out, else ./semzk_out)")
        sub.add_argument("--seed", type=int, help="Override the config seed")
        sub.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser
