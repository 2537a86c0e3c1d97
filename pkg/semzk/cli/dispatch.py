"""
Command-line dispatch: parse, load the run config, run one subcommand, map errors to exit codes.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import pydantic

from semzk.cli.commands import COMMANDS
from semzk.cli.parser import build_parser
from semzk.models.run_config import RunConfig
from semzk.services.reports import write_error
from semzk.utils.config import configure, get_settings, reset_settings
from semzk.utils.error_handlers import (
    EXIT_OK,
    ErrorContext,
    SemzkError,
    ValidationError,
    format_reason,
    from_pydantic,
)
from semzk.utils.logger import setup_logging
from semzk.utils.performance_monitor import performance_monitor

logger = logging.getLogger(__name__)

DEFAULT_OUT = "semzk_out"


def _read_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        raw = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"cannot read config {path}: {e.strerror or e}")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ValidationError(f"config {path} is not valid JSON: {e.msg} at line {e.lineno}")
    if not isinstance(data, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    return data


def load_run_config(path: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Validated run configuration; ``seed`` overrides the file's value."""
    data = _read_config(path)
    if seed is not None:
        data["seed"] = seed
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        raise from_pydantic(exc, "config")


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    out: Optional[Path] = None
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        if args.command is None:
            raise ValidationError("missing subcommand")
        cfg = load_run_config(args.config, args.seed)
        out = Path(args.out or cfg.out or DEFAULT_OUT)
        try:
            configure(**cfg.tolerances.overrides())
        except pydantic.ValidationError as exc:
            raise from_pydantic(exc, "tolerances")

        setup_logging(log_level=args.log_level, log_file=str(out / "run.log"))
        status = get_settings().validate_configuration()
        for warning in status["warnings"]:
            logger.warning(warning)
        if not status["valid"]:
            raise ValidationError("; ".join(status["errors"]))

        logger.info(f"{args.command}: seed {cfg.seed}, grid {cfg.grid.identifier}, out {out}")
        with ErrorContext(args.command):
            written = COMMANDS[args.command](cfg, out)
        logger.info(f"{args.command} wrote {len(written)} files to {out}")
        for name, stats in performance_monitor.summary().items():
            logger.debug(f"timing {name}: {stats}")
        return EXIT_OK

    except SemzkError as e:
        sys.stderr.write(format_reason(e) + "\n")
        logger.error(f"Run failed: {e.error_code}: {e.message}")
        if out is not None:
            try:
                write_error(e, out)
            except OSError as write_failure:
                logger.error(f"Could not write error.json: {write_failure}")
        return e.exit_code
    finally:
        reset_settings()
