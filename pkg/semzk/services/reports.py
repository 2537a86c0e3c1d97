"""
Report serialization: JSON for reports, CSV for tabular series.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from pydantic import BaseModel

from semzk.models.solver import Trajectory
from semzk.models.uniqueness import AnnulusReport
from semzk.services.snapshot_io import write_snapshot
from semzk.utils.error_handlers import create_error_report

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

INVARIANT_COLUMNS = ("t", "mass", "l2", "hamiltonian")
ANNULUS_COLUMNS = ("R", "a_interval", "a_initial", "a_final")


def _ensure_dir(out: PathLike) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_json(report: Union[BaseModel, Dict[str, Any]], path: PathLike) -> Path:
    """Write a report with sorted keys so equal reports are equal files."""
    path = Path(path)
    _ensure_dir(path.parent)
    payload = report.model_dump(mode="json") if isinstance(report, BaseModel) else report
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")
    logger.debug(f"Wrote {path}")
    return path


def _write_rows(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    _ensure_dir(path.parent)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if v is not None else "" for v in row])
    return path


def write_invariants_csv(trajectory: Trajectory, path: PathLike) -> Path:
    """One row (t, mass, l2, hamiltonian) per snapshot; hamiltonian is blank when undefined."""
    rows = ((r.t, r.mass, r.l2, r.hamiltonian) for r in trajectory.invariant_log)
    return _write_rows(path, INVARIANT_COLUMNS, rows)


def write_annulus_csv(report: AnnulusReport, path: PathLike) -> Path:
    rows = zip(report.radii, report.a_values, report.a_initial, report.a_final)
    return _write_rows(path, ANNULUS_COLUMNS, rows)


def write_trajectory(trajectory: Trajectory, out: PathLike) -> List[Path]:
    """``snapshot_NNNNN.sem2`` for every snapshot, numbered in time order."""
    out = _ensure_dir(out)
    return [
        write_snapshot(out / f"snapshot_{i:05d}.sem2", field, t)
        for i, (field, t) in enumerate(zip(trajectory.snapshots, trajectory.times))
    ]


def write_error(error: Exception, out: PathLike) -> Path:
    """``error.json`` next to the outputs of a failed run."""
    return write_json(create_error_report(error), Path(out) / "error.json")
