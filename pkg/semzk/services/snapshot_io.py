"""
Binary field snapshots.

Layout, all little-endian: magic ``SEM2``, uint32 version (1), uint64 nx, ny,
float64 Lx, Ly, t, then nx*ny float64 samples in iy*nx + ix order.
"""

import logging
import struct
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

from semzk.models.grid import Field, Grid2D
from semzk.models.solver import ModelKind, Trajectory
from semzk.services.sem_solver import conserved
from semzk.utils.error_handlers import InsufficientDataError, SnapshotFormatError, ValidationError

logger = logging.getLogger(__name__)

MAGIC = b"SEM2"
VERSION = 1
_HEADER = struct.Struct("<4sIQQddd")
HEADER_SIZE = _HEADER.size  # 48 bytes
_PAYLOAD_DTYPE = np.dtype("<f8")

PathLike = Union[str, Path]


class SnapshotRecord(NamedTuple):
    field: Field
    t: float


def encode_snapshot(field: Field, t: float = 0.0) -> bytes:
    grid = field.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny, grid.lx, grid.ly, float(t))
    return header + np.ascontiguousarray(field.data, dtype=_PAYLOAD_DTYPE).tobytes()


def decode_snapshot(raw: bytes, source: str = "<bytes>") -> SnapshotRecord:
    if len(raw) < HEADER_SIZE:
        raise SnapshotFormatError("truncated payload", details={"path": source, "size": len(raw)})
    magic, version, nx, ny, lx, ly, t = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise SnapshotFormatError("bad magic", details={"path": source, "magic": magic.hex()})
    if version != VERSION:
        raise SnapshotFormatError("unsupported version", details={"path": source, "version": version})
    expected = HEADER_SIZE + 8 * nx * ny
    if len(raw) < expected:
        raise SnapshotFormatError("truncated payload", details={"path": source, "size": len(raw), "expected": expected})
    if len(raw) > expected:
        raise SnapshotFormatError("trailing bytes after payload", details={"path": source, "size": len(raw), "expected": expected})
    grid = Grid2D(nx=nx, ny=ny, lx=lx, ly=ly)
    data = np.frombuffer(raw, dtype=_PAYLOAD_DTYPE, count=nx * ny, offset=HEADER_SIZE)
    return SnapshotRecord(field=Field(grid=grid, data=data.reshape(ny, nx)), t=float(t))


def write_snapshot(path: PathLike, field: Field, t: float = 0.0) -> Path:
    """Write one snapshot; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(field, t))
    logger.debug(f"Wrote snapshot {path} (t={t:g})")
    return path


def read_snapshot(path: PathLike) -> SnapshotRecord:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise SnapshotFormatError(f"cannot read snapshot: {e}", details={"path": str(path)})
    return decode_snapshot(raw, str(path))


def read_trajectory(paths: Sequence[PathLike], model: ModelKind = ModelKind.LINEARIZED) -> Trajectory:
    """Snapshot files in time order as a trajectory; dt is the smallest time gap."""
    if len(paths) < 2:
        raise InsufficientDataError("a trajectory needs at least 2 snapshot files")
    records = [read_snapshot(p) for p in paths]
    grid = records[0].field.grid
    if any(r.field.grid != grid for r in records):
        raise SnapshotFormatError("snapshot files use different grids")
    times = [r.t for r in records]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError("snapshot times must be strictly increasing")
    return Trajectory(
        model=model,
        grid=grid,
        dt=min(b - a for a, b in zip(times, times[1:])),
        times=times,
        snapshots=[r.field for r in records],
        invariant_log=[conserved(r.field, model, r.t) for r in records],
    )
