"""Diagnostics CSV and CHF1 field snapshots.

CHF1 layout, little-endian throughout::

    magic  4s   b"CHF1"
    version u32
    n       u32
    step    u64
    tau     f64
    nu      f64
    payload n*n f64, row-major (values[j1, j2])
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness import RunDiagnostics, StepRecord

MAGIC = b"CHF1"
VERSION = 1
_HEADER = struct.Struct("<4sIIQdd")

CSV_HEADER = [
    "step", "time", "mass", "E", "E1_quad", "E1_pot", "E1", "linf", "h1", "hk0",
    "inc_l2", "cert_lhs", "cert_rhs", "cert_ok",
]
_FLOAT_COLUMNS = CSV_HEADER[1:-1]


class SnapshotFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    n: int
    step: int
    tau: float
    nu: float
    values: np.ndarray
    version: int = VERSION


def encode_snapshot(values: np.ndarray, step: int, tau: float, nu: float) -> bytes:
    v = np.asarray(values, dtype="<f8")
    n = v.shape[0]
    if v.shape != (n, n):
        raise ValueError(f"snapshot payload must be square, got {v.shape}")
    return _HEADER.pack(MAGIC, VERSION, n, step, tau, nu) + np.ascontiguousarray(v).tobytes()


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"truncated header ({len(data)} bytes)")
    magic, version, n, step, tau, nu = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    payload = data[_HEADER.size :]
    if len(payload) != n * n * 8:
        raise SnapshotFormatError(f"payload is {len(payload)} bytes, expected {n * n * 8} for n={n}")
    values = np.frombuffer(payload, dtype="<f8").reshape(n, n).astype(float)
    return Snapshot(n, step, tau, nu, values, version)


def write_snapshot(path: str | Path, values: np.ndarray, step: int, tau: float, nu: float) -> None:
    Path(path).write_bytes(encode_snapshot(values, step, tau, nu))


def read_snapshot(path: str | Path) -> Snapshot:
    try:
        return decode_snapshot(Path(path).read_bytes())
    except SnapshotFormatError as e:
        raise SnapshotFormatError(f"{path}: {e}") from None


def _fmt(x: float) -> str:
    # repr gives the shortest string that round-trips
    return repr(float(x))


def _cert_text(rec: StepRecord) -> str:
    if rec.unstable:
        return "unstable"
    if rec.cert_ok is None:
        return "indeterminate"
    return "true" if rec.cert_ok else "false"


def diagnostics_rows(d: RunDiagnostics) -> list[list[str]]:
    return [[str(r.step)] + [_fmt(getattr(r, c)) for c in _FLOAT_COLUMNS] + [_cert_text(r)] for r in d.records]


def write_diagnostics(d: RunDiagnostics, path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            w.writerows(diagnostics_rows(d))
    except OSError as e:
        raise OSError(f"cannot write diagnostics to {path}: {e.strerror or e}") from e


def read_diagnostics(path: str | Path) -> list[dict]:
    """Parse a diagnostics CSV back into dicts of floats (``cert_ok`` stays text)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for line in reader:
            row = {"step": int(line[0]), "cert_ok": line[-1]}
            row.update({c: float(v) for c, v in zip(_FLOAT_COLUMNS, line[1:-1])})
            rows.append(row)
    return rows


def write_table(path: str | Path, header: list[str], rows: list[list]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])


def finite_or_none(x: float):
    return x if math.isfinite(x) else None
