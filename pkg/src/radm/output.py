"""Diagnostic CSV files, binary field snapshots and output-directory locks.

Snapshot layout (all little-endian)::

    offset  size  field
    0       8     magic b"RADMSNP1"
    8       1     endianness marker, 0x01
    9       4     n_per_axis (uint32)
    13      8     t (float64)
    21      8     alpha (float64)
    29      8     theta (float64)
    37      4     deconv_order (uint32)
    41      1     payload_kind: 0 spectral, 1 physical

Spectral payload: every mode k of the grid, with each component running
over -n/2+1 .. n/2 and k1 slowest, k3 fastest; per mode the three complex
components as (re, im) float64 pairs.  Physical payload: grid points
x_j = 2π i_j / n with i1 slowest, three float64 components per point.
"""

from __future__ import annotations

import csv
import struct
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import filelock
import numpy as np

from .diagnostics import DiagRecord
from .errors import OutputLockedError, SnapshotError
from .spectral import SpectralVectorField, WaveGrid, symmetry_violation, to_physical, to_spectral

CSV_COLUMNS = (
    "t",
    "model_energy",
    "model_dissipation",
    "kinetic_energy",
    "norm_theta",
    "norm_1_plus_theta",
    "div_residual",
    "orth_defect",
    "forcing_power",
)
_RECORD_FIELDS = DiagRecord.field_names()

MAGIC = b"RADMSNP1"
LITTLE_ENDIAN = 0x01
SPECTRAL, PHYSICAL = 0, 1
_HEADER = struct.Struct("<8sBIdddIB")
HEADER_SIZE = _HEADER.size
_SYMMETRY_TOL = 1e-10


def write_diag_csv(records, path: str | Path) -> None:
    """Write records as CSV; floats use repr(), the shortest exact decimal."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(CSV_COLUMNS)
            for rec in records:
                out.writerow([repr(float(getattr(rec, name))) for name in _RECORD_FIELDS])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write diagnostics: {exc.strerror}", str(path)) from exc


def read_diag_csv(path: str | Path) -> list[DiagRecord]:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header")
    return [DiagRecord(*(float(x) for x in row)) for row in rows[1:]]


@dataclass(frozen=True)
class SnapshotHeader:
    n_per_axis: int
    t: float
    alpha: float
    theta: float
    deconv_order: int
    payload_kind: int = SPECTRAL

    def pack(self) -> bytes:
        return _HEADER.pack(MAGIC, LITTLE_ENDIAN, self.n_per_axis, self.t, self.alpha,
                            self.theta, self.deconv_order, self.payload_kind)

    @classmethod
    def unpack(cls, blob: bytes) -> "SnapshotHeader":
        if len(blob) < HEADER_SIZE:
            raise SnapshotError(f"truncated header: {len(blob)} of {HEADER_SIZE} bytes")
        magic, endian, n, t, alpha, theta, order, kind = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}")
        if endian != LITTLE_ENDIAN:
            raise SnapshotError(f"unsupported endianness marker {endian:#x}")
        if kind not in (SPECTRAL, PHYSICAL):
            raise SnapshotError(f"unknown payload kind {kind}")
        if n < 8 or n % 2:
            raise SnapshotError(f"invalid n_per_axis {n}")
        return cls(n, t, alpha, theta, order, kind)

    @property
    def payload_size(self) -> int:
        per_entry = 6 if self.payload_kind == SPECTRAL else 3
        return self.n_per_axis ** 3 * per_entry * 8


@dataclass(frozen=True)
class Snapshot:
    header: SnapshotHeader
    field: SpectralVectorField


def _lex_order(n: int) -> np.ndarray:
    """FFT-array indices of k = -n/2+1 .. n/2 in increasing order."""
    return np.arange(-n // 2 + 1, n // 2 + 1) % n


def write_snapshot(field: SpectralVectorField, path: str | Path, *, t: float = 0.0,
                   alpha: float = 0.0, theta: float = 0.0, deconv_order: int = 0,
                   payload_kind: int = SPECTRAL) -> SnapshotHeader:
    n = field.grid.n
    header = SnapshotHeader(n, float(t), float(alpha), float(theta), int(deconv_order), payload_kind)
    if payload_kind == SPECTRAL:
        idx = _lex_order(n)
        c = field.coeffs[:, idx][:, :, idx][:, :, :, idx]
        body = np.moveaxis(c, 0, -1)  # (k1, k2, k3, component)
        payload = np.stack([body.real, body.imag], axis=-1).astype("<f8")
    elif payload_kind == PHYSICAL:
        payload = np.moveaxis(to_physical(field.coeffs), 0, -1).astype("<f8")
    else:
        raise ValueError(f"unknown payload kind {payload_kind}")
    Path(path).write_bytes(header.pack() + np.ascontiguousarray(payload).tobytes())
    return header


def read_snapshot(path: str | Path) -> Snapshot:
    """Read a snapshot; rejects bad headers, size mismatches and non-Hermitian data."""
    blob = Path(path).read_bytes()
    header = SnapshotHeader.unpack(blob)
    payload = blob[HEADER_SIZE:]
    if len(payload) != header.payload_size:
        raise SnapshotError(f"payload is {len(payload)} bytes, header implies {header.payload_size}")
    n = header.n_per_axis
    grid = WaveGrid(n)
    data = np.frombuffer(payload, dtype="<f8")
    if header.payload_kind == SPECTRAL:
        pairs = data.reshape(n, n, n, 3, 2)
        lex = np.moveaxis(pairs[..., 0] + 1j * pairs[..., 1], -1, 0)
        coeffs = np.empty_like(lex)
        idx = _lex_order(n)
        coeffs[np.ix_(range(3), idx, idx, idx)] = lex
        viol = symmetry_violation(coeffs)
        if viol > _SYMMETRY_TOL:
            raise SnapshotError(f"conjugate symmetry violated by {viol:.3e}")
    else:
        values = np.moveaxis(data.reshape(n, n, n, 3), -1, 0)
        if not np.all(np.isfinite(values)):
            raise SnapshotError("non-finite physical values")
        coeffs = to_spectral(values)
    return Snapshot(header, SpectralVectorField(grid, coeffs))


def dump_snapshot(snap: Snapshot, *, threshold: float = 0.0, limit: int | None = None) -> list[str]:
    """Human-readable listing: header lines, then one line per mode above ``threshold``."""
    h = snap.header
    kind = "spectral" if h.payload_kind == SPECTRAL else "physical"
    lines = [
        f"n_per_axis {h.n_per_axis}",
        f"t {h.t!r}",
        f"alpha {h.alpha!r}  theta {h.theta!r}  N {h.deconv_order}",
        f"payload {kind}",
    ]
    c = snap.field.coeffs
    n = h.n_per_axis
    idx = _lex_order(n)
    k_of = np.arange(n)
    k_of[k_of > n // 2] -= n
    amp = np.sqrt(np.sum(np.abs(c) ** 2, axis=0))
    shown = 0
    for i in idx:
        for j in idx:
            for m in idx:
                if amp[i, j, m] <= threshold:
                    continue
                if limit is not None and shown >= limit:
                    lines.append("...")
                    return lines
                comps = "  ".join(f"{z.real:+.6e}{z.imag:+.6e}j" for z in c[:, i, j, m])
                k = (int(k_of[i]), int(k_of[j]), int(k_of[m]))
                lines.append(f"k=({k[0]:3d},{k[1]:3d},{k[2]:3d})  {comps}")
                shown += 1
    return lines


@contextmanager
def output_lock(out_dir: str | Path):
    """Hold an exclusive lock on ``out_dir`` (created if missing)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = filelock.FileLock(str(out / ".radm.lock"), timeout=0)
    try:
        lock.acquire()
    except filelock.Timeout:
        raise OutputLockedError(f"{out} is in use by another run") from None
    try:
        yield out
    finally:
        lock.release()
