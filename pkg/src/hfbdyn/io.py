"""Binary serialization of states and traces, and deterministic CSV / JSON writers.

File layout (all little-endian):

    header : magic b"HFBD" | u32 version | u32 d | u32 n | f8 L | u32 record count
    record : u16 name length | name (utf-8) | u8 dtype code | u8 ndim | u64 shape[ndim] | payload

dtype codes: 'f' float64, 'c' complex128 stored as (real, imag) float64 pairs,
'i' int64, 's' utf-8 bytes.  Arrays are written in row-major order, so a
kernel K[x, y] is x-major, then y.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .lattice import Grid, make_grid
from .potentials import PotentialSpec
from .state import HFBState
from .trace import SpaceTimeTrace

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "FormatError",
    "ShapeMismatchError",
    "VersionMismatchError",
    "write_records",
    "read_records",
    "save_state",
    "load_state",
    "save_trace",
    "load_trace",
    "array_checksum",
    "write_csv",
    "write_json",
    "format_float",
]

MAGIC = b"HFBD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdI")
_DTYPES = {"f": np.dtype("<f8"), "c": np.dtype("<c16"), "i": np.dtype("<i8")}


class FormatError(ValueError):
    pass


class ShapeMismatchError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


def _code(a) -> tuple[str, np.ndarray | bytes]:
    if isinstance(a, str):
        return "s", a.encode()
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return "c", np.asarray(a, dtype=_DTYPES["c"], order="C")
    if a.dtype.kind in "iub":
        return "i", np.asarray(a, dtype=_DTYPES["i"], order="C")
    return "f", np.asarray(a, dtype=_DTYPES["f"], order="C")


def write_records(path: str | Path, grid: Grid, records: Mapping[str, object]) -> None:
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, FORMAT_VERSION, grid.d, grid.n, float(grid.L), len(records)))
    for name, value in records.items():
        code, arr = _code(value)
        nb = name.encode()
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        if code == "s":
            buf.write(struct.pack("<cB", b"s", 1))
            buf.write(struct.pack("<Q", len(arr)))
            buf.write(arr)
        else:
            buf.write(struct.pack("<cB", code.encode(), arr.ndim))
            buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            buf.write(arr.tobytes(order="C"))
    Path(path).write_bytes(buf.getvalue())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, nbytes: int, what: str) -> bytes:
        if self.pos + nbytes > len(self.data):
            raise ShapeMismatchError(
                f"file truncated while reading {what}: need {nbytes} bytes at offset {self.pos}, "
                f"{len(self.data) - self.pos} available"
            )
        out = self.data[self.pos: self.pos + nbytes]
        self.pos += nbytes
        return out

    def unpack(self, fmt: str, what: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size, what))


def read_records(path: str | Path) -> tuple[Grid, dict]:
    """Parse a file completely before returning anything."""
    r = _Reader(Path(path).read_bytes())
    magic, version, d, n, L, count = r.unpack(_HEADER.format, "header")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; not an hfbdyn file")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"file format version {version}, reader supports {FORMAT_VERSION}")
    grid = make_grid(d, n, L)
    out: dict = {}
    for i in range(count):
        (ln,) = r.unpack("<H", f"record {i} name length")
        name = r.take(ln, f"record {i} name").decode()
        code, ndim = r.unpack("<cB", f"record {name!r} type")
        code = code.decode()
        if code == "s":
            (nb,) = r.unpack("<Q", f"record {name!r} length")
            out[name] = r.take(nb, f"record {name!r}").decode()
            continue
        if code not in _DTYPES:
            raise FormatError(f"unknown dtype code {code!r} in record {name!r}")
        shape = r.unpack(f"<{ndim}Q", f"record {name!r} shape") if ndim else ()
        dt = _DTYPES[code]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        out[name] = np.frombuffer(r.take(nbytes, f"record {name!r}"), dtype=dt).reshape(shape).copy()
    if r.pos != len(r.data):
        raise ShapeMismatchError(f"{len(r.data) - r.pos} trailing bytes after {count} records")
    return grid, out


def _spec_records(spec: PotentialSpec, prefix: str = "spec/") -> dict:
    rec = {
        prefix + "beta": np.array(spec.beta),
        prefix + "N": np.array(spec.bigN),
        prefix + "amplitude": np.array(spec.amplitude),
        prefix + "profile": spec.profile,
    }
    if spec.table is not None:
        rec[prefix + "table"] = np.asarray(spec.table, dtype=float)
    return rec


def _spec_from(rec: dict, prefix: str = "spec/") -> PotentialSpec:
    return PotentialSpec(
        float(rec[prefix + "beta"]),
        float(rec[prefix + "N"]),
        rec[prefix + "profile"],
        float(rec[prefix + "amplitude"]),
        rec.get(prefix + "table"),
    )


def _expect(grid: Grid, rec: dict, name: str, shape: tuple) -> np.ndarray:
    if name not in rec:
        raise FormatError(f"missing record {name!r}")
    a = rec[name]
    if a.shape != shape:
        raise ShapeMismatchError(f"record {name!r} has shape {a.shape}, expected {shape} for {grid}")
    return a


def save_state(path: str | Path, state: HFBState) -> None:
    write_records(path, state.grid, {
        "kind": "state",
        "t": np.array(state.t),
        **_spec_records(state.spec),
        "phi": state.phi,
        "lam": state.lam,
        "gamma": state.gamma,
    })


def load_state(path: str | Path) -> HFBState:
    grid, rec = read_records(path)
    if rec.get("kind") != "state":
        raise FormatError(f"{path} does not hold a state")
    N = grid.size
    return HFBState(
        grid,
        _spec_from(rec),
        float(rec["t"]),
        _expect(grid, rec, "phi", (N,)),
        _expect(grid, rec, "lam", (N, N)),
        _expect(grid, rec, "gamma", (N, N)),
    )


_TRACE_ARRAYS = ("times", "offsets", "phi", "lam_diag", "gam_diag", "lam_sym_diag", "snap_index", "lam_snaps",
                 "gam_snaps")


def save_trace(path: str | Path, trace: SpaceTimeTrace) -> None:
    rec: dict = {"kind": "trace", "dt": np.array(trace.dt), "store_every": np.array(trace.store_every, dtype=np.int64)}
    rec.update(_spec_records(trace.spec))
    for name in _TRACE_ARRAYS:
        rec[name] = getattr(trace, name)
    for k in sorted(trace.conserved):
        rec["conserved/" + k] = np.asarray(trace.conserved[k])
    write_records(path, trace.grid, rec)


def load_trace(path: str | Path) -> SpaceTimeTrace:
    grid, rec = read_records(path)
    if rec.get("kind") != "trace":
        raise FormatError(f"{path} does not hold a trace")
    for name in _TRACE_ARRAYS:
        if name not in rec:
            raise FormatError(f"missing record {name!r}")
    M = rec["times"].shape[0]
    n_off = rec["offsets"].shape[0]
    N = grid.size
    ns = rec["snap_index"].shape[0]
    _expect(grid, rec, "offsets", (n_off, grid.d))
    _expect(grid, rec, "phi", (M, N))
    for name in ("lam_diag", "gam_diag", "lam_sym_diag"):
        _expect(grid, rec, name, (n_off, M, N))
    for name in ("lam_snaps", "gam_snaps"):
        _expect(grid, rec, name, (ns, N, N))
    conserved = {k[len("conserved/"):]: v for k, v in rec.items() if k.startswith("conserved/")}
    return SpaceTimeTrace(
        grid=grid,
        spec=_spec_from(rec),
        dt=float(rec["dt"]),
        times=rec["times"],
        offsets=rec["offsets"],
        phi=rec["phi"],
        lam_diag=rec["lam_diag"],
        gam_diag=rec["gam_diag"],
        lam_sym_diag=rec["lam_sym_diag"],
        store_every=int(rec["store_every"]),
        snap_index=rec["snap_index"],
        lam_snaps=rec["lam_snaps"],
        gam_snaps=rec["gam_snaps"],
        conserved=conserved,
    )


def array_checksum(*arrays: np.ndarray) -> str:
    """sha256 over the little-endian bytes of the given arrays."""
    h = hashlib.sha256()
    for a in arrays:
        code, arr = _code(a)
        h.update(arr if code == "s" else arr.tobytes(order="C"))
    return h.hexdigest()


# ----------------------------------------------------------------------------
# text outputs


def format_float(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def write_csv(path: str | Path, rows: Iterable[Mapping], columns: list[str] | None = None) -> None:
    """Columns in the given order (default: first row's keys, then new keys sorted); '\\n' line ends."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
        extra = sorted({k for r in rows for k in r} - set(columns))
        columns += extra
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_float(r.get(c, "")) for c in columns])


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else format_float(x)
    return obj


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n")
