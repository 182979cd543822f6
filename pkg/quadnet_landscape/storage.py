"""Run artifacts on disk for quadnet-landscape.

File formats:
- trace.csv: header "iteration,objective,grad_norm,perturbed", one row per
  record, floats in shortest round-trip form, perturbed as 0/1
- params.bin, dataset.bin, features.bin: the "MNW1" container, a sequence
  of arrays each stored as magic b"MNW1", u32 ndim, u32 dims, then
  little-endian float64 entries in row-major order
- report.txt, meta.txt: key=value lines
"""

import csv
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .constants import PARAMS_MAGIC, TRACE_HEADER
from .errors import FormatError, InvalidArgumentError
from .models import Dataset, TraceRecord
from .utils import format_float

logger = logging.getLogger(__name__)

_U32 = struct.Struct("<I")


def _format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def parse_value(text: str) -> Any:
    """Inverse of the key=value formatting: bool, int, float or the raw string."""
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


# =============================================================================
# Traces
# =============================================================================


def write_trace(path: Path, trace: List[TraceRecord]) -> None:
    """Write a trace as CSV; an empty trace gives a header-only file."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER.split(","))
        for rec in trace:
            writer.writerow(
                [
                    rec.iteration,
                    format_float(rec.objective),
                    format_float(rec.grad_norm),
                    1 if rec.perturbed else 0,
                ]
            )


def read_trace(path: Path) -> List[TraceRecord]:
    """Read a trace written by write_trace().

    Raises:
        FormatError: On a wrong header, a malformed row or non-increasing
            iterations; the message carries the 1-based line number
    """
    trace: List[TraceRecord] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or ",".join(header) != TRACE_HEADER:
            raise FormatError(f"expected header {TRACE_HEADER!r}", line=1)
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise FormatError(f"expected 4 fields, got {len(row)}", line=line_no)
            try:
                iteration = int(row[0])
                objective = float(row[1])
                grad_norm = float(row[2])
                flag = int(row[3])
            except ValueError as e:
                raise FormatError(f"malformed row: {e}", line=line_no) from e
            if flag not in (0, 1):
                raise FormatError(f"perturbed flag must be 0 or 1, got {flag}", line=line_no)
            if trace and iteration <= trace[-1].iteration:
                raise FormatError("iterations must be strictly increasing", line=line_no)
            trace.append(TraceRecord(iteration, objective, grad_norm, bool(flag)))
    return trace


# =============================================================================
# Binary arrays
# =============================================================================


def encode_arrays(arrays: List[NDArray[np.float64]]) -> bytes:
    """Serialize arrays into consecutive MNW1 records."""
    chunks = []
    for arr in arrays:
        arr = np.ascontiguousarray(arr, dtype="<f8")
        chunks.append(PARAMS_MAGIC)
        chunks.append(_U32.pack(arr.ndim))
        chunks.extend(_U32.pack(dim) for dim in arr.shape)
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def decode_arrays(raw: bytes) -> List[NDArray[np.float64]]:
    """Parse consecutive MNW1 records.

    Raises:
        FormatError: On a bad magic, a truncated header or payload
    """
    arrays = []
    offset = 0
    while offset < len(raw):
        if raw[offset : offset + 4] != PARAMS_MAGIC:
            raise FormatError(f"expected magic {PARAMS_MAGIC!r}", offset=offset)
        offset += 4
        if offset + 4 > len(raw):
            raise FormatError("truncated dimension count", offset=offset)
        (ndim,) = _U32.unpack_from(raw, offset)
        offset += 4
        if offset + 4 * ndim > len(raw):
            raise FormatError("truncated dimension header", offset=offset)
        dims = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        nbytes = 8 * math.prod(dims)
        if offset + nbytes > len(raw):
            raise FormatError(
                f"payload for shape {dims} needs {nbytes} bytes, {len(raw) - offset} left",
                offset=offset,
            )
        arr = np.frombuffer(raw, dtype="<f8", count=nbytes // 8, offset=offset).reshape(dims)
        arrays.append(arr.astype(np.float64))
        offset += nbytes
    return arrays


def save_arrays(path: Path, arrays: List[NDArray[np.float64]]) -> None:
    Path(path).write_bytes(encode_arrays(arrays))


def load_arrays(path: Path) -> List[NDArray[np.float64]]:
    return decode_arrays(Path(path).read_bytes())


def save_params(path: Path, W: NDArray[np.float64], R: Optional[NDArray[np.float64]] = None) -> None:
    """Store the trained W and, for three-layer runs, the frozen R."""
    arrays = [W] if R is None else [W, R]
    save_arrays(path, arrays)


def load_params(path: Path) -> Tuple[NDArray[np.float64], Optional[NDArray[np.float64]]]:
    """Read (W, R); R is None for two-layer runs.

    Raises:
        FormatError: If the file does not hold one or two matrices
    """
    arrays = load_arrays(path)
    if not 1 <= len(arrays) <= 2 or any(a.ndim != 2 for a in arrays):
        raise FormatError(f"params file must hold W (and optionally R), got {len(arrays)} arrays")
    return arrays[0], arrays[1] if len(arrays) == 2 else None


def save_dataset(path: Path, data: Dataset) -> None:
    save_arrays(path, [data.X, data.y])


def load_dataset(path: Path) -> Dataset:
    """Read a dataset saved by save_dataset(); B and Y are recomputed.

    Raises:
        FormatError: If the file does not hold an (n, d) matrix and n labels
    """
    arrays = load_arrays(path)
    if len(arrays) != 2 or arrays[0].ndim != 2 or arrays[1].ndim != 1:
        raise FormatError("dataset file must hold X (2-D) and y (1-D)")
    try:
        return Dataset(arrays[0], arrays[1])
    except InvalidArgumentError as e:
        raise FormatError(f"invalid dataset: {e}") from e


# =============================================================================
# key=value files
# =============================================================================


def write_report(path: Path, report: Mapping[str, Any]) -> None:
    """Write a key=value report in the given key order."""
    lines = [f"{key}={_format_value(value)}" for key, value in report.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report(path: Path) -> Dict[str, Any]:
    """Read a key=value file; values are parsed with parse_value().

    Raises:
        FormatError: On a nonblank line without "="
    """
    out: Dict[str, Any] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"expected key=value, got {line!r}", line=line_no)
        out[key] = parse_value(value)
    return out


def write_meta(path: Path, meta: Mapping[str, Any]) -> None:
    """Write run metadata as key=value lines sorted by key."""
    write_report(path, {key: meta[key] for key in sorted(meta)})
    logger.debug("wrote %d metadata entries to %s", len(meta), path)
