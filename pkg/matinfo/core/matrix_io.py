"""
Matrix and metrics file formats.

* npy version 1.0 (f4 / f8, C order, 2-D), stored as d x N features
* csv, rows are samples (transposed to d x N), optional single header row
* MetricsLog, JSONL with one MetricRecord per line
"""

import csv
import json
import math
from pathlib import Path
from typing import Dict, IO, List, Optional, Union

import numpy as np
from numpy.lib import format as npy_format

from matinfo.common.errors import DataInvariantError, MatrixFileError
from matinfo.common.logging_config import get_logger
from matinfo.core.metrics import MetricRecord

_log = get_logger(__name__)

PathLike = Union[str, Path]

MATRIX_FORMATS = ("npy", "csv")
_NPY_DTYPES = (np.dtype("<f4"), np.dtype("<f8"), np.dtype(">f4"), np.dtype(">f8"))


def detect_format(path: PathLike, override: Optional[str] = None) -> str:
    if override:
        if override not in MATRIX_FORMATS:
            raise MatrixFileError(f"unknown matrix format {override!r}; choose from {MATRIX_FORMATS}")
        return override
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in MATRIX_FORMATS:
        raise MatrixFileError(f"cannot infer matrix format from {path}; pass --format")
    return suffix


def _unreadable(path: PathLike, exc: OSError) -> MatrixFileError:
    return MatrixFileError(f"cannot read {path}: {exc.strerror or exc}")


def _unwritable(path: PathLike, exc: OSError) -> MatrixFileError:
    return MatrixFileError(f"cannot write {path}: {exc.strerror or exc}")


def read_npy(path: PathLike) -> np.ndarray:
    """Read a version 1.0 npy file holding a 2-D f4/f8 C-order array."""
    try:
        with open(path, "rb") as f:
            version = npy_format.read_magic(f)
            if version != (1, 0):
                raise MatrixFileError(f"{path}: npy version {version} is not supported (need 1.0)")
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(f)
            if fortran_order:
                raise MatrixFileError(f"{path}: fortran_order arrays are not supported")
            if dtype not in _NPY_DTYPES:
                raise MatrixFileError(f"{path}: dtype {dtype.str} is not supported (need f4 or f8)")
            if len(shape) != 2:
                raise MatrixFileError(f"{path}: expected a 2-D array (got shape {shape})")
            count = int(np.prod(shape))
            payload = f.read(count * dtype.itemsize)
    except FileNotFoundError as exc:
        raise MatrixFileError(f"{path} does not exist") from exc
    except OSError as exc:
        raise _unreadable(path, exc) from exc
    except ValueError as exc:
        raise MatrixFileError(f"{path}: malformed npy header: {exc}") from exc
    if len(payload) != count * dtype.itemsize:
        raise MatrixFileError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=dtype).astype(np.float64).reshape(shape)


def write_npy(path: PathLike, array: np.ndarray) -> None:
    """Write a 2-D matrix as npy 1.0, little-endian f8, C order."""
    array = np.ascontiguousarray(array, dtype="<f8")
    if array.ndim != 2:
        raise DataInvariantError(f"only 2-D matrices can be written (got {array.ndim}-D)")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            npy_format.write_array(f, array, version=(1, 0), allow_pickle=False)
    except OSError as exc:
        raise _unwritable(path, exc) from exc


def _parse_cell(cell: str, path: PathLike, row: int) -> float:
    value = float(cell)
    if not math.isfinite(value):
        raise MatrixFileError(f"{path}: non-finite value {cell!r} in row {row}")
    return value


def read_csv_rows(path: PathLike) -> np.ndarray:
    """Rectangular numeric csv (N x d); a leading non-numeric row is a header."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    except FileNotFoundError as exc:
        raise MatrixFileError(f"{path} does not exist") from exc
    except OSError as exc:
        raise _unreadable(path, exc) from exc
    except UnicodeDecodeError as exc:
        raise MatrixFileError(f"{path}: csv is not valid UTF-8") from exc
    if not rows:
        raise MatrixFileError(f"{path}: empty csv")
    parsed: List[List[float]] = []
    for index, row in enumerate(rows):
        try:
            parsed.append([_parse_cell(cell.strip(), path, index) for cell in row])
        except ValueError as exc:
            if index == 0:
                _log.debug("Treating first row of %s as a header", path)
                continue
            raise MatrixFileError(f"{path}: row {index} does not parse as reals: {exc}") from exc
    if not parsed:
        raise MatrixFileError(f"{path}: no data rows")
    width = len(parsed[0])
    if any(len(row) != width for row in parsed):
        raise MatrixFileError(f"{path}: csv is not rectangular")
    return np.array(parsed, dtype=np.float64)


def read_matrix(path: PathLike, fmt: Optional[str] = None) -> np.ndarray:
    """Read a features matrix as d x N (csv rows are samples)."""
    kind = detect_format(path, fmt)
    if kind == "npy":
        return read_npy(path)
    return np.ascontiguousarray(read_csv_rows(path).T)


def write_csv_rows(path: PathLike, rows: np.ndarray, header: Optional[List[str]] = None) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            if header:
                writer.writerow(header)
            for row in np.atleast_2d(rows):
                writer.writerow([repr(float(value)) for value in row])
    except OSError as exc:
        raise _unwritable(path, exc) from exc


def read_labels(path: PathLike, fmt: Optional[str] = None) -> np.ndarray:
    """Integer labels from npy or csv (any shape with one entry per sample)."""
    kind = detect_format(path, fmt)
    if kind == "npy":
        try:
            values = np.load(path, allow_pickle=False)
        except FileNotFoundError as exc:
            raise MatrixFileError(f"{path} does not exist") from exc
        except OSError as exc:
            raise _unreadable(path, exc) from exc
        except ValueError as exc:
            raise MatrixFileError(f"{path}: not a readable npy file: {exc}") from exc
    else:
        values = read_csv_rows(path)
    values = np.asarray(values).reshape(-1)
    labels = values.astype(np.int64)
    if not np.array_equal(labels, values):
        raise MatrixFileError(f"{path}: labels must be integers")
    return labels


class MetricsLog:
    """JSONL writer for MetricRecords; steps must increase within a split."""

    def __init__(self, stream: Optional[IO[str]] = None) -> None:
        self._stream = stream
        self._last_step: Dict[str, int] = {}
        self.records: List[MetricRecord] = []

    @classmethod
    def open(cls, path: PathLike) -> "MetricsLog":
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            return cls(open(path, "w", encoding="utf-8"))
        except OSError as exc:
            raise _unwritable(path, exc) from exc

    def append(self, record: MetricRecord) -> None:
        last = self._last_step.get(record.split)
        if last is not None and record.step <= last:
            raise DataInvariantError(
                f"metrics log steps must increase within split {record.split!r} ({record.step} <= {last})"
            )
        self._last_step[record.split] = record.step
        self.records.append(record)
        if self._stream is not None:
            self._stream.write(json.dumps(record.to_dict()) + "\n")

    def close(self) -> None:
        if self._stream is not None:
            self._stream.close()
            self._stream = None

    def __enter__(self) -> "MetricsLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def read_metrics_log(path: PathLike) -> List[MetricRecord]:
    records = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    records.append(MetricRecord.from_dict(json.loads(line)))
    except OSError as exc:
        raise _unreadable(path, exc) from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise MatrixFileError(f"{path}: not a metrics log: {exc}") from exc
    return records


__all__ = [
    "MATRIX_FORMATS",
    "MetricsLog",
    "detect_format",
    "read_csv_rows",
    "read_labels",
    "read_matrix",
    "read_metrics_log",
    "read_npy",
    "write_csv_rows",
    "write_npy",
]
