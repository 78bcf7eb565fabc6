"""Dataset files and flat ``key = value`` configuration files.

Two dataset encodings are supported, chosen by file extension:

* ``.csv``: header ``x0..x{d-1}`` followed by ``y`` (integer hard label) or
  ``y0..y{C-1}`` (one probability column per class). Label columns may be
  omitted for unlabeled point sets.
* anything else: little-endian binary. Magic ``OTDS``, ``u32`` version (1),
  ``u8`` flags (bit 0 set for soft labels), ``u64`` n, ``u32`` d, ``u32`` C,
  then ``n*d`` row-major ``f32`` features, then ``n`` ``u32`` class ids
  (hard) or ``n*C`` row-major ``f32`` label rows (soft).
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .data import LabeledDataset, validate
from .errors import BadSpecError, DatasetFormatError
from .labels import LabelConfig
from .ot import SinkhornConfig
from .otdd import OtddConfig

MAGIC = b"OTDS"
VERSION = 1
_HEADER = struct.Struct("<4sIBQII")
FLAG_SOFT = 0x01


def _is_csv(path):
    return Path(path).suffix.lower() == ".csv"


def save_dataset(ds, path):
    validate(ds)
    path = Path(path)
    if _is_csv(path):
        _save_csv(ds, path)
    else:
        path.write_bytes(encode_binary(ds))


def load_dataset(path, id=None):
    X, L = _read(path)
    if L is None:
        raise DatasetFormatError(f"{path}: no label columns")
    ds = LabeledDataset(X, L, None, id or Path(path).stem)
    validate(ds)
    return ds


def load_features(path):
    """Feature matrix of any dataset file, labeled or not."""
    return _read(path)[0]


def _read(path):
    path = Path(path)
    try:
        if _is_csv(path):
            return _load_csv(path)
        return decode_binary(path.read_bytes(), str(path))
    except OSError as exc:
        if isinstance(exc, DatasetFormatError):
            raise
        raise DatasetFormatError(f"{path}: {exc.strerror or exc}") from exc


def encode_binary(ds):
    hard = ds.is_hard
    head = _HEADER.pack(MAGIC, VERSION, 0 if hard else FLAG_SOFT, ds.n, ds.dim, ds.n_classes)
    body = np.ascontiguousarray(ds.features, dtype="<f4").tobytes()
    if hard:
        body += np.ascontiguousarray(ds.hard_labels, dtype="<u4").tobytes()
    else:
        body += np.ascontiguousarray(ds.labels, dtype="<f4").tobytes()
    return head + body


def decode_binary(blob, name="<bytes>"):
    if len(blob) < _HEADER.size:
        raise DatasetFormatError(f"{name}: truncated header")
    magic, version, flags, n, d, C = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DatasetFormatError(f"{name}: bad magic {magic!r}")
    if version != VERSION:
        raise DatasetFormatError(f"{name}: unsupported version {version}")
    soft = bool(flags & FLAG_SOFT)
    n_label = n * C if soft else n
    expected = _HEADER.size + 4 * (n * d + n_label)
    if len(blob) != expected:
        raise DatasetFormatError(f"{name}: expected {expected} bytes, found {len(blob)}")
    off = _HEADER.size
    X = np.frombuffer(blob, dtype="<f4", count=n * d, offset=off).astype(np.float64).reshape(n, d)
    off += 4 * n * d
    if soft:
        L = np.frombuffer(blob, dtype="<f4", count=n * C, offset=off).astype(np.float64).reshape(n, C)
        sums = L.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise DatasetFormatError(f"{name}: label row without mass")
        L = L / sums
    else:
        y = np.frombuffer(blob, dtype="<u4", count=n, offset=off).astype(np.int64)
        if n and y.max() >= C:
            raise DatasetFormatError(f"{name}: class id {int(y.max())} >= C={C}")
        L = np.zeros((n, C))
        L[np.arange(n), y] = 1.0
    return X, L


def _save_csv(ds, path):
    header = [f"x{i}" for i in range(ds.dim)]
    hard = ds.is_hard
    header += ["y"] if hard else [f"y{c}" for c in range(ds.n_classes)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        ys = ds.hard_labels if hard else ds.labels
        for x, y in zip(ds.features, ys):
            row = [repr(float(v)) for v in x]
            row += [str(int(y))] if hard else [repr(float(v)) for v in y]
            w.writerow(row)


def _load_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    if not xcols or xcols != list(range(len(xcols))):
        raise DatasetFormatError(f"{path}: header must start with x0..x{{d-1}}")
    rest = header[len(xcols):]
    body = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body if r], dtype=np.float64)
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise DatasetFormatError(f"{path}: ragged rows")
    X = data[:, : len(xcols)]
    if not rest:
        return X, None
    if rest == ["y"]:
        y = data[:, -1]
        if np.any(y < 0) or np.any(y != np.round(y)):
            raise DatasetFormatError(f"{path}: labels in column y must be nonnegative integers")
        y = y.astype(np.int64)
        L = np.zeros((y.size, int(y.max()) + 1))
        L[np.arange(y.size), y] = 1.0
        return X, L
    if rest == [f"y{c}" for c in range(len(rest))]:
        return X, data[:, len(xcols):]
    raise DatasetFormatError(f"{path}: label columns must be 'y' or y0..y{{C-1}}")


# ---------------------------------------------------------------------------
# key = value files


def parse_key_values(text):
    """``[(line_number, key, value)]`` from ``key = value`` lines; ``#`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadSpecError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise BadSpecError("empty key", lineno)
        out.append((lineno, key, value))
    return out


@dataclass
class RunConfig:
    solver: str = "sinkhorn"
    epsilon: float | None = None
    relative_epsilon: float = 0.01
    max_iters: int = 2000
    tolerance: float = 1e-9
    label_method: str = "exact"
    class_cap: int = 500
    batch_size: int | None = None
    seed: int = 0
    grid_resolution: int = 7

    _CHOICES = {"solver": ("exact", "sinkhorn"), "label_method": ("exact", "gaussian")}

    @classmethod
    def from_text(cls, text):
        cfg = cls()
        types = {f.name: f.type for f in fields(cls)}
        for lineno, key, value in parse_key_values(text):
            if key not in types:
                raise BadSpecError(f"unknown config key {key!r}", lineno)
            cfg.set(key, value, lineno)
        return cfg

    @classmethod
    def from_file(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise DatasetFormatError(f"{path}: {exc.strerror or exc}") from exc
        return cls.from_text(text)

    def set(self, key, value, lineno=None):
        try:
            if key in self._CHOICES:
                if value not in self._CHOICES[key]:
                    raise ValueError(f"must be one of {self._CHOICES[key]}")
                parsed = value
            elif key in ("epsilon", "batch_size") and value.lower() in ("", "none"):
                parsed = None
            elif key in ("epsilon", "relative_epsilon", "tolerance"):
                parsed = float(value)
                if not parsed > 0:
                    raise ValueError("must be positive")
            else:
                parsed = int(value)
                if key != "seed" and parsed < 1:
                    raise ValueError("must be positive")
        except ValueError as exc:
            raise BadSpecError(f"{key} = {value!r}: {exc}", lineno) from None
        setattr(self, key, parsed)

    def otdd_config(self):
        return OtddConfig(
            solver=self.solver,
            sinkhorn=SinkhornConfig(
                epsilon=self.epsilon,
                relative_epsilon=self.relative_epsilon,
                max_iters=self.max_iters,
                tolerance=self.tolerance,
            ),
            label=LabelConfig(method=self.label_method, class_cap=self.class_cap, seed=self.seed),
        )
