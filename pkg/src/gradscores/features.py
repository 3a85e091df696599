"""Gradient feature sets: data model, GFS1 binary file format, materialization.

A feature set holds n*m projected per-sample gradient rows (d dims each) for
one teacher configuration, stored pre length-scaling so a single file serves
both the scaled and unscaled regimes. Rows are sample-major: the j-th
generation of prompt p lives at row p*m + j.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"GFS1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIQQ")  # magic, version, n, m, d, seed, source_dim

SCALAR_FIELDS = ("loss", "avg_prob", "correct")


class FeatureFormatError(ValueError):
    """Raised when a feature file is malformed (bad magic, truncation, ...)."""


@dataclass
class GradientFeatureSet:
    teacher_id: str
    n: int
    m: int
    d: int
    lengths: np.ndarray          # (n*m,) uint32 response token counts, all >= 2
    raw_rows: np.ndarray         # (n*m, d) float32 projected gradients, pre scaling
    projection_seed: int = 0
    source_dim: int = 0
    temperature: float | None = None
    student_id: str | None = None
    scalars: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.lengths = np.ascontiguousarray(self.lengths, dtype=np.uint32)
        self.raw_rows = np.ascontiguousarray(self.raw_rows, dtype=np.float32)

    @property
    def num_rows(self) -> int:
        return self.n * self.m

    def validate(self) -> None:
        if self.n < 1 or self.m < 1 or self.num_rows == 0:
            raise ValueError("empty set: n and m must be >= 1")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.lengths.shape != (self.num_rows,):
            raise ValueError(
                f"lengths has shape {self.lengths.shape}, expected ({self.num_rows},)"
            )
        if self.raw_rows.shape != (self.num_rows, self.d):
            raise ValueError(
                f"raw_rows has shape {self.raw_rows.shape}, "
                f"expected ({self.num_rows}, {self.d})"
            )
        if (self.lengths < 2).any():
            bad = int(np.flatnonzero(self.lengths < 2)[0])
            raise ValueError(
                f"length < 2 at sample {divmod(bad, self.m)}: log-scaling "
                "requires every response length >= 2"
            )
        for name, arr in self.scalars.items():
            if len(arr) != self.num_rows:
                raise ValueError(
                    f"scalar field '{name}' has length {len(arr)}, "
                    f"expected {self.num_rows}"
                )


@dataclass
class ProcessedGradients:
    """Length-scaled rows h, their norms, and unit-normalized rows h~."""

    n: int
    m: int
    d: int
    rows_h: np.ndarray        # (k, d) float64
    rows_h_tilde: np.ndarray  # (k, d) float64, unit rows
    norms: np.ndarray         # (k,)
    prompt_ids: np.ndarray    # (k,) prompt index of each surviving row
    dropped: int = 0          # rows removed in drop-degenerate mode

    @property
    def num_rows(self) -> int:
        return self.rows_h.shape[0]


def write_features(fs: GradientFeatureSet, path: str | os.PathLike) -> None:
    """Write a validated set in the GFS1 format plus its .meta.json sidecar."""
    fs.validate()
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, fs.n, fs.m, fs.d, fs.projection_seed, fs.source_dim
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(fs.lengths.astype("<u4").tobytes())
        f.write(fs.raw_rows.astype("<f4").tobytes())
    meta = {"teacher_id": fs.teacher_id}
    if fs.temperature is not None:
        meta["temperature"] = fs.temperature
    if fs.student_id is not None:
        meta["student_id"] = fs.student_id
    for name in SCALAR_FIELDS:
        if name in fs.scalars:
            meta[name] = [float(v) for v in fs.scalars[name]]
    with open(_sidecar_path(path), "w") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def _sidecar_path(path) -> str:
    return os.fspath(path) + ".meta.json"


def read_features(path: str | os.PathLike) -> GradientFeatureSet:
    """Read a GFS1 file, merge its sidecar if present, and validate."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise FeatureFormatError("truncated payload: file shorter than header")
    magic, version, n, m, d, seed, source_dim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FeatureFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FeatureFormatError(f"unsupported version {version}")
    k = n * m
    expected = _HEADER.size + 4 * k + 4 * k * d
    if len(blob) < expected:
        raise FeatureFormatError(
            f"truncated payload: declared n*m*d needs {expected} bytes, got {len(blob)}"
        )
    off = _HEADER.size
    lengths = np.frombuffer(blob, dtype="<u4", count=k, offset=off).copy()
    off += 4 * k
    rows = np.frombuffer(blob, dtype="<f4", count=k * d, offset=off).copy()
    fs = GradientFeatureSet(
        teacher_id="",
        n=n,
        m=m,
        d=d,
        lengths=lengths,
        raw_rows=rows.reshape(k, d),
        projection_seed=seed,
        source_dim=source_dim,
    )
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as f:
            meta = json.load(f)
        fs.teacher_id = meta.get("teacher_id", "")
        fs.temperature = meta.get("temperature")
        fs.student_id = meta.get("student_id")
        for name in SCALAR_FIELDS:
            if name in meta:
                fs.scalars[name] = np.asarray(meta[name], dtype=np.float64)
    fs.validate()
    return fs


def materialize(
    fs: GradientFeatureSet,
    apply_length_scaling: bool = True,
    drop_degenerate: bool = False,
) -> ProcessedGradients:
    """Build processed rows h = ln(|y|) * (Pi g) and their unit versions.

    Always starts from raw_rows, so calling this twice from the same set gives
    identical output (scaling is never applied on top of itself). Zero-norm
    rows are an error unless drop_degenerate is set, in which case they are
    removed and counted.
    """
    fs.validate()
    rows = fs.raw_rows.astype(np.float64)
    if apply_length_scaling:
        rows = rows * np.log(fs.lengths.astype(np.float64))[:, None]
    norms = np.linalg.norm(rows, axis=1)
    prompt_ids = np.repeat(np.arange(fs.n), fs.m)
    degenerate = norms == 0.0
    if degenerate.any():
        if not drop_degenerate:
            where = [divmod(int(i), fs.m) for i in np.flatnonzero(degenerate)]
            raise ValueError(
                "degenerate gradient at sample "
                + ", ".join(f"({p},{j})" for p, j in where)
            )
        keep = ~degenerate
        rows, norms, prompt_ids = rows[keep], norms[keep], prompt_ids[keep]
    if rows.shape[0] == 0:
        raise ValueError("all rows degenerate after dropping")
    return ProcessedGradients(
        n=fs.n,
        m=fs.m,
        d=fs.d,
        rows_h=rows,
        rows_h_tilde=rows / norms[:, None],
        norms=norms,
        prompt_ids=prompt_ids,
        dropped=int(degenerate.sum()),
    )
