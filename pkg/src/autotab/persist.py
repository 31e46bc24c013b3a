"""Artifact and report persistence.

Fitted pipelines are written as a self-describing little-endian binary file
(magic, format version, typed payload, SHA-256 checksum) so loads are
cross-version safe and corruption is detected instead of crashing.  Reports
are structured JSON with stable key order; the schema is documented in
docs/report_schema.md.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ArtifactError
from .metrics import Metric
from .pipeline import EnsemblePipeline, FittedPipeline, pipeline_from_state, pipeline_state

MAGIC = b"ATAB"
FORMAT_VERSION = 1
ARTIFACT_EXTENSION = ".acp"

_T_NONE = b"N"
_T_TRUE = b"T"
_T_FALSE = b"F"
_T_INT = b"I"
_T_FLOAT = b"D"
_T_STR = b"S"
_T_LIST = b"L"
_T_DICT = b"M"
_T_ARRAY = b"A"
_T_CSR = b"C"


def _pack_u64(n: int) -> bytes:
    return struct.pack("<Q", n)


def _le_array(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    if arr.dtype == object:
        raise ArtifactError("object arrays cannot be serialized; use lists")
    return arr


def _write_obj(out: list[bytes], obj) -> None:
    if obj is None:
        out.append(_T_NONE)
    elif obj is True:
        out.append(_T_TRUE)
    elif obj is False:
        out.append(_T_FALSE)
    elif isinstance(obj, (int, np.integer)):
        out.append(_T_INT + struct.pack("<q", int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_T_FLOAT + struct.pack("<d", float(obj)))
    elif isinstance(obj, str):
        raw = obj.encode("utf-8")
        out.append(_T_STR + _pack_u64(len(raw)) + raw)
    elif isinstance(obj, np.ndarray):
        if obj.dtype == object:
            _write_obj(out, list(obj))
            return
        arr = _le_array(obj)
        dtype = arr.dtype.str.encode()
        out.append(_T_ARRAY + _pack_u64(len(dtype)) + dtype + _pack_u64(arr.ndim))
        for dim in arr.shape:
            out.append(_pack_u64(dim))
        raw = arr.tobytes()
        out.append(_pack_u64(len(raw)) + raw)
    elif sp.issparse(obj):
        csr = obj.tocsr()
        out.append(_T_CSR + _pack_u64(csr.shape[0]) + _pack_u64(csr.shape[1]))
        _write_obj(out, csr.data)
        _write_obj(out, csr.indices)
        _write_obj(out, csr.indptr)
    elif isinstance(obj, (list, tuple)):
        out.append(_T_LIST + _pack_u64(len(obj)))
        for item in obj:
            _write_obj(out, item)
    elif isinstance(obj, dict):
        out.append(_T_DICT + _pack_u64(len(obj)))
        for key, value in obj.items():
            if not isinstance(key, str):
                raise ArtifactError(f"dict keys must be strings, got {type(key).__name__}")
            _write_obj(out, key)
            _write_obj(out, value)
    else:
        raise ArtifactError(f"cannot serialize {type(obj).__name__}")


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ArtifactError("artifact payload truncated")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def read_obj(self):
        tag = self.take(1)
        if tag == _T_NONE:
            return None
        if tag == _T_TRUE:
            return True
        if tag == _T_FALSE:
            return False
        if tag == _T_INT:
            return struct.unpack("<q", self.take(8))[0]
        if tag == _T_FLOAT:
            return struct.unpack("<d", self.take(8))[0]
        if tag == _T_STR:
            return self.take(self.u64()).decode("utf-8")
        if tag == _T_ARRAY:
            dtype = np.dtype(self.take(self.u64()).decode())
            ndim = self.u64()
            shape = tuple(self.u64() for _ in range(ndim))
            raw = self.take(self.u64())
            return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        if tag == _T_CSR:
            rows = self.u64()
            cols = self.u64()
            data = self.read_obj()
            indices = self.read_obj()
            indptr = self.read_obj()
            return sp.csr_matrix((data, indices, indptr), shape=(rows, cols))
        if tag == _T_LIST:
            return [self.read_obj() for _ in range(self.u64())]
        if tag == _T_DICT:
            return {self.read_obj(): self.read_obj() for _ in range(self.u64())}
        raise ArtifactError(f"unknown payload tag {tag!r}")


def _serialize(obj) -> bytes:
    out: list[bytes] = []
    _write_obj(out, obj)
    return b"".join(out)


def save_pipeline(pipeline: FittedPipeline | EnsemblePipeline, path) -> None:
    """Write a fitted pipeline to a checksummed versioned binary file."""
    payload = _serialize(pipeline_state(pipeline))
    body = MAGIC + struct.pack("<I", FORMAT_VERSION) + _pack_u64(len(payload)) + payload
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(body + digest)


def load_pipeline(path) -> FittedPipeline | EnsemblePipeline:
    """Load a pipeline artifact, verifying magic, version and checksum."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact {path}: {exc}") from exc
    if len(blob) < len(MAGIC) + 4 + 8 + 32:
        raise ArtifactError(f"{path}: file too short to be a pipeline artifact")
    if blob[: len(MAGIC)] != MAGIC:
        raise ArtifactError(f"{path}: bad magic; not a pipeline artifact")
    version = struct.unpack("<I", blob[4:8])[0]
    if version != FORMAT_VERSION:
        raise ArtifactError(
            f"{path}: unsupported artifact format version {version} (supported: {FORMAT_VERSION})"
        )
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ArtifactError(f"{path}: checksum mismatch; file is corrupt or truncated")
    reader = _Reader(body)
    reader.take(len(MAGIC) + 4)
    payload_len = reader.u64()
    if payload_len != len(body) - reader.pos:
        raise ArtifactError(f"{path}: payload length mismatch")
    state = reader.read_obj()
    return pipeline_from_state(state)


@dataclass
class Report:
    """Full run summary: leaderboard, winner, timing, config echo."""

    dataset_summary: dict
    task: str
    metric: Metric
    leaderboard: list  # EvaluationRecords, already sorted
    winner_id: str
    winner_score: float | None
    elapsed_seconds: float
    seed: int
    config: dict
    created_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "created_at": self.created_at,
            "dataset": self.dataset_summary,
            "task": self.task,
            "metric": {"kind": self.metric.kind, "direction": self.metric.direction},
            "seed": self.seed,
            "config": self.config,
            "winner": {"pipeline_id": self.winner_id, "score": self.winner_score},
            "elapsed_seconds": self.elapsed_seconds,
            "leaderboard": [
                {
                    "pipeline_id": r.pipeline_id,
                    "status": r.status,
                    "score": r.score,
                    "fit_seconds": r.fit_seconds,
                    "eval_seconds": r.eval_seconds,
                    "error": r.error,
                }
                for r in self.leaderboard
            ],
        }


def write_report(report: Report, path) -> None:
    """Serialize a report as stable-ordered JSON (diff-friendly)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def report_comparable(report_dict: dict) -> dict:
    """A copy with volatile timing fields stripped, for run-to-run diffs."""
    out = json.loads(json.dumps(report_dict))
    out.pop("created_at", None)
    out.pop("elapsed_seconds", None)
    for row in out.get("leaderboard", []):
        row.pop("fit_seconds", None)
        row.pop("eval_seconds", None)
    return out
