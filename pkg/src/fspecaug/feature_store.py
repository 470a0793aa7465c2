"""Feature corpora: the FSA1 archive format, global statistics, synthetic data.

FSA1 layout (little-endian)::

    magic   8 bytes   b"FSAFEAT1"
    count   u32       number of utterances
    then per utterance:
        id_len  u16
        id      id_len bytes, UTF-8
        T       u32   frames
        D       u32   dimensions
        values  T*D float32, frame-major

Framing metadata (frame shift, window length) is not stored; records read
back carry the defaults.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, List, Sequence, TextIO, Tuple

import numpy as np

from .errors import DataError, FormatError
from .rng import Rng

MAGIC = b"FSAFEAT1"
VAR_FLOOR = 1e-10

_HEADER = struct.Struct("<8sI")
_ID_LEN = struct.Struct("<H")
_SHAPE = struct.Struct("<II")


@dataclass(eq=False)
class FeatureMatrix:
    """One utterance: a T x D grid of float32 log Mel energies.

    ``values`` is copied on construction and frozen (read-only), so a matrix
    can be shared freely; transforms always produce new arrays.
    """

    utterance_id: str
    values: np.ndarray
    frame_shift_ms: float = 10.0
    window_ms: float = 25.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float32, copy=True, order="C")
        if values.ndim != 2:
            raise DataError(f"{self.utterance_id!r}: values must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"{self.utterance_id!r}: T and D must be >= 1, got {values.shape}")
        if not (self.frame_shift_ms > 0 and self.window_ms > 0):
            raise DataError(f"{self.utterance_id!r}: frame_shift_ms and window_ms must be positive")
        values.flags.writeable = False
        self.values = values
        check_finite(self)

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_dims(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.utterance_id == other.utterance_id
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
            and self.frame_shift_ms == other.frame_shift_ms
            and self.window_ms == other.window_ms
        )

    __hash__ = None


def check_finite(matrix: FeatureMatrix) -> None:
    bad = ~np.isfinite(matrix.values)
    if bad.any():
        t, d = (int(i) for i in np.argwhere(bad)[0])
        raise DataError(
            f"utterance {matrix.utterance_id!r}: non-finite value at frame {t}, dim {d}"
        )


@dataclass(eq=False)
class GlobalStats:
    per_dim_mean: np.ndarray
    per_dim_var: np.ndarray
    frame_count: int

    def __post_init__(self):
        self.per_dim_mean = np.asarray(self.per_dim_mean, dtype=np.float64)
        self.per_dim_var = np.asarray(self.per_dim_var, dtype=np.float64)
        if self.per_dim_mean.shape != self.per_dim_var.shape or self.per_dim_mean.ndim != 1:
            raise DataError("mean and variance vectors must be 1-D and of equal length")
        if (self.per_dim_var < 0).any():
            raise DataError("variance entries must be non-negative")
        if self.frame_count < 1:
            raise DataError("frame_count must be >= 1")

    @property
    def num_dims(self) -> int:
        return self.per_dim_mean.shape[0]

    @classmethod
    def identity(cls, num_dims: int) -> "GlobalStats":
        return cls(np.zeros(num_dims), np.ones(num_dims), 1)


# --------------------------------------------------------------------------
# FSA1 archive


def write_header(sink: BinaryIO, count: int) -> int:
    return sink.write(_HEADER.pack(MAGIC, count))


def write_record(sink: BinaryIO, matrix: FeatureMatrix) -> int:
    check_finite(matrix)
    ident = matrix.utterance_id.encode("utf-8")
    if len(ident) > 0xFFFF:
        raise DataError(f"utterance id too long ({len(ident)} bytes)")
    n = sink.write(_ID_LEN.pack(len(ident)))
    n += sink.write(ident)
    n += sink.write(_SHAPE.pack(matrix.num_frames, matrix.num_dims))
    n += sink.write(matrix.values.astype("<f4", copy=False).tobytes())
    return n


def write_corpus(utterances: Sequence[FeatureMatrix], destination: BinaryIO) -> int:
    """Serialise ``utterances`` as FSA1 and return the number of bytes written."""
    utterances = list(utterances)
    n = write_header(destination, len(utterances))
    for matrix in utterances:
        n += write_record(destination, matrix)
    return n


def read_corpus(source: BinaryIO) -> List[FeatureMatrix]:
    data = source.read()
    if len(data) < _HEADER.size:
        raise FormatError("truncated archive header")
    magic, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    pos = _HEADER.size
    out = []
    for index in range(count):
        where = f"utterance #{index}"
        if pos + _ID_LEN.size > len(data):
            raise FormatError(f"truncated archive at {where} (id length)")
        (id_len,) = _ID_LEN.unpack_from(data, pos)
        pos += _ID_LEN.size
        if pos + id_len + _SHAPE.size > len(data):
            raise FormatError(f"truncated archive at {where} (id/shape)")
        try:
            ident = data[pos:pos + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{where}: id is not valid UTF-8") from exc
        where = f"utterance #{index} ({ident!r})"
        pos += id_len
        T, D = _SHAPE.unpack_from(data, pos)
        pos += _SHAPE.size
        if T == 0 or D == 0:
            raise FormatError(f"{where}: declared T={T}, D={D}; both must be >= 1")
        nbytes = 4 * T * D
        if pos + nbytes > len(data):
            raise FormatError(
                f"truncated archive in {where}: need {nbytes} value bytes, "
                f"{len(data) - pos} available"
            )
        values = np.frombuffer(data, dtype="<f4", count=T * D, offset=pos).reshape(T, D)
        pos += nbytes
        try:
            out.append(FeatureMatrix(ident, values))
        except DataError as exc:
            raise FormatError(str(exc)) from exc
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after {count} utterances")
    return out


def save_corpus(path, utterances: Sequence[FeatureMatrix]) -> int:
    with open(path, "wb") as fh:
        return write_corpus(utterances, fh)


def load_corpus(path) -> List[FeatureMatrix]:
    with open(path, "rb") as fh:
        return read_corpus(fh)


def corpus_bytes(utterances: Sequence[FeatureMatrix]) -> bytes:
    buf = io.BytesIO()
    write_corpus(utterances, buf)
    return buf.getvalue()


# --------------------------------------------------------------------------
# Global statistics


def _common_dims(corpus: Sequence[FeatureMatrix]) -> int:
    if not corpus:
        raise DataError("cannot compute statistics of an empty corpus")
    dims = {m.num_dims for m in corpus}
    if len(dims) != 1:
        raise DataError(f"mixed feature dimensions in corpus: {sorted(dims)}")
    return dims.pop()


def compute_global_stats(corpus: Sequence[FeatureMatrix]) -> GlobalStats:
    """Per-dimension mean and population variance pooled over every frame.

    Two passes with float64 accumulators in corpus order (mean first, then
    centred squares), so the result does not depend on scheduling.
    """
    corpus = list(corpus)
    D = _common_dims(corpus)
    n = 0
    total = np.zeros(D, dtype=np.float64)
    for m in corpus:
        total += m.values.sum(axis=0, dtype=np.float64)
        n += m.num_frames
    mean = total / n
    sq = np.zeros(D, dtype=np.float64)
    for m in corpus:
        centred = m.values.astype(np.float64) - mean
        sq += np.einsum("td,td->d", centred, centred)
    return GlobalStats(mean, sq / n, n)


def normalize(matrix: FeatureMatrix, stats: GlobalStats) -> FeatureMatrix:
    if stats.num_dims != matrix.num_dims:
        raise DataError(
            f"stats have D={stats.num_dims} but utterance {matrix.utterance_id!r} has D={matrix.num_dims}"
        )
    scale = np.sqrt(np.maximum(stats.per_dim_var, VAR_FLOOR))
    out = (matrix.values.astype(np.float64) - stats.per_dim_mean) / scale
    return FeatureMatrix(matrix.utterance_id, out.astype(np.float32), matrix.frame_shift_ms, matrix.window_ms)


def write_stats(stats: GlobalStats, sink: TextIO) -> None:
    sink.write(f"D={stats.num_dims} frames={stats.frame_count}\n")
    for d, (mu, var) in enumerate(zip(stats.per_dim_mean, stats.per_dim_var)):
        sink.write(f"{d},{mu:.9g},{var:.9g}\n")


def read_stats(source: TextIO) -> GlobalStats:
    lines = [ln.strip() for ln in source.read().splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty stats file")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0].split())
        D, frames = int(fields["D"]), int(fields["frames"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad stats header {lines[0]!r}") from exc
    if len(lines) - 1 != D:
        raise FormatError(f"stats header declares D={D} but has {len(lines) - 1} rows")
    mean = np.empty(D)
    var = np.empty(D)
    for expected, line in enumerate(lines[1:]):
        try:
            d, mu, v = line.split(",")
            d = int(d)
            mean[expected], var[expected] = float(mu), float(v)
        except ValueError as exc:
            raise FormatError(f"bad stats row {line!r}") from exc
        if d != expected:
            raise FormatError(f"stats rows out of order: got dim {d}, expected {expected}")
    try:
        return GlobalStats(mean, var, frames)
    except DataError as exc:
        raise FormatError(str(exc)) from exc


# --------------------------------------------------------------------------
# Synthetic corpora


def gen_synthetic(
    num_utterances: int,
    frames_range: Tuple[int, int],
    D: int,
    seed: int,
) -> List[FeatureMatrix]:
    """Deterministic standard-normal corpus.

    For each utterance in turn: ``T = uniform_int(lo, hi)``, then ``T*D``
    Box-Muller normals filled frame-major. Ids are ``utt00000``, ``utt00001``...
    """
    lo, hi = frames_range
    if num_utterances < 0:
        raise ValueError("num_utterances must be >= 0")
    if D < 2:
        raise ValueError("D must be >= 2")
    if lo < 1 or lo > hi:
        raise ValueError(f"bad frames range [{lo}, {hi}]")
    rng = Rng(seed)
    out = []
    for i in range(num_utterances):
        T = rng.uniform_int(lo, hi)
        values = rng.standard_normal(T * D).reshape(T, D)
        out.append(FeatureMatrix(f"utt{i:05d}", values))
    return out

