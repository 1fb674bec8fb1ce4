"""Bit-exact persistence for embedding sets and fitted transforms.

Two file families live here.  Embedding sets use a small binary layout
(magic ``EMB1``) carrying IDs and item-major records in either 32- or
64-bit floats, plus a plain-text TSV alternative for interchange.
Transforms use their own layout (magic ``QMT1``) because a fitted map has
different validation and different semantics from data.

Readers are truncation-safe: the declared sizes in a header are checked
against the actual file length before any proportional allocation, so a
corrupt or cut-off file fails cleanly instead of exhausting memory.
Writers go through a temp-file-plus-rename so a crash never leaves a
half-written file at the destination path.
"""

from __future__ import annotations

import contextlib
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .types import EmbeddingMatrix, LinearTransform, OrthogonalTransform
from .validation import ValidationError

EMBEDDING_MAGIC = b"EMB1"
TRANSFORM_MAGIC = b"QMT1"

_HEADER = struct.Struct("<4sBIQQ")  # magic, dtype, dims, count, id_block_len
_TRANSFORM_HEADER = struct.Struct("<4sI")  # magic, dims

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class EmbeddingFormatError(ValidationError):
    """A file does not conform to the declared layout."""


class BadMagicError(EmbeddingFormatError):
    """The file does not start with the expected magic bytes."""


class TruncatedFileError(EmbeddingFormatError):
    """The file is shorter than its header declares."""


class DuplicateIdError(EmbeddingFormatError):
    """The ID block contains a repeated identifier."""


class NonFiniteValueError(EmbeddingFormatError):
    """A stored record contains NaN or infinity."""


@dataclass(frozen=True)
class EmbeddingFileHeader:
    """Parsed fixed-size header of an embedding file."""

    magic: bytes
    dtype: int
    dims: int
    count: int
    id_block_len: int

    @property
    def record_bytes(self) -> int:
        return self.count * self.dims * _DTYPES[self.dtype].itemsize

    @property
    def total_bytes(self) -> int:
        return _HEADER.size + self.id_block_len + self.record_bytes


@contextlib.contextmanager
def atomic_write(path, mode: str = "wb"):
    """Write to a temp file in the target directory, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.basename(path))
    try:
        kwargs = {} if "b" in mode else {"encoding": "utf-8", "newline": ""}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_embeddings(m: EmbeddingMatrix, path, dtype: int = 0) -> None:
    """Persist ``m`` at ``path``; ``dtype`` 0 stores 32-bit, 1 stores 64-bit.

    IDs are stored newline-separated, so an ID containing a newline is
    rejected.  With ``dtype`` 1 the file reads back exactly equal;
    ``dtype`` 0 rounds each value to the nearest 32-bit float.
    """
    if dtype not in _DTYPES:
        raise ValidationError(f"dtype must be 0 (32-bit) or 1 (64-bit), got {dtype}")
    for i in m.ids:
        if "\n" in i:
            raise ValidationError(f"ID {i!r} contains a newline")
    id_block = "\n".join(m.ids).encode("utf-8") if m.count else b""
    header = _HEADER.pack(EMBEDDING_MAGIC, dtype, m.dims, m.count, len(id_block))
    with atomic_write(path) as fh:
        fh.write(header)
        fh.write(id_block)
        fh.write(np.ascontiguousarray(m.vectors, dtype=_DTYPES[dtype]).tobytes())


def read_header(path) -> EmbeddingFileHeader:
    with open(path, "rb") as fh:
        return _parse_header(fh.read(_HEADER.size), path)


def _parse_header(raw: bytes, path) -> EmbeddingFileHeader:
    if len(raw) < _HEADER.size:
        if not raw.startswith(EMBEDDING_MAGIC[: len(raw)]) and raw:
            raise BadMagicError(f"{path}: not an embedding file")
        raise TruncatedFileError(f"{path}: incomplete header")
    magic, dtype, dims, count, id_block_len = _HEADER.unpack(raw)
    if magic != EMBEDDING_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if dtype not in _DTYPES:
        raise EmbeddingFormatError(f"{path}: unknown dtype code {dtype}")
    if dims < 1:
        raise EmbeddingFormatError(f"{path}: dims must be >= 1, got {dims}")
    return EmbeddingFileHeader(magic, dtype, dims, count, id_block_len)


def read_embeddings(path) -> EmbeddingMatrix:
    """Load an embedding file; 32-bit records are widened to 64-bit exactly."""
    with open(path, "rb") as fh:
        header = _parse_header(fh.read(_HEADER.size), path)
        actual = os.fstat(fh.fileno()).st_size
        if actual < header.total_bytes:
            raise TruncatedFileError(
                f"{path}: header declares {header.total_bytes} bytes, "
                f"file has {actual}"
            )
        if actual > header.total_bytes:
            raise EmbeddingFormatError(
                f"{path}: {actual - header.total_bytes} trailing bytes"
            )
        ids = _parse_id_block(fh.read(header.id_block_len), header.count, path)
        raw = fh.read(header.record_bytes)
    values = np.frombuffer(raw, dtype=_DTYPES[header.dtype])
    values = values.reshape(header.count, header.dims).astype(np.float64)
    if not np.isfinite(values).all():
        raise NonFiniteValueError(f"{path}: non-finite values in records")
    return EmbeddingMatrix(values, ids)


def _parse_id_block(block: bytes, count: int, path) -> tuple[str, ...]:
    if count == 0:
        if block:
            raise EmbeddingFormatError(f"{path}: id block for zero items")
        return ()
    try:
        parts = block.decode("utf-8").split("\n")
    except UnicodeDecodeError as exc:
        raise EmbeddingFormatError(f"{path}: id block is not UTF-8: {exc}") from None
    if len(parts) != count:
        raise EmbeddingFormatError(
            f"{path}: id block holds {len(parts)} ids, header declares {count}"
        )
    seen = set()
    for i in parts:
        if i in seen:
            raise DuplicateIdError(f"{path}: duplicate id {i!r}")
        seen.add(i)
    return tuple(parts)


def write_embeddings_tsv(m: EmbeddingMatrix, path) -> None:
    """Write ``id<TAB>v1<TAB>...<TAB>vD`` lines, UTF-8 with LF endings.

    Values are rendered with shortest round-trip notation, so a TSV
    written and re-read reproduces the 64-bit values exactly.
    """
    for i in m.ids:
        if "\n" in i or "\t" in i:
            raise ValidationError(f"ID {i!r} contains a tab or newline")
    with atomic_write(path, "w") as fh:
        for i, row in zip(m.ids, m.vectors):
            fh.write(i + "\t" + "\t".join(repr(v) for v in row.tolist()) + "\n")


def read_embeddings_tsv(path) -> EmbeddingMatrix:
    ids: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dims = None
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if dims is None:
                dims = len(parts) - 1
                if dims < 1:
                    raise EmbeddingFormatError(
                        f"{path}:{lineno}: expected id and at least one value"
                    )
            elif len(parts) - 1 != dims:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dims} values, got {len(parts) - 1}"
                )
            if parts[0] in seen:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate id {parts[0]!r}")
            seen.add(parts[0])
            try:
                row = [float(v) for v in parts[1:]]
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: unparseable value"
                ) from None
            if not all(np.isfinite(row)):
                raise NonFiniteValueError(f"{path}:{lineno}: non-finite value")
            ids.append(parts[0])
            rows.append(row)
    if dims is None:
        raise EmbeddingFormatError(f"{path}: no data lines")
    return EmbeddingMatrix(np.array(rows, dtype=np.float64), ids)


def load_embeddings(path) -> EmbeddingMatrix:
    """Read either format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        magic = fh.read(len(EMBEDDING_MAGIC))
    if magic == EMBEDDING_MAGIC:
        return read_embeddings(path)
    return read_embeddings_tsv(path)


def write_transform(t: OrthogonalTransform | LinearTransform, path) -> None:
    """Persist a fitted square transform as 64-bit row-major records."""
    if not isinstance(t, (OrthogonalTransform, LinearTransform)):
        raise ValidationError(
            f"expected a transform, got {type(t).__name__}"
        )
    with atomic_write(path) as fh:
        fh.write(_TRANSFORM_HEADER.pack(TRANSFORM_MAGIC, t.dims))
        fh.write(np.ascontiguousarray(t.matrix, dtype="<f8").tobytes())


def read_transform(path) -> OrthogonalTransform | LinearTransform:
    """Load a stored transform, classifying it by its actual geometry.

    A matrix orthogonal within tolerance comes back as an
    :class:`OrthogonalTransform` (so downstream code may rely on isometry
    and cheap inversion); anything else is a :class:`LinearTransform`.
    """
    with open(path, "rb") as fh:
        raw = fh.read(_TRANSFORM_HEADER.size)
        if len(raw) < _TRANSFORM_HEADER.size:
            raise TruncatedFileError(f"{path}: incomplete header")
        magic, dims = _TRANSFORM_HEADER.unpack(raw)
        if magic != TRANSFORM_MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if dims < 1:
            raise EmbeddingFormatError(f"{path}: dims must be >= 1, got {dims}")
        expected = _TRANSFORM_HEADER.size + dims * dims * 8
        actual = os.fstat(fh.fileno()).st_size
        if actual < expected:
            raise TruncatedFileError(
                f"{path}: header declares {expected} bytes, file has {actual}"
            )
        if actual > expected:
            raise EmbeddingFormatError(f"{path}: {actual - expected} trailing bytes")
        matrix = np.frombuffer(fh.read(), dtype="<f8").reshape(dims, dims)
    if not np.isfinite(matrix).all():
        raise NonFiniteValueError(f"{path}: non-finite values in transform")
    try:
        return OrthogonalTransform(matrix)
    except ValidationError:
        return LinearTransform(matrix)


def pair_by_id(a: EmbeddingMatrix, b: EmbeddingMatrix,
               policy: str = "intersect") -> tuple[EmbeddingMatrix, EmbeddingMatrix]:
    """Reorder two sets onto a shared, lexicographically sorted ID sequence.

    ``intersect`` keeps the common IDs; ``strict`` requires the ID sets to
    be equal and reports the symmetric difference otherwise.  Row ``i`` of
    both outputs then describes the same item, which is the contract every
    alignment routine relies on.
    """
    if policy not in ("intersect", "strict"):
        raise ValidationError(
            f"policy must be 'intersect' or 'strict', got {policy!r}"
        )
    set_a, set_b = set(a.ids), set(b.ids)
    if policy == "strict" and set_a != set_b:
        diff = sorted(set_a ^ set_b)
        raise ValidationError(
            f"ID sets differ in {len(diff)} entries; first offenders: "
            f"{diff[:10]!r}"
        )
    common = sorted(set_a & set_b)
    index_a = {i: r for r, i in enumerate(a.ids)}
    index_b = {i: r for r, i in enumerate(b.ids)}
    rows_a = [index_a[i] for i in common]
    rows_b = [index_b[i] for i in common]
    return (
        EmbeddingMatrix(a.vectors[rows_a], common),
        EmbeddingMatrix(b.vectors[rows_b], common),
    )
