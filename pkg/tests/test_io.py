"""Round-trip and corruption tests for the file formats.

Crafted files are packed with local struct calls rather than the library's
own constants, so these tests double as a regression check on the byte
layout itself.
"""

import os
import struct
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embalign import (
    BadMagicError,
    DuplicateIdError,
    EmbeddingFormatError,
    EmbeddingMatrix,
    LinearTransform,
    NonFiniteValueError,
    OrthogonalTransform,
    TruncatedFileError,
    ValidationError,
    load_embeddings,
    pair_by_id,
    read_embeddings,
    read_embeddings_tsv,
    read_header,
    read_transform,
    write_embeddings,
    write_embeddings_tsv,
    write_transform,
)
from embalign.io import atomic_write
from embalign.solvers import random_orthogonal

from conftest import make_ids, random_embedding

HEADER = struct.Struct("<4sBIQQ")


def pack_file(path, magic=b"EMB1", dtype=1, dims=1, count=1,
              id_block=b"a", records=None):
    if records is None:
        records = struct.pack("<d", 1.5) * (count * dims)
    path.write_bytes(HEADER.pack(magic, dtype, dims, count, len(id_block))
                     + id_block + records)


class TestBinaryRoundTrip:
    @given(
        st.integers(1, 6).flatmap(lambda d: st.lists(
            st.lists(st.floats(allow_nan=False, allow_infinity=False),
                     min_size=d, max_size=d),
            min_size=1, max_size=8)),
    )
    @settings(max_examples=25, deadline=None)
    def test_wide_records_are_bitwise_exact(self, rows):
        m = EmbeddingMatrix(np.array(rows), make_ids(len(rows)))
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "m.emb")
            write_embeddings(m, path, dtype=1)
            back = read_embeddings(path)
        assert np.array_equal(back.vectors, m.vectors)
        assert back.ids == m.ids

    def test_narrow_records_round_to_f32(self, rng):
        m = random_embedding(rng, 5, 3)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "m.emb")
            write_embeddings(m, path, dtype=0)
            back = read_embeddings(path)
        expected = m.vectors.astype(np.float32).astype(np.float64)
        assert np.array_equal(back.vectors, expected)

    @pytest.mark.parametrize("dtype", [0, 1])
    def test_integer_values_survive_both_widths(self, tmp_path, dtype):
        m = EmbeddingMatrix(np.array([[1.0, -2.0, 3.0], [0.0, 5.0, -6.0]]),
                            ("u", "v"))
        path = tmp_path / "ints.emb"
        write_embeddings(m, path, dtype=dtype)
        assert np.array_equal(read_embeddings(path).vectors, m.vectors)

    def test_empty_set_round_trips(self, tmp_path):
        m = EmbeddingMatrix(np.empty((0, 4)), ())
        path = tmp_path / "empty.emb"
        write_embeddings(m, path, dtype=1)
        back = read_embeddings(path)
        assert back.count == 0
        assert back.dims == 4

    def test_unicode_ids(self, tmp_path):
        m = EmbeddingMatrix(np.array([[1.0], [2.0]]), ("café", "né-1"))
        path = tmp_path / "uni.emb"
        write_embeddings(m, path)
        assert read_embeddings(path).ids == ("café", "né-1")

    def test_header_reports_layout(self, tmp_path, rng):
        m = random_embedding(rng, 7, 3)
        path = tmp_path / "m.emb"
        write_embeddings(m, path, dtype=0)
        header = read_header(path)
        assert header.magic == b"EMB1"
        assert header.dtype == 0
        assert (header.dims, header.count) == (3, 7)
        assert header.id_block_len == len("\n".join(m.ids).encode())
        assert header.total_bytes == os.path.getsize(path)

    def test_newline_in_id_rejected(self, tmp_path):
        m = EmbeddingMatrix(np.array([[1.0]]), ("bad\nid",))
        with pytest.raises(ValidationError, match="newline"):
            write_embeddings(m, tmp_path / "no.emb")

    def test_bad_dtype_code_rejected(self, tmp_path, rng):
        with pytest.raises(ValidationError, match="dtype"):
            write_embeddings(random_embedding(rng, 2, 2), tmp_path / "x.emb",
                             dtype=2)


class TestCorruptFiles:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.emb"
        pack_file(path, magic=b"XYZ1")
        with pytest.raises(BadMagicError):
            read_embeddings(path)

    def test_magic_prefix_still_truncated(self, tmp_path):
        # Three bytes that agree with the magic: treated as a cut-off
        # file, not a foreign one.
        path = tmp_path / "cut.emb"
        path.write_bytes(b"EMB")
        with pytest.raises(TruncatedFileError, match="incomplete header"):
            read_embeddings(path)
        path.write_bytes(b"ZZZ")
        with pytest.raises(BadMagicError):
            read_embeddings(path)

    @pytest.mark.parametrize("keep", [10, 21, 24])
    def test_truncated_bodies(self, tmp_path, rng, keep):
        # 25-byte header + 9-byte id block + records; cuts inside the
        # header, the id block, and the records must all fail cleanly.
        path = tmp_path / "t.emb"
        write_embeddings(random_embedding(rng, 2, 2), path, dtype=1)
        data = path.read_bytes()
        path.write_bytes(data[:keep])
        with pytest.raises(TruncatedFileError):
            read_embeddings(path)

    def test_trailing_bytes(self, tmp_path, rng):
        path = tmp_path / "t.emb"
        write_embeddings(random_embedding(rng, 2, 2), path)
        path.write_bytes(path.read_bytes() + b"!")
        with pytest.raises(EmbeddingFormatError, match="trailing"):
            read_embeddings(path)

    def test_duplicate_id_named(self, tmp_path):
        path = tmp_path / "dup.emb"
        pack_file(path, dims=1, count=2, id_block=b"a\na",
                  records=struct.pack("<2d", 1.0, 2.0))
        with pytest.raises(DuplicateIdError, match="'a'"):
            read_embeddings(path)

    def test_non_finite_records(self, tmp_path):
        path = tmp_path / "inf.emb"
        pack_file(path, records=struct.pack("<d", float("inf")))
        with pytest.raises(NonFiniteValueError):
            read_embeddings(path)

    def test_zero_dims(self, tmp_path):
        path = tmp_path / "zero.emb"
        pack_file(path, dims=0, count=1, id_block=b"a", records=b"")
        with pytest.raises(EmbeddingFormatError, match="dims"):
            read_embeddings(path)

    def test_unknown_dtype(self, tmp_path):
        path = tmp_path / "dt.emb"
        pack_file(path, dtype=7)
        with pytest.raises(EmbeddingFormatError, match="dtype"):
            read_embeddings(path)

    def test_id_count_mismatch(self, tmp_path):
        path = tmp_path / "ids.emb"
        pack_file(path, count=2, id_block=b"only",
                  records=struct.pack("<2d", 1.0, 2.0))
        with pytest.raises(EmbeddingFormatError, match="declares 2"):
            read_embeddings(path)

    def test_id_block_not_utf8(self, tmp_path):
        path = tmp_path / "enc.emb"
        pack_file(path, id_block=b"\xff\xfe")
        with pytest.raises(EmbeddingFormatError, match="UTF-8"):
            read_embeddings(path)


class TestTsv:
    def test_round_trip_is_exact(self, tmp_path, rng):
        m = EmbeddingMatrix(rng.standard_normal((6, 3)) * 10.0 ** rng.integers(
            -8, 9, size=(6, 3)), make_ids(6))
        path = tmp_path / "m.tsv"
        write_embeddings_tsv(m, path)
        back = read_embeddings_tsv(path)
        assert np.array_equal(back.vectors, m.vectors)
        assert back.ids == m.ids

    def test_agrees_with_binary(self, tmp_path, rng):
        m = random_embedding(rng, 4, 2)
        write_embeddings(m, tmp_path / "m.emb", dtype=1)
        write_embeddings_tsv(m, tmp_path / "m.tsv")
        a = read_embeddings(tmp_path / "m.emb")
        b = read_embeddings_tsv(tmp_path / "m.tsv")
        assert np.array_equal(a.vectors, b.vectors)
        assert a.ids == b.ids

    def test_tab_in_id_rejected(self, tmp_path):
        m = EmbeddingMatrix(np.array([[1.0]]), ("a\tb",))
        with pytest.raises(ValidationError, match="tab"):
            write_embeddings_tsv(m, tmp_path / "x.tsv")

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "r.tsv"
        path.write_text("a\t1.0\t2.0\nb\t3.0\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError, match=":2:"):
            read_embeddings_tsv(path)

    def test_unparseable_value(self, tmp_path):
        path = tmp_path / "v.tsv"
        path.write_text("a\tone\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError, match="unparseable"):
            read_embeddings_tsv(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("a\t1.0\na\t2.0\n", encoding="utf-8")
        with pytest.raises(DuplicateIdError):
            read_embeddings_tsv(path)

    def test_non_finite(self, tmp_path):
        path = tmp_path / "n.tsv"
        path.write_text("a\tnan\n", encoding="utf-8")
        with pytest.raises(NonFiniteValueError):
            read_embeddings_tsv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.tsv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError, match="no data"):
            read_embeddings_tsv(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "b.tsv"
        path.write_text("a\t1.0\n\nb\t2.0\n", encoding="utf-8")
        assert read_embeddings_tsv(path).ids == ("a", "b")


class TestLoadSniffing:
    def test_routes_by_magic(self, tmp_path, rng):
        m = random_embedding(rng, 3, 2)
        write_embeddings(m, tmp_path / "m.emb", dtype=1)
        write_embeddings_tsv(m, tmp_path / "m.tsv")
        for name in ("m.emb", "m.tsv"):
            back = load_embeddings(tmp_path / name)
            assert np.array_equal(back.vectors, m.vectors)


class TestTransformIo:
    def test_orthogonal_round_trip(self, tmp_path, rng):
        q = random_orthogonal(4, rng)
        path = tmp_path / "q.qmt"
        write_transform(OrthogonalTransform(q), path)
        back = read_transform(path)
        assert isinstance(back, OrthogonalTransform)
        assert np.array_equal(back.matrix, q)

    def test_linear_round_trip(self, tmp_path):
        a = 2.0 * np.eye(3)
        path = tmp_path / "a.qmt"
        write_transform(LinearTransform(a), path)
        back = read_transform(path)
        assert isinstance(back, LinearTransform)
        assert not isinstance(back, OrthogonalTransform)
        assert np.array_equal(back.matrix, a)

    def test_rejects_raw_array(self, tmp_path):
        with pytest.raises(ValidationError, match="transform"):
            write_transform(np.eye(2), tmp_path / "x.qmt")

    def test_corrupt_variants(self, tmp_path):
        path = tmp_path / "bad.qmt"
        path.write_bytes(b"NOPE" + struct.pack("<I", 2) + b"\0" * 32)
        with pytest.raises(BadMagicError):
            read_transform(path)
        path.write_bytes(b"QMT1" + struct.pack("<I", 2) + b"\0" * 16)
        with pytest.raises(TruncatedFileError):
            read_transform(path)
        path.write_bytes(b"QMT1" + struct.pack("<I", 1)
                         + struct.pack("<d", 1.0) + b"x")
        with pytest.raises(EmbeddingFormatError, match="trailing"):
            read_transform(path)
        path.write_bytes(b"QMT1" + struct.pack("<I", 1)
                         + struct.pack("<d", float("nan")))
        with pytest.raises(NonFiniteValueError):
            read_transform(path)
        path.write_bytes(b"QM")
        with pytest.raises(TruncatedFileError):
            read_transform(path)
        path.write_bytes(b"QMT1" + struct.pack("<I", 0))
        with pytest.raises(EmbeddingFormatError, match="dims"):
            read_transform(path)


class TestPairById:
    def test_sorts_both_sides(self, rng):
        a = EmbeddingMatrix(rng.standard_normal((3, 2)), ("c", "a", "b"))
        b = EmbeddingMatrix(rng.standard_normal((3, 2)), ("b", "c", "a"))
        pa, pb = pair_by_id(a, b)
        assert pa.ids == pb.ids == ("a", "b", "c")
        lookup = dict(zip(a.ids, a.vectors))
        for i, row in zip(pa.ids, pa.vectors):
            assert np.array_equal(row, lookup[i])

    def test_partial_overlap_against_join_oracle(self, rng):
        a = EmbeddingMatrix(rng.standard_normal((5, 3)),
                            ("q", "w", "e", "r", "t"))
        b = EmbeddingMatrix(rng.standard_normal((4, 3)),
                            ("e", "z", "q", "t"))
        pa, pb = pair_by_id(a, b)
        assert pa.ids == ("e", "q", "t")
        rows_a = dict(zip(a.ids, a.vectors))
        rows_b = dict(zip(b.ids, b.vectors))
        for i, (ra, rb) in enumerate(zip(pa.vectors, pb.vectors)):
            assert np.array_equal(ra, rows_a[pa.ids[i]])
            assert np.array_equal(rb, rows_b[pa.ids[i]])

    def test_disjoint_sets_pair_to_nothing(self, rng):
        a = EmbeddingMatrix(rng.standard_normal((2, 2)), ("x", "y"))
        b = EmbeddingMatrix(rng.standard_normal((2, 2)), ("u", "v"))
        pa, pb = pair_by_id(a, b)
        assert pa.count == pb.count == 0
        assert pa.dims == 2

    def test_strict_requires_equal_sets(self, rng):
        a = EmbeddingMatrix(rng.standard_normal((3, 2)), ("a", "b", "c"))
        b = EmbeddingMatrix(rng.standard_normal((3, 2)), ("c", "a", "b"))
        pa, pb = pair_by_id(a, b, policy="strict")
        assert pa.ids == pb.ids

        c = EmbeddingMatrix(rng.standard_normal((3, 2)), ("a", "b", "d"))
        with pytest.raises(ValidationError, match="2 entries.*'c'"):
            pair_by_id(a, c, policy="strict")

    def test_unknown_policy(self, rng):
        a = random_embedding(rng, 2, 2)
        with pytest.raises(ValidationError, match="policy"):
            pair_by_id(a, a, policy="outer")


class TestAtomicWrite:
    def test_failure_leaves_no_file(self, tmp_path):
        target = tmp_path / "out.bin"
        with pytest.raises(RuntimeError):
            with atomic_write(target) as fh:
                fh.write(b"partial")
                raise RuntimeError("boom")
        assert not target.exists()
        assert os.listdir(tmp_path) == []

    def test_success_replaces(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old")
        with atomic_write(target, "w") as fh:
            fh.write("new\nline")
        assert target.read_text(encoding="utf-8") == "new\nline"
        assert target.read_bytes() == b"new\nline"
