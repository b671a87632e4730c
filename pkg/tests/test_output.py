import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radm.diagnostics import DiagRecord
from radm.errors import OutputLockedError, SnapshotError
from radm.output import (
    CSV_COLUMNS,
    HEADER_SIZE,
    PHYSICAL,
    SPECTRAL,
    dump_snapshot,
    output_lock,
    read_diag_csv,
    read_snapshot,
    write_diag_csv,
    write_snapshot,
)
from radm.spectral import SpectralVectorField, random_field, shared_grid

finite = st.floats(allow_nan=False, allow_infinity=False)


class TestCsv:
    def test_header_only(self, tmp_path):
        p = tmp_path / "d.csv"
        write_diag_csv([], p)
        assert p.read_bytes() == (",".join(CSV_COLUMNS) + "\n").encode()

    def test_zero_record(self, tmp_path):
        p = tmp_path / "d.csv"
        write_diag_csv([DiagRecord(0.25, *([0.0] * 8))], p)
        assert p.read_text().splitlines()[1] == "0.25," + ",".join(["0.0"] * 8)

    @given(st.lists(st.tuples(*([finite] * 9)), max_size=5))
    def test_round_trip_bit_exact(self, rows):
        import tempfile
        from pathlib import Path

        recs = [DiagRecord(*r) for r in rows]
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "d.csv"
            write_diag_csv(recs, p)
            back = read_diag_csv(p)
            assert b"\r" not in p.read_bytes()
        assert len(back) == len(recs)
        for a, b in zip(recs, back):
            for name in DiagRecord.field_names():
                x, y = getattr(a, name), getattr(b, name)
                assert struct.pack("<d", x) == struct.pack("<d", y)

    def test_io_error_names_path(self, tmp_path):
        target = tmp_path / "missing" / "d.csv"
        with pytest.raises(OSError) as err:
            write_diag_csv([], target)
        assert str(target) in str(err.value)


class TestSnapshot:
    @given(st.integers(0, 2**32 - 1), st.sampled_from([8, 10, 16]))
    def test_spectral_round_trip_bitwise(self, seed, n):
        import tempfile
        from pathlib import Path

        v = random_field(shared_grid(n), np.random.default_rng(seed), mask=False)
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "s.snap"
            write_snapshot(v, p, t=0.125, alpha=0.25, theta=0.5, deconv_order=4)
            snap = read_snapshot(p)
        assert np.array_equal(snap.field.coeffs, v.coeffs)
        h = snap.header
        assert (h.n_per_axis, h.t, h.alpha, h.theta, h.deconv_order, h.payload_kind) == (n, 0.125, 0.25, 0.5, 4, SPECTRAL)

    def test_physical_round_trip(self, tmp_path, grid16, rng):
        v = random_field(grid16, rng)
        p = tmp_path / "p.snap"
        write_snapshot(v, p, payload_kind=PHYSICAL)
        back = read_snapshot(p).field.coeffs
        assert np.max(np.abs(back - v.coeffs)) <= 1e-12 * np.max(np.abs(v.coeffs))

    def test_layout(self, tmp_path, grid8):
        v = SpectralVectorField.zeros(grid8)
        v.set_mode((-3, -3, -3), (1 + 2j, 0, 0))
        v.set_mode((3, 3, 3), (1 - 2j, 0, 0))
        p = tmp_path / "l.snap"
        write_snapshot(v, p)
        blob = p.read_bytes()
        assert blob[:8] == b"RADMSNP1" and blob[8] == 1
        assert struct.unpack_from("<I", blob, 9)[0] == 8
        assert HEADER_SIZE == 42 and len(blob) == HEADER_SIZE + 8**3 * 6 * 8
        # k = (-3,-3,-3) is the first mode in lexicographic order
        assert struct.unpack_from("<2d", blob, HEADER_SIZE) == (1.0, 2.0)

    def test_bad_magic(self, tmp_path, grid8, rng):
        p = tmp_path / "m.snap"
        write_snapshot(random_field(grid8, rng), p)
        blob = bytearray(p.read_bytes())
        blob[:8] = b"RADMSNP2"
        p.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="magic"):
            read_snapshot(p)

    @pytest.mark.parametrize("cut", [10, HEADER_SIZE, HEADER_SIZE + 100])
    def test_truncation(self, tmp_path, grid8, rng, cut):
        p = tmp_path / "t.snap"
        write_snapshot(random_field(grid8, rng), p)
        p.write_bytes(p.read_bytes()[:cut])
        with pytest.raises(SnapshotError):
            read_snapshot(p)

    def test_trailing_bytes(self, tmp_path, grid8, rng):
        p = tmp_path / "x.snap"
        write_snapshot(random_field(grid8, rng), p)
        p.write_bytes(p.read_bytes() + b"\0")
        with pytest.raises(SnapshotError):
            read_snapshot(p)

    def test_hermitian_violation(self, tmp_path, grid8):
        v = SpectralVectorField.zeros(grid8)
        v.set_mode((1, 0, 0), (1, 0, 0))
        p = tmp_path / "h.snap"
        write_snapshot(v, p)
        with pytest.raises(SnapshotError, match="symmetry"):
            read_snapshot(p)

    def test_dump(self, tmp_path, grid8):
        v = SpectralVectorField.zeros(grid8)
        v.set_mode((1, 0, 0), (0, 1, 0))
        v.set_mode((-1, 0, 0), (0, 1, 0))
        p = tmp_path / "d.snap"
        write_snapshot(v, p, t=1.5)
        lines = dump_snapshot(read_snapshot(p), threshold=0.0)
        assert lines[1] == "t 1.5"
        assert len(lines) == 4 + 2
        assert lines[4].startswith("k=( -1,  0,  0)")


def test_output_lock_is_exclusive(tmp_path):
    with output_lock(tmp_path / "out"):
        with pytest.raises(OutputLockedError):
            with output_lock(tmp_path / "out"):
                pass
    with output_lock(tmp_path / "out"):
        pass
