import numpy as np
import pytest

from cubesynth import (
    BitTable,
    Dataset,
    InputError,
    ParseError,
    ingest,
    read_binary,
    read_csv,
    write_binary,
    write_csv,
)
from conftest import rand_dataset


class TestCsv:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "two.csv"
        path.write_text("1,0\n0,1\n")
        X = ingest(path)
        assert np.array_equal(X.rows, np.array([[1, -1], [-1, 1]], dtype=np.int8))

    def test_header_detected(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("smoker,diabetic\n1,0\n1,1\n")
        table = read_csv(path)
        assert table.header == ("smoker", "diabetic")
        assert table.bits.shape == (2, 2)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(InputError):
            ingest(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n")
        with pytest.raises(InputError):
            ingest(path)

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,0\n0,1,1\n")
        with pytest.raises(ParseError, match=r":2:"):
            ingest(path)

    def test_non_bit_token_names_position(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,0\n0,2\n")
        with pytest.raises(ParseError, match=r":2: field 2"):
            ingest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            ingest(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path):
        X = rand_dataset(500, 7, seed=1)
        path = tmp_path / "rt.csv"
        write_csv(X, path)
        assert np.array_equal(ingest(path).rows, X.rows)

    def test_round_trip_with_header(self, tmp_path):
        X = rand_dataset(20, 3, seed=2)
        path = tmp_path / "rt.csv"
        write_csv(X, path, header=("a", "b", "c"))
        table = read_csv(path)
        assert table.header == ("a", "b", "c")
        assert np.array_equal(table.to_dataset().rows, X.rows)

    def test_no_trailing_newline_accepted(self, tmp_path):
        path = tmp_path / "nt.csv"
        path.write_bytes(b"1,0\n0,1")
        assert ingest(path).n == 2

    def test_emit_bytes_are_canonical(self, tmp_path):
        X = Dataset.from_signs([[1, -1], [-1, 1]])
        path = tmp_path / "c.csv"
        write_csv(X, path)
        assert path.read_bytes() == b"1,0\n0,1\n"


class TestBinary:
    def test_round_trip(self, tmp_path):
        X = rand_dataset(333, 9, seed=3)
        path = tmp_path / "rt.psyn"
        write_binary(X, path)
        assert np.array_equal(ingest(path).rows, X.rows)

    def test_magic_mismatch(self, tmp_path):
        path = tmp_path / "bad.psyn"
        path.write_bytes(b"NOPE!" + b"\x00" * 16)
        with pytest.raises(ParseError, match="magic"):
            read_binary(path)

    def test_truncated_payload(self, tmp_path):
        X = rand_dataset(64, 8, seed=4)
        path = tmp_path / "t.psyn"
        write_binary(X, path)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(ParseError, match="payload"):
            read_binary(path)

    def test_auto_detection(self, tmp_path):
        X = rand_dataset(10, 4, seed=5)
        b = tmp_path / "x.psyn"
        c = tmp_path / "x.csv"
        write_binary(X, b)
        write_csv(X, c)
        assert np.array_equal(ingest(b).rows, ingest(c).rows)

    def test_explicit_format_override(self, tmp_path):
        X = rand_dataset(10, 4, seed=6)
        path = tmp_path / "data.bin"
        write_binary(X, path)
        assert ingest(path, format="binary").n == 10
        with pytest.raises(InputError):
            ingest(path, format="nonsense")

    def test_bit_packing_is_row_major_msb_first(self, tmp_path):
        X = Dataset.from_bits(np.array([[1, 0, 1, 1, 0, 0, 1, 0], [1] * 8]))
        path = tmp_path / "p.psyn"
        write_binary(X, path)
        raw = path.read_bytes()
        assert raw[:5] == b"PSYN1"
        assert raw[5 + 16:] == bytes([0b10110010, 0b11111111])


class TestBitTable:
    def test_rejects_non_bits(self):
        with pytest.raises(InputError):
            BitTable(bits=np.array([[0, 2]]))

    def test_header_width_checked(self):
        with pytest.raises(InputError):
            BitTable(bits=np.zeros((2, 3), dtype=np.uint8), header=("a",))
