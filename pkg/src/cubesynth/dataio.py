"""Dataset file formats.

CSV is the canonical interchange format: one record per line, comma
separated 0/1 tokens, LF line endings, optional header line.  A packed
binary format exists for large audits: magic bytes "PSYN1", then the
dimension p and the record count n as little-endian unsigned 64-bit
integers, then the row-major bit stream packed most-significant-bit
first (no per-row padding).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cube import Dataset
from .errors import InputError, ParseError

MAGIC = b"PSYN1"
_HEADER_STRUCT = struct.Struct("<QQ")


@dataclass(frozen=True)
class BitTable:
    """A rectangular 0/1 table with optional column names."""

    bits: np.ndarray
    header: tuple[str, ...] | None = None

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise InputError(f"bit table must be 2-d, got shape {bits.shape}")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise InputError("bit table entries must all be 0 or 1")
        if self.header is not None and len(self.header) != bits.shape[1]:
            raise InputError(
                f"header has {len(self.header)} names for {bits.shape[1]} columns"
            )
        bits = np.ascontiguousarray(bits)
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    def to_dataset(self) -> Dataset:
        return Dataset.from_bits(self.bits)


def _looks_like_header(line: str) -> bool:
    return any(token.strip() not in ("0", "1") for token in line.split(","))


def read_csv(path: str | Path) -> BitTable:
    """Parse a 0/1 CSV file; errors carry the offending line number."""
    text = Path(path).read_bytes()
    if not text.strip():
        raise InputError(f"{path}: file is empty")
    lines = text.decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header: tuple[str, ...] | None = None
    start = 0
    if lines and _looks_like_header(lines[0]):
        header = tuple(token.strip() for token in lines[0].split(","))
        start = 1
    rows: list[list[int]] = []
    width: int | None = None
    for lineno in range(start, len(lines)):
        line = lines[lineno].rstrip("\r")
        if line == "" and lineno == len(lines) - 1:
            break
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise ParseError(
                f"{path}:{lineno + 1}: ragged row has {len(tokens)} fields, expected {width}"
            )
        row = []
        for col, token in enumerate(tokens):
            token = token.strip()
            if token == "0":
                row.append(0)
            elif token == "1":
                row.append(1)
            else:
                raise ParseError(
                    f"{path}:{lineno + 1}: field {col + 1} is {token!r}, expected 0 or 1"
                )
        rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return BitTable(bits=np.asarray(rows, dtype=np.uint8), header=header)


def write_csv(dataset: Dataset, path: str | Path, header: tuple[str, ...] | None = None) -> None:
    """Emit a dataset as 0/1 CSV with LF line endings (vectorized)."""
    bits = dataset.to_bits()
    n, p = bits.shape
    out = bytearray()
    if header is not None:
        out += (",".join(header) + "\n").encode("utf-8")
    if n and p:
        line = np.empty((n, 2 * p), dtype=np.uint8)
        line[:, 0::2] = bits + ord("0")
        line[:, 1::2] = ord(",")
        line[:, -1] = ord("\n")
        out += line.tobytes()
    Path(path).write_bytes(bytes(out))


def read_binary(path: str | Path) -> BitTable:
    """Parse the packed binary format; errors carry the byte offset."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise ParseError(
            f"{path}: offset 0: bad magic {raw[:len(MAGIC)]!r}, expected {MAGIC!r}"
        )
    header_end = len(MAGIC) + _HEADER_STRUCT.size
    if len(raw) < header_end:
        raise ParseError(f"{path}: offset {len(MAGIC)}: truncated header")
    p, n = _HEADER_STRUCT.unpack_from(raw, len(MAGIC))
    expected = (n * p + 7) // 8
    payload = raw[header_end:]
    if len(payload) != expected:
        raise ParseError(
            f"{path}: offset {header_end}: payload has {len(payload)} bytes, "
            f"expected {expected} for n={n}, p={p}"
        )
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=n * p, bitorder="big")
    return BitTable(bits=bits.reshape(n, p))


def write_binary(dataset: Dataset, path: str | Path) -> None:
    bits = dataset.to_bits()
    n, p = bits.shape
    payload = np.packbits(bits.reshape(-1), bitorder="big")
    Path(path).write_bytes(MAGIC + _HEADER_STRUCT.pack(p, n) + payload.tobytes())


def ingest(path: str | Path, format: str = "auto") -> Dataset:
    """Load a dataset from CSV or packed binary; bit b maps to sign 2b-1."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: file does not exist")
    if format == "auto":
        with open(path, "rb") as fh:
            format = "binary" if fh.read(len(MAGIC)) == MAGIC else "csv"
    if format == "csv":
        return read_csv(path).to_dataset()
    if format == "binary":
        return read_binary(path).to_dataset()
    raise InputError(f"unknown dataset format {format!r}; use csv, binary or auto")
