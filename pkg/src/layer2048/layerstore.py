"""On-disk layer arrays.

One file per ``(sum, turn)`` layer.  Layout (all integers little-endian)::

    b"TFEL" | version u8 | rows u8 | cols u8 | goal exponent u8 | caps (mn bytes)
    | sum u32 | turn u8 | payload kind u8 | position count u64 | batch size u64
    | payload | one u64 checksum per batch

Bit payloads pack position ``p`` at byte ``p // 8``, bit ``p % 8`` (LSB
first).  Fixed32 payloads are u32 words at offset ``4 * p``; Float64 ones
are f64 words at ``8 * p``.
"""

from __future__ import annotations

import enum
import hashlib
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import Caps, Turn
from .indexer import CountTable

MAGIC = b"TFEL"
VERSION = 1
CHUNK_SIZE = 1 << 14
_MIX = 0x9E3779B97F4A7C15


class LayerError(Exception):
    pass


class Payload(enum.IntEnum):
    BIT = 0
    FIXED32 = 1
    FLOAT64 = 2


_WORD_BYTES = {Payload.FIXED32: 4, Payload.FLOAT64: 8}
_DTYPES = {Payload.FIXED32: np.dtype("<u4"), Payload.FLOAT64: np.dtype("<f8")}


def payload_bytes(kind: Payload, positions: int) -> int:
    if kind == Payload.BIT:
        return (positions + 7) // 8
    return positions * _WORD_BYTES[kind]


def checksum(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def chunk_owner(chunk_index: int, workers: int) -> int:
    """Pseudo-random but fixed worker assignment of a chunk."""
    return (((chunk_index * _MIX) & 0xFFFFFFFFFFFFFFFF) >> 32) % workers


@dataclass(frozen=True)
class LayerMeta:
    rows: int
    cols: int
    goal_exp: int
    caps: tuple[int, ...]
    sum: int
    turn: Turn
    payload: Payload
    position_count: int
    batch_size: int

    @property
    def n_batches(self) -> int:
        return -(-self.position_count // self.batch_size)

    @property
    def header_size(self) -> int:
        return 30 + len(self.caps)

    def batch_span(self, batch: int) -> tuple[int, int]:
        if not 0 <= batch < self.n_batches:
            raise LayerError(f"batch {batch} out of range (layer has {self.n_batches})")
        lo = batch * self.batch_size
        return lo, min(lo + self.batch_size, self.position_count)

    def pack_header(self) -> bytes:
        return (MAGIC + struct.pack("<BBBB", VERSION, self.rows, self.cols, self.goal_exp)
                + bytes(self.caps)
                + struct.pack("<IBBQQ", self.sum, int(self.turn), int(self.payload),
                              self.position_count, self.batch_size))

    @classmethod
    def unpack_header(cls, data: bytes) -> LayerMeta:
        if len(data) < 8 or data[:4] != MAGIC:
            raise LayerError("bad magic")
        version, rows, cols, goal_exp = struct.unpack_from("<BBBB", data, 4)
        if version != VERSION:
            raise LayerError(f"unsupported layer version {version}")
        n = rows * cols
        if len(data) < 30 + n:
            raise LayerError("truncated header")
        caps = tuple(data[8:8 + n])
        s, turn, kind, count, batch = struct.unpack_from("<IBBQQ", data, 8 + n)
        return cls(rows, cols, goal_exp, caps, s, Turn(turn), Payload(kind), count, batch)


def validate_batch_size(batch_size: int, chunk_size: int) -> None:
    if chunk_size <= 0 or chunk_size % 8:
        raise ValueError(f"chunk size must be a positive multiple of 8, got {chunk_size}")
    if batch_size <= 0 or batch_size % chunk_size:
        raise ValueError(f"batch size {batch_size} is not a multiple of chunk size {chunk_size}")


class LayerHandle:
    """Open layer file with batch-granular access."""

    def __init__(self, path: Path, meta: LayerMeta, mode: str, tracker: ResidencyTracker | None = None):
        self.path = Path(path)
        self.meta = meta
        self.mode = mode
        self._f = open(self.path, "r+b" if mode == "w" else "rb")
        self._tracker = tracker
        if tracker is not None:
            tracker.acquire(self.path)

    def _batch_offset(self, lo: int) -> int:
        # batch starts are multiples of 8, so bit batches begin on a byte
        return self.meta.header_size + payload_bytes(self.meta.payload, lo)

    def _trailer_offset(self) -> int:
        return self.meta.header_size + payload_bytes(self.meta.payload, self.meta.position_count)

    def read_batch(self, batch: int) -> np.ndarray:
        """Batch contents: a bool array for Bit layers, words otherwise."""
        lo, hi = self.meta.batch_span(batch)
        nbytes = payload_bytes(self.meta.payload, hi - lo)
        self._f.seek(self._batch_offset(lo))
        data = self._f.read(nbytes)
        if len(data) != nbytes:
            raise LayerError(f"short read in batch {batch} of {self.path}")
        self._f.seek(self._trailer_offset() + 8 * batch)
        raw = self._f.read(8)
        if len(raw) != 8:
            raise LayerError(f"missing checksum for batch {batch} of {self.path}")
        if checksum(data) != int.from_bytes(raw, "little"):
            raise LayerError(f"checksum mismatch in batch {batch} of {self.path}")
        if self.meta.payload == Payload.BIT:
            bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
            return bits[: hi - lo].astype(bool)
        return np.frombuffer(data, dtype=_DTYPES[self.meta.payload]).copy()

    def write_batch(self, batch: int, values: np.ndarray) -> None:
        if self.mode != "w":
            raise LayerError("layer opened read-only")
        lo, hi = self.meta.batch_span(batch)
        if len(values) != hi - lo:
            raise LayerError(f"batch {batch} expects {hi - lo} positions, got {len(values)}")
        data = encode_payload(self.meta.payload, values)
        self._f.seek(self._batch_offset(lo))
        self._f.write(data)
        self._f.seek(self._trailer_offset() + 8 * batch)
        self._f.write(checksum(data).to_bytes(8, "little"))

    def read_all(self) -> np.ndarray:
        parts = [self.read_batch(b) for b in range(self.meta.n_batches)]
        if not parts:
            return encode_empty(self.meta.payload)
        return np.concatenate(parts)

    def payload_bytes(self) -> bytes:
        """Raw payload region (no header or trailer)."""
        self._f.seek(self.meta.header_size)
        return self._f.read(payload_bytes(self.meta.payload, self.meta.position_count))

    def close(self) -> None:
        if not self._f.closed:
            self._f.close()
            if self._tracker is not None:
                self._tracker.release(self.path)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def encode_empty(kind: Payload) -> np.ndarray:
    return np.zeros(0, dtype=bool if kind == Payload.BIT else _DTYPES[kind])


def encode_payload(kind: Payload, values: np.ndarray) -> bytes:
    if kind == Payload.BIT:
        return np.packbits(np.asarray(values, dtype=bool), bitorder="little").tobytes()
    return np.asarray(values, dtype=_DTYPES[kind]).tobytes()


def create_layer(meta: LayerMeta, path: str | os.PathLike, table: CountTable | None = None,
                 tracker: ResidencyTracker | None = None) -> LayerHandle:
    """Create a zero-filled layer file and return a writable handle."""
    if table is not None:
        expected = table.layer_size(meta.sum)
        if expected != meta.position_count:
            raise LayerError(f"position count {meta.position_count} != layer size {expected}")
    path = Path(path)
    size = payload_bytes(meta.payload, meta.position_count)
    with open(path, "wb") as f:
        f.write(meta.pack_header())
        f.truncate(meta.header_size + size)
        f.seek(meta.header_size + size)
        trailer = bytearray()
        for b in range(meta.n_batches):
            lo, hi = meta.batch_span(b)
            trailer += checksum(bytes(payload_bytes(meta.payload, hi - lo))).to_bytes(8, "little")
        f.write(trailer)
    return LayerHandle(path, meta, "w", tracker)


def open_layer(path: str | os.PathLike, caps: Caps | None = None, mode: str = "r",
               tracker: ResidencyTracker | None = None) -> tuple[LayerMeta, LayerHandle]:
    """Open and validate a layer file.

    The stored position count is checked against a count table rebuilt from
    the header caps, and against ``caps`` when the caller supplies them.
    """
    path = Path(path)
    if not path.exists():
        raise LayerError(f"missing layer file {path}")
    with open(path, "rb") as f:
        head = f.read(64 + 256)
        meta = LayerMeta.unpack_header(head)
        f.seek(0, os.SEEK_END)
        total = f.tell()
    expected_size = (meta.header_size + payload_bytes(meta.payload, meta.position_count)
                     + 8 * meta.n_batches)
    if total != expected_size:
        raise LayerError(f"{path}: size {total} != expected {expected_size} (truncated?)")
    header_caps = Caps(meta.rows, meta.cols, meta.caps)
    if CountTable(header_caps, max_sum=_even_at_least(meta.sum)).layer_size(meta.sum) != meta.position_count:
        raise LayerError(f"{path}: position count does not match its own caps")
    if caps is not None:
        if (caps.rows, caps.cols) != (meta.rows, meta.cols):
            raise LayerError(f"{path}: shape mismatch")
        want = CountTable(caps, max_sum=_even_at_least(meta.sum)).layer_size(meta.sum)
        if want != meta.position_count:
            raise LayerError(f"{path}: count mismatch ({meta.position_count} stored, "
                             f"{want} for the given caps)")
    return meta, LayerHandle(path, meta, mode, tracker)


def _even_at_least(s: int) -> int:
    return s + (s % 2)


def layer_name(s: int, turn: Turn) -> str:
    return f"s{s}_{'P' if turn == Turn.PLAYER else 'C'}.layer"


class ResidencyTracker:
    """Counts simultaneously open layers (thread-safe)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.open: dict[Path, int] = {}
        self.peak = 0

    def acquire(self, path: Path) -> None:
        with self._lock:
            self.open[path] = self.open.get(path, 0) + 1
            self.peak = max(self.peak, len(self.open))

    def release(self, path: Path) -> None:
        with self._lock:
            self.open[path] -= 1
            if not self.open[path]:
                del self.open[path]
