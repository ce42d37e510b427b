"""Protected encryption over a complementary table-set pair, with set-selection
policies and bit-exact computational trace recording.

Trace layout per encryption (1,456 samples): for each round 1..9 and each
column, 16 table-output bytes in (input row, byte position) order followed by
24 XOR nibbles in (output byte, stage, upper-then-lower) order; then the 16
final-round output bytes in ciphertext order."""

from __future__ import annotations

import random
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .tablegen import (
    FORMAT_VERSION,
    FormatError,
    TableSetPair,
    encrypt_batch_with_tables,
    encrypt_with_tables,
)

TRACE_MAGIC = b"BTR1"
SAMPLE_COUNT = 1456


# --- sample index helpers (0-based r in 1..9, j, i, k, stage, half) ----------

def ut_sample_index(r: int, j: int, i: int, k: int) -> int:
    return (r - 1) * 160 + j * 40 + i * 4 + k


def xor_sample_index(r: int, j: int, k: int, stage: int, half: int) -> int:
    return (r - 1) * 160 + j * 40 + 16 + k * 6 + stage * 2 + half


def t10_sample_index(i: int, j: int) -> int:
    return 1440 + j * 4 + i


def round_sample_slice(r: int) -> slice:
    """All samples of one encoded round (r in 1..9)."""
    return slice((r - 1) * 160, r * 160)


def ut_output_indices(r: int) -> np.ndarray:
    """Indices of the 64 table-output byte samples of round r."""
    return np.array(
        [ut_sample_index(r, j, i, k) for j in range(4) for i in range(4) for k in range(4)],
        dtype=np.int64,
    )


def round_output_sample_indices(r: int, j: int, k: int) -> tuple:
    """(upper, lower) nibble sample indices holding the encoded round-output byte."""
    return xor_sample_index(r, j, k, 2, 0), xor_sample_index(r, j, k, 2, 1)


# --- selection policies -------------------------------------------------------

@dataclass(frozen=True)
class SelectorPolicy:
    """Which table set an encryption uses.

    variant: "fixed-q0" | "fixed-q1" | "random" | "pt-derived"
    random draws set 0 with probability alpha; pt-derived indexes the bit
    sequence b by the XOR of all plaintext bytes mod n, needing no run-time
    randomness.
    """

    variant: str
    alpha: float = 0.5
    bits: tuple = ()

    def __post_init__(self):
        if self.variant not in ("fixed-q0", "fixed-q1", "random", "pt-derived"):
            raise ValueError(f"unknown policy variant {self.variant!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.variant == "pt-derived":
            n = len(self.bits)
            if not 1 <= n <= 256:
                raise ValueError("pt-derived needs a bit sequence of length 1..256")
            if any(b not in (0, 1) for b in self.bits):
                raise ValueError("bit sequence entries must be 0 or 1")

    @classmethod
    def fixed_q0(cls) -> "SelectorPolicy":
        return cls(variant="fixed-q0")

    @classmethod
    def fixed_q1(cls) -> "SelectorPolicy":
        return cls(variant="fixed-q1")

    @classmethod
    def random_bit(cls, alpha: float = 0.5) -> "SelectorPolicy":
        return cls(variant="random", alpha=alpha)

    @classmethod
    def pt_derived(cls, n: int) -> "SelectorPolicy":
        """Alternating bit sequence of length n (set fractions as equal as n allows)."""
        return cls(variant="pt-derived", bits=tuple(i % 2 for i in range(n)))

    @classmethod
    def parse(cls, text: str) -> "SelectorPolicy":
        if text == "q0":
            return cls.fixed_q0()
        if text == "q1":
            return cls.fixed_q1()
        if text.startswith("random:"):
            return cls.random_bit(float(text.split(":", 1)[1]))
        if text == "random":
            return cls.random_bit(0.5)
        if text.startswith("pt-derived:"):
            return cls.pt_derived(int(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse policy {text!r}")

    def describe(self) -> str:
        if self.variant == "random":
            return f"random:{self.alpha}"
        if self.variant == "pt-derived":
            return f"pt-derived:{len(self.bits)}"
        return self.variant.replace("fixed-", "")


def select_set(policy: SelectorPolicy, pt: bytes, rng: random.Random | None) -> int:
    if policy.variant == "fixed-q0":
        return 0
    if policy.variant == "fixed-q1":
        return 1
    if policy.variant == "random":
        if rng is None:
            raise ValueError("random policy needs a random source")
        return 0 if rng.random() < policy.alpha else 1
    acc = 0
    for b in pt:
        acc ^= b
    return policy.bits[acc % len(policy.bits)]


# --- traces -------------------------------------------------------------------

@dataclass(frozen=True)
class Trace:
    plaintext: bytes
    set_bit: int
    samples: bytes

    def __post_init__(self):
        if len(self.samples) != SAMPLE_COUNT:
            raise ValueError("trace must hold 1456 samples")


@dataclass
class TraceSet:
    plaintexts: np.ndarray  # (N, 16) uint8
    set_bits: np.ndarray  # (N,) uint8
    samples: np.ndarray  # (N, 1456) uint8
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.plaintexts.shape[0])

    def trace(self, n: int) -> Trace:
        return Trace(
            plaintext=bytes(self.plaintexts[n]),
            set_bit=int(self.set_bits[n]),
            samples=bytes(self.samples[n]),
        )


@dataclass
class EncryptResult:
    ciphertext: bytes
    set_bit: int
    trace: Trace | None
    lookups: int


def encrypt(pt: bytes, pair: TableSetPair, policy: SelectorPolicy,
            rng: random.Random | None = None, record: bool = False) -> EncryptResult:
    bit = select_set(policy, pt, rng)
    ct, samples, lookups = encrypt_with_tables(pair.select(bit), pt, record=record)
    trace = Trace(plaintext=bytes(pt), set_bit=bit, samples=samples) if record else None
    return EncryptResult(ciphertext=ct, set_bit=bit, trace=trace, lookups=lookups)


# --- plaintext sources ---------------------------------------------------------

def random_plaintexts(count: int, rng: random.Random) -> np.ndarray:
    return np.frombuffer(rng.randbytes(count * 16), dtype=np.uint8).reshape(count, 16).copy()


def fixed_plaintexts(pt: bytes, count: int) -> np.ndarray:
    if len(pt) != 16:
        raise ValueError("plaintext must be 16 bytes")
    return np.tile(np.frombuffer(pt, dtype=np.uint8), (count, 1))


def grid_plaintexts() -> np.ndarray:
    """All 65,536 plaintexts varying the two bytes entering the first column's
    first two round-1 tables (indices 0 and 5); the other 14 bytes are zero."""
    pts = np.zeros((65536, 16), dtype=np.uint8)
    p1, p2 = np.divmod(np.arange(65536), 256)
    pts[:, 0] = p1
    pts[:, 5] = p2
    return pts


def plaintexts_from_file(path, count: int | None = None) -> np.ndarray:
    """Raw 16-byte-records plaintext source."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data or len(data) % 16:
        raise FormatError(f"plaintext file must hold whole 16-byte records, got {len(data)} bytes")
    pts = np.frombuffer(data, dtype=np.uint8).reshape(-1, 16)
    if count is not None:
        if count > pts.shape[0]:
            raise FormatError(f"plaintext file holds {pts.shape[0]} records, {count} requested")
        pts = pts[:count]
    return pts.copy()


def collect_traces(pair: TableSetPair, policy: SelectorPolicy, plaintexts: np.ndarray,
                   rng: random.Random | None = None, metadata: dict | None = None) -> TraceSet:
    """Run one encryption per plaintext row and record full traces.

    Output order equals plaintext order.  Deterministic given the policy and
    the seeded random source.
    """
    pts = np.asarray(plaintexts, dtype=np.uint8)
    n = pts.shape[0]
    bits = np.empty(n, dtype=np.uint8)
    for idx in range(n):
        bits[idx] = select_set(policy, bytes(pts[idx]), rng)
    samples = np.empty((n, SAMPLE_COUNT), dtype=np.uint8)
    for bit in (0, 1):
        sel = np.nonzero(bits == bit)[0]
        if sel.size == 0:
            continue
        _, s = encrypt_batch_with_tables(pair.select(bit), pts[sel], record=True)
        samples[sel] = s
    meta = {"policy": policy.describe(), "count": n}
    if metadata:
        meta.update(metadata)
    return TraceSet(plaintexts=pts.copy(), set_bits=bits, samples=samples, metadata=meta)


# --- trace file format ----------------------------------------------------------

def serialize_traces(ts: TraceSet) -> bytes:
    n = len(ts)
    out = bytearray()
    out += TRACE_MAGIC
    out += struct.pack("<HIH", FORMAT_VERSION, n, SAMPLE_COUNT)
    body = np.empty((n, 16 + 1 + SAMPLE_COUNT), dtype=np.uint8)
    body[:, :16] = ts.plaintexts
    body[:, 16] = ts.set_bits
    body[:, 17:] = ts.samples
    out += body.tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def deserialize_traces(data: bytes) -> TraceSet:
    if len(data) < 16 or data[:4] != TRACE_MAGIC:
        raise FormatError("bad magic for trace file")
    version, count, sample_count = struct.unpack("<HIH", data[4:12])
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported trace format version {version}")
    if sample_count != SAMPLE_COUNT:
        raise FormatError(f"unexpected sample count {sample_count}")
    rec = 16 + 1 + sample_count
    expected = 12 + count * rec + 4
    if len(data) != expected:
        raise FormatError(f"trace file length {len(data)} != {expected}")
    (crc,) = struct.unpack("<I", data[-4:])
    if crc != zlib.crc32(data[:-4]):
        raise FormatError("trace file checksum mismatch")
    body = np.frombuffer(data[12:-4], dtype=np.uint8).reshape(count, rec)
    return TraceSet(
        plaintexts=body[:, :16].copy(),
        set_bits=body[:, 16].copy(),
        samples=body[:, 17:].copy(),
    )


def save_traces(ts: TraceSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_traces(ts))


def load_traces(path) -> TraceSet:
    with open(path, "rb") as fh:
        return deserialize_traces(fh.read())
