"""GF(2) matrix machinery behind the balanced byte encoding.

The encoding is the shear map Z^H = X^H + f.X^L, Z^L = X^L + g.Z^H built from
4x4 bit blocks f and g. A (f, g) pair is admissible when no row of the
assembled 8x8 matrix selects a row combination whose XOR collapses onto a
single row of any coefficient-multiplied SubBytes bit matrix; those forbidden
combinations form the blacklist derived here by brute force.

Bit vectors are stored as ints with position 1 at the most significant bit of
their width (4 or 8)."""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass

from .gfcore import build_s_matrix


@dataclass(frozen=True)
class BitMat4:
    """4x4 binary matrix; rows[i] is a 4-bit int, MSB = column 1."""

    rows: tuple

    def __post_init__(self):
        if len(self.rows) != 4 or any(not 0 <= r <= 0xF for r in self.rows):
            raise ValueError("BitMat4 needs 4 rows of 4-bit values")

    @classmethod
    def zero(cls) -> "BitMat4":
        return cls(rows=(0, 0, 0, 0))

    @classmethod
    def identity(cls) -> "BitMat4":
        return cls(rows=(0b1000, 0b0100, 0b0010, 0b0001))


@dataclass(frozen=True)
class BitMat8:
    """8x8 binary matrix; rows[i] is an 8-bit int, MSB = column 1."""

    rows: tuple


@dataclass(frozen=True)
class EncodingPair:
    f: BitMat4
    g: BitMat4

    @classmethod
    def identity(cls) -> "EncodingPair":
        return cls(f=BitMat4.zero(), g=BitMat4.zero())


def mat_vec_mul(m: BitMat4, v: int) -> int:
    """Multiply a 4x4 bit matrix by a 4-bit column vector."""
    out = 0
    for i in range(4):
        if (m.rows[i] & v).bit_count() & 1:
            out |= 1 << (3 - i)
    return out


def row_times_mat(row: int, m: BitMat4) -> int:
    """Multiply a 4-bit row vector by a 4x4 bit matrix."""
    out = 0
    for j in range(4):
        if (row >> (3 - j)) & 1:
            out ^= m.rows[j]
    return out


def idx_of(v: int, width: int = 8) -> frozenset:
    """Positions (1-based, MSB first) of the set bits of v."""
    return frozenset(p for p in range(1, width + 1) if (v >> (width - p)) & 1)


def assemble_M(pair: EncodingPair) -> BitMat8:
    """Block matrix [[I, f], [g, I + g.f]] realizing the shear encoding."""
    f, g = pair.f, pair.g
    rows = []
    for i in range(4):
        rows.append((1 << (7 - i)) | f.rows[i])
    for i in range(4):
        low = (1 << (3 - i)) ^ row_times_mat(g.rows[i], f)
        rows.append((g.rows[i] << 4) | low)
    return BitMat8(rows=tuple(rows))


def linear_encode(x: int, pair: EncodingPair) -> int:
    """Shear-encode a byte: Z^H = X^H + f.X^L, Z^L = X^L + g.Z^H."""
    xh, xl = x >> 4, x & 0xF
    zh = xh ^ mat_vec_mul(pair.f, xl)
    zl = xl ^ mat_vec_mul(pair.g, zh)
    return (zh << 4) | zl


def linear_decode(z: int, pair: EncodingPair) -> int:
    """Invert the shear encoding; valid for every pair, singular blocks included."""
    zh, zl = z >> 4, z & 0xF
    yl = zl ^ mat_vec_mul(pair.g, zh)
    yh = zh ^ mat_vec_mul(pair.f, yl)
    return (yh << 4) | yl


@functools.lru_cache(maxsize=8192)
def encode_map(pair: EncodingPair) -> bytes:
    """256-entry lookup form of linear_encode."""
    fm = [mat_vec_mul(pair.f, v) for v in range(16)]
    gm = [mat_vec_mul(pair.g, v) for v in range(16)]
    out = bytearray(256)
    for x in range(256):
        zh = (x >> 4) ^ fm[x & 0xF]
        out[x] = (zh << 4) | ((x & 0xF) ^ gm[zh])
    return bytes(out)


@functools.lru_cache(maxsize=8192)
def decode_map(pair: EncodingPair) -> bytes:
    fm = [mat_vec_mul(pair.f, v) for v in range(16)]
    gm = [mat_vec_mul(pair.g, v) for v in range(16)]
    out = bytearray(256)
    for z in range(256):
        yl = (z & 0xF) ^ gm[z >> 4]
        out[z] = (((z >> 4) ^ fm[yl]) << 4) | yl
    return bytes(out)


# --- blacklists -------------------------------------------------------------

# Transcription of the published forbidden row-index table, used purely as a
# cross-check of the brute-force derivation below.  Keys are (ell, ell', i');
# the diagonal groups (ell == ell') are the singletons {j} for every j.
_TRANSCRIBED_ROWSETS = {
    (1, 2): {1: {2}, 2: {3}, 3: {4}, 4: {1, 5}, 5: {1, 6}, 6: {7}, 7: {1, 8}, 8: {1}},
    (1, 3): {1: {1, 2}, 2: {2, 3}, 3: {3, 4}, 4: {1, 4, 5}, 5: {1, 5, 6}, 6: {6, 7}, 7: {1, 7, 8}, 8: {1, 8}},
    (2, 1): {1: {8}, 2: {1}, 3: {2}, 4: {3}, 5: {4, 8}, 6: {5, 8}, 7: {6}, 8: {7, 8}},
    (2, 3): {1: {1, 8}, 2: {1, 2}, 3: {2, 3}, 4: {3, 4}, 5: {4, 5, 8}, 6: {5, 6, 8}, 7: {6, 7}, 8: {7}},
    (3, 1): {
        1: {1, 2, 3, 4, 5, 6, 7, 8},
        2: {2, 3, 4, 5, 6, 7, 8},
        3: {3, 4, 5, 6, 7, 8},
        4: {4, 5, 6, 7, 8},
        5: {1, 2, 3, 4},
        6: {6, 7, 8},
        7: {7, 8},
        8: {1, 2, 3, 4, 5, 6, 7},
    },
    (3, 2): {
        1: {2, 3, 4, 5, 6, 7, 8},
        2: {3, 4, 5, 6, 7, 8},
        3: {4, 5, 6, 7, 8},
        4: {5, 6, 7, 8},
        5: {1, 2, 3, 4, 5},
        6: {7, 8},
        7: {8},
        8: {1, 2, 3, 4, 5, 6, 7, 8},
    },
}

# Transcribed per-row forbidden f rows (vectors written MSB-first).
_TRANSCRIBED_F_ROWSETS = (
    {0b0000, 0b1000, 0b0100, 0b0001, 0b1100, 0b0011},
    {0b0000},
    {0b0000},
    {0b0000, 0b0001, 0b1001, 0b1111},
)


@dataclass(frozen=True)
class BlacklistW:
    """Forbidden row-index combinations, grouped by (ell, ell', target row)."""

    by_group: dict  # (ell, ellp, iprime) -> frozenset of 1-based indices
    flat: frozenset  # union of all index sets

    def forbids(self, row8: int) -> bool:
        return idx_of(row8) in self.flat


@functools.lru_cache(maxsize=1)
def derive_blacklist_W() -> BlacklistW:
    """Scan all 255 nonempty row subsets of each coefficient matrix for XOR
    collisions with a row of another coefficient matrix (key byte 0; the
    result is key independent because a key change only permutes columns)."""
    smats = {ell: build_s_matrix(ell, 0) for ell in (1, 2, 3)}
    by_group = {}
    for ell in (1, 2, 3):
        for ellp in (1, 2, 3):
            row_lookup = {smats[ellp].rows[i]: i + 1 for i in range(8)}
            for mask in range(1, 256):
                acc = 0
                for i in range(8):
                    if (mask >> i) & 1:
                        acc ^= smats[ell].rows[i]
                iprime = row_lookup.get(acc)
                if iprime is not None:
                    J = frozenset(i + 1 for i in range(8) if (mask >> i) & 1)
                    by_group[(ell, ellp, iprime)] = J
    flat = frozenset(by_group.values())
    _cross_check_transcription(by_group)
    return BlacklistW(by_group=by_group, flat=flat)


def _cross_check_transcription(by_group: dict) -> None:
    for ell in (1, 2, 3):
        for j in range(1, 9):
            if by_group.get((ell, ell, j)) != frozenset({j}):
                raise RuntimeError(f"blacklist self-check failed on diagonal ({ell},{ell},{j})")
    for (ell, ellp), rows in _TRANSCRIBED_ROWSETS.items():
        for iprime, J in rows.items():
            if by_group.get((ell, ellp, iprime)) != frozenset(J):
                raise RuntimeError(f"blacklist self-check failed at ({ell},{ellp},{iprime})")


@functools.lru_cache(maxsize=1)
def derive_blacklist_F() -> tuple:
    """Per-row forbidden f rows: values b with Idx(e_i || b) blacklisted."""
    W = derive_blacklist_W()
    out = []
    for i in range(4):
        e_i = 1 << (7 - i)
        bad = frozenset(b for b in range(16) if idx_of(e_i | b) in W.flat)
        out.append(bad)
    result = tuple(out)
    if tuple(set(s) for s in result) != tuple(set(s) for s in _TRANSCRIBED_F_ROWSETS):
        raise RuntimeError("f-row blacklist self-check failed against the transcription")
    return result


@functools.lru_cache(maxsize=1)
def allowed_f_rows() -> tuple:
    bf = derive_blacklist_F()
    return tuple(tuple(b for b in range(16) if b not in bf[i]) for i in range(4))


def f_family_size() -> int:
    size = 1
    for rows in allowed_f_rows():
        size *= len(rows)
    return size


def sample_f(rng: random.Random) -> BitMat4:
    """Row-wise rejection sampling of f against the per-row blacklist."""
    bf = derive_blacklist_F()
    rows = []
    for i in range(4):
        while True:
            b = rng.randrange(16)
            if b not in bf[i]:
                rows.append(b)
                break
    return BitMat4(rows=tuple(rows))


def valid_g_rows(f: BitMat4) -> tuple:
    """For each row i, the g-row values keeping row 4+i of M off the blacklist."""
    W = derive_blacklist_W()
    out = []
    for i in range(4):
        e_i = 1 << (3 - i)
        good = tuple(
            gr for gr in range(16) if idx_of((gr << 4) | (e_i ^ row_times_mat(gr, f))) not in W.flat
        )
        out.append(good)
    return tuple(out)


def sample_g(rng: random.Random, f: BitMat4) -> BitMat4:
    """Row-wise rejection sampling of g; every accepted row keeps the assembled
    matrix row off the blacklist."""
    candidates = valid_g_rows(f)
    rows = []
    for i in range(4):
        if not candidates[i]:
            raise ValueError(f"no admissible g row at index {i} for f={f.rows}")
        rows.append(rng.choice(candidates[i]))
    return BitMat4(rows=tuple(rows))


def sample_pair(rng: random.Random) -> EncodingPair:
    return EncodingPair(f=(f := sample_f(rng)), g=sample_g(rng, f))


def count_valid_pairs() -> int:
    """Exhaustive count of admissible (f, g) pairs.

    The lower-row condition factorizes per row of g, so the count is the sum
    over all admissible f of the product of per-row g counts.
    """
    total = 0
    allowed = allowed_f_rows()
    for r1 in allowed[0]:
        for r2 in allowed[1]:
            for r3 in allowed[2]:
                for r4 in allowed[3]:
                    f = BitMat4(rows=(r1, r2, r3, r4))
                    prod = 1
                    for rows in valid_g_rows(f):
                        prod *= len(rows)
                    total += prod
    return total


def mean_valid_g_rows() -> tuple:
    """Average number of admissible g rows per row index, over the whole f family."""
    sums = [0, 0, 0, 0]
    n = 0
    allowed = allowed_f_rows()
    for r1 in allowed[0]:
        for r2 in allowed[1]:
            for r3 in allowed[2]:
                for r4 in allowed[3]:
                    n += 1
                    counts = valid_g_rows(BitMat4(rows=(r1, r2, r3, r4)))
                    for i in range(4):
                        sums[i] += len(counts[i])
    return tuple(s / n for s in sums)


def walsh_balance_check(pair: EncodingPair, key_byte: int = 0):
    """Correlation grid between the encoded and plain coefficient matrices.

    Entry [i][ip][ell-1][ellp-1] is the signed Walsh sum of row i of M.S^ell
    against row ip of S^ell'; a balanced pair yields the all-zero grid.
    """
    import numpy as np

    M = assemble_M(pair)
    smats = {ell: build_s_matrix(ell, key_byte) for ell in (1, 2, 3)}
    grid = np.zeros((8, 8, 3, 3), dtype=np.int32)
    for ell in (1, 2, 3):
        r_rows = []
        for i in range(8):
            acc = 0
            for p in range(8):
                if (M.rows[i] >> (7 - p)) & 1:
                    acc ^= smats[ell].rows[p]
            r_rows.append(acc)
        for ellp in (1, 2, 3):
            for i in range(8):
                for ip in range(8):
                    hw = (r_rows[i] ^ smats[ellp].rows[ip]).bit_count()
                    grid[i, ip, ell - 1, ellp - 1] = 256 - 2 * hw
    return grid


def is_balanced_pair(pair: EncodingPair, key_byte: int = 0) -> bool:
    return not walsh_balance_check(pair, key_byte).any()
