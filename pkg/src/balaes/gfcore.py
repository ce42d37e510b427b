"""GF(2^8) arithmetic, the AES-128 reference cipher, its key-first rearrangement,
and the 8x256 bit matrices of coefficient-multiplied SubBytes outputs."""

from __future__ import annotations

import functools
from dataclasses import dataclass

GF_POLY = 0x11B

# Standard SubBytes table; validated below against the inverse-plus-affine construction.
SBOX = bytes.fromhex(
    "637c777bf26b6fc53001672bfed7ab76"
    "ca82c97dfa5947f0add4a2af9ca472c0"
    "b7fd9326363ff7cc34a5e5f171d83115"
    "04c723c31896059a071280e2eb27b275"
    "09832c1a1b6e5aa0523bd6b329e32f84"
    "53d100ed20fcb15b6acbbe394a4c58cf"
    "d0efaafb434d338545f9027f503c9fa8"
    "51a3408f929d38f5bcb6da2110fff3d2"
    "cd0c13ec5f974417c4a77e3d645d1973"
    "60814fdc222a908846eeb814de5e0bdb"
    "e0323a0a4906245cc2d3ac629195e479"
    "e7c8376d8dd54ea96c56f4ea657aae08"
    "ba78252e1ca6b4c6e8dd741f4bbd8b8a"
    "703eb5664803f60e613557b986c11d9e"
    "e1f8981169d98e949b1e87e9ce5528df"
    "8ca1890dbfe6426841992d0fb054bb16"
)

INV_SBOX = bytes(256)
_inv = bytearray(256)
for _x in range(256):
    _inv[SBOX[_x]] = _x
INV_SBOX = bytes(_inv)
del _inv, _x


def gf_mul(a: int, b: int) -> int:
    """Carry-less multiply in GF(2^8) reduced by 0x11B."""
    p = 0
    while b:
        if b & 1:
            p ^= a
        a <<= 1
        if a & 0x100:
            a ^= GF_POLY
        b >>= 1
    return p


def gf_inv(a: int) -> int:
    """Multiplicative inverse (0 maps to 0), via a^254."""
    if a == 0:
        return 0
    r, base, e = 1, a, 254
    while e:
        if e & 1:
            r = gf_mul(r, base)
        base = gf_mul(base, base)
        e >>= 1
    return r


def _rotl8(x: int, n: int) -> int:
    return ((x << n) | (x >> (8 - n))) & 0xFF


def sbox_from_construction(x: int) -> int:
    """SubBytes from first principles: field inverse followed by the affine map."""
    b = gf_inv(x)
    return b ^ _rotl8(b, 1) ^ _rotl8(b, 2) ^ _rotl8(b, 3) ^ _rotl8(b, 4) ^ 0x63


def _validate_sbox() -> None:
    for x in range(256):
        if SBOX[x] != sbox_from_construction(x):
            raise RuntimeError("SubBytes constant table failed the construction self-check")


_validate_sbox()


def sbox(x: int) -> int:
    return SBOX[x]


# Precomputed xtime-style multiples used by MixColumns.
MUL2 = bytes(gf_mul(2, x) for x in range(256))
MUL3 = bytes(gf_mul(3, x) for x in range(256))

# MixColumns matrix, row-major.
MC = ((2, 3, 1, 1), (1, 2, 3, 1), (1, 1, 2, 3), (3, 1, 1, 2))

_RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


def _expand_key(key: bytes) -> list[list[int]]:
    """FIPS-197 key schedule; returns 44 words of 4 bytes each."""
    words = [list(key[4 * i : 4 * i + 4]) for i in range(4)]
    for i in range(4, 44):
        t = list(words[i - 1])
        if i % 4 == 0:
            t = t[1:] + t[:1]
            t = [SBOX[b] for b in t]
            t[0] ^= _RCON[i // 4 - 1]
        words.append([words[i - 4][k] ^ t[k] for k in range(4)])
    return words


def _shift_rows_mat(m: tuple) -> tuple:
    """ShiftRows applied to a 4x4 byte matrix (row i rotated left by i)."""
    return tuple(tuple(m[i][(j + i) % 4] for j in range(4)) for i in range(4))


@dataclass(frozen=True)
class RoundKeys:
    """Expanded AES-128 key material: k[0..10] plus ShiftRows-applied copies of k[0..9]."""

    k: tuple  # 11 matrices of 4x4 bytes, k[r][row][col]
    khat: tuple  # 10 matrices, khat[r] = ShiftRows(k[r])

    @classmethod
    def from_key(cls, key: bytes) -> "RoundKeys":
        if len(key) != 16:
            raise ValueError("key must be 16 bytes")
        words = _expand_key(key)
        k = []
        for r in range(11):
            w = words[4 * r : 4 * r + 4]
            # column c of round r is word 4r+c; k[r][row][col] = word[col][row]
            k.append(tuple(tuple(w[c][i] for c in range(4)) for i in range(4)))
        khat = tuple(_shift_rows_mat(k[r]) for r in range(10))
        return cls(k=tuple(k), khat=khat)


def _bytes_to_state(b: bytes) -> list[list[int]]:
    return [[b[i + 4 * j] for j in range(4)] for i in range(4)]


def _state_to_bytes(s) -> bytes:
    return bytes(s[i % 4][i // 4] for i in range(16))


def _shift_rows(s) -> list[list[int]]:
    return [[s[i][(j + i) % 4] for j in range(4)] for i in range(4)]


def _inv_shift_rows(s) -> list[list[int]]:
    return [[s[i][(j - i) % 4] for j in range(4)] for i in range(4)]


def _mix_single_column(col):
    a0, a1, a2, a3 = col
    return [
        MUL2[a0] ^ MUL3[a1] ^ a2 ^ a3,
        a0 ^ MUL2[a1] ^ MUL3[a2] ^ a3,
        a0 ^ a1 ^ MUL2[a2] ^ MUL3[a3],
        MUL3[a0] ^ a1 ^ a2 ^ MUL2[a3],
    ]


def _mix_columns(s) -> list[list[int]]:
    cols = [_mix_single_column([s[i][j] for i in range(4)]) for j in range(4)]
    return [[cols[j][i] for j in range(4)] for i in range(4)]


def reference_encrypt(pt: bytes, key: bytes) -> bytes:
    """Plain AES-128 encryption, the functional oracle for the table network."""
    rk = RoundKeys.from_key(key)
    s = _bytes_to_state(pt)
    s = [[s[i][j] ^ rk.k[0][i][j] for j in range(4)] for i in range(4)]
    for r in range(1, 10):
        s = [[SBOX[v] for v in row] for row in s]
        s = _shift_rows(s)
        s = _mix_columns(s)
        s = [[s[i][j] ^ rk.k[r][i][j] for j in range(4)] for i in range(4)]
    s = [[SBOX[v] for v in row] for row in s]
    s = _shift_rows(s)
    s = [[s[i][j] ^ rk.k[10][i][j] for j in range(4)] for i in range(4)]
    return _state_to_bytes(s)


def reference_decrypt(ct: bytes, key: bytes) -> bytes:
    """Plain AES-128 decryption; used only as a round-trip oracle."""
    rk = RoundKeys.from_key(key)
    inv_mul = {c: bytes(gf_mul(c, x) for x in range(256)) for c in (9, 11, 13, 14)}

    def inv_mix(s):
        out = []
        for j in range(4):
            col = [s[i][j] for i in range(4)]
            out.append(
                [
                    inv_mul[14][col[0]] ^ inv_mul[11][col[1]] ^ inv_mul[13][col[2]] ^ inv_mul[9][col[3]],
                    inv_mul[9][col[0]] ^ inv_mul[14][col[1]] ^ inv_mul[11][col[2]] ^ inv_mul[13][col[3]],
                    inv_mul[13][col[0]] ^ inv_mul[9][col[1]] ^ inv_mul[14][col[2]] ^ inv_mul[11][col[3]],
                    inv_mul[11][col[0]] ^ inv_mul[13][col[1]] ^ inv_mul[9][col[2]] ^ inv_mul[14][col[3]],
                ]
            )
        return [[out[j][i] for j in range(4)] for i in range(4)]

    s = _bytes_to_state(ct)
    s = [[s[i][j] ^ rk.k[10][i][j] for j in range(4)] for i in range(4)]
    s = _inv_shift_rows(s)
    s = [[INV_SBOX[v] for v in row] for row in s]
    for r in range(9, 0, -1):
        s = [[s[i][j] ^ rk.k[r][i][j] for j in range(4)] for i in range(4)]
        s = inv_mix(s)
        s = _inv_shift_rows(s)
        s = [[INV_SBOX[v] for v in row] for row in s]
    s = [[s[i][j] ^ rk.k[0][i][j] for j in range(4)] for i in range(4)]
    return _state_to_bytes(s)


def rearranged_encrypt(pt: bytes, keys: RoundKeys) -> bytes:
    """AES-128 with the initial key addition folded into the rounds.

    Each of the first nine rounds is ShiftRows, AddRoundKey with the
    ShiftRows-applied key, SubBytes, MixColumns; the tail is ShiftRows,
    AddRoundKey, SubBytes, AddRoundKey. Byte-identical to reference_encrypt.
    """
    s = _bytes_to_state(pt)
    for r in range(1, 10):
        s = _shift_rows(s)
        s = [[SBOX[s[i][j] ^ keys.khat[r - 1][i][j]] for j in range(4)] for i in range(4)]
        s = _mix_columns(s)
    s = _shift_rows(s)
    s = [[SBOX[s[i][j] ^ keys.khat[9][i][j]] ^ keys.k[10][i][j] for j in range(4)] for i in range(4)]
    return _state_to_bytes(s)


def s_ell(x: int, ell: int, key_byte: int) -> int:
    """SubBytes output of (x xor key_byte), multiplied by a MixColumns coefficient."""
    if ell not in (1, 2, 3):
        raise ValueError("ell must be 1, 2 or 3")
    return gf_mul(ell, SBOX[x ^ key_byte])


@dataclass(frozen=True)
class SMatrix:
    """8x256 bit matrix: column j holds ell*S(j xor key_byte), row 1 is the MSB.

    Rows are stored as 256-bit integers with bit j equal to column j.
    """

    ell: int
    key_byte: int
    rows: tuple  # 8 ints

    def column(self, j: int) -> int:
        v = 0
        for i in range(8):
            if (self.rows[i] >> j) & 1:
                v |= 1 << (7 - i)
        return v


@functools.lru_cache(maxsize=None)
def build_s_matrix(ell: int, key_byte: int = 0) -> SMatrix:
    rows = [0] * 8
    for j in range(256):
        v = s_ell(j, ell, key_byte)
        for i in range(8):
            if (v >> (7 - i)) & 1:
                rows[i] |= 1 << j
    return SMatrix(ell=ell, key_byte=key_byte, rows=tuple(rows))


@functools.lru_cache(maxsize=None)
def coeff_sbox_table(ell: int, key_byte: int) -> bytes:
    """256-byte map x -> ell * S(x xor key_byte)."""
    mul = {1: bytes(range(256)), 2: MUL2, 3: MUL3}[ell]
    return bytes(mul[SBOX[x ^ key_byte]] for x in range(256))


def pt_index_for_position(i: int, j: int) -> int:
    """Plaintext byte index feeding the round-1 table at post-shift position (i, j), 0-based."""
    return i + 4 * ((j + i) % 4)


def position_for_pt_index(m: int) -> tuple[int, int]:
    """Inverse of pt_index_for_position."""
    i = m % 4
    j = (m // 4 - i) % 4
    return i, j
