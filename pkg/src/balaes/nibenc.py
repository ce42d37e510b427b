"""Zero-swap nibble codecs and their balance-preserving candidate searches.

A codec exchanges the nibble value 0 with a partner e and fixes everything
else, hiding zeros at table boundaries without disturbing the first-order
balance of the linear layer, provided e passes the candidate condition for
that boundary."""

from __future__ import annotations

from dataclasses import dataclass

from .gfcore import build_s_matrix, coeff_sbox_table
from .binmat import EncodingPair, encode_map

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class NibbleCodec:
    """Involution on 4-bit values swapping 0 with e (e = 0 is the identity)."""

    e: int

    def __post_init__(self):
        if not 0 <= self.e <= 0xF:
            raise ValueError("codec partner must be a nibble")

    def encode(self, v: int) -> int:
        if v == 0:
            return self.e
        if v == self.e:
            return 0
        return v

    decode = encode


@dataclass(frozen=True)
class CodecPair:
    upper: NibbleCodec
    lower: NibbleCodec

    @classmethod
    def identity(cls) -> "CodecPair":
        return cls(upper=NibbleCodec(0), lower=NibbleCodec(0))

    @classmethod
    def of(cls, e_upper: int, e_lower: int) -> "CodecPair":
        return cls(upper=NibbleCodec(e_upper), lower=NibbleCodec(e_lower))

    def is_identity(self) -> bool:
        return self.upper.e == 0 and self.lower.e == 0


def encode_byte(x: int, cp: CodecPair) -> int:
    return (cp.upper.encode(x >> 4) << 4) | cp.lower.encode(x & 0xF)


def decode_byte(x: int, cp: CodecPair) -> int:
    return encode_byte(x, cp)  # involution


def codec_map(cp: CodecPair) -> bytes:
    return bytes(encode_byte(x, cp) for x in range(256))


def _half_nibble(v: int, half: str) -> int:
    return v >> 4 if half == UPPER else v & 0xF


def _nibble_masks(values) -> list:
    """256-bit membership masks per nibble value from a 256-long value list."""
    masks = [0] * 16
    for j, v in enumerate(values):
        masks[v] |= 1 << j
    return masks


def _encoded_coeff_columns(pair: EncodingPair, key_byte: int, ell: int) -> bytes:
    return coeff_sbox_table(ell, key_byte).translate(encode_map(pair))


# Bit masks of the plain byte bits over all 256 byte values; _RAW_ROWS[i] has
# bit u set when byte u carries bit i (MSB first).
_RAW_ROWS = tuple(
    sum(1 << u for u in range(256) if (u >> (7 - i)) & 1) for i in range(8)
)


def find_candidates(pair: EncodingPair, key_byte: int, half: str, ell: int | None = None) -> set:
    """Swap partners preserving the balance of the encoded coefficient matrix.

    e qualifies when, for every target coefficient ell' and every row of its
    bit matrix, the columns whose selected half-nibble equals 0 and those
    equal to e carry identical bit sums (both sets always have 16 members).
    With ell given the condition is evaluated on that coefficient's encoded
    matrix, matching the table boundary it protects; ell=None intersects over
    all three.  The identity e = 0 always qualifies and is included in the
    returned set; build-time selection discards it.
    """
    smats = {lp: build_s_matrix(lp, key_byte) for lp in (1, 2, 3)}
    ells = (ell,) if ell is not None else (1, 2, 3)
    result = set(range(16))
    for l in ells:
        if l not in (1, 2, 3):
            raise ValueError("ell must be 1, 2 or 3")
        nib = [_half_nibble(c, half) for c in _encoded_coeff_columns(pair, key_byte, l)]
        masks = _nibble_masks(nib)
        keep = set()
        for e in result:
            ok = True
            for lp in (1, 2, 3):
                for i in range(8):
                    row = smats[lp].rows[i]
                    if (row & masks[0]).bit_count() != (row & masks[e]).bit_count():
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                keep.add(e)
        result = keep
    return result


def find_round_output_candidates(pair: EncodingPair, half: str) -> set:
    """Swap partners for boundaries carrying the encoding of a free byte.

    XOR-tree outputs hold the linear encoding of a (partial) XOR of table
    outputs, which sweeps all byte values uniformly; balance must therefore
    hold against every plain bit of the pre-encoding byte rather than against
    a coefficient matrix.  Same sum condition, with the identity bit rows in
    place of the coefficient rows.
    """
    nib = [_half_nibble(c, half) for c in encode_map(pair)]
    masks = _nibble_masks(nib)
    out = set()
    for e in range(16):
        if all((row & masks[0]).bit_count() == (row & masks[e]).bit_count() for row in _RAW_ROWS):
            out.add(e)
    return out


def verify_swap_balance(pair: EncodingPair, key_byte: int, cp: CodecPair) -> bool:
    """Recompute the full Walsh grid after applying the codec pair to every
    encoded coefficient column; true iff every sum is still zero."""
    smats = {lp: build_s_matrix(lp, key_byte) for lp in (1, 2, 3)}
    for ell in (1, 2, 3):
        cols = [encode_byte(c, cp) for c in _encoded_coeff_columns(pair, key_byte, ell)]
        for i in range(8):
            fmask = 0
            for j, c in enumerate(cols):
                if (c >> (7 - i)) & 1:
                    fmask |= 1 << j
            for lp in (1, 2, 3):
                for ip in range(8):
                    if (fmask ^ smats[lp].rows[ip]).bit_count() != 128:
                        return False
    return True
