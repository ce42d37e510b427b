"""Statistical trace analysis: Walsh transforms, imbalance accumulation,
mono-bit CPA key ranking, collision and cluster scores, mutual information,
fixed-versus-random t-tests, and the deliberately-leaky encoding demo."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .gfcore import SBOX, build_s_matrix, gf_mul, pt_index_for_position, position_for_pt_index
from .binmat import (
    BitMat4,
    EncodingPair,
    derive_blacklist_W,
    linear_encode,
    idx_of,
    row_times_mat,
    sample_f,
    valid_g_rows,
)
from .cipher import TraceSet, round_output_sample_indices, ut_sample_index

_SBOX_NP = np.frombuffer(SBOX, dtype=np.uint8)
_MUL_NP = {c: np.array([gf_mul(c, x) for x in range(256)], dtype=np.uint8) for c in (1, 2, 3)}


# --- Walsh transform ----------------------------------------------------------

def walsh(fbits, omega: int) -> int:
    """Signed correlation of a 256-point boolean function with x -> parity(x & omega)."""
    total = 0
    for x in range(256):
        total += -1 if (int(fbits[x]) ^ ((x & omega).bit_count() & 1)) else 1
    return total


def fwht_signs(signs: np.ndarray) -> np.ndarray:
    """Fast transform of (-1)^f over all 256 masks; entry omega equals walsh(f, omega)."""
    v = signs.astype(np.int64).copy()
    h = 1
    while h < 256:
        for start in range(0, 256, h * 2):
            a = v[start : start + h].copy()
            b = v[start + h : start + 2 * h].copy()
            v[start : start + h] = a + b
            v[start + h : start + 2 * h] = a - b
        h *= 2
    return v


def walsh_spectrum(fbits) -> np.ndarray:
    signs = 1 - 2 * np.asarray(fbits, dtype=np.int64)
    return fwht_signs(signs)


def delta_imbalance(f_family) -> int:
    """Accumulated absolute Walsh values of a family of boolean functions,
    summed over every mask."""
    total = 0
    for fbits in f_family:
        total += int(np.abs(walsh_spectrum(fbits)).sum())
    return total


# --- hypothesis models ----------------------------------------------------------

@dataclass(frozen=True)
class SboxHypothesis:
    """Coefficient-multiplied SubBytes output of one plaintext byte."""

    ell: int
    pt_index: int

    def bytes_by_value(self, guess: int) -> np.ndarray:
        vals = _SBOX_NP[np.arange(256, dtype=np.uint8) ^ np.uint8(guess)]
        return _MUL_NP[self.ell][vals]

    def hyp_bytes(self, guess: int, pts: np.ndarray) -> np.ndarray:
        return self.bytes_by_value(guess)[pts[:, self.pt_index]]


@dataclass(frozen=True)
class RoundOutputHypothesis:
    """First-round output byte with three of its four subkeys known.

    column/out_byte locate the target byte; target_row is the input row whose
    subkey is guessed; known_keys maps the other three rows to their
    shift-applied round-0 key bytes.
    """

    column: int
    out_byte: int
    target_row: int
    known_keys: dict

    def __post_init__(self):
        rows = set(range(4)) - {self.target_row}
        if set(self.known_keys) != rows:
            raise ValueError("known_keys must cover exactly the three non-target rows")

    def hyp_bytes(self, guess: int, pts: np.ndarray) -> np.ndarray:
        from .gfcore import MC

        out = np.zeros(pts.shape[0], dtype=np.uint8)
        for row in range(4):
            key = guess if row == self.target_row else self.known_keys[row]
            coeff = MC[self.out_byte][row]
            m = pt_index_for_position(row, self.column)
            out ^= _MUL_NP[coeff][_SBOX_NP[pts[:, m] ^ np.uint8(key)]]
        return out


# --- static and trace-mode table-output Walsh -----------------------------------

def walsh_ut_static(ts, i: int, j: int, out_byte: int, out_bit: int,
                    ellp: int, iprime: int, guess: int) -> int:
    """Walsh sum of one round-1 table output bit against one hypothesis bit."""
    column = ts.ut[0, i, j, :, out_byte]
    fbits = (column >> (7 - out_bit)) & 1
    hyp = _MUL_NP[ellp][_SBOX_NP[np.arange(256, dtype=np.uint8) ^ np.uint8(guess)]]
    hbits = (hyp >> (7 - iprime)) & 1
    return int((1 - 2 * (fbits.astype(np.int64) ^ hbits)).sum())


def walsh_ut_from_traces(traces: TraceSet, pt_index: int, out_byte: int, out_bit: int,
                         ellp: int, iprime: int, guess: int, reps: int = 1) -> float:
    """Trace-mode variant: one (or reps, averaged) observed table output per
    input byte value.  Raises if some value was never encrypted."""
    i, j = position_for_pt_index(pt_index)
    s_idx = ut_sample_index(1, j, i, out_byte)
    b = traces.plaintexts[:, pt_index]
    col = traces.samples[:, s_idx]
    hyp = _MUL_NP[ellp][_SBOX_NP[np.arange(256, dtype=np.uint8) ^ np.uint8(guess)]]
    hbits = (hyp >> (7 - iprime)) & 1
    total = 0.0
    for v in range(256):
        hits = np.nonzero(b == v)[0][:reps]
        if hits.size == 0:
            raise ValueError(f"input byte value {v:#04x} unobserved at pt index {pt_index}")
        fb = (col[hits] >> (7 - out_bit)) & 1
        term = float((1 - 2 * fb.astype(np.int64)).mean())
        total += term * (1 if hbits[v] == 0 else -1)
    return total


def walsh_ut_trace_grid(traces: TraceSet, pt_index: int, ellp: int, reps: int = 1) -> np.ndarray:
    """Trace-mode Walsh sums for every candidate at once.

    Returns (guess, out_byte, out_bit, iprime); under a mixed-set campaign the
    observed outputs come from whichever set each encryption selected, so the
    correct candidate no longer scores uniformly zero.
    """
    i, j = position_for_pt_index(pt_index)
    b = traces.plaintexts[:, pt_index]
    cols = traces.samples[:, [ut_sample_index(1, j, i, k) for k in range(4)]]
    sign = np.zeros((4, 8, 256))
    for v in range(256):
        hits = np.nonzero(b == v)[0][:reps]
        if hits.size == 0:
            raise ValueError(f"input byte value {v:#04x} unobserved at pt index {pt_index}")
        obs = cols[hits]  # (reps, 4)
        for k in range(4):
            fb = (obs[:, k][:, None] >> (7 - np.arange(8))) & 1
            sign[k, :, v] = (1 - 2 * fb.astype(np.float64)).mean(axis=0)
    vals = np.arange(256, dtype=np.uint8)
    hyp = _MUL_NP[ellp][_SBOX_NP[vals[None, :] ^ vals[:, None]]]  # (guess, v)
    out = np.empty((256, 4, 8, 8))
    for ip in range(8):
        hsign = 1.0 - 2.0 * ((hyp >> (7 - ip)) & 1)  # (guess, v)
        out[:, :, :, ip] = np.tensordot(hsign, sign, axes=([1], [2])).reshape(256, 4, 8)
    return out


# --- round-output Walsh -----------------------------------------------------------

def _grid_round_output_bytes(traces: TraceSet) -> np.ndarray:
    """(256, 256) encoded round-output bytes from a complete two-byte grid."""
    u_idx, l_idx = round_output_sample_indices(1, 0, 0)
    keys = traces.plaintexts[:, 0].astype(np.int64) * 256 + traces.plaintexts[:, 5]
    c = (traces.samples[:, u_idx].astype(np.uint8) << 4) | traces.samples[:, l_idx]
    grid = np.full(65536, -1, dtype=np.int32)
    grid[keys] = c
    if (grid < 0).any():
        missing = int((grid < 0).sum())
        raise ValueError(f"incomplete grid: {missing} of 65536 input pairs unobserved")
    return grid.reshape(256, 256).astype(np.uint8)


def _gamma_grid(known_k0: int, guess: int) -> np.ndarray:
    s2 = _MUL_NP[2][_SBOX_NP[np.arange(256, dtype=np.uint8) ^ np.uint8(known_k0)]]
    s3 = _MUL_NP[3][_SBOX_NP[np.arange(256, dtype=np.uint8) ^ np.uint8(guess)]]
    return s2[:, None] ^ s3[None, :]


def walsh_round_output(traces: TraceSet, known_k0: int, guess: int, i: int, iprime: int) -> int:
    """Per-first-byte magnitudes of the inner Walsh sums over the second byte,
    accumulated: zero at the correct guess for a balanced single-set run."""
    c = _grid_round_output_bytes(traces)
    gamma = _gamma_grid(known_k0, guess)
    cbit = (c >> (7 - i)) & 1
    gbit = (gamma >> (7 - iprime)) & 1
    inner = 256 - 2 * (cbit ^ gbit).sum(axis=1, dtype=np.int64)
    return int(np.abs(inner).sum())


def walsh_round_output_all(traces: TraceSet, known_k0: int) -> np.ndarray:
    """(guess, i, iprime) grid of the round-output Walsh statistic."""
    c = _grid_round_output_bytes(traces)
    cbits = ((c[None, :, :] >> (7 - np.arange(8)[:, None, None])) & 1).astype(np.int64)
    out = np.zeros((256, 8, 8), dtype=np.int64)
    for guess in range(256):
        gamma = _gamma_grid(known_k0, guess)
        gbits = ((gamma[None, :, :] >> (7 - np.arange(8)[:, None, None])) & 1).astype(np.int64)
        for i in range(8):
            x = cbits[i]
            inner = 256 - 2 * (x[None, :, :] ^ gbits).sum(axis=2)
            out[guess, i] = np.abs(inner).sum(axis=1)
    return out


# --- CPA / DCA ----------------------------------------------------------------

def _resolve_window(window) -> np.ndarray | slice:
    if window is None:
        return slice(None)
    if isinstance(window, slice):
        return window
    if isinstance(window, tuple) and len(window) == 2:
        return slice(window[0], window[0] + window[1])
    return np.asarray(window, dtype=np.int64)


def bit_expand(V: np.ndarray) -> np.ndarray:
    """Serialize byte-valued samples to bit samples, MSB first: (N, W) -> (N, 8W).

    Nibble-valued samples contribute four constant zero columns, which later
    degenerate-variance handling discards.
    """
    shifts = np.arange(7, -1, -1, dtype=np.uint8)
    return ((V[:, :, None] >> shifts) & 1).reshape(V.shape[0], -1)


def pearson_binary(h: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Pearson r of one binary hypothesis vector against every sample column;
    degenerate columns (or a constant hypothesis) give 0."""
    n = h.shape[0]
    h = h.astype(np.float64)
    V = V.astype(np.float64)
    sh = h.sum()
    var_h = sh - sh * sh / n
    if var_h == 0:
        return np.zeros(V.shape[1])
    sv = V.sum(axis=0)
    var_v = (V * V).sum(axis=0) - sv * sv / n
    num = h @ V - sh * sv / n
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(var_h * var_v)
    r[var_v == 0] = 0.0
    return r


def cpa_monobit(traces: TraceSet, model, guess: int, bit: int, window=None) -> np.ndarray:
    """Correlation of one hypothesis bit against each (windowed) sample."""
    w = _resolve_window(window)
    hyp = model.hyp_bytes(guess, traces.plaintexts)
    h = (hyp >> (7 - bit)) & 1
    return pearson_binary(h, traces.samples[:, w])


@dataclass
class BitRanking:
    bit: int
    scores: np.ndarray  # (256,) max |r| per guess
    ranks: np.ndarray  # (256,) 1 = highest score, ties by candidate ascending
    correct_guess: int

    @property
    def correct_score(self) -> float:
        return float(self.scores[self.correct_guess])

    @property
    def correct_rank(self) -> int:
        return int(self.ranks[self.correct_guess])


@dataclass
class KeyRankingReport:
    model: object
    bits: list  # of BitRanking

    def correct_ranks(self) -> list:
        return [b.correct_rank for b in self.bits]


def _ranks_from_scores(scores: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.arange(256), -scores))
    ranks = np.empty(256, dtype=np.int64)
    ranks[order] = np.arange(1, 257)
    return ranks


def _grouped_bit_stats(b: np.ndarray, Vbits: np.ndarray):
    """Per-byte-value counts and column sums of a 0/1 sample matrix grouped by b."""
    counts = np.bincount(b, minlength=256).astype(np.float64)
    order = np.argsort(b, kind="stable")
    sorted_rows = Vbits[order]
    starts = np.searchsorted(b[order], np.arange(256))
    present = counts > 0
    sums = np.zeros((256, Vbits.shape[1]), dtype=np.float64)
    chunk = 4096
    for lo in range(0, Vbits.shape[1], chunk):
        part = sorted_rows[:, lo : lo + chunk].astype(np.int64)
        sums[present, lo : lo + chunk] = np.add.reduceat(part, starts[present], axis=0)
    return counts, sums


def dca_rank(traces: TraceSet, model, correct_guess: int, window=None,
             bits=range(8)) -> KeyRankingReport:
    """Mono-bit attack over bit-serialized samples: every windowed sample byte
    is split into its bits, each candidate is scored by its peak |r| across
    those bit columns, and candidates are ranked descending by score."""
    w = _resolve_window(window)
    Vbits = bit_expand(traces.samples[:, w])
    n = Vbits.shape[0]

    bits = list(bits)
    scores = np.zeros((256, len(bits)))
    if isinstance(model, SboxHypothesis):
        counts, sums = _grouped_bit_stats(traces.plaintexts[:, model.pt_index], Vbits)
        sv = sums.sum(axis=0)
        var_v = sv - sv * sv / n  # binary columns: sum of squares equals the sum
        nz = var_v > 0
        hyp_by_val = np.stack([model.bytes_by_value(g) for g in range(256)])
        for bi, bit in enumerate(bits):
            H = ((hyp_by_val >> (7 - bit)) & 1).astype(np.float64)  # (guess, value)
            sh = H @ counts
            var_h = sh - sh * sh / n
            num = H @ sums - np.outer(sh, sv) / n
            r = np.zeros_like(num)
            ok = var_h > 0
            with np.errstate(invalid="ignore", divide="ignore"):
                r[ok] = num[ok] / np.sqrt(np.outer(var_h[ok], var_v).clip(min=1e-300))
            r[:, ~nz] = 0.0
            scores[:, bi] = np.abs(r).max(axis=1)
    else:
        V = Vbits.astype(np.float64)
        sv = V.sum(axis=0)
        var_v = sv - sv * sv / n
        nz = var_v > 0
        Vc = V - sv / n
        denom_v = np.sqrt(var_v.clip(min=1e-300))
        for guess in range(256):
            hyp = model.hyp_bytes(guess, traces.plaintexts)
            for bi, bit in enumerate(bits):
                h = ((hyp >> (7 - bit)) & 1).astype(np.float64)
                sh = h.sum()
                var_h = sh - sh * sh / n
                if var_h == 0:
                    continue
                r = (h - sh / n) @ Vc / (np.sqrt(var_h) * denom_v)
                r[~nz] = 0.0
                scores[guess, bi] = np.abs(r).max()

    rankings = []
    for bi, bit in enumerate(bits):
        col = scores[:, bi]
        rankings.append(
            BitRanking(bit=bit, scores=col, ranks=_ranks_from_scores(col), correct_guess=correct_guess)
        )
    return KeyRankingReport(model=model, bits=rankings)


# --- collision / cluster ---------------------------------------------------------

def _round_output_samples(traces: TraceSet) -> np.ndarray:
    u_idx, l_idx = round_output_sample_indices(1, 0, 0)
    return (traces.samples[:, u_idx].astype(np.uint8) << 4) | traces.samples[:, l_idx]


def collision_and_sse_scores(traces: TraceSet, known_k0: int):
    """For every candidate: the collision-consistency score (maximal when each
    hypothesis cluster holds one constant encoded byte) and the cluster
    sum-of-squared-error (minimal in the same situation)."""
    c = _round_output_samples(traces)
    cbits = ((c[:, None] >> (7 - np.arange(8))) & 1).astype(np.float64)  # (N, 8)
    p0 = traces.plaintexts[:, 0]
    p5 = traces.plaintexts[:, 5]
    coll = np.zeros(256, dtype=np.float64)
    sse = np.zeros(256, dtype=np.float64)
    for guess in range(256):
        hyp = _MUL_NP[2][_SBOX_NP[p0 ^ np.uint8(known_k0)]] ^ _MUL_NP[3][_SBOX_NP[p5 ^ np.uint8(guess)]]
        n_v = np.bincount(hyp, minlength=256).astype(np.float64)
        s = np.stack(
            [np.bincount(hyp, weights=cbits[:, i], minlength=256) for i in range(8)], axis=1
        )  # (256 clusters, 8)
        coll[guess] = np.abs(n_v[:, None] - 2 * s).sum()
        nz = n_v > 0
        sse[guess] = (s[nz] * (n_v[nz, None] - s[nz]) / n_v[nz, None]).sum()
    return coll, sse


def collision_score(traces: TraceSet, known_k0: int, guess: int) -> int:
    c = _round_output_samples(traces)
    cbits = ((c[:, None] >> (7 - np.arange(8))) & 1).astype(np.float64)
    hyp = (
        _MUL_NP[2][_SBOX_NP[traces.plaintexts[:, 0] ^ np.uint8(known_k0)]]
        ^ _MUL_NP[3][_SBOX_NP[traces.plaintexts[:, 5] ^ np.uint8(guess)]]
    )
    n_v = np.bincount(hyp, minlength=256).astype(np.float64)
    s = np.stack([np.bincount(hyp, weights=cbits[:, i], minlength=256) for i in range(8)], axis=1)
    return int(np.abs(n_v[:, None] - 2 * s).sum())


def cluster_sse_score(traces: TraceSet, known_k0: int, guess: int) -> float:
    c = _round_output_samples(traces)
    cbits = ((c[:, None] >> (7 - np.arange(8))) & 1).astype(np.float64)
    hyp = (
        _MUL_NP[2][_SBOX_NP[traces.plaintexts[:, 0] ^ np.uint8(known_k0)]]
        ^ _MUL_NP[3][_SBOX_NP[traces.plaintexts[:, 5] ^ np.uint8(guess)]]
    )
    n_v = np.bincount(hyp, minlength=256).astype(np.float64)
    s = np.stack([np.bincount(hyp, weights=cbits[:, i], minlength=256) for i in range(8)], axis=1)
    nz = n_v > 0
    return float((s[nz] * (n_v[nz, None] - s[nz]) / n_v[nz, None]).sum())


# --- mutual information -----------------------------------------------------------

def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def mia(traces: TraceSet, model, guess: int, bit: int, window=None) -> np.ndarray:
    """Plug-in mutual information (bits) between one hypothesis bit and every
    bit-serialized sample in the window.

    Trace points are analyzed at bit granularity, matching the mono-bit CPA
    treatment: a byte sample contributes eight binary observations.  Returns
    one value per bit column (8 per windowed sample)."""
    w = _resolve_window(window)
    Y = bit_expand(traces.samples[:, w]).astype(np.float64)
    hyp = model.hyp_bytes(guess, traces.plaintexts)
    h = ((hyp >> (7 - bit)) & 1).astype(np.float64)
    n = Y.shape[0]
    p11 = h @ Y / n
    p1_ = h.sum() / n
    p_1 = Y.sum(axis=0) / n
    return _binary_mi(p11, p1_, p_1)


def _binary_mi(p11: np.ndarray, p1_: float | np.ndarray, p_1: np.ndarray) -> np.ndarray:
    p10 = p1_ - p11
    p01 = p_1 - p11
    p00 = 1.0 - p1_ - p01
    joint = np.stack([p00, p01, p10, p11])
    h_joint = -_plogp(joint).sum(axis=0)
    h_x = -(_plogp(np.atleast_1d(np.asarray(p1_, dtype=np.float64)))
            + _plogp(np.atleast_1d(1.0 - np.asarray(p1_, dtype=np.float64))))
    h_y = -(_plogp(p_1) + _plogp(1.0 - p_1))
    mi = h_x + h_y - h_joint
    return np.clip(mi, 0.0, None)


def mia_bytes(traces: TraceSet, model, guess: int, bit: int, window=None) -> np.ndarray:
    """Byte-granular variant: raw sample values as 256 bins, one MI per sample.

    With noise-free traces a sample that is a bijection of the attacked input
    byte saturates this estimator at H(X) for every candidate, so the bit-level
    mia() is the operative analysis; this form is kept for inspection."""
    w = _resolve_window(window)
    V = traces.samples[:, w]
    hyp = model.hyp_bytes(guess, traces.plaintexts)
    h = ((hyp >> (7 - bit)) & 1).astype(np.int64)
    n = V.shape[0]
    out = np.empty(V.shape[1])
    for s in range(V.shape[1]):
        joint = np.bincount(V[:, s].astype(np.int64) * 2 + h, minlength=512).astype(np.float64) / n
        jm = joint.reshape(256, 2)
        out[s] = _entropy(jm.sum(axis=1)) + _entropy(jm.sum(axis=0)) - _entropy(joint)
    return out


def mia_max(traces: TraceSet, model, window=None, bits=range(8)) -> np.ndarray:
    """(256, len(bits)) peak bit-level mutual information per candidate."""
    w = _resolve_window(window)
    Y = bit_expand(traces.samples[:, w]).astype(np.float64)
    n = Y.shape[0]
    p_1 = Y.sum(axis=0) / n
    bits = list(bits)
    out = np.zeros((256, len(bits)))
    for guess in range(256):
        hyp = model.hyp_bytes(guess, traces.plaintexts)
        for bi, bit in enumerate(bits):
            h = ((hyp >> (7 - bit)) & 1).astype(np.float64)
            p11 = h @ Y / n
            out[guess, bi] = _binary_mi(p11, float(h.sum() / n), p_1).max()
    return out


# --- TVLA ---------------------------------------------------------------------

@dataclass
class TvlaResult:
    t: np.ndarray
    max_abs_t: float
    degenerate: np.ndarray  # samples where both variances vanished

    def passed(self, threshold: float = 4.5) -> bool:
        return self.max_abs_t < threshold


def tvla(fixed: TraceSet, rand: TraceSet, window=None) -> TvlaResult:
    """Welch t statistic per sample between a fixed-plaintext and a
    random-plaintext campaign."""
    if fixed.samples.shape[1] != rand.samples.shape[1]:
        raise ValueError("trace layouts differ")
    w = _resolve_window(window)
    F = fixed.samples[:, w].astype(np.float64)
    R = rand.samples[:, w].astype(np.float64)
    nf, nr = F.shape[0], R.shape[0]
    if nf < 2 or nr < 2:
        raise ValueError("both trace sets need at least two traces")
    mf, mr = F.mean(axis=0), R.mean(axis=0)
    vf = F.var(axis=0, ddof=1)
    vr = R.var(axis=0, ddof=1)
    denom = np.sqrt(vf / nf + vr / nr)
    t = np.zeros_like(mf)
    ok = denom > 0
    t[ok] = (mf[ok] - mr[ok]) / denom[ok]
    return TvlaResult(t=t, max_abs_t=float(np.abs(t).max()), degenerate=~ok)


# --- deliberately unbalanced baseline -------------------------------------------

def baseline_unbalanced_demo(seed: int = 0) -> dict:
    """Build a linear pair whose assembled matrix contains a forbidden row
    (last row reduced to the single index 8), generate the coefficient-2
    encoded table, and measure the resulting correlation leak.

    The forbidden combination {8} collapses the table's last output bit onto
    the first hypothesis bit of the plain SubBytes output, a full-magnitude
    Walsh value; wrong candidates show only S-box cross-correlation noise.
    """
    rng = random.Random(seed)
    W = derive_blacklist_W()
    while True:
        f = sample_f(rng)
        cand = valid_g_rows(f)
        if all(cand[i] for i in range(3)):
            g_rows = [rng.choice(cand[i]) for i in range(3)] + [0]
            break
    bad_pair = EncodingPair(f=f, g=BitMat4(rows=tuple(g_rows)))
    key_byte = rng.randrange(256)

    table = [linear_encode(gf_mul(2, SBOX[p ^ key_byte]), bad_pair) for p in range(256)]
    smat = {lp: build_s_matrix(lp, key_byte) for lp in (1, 2, 3)}

    grid = np.zeros((8, 3, 8), dtype=np.int32)
    rows = [0] * 8
    for p, v in enumerate(table):
        for i in range(8):
            if (v >> (7 - i)) & 1:
                rows[i] |= 1 << p
    for i in range(8):
        for lp in (1, 2, 3):
            for ip in range(8):
                grid[i, lp - 1, ip] = 256 - 2 * (rows[i] ^ smat[lp].rows[ip]).bit_count()

    leaks = [(int(i) + 1, int(lp) + 1, int(ip) + 1) for i, lp, ip in np.argwhere(np.abs(grid) == 256)]

    wrong = []
    for guess in range(256):
        if guess == key_byte:
            continue
        srow = build_s_matrix(1, guess).rows[0]
        wrong.append(abs(256 - 2 * (rows[7] ^ srow).bit_count()))
    wrong = np.array(wrong, dtype=np.float64)

    return {
        "pair": bad_pair,
        "key_byte": key_byte,
        "grid": grid,
        "leak_coords": leaks,
        "leak_value": int(np.abs(grid).max()),
        "expected_leak": (8, 1, 1),  # table bit 8 against coefficient-1 hypothesis bit 1
        "wrong_mean": float(wrong.mean()),
        "wrong_max": float(wrong.max()),
        "wrong_sd": float(wrong.std()),
        "forbidden_row_in_blacklist": idx_of((0 << 4) | 0b0001) in W.flat,
    }
