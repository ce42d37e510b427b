import random

import numpy as np
import pytest

from balaes import cipher, sca
from balaes.cipher import SelectorPolicy, TraceSet, collect_traces, fixed_plaintexts, random_plaintexts
from balaes.gfcore import RoundKeys, build_s_matrix, sbox
from balaes.sca import (
    RoundOutputHypothesis,
    SboxHypothesis,
    baseline_unbalanced_demo,
    bit_expand,
    collision_and_sse_scores,
    collision_score,
    cluster_sse_score,
    cpa_monobit,
    dca_rank,
    delta_imbalance,
    mia,
    mia_bytes,
    mia_max,
    pearson_binary,
    tvla,
    walsh,
    walsh_round_output,
    walsh_spectrum,
    walsh_ut_from_traces,
    walsh_ut_static,
)

from conftest import STD_KEY


def _toy_traceset(samples: np.ndarray, plaintexts: np.ndarray | None = None) -> TraceSet:
    n = samples.shape[0]
    if plaintexts is None:
        plaintexts = np.zeros((n, 16), dtype=np.uint8)
    pad = np.zeros((n, cipher.SAMPLE_COUNT), dtype=np.uint8)
    pad[:, : samples.shape[1]] = samples
    return TraceSet(plaintexts=plaintexts, set_bits=np.zeros(n, dtype=np.uint8), samples=pad)


# --- walsh ----------------------------------------------------------------------

def test_walsh_constant_zero_function():
    assert walsh([0] * 256, 0) == 256
    assert walsh([0] * 256, 0x13) == 0


def test_walsh_linear_function_peaks_at_its_mask():
    for omega in (0x01, 0x80, 0x56):
        f = [(x & omega).bit_count() & 1 for x in range(256)]
        assert walsh(f, omega) == 256
        assert walsh(f, 0) == 0


def test_walsh_sbox_bit_against_direct_summation():
    f = [(sbox(x) >> 7) & 1 for x in range(256)]
    ref = 0
    for x in range(256):
        ref += (-1) ** (f[x] ^ ((x & 0x80) >> 7))
    assert walsh(f, 0x80) == ref
    assert walsh(f, 0x80) % 2 == 0
    assert -256 <= walsh(f, 0x80) <= 256


def test_walsh_spectrum_matches_pointwise_walsh():
    rng = random.Random(70)
    f = [rng.randrange(2) for _ in range(256)]
    spec = walsh_spectrum(f)
    for omega in (0, 1, 5, 0x80, 0xFF, 0x3C):
        assert spec[omega] == walsh(f, omega)


def test_one_resilient_function_spectrum():
    # parity of two fixed bits: spectrum vanishes for every mask of weight <= 1
    f = [((x >> 3) ^ (x >> 6)) & 1 for x in range(256)]
    spec = walsh_spectrum(f)
    for omega in range(256):
        if omega.bit_count() <= 1:
            assert spec[omega] == 0


def test_delta_imbalance_cases():
    assert delta_imbalance([[0] * 256]) == 256
    rng = random.Random(71)
    fam = [[rng.randrange(2) for _ in range(256)] for _ in range(3)]
    ref = sum(abs(walsh(f, w)) for f in fam for w in range(256))
    assert delta_imbalance(fam) == ref


# --- CPA ------------------------------------------------------------------------

def test_pearson_binary_self_and_complement():
    rng = random.Random(72)
    h = np.array([rng.randrange(2) for _ in range(500)], dtype=np.float64)
    V = np.stack([h, 1 - h, np.full(500, 7.0)], axis=1)
    r = pearson_binary(h, V)
    assert abs(r[0] - 1.0) < 1e-12
    assert abs(r[1] + 1.0) < 1e-12
    assert r[2] == 0.0  # degenerate column


def test_pearson_binary_affine_invariance():
    rng = random.Random(73)
    h = np.array([rng.randrange(2) for _ in range(1000)], dtype=np.float64)
    v = np.array([rng.gauss(0, 1) for _ in range(1000)])
    r1 = pearson_binary(h, v[:, None])[0]
    r2 = pearson_binary(h, (3.5 * v + 11.0)[:, None])[0]
    assert abs(r1 - r2) < 1e-12


def test_pearson_binary_null_bound():
    rng = random.Random(74)
    n = 10000
    h = np.array([rng.randrange(2) for _ in range(n)], dtype=np.float64)
    v = np.array([rng.randrange(256) for _ in range(n)], dtype=np.float64)
    assert abs(pearson_binary(h, v[:, None])[0]) < 0.05


def test_cpa_monobit_finds_injected_hypothesis(std_pair, traces_q0_10k):
    # correlation of the correct hypothesis against its own table-output bits
    # is tiny; against an unrelated sample column it is noise
    model = SboxHypothesis(ell=1, pt_index=0)
    r = cpa_monobit(traces_q0_10k, model, guess=STD_KEY[0], bit=0, window=(0, 16))
    assert np.abs(r).max() < 0.06


def test_dca_rank_synthetic_planted_leak():
    rng = random.Random(75)
    n = 4000
    pts = np.frombuffer(rng.randbytes(n * 16), dtype=np.uint8).reshape(n, 16).copy()
    secret = 0x5A
    hyp = SboxHypothesis(ell=1, pt_index=3)
    leak_bits = (hyp.hyp_bytes(secret, pts) >> 7) & 1  # bit 1 of S(pt3 ^ secret)
    samples = np.zeros((n, 4), dtype=np.uint8)
    samples[:, 2] = leak_bits  # bit-expansion exposes it on the LSB column
    samples[:, 0] = np.frombuffer(rng.randbytes(n), dtype=np.uint8)
    ts = _toy_traceset(samples, pts)
    report = dca_rank(ts, hyp, correct_guess=secret, window=(0, 4), bits=[0])
    br = report.bits[0]
    assert br.correct_rank == 1
    assert br.correct_score > 0.99
    assert sorted(br.ranks) == list(range(1, 257))


def test_dca_rank_tie_break_by_candidate_value():
    scores = np.zeros(256)
    scores[10] = scores[20] = 0.5
    ranks = sca._ranks_from_scores(scores)
    assert ranks[10] == 1 and ranks[20] == 2
    assert ranks[0] == 3  # first of the zero-score ties
    assert sorted(ranks) == list(range(1, 257))


def test_dca_rank_scale_invariance():
    rng = random.Random(76)
    scores = np.array([rng.random() for _ in range(256)])
    assert np.array_equal(sca._ranks_from_scores(scores), sca._ranks_from_scores(scores * 2.0))


def test_dca_grouped_and_general_paths_agree(traces_q0_10k):
    m = 4
    sb = SboxHypothesis(ell=1, pt_index=m)

    class _Wrapped:
        def hyp_bytes(self, guess, pts):
            return sb.hyp_bytes(guess, pts)

    fast = dca_rank(traces_q0_10k, sb, correct_guess=STD_KEY[m], window=(0, 40), bits=[0, 5])
    slow = dca_rank(traces_q0_10k, _Wrapped(), correct_guess=STD_KEY[m], window=(0, 40), bits=[0, 5])
    for a, b in zip(fast.bits, slow.bits):
        assert np.allclose(a.scores, b.scores, atol=1e-10)
        assert np.array_equal(a.ranks, b.ranks)


# --- table-output walsh -----------------------------------------------------------

def test_walsh_ut_static_zero_at_correct_key(std_pair, std_spec):
    keys = std_spec.round_keys
    for i, j in ((0, 0), (2, 1), (3, 3)):
        guess = keys.khat[0][i][j]
        for k in range(4):
            for ellp in (1, 2, 3):
                assert walsh_ut_static(std_pair.q0, i, j, k, 0, ellp, 0, guess) == 0


def test_walsh_ut_static_wrong_keys_mostly_nonzero(std_pair, std_spec):
    keys = std_spec.round_keys
    vals = [
        abs(walsh_ut_static(std_pair.q0, 0, 0, 0, 0, 1, 0, g))
        for g in range(256)
        if g != keys.khat[0][0][0]
    ]
    assert np.mean(vals) > 4
    assert max(vals) <= 64


def test_walsh_ut_from_traces_matches_static(std_pair, std_spec, traces_q0_10k):
    keys = std_spec.round_keys
    guess = keys.khat[0][0][0]
    w_static = walsh_ut_static(std_pair.q0, 0, 0, 1, 2, 2, 3, guess)
    w_trace = walsh_ut_from_traces(traces_q0_10k, 0, 1, 2, 2, 3, guess)
    assert w_trace == w_static == 0
    wrong = (guess + 1) % 256
    assert walsh_ut_from_traces(traces_q0_10k, 0, 1, 2, 2, 3, wrong) == walsh_ut_static(
        std_pair.q0, 0, 0, 1, 2, 2, 3, wrong
    )


def test_walsh_ut_from_traces_unobserved_value_raises(std_pair):
    ts = collect_traces(std_pair, SelectorPolicy.fixed_q0(), fixed_plaintexts(bytes(16), 5))
    with pytest.raises(ValueError):
        walsh_ut_from_traces(ts, 0, 0, 0, 1, 1, 0)


# --- round-output walsh -----------------------------------------------------------

def test_walsh_round_output_correct_zero_wrong_positive(grid_q0, std_spec):
    keys = std_spec.round_keys
    known = keys.khat[0][0][0]
    correct = keys.khat[0][1][0]
    for i in (0, 3, 7):
        for ip in (0, 4):
            assert walsh_round_output(grid_q0, known, correct, i, ip) == 0
    wrong = (correct + 77) % 256
    vals = [walsh_round_output(grid_q0, known, wrong, i, 0) for i in range(8)]
    assert all(v >= 0 for v in vals)
    assert max(vals) > 0


def test_walsh_round_output_incomplete_grid_raises(std_pair):
    ts = collect_traces(std_pair, SelectorPolicy.fixed_q0(), fixed_plaintexts(bytes(16), 4))
    with pytest.raises(ValueError):
        walsh_round_output(ts, 0, 0, 0, 0)


# --- collision / cluster ------------------------------------------------------------

def test_collision_partition_sizes_sum_to_grid(grid_q0, std_spec):
    known = std_spec.round_keys.khat[0][0][0]
    from balaes.sca import _MUL_NP, _SBOX_NP

    for guess in (0, 131, 255):
        hyp = (
            _MUL_NP[2][_SBOX_NP[grid_q0.plaintexts[:, 0] ^ np.uint8(known)]]
            ^ _MUL_NP[3][_SBOX_NP[grid_q0.plaintexts[:, 5] ^ np.uint8(guess)]]
        )
        assert np.bincount(hyp, minlength=256).sum() == 65536


def test_collision_and_sse_synthetic_perfect_clusters():
    # observations equal to a fixed bijection of the hypothesis value:
    # perfect collisions, maximal score, zero squared error
    rng = random.Random(77)
    n = 2048
    pts = np.zeros((n, 16), dtype=np.uint8)
    pts[:, 0] = np.frombuffer(rng.randbytes(n), dtype=np.uint8)
    pts[:, 5] = np.frombuffer(rng.randbytes(n), dtype=np.uint8)
    from balaes.sca import _MUL_NP, _SBOX_NP

    secret = 0x21
    hyp = _MUL_NP[2][_SBOX_NP[pts[:, 0]]] ^ _MUL_NP[3][_SBOX_NP[pts[:, 5] ^ np.uint8(secret)]]
    c = _SBOX_NP[hyp]  # arbitrary bijection as the "encoded" observation
    samples = np.zeros((n, 22), dtype=np.uint8)
    samples[:, 20] = c >> 4
    samples[:, 21] = c & 0xF
    ts = _toy_traceset(samples, pts)
    assert collision_score(ts, 0, secret) == n * 8
    assert cluster_sse_score(ts, 0, secret) == 0.0
    coll, sse = collision_and_sse_scores(ts, 0)
    assert int(np.argmax(coll)) == secret
    assert int(np.argmin(sse)) == secret


def test_collision_q0_vs_mixed(grid_q0, grid_mixed, std_spec):
    keys = std_spec.round_keys
    known = keys.khat[0][0][0]
    correct = int(keys.khat[0][1][0])
    coll, sse = collision_and_sse_scores(grid_q0, known)
    assert int(np.argmax(coll)) == correct
    assert int(np.argmin(sse)) == correct
    coll_m, sse_m = collision_and_sse_scores(grid_mixed, known)
    assert int(np.argmax(coll_m)) != correct
    assert int(np.argmin(sse_m)) != correct


# --- MIA ----------------------------------------------------------------------------

def test_mia_upper_bound_when_sample_equals_hypothesis():
    rng = random.Random(78)
    n = 3000
    pts = np.frombuffer(rng.randbytes(n * 16), dtype=np.uint8).reshape(n, 16).copy()
    model = SboxHypothesis(ell=1, pt_index=2)
    h = (model.hyp_bytes(0x17, pts) >> 7) & 1
    samples = np.zeros((n, 2), dtype=np.uint8)
    samples[:, 0] = h
    ts = _toy_traceset(samples, pts)
    vals = mia(ts, model, guess=0x17, bit=0, window=(0, 1))
    p1 = h.mean()
    h_x = -(p1 * np.log2(p1) + (1 - p1) * np.log2(1 - p1))
    assert abs(vals.max() - h_x) < 1e-9


def test_mia_independent_sample_near_zero():
    rng = random.Random(79)
    n = 10000
    pts = np.frombuffer(rng.randbytes(n * 16), dtype=np.uint8).reshape(n, 16).copy()
    samples = np.frombuffer(rng.randbytes(n), dtype=np.uint8).reshape(n, 1).copy()
    ts = _toy_traceset(samples, pts)
    model = SboxHypothesis(ell=1, pt_index=0)
    vals = mia(ts, model, guess=0, bit=0, window=(0, 1))
    assert vals.max() < 0.002


def test_mia_bounds(traces_mixed_10k):
    model = SboxHypothesis(ell=1, pt_index=0)
    vals = mia(traces_mixed_10k, model, guess=5, bit=3, window=(0, 8))
    assert (vals >= 0).all()
    assert (vals <= 1.0 + 1e-12).all()


def test_mia_bytes_saturates_on_bijective_byte_sample(traces_q0_10k):
    # single-set traces: the table output byte is a bijection of the input
    # byte, so byte-binned mutual information reaches H(X) for every guess
    model = SboxHypothesis(ell=1, pt_index=0)
    vals = mia_bytes(traces_q0_10k, model, guess=123, bit=0, window=(0, 4))
    assert vals.max() > 0.99


def test_round_output_hypothesis_validation():
    with pytest.raises(ValueError):
        RoundOutputHypothesis(column=0, out_byte=0, target_row=1, known_keys={0: 1, 1: 2, 2: 3})


# --- TVLA ---------------------------------------------------------------------------

def test_tvla_null_case(std_pair):
    rng = random.Random(80)
    a = collect_traces(std_pair, SelectorPolicy.random_bit(0.5), random_plaintexts(2000, rng), rng)
    b = collect_traces(std_pair, SelectorPolicy.random_bit(0.5), random_plaintexts(2000, rng), rng)
    res = tvla(a, b)
    assert res.max_abs_t < 4.5


def test_tvla_synthetic_leak_detected():
    rng = random.Random(81)
    n = 2000
    pts_f = np.zeros((n, 16), dtype=np.uint8)
    pts_f[:, 0] = 0xFF
    pts_r = np.frombuffer(rng.randbytes(n * 16), dtype=np.uint8).reshape(n, 16).copy()
    sf = np.zeros((n, 2), dtype=np.uint8)
    sr = np.zeros((n, 2), dtype=np.uint8)
    sf[:, 0] = pts_f[:, 0]
    sr[:, 0] = pts_r[:, 0]
    res = tvla(_toy_traceset(sf, pts_f), _toy_traceset(sr, pts_r), window=(0, 1))
    assert res.max_abs_t > 20


def test_tvla_degenerate_samples_flagged():
    a = _toy_traceset(np.full((10, 3), 7, dtype=np.uint8))
    b = _toy_traceset(np.full((12, 3), 7, dtype=np.uint8))
    res = tvla(a, b, window=(0, 3))
    assert res.max_abs_t == 0.0
    assert res.degenerate.all()


def test_tvla_layout_mismatch():
    a = _toy_traceset(np.zeros((5, 2), dtype=np.uint8))
    b = TraceSet(
        plaintexts=np.zeros((5, 16), dtype=np.uint8),
        set_bits=np.zeros(5, dtype=np.uint8),
        samples=np.zeros((5, 10), dtype=np.uint8),
    )
    with pytest.raises(ValueError):
        tvla(a, b)
    with pytest.raises(ValueError):
        tvla(_toy_traceset(np.zeros((1, 2), dtype=np.uint8)), a)


# --- baseline demo --------------------------------------------------------------------

def test_baseline_demo_leak_and_wrong_key_stats():
    demo = baseline_unbalanced_demo(seed=3)
    assert demo["leak_value"] == 256
    assert demo["forbidden_row_in_blacklist"]
    # leak at table bit 8 against hypothesis bit 1 of the plain SubBytes row
    assert (8, 1, 1) in demo["leak_coords"]
    assert 8 <= demo["wrong_mean"] <= 20
    assert demo["wrong_max"] <= 64


def test_baseline_demo_restored_by_valid_pair():
    from balaes.binmat import is_balanced_pair, sample_pair

    rng = random.Random(82)
    assert is_balanced_pair(sample_pair(rng), key_byte=0x42)


def test_bit_expand_layout():
    V = np.array([[0x80, 0x01]], dtype=np.uint8)
    bits = bit_expand(V)
    assert bits.shape == (1, 16)
    assert bits[0, 0] == 1 and bits[0, 1:8].sum() == 0
    assert bits[0, 15] == 1 and bits[0, 8:15].sum() == 0


def test_walsh_ut_trace_grid_single_set_vs_mixed(traces_q0_10k, traces_mixed_10k, std_spec):
    correct = STD_KEY[0]
    grid_q0 = sca.walsh_ut_trace_grid(traces_q0_10k, 0, ellp=1)
    assert not grid_q0[correct].any()
    # spot agreement with the scalar trace-mode transform
    w = sca.walsh_ut_from_traces(traces_q0_10k, 0, 2, 3, 1, 5, 0x31)
    assert grid_q0[0x31, 2, 3, 5] == w
    grid_mx = sca.walsh_ut_trace_grid(traces_mixed_10k, 0, ellp=1)
    assert grid_mx[correct].any()  # mixing removes the uniform zero signature
    peak = np.abs(grid_mx).reshape(256, -1).max(axis=1)
    assert peak[correct] < peak.max()


def test_walsh_ut_from_traces_with_repetitions(traces_q0_10k, std_spec):
    guess = std_spec.round_keys.khat[0][0][0]
    assert walsh_ut_from_traces(traces_q0_10k, 0, 0, 0, 1, 0, guess, reps=3) == 0
