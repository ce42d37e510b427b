"""Command-line front end: table generation, encryption, trace campaigns,
analyses, verification and benchmarking, all reproducible from explicit seeds.

Exit codes: 0 success (and declared expectations met), 1 a declared
expectation was violated, 2 usage error, 3 I/O or file-format error."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import cipher, sca, tablegen
from .cipher import SelectorPolicy
from .gfcore import RoundKeys

PASS_EXIT = 0
FAIL_EXIT = 1
USAGE_EXIT = 2
IO_EXIT = 3


def _parse_key(text: str) -> bytes:
    try:
        key = bytes.fromhex(text)
    except ValueError as exc:
        raise ValueError(f"key is not valid hex: {exc}") from None
    if len(key) != 16:
        raise ValueError("key must be 32 hex digits")
    return key


def _parse_window(text: str | None):
    if text is None:
        return None
    if text == "round1":
        return cipher.round_sample_slice(1)
    if text == "round1-ut":
        return cipher.ut_output_indices(1)
    if text == "round1-col0":
        return slice(0, 40)
    off, _, length = text.partition(":")
    try:
        return (int(off), int(length))
    except ValueError:
        raise ValueError(f"window must be OFF:LEN or a named window, got {text!r}") from None


def _key_check(key: bytes) -> str:
    return hashlib.sha256(key).hexdigest()[:8]


def _load_pair(tables_dir: str) -> tablegen.TableSetPair:
    d = Path(tables_dir)
    with open(d / "q0.tbl", "rb") as fh:
        q0 = tablegen.deserialize_tableset(fh.read())
    with open(d / "q1.tbl", "rb") as fh:
        q1 = tablegen.deserialize_tableset(fh.read())
    return tablegen.TableSetPair(q0=q0, q1=q1)


def _load_spec(path: str) -> tablegen.EncodingSpec:
    with open(path, "rb") as fh:
        return tablegen.deserialize_spec(fh.read())


def _emit(summary: dict, rows: list, header: list, args) -> None:
    if getattr(args, "out", None):
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        with open(str(prefix) + ".csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        with open(str(prefix) + ".json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if getattr(args, "format", "json") == "csv":
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
    else:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


# --- commands -------------------------------------------------------------------

def cmd_gen(args) -> int:
    key = _parse_key(args.key)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pair, spec = tablegen.build_table_pair(key, args.seed, args.xor_boundary)
    (out_dir / "q0.tbl").write_bytes(tablegen.serialize_tableset(pair.q0))
    (out_dir / "q1.tbl").write_bytes(tablegen.serialize_tableset(pair.q1))
    (out_dir / "enc.spec").write_bytes(tablegen.serialize_spec(spec))
    report = tablegen.size_and_lookup_report(pair.q0)
    _, _, measured = tablegen.encrypt_with_tables(pair.q0, bytes(16))
    summary = {
        "command": "gen",
        "seed": args.seed,
        "key_check": _key_check(key),
        "xor_boundary": args.xor_boundary,
        "files": [str(out_dir / n) for n in ("q0.tbl", "q1.tbl", "enc.spec")],
        "measured_lookups": measured,
        **report,
    }
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return PASS_EXIT


def cmd_encrypt(args) -> int:
    pair = _load_pair(args.tables)
    pt = bytes.fromhex(args.pt)
    if len(pt) != 16:
        raise ValueError("plaintext must be 32 hex digits")
    policy = SelectorPolicy.parse(args.policy)
    rng = random.Random(args.seed)
    result = cipher.encrypt(pt, pair, policy, rng)
    sys.stdout.write(result.ciphertext.hex() + "\n")
    return PASS_EXIT


def cmd_trace(args) -> int:
    pair = _load_pair(args.tables)
    policy = SelectorPolicy.parse(args.policy)
    rng = random.Random(args.seed)
    if args.source == "random":
        pts = cipher.random_plaintexts(args.count, rng)
    elif args.source == "grid":
        pts = cipher.grid_plaintexts()
    elif args.source.startswith("fixed:"):
        pts = cipher.fixed_plaintexts(bytes.fromhex(args.source.split(":", 1)[1]), args.count)
    elif args.source.startswith("file:"):
        pts = cipher.plaintexts_from_file(args.source.split(":", 1)[1], args.count)
    else:
        raise ValueError(f"unknown source {args.source!r}")
    ts = cipher.collect_traces(pair, policy, pts, rng, metadata={"seed": args.seed})
    cipher.save_traces(ts, args.out)
    summary = {
        "command": "trace",
        "seed": args.seed,
        "policy": policy.describe(),
        "source": args.source,
        "count": len(ts),
        "sample_count": cipher.SAMPLE_COUNT,
        "out": args.out,
    }
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return PASS_EXIT


def cmd_verify(args) -> int:
    pair = _load_pair(args.tables)
    spec = _load_spec(args.spec)
    report0 = tablegen.verify_tableset(pair.q0, spec)
    pts = np.frombuffer(random.Random(1).randbytes(64 * 16), dtype=np.uint8).reshape(64, 16)
    ct0, _ = tablegen.encrypt_batch_with_tables(pair.q0, pts)
    ct1, _ = tablegen.encrypt_batch_with_tables(pair.q1, pts)
    q1_consistent = bool((ct0 == ct1).all())
    summary = {
        "command": "verify",
        "key_check": _key_check(spec.key),
        "checks": report0.checks,
        "q1_matches_q0": q1_consistent,
        "failures": report0.failures[:16],
        "pass": report0.passed and q1_consistent,
    }
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return PASS_EXIT if summary["pass"] else FAIL_EXIT


def cmd_bench(args) -> int:
    pair = _load_pair(args.tables)
    ts = pair.q0 if args.policy != "q1" else pair.q1
    pts = [random.Random(n).randbytes(16) for n in range(256)]
    tablegen.encrypt_with_tables(ts, pts[0])  # warm up
    start = time.perf_counter()
    for n in range(args.iterations):
        tablegen.encrypt_with_tables(ts, pts[n % 256])
    elapsed = time.perf_counter() - start
    per_block_us = elapsed / args.iterations * 1e6
    summary = {
        "command": "bench",
        "iterations": args.iterations,
        "mean_block_us": round(per_block_us, 3),
        "lookups_per_second": round(tablegen.TOTAL_LOOKUPS * args.iterations / elapsed),
        "note": "published native-code reference point is 19 us per block; interpreter timings differ",
    }
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return PASS_EXIT


def _analyze_walsh_ut(args) -> int:
    if args.traces:
        return _analyze_walsh_ut_traces(args)
    pair = _load_pair(args.tables)
    spec = _load_spec(args.spec)
    grid = tablegen.walsh_ut_grid_static(pair.q0, spec)
    rows = []
    nz = np.argwhere(grid != 0)
    for i, j, k, bit, lp, ip in nz[:4096]:
        rows.append([int(i) + 1, int(j) + 1, int(k) + 1, int(bit) + 1, int(lp) + 1, int(ip) + 1,
                     int(grid[i, j, k, bit, lp, ip])])
    all_zero = not grid.any()
    summary = {
        "command": "analyze", "kind": "walsh-ut", "mode": "static",
        "positions": 16, "max_abs": int(np.abs(grid).max()),
        "all_zero_correct_key": all_zero, "pass": all_zero,
    }
    _emit(summary, rows, ["i", "j", "k", "bit", "ellp", "iprime", "walsh"], args)
    return PASS_EXIT if all_zero else FAIL_EXIT


def _analyze_walsh_ut_traces(args) -> int:
    traces = cipher.load_traces(args.traces)
    m = 0 if args.pt_index == "all" else int(args.pt_index)
    grid = sca.walsh_ut_trace_grid(traces, m, args.ell)
    peak = np.abs(grid).reshape(256, -1).max(axis=1)
    rows = [[g, round(float(peak[g]), 2)] for g in range(256)]
    summary = {
        "command": "analyze", "kind": "walsh-ut", "mode": "traces",
        "pt_index": m, "ell": args.ell,
        "global_max_abs": round(float(peak.max()), 2),
    }
    if args.key:
        key = _parse_key(args.key)
        summary["correct_guess"] = key[m]
        summary["correct_max_abs"] = round(float(peak[key[m]]), 2)
        summary["correct_all_zero"] = bool(peak[key[m]] == 0)
    _emit(summary, rows, ["guess", "max_abs_walsh"], args)
    return PASS_EXIT


def _analyze_walsh_ro(args) -> int:
    traces = cipher.load_traces(args.traces)
    key = _parse_key(args.key)
    rk = RoundKeys.from_key(key)
    known = rk.khat[0][0][0]
    correct = rk.khat[0][1][0]
    grid = sca.walsh_round_output_all(traces, known)
    rows = [[g, i + 1, ip + 1, int(grid[g, i, ip])]
            for g in range(256) for i in range(8) for ip in range(8) if grid[g, i, ip]]
    summary = {
        "command": "analyze", "kind": "walsh-ro",
        "known_k0": int(known), "correct_guess": int(correct),
        "correct_max": int(grid[correct].max()),
        "global_min": int(grid.min()), "global_max": int(grid.max()),
        "correct_all_zero": bool(not grid[correct].any()),
    }
    _emit(summary, rows, ["guess", "i", "iprime", "walsh"], args)
    return PASS_EXIT


def _attacked_pt_indices(args) -> list:
    if args.pt_index == "all":
        return list(range(16))
    return [int(args.pt_index)]


def _analyze_cpa_dca(args, kind: str) -> int:
    traces = cipher.load_traces(args.traces)
    key = _parse_key(args.key)
    window = _parse_window(args.window)
    rows = []
    summary_bits = {}
    for m in _attacked_pt_indices(args):
        model = sca.SboxHypothesis(ell=args.ell, pt_index=m)
        report = sca.dca_rank(traces, model, correct_guess=key[m], window=window)
        for br in report.bits:
            summary_bits[f"pt{m}_bit{br.bit + 1}"] = {
                "correct_rank": br.correct_rank,
                "correct_score": round(br.correct_score, 6),
                "highest_score": round(float(br.scores.max()), 6),
            }
            if kind == "dca":
                for g in range(256):
                    rows.append([m, br.bit + 1, g, round(float(br.scores[g]), 6), int(br.ranks[g])])
            else:
                g = int(np.argmax(br.scores))
                rows.append([m, br.bit + 1, g, round(float(br.scores[g]), 6),
                             round(br.correct_score, 6)])
    summary = {"command": "analyze", "kind": kind, "ell": args.ell,
               "window": args.window, "attacks": summary_bits}
    header = (["pt_index", "bit", "guess", "score", "rank"] if kind == "dca"
              else ["pt_index", "bit", "top_guess", "top_score", "correct_score"])
    _emit(summary, rows, header, args)
    return PASS_EXIT


def _analyze_collision(args, kind: str) -> int:
    traces = cipher.load_traces(args.traces)
    key = _parse_key(args.key)
    rk = RoundKeys.from_key(key)
    known = rk.khat[0][0][0]
    correct = int(rk.khat[0][1][0])
    coll, sse = sca.collision_and_sse_scores(traces, known)
    rows = [[g, int(coll[g]), round(float(sse[g]), 3)] for g in range(256)]
    summary = {
        "command": "analyze", "kind": kind,
        "correct_guess": correct,
        "collision_argmax": int(np.argmax(coll)),
        "sse_argmin": int(np.argmin(sse)),
        "correct_is_collision_argmax": bool(int(np.argmax(coll)) == correct),
        "correct_is_sse_argmin": bool(int(np.argmin(sse)) == correct),
    }
    _emit(summary, rows, ["guess", "collision", "sse"], args)
    return PASS_EXIT


def _analyze_mia(args) -> int:
    traces = cipher.load_traces(args.traces)
    key = _parse_key(args.key)
    window = _parse_window(args.window) if args.window else slice(0, 40)
    rk = RoundKeys.from_key(key)
    if args.model == "sbox":
        m = int(args.pt_index) if args.pt_index != "all" else 0
        model = sca.SboxHypothesis(ell=1, pt_index=m)
        correct = key[m]
    else:
        model = sca.RoundOutputHypothesis(
            column=0, out_byte=0, target_row=1,
            known_keys={0: rk.khat[0][0][0], 2: rk.khat[0][2][0], 3: rk.khat[0][3][0]},
        )
        correct = int(rk.khat[0][1][0])
    mi = sca.mia_max(traces, model, window=window)
    rows = [[g, b + 1, round(float(mi[g, b]), 6)] for g in range(256) for b in range(8)]
    summary = {
        "command": "analyze", "kind": "mia", "model": args.model,
        "correct_guess": int(correct),
        "correct_max_mi": round(float(mi[correct].max()), 6),
        "global_max_mi": round(float(mi.max()), 6),
        "correct_is_global_max": bool(mi[correct].max() >= mi.max()),
    }
    _emit(summary, rows, ["guess", "bit", "max_mi"], args)
    return PASS_EXIT


def _analyze_tvla(args) -> int:
    fixed = cipher.load_traces(args.fixed)
    rand = cipher.load_traces(args.random)
    window = _parse_window(args.window)
    result = sca.tvla(fixed, rand, window=window)
    rows = [[s, round(float(t), 4)] for s, t in enumerate(result.t)]
    summary = {
        "command": "analyze", "kind": "tvla",
        "threshold": 4.5,
        "max_abs_t": round(result.max_abs_t, 4),
        "degenerate_samples": int(result.degenerate.sum()),
        "pass": result.passed(4.5),
    }
    _emit(summary, rows, ["sample", "t"], args)
    return PASS_EXIT if summary["pass"] else FAIL_EXIT


def _analyze_baseline(args) -> int:
    demo = sca.baseline_unbalanced_demo(args.seed)
    grid = demo["grid"]
    rows = [[i + 1, lp + 1, ip + 1, int(grid[i, lp, ip])]
            for i in range(8) for lp in range(3) for ip in range(8) if grid[i, lp, ip]]
    summary = {
        "command": "analyze", "kind": "baseline", "seed": args.seed,
        "leak_value": demo["leak_value"],
        "leak_coords": demo["leak_coords"],
        "expected_leak": list(demo["expected_leak"]),
        "wrong_key_mean_abs_walsh": round(demo["wrong_mean"], 3),
        "wrong_key_max_abs_walsh": demo["wrong_max"],
        "wrong_key_sd": round(demo["wrong_sd"], 3),
    }
    _emit(summary, rows, ["i", "ellp", "iprime", "walsh"], args)
    return PASS_EXIT


def cmd_analyze(args) -> int:
    kind = args.kind
    if kind == "walsh-ut":
        return _analyze_walsh_ut(args)
    if kind == "walsh-ro":
        return _analyze_walsh_ro(args)
    if kind in ("cpa", "dca"):
        return _analyze_cpa_dca(args, kind)
    if kind in ("collision", "cluster"):
        return _analyze_collision(args, kind)
    if kind == "mia":
        return _analyze_mia(args)
    if kind == "tvla":
        return _analyze_tvla(args)
    if kind == "baseline":
        return _analyze_baseline(args)
    raise ValueError(f"unknown analysis kind {kind!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="balaes", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a table-set pair and its encoding spec")
    g.add_argument("--key", required=True, help="AES-128 key, 32 hex digits")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--xor-boundary", choices=("balanced", "identity"), default="balanced")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("encrypt", help="encrypt one block through the table network")
    e.add_argument("--tables", required=True, help="directory holding q0.tbl and q1.tbl")
    e.add_argument("--pt", required=True, help="plaintext, 32 hex digits")
    e.add_argument("--policy", default="q0")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_encrypt)

    t = sub.add_parser("trace", help="run a trace-collection campaign")
    t.add_argument("--tables", required=True)
    t.add_argument("--source", default="random", help="random | fixed:HEX | grid | file:PATH")
    t.add_argument("--count", type=int, default=10000)
    t.add_argument("--policy", default="q0")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_trace)

    a = sub.add_parser("analyze", help="run one statistical analysis")
    a.add_argument("--kind", required=True,
                   choices=("walsh-ut", "walsh-ro", "cpa", "dca", "collision", "cluster",
                            "mia", "tvla", "baseline"))
    a.add_argument("--traces")
    a.add_argument("--fixed", help="fixed-plaintext trace file (tvla)")
    a.add_argument("--random", help="random-plaintext trace file (tvla)")
    a.add_argument("--tables")
    a.add_argument("--spec")
    a.add_argument("--key", help="evaluation key, 32 hex digits")
    a.add_argument("--pt-index", default="all", help="attacked plaintext byte, 0-15 or 'all'")
    a.add_argument("--ell", type=int, default=1, choices=(1, 2, 3))
    a.add_argument("--model", default="sbox", choices=("sbox", "round-output"))
    a.add_argument("--window", help="OFF:LEN or round1 | round1-ut | round1-col0")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--format", default="json", choices=("json", "csv"))
    a.add_argument("--out", help="report file prefix (writes .csv and .json)")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="re-verify a generated table set against its spec")
    v.add_argument("--tables", required=True)
    v.add_argument("--spec", required=True)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time single-block encryption")
    b.add_argument("--tables", required=True)
    b.add_argument("--iterations", type=int, default=1000)
    b.add_argument("--policy", default="q0")
    b.set_defaults(func=cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (tablegen.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_EXIT
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
