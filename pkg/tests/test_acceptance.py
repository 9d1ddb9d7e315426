"""Exit criteria for the toolkit, one test per criterion.

Each test prints a PASS/FAIL line (also repeated in the terminal summary).
Tolerances are fixed here; nothing is calibrated after the fact.
"""

import itertools
import math
import time

import numpy as np
import pytest

from ddrs import analytics
from ddrs.bitio import BitReader
from ddrs.harness import (
    empirical_dict_size,
    figure1_curve,
    log_grid,
    run_trial,
)
from ddrs.schemes import AFLD, EDD, FLD, MFLD, VLD, _count_width, _rank_width, decode, decode_from, encode
from ddrs.source_model import SourceParams, generate_stream, trial_rng

TREND_DELTAS = (0.2, 0.1, 0.05, 0.02, 0.01)
TREND_A, TREND_B, TREND_L = 16, 4096, 256
TREND_TRIALS = 20
TREND_SEED = 2024


def _fastest(fn, repeats=20):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


# -- 1, 2: worked examples --------------------------------------------------------

def test_c01_golden_fld(criterion):
    s = "01101101"
    res, dt = _fastest(lambda: encode(s, FLD(2)))
    back = decode(res.bits, FLD(2))
    ok = res.bits.to01() == "0001000101110111000" and len(res.bits) == 19 and back == s and dt < 1e-3
    criterion(1, "golden FLD(2) bits", ok, f"{res.bits.to01()} in {dt * 1e6:.0f} us")


def test_c02_golden_vld(criterion):
    s = "01101101"
    res, dt = _fastest(lambda: encode(s, VLD(1)))
    back = decode(res.bits, VLD(1))
    ok = res.bits.to01() == "00010001011100111" and len(res.bits) == 17 and back == s and dt < 1e-3
    criterion(2, "golden VLD(1) bits", ok, f"{res.bits.to01()} in {dt * 1e6:.0f} us")


# -- 3, 12: round trip and prefix freeness -------------------------------------------

def _random_case(rng):
    """A random (stream, config) pair covering all five schemes.

    Half of the streams are uniform noise, half come from the source model
    so that repeats and near repeats actually occur.
    """
    kind = rng.integers(5)
    if kind == 0:
        cfg = FLD(int(rng.integers(1, 17)))
    elif kind == 1:
        ell = int(rng.integers(1, 17))
        cfg = MFLD(int(rng.integers(ell, 65)), ell)
    elif kind == 2:
        A = int(rng.integers(1, 9))
        B = A + int(rng.integers(1, 200))
        delta = float(rng.uniform(0.0, 0.3))
        gamma = float(rng.uniform(delta + 0.01, 0.49))
        cfg = AFLD(int(rng.integers(1, 65)), gamma, A, B, delta)
    elif kind == 3:
        cfg = EDD(int(rng.integers(1, 17)), float(rng.choice([0.125, 0.25])))
    else:
        cfg = VLD(int(rng.integers(1, 9)))
    if rng.random() < 0.5:
        n = int(rng.integers(1, 4097))
        s = "".join(map(str, rng.integers(0, 2, size=n)))
    else:
        L = int(rng.integers(4, 65))
        B = int(rng.integers(1, max(2, 4096 // L)))
        p = SourceParams.fixed(int(rng.integers(1, 5)), B, L, float(rng.choice([0.0, 0.01, 0.05])))
        s = generate_stream(p, rng).stream
    return s, cfg


def test_c03_round_trip_suite(criterion):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    failures = []
    seen = set()
    for i in range(10_000):
        s, cfg = _random_case(rng)
        seen.add(type(cfg).__name__)
        if decode(encode(s, cfg).bits, cfg) != s:
            failures.append((i, cfg))
    dt = time.perf_counter() - t0
    ok = not failures and seen == {"FLD", "MFLD", "AFLD", "EDD", "VLD"} and dt < 60
    criterion(3, "10^4 random round trips", ok, f"{len(failures)} failures, {dt:.1f} s")


def test_c12_prefix_free(criterion):
    rng = np.random.default_rng(12)
    bad = 0
    for _ in range(1000):
        s, cfg = _random_case(rng)
        enc = encode(s, cfg).bits.to01()
        junk = "".join(map(str, rng.integers(0, 2, size=64)))
        reader = BitReader(enc + junk)
        if decode_from(reader, cfg) != s or reader.cursor != len(enc):
            bad += 1
    criterion(12, "prefix-free under 64 appended bits", bad == 0, f"{bad}/1000 changed")


# -- 4: run-length-limited counts ---------------------------------------------------

def _brute_rll(k, n):
    run = "0" * k
    return sum(1 for bits in itertools.product("01", repeat=n) if run not in "".join(bits))


def test_c04_rll(criterion):
    t0 = time.perf_counter()
    brute_ok = all(
        analytics.rll_count(k, n) == _brute_rll(k, n) for k in range(2, 6) for n in range(0, 21)
    )
    bracket_ok = True
    for k in range(2, 9):
        for n in range(0, 65):
            lo, hi = analytics.rll_bounds(k, n)
            c = analytics.rll_count(k, n)
            bracket_ok &= lo <= c <= hi
    cumulative_ok = all(
        sum(analytics.rll_count(k, n) for n in range(0, 2 ** k + 1)) >= analytics.rll_cumulative_lower(k)
        for k in (2, 3, 4)
    )
    dt = time.perf_counter() - t0
    ok = brute_ok and bracket_ok and cumulative_ok and dt < 5
    criterion(4, "RLL counts: brute force, bounds, cumulative", ok,
              f"brute={brute_ok} bounds={bracket_ok} cumulative={cumulative_ok} {dt:.1f} s")


# -- 5, 6: the capped sum S_delta ------------------------------------------------------

def _unique_descendant_counts(ell, m, delta, resamples, rng):
    """Distinct strings among m independent delta-edits of one uniform ell-string.

    XOR with the root is a bijection, so the count depends only on the flip
    patterns; their multiplicities are multinomial over all 2^ell patterns.
    """
    weights = np.array([bin(w).count("1") for w in range(2 ** ell)])
    probs = delta ** weights * (1 - delta) ** (ell - weights)
    counts = rng.multinomial(m, probs / probs.sum(), size=resamples)
    return (counts > 0).sum(axis=1)


def test_c05_s_delta_bracket(criterion):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    misses = []
    for ell, m, delta in itertools.product((4, 8, 12), (16, 256, 4096), (0.05, 0.1, 0.25)):
        uniq = _unique_descendant_counts(ell, m, delta, 2000, rng)
        mean = uniq.mean()
        se = uniq.std(ddof=1) / math.sqrt(len(uniq))
        s = analytics.s_delta(ell, m, delta)
        if not s / 2 - 3 * se <= mean <= s + 3 * se:
            misses.append((ell, m, delta, mean, s))
    dt = time.perf_counter() - t0
    criterion(5, "Monte Carlo unique descendants within [S/2, S]", not misses and dt < 120,
              f"{len(misses)} of 27 cells outside, {dt:.1f} s")


def test_c06_s_delta_closed_cases(criterion):
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        delta = float(rng.uniform(0.01, 0.49))
        m = float(2.0 ** rng.uniform(0, 30))
        ell = math.ceil(math.log2(m) / -math.log2(1 - delta)) + int(rng.integers(0, 50))
        worst = max(worst, abs(analytics.s_delta(ell, m, delta) / m - 1))
    for _ in range(100):
        delta = float(rng.uniform(0.01, 0.49))
        m = float(2.0 ** rng.uniform(0, 60))
        ell = int(rng.integers(0, math.floor(math.log2(m) / -math.log2(delta)) + 1))
        worst = max(worst, abs(analytics.s_delta(ell, m, delta) / 2.0 ** ell - 1))
    dt = time.perf_counter() - t0
    criterion(6, "S_delta exactly m / exactly 2^ell in closed regimes", worst <= 1e-9 and dt < 1,
              f"max rel err {worst:.2e}, {dt:.2f} s")


# -- 7: dictionary-size sandwich ---------------------------------------------------------

def test_c07_dictionary_sandwich(criterion):
    t0 = time.perf_counter()
    notes, ok = [], True
    for ell, delta in itertools.product((4, 8, 16), (0.05, 0.1)):
        params = SourceParams.fixed(4, 256, 32, delta)
        est = empirical_dict_size(params, ell, 50, master_seed=7)
        lower, upper = analytics.expected_dict_bounds_fld(params, ell)
        cell_ok = est.mean_full <= upper and est.mean_half >= lower - 3 * est.stderr_half
        ok &= cell_ok
        notes.append(f"l={ell},d={delta}: {lower:.0f}<={est.mean_half:.1f}, {est.mean_full:.1f}<={upper:.0f}")
    dt = time.perf_counter() - t0
    criterion(7, "empirical dictionary sizes inside analytic bounds", ok and dt < 120,
              f"{dt:.1f} s; " + "; ".join(notes))


# -- 8: edit-distance mechanism ----------------------------------------------------------

def test_c08_edd_mechanism(criterion):
    A, B, L = 8, 512, 128
    t0 = time.perf_counter()
    ok = True
    qualifying = trials = 0
    detail = []
    for delta in (0.02, 0.05):
        beta = min(1.5 * delta, 0.25)
        cfg = EDD(L, beta)
        params = SourceParams.fixed(A, B, L, delta)
        budget = analytics.binary_entropy(2 * beta) * L + 1 + cfg.radius.bit_length()
        worst_record = 0
        for i in range(20):
            inst = generate_stream(params, trial_rng(8, i))
            res = encode(inst.stream, cfg, trace=True)
            assert decode(res.bits, cfg) == inst.stream
            flips = inst.block_flips()
            far = sum(f > beta * L for f in flips)
            trials += 1
            if far == 0:
                qualifying += 1
                ok &= res.stats.dict_size_final <= A
            # same covering argument, non-vacuous: one literal per ancestor plus one per far block
            ok &= res.stats.dict_size_final <= A + far
            matched = [e for e in res.trace if not e.literal]
            if matched:
                per_chunk = max(_count_width(cfg.radius) + _rank_width(L, e.mismatches) for e in matched)
                worst_record = max(worst_record, per_chunk)
                ok &= per_chunk <= budget
        detail.append(f"d={delta}: max record {worst_record} <= {budget:.1f}")
    dt = time.perf_counter() - t0
    detail.append(f"{qualifying}/{trials} trials had every block within beta*L")
    criterion(8, "EDD dictionary <= A and mismatch budget", ok and dt < 60, f"{dt:.1f} s; " + "; ".join(detail))


# -- 9, 10: trends over the edit probability ------------------------------------------------

@pytest.fixture(scope="module")
def trend_runs():
    """Mean encoded/input bits per (scheme, delta) on the shared grid cell."""
    out = {}
    t0 = time.perf_counter()
    for delta in TREND_DELTAS:
        params = SourceParams.fixed(TREND_A, TREND_B, TREND_L, delta)
        gamma = delta + 0.5 * (0.5 - delta)
        configs = {"fld": FLD(TREND_L), "afld": AFLD(TREND_L, gamma, TREND_A, TREND_B, delta)}
        configs.update({f"vld{M}": VLD(M) for M in range(1, 11)})
        for name, cfg in configs.items():
            recs = [run_trial(params, cfg, TREND_SEED, i) for i in range(TREND_TRIALS)]
            out[name, delta] = sum(r.input_bits for r in recs) / sum(r.encoded_bits for r in recs)
    out["elapsed"] = time.perf_counter() - t0
    return out


@pytest.mark.slow
def test_c09_fixed_length_trends(criterion, trend_runs):
    fld = [trend_runs["fld", d] for d in TREND_DELTAS]
    afld = [trend_runs["afld", d] for d in TREND_DELTAS]
    fld_ok = max(fld) / min(fld) < 2
    afld_gain = trend_runs["afld", 0.01] / trend_runs["afld", 0.2]
    ok = fld_ok and afld_gain >= 3
    criterion(9, "FLD flat, AFLD gains >= 3x as delta falls", ok,
              f"FLD ratios {[round(x, 3) for x in fld]}; AFLD ratios {[round(x, 3) for x in afld]} "
              f"(gain {afld_gain:.2f}x)")


def _unimodal_violations(seq):
    peak = int(np.argmax(seq))
    up = sum(seq[i] > seq[i + 1] for i in range(peak))
    down = sum(seq[i] < seq[i + 1] for i in range(peak, len(seq) - 1))
    return up + down


@pytest.mark.slow
def test_c10_marker_length_trends(criterion, trend_runs):
    curve = [trend_runs[f"vld{M}", 0.02] for M in range(1, 11)]
    inversions = _unimodal_violations(curve)
    best = [max(trend_runs[f"vld{M}", d] for M in range(1, 11)) for d in TREND_DELTAS]
    rising = sum(best[i + 1] > best[i] for i in range(len(best) - 1))
    ok = inversions <= 1 and rising >= len(best) - 2 and trend_runs["elapsed"] < 1200
    criterion(10, "VLD ratio unimodal in M, best-M ratio rises as delta falls", ok,
              f"ratio(M) at 0.02 {[round(x, 3) for x in curve]} ({inversions} inversions); "
              f"best-M ratios {[round(x, 3) for x in best]} ({rising}/{len(best) - 1} rising); "
              f"grid {trend_runs['elapsed']:.0f} s")


# -- 11: figure1 curve -----------------------------------------------------------------------------

def test_c11_figure1(criterion):
    regime = analytics.RegimeParams(0.5, 0.5)
    t0 = time.perf_counter()
    deltas = log_grid(1e-5, 1e-1, 50)
    pts = figure1_curve(regime, deltas)
    above = all(p.bound_per_bit > p.entropy_per_bit for p in pts)
    # deltas ascend, so the bound must ascend too (i.e. fall as delta -> 1e-5)
    falling = all(a.bound_per_bit < b.bound_per_bit for a, b in zip(pts, pts[1:]))
    worst = 0.0
    for d in deltas:
        h = 4 * analytics.binary_entropy(d) * (1 + regime.k1) / (3 * regime.k2)
        x = -min(math.exp(-1), h)
        w = analytics.lambert_w_m1(x)
        worst = max(worst, abs(w * math.exp(w) - x))
    dt = time.perf_counter() - t0
    ok = above and falling and worst <= 1e-10 and pts[0].bound_per_bit < pts[-1].bound_per_bit and dt < 1
    criterion(11, "optimized marker bound above H(delta), falling to 0", ok,
              f"bound {pts[0].bound_per_bit:.4f} at 1e-5 .. {pts[-1].bound_per_bit:.3f} at 1e-1; "
              f"max |w e^w - x| {worst:.1e}")
