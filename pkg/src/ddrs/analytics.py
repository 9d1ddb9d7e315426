"""Closed-form quantities and bound evaluators for the substitution-edit source.

All logarithms are base 2.  Bounds whose statements carry o(1) slack are
evaluated at the limit (the slack is taken as 0, or the factor as 1) and the
returned :class:`BoundReport` is flagged ``asymptotic=True``: such values are
reference lines for finite experiments, not certified envelopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import UnsupportedConfigError

__all__ = [
    "RegimeParams",
    "BoundReport",
    "binary_entropy",
    "cross_entropy",
    "kl_divergence",
    "log2_s_delta",
    "s_delta",
    "s_delta_case_bounds",
    "rll_count",
    "rll_bounds",
    "rll_cumulative_lower",
    "expected_dict_bounds_fld",
    "afld_chunk_length",
    "lambert_w_m1",
    "vld_bound_coefficient",
    "vld_optimal_c",
    "ratio_bounds",
]

_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class RegimeParams:
    """Growth exponents: L = Theta(B**k1) and A <= B**(1 - k2)."""

    k1: float
    k2: float

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0 < self.k2 < 1:
            raise ValueError(f"k2 must lie in (0, 1), got {self.k2}")

    @classmethod
    def from_sizes(cls, A: int, B: int, L: float) -> "RegimeParams":
        """Exponents implied by concrete sizes (B > 1, 1 < A < B)."""
        lb = math.log(B)
        return cls(k1=math.log(L) / lb, k2=1.0 - math.log(A) / lb)


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    parameters: dict = field(default_factory=dict)
    # "lower", "upper", "exact" or "value"
    kind: str = "value"
    asymptotic: bool = False


def _pow2(x: float) -> float:
    try:
        return math.ldexp(1.0, int(x)) if float(x).is_integer() else 2.0 ** x
    except OverflowError:
        return math.inf


def _powf(base: float, n: int) -> float:
    try:
        return base ** n
    except OverflowError:
        return math.inf


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def cross_entropy(p: float, q: float) -> float:
    """H(p, q) = p log(1/q) + (1-p) log(1/(1-q)).

    Unbounded when q is 0 or 1 and p puts mass on the impossible outcome;
    ``math.inf`` is returned in that case.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    total = 0.0
    for weight, prob in ((p, q), (1.0 - p, 1.0 - q)):
        if weight == 0.0:
            continue
        if prob == 0.0:
            return math.inf
        total -= weight * math.log2(prob)
    return total


def kl_divergence(p: float, q: float) -> float:
    """D(p || q) for Bernoulli laws; never negative."""
    ce = cross_entropy(p, q)
    if math.isinf(ce):
        return ce
    return max(0.0, ce - binary_entropy(p))


def _log2_binom(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def log2_s_delta(ell: int, m: float, delta: float) -> float:
    """log2 of S_delta(ell, m), evaluated term by term in log space."""
    if ell < 0:
        raise ValueError(f"ell must be non-negative, got {ell}")
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    log_m = math.log2(m)
    log_d = math.log2(delta) if delta > 0 else -math.inf
    log_1d = math.log2(1.0 - delta)
    logs = []
    for t in range(ell + 1):
        # the cap min(1, .) is applied to the per-string probability before
        # multiplying by binom(ell, t)
        inner = log_m + (t * log_d if t else 0.0) + (ell - t) * log_1d
        logs.append(_log2_binom(ell, t) + min(0.0, inner))
    top = max(logs)
    return top + math.log2(math.fsum(2.0 ** (x - top) for x in logs if x > -math.inf))


_LINEAR_MAX_ELL = 1000  # binom(1000, 500) ~ 2.7e299 still fits a double


def s_delta(ell: int, m: float, delta: float) -> float:
    """S_delta(ell, m) = sum_t binom(ell, t) * min(1, m delta^t (1-delta)^(ell-t)).

    Summed directly while the binomials fit in a double, in log space beyond.
    """
    if ell < 0:
        raise ValueError(f"ell must be non-negative, got {ell}")
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    keep = 1.0 - delta
    # no term capped: the probabilities sum to 1, so S = m exactly;
    # every term capped: S counts all 2^ell strings
    if m * max(delta, keep) ** ell <= 1.0:
        return float(m)
    if m * min(delta, keep) ** ell >= 1.0:
        return _pow2(ell)
    if ell > _LINEAR_MAX_ELL:
        return _pow2(log2_s_delta(ell, m, delta))
    return math.fsum(
        math.comb(ell, t) * min(1.0, m * delta ** t * keep ** (ell - t)) for t in range(ell + 1)
    )


def s_delta_case_bounds(ell: int, m: float, delta: float, delta_prime: float | None = None):
    """Every closed-form bound on S_delta(ell, m) whose precondition holds.

    Returns a list of :class:`BoundReport` with ``kind`` in
    {"lower", "upper", "exact"}.  The tilted bound is only included when
    ``delta_prime`` (delta < delta_prime < 1/2) is given.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    params = {"ell": ell, "m": m, "delta": delta}
    log_m = math.log2(m)
    out = []
    if ell * binary_entropy(delta) >= log_m:
        out.append(BoundReport("large_ell_lower", m / 4.0, params, "lower"))
    if ell * -math.log2(1.0 - delta) >= log_m:
        out.append(BoundReport("huge_ell_exact", float(m), params, "exact"))
    if ell * cross_entropy(0.5, delta) <= log_m:
        out.append(BoundReport("small_ell_lower", _pow2(ell - 1), params, "lower"))
    if ell * -math.log2(delta) <= log_m:
        out.append(BoundReport("tiny_ell_exact", _pow2(ell), params, "exact"))
    if delta_prime is not None:
        if not delta < delta_prime < 0.5:
            raise ValueError(f"delta_prime must lie in (delta, 1/2), got {delta_prime}")
        value = _pow2(ell * binary_entropy(delta_prime)) + m * _pow2(
            -ell * kl_divergence(delta_prime, delta)
        )
        out.append(
            BoundReport("tilted_upper", value, {**params, "delta_prime": delta_prime}, "upper")
        )
    out.append(BoundReport("trivial_upper", min(_pow2(ell), float(m)), params, "upper"))
    return out


def rll_count(k: int, n: int) -> int:
    """Exact number of length-n binary strings without a run of k zeros."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n < k:
        return 1 << n
    window = [1 << i for i in range(k)]
    total = sum(window)
    for _ in range(k, n + 1):
        # R(N) = R(N-1) + ... + R(N-k); ``total`` holds that running sum
        nxt = total
        total += nxt - window[0]
        window.append(nxt)
        del window[0]
    return window[-1]


def rll_bounds(k: int, n: int) -> tuple[float, float]:
    """(2 - 2^-(k-2))^n <= |R_k^n| <= 2 (2 - 2^-k)^n."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    lower = _powf(2.0 - 2.0 ** -(k - 2), n)
    upper = 2.0 * _powf(2.0 - 2.0 ** -k, n)
    return lower, upper


def rll_cumulative_lower(k: int) -> float:
    """Lower bound 2^(2^k - 2) on the number of k-RLL strings of length <= 2^k."""
    return _pow2((1 << k) - 2)


def _degenerate_length(params) -> int:
    law = params.length_law
    if law.kind != "degenerate":
        raise UnsupportedConfigError(
            f"fixed-length dictionary bounds need equal symbol lengths, got a {law.kind} law"
        )
    return int(law.mean)


def expected_dict_bounds_fld(params, ell: int) -> tuple[float, float]:
    """Dictionary-size bounds for two-stage fixed-length chunking with D = L.

    ``upper`` bounds the expected final dictionary size given every symbol has
    at most 3B/(2A) descendants.  ``lower`` bounds the dictionary reached after
    the first ceil(B/2) blocks given every symbol has at least B/(4A)
    descendants there; no matching lower bound exists for the full stream.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    L = _degenerate_length(params)
    A, B, delta = params.A, params.B, params.delta
    C = L // ell
    cap = _pow2(ell)
    upper = min(cap, A * C * s_delta(ell, 3 * B / (2 * A), delta)) + B
    lower = 0.5 * min(cap, 0.5 * A * C * s_delta(ell, B / (4 * A), delta))
    return lower, upper


def afld_chunk_length(B: int, A: int, gamma: float, delta: float, D: int) -> int:
    """ceil(log(B/A) / H(gamma, delta)), or D when that is smaller."""
    if not B > A >= 1:
        raise ValueError(f"need B > A >= 1, got A={A}, B={B}")
    if not 0.0 <= delta < gamma < 0.5:
        raise ValueError(f"need delta < gamma < 1/2, got delta={delta}, gamma={gamma}")
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    ell = math.ceil(math.log2(B / A) / cross_entropy(gamma, delta))
    return min(max(ell, 1), D)


def lambert_w_m1(x: float) -> float:
    """Lower real branch W_{-1}(x) for -1/e <= x < 0.

    Bisection on w*e^w over a bracket in (-inf, -1], where that map is
    strictly decreasing, followed by a guarded Newton polish.
    """
    if x == -_INV_E or (x < 0 and abs(x + _INV_E) <= 1e-17):
        return -1.0
    if not -_INV_E < x < 0.0:
        raise ValueError(f"W_-1 is defined on [-1/e, 0), got {x}")
    lo = -2.0
    while lo * math.exp(lo) < x:
        lo *= 2.0
    hi = -1.0
    # invariant: lo*e^lo >= x >= hi*e^hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid * math.exp(mid) >= x:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    err = abs(w * math.exp(w) - x)
    deriv = math.exp(w) * (w + 1.0)
    if deriv != 0.0:
        w2 = w - (w * math.exp(w) - x) / deriv
        if w2 <= -1.0 and abs(w2 * math.exp(w2) - x) < err:
            w = w2
    return w


def vld_bound_coefficient(B, A, gamma, delta, M: int, regime: RegimeParams) -> BoundReport:
    """Per-bit upper bound on the expected marker-chunked encoding length.

    12 e^{-c_M} (c_M + 1) + 4 H(gamma, delta) (1 + k1) / k2 * c_M with
    c_M = log(B/A) / (H(gamma, delta) 2^(M+1)).
    """
    if not 0.0 <= delta < gamma < 0.5:
        raise ValueError(f"need delta < gamma < 1/2, got delta={delta}, gamma={gamma}")
    if not B > A >= 1:
        raise ValueError(f"need B > A >= 1, got A={A}, B={B}")
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    hgd = cross_entropy(gamma, delta)
    c_m = math.log2(B / A) / (hgd * 2.0 ** (M + 1))
    value = 12.0 * math.exp(-c_m) * (c_m + 1.0) + 4.0 * hgd * (1.0 + regime.k1) / regime.k2 * c_m
    return BoundReport(
        "vld_coefficient",
        value,
        {"B": B, "A": A, "gamma": gamma, "delta": delta, "M": M,
         "k1": regime.k1, "k2": regime.k2, "c_M": c_m},
        kind="upper",
        asymptotic=True,
    )


def vld_optimal_c(delta: float, regime: RegimeParams) -> float:
    """Minimizer c = -W_{-1}(-min(1/e, h)) with h = 4 H(delta) (1 + k1) / (3 k2)."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    h = 4.0 * binary_entropy(delta) * (1.0 + regime.k1) / (3.0 * regime.k2)
    if h >= _INV_E:
        return 1.0
    return -lambert_w_m1(-h)


def ratio_bounds(scheme: str, delta: float, **extra) -> BoundReport:
    """Asymptotic upper bound on E[encoded length] / H(s) for a scheme.

    ``scheme`` selects the statement:

    * ``"afld"`` needs ``gamma`` in (delta, 1/2) and ``k1``, ``k2``.
    * ``"afld_factor"`` needs ``a > 1`` and ``k1``, ``k2``.
    * ``"edd"`` needs ``beta`` with delta < beta <= 1/4.
    * ``"edd_default"`` uses beta = min(3 delta / 2, 1/4); needs delta < 1/4.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    hd = binary_entropy(delta)

    def regime():
        return RegimeParams(extra["k1"], extra["k2"])

    if scheme == "afld":
        gamma = extra["gamma"]
        if not delta < gamma < 0.5:
            raise ValueError(f"gamma must lie in (delta, 1/2), got {gamma}")
        r = regime()
        value = (1.0 + r.k1) / r.k2 * cross_entropy(gamma, delta) / hd
        params = {"delta": delta, "gamma": gamma, "k1": r.k1, "k2": r.k2}
    elif scheme == "afld_factor":
        a = extra["a"]
        if not a > 1:
            raise ValueError(f"a must exceed 1, got {a}")
        r = regime()
        value = a * (1.0 + r.k1) / r.k2
        params = {"delta": delta, "a": a, "k1": r.k1, "k2": r.k2}
    elif scheme == "edd":
        beta = extra["beta"]
        if not delta < beta <= 0.25:
            raise ValueError(f"beta must satisfy delta < beta <= 1/4, got {beta}")
        value = binary_entropy(2.0 * beta) / hd
        params = {"delta": delta, "beta": beta}
    elif scheme == "edd_default":
        if not delta < 0.25:
            raise ValueError(f"delta must be below 1/4, got {delta}")
        value = binary_entropy(min(3.0 * delta, 0.5)) / hd
        params = {"delta": delta, "beta": min(1.5 * delta, 0.25), "cap": 3.0}
    else:
        raise ValueError(f"unknown scheme for ratio bound: {scheme!r}")
    return BoundReport(f"{scheme}_ratio", value, params, kind="upper", asymptotic=True)

