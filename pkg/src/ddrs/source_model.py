"""The substitution-edit source: random symbols, noisy copies, concatenation.

Randomness comes from :class:`numpy.random.Generator`.  Use :func:`trial_rng`
to derive independent, reproducible streams from a master seed and a trial
index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .analytics import binary_entropy

__all__ = [
    "LengthLaw",
    "SourceParams",
    "SourceInstance",
    "trial_rng",
    "sample_symbols",
    "delta_edit",
    "generate_stream",
    "entropy_bounds",
    "format_instance",
    "parse_instance",
]

_ZERO = ord("0")


def _array_to_bits(arr: np.ndarray) -> str:
    return (arr.astype(np.uint8) + _ZERO).tobytes().decode("ascii")


def _bits_to_array(bits: str) -> np.ndarray:
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - _ZERO


@dataclass(frozen=True)
class LengthLaw:
    """Distribution of symbol lengths.

    Build one with :meth:`degenerate`, :meth:`uniform` or :meth:`table`; all
    support points must lie in [mean/2, 2*mean].
    """

    kind: str
    support: tuple
    probs: tuple

    def __post_init__(self):
        if self.kind not in ("degenerate", "uniform", "table"):
            raise ValueError(f"unknown length law kind {self.kind!r}")
        if not self.support or len(self.support) != len(self.probs):
            raise ValueError("length law needs matching, non-empty support and probabilities")
        if any(int(x) != x or x < 1 for x in self.support):
            raise ValueError("symbol lengths must be positive integers")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(self.probs)}, not 1")
        mean = self.mean
        for x, p in zip(self.support, self.probs):
            if p > 0 and not (mean / 2 <= x <= 2 * mean):
                raise ValueError(f"length {x} outside [L/2, 2L] for mean L={float(mean)}")

    @classmethod
    def degenerate(cls, L: int) -> "LengthLaw":
        return cls("degenerate", (int(L),), (1.0,))

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "LengthLaw":
        if not 1 <= lo <= hi:
            raise ValueError(f"need 1 <= lo <= hi, got {lo}, {hi}")
        n = hi - lo + 1
        return cls("uniform", tuple(range(lo, hi + 1)), (1.0 / n,) * n)

    @classmethod
    def table(cls, pairs) -> "LengthLaw":
        pairs = list(pairs)
        return cls("table", tuple(int(l) for l, _ in pairs), tuple(float(p) for _, p in pairs))

    @property
    def mean(self) -> Fraction:
        if self.kind == "degenerate":
            return Fraction(self.support[0])
        if self.kind == "uniform":
            return Fraction(self.support[0] + self.support[-1], 2)
        return sum((Fraction(l) * Fraction(p) for l, p in zip(self.support, self.probs)), Fraction(0))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "degenerate":
            return np.full(size, self.support[0], dtype=np.int64)
        if self.kind == "uniform":
            return rng.integers(self.support[0], self.support[-1] + 1, size=size)
        return rng.choice(np.asarray(self.support), size=size, p=np.asarray(self.probs))


@dataclass(frozen=True)
class SourceParams:
    A: int
    B: int
    length_law: LengthLaw
    delta: float

    def __post_init__(self):
        if self.A < 1 or self.B < 1:
            raise ValueError(f"A and B must be >= 1, got A={self.A}, B={self.B}")
        if not 0.0 <= self.delta < 0.5:
            raise ValueError(f"delta must lie in [0, 1/2), got {self.delta}")

    @classmethod
    def fixed(cls, A: int, B: int, L: int, delta: float) -> "SourceParams":
        """Parameters with every symbol of length exactly ``L``."""
        return cls(A, B, LengthLaw.degenerate(L), delta)

    @property
    def L(self) -> Fraction:
        return self.length_law.mean


@dataclass(frozen=True)
class SourceInstance:
    """One realized draw.  ``ancestors`` are 1-based indices into ``symbols``."""

    symbols: tuple
    ancestors: tuple
    blocks: tuple
    delta: float = 0.0

    def __post_init__(self):
        if len(self.ancestors) != len(self.blocks):
            raise ValueError("one ancestor index per block is required")
        for a, y in zip(self.ancestors, self.blocks):
            if not 1 <= a <= len(self.symbols):
                raise ValueError(f"ancestor index {a} out of range")
            if len(y) != len(self.symbols[a - 1]):
                raise ValueError("blocks must have the length of their ancestor")

    @property
    def A(self) -> int:
        return len(self.symbols)

    @property
    def B(self) -> int:
        return len(self.blocks)

    @property
    def symbol_lengths(self) -> list:
        return [len(x) for x in self.symbols]

    @cached_property
    def stream(self) -> str:
        return "".join(self.blocks)

    def descendants(self, first_blocks: int | None = None) -> list:
        """Block counts per symbol, optionally over the first ``first_blocks`` blocks only."""
        counts = [0] * self.A
        for a in self.ancestors[:first_blocks]:
            counts[a - 1] += 1
        return counts

    def eu_holds(self) -> bool:
        """Every symbol has at most 3B/(2A) descendants."""
        return max(self.descendants()) * 2 * self.A <= 3 * self.B

    def el_holds(self) -> bool:
        """Every symbol has at least B/(4A) descendants among the first ceil(B/2) blocks."""
        half = self.descendants(-(-self.B // 2))
        return min(half) * 4 * self.A >= self.B

    def block_flips(self) -> list:
        """Hamming distance of every block from its ancestor."""
        out = []
        for a, y in zip(self.ancestors, self.blocks):
            x = self.symbols[a - 1]
            out.append((int(x, 2) ^ int(y, 2)).bit_count() if x else 0)
        return out


def trial_rng(master_seed: int, trial_index: int | None = None) -> np.random.Generator:
    """Generator for one trial; distinct trial indices give independent streams."""
    key = () if trial_index is None else (int(trial_index),)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))


def sample_symbols(params: SourceParams, rng: np.random.Generator) -> list:
    lengths = params.length_law.sample(rng, params.A)
    bits = rng.integers(0, 2, size=int(lengths.sum()), dtype=np.uint8)
    text = _array_to_bits(bits)
    out, pos = [], 0
    for n in lengths:
        out.append(text[pos:pos + n])
        pos += n
    return out


def delta_edit(x: str, delta: float, rng: np.random.Generator) -> str:
    """Complement every bit of ``x`` independently with probability ``delta``."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if not x or delta == 0.0:
        return x
    flips = rng.random(len(x)) < delta
    return _array_to_bits(_bits_to_array(x) ^ flips)


def generate_stream(params: SourceParams, rng: np.random.Generator) -> SourceInstance:
    symbols = sample_symbols(params, rng)
    ancestors = rng.integers(1, params.A + 1, size=params.B)
    lengths = np.array([len(symbols[a - 1]) for a in ancestors], dtype=np.int64)
    # one vectorized draw for all edits, consumed block by block
    if params.delta > 0:
        flips = rng.random(int(lengths.sum())) < params.delta
    else:
        flips = np.zeros(int(lengths.sum()), dtype=bool)
    clean = _bits_to_array("".join(symbols[a - 1] for a in ancestors))
    edited = _array_to_bits(clean ^ flips)
    blocks, pos = [], 0
    for n in lengths:
        blocks.append(edited[pos:pos + n])
        pos += n
    return SourceInstance(tuple(symbols), tuple(int(a) for a in ancestors), tuple(blocks), params.delta)


def entropy_bounds(params: SourceParams) -> tuple:
    """H(d) B L <= H(s) <= H(d) B L + B log A + A (2L + 1)."""
    L = float(params.L)
    base = binary_entropy(params.delta) * params.B * L
    return base, base + params.B * math.log2(params.A) + params.A * (2 * L + 1)


def format_instance(inst: SourceInstance) -> str:
    lines = [f"{inst.A} {inst.B} {inst.delta!r}"]
    lines.extend(inst.symbols)
    lines.append(" ".join(map(str, inst.ancestors)))
    lines.extend(inst.blocks)
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> SourceInstance:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    try:
        A, B, delta = lines[0].split()
        A, B, delta = int(A), int(B), float(delta)
        symbols = tuple(lines[1:1 + A])
        ancestors = tuple(int(t) for t in lines[1 + A].split())
        blocks = tuple(lines[2 + A:2 + A + B])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed instance file: {exc}") from None
    if len(symbols) != A or len(blocks) != B or len(ancestors) != B or len(lines) != 2 + A + B:
        raise ValueError("malformed instance file: field counts do not match the header")
    for s in symbols + blocks:
        if set(s) - {"0", "1"}:
            raise ValueError("malformed instance file: non-binary string")
    if any(not 1 <= a <= A for a in ancestors):
        raise ValueError("malformed instance file: ancestor index out of range")
    if any(len(y) != len(symbols[a - 1]) for a, y in zip(ancestors, blocks)):
        raise ValueError("malformed instance file: block length differs from its ancestor")
    return SourceInstance(symbols, ancestors, blocks, delta)
