"""Monte Carlo experiments: seeded trials, compression estimates, sweeps, CSV.

Trial ``i`` of an experiment with master seed ``s`` always draws its source
instance from ``trial_rng(s, i)``, independent of the scheme and of the sweep
cell.  Different schemes and parameters in one sweep are therefore compared on
common random numbers, and a one-cell sweep reproduces
:func:`estimate_compression` exactly.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import NamedTuple

from . import analytics
from .errors import IntegrityError, UnsupportedConfigError
from .schemes import AFLD, EDD, FLD, MFLD, VLD, EncodeStats, chunk_fixed, decode, encode
from .source_model import SourceParams, entropy_bounds, generate_stream, trial_rng

__all__ = [
    "TrialRecord",
    "SweepRow",
    "SchemeSpec",
    "SweepGrid",
    "Figure1Point",
    "CompressionEstimate",
    "DictSizeEstimate",
    "SWEEP_COLUMNS",
    "FIGURE1_COLUMNS",
    "run_trial",
    "estimate_compression",
    "empirical_dict_size",
    "default_grid",
    "sweep",
    "figure1_curve",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    trial_index: int | None
    params: SourceParams
    config: object
    input_bits: int
    encoded_bits: int
    stats: EncodeStats
    eu_flag: bool
    el_flag: bool
    max_block_flips: int

    @property
    def ratio(self) -> float:
        return self.input_bits / self.encoded_bits


def run_trial(params: SourceParams, config, seed: int, trial_index: int | None = None) -> TrialRecord:
    """Draw one instance, encode it, and verify the decode reproduces it.

    A failed round trip raises :class:`IntegrityError`; it is never recorded
    as a data point.
    """
    inst = generate_stream(params, trial_rng(seed, trial_index))
    s = inst.stream
    res = encode(s, config)
    if res.stats.total_bits != len(res.bits):
        raise IntegrityError(f"stats ledger {res.stats.total_bits} != encoded length {len(res.bits)}")
    if decode(res.bits, config) != s:
        raise IntegrityError(f"round trip failed for {config!r} (seed={seed}, trial={trial_index})")
    return TrialRecord(
        seed=seed,
        trial_index=trial_index,
        params=params,
        config=config,
        input_bits=len(s),
        encoded_bits=len(res.bits),
        stats=res.stats,
        eu_flag=inst.eu_holds(),
        el_flag=inst.el_holds(),
        max_block_flips=max(inst.block_flips()),
    )


def _run_indexed(job):
    params, config, seed, i = job
    return run_trial(params, config, seed, i)


def run_trials(params, config, n_trials: int, master_seed: int, workers: int = 1) -> list:
    """``n_trials`` records in trial-index order, optionally using worker processes."""
    jobs = [(params, config, master_seed, i) for i in range(n_trials)]
    if workers > 1 and n_trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_indexed, jobs))
    return [_run_indexed(j) for j in jobs]


def _mean_stderr(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


class CompressionEstimate(NamedTuple):
    mean: float
    stderr: float
    input_mean: float
    input_stderr: float
    ratio: float
    records: list


def estimate_compression(params, config, n_trials: int, master_seed: int, workers: int = 1):
    """Mean and standard error of the encoded length over seeded trials.

    ``ratio`` is mean input length over mean encoded length (a ratio of
    means).
    """
    if n_trials < 2:
        raise ValueError(f"need at least 2 trials, got {n_trials}")
    records = run_trials(params, config, n_trials, master_seed, workers)
    mean, se = _mean_stderr([r.encoded_bits for r in records])
    in_mean, in_se = _mean_stderr([r.input_bits for r in records])
    return CompressionEstimate(mean, se, in_mean, in_se, in_mean / mean, records)


class DictSizeEstimate(NamedTuple):
    mean_full: float
    mean_half: float
    stderr_full: float
    stderr_half: float


def empirical_dict_size(params: SourceParams, ell: int, n_trials: int, master_seed: int):
    """Distinct chunks under two-stage chunking with D = L, whole stream and first ceil(B/2) blocks."""
    if params.length_law.kind != "degenerate":
        raise UnsupportedConfigError("dictionary-size experiments need equal symbol lengths")
    L = int(params.L)
    if not 1 <= ell <= L:
        raise ValueError(f"need 1 <= ell <= L, got ell={ell}, L={L}")
    half = -(-params.B // 2)
    full_sizes, half_sizes = [], []
    for i in range(n_trials):
        inst = generate_stream(params, trial_rng(master_seed, i))
        seen = set()
        for b, block in enumerate(inst.blocks):
            if b == half:
                half_sizes.append(len(seen))
            seen.update(chunk_fixed(block, ell))
        if half == params.B:
            half_sizes.append(len(seen))
        full_sizes.append(len(seen))
    mf, sf = _mean_stderr(full_sizes)
    mh, sh = _mean_stderr(half_sizes)
    return DictSizeEstimate(mf, mh, sf, sh)


# -- sweeps ---------------------------------------------------------------------

@dataclass(frozen=True)
class SchemeSpec:
    """A scheme with one free parameter, resolved against each cell's source parameters.

    ``name`` / ``param_name`` pairs:

    * ``fld``: ``ell`` (0 means ell = L)
    * ``mfld``: ``ell`` with D = L
    * ``afld``: ``gamma_frac``; D = L, gamma = delta + frac * (1/2 - delta)
    * ``edd``: ``beta`` (0 means min(3 delta / 2, 1/4)); ell = L
    * ``vld``: ``M``
    """

    name: str
    param_value: float = 0

    PARAM_NAMES = {"fld": "ell", "mfld": "ell", "afld": "gamma_frac", "edd": "beta", "vld": "M"}

    def __post_init__(self):
        if self.name not in self.PARAM_NAMES:
            raise ValueError(f"unknown scheme {self.name!r}")

    @property
    def param_name(self) -> str:
        return self.PARAM_NAMES[self.name]

    def build(self, params: SourceParams):
        L = int(params.L)
        v = self.param_value
        if self.name == "fld":
            return FLD(int(v) or L)
        if self.name == "mfld":
            return MFLD(L, int(v))
        if self.name == "afld":
            if not 0 < v < 1:
                raise ValueError(f"gamma_frac must lie in (0, 1), got {v}")
            gamma = params.delta + v * (0.5 - params.delta)
            return AFLD(L, gamma, params.A, params.B, params.delta)
        if self.name == "edd":
            beta = v or min(1.5 * params.delta, 0.25)
            if not params.delta < beta <= 0.25:
                raise ValueError(f"EDD needs delta < beta <= 1/4, got beta={beta}")
            return EDD(L, beta)
        return VLD(int(v))

    @classmethod
    def parse(cls, text: str) -> "SchemeSpec":
        """``"vld:5"``, ``"afld:0.5"``, ``"fld"`` ..."""
        name, _, value = text.partition(":")
        return cls(name.strip().lower(), float(value) if value else 0)


@dataclass(frozen=True)
class SweepGrid:
    A: tuple
    B: tuple
    L: tuple
    delta: tuple
    schemes: tuple
    trials: int = 20
    master_seed: int = 0

    def cells(self):
        for A, B, L, d, spec in itertools.product(self.A, self.B, self.L, self.delta, self.schemes):
            yield SourceParams.fixed(A, B, L, d), spec

    @classmethod
    def from_dict(cls, d: dict) -> "SweepGrid":
        schemes = tuple(
            SchemeSpec.parse(s) if isinstance(s, str) else SchemeSpec(s["name"], s.get("value", 0))
            for s in d["schemes"]
        )
        return cls(
            A=tuple(d["A"]), B=tuple(d["B"]), L=tuple(d["L"]), delta=tuple(d["delta"]),
            schemes=schemes, trials=int(d.get("trials", 20)), master_seed=int(d.get("seed", 0)),
        )


def default_grid(master_seed: int = 0) -> SweepGrid:
    return SweepGrid(
        A=(4, 16), B=(256, 1024, 4096), L=(64, 256),
        delta=(0.01, 0.02, 0.05, 0.1, 0.2),
        schemes=(SchemeSpec("fld"), SchemeSpec("afld", 0.5), SchemeSpec("edd"), SchemeSpec("vld", 5)),
        trials=20, master_seed=master_seed,
    )


SWEEP_COLUMNS = (
    "scheme", "A", "B", "L", "delta", "param_name", "param_value", "trials",
    "input_bits_mean", "encoded_bits_mean", "encoded_bits_stderr", "ratio",
    "entropy_lower", "entropy_upper", "bound_name", "bound_value",
)


@dataclass
class SweepRow:
    scheme: str
    A: int
    B: int
    L: int
    delta: float
    param_name: str
    param_value: float
    trials: int
    input_bits_mean: float = math.nan
    encoded_bits_mean: float = math.nan
    encoded_bits_stderr: float = math.nan
    ratio: float = math.nan
    entropy_lower: float = math.nan
    entropy_upper: float = math.nan
    bound_name: str = ""
    bound_value: float = math.nan
    error: str = field(default="", metadata={"csv": False})


def _analytic_bound(params: SourceParams, config):
    """Leading-term upper bound on expected encoded bits, or (``""``, nan) if none applies.

    Growth exponents are read off the cell sizes (k1 = log L / log B,
    k2 = 1 - log A / log B).
    """
    A, B, L, d = params.A, params.B, float(params.L), params.delta
    if d <= 0:
        return "", math.nan
    try:
        if isinstance(config, AFLD):
            r = analytics.RegimeParams.from_sizes(A, B, L)
            rep = analytics.ratio_bounds("afld", d, gamma=config.gamma, k1=r.k1, k2=r.k2)
            return "afld_ratio_x_HdBL", rep.value * analytics.binary_entropy(d) * B * L
        if isinstance(config, EDD):
            rep = analytics.ratio_bounds("edd", d, beta=config.beta)
            return "edd_ratio_x_HdBL", rep.value * analytics.binary_entropy(d) * B * L
        if isinstance(config, VLD):
            r = analytics.RegimeParams.from_sizes(A, B, L)
            gamma = d + 0.5 * (0.5 - d)
            rep = analytics.vld_bound_coefficient(B, A, gamma, d, config.M, r)
            return "vld_coefficient_x_BL", rep.value * B * L
    except ValueError:
        pass
    return "", math.nan


def _sweep_cell(job):
    params, spec, trials, seed, workers = job
    row = SweepRow(
        scheme=spec.name, A=params.A, B=params.B, L=int(params.L), delta=params.delta,
        param_name=spec.param_name, param_value=spec.param_value, trials=trials,
    )
    try:
        config = spec.build(params)
        est = estimate_compression(params, config, trials, seed, workers)
    except IntegrityError:
        raise
    except (ValueError, UnsupportedConfigError) as exc:
        row.error = str(exc)
        return row
    lo, hi = entropy_bounds(params)
    row.input_bits_mean = est.input_mean
    row.encoded_bits_mean = est.mean
    row.encoded_bits_stderr = est.stderr
    row.ratio = est.ratio
    row.entropy_lower, row.entropy_upper = lo, hi
    row.bound_name, row.bound_value = _analytic_bound(params, config)
    return row


def sweep(grid: SweepGrid, workers: int = 1) -> list:
    """One :class:`SweepRow` per grid cell, in grid order.

    Invalid cells carry their error message in ``row.error`` and NaN
    measurements; a failed round trip aborts the whole sweep.
    """
    jobs = [(p, spec, grid.trials, grid.master_seed, 1) for p, spec in grid.cells()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_cell, jobs))
    return [_sweep_cell(j) for j in jobs]


# -- figure1 curve -------------------------------------------------------------------

FIGURE1_COLUMNS = ("delta", "bound_per_bit", "entropy_per_bit")


@dataclass(frozen=True)
class Figure1Point:
    delta: float
    bound_per_bit: float
    entropy_per_bit: float


def figure1_curve(regime: analytics.RegimeParams, deltas) -> list:
    """Optimized per-bit bound 12 e^{-c}(c+1) + 16 H(d) (1+k1)/k2 c against H(d)."""
    out = []
    for d in deltas:
        c = analytics.vld_optimal_c(d, regime)
        hd = analytics.binary_entropy(d)
        bound = 12.0 * math.exp(-c) * (c + 1.0) + 16.0 * hd * (1.0 + regime.k1) / regime.k2 * c
        out.append(Figure1Point(d, bound, hd))
    return out


def log_grid(lo: float, hi: float, n: int) -> list:
    if n == 1:
        return [lo]
    a, b = math.log10(lo), math.log10(hi)
    return [10 ** (a + (b - a) * i / (n - 1)) for i in range(n)]


# -- CSV ------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        # repr is locale-independent and round-trips exactly
        return repr(v)
    return str(v)


def _columns_for(rows, columns):
    if columns is not None:
        return tuple(columns)
    if not rows:
        return SWEEP_COLUMNS
    return tuple(f.name for f in fields(rows[0]) if f.metadata.get("csv", True))


def _new_file_mode() -> int:
    # what open() would give; mkstemp alone creates 0600 files
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def write_csv(rows, destination, columns=None) -> None:
    """Write dataclass rows atomically (temp file + rename) with a header line."""
    rows = list(rows)
    cols = _columns_for(rows, columns)
    dest = os.fspath(destination)
    directory = os.path.dirname(os.path.abspath(dest))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ddrs-", suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            os.fchmod(fh.fileno(), _new_file_mode())
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(cols)
            for row in rows:
                d = asdict(row)
                w.writerow([_fmt(d[c]) for c in cols])
        os.replace(tmp, dest)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_csv(source) -> list:
    """Parse a CSV written by :func:`write_csv` into dicts of strings."""
    with open(source, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
