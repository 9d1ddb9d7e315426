"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 malformed stream,
4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import analytics, container, harness
from .bitio import bits_to_bytes, bytes_to_bits
from .errors import BitstreamError, IntegrityError, UnsupportedConfigError
from .schemes import AFLD, EDD, FLD, MFLD, VLD, decode, encode
from .source_model import (
    LengthLaw,
    SourceParams,
    format_instance,
    generate_stream,
    trial_rng,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_MALFORMED, EXIT_INTERNAL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- value checkers -------------------------------------------------------------

def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{v} is below the allowed range")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"{v} is above the allowed range")
        return v
    return conv


pos_int = _ranged(int, lo=1)
nonneg_int = _ranged(int, lo=0)
probability = _ranged(float, 0.0, 1.0)
edit_prob = _ranged(float, 0.0, 0.5, hi_open=True)
open_half = _ranged(float, 0.0, 0.5, lo_open=True, hi_open=True)
beta_value = _ranged(float, 0.0, 0.25, lo_open=True)
positive = _ranged(float, 0.0, lo_open=True)
unit_open = _ranged(float, 0.0, 1.0, lo_open=True, hi_open=True)


def _csv_list(kind):
    def conv(text):
        try:
            return [kind(t) for t in text.split(",") if t.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return conv


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ddrs", description="Deduplication codecs and experiments on the substitution-edit source.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw a source instance")
    g.add_argument("--A", type=pos_int, required=True)
    g.add_argument("--B", type=pos_int, required=True)
    g.add_argument("--L", type=pos_int, help="fixed symbol length")
    g.add_argument("--length-range", type=_csv_list(pos_int), metavar="LO,HI",
                   help="uniform symbol lengths in [LO, HI] instead of --L")
    g.add_argument("--delta", type=edit_prob, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True, help="instance text file")
    g.add_argument("--stream-out", help="also write the stream as raw bytes (zero padded)")

    e = sub.add_parser("encode", help="encode a file into a DDRS container")
    e.add_argument("--scheme", choices=["fld", "mfld", "afld", "edd", "vld"], required=True)
    e.add_argument("--ell", type=pos_int)
    e.add_argument("--D", type=pos_int)
    e.add_argument("--M", type=pos_int)
    e.add_argument("--beta", type=beta_value)
    e.add_argument("--gamma", type=open_half)
    e.add_argument("--A", type=pos_int)
    e.add_argument("--B", type=pos_int)
    e.add_argument("--delta", type=edit_prob)
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--out", required=True)

    d = sub.add_parser("decode", help="decode a DDRS container")
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--out", required=True)

    a = sub.add_parser("analyze", help="evaluate one analytic quantity")
    asub = a.add_subparsers(dest="quantity", required=True, parser_class=_Parser)
    q = asub.add_parser("entropy")
    q.add_argument("--p", type=probability, required=True)
    for name in ("cross-entropy", "kl"):
        q = asub.add_parser(name)
        q.add_argument("--p", type=probability, required=True)
        q.add_argument("--q", type=probability, required=True)
    q = asub.add_parser("s-delta")
    q.add_argument("--ell", type=nonneg_int, required=True)
    q.add_argument("--m", type=positive, required=True)
    q.add_argument("--delta", type=open_half, required=True)
    for name in ("rll-count", "rll-bounds"):
        q = asub.add_parser(name)
        q.add_argument("--k", type=pos_int, required=True)
        q.add_argument("--n", type=nonneg_int, required=True)
    q = asub.add_parser("dict-bounds")
    for flag in ("--A", "--B", "--L", "--ell"):
        q.add_argument(flag, type=pos_int, required=True)
    q.add_argument("--delta", type=edit_prob, required=True)
    q = asub.add_parser("afld-ell")
    for flag in ("--A", "--B", "--D"):
        q.add_argument(flag, type=pos_int, required=True)
    q.add_argument("--gamma", type=open_half, required=True)
    q.add_argument("--delta", type=edit_prob, required=True)
    q = asub.add_parser("lambert-wm1")
    q.add_argument("--x", type=float, required=True)
    q = asub.add_parser("vld-bound")
    for flag in ("--A", "--B"):
        q.add_argument(flag, type=pos_int, required=True)
    q.add_argument("--M", type=nonneg_int, required=True)
    q.add_argument("--gamma", type=open_half, required=True)
    q.add_argument("--delta", type=edit_prob, required=True)
    q.add_argument("--k1", type=positive, required=True)
    q.add_argument("--k2", type=unit_open, required=True)
    q = asub.add_parser("vld-c")
    q.add_argument("--delta", type=open_half, required=True)
    q.add_argument("--k1", type=positive, required=True)
    q.add_argument("--k2", type=unit_open, required=True)
    q = asub.add_parser("ratio-bound")
    q.add_argument("--scheme", choices=["afld", "afld_factor", "edd", "edd_default"], required=True)
    q.add_argument("--delta", type=open_half, required=True)
    q.add_argument("--gamma", type=open_half)
    q.add_argument("--beta", type=beta_value)
    q.add_argument("--a", type=positive)
    q.add_argument("--k1", type=positive)
    q.add_argument("--k2", type=unit_open)

    s = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV")
    s.add_argument("--grid", help="JSON grid file (keys A, B, L, delta, schemes, trials, seed)")
    s.add_argument("--A", type=_csv_list(pos_int))
    s.add_argument("--B", type=_csv_list(pos_int))
    s.add_argument("--L", type=_csv_list(pos_int))
    s.add_argument("--delta", type=_csv_list(edit_prob))
    s.add_argument("--schemes", type=lambda t: t.split(","), help="e.g. fld,afld:0.5,edd,vld:5")
    s.add_argument("--trials", type=_ranged(int, lo=2))
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=pos_int, default=1)
    s.add_argument("--out", required=True)

    f = sub.add_parser("figure1", help="write the optimized marker-chunking bound curve")
    f.add_argument("--k1", type=positive, default=0.5)
    f.add_argument("--k2", type=unit_open, default=0.5)
    f.add_argument("--delta-min", type=open_half, default=1e-5)
    f.add_argument("--delta-max", type=open_half, default=1e-1)
    f.add_argument("--points", type=pos_int, default=50)
    f.add_argument("--out", required=True)
    return p


# -- semantic validation ----------------------------------------------------------

def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + ("in" if n == "infile" else n) for n in missing)
        raise UsageError(f"{args.scheme if hasattr(args, 'scheme') else args.command} requires {flags}")


def _scheme_config(args):
    try:
        if args.scheme == "fld":
            _need(args, "ell")
            return FLD(args.ell)
        if args.scheme == "mfld":
            _need(args, "D", "ell")
            if args.ell > args.D:
                raise UsageError("--ell must not exceed --D")
            return MFLD(args.D, args.ell)
        if args.scheme == "afld":
            _need(args, "D", "gamma", "A", "B", "delta")
            if args.B <= args.A:
                raise UsageError("--B must exceed --A")
            if args.gamma <= args.delta:
                raise UsageError("--gamma must exceed --delta")
            return container.quantize(AFLD(args.D, args.gamma, args.A, args.B, args.delta))
        if args.scheme == "edd":
            _need(args, "ell", "beta")
            if args.delta is not None and args.beta <= args.delta:
                raise UsageError("--beta must exceed --delta")
            return container.quantize(EDD(args.ell, args.beta))
        _need(args, "M")
        return VLD(args.M)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_args(argv):
    """Parse and validate ``argv``; usage problems exit with status 1."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "encode":
            args.config = _scheme_config(args)
        elif args.command == "generate":
            if (args.L is None) == (args.length_range is None):
                raise UsageError("give exactly one of --L and --length-range")
            if args.length_range is not None and len(args.length_range) != 2:
                raise UsageError("--length-range takes LO,HI")
            law = (LengthLaw.degenerate(args.L) if args.L is not None
                   else LengthLaw.uniform(*args.length_range))
            args.params = SourceParams(args.A, args.B, law, args.delta)
        elif args.command == "figure1" and args.delta_min > args.delta_max:
            raise UsageError("--delta-min must not exceed --delta-max")
        elif args.command == "sweep":
            args.grid_obj = _sweep_grid(args)
    except (UsageError, ValueError) as exc:
        parser.error(str(exc))
    return args


def _seed(flag):
    if flag is not None:
        return flag
    env = os.environ.get("DDRS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"DDRS_SEED must be an integer, got {env!r}") from None
    return 0


def _sweep_grid(args):
    if args.grid:
        try:
            with open(args.grid, encoding="utf-8") as fh:
                d = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read --grid: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"--grid is not valid JSON: {exc}") from None
    else:
        d = {}
    for key in ("A", "B", "L", "delta", "schemes", "trials"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    if args.seed is not None or "seed" not in d:
        d["seed"] = _seed(args.seed)
    missing = [k for k in ("A", "B", "L", "delta", "schemes") if not d.get(k)]
    if missing:
        raise UsageError("sweep needs " + ", ".join("--" + k for k in missing) + " (or --grid)")
    try:
        return harness.SweepGrid.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid sweep grid: {exc}") from None


# -- commands -----------------------------------------------------------------------

def _new_file_mode() -> int:
    # what open() would give; mkstemp alone creates 0600 files
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def _write_atomic(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ddrs-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            os.fchmod(fh.fileno(), _new_file_mode())
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _num(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _analyze(args, out):
    q = args.quantity
    if q == "entropy":
        vals = [analytics.binary_entropy(args.p)]
    elif q == "cross-entropy":
        vals = [analytics.cross_entropy(args.p, args.q)]
    elif q == "kl":
        vals = [analytics.kl_divergence(args.p, args.q)]
    elif q == "s-delta":
        vals = [analytics.s_delta(args.ell, args.m, args.delta)]
    elif q == "rll-count":
        vals = [analytics.rll_count(args.k, args.n)]
    elif q == "rll-bounds":
        vals = list(analytics.rll_bounds(args.k, args.n))
    elif q == "dict-bounds":
        params = SourceParams.fixed(args.A, args.B, args.L, args.delta)
        vals = list(analytics.expected_dict_bounds_fld(params, args.ell))
    elif q == "afld-ell":
        vals = [analytics.afld_chunk_length(args.B, args.A, args.gamma, args.delta, args.D)]
    elif q == "lambert-wm1":
        vals = [analytics.lambert_w_m1(args.x)]
    elif q == "vld-bound":
        rep = analytics.vld_bound_coefficient(
            args.B, args.A, args.gamma, args.delta, args.M, analytics.RegimeParams(args.k1, args.k2))
        vals = [rep.value, rep.parameters["c_M"]]
    elif q == "vld-c":
        vals = [analytics.vld_optimal_c(args.delta, analytics.RegimeParams(args.k1, args.k2))]
    else:
        extra = {k: getattr(args, k) for k in ("gamma", "beta", "a", "k1", "k2") if getattr(args, k) is not None}
        try:
            vals = [analytics.ratio_bounds(args.scheme, args.delta, **extra).value]
        except KeyError as exc:
            raise UsageError(f"ratio-bound --scheme {args.scheme} requires --{exc.args[0]}") from None
    for v in vals:
        print(_num(v), file=out)


def run(args, out=None) -> int:
    """Execute a parsed command; returns the exit status."""
    out = out or sys.stdout
    cmd = args.command
    if cmd == "generate":
        inst = generate_stream(args.params, trial_rng(_seed(args.seed)))
        _write_atomic(args.out, format_instance(inst).encode("ascii"))
        if args.stream_out:
            _write_atomic(args.stream_out, bits_to_bytes(inst.stream))
        print(f"{len(inst.stream)} bits in {inst.B} blocks", file=sys.stderr)
    elif cmd == "encode":
        bits = bytes_to_bits(_read(args.infile))
        if not bits:
            raise UsageError("input file is empty; nothing to encode")
        res = encode(bits, args.config)
        if decode(res.bits, args.config) != bits:
            raise IntegrityError("encoded stream does not decode to the input")
        _write_atomic(args.out, container.pack(args.config, res.bits))
    elif cmd == "decode":
        config, payload = container.unpack(_read(args.infile))
        bits = decode(payload, config)
        if len(bits) % 8:
            raise BitstreamError(f"decoded {len(bits)} bits, not a whole number of bytes", len(payload))
        _write_atomic(args.out, bits_to_bytes(bits))
    elif cmd == "analyze":
        _analyze(args, out)
    elif cmd == "sweep":
        rows = harness.sweep(args.grid_obj, workers=args.workers)
        harness.write_csv(rows, args.out, harness.SWEEP_COLUMNS)
        for r in rows:
            if r.error:
                print(f"cell {r.scheme} A={r.A} B={r.B} L={r.L} delta={r.delta}: {r.error}", file=sys.stderr)
        print(f"{len(rows)} rows", file=sys.stderr)
    elif cmd == "figure1":
        deltas = harness.log_grid(args.delta_min, args.delta_max, args.points)
        pts = harness.figure1_curve(analytics.RegimeParams(args.k1, args.k2), deltas)
        harness.write_csv(pts, args.out, harness.FIGURE1_COLUMNS)
        print(f"{len(pts)} rows", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return run(args)
    except UsageError as exc:
        print(f"ddrs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BitstreamError as exc:
        print(f"ddrs: malformed stream: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except IntegrityError as exc:
        print(f"ddrs: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (UnsupportedConfigError, ValueError) as exc:
        print(f"ddrs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ddrs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
