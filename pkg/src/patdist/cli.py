"""Command-line front end.

    patdist run --pattern ADAD --alphabet ABCD --uniform --length 2000 --n 10
    patdist automaton --pattern 'AB.{1}AA.{1}AB' --alphabet AB
    patdist fit --fit genome.fa --order 2 --alphabet ACGT --output model.txt
    patdist oracle --pattern AB --alphabet AB --uniform --length 10 --exhaustive

``run`` is implied when the first argument is an option.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from gmpy2 import mpfr, mpq

from .arith import DEFAULT_PRECISION, ReconstructionError, ext_context
from .automaton import EmptyLanguageError, PatternSyntaxError, compile_pattern, make_order_m, to_dot
from .embedding import embed
from .lifting import LiftingError, bivariate_lift
from .markov import ModelError, dumps_model, fit_mle, load_model, read_fasta, save_model, stationary_mu, uniform_iid
from .oracle import BudgetExceeded, exhaustive, monte_carlo
from .reconstruction import (MemoryBudgetError, find_fraction, load_fraction, model_fingerprint,
                             save_fraction)
from .recursion import ConvergenceError, SpectralError, dominant_eigenvalue, full_distribution, partial_distribution

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_METHOD = 3
EXIT_INTERNAL = 4

METHODS = ("auto", "full", "partial", "lifting", "fiduccia")

# auto-selection thresholds
FULL_WORK_MAX = 200_000  # (l - m) * (n + 1) * nnz below which full recursion is cheapest
LIFT_R_SMALL = 64  # chains this small always get a fraction
LIFT_R_MEDIUM = 256  # ... and up to this size when many counts are requested
LIFT_N_LARGE = 50


class InputError(ValueError):
    pass


@dataclass
class JobSpec:
    pattern: str
    alphabet: tuple
    length: int
    n_min: int
    n_max: int
    classes: dict = field(default_factory=dict)
    fit: str | None = None
    order: int = 0
    model_file: str | None = None
    uniform: bool = False
    mu: str = "first"
    method: str = "auto"
    precision: int = DEFAULT_PRECISION
    eta: float = 1e-15
    exact: bool = False
    fraction_cache: str | None = None
    fmt: str = "table"
    full_digits: bool = False
    seed: int = 0
    jobs: int = 1

    def validate(self):
        sources = [self.fit is not None, self.model_file is not None, self.uniform]
        if sum(sources) != 1:
            raise InputError("give exactly one model source: --fit FILE, --model FILE or --uniform")
        if self.uniform and self.order:
            raise InputError("--uniform is an order 0 model; drop --order")
        if not 0 <= self.n_min <= self.n_max:
            raise InputError(f"empty count range [{self.n_min}, {self.n_max}]")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")
        if self.length < 0:
            raise InputError("--length must be non-negative")
        if self.precision < 53:
            raise InputError("--precision-bits must be at least 53")
        if not 0 < self.eta < 1:
            raise InputError("--eta must lie in (0, 1)")
        if not self.alphabet:
            raise InputError("empty alphabet")


@dataclass
class ChainStats:
    R: int
    nnz: int
    m: int
    fraction_cached: bool = False


def select_method(job: JobSpec, stats: ChainStats) -> str:
    """Pick an engine following the cost trade-offs of the four approaches.

    * full recursion when ``(l - m)(n + 1) nnz`` is tiny;
    * lifting when a matching fraction is cached, when the chain is small,
      or when the chain is moderate and many counts are requested;
    * partial recursion otherwise (large chains, few counts).
    """
    if job.method != "auto":
        return job.method
    steps = max(job.length - stats.m, 0)
    if steps * (job.n_max + 1) * max(stats.nnz, 1) <= FULL_WORK_MAX:
        return "full"
    if stats.fraction_cached:
        return "lifting"
    if stats.R <= LIFT_R_SMALL:
        return "lifting"
    if stats.R <= LIFT_R_MEDIUM and job.n_max >= LIFT_N_LARGE:
        return "lifting"
    return "partial"


# --------------------------------------------------------------------------
# Pipeline


def build_model(job: JobSpec):
    if job.uniform:
        return uniform_iid(job.alphabet)
    if job.model_file is not None:
        model = load_model(job.model_file)
        if tuple(model.alphabet) != tuple(job.alphabet):
            raise InputError(f"model alphabet {''.join(model.alphabet)} differs from --alphabet")
        return model
    seq = read_fasta(job.fit, job.alphabet, skip_invalid=True)
    model = fit_mle(seq, job.order, job.alphabet)
    if job.mu == "stationary" and job.order:
        model = model.with_mu(stationary_mu(model))
    return model


def _fraction_meta(job: JobSpec, model) -> dict:
    return {"alphabet": tuple(job.alphabet), "pattern": job.pattern, "model": model_fingerprint(model)}


def _cached_fraction(job: JobSpec, model):
    if not job.fraction_cache or not Path(job.fraction_cache).exists():
        return None
    frac = load_fraction(job.fraction_cache)
    want = _fraction_meta(job, model)
    if frac.m != model.m or any(frac.meta.get(k) != v for k, v in want.items()):
        raise InputError(f"{job.fraction_cache} was computed for another pattern, alphabet or model")
    return frac


def run(job: JobSpec) -> dict:
    """Execute a job; returns a report dictionary."""
    job.validate()
    timings = {}
    t = time.perf_counter()
    dfa = compile_pattern(job.pattern, job.alphabet, job.classes or None)
    model = build_model(job)
    autom = make_order_m(dfa, model.m)
    timings["automaton"] = time.perf_counter() - t
    if job.length < model.m:
        raise InputError(f"--length {job.length} is shorter than the model order {model.m}")
    t = time.perf_counter()
    chain = embed(autom, model)
    timings["embedding"] = time.perf_counter() - t
    cached = _cached_fraction(job, model)
    stats = ChainStats(chain.R, chain.nnz, chain.m, cached is not None)
    method = select_method(job, stats)
    report = {
        "pattern": job.pattern, "alphabet": "".join(job.alphabet), "order": model.m,
        "length": job.length, "method": method,
        "R": chain.R, "F": len(chain.finals), "dfa_states": autom.dfa.n_states,
    }
    n = job.n_max
    if method == "full":
        dist = full_distribution(chain, job.length, n, "exact" if job.exact else "float", job.precision)
        timings["t0_full"] = dist.meta["time"]
    elif method == "partial":
        t = time.perf_counter()
        spectral = dominant_eigenvalue(chain.P, precision=job.precision)
        timings["t1_spectral"] = time.perf_counter() - t
        dist = partial_distribution(chain, job.length, n, job.eta, precision=job.precision, spectral=spectral)
        timings["t3_partial"] = dist.meta.get("time_recursion", 0.0)
        report["one_minus_lambda"] = 1 - spectral.lam
        report["alpha"] = dist.meta.get("alpha")
        report["power_iterations"] = spectral.iterations
    else:
        frac = cached
        if frac is None:
            t = time.perf_counter()
            frac = find_fraction(chain, seed=job.seed, meta=_fraction_meta(job, model))
            timings["t2_fraction"] = time.perf_counter() - t
            if job.fraction_cache:
                save_fraction(frac, job.fraction_cache)
        engine = "fiduccia" if method == "fiduccia" else "lifting"
        dist = bivariate_lift(frac, job.length, n, "exact" if job.exact else "float", job.precision, engine)
        timings["t4_lifting"] = dist.meta["time"]
        report["fraction_degrees"] = "%d/%d" % frac.degrees
        report["nu_y"] = frac.nu_y
    report["probabilities"] = {k: dist.probs[k] for k in range(job.n_min, job.n_max + 1)}
    report["timings"] = timings
    return report


# --------------------------------------------------------------------------
# Output


def format_sci(x, digits: int = 6, precision: int = DEFAULT_PRECISION) -> str:
    """Scientific notation with ``digits`` significant digits, any exponent."""
    with ext_context(precision):
        v = mpfr(x)
        if v == 0:
            return "0"
        mant, exp, _ = v.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+03d}"


def format_value(x, full: bool, precision: int) -> str:
    if not full:
        return format_sci(x, 6, precision)
    if isinstance(x, type(mpq(0))):
        return f"{x.numerator}/{x.denominator}"
    digits = int(precision * 0.30103) + 1
    return format_sci(x, digits, precision)


def _meta_items(report: dict):
    for key in ("pattern", "alphabet", "order", "length", "method", "R", "F", "dfa_states",
                "one_minus_lambda", "alpha", "power_iterations", "fraction_degrees", "nu_y"):
        if key in report and report[key] is not None:
            val = report[key]
            if key == "one_minus_lambda":
                val = format_sci(val, 3)
            yield key, val
    for key, val in report["timings"].items():
        yield f"time_{key}", f"{val:.3f}"


def render(report: dict, fmt: str, full: bool = False, precision: int = DEFAULT_PRECISION) -> str:
    probs = report["probabilities"]
    L = report["length"]
    if fmt == "csv":
        lines = ["n,probability"] + [f"{k},{format_value(v, full, precision)}" for k, v in probs.items()]
    elif fmt == "kv":
        lines = [f"{k}={v}" for k, v in _meta_items(report)]
        lines += [f"P[{k}]={format_value(v, full, precision)}" for k, v in probs.items()]
    else:
        lines = [f"# {k}: {v}" for k, v in _meta_items(report)]
        width = max(len(str(k)) for k in probs)
        lines.append(f"{'n':>{width}}  P(N_{L} = n)")
        lines += [f"{k:>{width}}  {format_value(v, full, precision)}" for k, v in probs.items()]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Argument parsing


def _parse_classes(items) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part.strip():
                continue
            name, eq, letters = part.partition("=")
            if not eq or not name.strip() or not letters.strip():
                raise InputError(f"bad class definition {part!r}; expected NAME=LETTERS")
            out[name.strip()] = letters.strip()
    return out


def _add_pattern_args(p, required=True):
    p.add_argument("--pattern", required=required, help="regular expression over the alphabet")
    p.add_argument("--alphabet", help="letters of the alphabet, e.g. ACGT (default: from --fit file)")
    p.add_argument("--classes", action="append", metavar="NAME=LETTERS",
                   help="named letter classes, comma separated or repeated (N=ACGT,R=AG)")


def _add_model_args(p):
    g = p.add_argument_group("background model (choose one)")
    g.add_argument("--fit", metavar="FILE", help="FASTA-style sequence to fit an order-M model on")
    g.add_argument("--order", type=int, default=0, metavar="M", help="Markov order for --fit")
    g.add_argument("--model", metavar="FILE", dest="model_file", help="model text file")
    g.add_argument("--uniform", action="store_true", help="i.i.d. uniform letters")
    g.add_argument("--mu", choices=("first", "stationary"), default="first",
                   help="initial context distribution for --fit (default: the first M letters)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patdist", description="Distribution of pattern occurrence counts in Markov sequences.")
    sub = parser.add_subparsers(dest="command")

    r = sub.add_parser("run", help="compute P(N_l = n)")
    _add_pattern_args(r)
    _add_model_args(r)
    r.add_argument("--length", type=int, required=True, metavar="L")
    r.add_argument("--n", type=int, metavar="N", help="single count (same as --n-min N --n-max N)")
    r.add_argument("--n-min", type=int)
    r.add_argument("--n-max", type=int)
    r.add_argument("--method", choices=METHODS, default="auto")
    r.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION, dest="precision")
    r.add_argument("--eta", type=float, default=1e-15, help="target relative error of partial recursion")
    r.add_argument("--exact", action="store_true", help="rational arithmetic for full recursion and lifting")
    r.add_argument("--fraction-cache", metavar="FILE", help="load or store the generating function here")
    r.add_argument("--format", choices=("table", "csv", "kv"), default="table", dest="fmt")
    r.add_argument("--full-precision", action="store_true", dest="full_digits",
                   help="print every digit (exact fractions in --exact mode)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)

    a = sub.add_parser("automaton", help="print the minimal (order-M) DFA in DOT format")
    _add_pattern_args(a)
    a.add_argument("--order", type=int, default=0, metavar="M")
    a.add_argument("--output", metavar="FILE")

    f = sub.add_parser("fit", help="fit an order-M model and write it as text")
    f.add_argument("--fit", required=True, metavar="FILE")
    f.add_argument("--order", type=int, required=True, metavar="M")
    f.add_argument("--alphabet")
    f.add_argument("--mu", choices=("first", "stationary"), default="first")
    f.add_argument("--output", metavar="FILE")

    o = sub.add_parser("oracle", help="exhaustive or Monte Carlo ground truth")
    _add_pattern_args(o)
    _add_model_args(o)
    o.add_argument("--length", type=int, required=True, metavar="L")
    mode = o.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--samples", type=int)
    o.add_argument("--budget", type=int, default=10**7)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--jobs", type=int, default=1)
    o.add_argument("--format", choices=("table", "csv", "kv"), default="table", dest="fmt")
    return parser


def _alphabet(args) -> tuple:
    if args.alphabet:
        return tuple(args.alphabet)
    if getattr(args, "fit", None):
        return tuple(sorted(set(read_fasta(args.fit))))
    if getattr(args, "model_file", None):
        return tuple(load_model(args.model_file).alphabet)
    raise InputError("--alphabet is required")


def job_from_args(args) -> JobSpec:
    n_min, n_max = args.n_min, args.n_max
    if args.n is not None:
        if n_min is not None or n_max is not None:
            raise InputError("use either --n or --n-min/--n-max")
        n_min = n_max = args.n
    if n_max is None:
        raise InputError("give --n or --n-max")
    n_min = 0 if n_min is None else n_min
    return JobSpec(pattern=args.pattern, alphabet=_alphabet(args), length=args.length, n_min=n_min, n_max=n_max,
                   classes=_parse_classes(args.classes), fit=args.fit, order=args.order, model_file=args.model_file,
                   uniform=args.uniform, mu=args.mu, method=args.method, precision=args.precision, eta=args.eta,
                   exact=args.exact, fraction_cache=args.fraction_cache, fmt=args.fmt, full_digits=args.full_digits,
                   seed=args.seed, jobs=args.jobs)


def _cmd_run(args, out):
    job = job_from_args(args)
    report = run(job)
    out.write(render(report, job.fmt, job.full_digits, job.precision))


def _cmd_automaton(args, out):
    alphabet = _alphabet(args)
    dfa = compile_pattern(args.pattern, alphabet, _parse_classes(args.classes) or None)
    autom = make_order_m(dfa, args.order)
    text = to_dot(autom.dfa, backmap=autom.backmap if args.order else None)
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    print(f"states={autom.dfa.n_states} finals={len(autom.dfa.finals)} chain_states={len(autom.chain_states)}",
          file=sys.stderr)


def _cmd_fit(args, out):
    alphabet = tuple(args.alphabet) if args.alphabet else None
    seq = read_fasta(args.fit, alphabet, skip_invalid=alphabet is not None)
    model = fit_mle(seq, args.order, alphabet)
    if args.mu == "stationary" and args.order:
        model = model.with_mu(stationary_mu(model))
    if args.output:
        save_model(model, args.output)
    else:
        out.write(dumps_model(model))


def _cmd_oracle(args, out):
    alphabet = _alphabet(args)
    job = JobSpec(pattern=args.pattern, alphabet=alphabet, length=args.length, n_min=0, n_max=0,
                  classes=_parse_classes(args.classes), fit=args.fit, order=args.order,
                  model_file=args.model_file, uniform=args.uniform, mu=args.mu)
    job.validate()
    dfa = compile_pattern(job.pattern, alphabet, job.classes or None)
    model = build_model(job)
    if args.exhaustive:
        res = exhaustive(dfa, model, args.length, args.budget)
    else:
        res = monte_carlo(dfa, model, args.length, args.samples, args.seed, args.jobs)
    rows = []
    for k, v in res.distribution.items():
        if res.exact:
            rows.append((k, f"{v.numerator}/{v.denominator}", format_sci(v)))
        else:
            rows.append((k, f"{v:.6e}", f"{res.stderr[k]:.2e}"))
    if args.fmt == "csv":
        head = "n,probability,decimal" if res.exact else "n,estimate,stderr"
        out.write("\n".join([head] + [",".join(map(str, r)) for r in rows]) + "\n")
    elif args.fmt == "kv":
        out.write(f"samples={res.samples}\nexact={res.exact}\n")
        out.write("".join(f"P[{k}]={a}\n" for k, a, _ in rows))
    else:
        out.write(f"# samples: {res.samples}  exact: {res.exact}\n")
        out.write("".join(f"{k:>4}  {a}  {b}\n" for k, a, b in rows))


COMMANDS = {"run": _cmd_run, "automaton": _cmd_automaton, "fit": _cmd_fit, "oracle": _cmd_oracle}


def main(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if out is None else out
    if argv and argv[0].startswith("-") and argv[0] not in ("-h", "--help"):
        argv = ["run"] + argv
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_INPUT
    try:
        COMMANDS[args.command](args, out)
    except (InputError, PatternSyntaxError, EmptyLanguageError, ModelError, BudgetExceeded,
            FileNotFoundError, IsADirectoryError) as exc:
        print(f"patdist: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SpectralError as exc:
        print(f"patdist: {exc} (try --method full)", file=sys.stderr)
        return EXIT_METHOD
    except ConvergenceError as exc:
        print(f"patdist: {exc} (try --method full or a larger --eta)", file=sys.stderr)
        return EXIT_METHOD
    except MemoryBudgetError as exc:
        print(f"patdist: MT: {exc} (try --method partial)", file=sys.stderr)
        return EXIT_METHOD
    except (ReconstructionError, LiftingError) as exc:
        print(f"patdist: {exc} (try --method partial or --exact)", file=sys.stderr)
        return EXIT_METHOD
    except Exception as exc:  # noqa: BLE001
        print(f"patdist: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
