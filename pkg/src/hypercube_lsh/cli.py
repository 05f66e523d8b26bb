"""Command-line front end (``hclsh``).

Exit status: 0 on success, 1 on usage or I/O errors, 2 when a
verification step fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from typing import List, Optional, Sequence

import numpy as np

from . import asymptotics as asy
from . import index as idx
from . import largedev as ld
from . import montecarlo as mc
from . import sieve as sv
from .errors import DomainError

DEFAULT_SEED = 0x5EEDCAFE
CROSS_POLYTOPE_NOTE = "cross-polytope: rho = O(1/c^2), cited only"

log = logging.getLogger("hclsh")


class UsageError(Exception):
    pass


class VerificationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- parsing helpers -------------------------------------------------------

_CONSTS = {"pi": math.pi, "sqrt2": math.sqrt(2.0), "pivot": asy.PIVOT_ANGLE}


def parse_real(text: str) -> float:
    """Float, or an expression like ``pi/3``, ``2*pi/5``, ``sqrt2``, ``pivot``."""
    t = text.strip().lower()
    try:
        return float(t)
    except ValueError:
        pass
    num, _, den = t.partition("/")
    factor, _, name = num.rpartition("*")
    if name not in _CONSTS:
        raise argparse.ArgumentTypeError(f"cannot parse number {text!r}")
    value = _CONSTS[name] * (float(factor) if factor else 1.0)
    return value / float(den) if den else value


def real_list(text: str) -> List[float]:
    return [parse_real(tok) for tok in text.split(",") if tok.strip()]


def int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    if v is None:
        return ""
    return str(v)


def jsonable(v):
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class Output:
    """Collects tables and renders them as CSV or JSON."""

    def __init__(self, fmt_name: str):
        self.format = fmt_name
        self.tables = []

    def table(self, name: str, header: Sequence[str], rows: Sequence[Sequence]):
        self.tables.append((name, list(header), [list(r) for r in rows]))

    def record(self, name: str, data: dict):
        self.table(name, list(data), [list(data.values())])

    def render(self) -> str:
        if self.format == "json":
            body = {name: [dict(zip(h, r)) for r in rows] for name, h, rows in self.tables}
            if len(body) == 1:
                body = next(iter(body.values()))
            return json.dumps(jsonable(body), indent=2) + "\n"
        buf = io.StringIO()
        for i, (_, header, rows) in enumerate(self.tables):
            if i:
                buf.write("\r\n")
            w = csv.writer(buf, lineterminator="\r\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        return buf.getvalue()


# -- dataset ingestion -----------------------------------------------------

def read_fvecs(path: str) -> np.ndarray:
    """Vectors stored as int32 dimension followed by that many float32."""
    raw = np.fromfile(path, dtype="<i4")
    if raw.size == 0:
        raise DomainError(f"{path}: empty file")
    dim = int(raw[0])
    if dim > 0 and raw.size % (dim + 1) == 0:
        block = raw.reshape(-1, dim + 1)
        if np.all(block[:, 0] == dim):
            return block[:, 1:].copy().view("<f4").astype(np.float64)
    out, pos = [], 0
    while pos < raw.size:
        dim = int(raw[pos])
        if dim <= 0 or pos + 1 + dim > raw.size:
            raise DomainError(f"{path}: malformed fvecs record at word {pos}")
        out.append(raw[pos + 1:pos + 1 + dim].copy().view("<f4").astype(np.float64))
        pos += dim + 1
    if len({v.size for v in out}) != 1:
        raise DomainError(f"{path}: vectors of different dimensions")
    return np.stack(out)


def write_fvecs(path: str, x: np.ndarray) -> None:
    x = np.asarray(x, dtype="<f4")
    block = np.empty((x.shape[0], x.shape[1] + 1), dtype="<i4")
    block[:, 0] = x.shape[1]
    block[:, 1:] = x.view("<i4")
    block.tofile(path)


def load_dataset(path: str) -> np.ndarray:
    if path.endswith(".fvecs"):
        x = read_fvecs(path)
    else:
        x = np.loadtxt(path, delimiter=",", ndmin=2)
    norms = np.linalg.norm(x, axis=1)
    zero = norms == 0.0
    if np.any(zero):
        log.warning("skipping %d zero vector(s) in %s", int(zero.sum()), path)
    x = x[~zero]
    if x.shape[0] == 0:
        raise DomainError(f"{path}: no nonzero vectors")
    return x / norms[~zero][:, None]


# -- subcommands -----------------------------------------------------------

def cmd_curves(args, out: Output):
    thetas = args.thetas if args.thetas is not None else list(
        np.linspace(0.0, math.pi, args.points))
    if not thetas:
        raise UsageError("empty theta grid")
    rows = []
    for th in thetas:
        r = asy.hypercube_collision_base(th)
        rows.append([th, asy.hyperplane_collision(th), r.base, r.branch.value,
                     r.beta.beta if r.beta else None])
    out.table("curves", ["theta", "hyperplane_base", "hypercube_base", "branch", "beta"], rows)


def cmd_rho(args, out: Output):
    if not args.c:
        raise UsageError("empty c grid")
    rows = []
    for c in args.c:
        hp = asy.rho_random(c, asy.Model.HYPERPLANE).rho
        hc = asy.rho_random(c, asy.Model.HYPERCUBE).rho
        rows.append([c, hp, hc, hp / hc, CROSS_POLYTOPE_NOTE])
    out.table("rho", ["c", "rho_hyperplane", "rho_hypercube", "ratio", "note"], rows)


def cmd_estimate(args, out: Output):
    if not args.thetas:
        raise UsageError("empty theta list")
    dims = args.d
    dprimes = args.dprime if args.dprime is not None else dims
    pairs = list(zip(dims, dprimes)) if args.paired else [(d, p) for d in dims for p in dprimes
                                                          if p <= d]
    if not pairs:
        raise UsageError("no admissible (d, dprime) pairs")
    ests = []
    for th in args.thetas:
        for d, p in pairs:
            ests.append(mc.estimate_collision(d, p, th, args.trials, args.seed, args.threads))
    out.table("estimates", list(mc.CSV_FIELDS), [e.row() for e in ests])
    if args.fit:
        fits = []
        for th in args.thetas:
            pts = [e for e in ests if e.theta == th]
            try:
                f = mc.fit_exponential(pts)
            except Exception as exc:  # noqa: BLE001 - reported, not fatal
                log.warning("fit at theta=%g skipped: %s", th, exc)
                continue
            fits.append([th, f.c1, f.c2, f.base, f.rms_residual, f.points_used])
        out.table("fits", ["theta", "c1", "c2", "base", "rms_residual", "points_used"], fits)


def cmd_tune(args, out: Output):
    p = idx.tune_params(args.n, args.theta1, args.theta2, args.family, args.d, args.dprime,
                        args.delta, args.seed)
    out.record("params", {"family": p.family.value, "d": p.d, "dprime": p.dprime, "k": p.k,
                          "t": p.t, "code_length": p.code_length, "seed": p.seed})


def _bench_params(args, n: int, d: int):
    family = idx.Family.parse(args.family)
    if args.k and args.t:
        return idx.IndexParams(d, args.dprime or 1, args.k, args.t, family,
                               args.rotation, args.seed)
    p1 = p2 = None
    if family is idx.Family.HYPERCUBE and args.calibrate:
        p1 = idx.calibrate(args.theta1, d, args.dprime, args.calibrate, args.seed)
        p2 = idx.calibrate(args.theta2, d, args.dprime, args.calibrate, args.seed + 1)
    return idx.tune_params(n, args.theta1, args.theta2, family, d, args.dprime, args.delta,
                           args.seed, args.rotation, p1, p2)


def cmd_bench(args, out: Output):
    rng = np.random.default_rng(args.seed)
    if args.dataset:
        data = idx.Dataset.from_array(load_dataset(args.dataset))
        targets = rng.integers(0, data.n, size=args.queries)
        queries = np.stack([idx.plant_at_angle(data.vectors[j], args.theta1, rng)
                            for j in targets])
    else:
        data, queries, targets = idx.synthetic_benchmark(args.n, args.d, args.theta1,
                                                         args.queries, args.seed)
    if data.n < 2:
        # hashing a single point is pointless; scan it directly
        summary = idx.exhaustive_queries(data, queries, targets, args.theta1)
    else:
        params = _bench_params(args, data.n, data.d)
        t0 = time.perf_counter()
        index = idx.build(data, params)
        summary = idx.run_queries(index, queries, targets, args.theta1,
                                  time.perf_counter() - t0)
    report = summary.as_dict()
    report.update(n=data.n, queries=len(queries), theta1=args.theta1,
                  method="exhaustive" if data.n < 2 else "lsh")
    if not args.timing:
        report.pop("build_time")
        report.pop("query_time")
    out.record("bench", report)


def cmd_ld_verify(args, out: Output):
    if not args.thetas:
        raise UsageError("empty theta grid")
    rows, worst = [], 0.0
    for th in args.thetas:
        if not 0.0 < th < 0.5 * math.pi:
            raise UsageError(f"theta {th} outside (0, pi/2)")
        closed = asy.hypercube_collision_base(th).base
        via = ld.collision_base_via_ld(th)
        plus = ld.rate_plus_closed(th).value
        minus = ld.rate_minus_closed(th).value
        num = ld.rate_numeric(ld.ZPoint.from_angle(th)).value
        gap = max(abs(closed - via), abs(num - max(plus, minus)))
        worst = max(worst, gap)
        rows.append([th, closed, via, plus, minus, num, gap])
    out.table("ld_verify", ["theta", "base_closed", "base_via_ld", "rate_plus", "rate_minus",
                            "rate_numeric", "max_abs_gap"], rows)
    if worst > args.tolerance:
        raise VerificationError(f"gap {worst:.3g} exceeds {args.tolerance:g}")


def cmd_exponents(args, out: Output):
    rows = []
    for m in args.model:
        e = sv.sieve_exponents(m)
        rows.append([e.model.value, e.c_n, e.c_t, e.theta2_opt, e.theta2_opt / math.pi,
                     e.time_exponent, e.dprime_ratio])
    out.table("exponents", ["model", "c_n", "c_t", "theta2_opt", "theta2_over_pi",
                            "time_exponent", "dprime_ratio"], rows)


def cmd_sieve(args, out: Output):
    if args.basis:
        with open(args.basis) as fh:
            basis = sv.parse_basis(fh.read())
    elif args.random_basis:
        d, seed, bits = args.random_basis
        basis = sv.random_basis(d, seed, bits)
    elif args.identity:
        basis = sv.LatticeBasis(np.eye(args.identity, dtype=np.int64))
    else:
        raise UsageError("one of --basis, --random-basis, --identity is required")
    cfg = sv.SieveConfig(backend=args.backend, max_samples=args.max_samples, seed=args.seed,
                         sigma=args.sigma, stable_window=args.window, lll=not args.no_lll)
    res = sv.nv_sieve(basis, cfg)
    report = {"d": basis.d, "backend": cfg.backend.value, "norm": res.norm,
              "shortest": " ".join(str(int(v)) for v in res.shortest),
              "list_size_peak": res.list_size_peak, "samples": res.samples,
              "reductions": res.reductions, "comparisons": res.comparisons,
              "collisions": res.collisions}
    if args.oracle:
        oracle = sv.enumeration_oracle(basis)
        report["oracle_norm"] = oracle
        if res.norm > oracle * (1 + 1e-12):
            out.record("sieve", report)
            raise VerificationError(f"sieve norm {res.norm} above oracle {oracle}")
    out.record("sieve", report)


# -- parser ----------------------------------------------------------------

def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=d(DEFAULT_SEED),
                   help=f"RNG seed (default 0x{DEFAULT_SEED:X})")
    p.add_argument("--out", default=d(None), help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    p.add_argument("--threads", type=int, default=d(1), help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hclsh", description="Collision analytics, hashing experiments and "
                     f"benchmarks.  Default seed 0x{DEFAULT_SEED:X}.")
    _globals(parser, False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _globals(p, True)
        p.set_defaults(func=func)
        return p

    p = add("curves", cmd_curves, "collision bases of hyperplane and hypercube hashing")
    p.add_argument("--thetas", type=real_list, help="comma-separated angles (pi/3 allowed)")
    p.add_argument("--points", type=int, default=181, help="uniform grid size on [0, pi]")

    p = add("rho", cmd_rho, "LSH exponents in the random setting")
    p.add_argument("--c", type=real_list, default=[math.sqrt(2.0), 2.0, 3.0, 5.0, 10.0, 100.0],
                   help="approximation factors")

    p = add("estimate", cmd_estimate, "Monte Carlo collision probabilities")
    p.add_argument("--d", type=int_list, required=True)
    p.add_argument("--dprime", type=int_list)
    p.add_argument("--paired", action="store_true", help="zip --d and --dprime lists")
    p.add_argument("--thetas", type=real_list, required=True)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--fit", action="store_true", help="fit exp(c1*dprime + c2) per angle")

    p = add("tune", cmd_tune, "index parameters from collision probabilities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--dprime", type=int)
    p.add_argument("--family", default="Hyperplane")
    p.add_argument("--theta1", type=parse_real, default=math.pi / 3)
    p.add_argument("--theta2", type=parse_real, default=math.pi / 2)
    p.add_argument("--delta", type=float, default=idx.DEFAULT_DELTA)

    p = add("bench", cmd_bench, "recall benchmark of the multi-table index")
    p.add_argument("--dataset", help=".fvecs or .csv file (default: synthetic)")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--d", type=int, default=24)
    p.add_argument("--family", default="Hyperplane")
    p.add_argument("--dprime", type=int, default=8)
    p.add_argument("--rotation", default="GramSchmidtRows")
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--theta1", type=parse_real, default=math.pi / 3)
    p.add_argument("--theta2", type=parse_real, default=math.pi / 2)
    p.add_argument("--delta", type=float, default=idx.DEFAULT_DELTA)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--calibrate", type=int, default=0, metavar="TRIALS",
                   help="measure hypercube collision probabilities with TRIALS trials")
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="omit wall-clock fields (byte-stable output)")

    p = add("ld-verify", cmd_ld_verify, "cross-check collision bases via rate functions")
    p.add_argument("--thetas", type=real_list, required=True)
    p.add_argument("--tolerance", type=float, default=1e-5)

    p = add("exponents", cmd_exponents, "time exponents of LSH-accelerated sieving")
    p.add_argument("--model", type=lambda s: [m for m in s.split(",") if m],
                   default=["Hypercube", "Hyperplane"])

    p = add("sieve", cmd_sieve, "run the lattice sieve")
    p.add_argument("--basis", help="integer matrix file, one basis vector per line")
    p.add_argument("--random-basis", nargs=3, type=int, metavar=("D", "SEED", "BITS"))
    p.add_argument("--identity", type=int, metavar="D")
    p.add_argument("--backend", default="Linear",
                   choices=[b.value for b in sv.SieveBackend])
    p.add_argument("--max-samples", type=int, default=20000)
    p.add_argument("--window", type=int, default=1000, help="stop after this many samples "
                   "without improvement")
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--no-lll", action="store_true")
    p.add_argument("--oracle", action="store_true", help="compare with exact enumeration")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.format)
    status = 0
    try:
        args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hclsh: error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, ValueError, OSError) as exc:
        print(f"hclsh: error: {exc}", file=sys.stderr)
        return 1
    except VerificationError as exc:
        print(f"hclsh: verification failed: {exc}", file=sys.stderr)
        status = 2
    text = out.render()
    try:
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"hclsh: error: {exc}", file=sys.stderr)
        return 1
    return status


if __name__ == "__main__":
    sys.exit(main())
