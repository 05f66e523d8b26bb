"""Compiled core versus pure-numpy fallback on the hot kernels.

Also times a dense Haar rotation against the structured pseudo-random one.

Run:  python3 benchmarks/bench_kernels.py [--repeat 3] [--format csv|json]
"""

import argparse
import csv
import json
import sys
import timeit

import numpy as np

from hypercube_lsh import _core_py
from hypercube_lsh import rotations as rot

try:
    from hypercube_lsh import _core
except ImportError:  # extension not built
    _core = None


def cases():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((256, 1024))
    cands = rng.integers(-50, 50, size=(2000, 40)).astype(np.int64)
    v = rng.integers(-200, 200, size=40).astype(np.int64)
    yield "count_collisions d=64 d'=8 n=20000", \
        lambda m: m.count_collisions(64, 8, 0.5, 0.8660254037844386, 7, 0, 20000)
    yield "sample_angles d=64 n=20000", lambda m: m.sample_angles(64, 7, 0, 20000)
    yield "fwht 256x1024", lambda m: m.fwht(x.copy())
    yield "reduce_against d=40 list=2000", lambda m: m.reduce_against(v.copy(), cands, 40)


def rotation_case(repeat):
    d = 4096
    x = np.random.default_rng(2).standard_normal((64, d))
    dense = rot.haar_rotation(d, 3)
    pseudo = rot.pseudo_rotation(d, 3, 3)
    return best(lambda: dense.apply(x), repeat), best(lambda: pseudo.apply(x), repeat)


def best(f, repeat):
    f()
    return min(timeit.repeat(f, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args(argv)

    rows = []
    for name, f in cases():
        t_py = best(lambda: f(_core_py), args.repeat)
        t_c = best(lambda: f(_core), args.repeat) if _core is not None else float("nan")
        rows.append({"case": name, "baseline": "pure", "baseline_s": t_py,
                     "contender": "compiled", "contender_s": t_c, "speedup": t_py / t_c})
    t_dense, t_pseudo = rotation_case(args.repeat)
    rows.append({"case": "rotate 64 vectors d=4096", "baseline": "dense Haar",
                 "baseline_s": t_dense, "contender": "pseudo", "contender_s": t_pseudo,
                 "speedup": t_dense / t_pseudo})

    if args.format == "json":
        json.dump(rows, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
    w.writeheader()
    for r in rows:
        w.writerow({k: ("%.4g" % v if isinstance(v, float) else v) for k, v in r.items()})


if __name__ == "__main__":
    main()
