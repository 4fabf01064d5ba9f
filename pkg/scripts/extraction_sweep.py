"""Round-trip error of BCL extraction against window size and fiber dimension.

For each (N, fiber_dim) draws random Haar tuples, builds the model on the
window, extracts again and records the intertwiner residual.  Writes CSV.
"""

import argparse
import csv
import sys
import time

import numpy as np

from qwold.bcl import extract_bcl1, model_matrices, tuples_equivalent
from qwold.core import Phase
from qwold.fixtures import random_bcl_tuple


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--windows", type=int, nargs="+", default=[8, 12, 16, 24])
    ap.add_argument("--fibers", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--ku", type=int, default=0, help="dimension of the unitary part (q = 1/ku)")
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["N", "fiber_dim", "seed", "q", "full_fiber", "residual", "seconds"])
    for N in args.windows:
        for n in args.fibers:
            for s in range(args.seeds):
                q = Phase.rational(1, args.ku) if args.ku else Phase.rational(s % 16, 16)
                t = random_bcl_tuple(n, args.ku, s, q, exact=False)
                t0 = time.perf_counter()
                V1, V2 = model_matrices(t, N)
                e = extract_bcl1(V1, V2, q)
                eq = tuples_equivalent(e.tuple, t)
                res = eq.residual if eq is not None else np.inf
                w.writerow([N, n, s, q.text(), e.full_fiber, f"{res:.3e}", f"{time.perf_counter() - t0:.3f}"])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
