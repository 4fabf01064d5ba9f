"""Unitary extensions of small models on growing bilateral windows, with timings."""

import argparse
import time

from qwold.core import Phase
from qwold.fixtures import example, random_bcl_tuple
from qwold.tuples import BilateralWindow, extend_to_unitaries, tuple_model_from_pair


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12])
    ap.add_argument("--q", default="1/8")
    args = ap.parse_args()
    q = Phase.parse(args.q)
    models = {
        "rq-mz": tuple_model_from_pair(example("rq-mz", q).tuple),
        "rqmz-mz": tuple_model_from_pair(example("rqmz-mz", q).tuple),
        "random fiber 2": tuple_model_from_pair(random_bcl_tuple(2, 0, 0, q, exact=True)),
    }
    for M in args.sizes:
        for label, model in models.items():
            t0 = time.perf_counter()
            ext = extend_to_unitaries(model, BilateralWindow(M, M))
            worst = max(c.residual for c in ext.checks)
            print(f"M=N={M:<3} {label:<16} passed={ext.passed} max residual {worst:.1e} ({time.perf_counter() - t0:.2f}s)")


if __name__ == "__main__":
    main()
