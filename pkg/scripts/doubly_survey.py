"""How often random BCL shift models are doubly q-commutative, and whether the
window test and the P U P-perp test agree.

Models with U reducing P are always doubly q-commutative.  With U drawn
independently, only the draws where P has rank 0 or full rank are.
"""

import argparse
from collections import Counter

from qwold.core import Phase, TruncationWindow
from qwold.fixtures import random_shift_pair
from qwold.opalg import densify
from qwold.passage import is_doubly_q, pup_perp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--fiber", type=int, default=2)
    ap.add_argument("--trunc", type=int, default=12)
    ap.add_argument("--q", default="1/7")
    args = ap.parse_args()
    q = Phase.parse(args.q)
    w = TruncationWindow(args.trunc, 1)
    counts = Counter()
    worst_gap = 0.0
    for s in range(args.samples):
        for doubly in (False, True):
            (A, B), t = random_shift_pair(args.fiber, s, q, doubly=doubly)
            v = is_doubly_q((densify(A, w), densify(B, w)), q)
            counts[(doubly, v.doubly, v.agree)] += 1
            window_norm = v.checks[1].residual
            worst_gap = max(worst_gap, abs(window_norm - pup_perp(t)))
    print(f"q = {q.text()}, fiber {args.fiber}, N = {args.trunc}, {args.samples} samples per family")
    print(f"{'built doubly':>13} {'verdict':>8} {'agree':>6} {'count':>6}")
    for (b, d, a), c in sorted(counts.items()):
        print(f"{str(b):>13} {str(d):>8} {str(a):>6} {c:>6}")
    print(f"max | window PUP-perp - tuple PUP-perp | = {worst_gap:.2e}")


if __name__ == "__main__":
    main()
