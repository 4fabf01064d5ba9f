"""Run the verify pipeline on every named example over a grid of q values.

Prints one row per (example, q) and optionally writes the full reports as JSON lines.
"""

import argparse
import json

from qwold.cli import run
from qwold.fixtures import NAMES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", nargs="+", default=["0", "1/8", "1/3", "2/5", "rad:1.0"])
    ap.add_argument("--trunc", type=int, default=12)
    ap.add_argument("--out", help="JSON-lines file for the full reports")
    args = ap.parse_args()
    out = open(args.out, "w") if args.out else None
    print(f"{'example':<18} {'q':<8} {'code':>4} {'doubly':>7} {'witness':>8} checks")
    for name in NAMES:
        for q in args.q:
            argv = ["verify", "--example", name, "--q", q, "--trunc", str(args.trunc if name != "tuple-d" else min(args.trunc, 8)), "--json", "/dev/null"]
            code, rep = run(argv)
            if rep is None:
                print(f"{name:<18} {q:<8} {code:>4}")
                continue
            js = rep.to_json()
            res = js["results"]
            n_fail = sum(c["verdict"] != "pass" for c in js["checks"])
            print(f"{name:<18} {q:<8} {code:>4} {str(res.get('doublyQ', '-')):>7} {str(res.get('witness', '-')):>8} {len(js['checks'])} ({n_fail} failing)")
            if out:
                out.write(json.dumps({"argv": argv[:-2], "report": js}, sort_keys=True) + "\n")
    if out:
        out.close()


if __name__ == "__main__":
    main()
