"""Command-line entry point: ``qwold <command> ...`` (or ``python -m qwold``).

Exit codes: 0 every check passed, 1 some check failed, 2 usage error or
unknown fixture, 3 malformed input file, 4 inconsistent q.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fixtures as fx
from .bcl import BCLTuple, ExtractionError, InvalidTuple, NoUnimodularQ, build_model, extract_bcl1, infer_q, tuples_equivalent
from .core import Phase, QMatrix, TruncationWindow
from .opalg import densify, equal_on_window, operator_from_json, scale
from .passage import HypothesisFailure, from_q_commutative, is_doubly_q, round_trip, to_q_commutative
from .report import Check, VerificationReport
from .rewrite import RelationSet, RewriteError, parse_word, prove_identity
from .tuples import BilateralWindow, TupleError, extend_to_unitaries, extract_tuple_bcl, tuple_model_from_pair
from .wold import lambda_split, wold_decompose

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_Q = 0, 1, 2, 3, 4
DEFAULT_N, DEFAULT_TOL, DEFAULT_RANK_TOL = 16, 1e-10, 1e-8
# the box basis has N^d vectors; tuples with d >= 3 default to a smaller window
DEFAULT_TUPLE_N = 8


class InputError(ValueError):
    pass


class InconsistentQ(ValueError):
    pass


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return int(os.environ.get("QWOLD_SEED", "0"))


def _phase(text: str | None) -> Phase | None:
    if text is None:
        return None
    try:
        return Phase.parse(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"bad phase {text!r}: {e}") from e


# -- inputs ----------------------------------------------------------------------------------------


class Source:
    """Operators to work on, from a named example or a JSON file."""

    def __init__(self, label: str, ops: list, q: Phase | None, Q: QMatrix | None, fixture=None, tuple_=None):
        self.label, self.ops, self.q, self.Q = label, ops, q, Q
        self.fixture, self.tuple = fixture, tuple_

    def dense(self, N: int):
        if self.fixture is not None:
            return self.fixture.dense(N)
        w = TruncationWindow(N, 1)
        return [densify(V, w) for V in self.ops]


def _resolve_window(args, d: int) -> None:
    if args.trunc is None:
        args.trunc = DEFAULT_N if d <= 2 else DEFAULT_TUPLE_N


def load_source(args, q_override: Phase | None = None) -> Source:
    q = q_override if q_override is not None else args.q
    if getattr(args, "example", None):
        _resolve_window(args, getattr(args, "d", 3) if args.example == "tuple-d" else 2)
        try:
            f = fx.example(args.example, q, args.trunc, d=getattr(args, "d", 3))
        except fx.UnknownFixture as e:
            raise e
        return Source(f"example:{args.example}", f.ops, f.q if f.Q is not None else None, f.Q, f, f.tuple)
    if getattr(args, "input", None):
        src = _load_file(args.input, q)
        _resolve_window(args, max(len(src.ops), src.ops[0].signature.d))
        return src
    raise fx.UnknownFixture("one of --example or --input is required")


def _load_file(path: str, q: Phase | None) -> Source:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from e
    try:
        if "fiberDim" in obj or obj.get("kind") == "tuple":
            t = BCLTuple.from_json(obj.get("tuple", obj))
            t.validate(1e-8)
            if q is not None and not q.close_to(t.q, 1e-12):
                raise InconsistentQ(f"--q {q.text()} differs from the tuple's q {t.q.text()}")
            return Source(f"file:{path}", list(build_model(t)), t.q, QMatrix.pair(t.q), None, t)
        ops = [operator_from_json(o) for o in obj["operators"]]
        fq = Phase.parse(obj["q"]) if "q" in obj else None
        if q is not None and fq is not None and not q.close_to(fq, 1e-12):
            raise InconsistentQ(f"--q {q.text()} differs from the file's q {fq.text()}")
        q = q if q is not None else fq
        Q = QMatrix.from_json(obj["Q"]) if "Q" in obj else (QMatrix.pair(q) if q is not None and len(ops) == 2 else None)
        return Source(f"file:{path}", ops, q, Q)
    except InconsistentQ:
        raise
    except (KeyError, TypeError, ValueError, InvalidTuple) as e:
        raise InputError(f"malformed input {path}: {e}") from e


def _environment(args, q: Phase | None) -> dict:
    return {
        "N": args.trunc,
        "tol": args.tol,
        "rankTol": args.rank_tol,
        "q": q.text() if q is not None else None,
        "seed": _seed(args),
    }


# -- commands ----------------------------------------------------------------------------------


def _verify_pair(src: Source, args, report: VerificationReport) -> None:
    N, tol, rtol = args.trunc, args.tol, args.rank_tol
    V1l, V2l = src.ops
    w = TruncationWindow(N, 1)
    q = src.q
    D1, D2 = src.dense(N)
    if q is None:
        q, _ = infer_q(D1, D2, 1e-8)
    report.environment["q"] = q.text()
    exact = V1l.exact and V2l.exact
    qc = equal_on_window(V1l @ V2l, scale(q, V2l @ V1l), w, 0.0 if exact else tol, "q_commutativity_exact" if exact else "q_commutativity")
    if not qc.passed:
        raise InconsistentQ(f"V1 V2 != q V2 V1 for q = {q.text()} (witness {qc.witness})")
    report.add(qc)
    ext = extract_bcl1(D1, D2, q, tol, rtol, max(tol, 1e-10))
    for c in ext.checks:
        report.add(c)
    ls = lambda_split(D1, D2, tol, rtol)
    for c in ls.checks:
        report.add(c)
    # model rebuild: the extracted tuple's model is q-commutative and reproduces the input up to tau
    Mt = ext.tuple
    if ext.full_fiber:
        X1, X2 = build_model(Mt, check=False)
        report.add(equal_on_window(X1 @ X2, scale(q, X2 @ X1), TruncationWindow(8, 1), 1e-9, "model_q_commutativity"))
        ext2 = extract_bcl1(*(densify(X, w) for X in (X1, X2)), q, tol, rtol, max(tol, 1e-10))
        eq = tuples_equivalent(Mt, ext2.tuple, 1e-8)
        report.add(Check.from_residual("model_rebuild_equivalent", eq.residual if eq else float("inf"), 1e-8))
    verdict = is_doubly_q((D1, D2), q, tol, rtol)
    # a pair that is not doubly q-commutative is a finding, not a failed check
    report.results["doublyChecks"] = [c.to_json() for c in verdict.checks]
    report.add(Check.from_bool("doubly_q_routes_agree", verdict.agree))
    report.results.update({"doublyQ": verdict.doubly, "witness": verdict.witness, "fullFiber": ext.full_fiber, "bclTuple": Mt.to_json()})
    f = src.fixture
    if f is not None:
        e = f.expected
        if "doublyQ" in e:
            ok = verdict.doubly == e["doublyQ"] and verdict.witness == e.get("witness")
            report.add(Check.from_bool("expected_doubly_q", ok, f"got {verdict.doubly} / {verdict.witness}"))
        if f.tuple is not None:
            eq = tuples_equivalent(f.tuple, Mt, 1e-8)
            report.add(Check.from_residual("expected_bcl_tuple", eq.residual if eq else float("inf"), 1e-8))


def _verify_tuple(src: Source, args, report: VerificationReport) -> None:
    if src.Q is None:
        raise InconsistentQ("a QMatrix is required for tuples")
    model = extract_tuple_bcl(src.ops, src.Q, TruncationWindow(args.trunc, 1), args.tol, args.rank_tol, max(args.tol, 1e-8))
    for c in model.checks:
        report.add(c)
    report.results.update({"fullFiber": model.full_fiber, "fiberDims": model.fiber_dims})


def cmd_verify(args) -> tuple[int, VerificationReport]:
    src = load_source(args)
    report = VerificationReport(args.argv, src.label, _environment(args, src.q))
    f = src.fixture
    if f is not None and f.expected.get("noUnimodularQ"):
        D1, D2 = f.dense(args.trunc)
        try:
            q, _ = infer_q(D1, D2, 1e-8)
            report.add(Check.from_bool("no_unimodular_q", False, f"found q = {q.text()}"))
        except NoUnimodularQ as e:
            report.add(Check("no_unimodular_q", e.residual, 1e-8, "pass", None, {"bestResidual": e.residual}))
            report.results["verdict"] = "no unimodular q exists"
        return (EXIT_OK if report.passed else EXIT_FAIL), report
    if len(src.ops) == 2:
        _verify_pair(src, args, report)
    else:
        _verify_tuple(src, args, report)
    return (EXIT_OK if report.passed else EXIT_FAIL), report


def cmd_extract(args) -> tuple[int, VerificationReport]:
    src = load_source(args)
    report = VerificationReport(args.argv, src.label, _environment(args, src.q))
    if len(src.ops) == 2:
        D1, D2 = src.dense(args.trunc)
        ext = extract_bcl1(D1, D2, src.q, args.tol, args.rank_tol, max(args.tol, 1e-10))
        for c in ext.checks:
            report.add(c)
        report.results["bclTuple"] = ext.tuple.to_json()
        report.results["fullFiber"] = ext.full_fiber
    else:
        if src.Q is None:
            raise InconsistentQ("a QMatrix is required for tuples")
        model = extract_tuple_bcl(src.ops, src.Q, TruncationWindow(args.trunc, 1), args.tol, args.rank_tol, max(args.tol, 1e-8))
        for c in model.checks:
            report.add(c)
        report.results["tupleModel"] = model.to_json()
    return (EXIT_OK if report.passed else EXIT_FAIL), report


def cmd_wold(args) -> tuple[int, VerificationReport]:
    src = load_source(args)
    report = VerificationReport(args.argv, src.label, _environment(args, src.q))
    mats = src.dense(args.trunc)
    if args.index:
        if not 1 <= args.index <= len(mats):
            raise fx.UnknownFixture(f"--index must be in 1..{len(mats)}")
        V = mats[args.index - 1]
    else:
        V = mats[0]
        for M in mats[1:]:
            V = V @ M
    parts = wold_decompose(V, None, args.tol, args.rank_tol)
    for c in parts.checks:
        report.add(c)
    report.results["woldParts"] = parts.to_json()
    return (EXIT_OK if report.passed else EXIT_FAIL), report


def cmd_prove(args) -> tuple[int, VerificationReport]:
    try:
        lhs, rhs = parse_word(args.lhs), parse_word(args.rhs)
    except RewriteError as e:
        raise InputError(str(e)) from e
    q = args.q if args.q is not None else Phase.one()
    d = args.d or max([i for i, _ in lhs.letters + rhs.letters] + [2])
    Q = QMatrix.pair(q) if d == 2 else QMatrix.power_convention(q, d)
    rel = RelationSet(Q, "DOUBLY-Q" if args.doubly else "Q-COMM")
    report = VerificationReport(args.argv, "words", {"q": q.text(), "d": d, "doubly": bool(args.doubly)})
    proof = prove_identity(lhs, rhs, rel, exact=q.exact)
    report.add(Check.from_bool("identity", proof.holds, f"{proof.lhs_normal} != {proof.rhs_normal}"))
    report.results.update({"lhsNormal": str(proof.lhs_normal), "rhsNormal": str(proof.rhs_normal), "trace": proof.trace})
    return (EXIT_OK if report.passed else EXIT_FAIL), report


def cmd_extend(args) -> tuple[int, VerificationReport]:
    src = load_source(args)
    report = VerificationReport(args.argv, src.label, _environment(args, src.q))
    if src.tuple is not None:
        model = tuple_model_from_pair(src.tuple)
    else:
        if src.Q is None:
            raise InconsistentQ("a QMatrix is required")
        model = extract_tuple_bcl(src.ops, src.Q, TruncationWindow(args.trunc, 1), args.tol, args.rank_tol, max(args.tol, 1e-8))
        for c in model.checks:
            report.add(c)
        if model.coherent is None:
            report.add(Check.from_bool("finite_fiber", False, "the defect spaces are not finite on this window; no extension"))
            return EXIT_FAIL, report
    M = args.bilateral
    ext = extend_to_unitaries(model, BilateralWindow(M, args.bilateral_n or M), max(args.tol, 1e-10))
    for c in ext.checks:
        report.add(c)
    report.results["bilateralRange"] = [-M, args.bilateral_n or M]
    return (EXIT_OK if report.passed else EXIT_FAIL), report


def cmd_passage(args) -> tuple[int, VerificationReport]:
    q = args.q if args.q is not None else fx.DEFAULT_Q
    inner_q = Phase.one() if args.direction == "comm2q" else q
    src = load_source(args, inner_q)
    if len(src.ops) != 2:
        raise InputError("passage needs a pair")
    report = VerificationReport(args.argv, src.label, _environment(args, q))
    D1, D2 = src.dense(args.trunc)
    try:
        cert = to_q_commutative(D1, D2, q, args.tol) if args.direction == "comm2q" else from_q_commutative(D1, D2, q, args.tol)
    except HypothesisFailure as e:
        report.add(Check.from_bool("hypothesis", False, str(e)))
        return EXIT_FAIL, report
    for c in cert.checks:
        report.add(c)
    if args.direction == "comm2q":
        report.add(round_trip(D1, D2, q, args.tol))
        out = is_doubly_q(cert.pair, q, args.tol)
    else:
        out = is_doubly_q(cert.pair, Phase.one(), args.tol)
    report.results.update({"direction": cert.direction, "outputDoubly": out.doubly, "doublyChecks": [c.to_json() for c in out.checks]})
    return (EXIT_OK if report.passed else EXIT_FAIL), report


# -- argument parsing ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwold", description="Verify BCL models of q-commutative isometries.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, source=True):
        if source:
            sp.add_argument("--example", help=f"fixture name: {', '.join(fx.NAMES)}")
            sp.add_argument("--input", help="JSON file with a BCL tuple or operators")
            sp.add_argument("--d", type=int, default=3, help="tuple length for tuple-d")
        sp.add_argument("--q", type=_phase, help="phase p/r (turns) or rad:theta")
        sp.add_argument("--trunc", type=int, default=None, help=f"window N (default {DEFAULT_N}; {DEFAULT_TUPLE_N} for d >= 3)")
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
        sp.add_argument("--seed", type=int, help="overrides QWOLD_SEED")
        sp.add_argument("--json", help="write the report here")

    common(sub.add_parser("verify", help="full pipeline on one input"))
    common(sub.add_parser("extract", help="emit BCL data"))
    w = sub.add_parser("wold", help="Wold decomposition of V = V1...Vd or of one V_i")
    common(w)
    w.add_argument("--index", type=int, default=0)
    pr = sub.add_parser("prove", help="prove a word identity")
    common(pr, source=False)
    pr.add_argument("--lhs", required=True)
    pr.add_argument("--rhs", required=True)
    pr.add_argument("--doubly", action="store_true")
    pr.add_argument("--d", type=int, default=0)
    ext = sub.add_parser("extend", help="unitary extension on a bilateral window")
    common(ext)
    ext.add_argument("--bilateral", type=int, required=True, help="negative cap M")
    ext.add_argument("--bilateral-n", type=int, default=0, help="positive cap (default M)")
    pa = sub.add_parser("passage", help="commutative <-> q-commutative transforms")
    common(pa)
    pa.add_argument("--direction", choices=("comm2q", "q2comm"), required=True)
    return p


COMMANDS = {"verify": cmd_verify, "extract": cmd_extract, "wold": cmd_wold, "prove": cmd_prove, "extend": cmd_extend, "passage": cmd_passage}


def run(argv: list[str]) -> tuple[int, VerificationReport | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return (EXIT_OK if e.code == 0 else EXIT_USAGE), None
    args.argv = list(argv)
    try:
        code, report = COMMANDS[args.command](args)
    except fx.UnknownFixture as e:
        print(f"error: unknown fixture {e}", file=sys.stderr)
        return EXIT_USAGE, None
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT, None
    except (InconsistentQ, NoUnimodularQ) as e:
        print(f"error: inconsistent q: {e}", file=sys.stderr)
        return EXIT_Q, None
    except (ExtractionError, TupleError, InvalidTuple) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL, None
    text = report.dumps()
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code, report


def main(argv: list[str] | None = None) -> int:
    np.seterr(all="ignore")
    code, _ = run(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
