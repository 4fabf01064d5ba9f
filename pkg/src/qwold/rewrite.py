"""Normal forms for phase-weighted words in g_i, g_i* under q-relations.

Relations used (q = q(a, b), a != b):

* g_a g_b = q g_b g_a and g_a* g_b* = q g_b* g_a*  (q-commutativity and its adjoint)
* g_i* g_i = 1                                      (each generator is an isometry)
* g_b g_a* = q(a, b) g_a* g_b                       (doubly-q relation set only)

Under the plain relation set a starred and an unstarred letter of different
generators never pass each other.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import Phase, QMatrix
from .opalg import LazyOperator, adjoint, identity, scale

Letter = tuple  # (generator index, starred)

Q_COMM, DOUBLY_Q = "Q-COMM", "DOUBLY-Q"


class RewriteError(ValueError):
    pass


@dataclass(frozen=True)
class Word:
    phase: Phase
    letters: tuple

    @classmethod
    def of(cls, *letters, phase: Phase | None = None) -> "Word":
        return cls(phase or Phase.one(), tuple(letters))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.phase * other.phase, self.letters + other.letters)

    def __pow__(self, n: int) -> "Word":
        out = Word(Phase.one(), ())
        for _ in range(n):
            out = out * self
        return out

    def scaled(self, p: Phase) -> "Word":
        return Word(self.phase * p, self.letters)

    def adjoint(self) -> "Word":
        return Word(self.phase.conj(), tuple((i, not s) for i, s in reversed(self.letters)))

    def text(self) -> str:
        body = " ".join(f"g{i}{'*' if s else ''}" for i, s in self.letters) or "1"
        return body if self.phase.is_one() else f"phase:{self.phase.text()} {body}"

    def __str__(self):
        return self.text()


def g(i: int, starred: bool = False) -> Word:
    return Word(Phase.one(), ((i, starred),))


@dataclass(frozen=True)
class RelationSet:
    Q: QMatrix
    mode: str = Q_COMM

    @classmethod
    def pair(cls, q: Phase, doubly: bool = False) -> "RelationSet":
        return cls(QMatrix.pair(q), DOUBLY_Q if doubly else Q_COMM)

    @property
    def doubly(self) -> bool:
        return self.mode == DOUBLY_Q

    @property
    def exact(self) -> bool:
        return all(p.exact for row in self.Q.entries for p in row)

    def swap_phase(self, x: Letter, y: Letter) -> Phase | None:
        """phi with x y = phi y x, or None when no relation lets them pass."""
        (a, sa), (b, sb) = x, y
        if a == b:
            return Phase.one() if sa == sb else None
        if sa == sb:
            return self.Q(a, b)
        if not self.doubly:
            return None
        return self.Q(b, a)


# -- normal form ----------------------------------------------------------------------


def _check(w: Word, rel: RelationSet, exact: bool):
    for i, _ in w.letters:
        if not 1 <= i <= rel.Q.d:
            raise RewriteError(f"generator g{i} outside 1..{rel.Q.d}")
    if exact and not (rel.exact and w.phase.exact):
        raise RewriteError("exact normalization needs rational-rotation phases")


def _permute(letters: list, order: list[int], rel: RelationSet) -> Phase:
    """Phase picked up by rearranging ``letters`` into positions ``order``.

    ``order`` lists the original indices in their target order; every
    inverted pair must be allowed to swap.
    """
    ph = Phase.one()
    pos = {orig: k for k, orig in enumerate(order)}
    n = len(letters)
    for s in range(n):
        for t in range(s + 1, n):
            if pos[s] > pos[t]:
                p = rel.swap_phase(letters[s], letters[t])
                if p is None:
                    raise RewriteError("illegal swap")
                ph = ph * p
    return ph


def _sort_run(run: list, rel: RelationSet) -> tuple[list, Phase]:
    order = sorted(range(len(run)), key=lambda k: run[k][0])
    return [run[k] for k in order], _permute(run, order, rel)


def _runs(letters) -> list[list]:
    out: list[list] = []
    for x in letters:
        if out and out[-1][0][1] == x[1]:
            out[-1].append(x)
        else:
            out.append([x])
    return out


def _normalize_qcomm(letters, rel: RelationSet, trace: list) -> tuple[tuple, Phase]:
    ph = Phase.one()
    runs = _runs(letters)
    changed = True
    while changed:
        changed = False
        for k in range(len(runs) - 1):
            S, T = runs[k], runs[k + 1]
            if not S[0][1] or T[0][1]:
                continue  # only starred -> unstarred junctions cancel
            common = {i for i, _ in S} & {i for i, _ in T}
            if not common:
                continue
            i = min(common)
            s = max(k2 for k2, x in enumerate(S) if x[0] == i)
            t = min(k2 for k2, x in enumerate(T) if x[0] == i)
            for y in S[s + 1 :]:
                ph = ph * rel.swap_phase(S[s], y)
            for y in T[:t]:
                ph = ph * rel.swap_phase(y, T[t])
            trace.append(f"cancel g{i}* g{i} at a starred/unstarred junction")
            runs[k] = S[:s] + S[s + 1 :]
            runs[k + 1] = T[:t] + T[t + 1 :]
            runs = _runs([x for r in runs for x in r])
            changed = True
            break
    out = []
    for r in runs:
        sr, p = _sort_run(r, rel)
        ph = ph * p
        out.extend(sr)
    if len(runs) > 0:
        trace.append("sort each run by generator index")
    return tuple(out), ph


def _normalize_doubly(letters, rel: RelationSet, trace: list) -> tuple[tuple, Phase]:
    letters = list(letters)
    order = sorted(range(len(letters)), key=lambda k: letters[k][0])
    ph = _permute(letters, order, rel)
    grouped = [letters[k] for k in order]
    trace.append("group letters by generator")
    # per generator: reduce to g^a g*^b using g* g = 1
    blocks: dict[int, tuple[int, int]] = {}
    for i, s in grouped:
        a, b = blocks.get(i, (0, 0))
        if s:
            b += 1
        elif b > 0:
            b -= 1
        else:
            a += 1
        blocks[i] = (a, b)
    reduced: list = []
    for i in sorted(blocks):
        a, b = blocks[i]
        reduced += [(i, False)] * a + [(i, True)] * b
    if len(reduced) < len(grouped):
        trace.append(f"cancel {(len(grouped) - len(reduced)) // 2} isometry pair(s)")

    def cls(x):
        a, b = blocks[x[0]]
        return 0 if a == 0 else (2 if b == 0 else 1)

    target = sorted(range(len(reduced)), key=lambda k: (cls(reduced[k]), reduced[k][0]))
    ph = ph * _permute(reduced, target, rel)
    trace.append("starred-only generators first, mixed next, unstarred-only last")
    return tuple(reduced[k] for k in target), ph


def normalize(w: Word, rel: RelationSet, exact: bool = True, trace: list | None = None) -> Word:
    _check(w, rel, exact)
    trace = [] if trace is None else trace
    if rel.doubly:
        letters, ph = _normalize_doubly(w.letters, rel, trace)
    else:
        letters, ph = _normalize_qcomm(w.letters, rel, trace)
    return Word(w.phase * ph, letters)


@dataclass
class Proof:
    holds: bool
    lhs_normal: Word
    rhs_normal: Word
    trace: list = field(default_factory=list)

    def __bool__(self):
        return self.holds


def prove_identity(lhs: Word, rhs: Word, rel: RelationSet, exact: bool = True) -> Proof:
    tl: list = []
    tr: list = []
    nl = normalize(lhs, rel, exact, tl)
    nr = normalize(rhs, rel, exact, tr)
    if exact:
        holds = nl.letters == nr.letters and nl.phase.turn == nr.phase.turn
    else:
        holds = nl.letters == nr.letters and nl.phase.close_to(nr.phase)
    trace = [f"lhs: {s}" for s in tl] + [f"lhs normal form: {nl}"]
    trace += [f"rhs: {s}" for s in tr] + [f"rhs normal form: {nr}"]
    return Proof(holds, nl, nr, trace)


# -- single-step rewriting (used to test confluence) ---------------------------------------


def rewrite_moves(w: Word, rel: RelationSet) -> list[Word]:
    """All words reachable by one relation application, in either direction for swaps."""
    out = []
    L = w.letters
    for k in range(len(L) - 1):
        x, y = L[k], L[k + 1]
        if x[0] == y[0] and x[1] and not y[1]:
            out.append(Word(w.phase, L[:k] + L[k + 2 :]))
            continue
        if x == y:
            continue
        p = rel.swap_phase(x, y)
        if p is not None:
            out.append(Word(w.phase * p, L[:k] + (y, x) + L[k + 2 :]))
    return out


def random_rewrite(w: Word, rel: RelationSet, steps: int, rng: random.Random) -> Word:
    for _ in range(steps):
        moves = rewrite_moves(w, rel)
        if not moves:
            break
        w = rng.choice(moves)
    return w


def random_word(d: int, length: int, rng: random.Random) -> Word:
    return Word(Phase.one(), tuple((rng.randint(1, d), rng.random() < 0.5) for _ in range(length)))


# -- text grammar ----------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(phase:[^\s()]+|g\d+\*?|\(|\)\^\d+|\))")


def parse_word(text: str) -> Word:
    """Parse e.g. ``"phase:2/8 g2* (g2* g1*)^2"``."""
    pos, tokens = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RewriteError(f"cannot parse word at {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    stack: list[Word] = [Word(Phase.one(), ())]
    for tok in tokens:
        if tok.startswith("phase:"):
            try:
                stack[-1] = stack[-1].scaled(Phase.parse(tok[6:]))
            except (ValueError, ZeroDivisionError) as exc:
                raise RewriteError(f"bad phase {tok!r}") from exc
        elif tok == "(":
            stack.append(Word(Phase.one(), ()))
        elif tok.startswith(")"):
            if len(stack) < 2:
                raise RewriteError("unbalanced parenthesis")
            inner = stack.pop()
            n = int(tok[2:]) if tok.startswith(")^") else 1
            stack[-1] = stack[-1] * inner**n
        else:
            star = tok.endswith("*")
            stack[-1] = stack[-1] * g(int(tok[1:].rstrip("*")), star)
    if len(stack) != 1:
        raise RewriteError("unbalanced parenthesis")
    return stack[0]


# -- bridge to operators ----------------------------------------------------------------------


def instantiate(w: Word, ops: list[LazyOperator]) -> LazyOperator:
    sig = ops[0].signature
    if any(op.signature != sig for op in ops):
        raise ValueError("operators have different signatures")
    out = identity(sig)
    for i, s in w.letters:
        if not 1 <= i <= len(ops):
            raise RewriteError(f"generator g{i} has no operator")
        out = out @ (adjoint(ops[i - 1]) if s else ops[i - 1])
    return scale(w.phase, out)


def adjoint_power_identity(j: int, q: Phase, second: bool = False) -> tuple[Word, Word]:
    """(V2* V1*)^j V1 = q^(j-1) V2* (V2* V1*)^(j-1), or the V2 variant with phase conj(q)^j."""
    Vs = g(2, True) * g(1, True)
    if not second:
        return Vs**j * g(1), (g(2, True) * Vs ** (j - 1)).scaled(q ** (j - 1))
    return Vs**j * g(2), (g(1, True) * Vs ** (j - 1)).scaled(q.conj() ** j)


def power_identity(n: int, q: Phase) -> tuple[Word, Word, Word]:
    """(g1 g2)^n together with conj(q)^(x_n) g1^n g2^n and q^(y_n) g2^n g1^n."""
    x, y = n * (n - 1) // 2, n * (n + 1) // 2
    T = (g(1) * g(2)) ** n
    return T, (g(1) ** n * g(2) ** n).scaled(q.conj() ** x), (g(2) ** n * g(1) ** n).scaled(q**y)


def phase_exponent(p: Phase, q: Phase) -> int | None:
    """k with p = q^k, smallest non-negative, for rational rotations."""
    if not (p.exact and q.exact):
        return None
    r = q.turn.denominator
    for k in range(r):
        if (q.turn * k - p.turn) % 1 == Fraction(0):
            return k
    return None
