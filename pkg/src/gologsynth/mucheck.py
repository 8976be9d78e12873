"""Closed first-order mu-calculus over finite game arenas, the nested-fixpoint
winning-set computation with approximant annotations, and memoryless strategy
extraction.

The realizability goal has the shape

    nu X. mu Y. (ok /\\ [-]X) \\/ (turnS /\\ <->Y)

where ``ok`` holds at target-turn states whose termination is matched by the
system (strengthened, in strict observation mode, by the observation
equivalence atom).  Annotations record the inner approximant at which a state
first enters the final outer round, shifted to count system moves to a goal
state; the extracted strategy strictly decreases them, so no run can livelock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import fol
from .errors import NonMonotone, NotRealizable, UnboundSOVariable
from .quotient import FiniteArena


# ---------------------------------------------------------------------------
# Formula syntax


@dataclass(frozen=True, slots=True)
class Prop:
    """A closed FO sentence over the labelling fluents."""

    sentence: fol.Formula


@dataclass(frozen=True, slots=True)
class MuNot:
    body: "MuFormula"


@dataclass(frozen=True, slots=True)
class MuAnd:
    items: tuple["MuFormula", ...]


@dataclass(frozen=True, slots=True)
class MuOr:
    items: tuple["MuFormula", ...]


@dataclass(frozen=True, slots=True)
class Diamond:
    body: "MuFormula"


@dataclass(frozen=True, slots=True)
class SOVar:
    name: str


@dataclass(frozen=True, slots=True)
class Mu:
    var: str
    body: "MuFormula"


@dataclass(frozen=True, slots=True)
class Nu:
    var: str
    body: "MuFormula"


MuFormula = Prop | MuNot | MuAnd | MuOr | Diamond | SOVar | Mu | Nu


def box(body: MuFormula) -> MuFormula:
    return MuNot(Diamond(MuNot(body)))


def check_monotone(phi: MuFormula, polarity: Mapping[str, bool] | None = None) -> None:
    """Every fixpoint variable must occur under an even number of negations."""

    def walk(f: MuFormula, bound: frozenset[str], negations_even: bool):
        if isinstance(f, Prop):
            return
        if isinstance(f, MuNot):
            walk(f.body, bound, not negations_even)
        elif isinstance(f, (MuAnd, MuOr)):
            for g in f.items:
                walk(g, bound, negations_even)
        elif isinstance(f, Diamond):
            walk(f.body, bound, negations_even)
        elif isinstance(f, SOVar):
            if f.name in bound and not negations_even:
                raise NonMonotone(
                    f"fixpoint variable {f.name!r} occurs under an odd number of negations"
                )
        elif isinstance(f, (Mu, Nu)):
            walk(f.body, bound | {f.var}, negations_even)
        else:
            raise TypeError(f"not a mu-formula node: {f!r}")

    walk(phi, frozenset(), True)


# ---------------------------------------------------------------------------
# Semantics


def pre_e(fa: FiniteArena, zs: frozenset[str]) -> frozenset[str]:
    """States with some successor in the set."""
    return frozenset(k for k in fa.keys if any(s in zs for s in fa.edges[k]))


def pre_a(fa: FiniteArena, zs: frozenset[str]) -> frozenset[str]:
    """States all of whose successors lie in the set; successor-free states
    belong vacuously."""
    return frozenset(k for k in fa.keys if all(s in zs for s in fa.edges[k]))


def _sentence_states(fa: FiniteArena, sentence: fol.Formula) -> frozenset[str]:
    return frozenset(k for k in fa.keys if fol.eval_formula(sentence, fa.label(k)))


def eval_mu(
    phi: MuFormula,
    fa: FiniteArena,
    assignment: Mapping[str, frozenset[str]] | None = None,
) -> frozenset[str]:
    """Exact Kleene evaluation on a finite arena: least fixpoints from the
    empty set upward, greatest fixpoints from the full state set downward."""
    check_monotone(phi)
    full = frozenset(fa.keys)

    def rec(f: MuFormula, v: dict[str, frozenset[str]]) -> frozenset[str]:
        if isinstance(f, Prop):
            return _sentence_states(fa, f.sentence)
        if isinstance(f, MuNot):
            return full - rec(f.body, v)
        if isinstance(f, MuAnd):
            out = full
            for g in f.items:
                out &= rec(g, v)
            return out
        if isinstance(f, MuOr):
            out: frozenset[str] = frozenset()
            for g in f.items:
                out |= rec(g, v)
            return out
        if isinstance(f, Diamond):
            return pre_e(fa, rec(f.body, v))
        if isinstance(f, SOVar):
            try:
                return v[f.name]
            except KeyError:
                raise UnboundSOVariable(f.name) from None
        if isinstance(f, (Mu, Nu)):
            current = frozenset() if isinstance(f, Mu) else full
            while True:
                v2 = dict(v)
                v2[f.var] = current
                nxt = rec(f.body, v2)
                if nxt == current:
                    return current
                current = nxt
        raise TypeError(f"not a mu-formula node: {f!r}")

    return rec(phi, dict(assignment) if assignment else {})


# ---------------------------------------------------------------------------
# The realizability goal


TURN_T = fol.Atom("turnT", ())
TURN_S = fol.Atom("turnS", ())
FINAL_T = fol.Atom("finalT", ())
FINAL_S = fol.Atom("finalS", ())
OBS_EQ = fol.Atom("obsEq", ())


def phi_ok_sentence(strict_obs: bool) -> fol.Formula:
    base: list[fol.Formula] = [fol.Implies(FINAL_T, FINAL_S), TURN_T]
    if strict_obs:
        base.append(OBS_EQ)
    return fol.And(tuple(base))


def phi_sim(strict_obs: bool) -> MuFormula:
    ok = Prop(phi_ok_sentence(strict_obs))
    return Nu(
        "X",
        Mu(
            "Y",
            MuOr(
                (
                    MuAnd((ok, box(SOVar("X")))),
                    MuAnd((Prop(TURN_S), Diamond(SOVar("Y")))),
                )
            ),
        ),
    )


# ---------------------------------------------------------------------------
# Winning set with annotations


@dataclass
class AnnotatedWinningSet:
    """The winning set with, per state, the number of system moves needed to
    reach a goal state (goal states carry 0)."""

    win: frozenset[str]
    ann: dict[str, int]
    strict_obs: bool
    outer_rounds: int
    approximants: list = field(default_factory=list)


def compute_win(
    fa: FiniteArena, strict_obs: bool = True, record_approximants: bool = False
) -> AnnotatedWinningSet:
    """Outer greatest fixpoint over X with an inner least fixpoint over Y.

    X starts at all states; each round computes Y as the limit of
    Y_{j+1} = Y_j  u  (goal n preA(X))  u  (turnS n preE(Y_j))
    and shrinks X to Y n X.  Annotations come from the final round only.
    """
    full = frozenset(fa.keys)
    goal = _sentence_states(fa, phi_ok_sentence(strict_obs))
    turn_s = _sentence_states(fa, TURN_S)
    approximants = []

    def inner(x: frozenset[str], record: Optional[dict[str, int]] = None):
        y: frozenset[str] = frozenset()
        rounds = []
        j = 0
        while True:
            j += 1
            grown = (goal & pre_a(fa, x)) | (turn_s & pre_e(fa, y))
            nxt = y | grown
            if record is not None:
                for k in nxt - y:
                    record.setdefault(k, j)
            rounds.append(nxt)
            if nxt == y:
                return y, rounds
            y = nxt

    x = full
    outer = 0
    while True:
        outer += 1
        y, rounds = inner(x)
        if record_approximants:
            approximants.append((x, rounds))
        nxt = y & x
        if nxt == x:
            break
        x = nxt

    # Re-run the inner fixpoint on the converged X to read off first-entry
    # indices; the loop above already recorded this round's approximants.
    first_entry: dict[str, int] = {}
    inner(x, record=first_entry)
    ann = {k: j - 1 for k, j in first_entry.items() if k in x}
    return AnnotatedWinningSet(
        win=x, ann=ann, strict_obs=strict_obs, outer_rounds=outer,
        approximants=approximants if record_approximants else [],
    )


def extract_strategy(annotated: AnnotatedWinningSet, fa: FiniteArena) -> dict[str, str]:
    """A memoryless winning strategy: at each system-turn winner, a successor
    in the winning set with strictly smaller annotation (least annotation,
    then least canonical form, for reproducibility)."""
    if fa.initial not in annotated.win:
        raise NotRealizable("the initial state is not in the winning set")
    strategy: dict[str, str] = {}
    for k in sorted(annotated.win):
        if not fa.label(k).holds("turnS", ()):
            continue
        my_ann = annotated.ann[k]
        candidates = [
            s
            for s in fa.edges[k]
            if s in annotated.win and annotated.ann[s] < my_ann
        ]
        if not candidates:
            raise NotRealizable(
                f"winning system state {k!r} has no annotation-decreasing successor"
            )
        strategy[k] = min(candidates, key=lambda s: (annotated.ann[s], s))
    return strategy


def soundness_check(fa: FiniteArena, annotated: AnnotatedWinningSet) -> list[str]:
    """Graph-search validation of the winning set; returns found violations.

    Every target-turn winner must satisfy the goal condition, and each of its
    successors must admit a path through system-turn winners to a target-turn
    winner."""
    problems = []
    goal = _sentence_states(fa, phi_ok_sentence(annotated.strict_obs))
    for k in sorted(annotated.win):
        lab = fa.label(k)
        if lab.turn != "T":
            continue
        if k not in goal:
            problems.append(f"turnT winner fails the goal condition: {k!r}")
        for s in fa.edges[k]:
            if not _reaches_goal_inside_win(fa, annotated, goal, s):
                problems.append(
                    f"successor {s!r} of winner {k!r} cannot reach a goal inside the winning set"
                )
    return problems


def _reaches_goal_inside_win(fa, annotated, goal, start) -> bool:
    seen = {start}
    frontier = [start]
    while frontier:
        k = frontier.pop()
        if k not in annotated.win:
            continue
        lab = fa.label(k)
        if lab.turn == "T":
            if k in goal:
                return True
            continue
        for s in fa.edges[k]:
            if s not in seen:
                seen.add(s)
                frontier.append(s)
    return False


def render_approximants(annotated: AnnotatedWinningSet) -> str:
    """Fixture-format dump of every outer and inner approximant, sorted."""
    lines = []
    for i, (x, rounds) in enumerate(annotated.approximants):
        lines.append(f"X_{i} ({len(x)} states)")
        for k in sorted(x):
            lines.append(f"  {k}")
        for j, y in enumerate(rounds):
            lines.append(f"Y_{i}_{j} ({len(y)} states)")
            for k in sorted(y):
                lines.append(f"  {k}")
    return "\n".join(lines) + "\n"
