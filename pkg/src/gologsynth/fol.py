"""Situation-suppressed first-order formulas and their evaluation.

Formulas are evaluated against any object exposing the small interpretation
protocol (``holds``, ``quantifier_objects``): world states, observation views
and arena labellings all qualify.  Quantifiers range over the named constants
plus the active domain of the interpretation (active-domain semantics), plus
the objects mentioned by the compound action when evaluation happens inside a
successor-state or compound-precondition context.  Input formulas are expected
to be domain independent in the usual sense: their truth must not depend on
objects outside that range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .errors import MembershipOutsideActionContext, SynthError, UnboundVariable


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __repr__(self):
        return f"?{self.name}"


@dataclass(frozen=True, slots=True)
class Obj:
    name: str

    def __repr__(self):
        return self.name


Term = Var | Obj


def ground_term(t: Term, env: Mapping[str, str]) -> str:
    if isinstance(t, Obj):
        return t.name
    try:
        value = env[t.name]
    except KeyError:
        raise UnboundVariable(f"variable {t.name!r} has no value") from None
    if value is None:
        raise UnboundVariable(f"variable {t.name!r} is unset")
    return value


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True, slots=True)
class Atom:
    """Fluent or rigid-predicate atom; the interpretation resolves the name."""

    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Member:
    """Membership test ``name(args) in A`` against the current compound action.

    Legal only inside successor-state axioms and compound-precondition bodies.
    """

    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    items: tuple["Formula", ...]


@dataclass(frozen=True, slots=True)
class Or:
    items: tuple["Formula", ...]


@dataclass(frozen=True, slots=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    vars: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    vars: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True, slots=True)
class PossAtom:
    """Precondition reference on a simple action, usable in compound-Poss bodies."""

    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class PossRest:
    """Precondition reference on the remainder set captured by a compound pattern."""

    var: str


Formula = (
    Atom | Eq | Member | Not | And | Or | Implies | Exists | Forall | PossAtom | PossRest
)

TRUE: Formula = And(())
FALSE: Formula = Or(())


class Interpretation(Protocol):
    def holds(self, pred: str, args: tuple[str, ...]) -> bool: ...

    def quantifier_objects(self) -> tuple[str, ...]: ...


class PossResolver(Protocol):
    def simple(self, name: str, args: tuple[str, ...]) -> bool: ...

    def rest(self, var: str) -> bool: ...


def eval_formula(
    phi: Formula,
    interp: Interpretation,
    env: Mapping[str, str] | None = None,
    action=None,
    poss: PossResolver | None = None,
) -> bool:
    """Standard satisfaction over the interpretation.

    ``action`` is the compound action enabling ``Member`` atoms; its argument
    objects are added to the quantifier range so that effects may quantify over
    objects entering the world through the action itself.
    """
    env = dict(env) if env else {}
    domain: Optional[tuple[str, ...]] = None

    def objects() -> tuple[str, ...]:
        nonlocal domain
        if domain is None:
            base = list(interp.quantifier_objects())
            if action is not None:
                seen = set(base)
                for obj in action_objects(action):
                    if obj not in seen:
                        base.append(obj)
                        seen.add(obj)
            domain = tuple(base)
        return domain

    def rec(f: Formula, env: dict[str, str]) -> bool:
        if isinstance(f, Atom):
            return interp.holds(f.pred, tuple(ground_term(t, env) for t in f.args))
        if isinstance(f, Eq):
            return ground_term(f.left, env) == ground_term(f.right, env)
        if isinstance(f, Member):
            if action is None:
                raise MembershipOutsideActionContext(
                    f"membership test on {f.name!r} outside an action context"
                )
            args = tuple(ground_term(t, env) for t in f.args)
            return action_contains(action, f.name, args)
        if isinstance(f, Not):
            return not rec(f.body, env)
        if isinstance(f, And):
            return all(rec(g, env) for g in f.items)
        if isinstance(f, Or):
            return any(rec(g, env) for g in f.items)
        if isinstance(f, Implies):
            return (not rec(f.left, env)) or rec(f.right, env)
        if isinstance(f, Exists):
            return quantify(f.vars, f.body, env, any_mode=True)
        if isinstance(f, Forall):
            return quantify(f.vars, f.body, env, any_mode=False)
        if isinstance(f, PossAtom):
            if poss is None:
                raise SynthError("Poss atom outside a compound-precondition body")
            return poss.simple(f.name, tuple(ground_term(t, env) for t in f.args))
        if isinstance(f, PossRest):
            if poss is None:
                raise SynthError("Poss rest-set outside a compound-precondition body")
            return poss.rest(f.var)
        raise TypeError(f"not a formula node: {f!r}")

    def quantify(vars: tuple[str, ...], body: Formula, env: dict[str, str], any_mode: bool) -> bool:
        if not vars:
            return rec(body, env)
        head, rest = vars[0], vars[1:]
        for obj in objects():
            env2 = dict(env)
            env2[head] = obj
            value = quantify(rest, body, env2, any_mode)
            if value == any_mode:
                return any_mode
        return not any_mode

    return rec(phi, env)


def action_objects(action) -> tuple[str, ...]:
    out = []
    for member in action.sorted_members():
        for arg in member.args:
            if arg not in out:
                out.append(arg)
    return tuple(out)


def action_contains(action, name: str, args: tuple[str, ...]) -> bool:
    return any(m.name == name and m.args == args for m in action.members)


# ---------------------------------------------------------------------------
# Structural helpers


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, (Atom, Member, PossAtom)):
        return frozenset(t.name for t in phi.args if isinstance(t, Var))
    if isinstance(phi, Eq):
        return frozenset(t.name for t in (phi.left, phi.right) if isinstance(t, Var))
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out: frozenset[str] = frozenset()
        for g in phi.items:
            out |= free_vars(g)
        return out
    if isinstance(phi, Implies):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - frozenset(phi.vars)
    if isinstance(phi, PossRest):
        return frozenset()
    raise TypeError(f"not a formula node: {phi!r}")


def _fresh_name(base: str, taken: set[str]) -> str:
    i = 2
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def substitute(phi: Formula, binding: Mapping[str, Term]) -> Formula:
    """Capture-avoiding substitution of variables by terms."""

    def sub_term(t: Term) -> Term:
        if isinstance(t, Var) and t.name in binding:
            return binding[t.name]
        return t

    if isinstance(phi, Atom):
        return Atom(phi.pred, tuple(sub_term(t) for t in phi.args))
    if isinstance(phi, Member):
        return Member(phi.name, tuple(sub_term(t) for t in phi.args))
    if isinstance(phi, PossAtom):
        return PossAtom(phi.name, tuple(sub_term(t) for t in phi.args))
    if isinstance(phi, Eq):
        return Eq(sub_term(phi.left), sub_term(phi.right))
    if isinstance(phi, Not):
        return Not(substitute(phi.body, binding))
    if isinstance(phi, And):
        return And(tuple(substitute(g, binding) for g in phi.items))
    if isinstance(phi, Or):
        return Or(tuple(substitute(g, binding) for g in phi.items))
    if isinstance(phi, Implies):
        return Implies(substitute(phi.left, binding), substitute(phi.right, binding))
    if isinstance(phi, (Exists, Forall)):
        live = {v: t for v, t in binding.items() if v not in phi.vars}
        # Rename bound variables that would capture a substituted term.
        incoming = {
            t.name for t in live.values() if isinstance(t, Var)
        } | {t.name for t in live.values() if isinstance(t, Obj)}
        body = phi.body
        new_vars = list(phi.vars)
        taken = set(phi.vars) | incoming | set(live)
        for i, v in enumerate(new_vars):
            if v in incoming:
                fresh = _fresh_name(v, taken)
                taken.add(fresh)
                body = substitute(body, {v: Var(fresh)})
                new_vars[i] = fresh
        body = substitute(body, live)
        ctor = Exists if isinstance(phi, Exists) else Forall
        return ctor(tuple(new_vars), body)
    if isinstance(phi, PossRest):
        return phi
    raise TypeError(f"not a formula node: {phi!r}")


def rename_objects(phi: Formula, renaming: Mapping[str, str]) -> Formula:
    """Apply an object renaming to every constant occurring in the formula."""

    def ren(t: Term) -> Term:
        if isinstance(t, Obj) and t.name in renaming:
            return Obj(renaming[t.name])
        return t

    if isinstance(phi, Atom):
        return Atom(phi.pred, tuple(ren(t) for t in phi.args))
    if isinstance(phi, Member):
        return Member(phi.name, tuple(ren(t) for t in phi.args))
    if isinstance(phi, PossAtom):
        return PossAtom(phi.name, tuple(ren(t) for t in phi.args))
    if isinstance(phi, Eq):
        return Eq(ren(phi.left), ren(phi.right))
    if isinstance(phi, Not):
        return Not(rename_objects(phi.body, renaming))
    if isinstance(phi, And):
        return And(tuple(rename_objects(g, renaming) for g in phi.items))
    if isinstance(phi, Or):
        return Or(tuple(rename_objects(g, renaming) for g in phi.items))
    if isinstance(phi, Implies):
        return Implies(rename_objects(phi.left, renaming), rename_objects(phi.right, renaming))
    if isinstance(phi, Exists):
        return Exists(phi.vars, rename_objects(phi.body, renaming))
    if isinstance(phi, Forall):
        return Forall(phi.vars, rename_objects(phi.body, renaming))
    if isinstance(phi, PossRest):
        return phi
    raise TypeError(f"not a formula node: {phi!r}")


def print_formula(phi: Formula) -> str:
    """Deterministic s-expression rendering; inverse of the frontend grammar."""
    if phi == TRUE:
        return "(true)"
    if phi == FALSE:
        return "(false)"
    if isinstance(phi, Atom):
        return _app(phi.pred, phi.args)
    if isinstance(phi, Eq):
        return f"(= {_term(phi.left)} {_term(phi.right)})"
    if isinstance(phi, Member):
        return f"(member {_app(phi.name, phi.args)})"
    if isinstance(phi, PossAtom):
        return f"(poss-of {_app(phi.name, phi.args)})"
    if isinstance(phi, PossRest):
        return f"(poss-rest {phi.var})"
    if isinstance(phi, Not):
        return f"(not {print_formula(phi.body)})"
    if isinstance(phi, And):
        return "(and " + " ".join(print_formula(g) for g in phi.items) + ")"
    if isinstance(phi, Or):
        return "(or " + " ".join(print_formula(g) for g in phi.items) + ")"
    if isinstance(phi, Implies):
        return f"(implies {print_formula(phi.left)} {print_formula(phi.right)})"
    if isinstance(phi, Exists):
        return f"(exists ({' '.join(phi.vars)}) {print_formula(phi.body)})"
    if isinstance(phi, Forall):
        return f"(forall ({' '.join(phi.vars)}) {print_formula(phi.body)})"
    raise TypeError(f"not a formula node: {phi!r}")


def _term(t: Term) -> str:
    return t.name


def _app(name: str, args: Sequence[Term]) -> str:
    if not args:
        return f"({name})"
    return f"({name} " + " ".join(_term(t) for t in args) + ")"


def conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    return items[0] if len(items) == 1 else And(items)


def disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    return items[0] if len(items) == 1 else Or(items)
