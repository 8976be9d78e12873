"""Program terms, single-step semantics, syntactic closure and execution search.

A program is represented as the pair of a *counter* (the remaining program
term, which never absorbs pick choices) and an *environment* assigning each
pick variable an object or UNSET.  Stepping through a pick writes the chosen
value into the environment; the counter stays inside the syntactic closure of
the root program.

Two stepping modes exist: the normal mode checks each compound action's
precondition as it fires, while the synchronized mode (inside ``Sync``, the
joint-execution construct) defers the check so that the union of the
components' actions is tested once at the outermost synchronization point.
Tests evaluate on the current world in both modes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from . import fol
from .errors import UnresolvedPickVariable
from .model import (
    BasicActionTheory,
    CompoundAction,
    SimpleAction,
    WorldState,
    fresh_objects,
)

# ---------------------------------------------------------------------------
# Abstract syntax


@dataclass(frozen=True, slots=True)
class ActionTerm:
    name: str
    args: tuple[fol.Term, ...]


@dataclass(frozen=True, slots=True)
class Act:
    """A compound action term; a singleton behaves exactly like its member."""

    actions: tuple[ActionTerm, ...]


@dataclass(frozen=True, slots=True)
class Test:
    cond: fol.Formula


@dataclass(frozen=True, slots=True)
class Seq:
    left: "ProgramTerm"
    right: "ProgramTerm"


@dataclass(frozen=True, slots=True)
class Choice:
    left: "ProgramTerm"
    right: "ProgramTerm"


@dataclass(frozen=True, slots=True)
class Pick:
    var: str
    body: "ProgramTerm"


@dataclass(frozen=True, slots=True)
class Star:
    body: "ProgramTerm"


@dataclass(frozen=True, slots=True)
class Conc:
    """Interleaved concurrency: one component moves per step."""

    left: "ProgramTerm"
    right: "ProgramTerm"


@dataclass(frozen=True, slots=True)
class Sync:
    """Synchronized concurrency: both components move, their actions unioned,
    legality checked once on the union."""

    left: "ProgramTerm"
    right: "ProgramTerm"


ProgramTerm = Act | Test | Seq | Choice | Pick | Star | Conc | Sync

TRUE_PROG: ProgramTerm = Test(fol.TRUE)


def seq(*parts: ProgramTerm) -> ProgramTerm:
    if not parts:
        return TRUE_PROG
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def choice(*parts: ProgramTerm) -> ProgramTerm:
    if not parts:
        raise ValueError("choice of nothing")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Choice(p, out)
    return out


def sync(*parts: ProgramTerm) -> ProgramTerm:
    if not parts:
        raise ValueError("sync of nothing")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Sync(p, out)
    return out


def conc(*parts: ProgramTerm) -> ProgramTerm:
    if not parts:
        raise ValueError("conc of nothing")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Conc(p, out)
    return out


def if_then_else(cond: fol.Formula, then: ProgramTerm, els: ProgramTerm) -> ProgramTerm:
    return Choice(Seq(Test(cond), then), Seq(Test(fol.Not(cond)), els))


def while_do(cond: fol.Formula, body: ProgramTerm) -> ProgramTerm:
    return Seq(Star(Seq(Test(cond), body)), Test(fol.Not(cond)))


def act1(name: str, *args: fol.Term | str) -> ProgramTerm:
    terms = tuple(fol.Obj(a) if isinstance(a, str) else a for a in args)
    return Act((ActionTerm(name, terms),))


def pick_vars(delta: ProgramTerm) -> tuple[str, ...]:
    """Pick variables in syntactic order (assumed renamed apart)."""
    out: list[str] = []

    def walk(d: ProgramTerm):
        if isinstance(d, Pick):
            out.append(d.var)
            walk(d.body)
        elif isinstance(d, (Seq, Choice, Conc, Sync)):
            walk(d.left)
            walk(d.right)
        elif isinstance(d, Star):
            walk(d.body)

    walk(delta)
    return tuple(out)


def rename_vars(delta: ProgramTerm, renaming: Mapping[str, str]) -> ProgramTerm:
    """Consistently rename variables in action terms and tests."""
    if not renaming:
        return delta

    def term(t: fol.Term) -> fol.Term:
        if isinstance(t, fol.Var) and t.name in renaming:
            return fol.Var(renaming[t.name])
        return t

    if isinstance(delta, Act):
        return Act(tuple(ActionTerm(a.name, tuple(term(t) for t in a.args)) for a in delta.actions))
    if isinstance(delta, Test):
        return Test(fol.substitute(delta.cond, {v: fol.Var(n) for v, n in renaming.items()}))
    if isinstance(delta, Seq):
        return Seq(rename_vars(delta.left, renaming), rename_vars(delta.right, renaming))
    if isinstance(delta, Choice):
        return Choice(rename_vars(delta.left, renaming), rename_vars(delta.right, renaming))
    if isinstance(delta, Pick):
        new = renaming.get(delta.var, delta.var)
        return Pick(new, rename_vars(delta.body, renaming))
    if isinstance(delta, Star):
        return Star(rename_vars(delta.body, renaming))
    if isinstance(delta, Conc):
        return Conc(rename_vars(delta.left, renaming), rename_vars(delta.right, renaming))
    if isinstance(delta, Sync):
        return Sync(rename_vars(delta.left, renaming), rename_vars(delta.right, renaming))
    raise TypeError(f"not a program term: {delta!r}")


def rename_apart(delta: ProgramTerm) -> ProgramTerm:
    """Rename duplicate pick variables so every pick binds a distinct slot."""
    seen: set[str] = set()

    def walk(d: ProgramTerm) -> ProgramTerm:
        if isinstance(d, Pick):
            var = d.var
            body = d.body
            if var in seen:
                i = 2
                while f"{var}@{i}" in seen:
                    i += 1
                fresh = f"{var}@{i}"
                body = rename_vars(body, {var: fresh})
                var = fresh
            seen.add(var)
            return Pick(var, walk(body))
        if isinstance(d, Seq):
            return Seq(walk(d.left), walk(d.right))
        if isinstance(d, Choice):
            return Choice(walk(d.left), walk(d.right))
        if isinstance(d, Conc):
            return Conc(walk(d.left), walk(d.right))
        if isinstance(d, Sync):
            return Sync(walk(d.left), walk(d.right))
        if isinstance(d, Star):
            return Star(walk(d.body))
        return d

    return walk(delta)


def print_program(delta: ProgramTerm) -> str:
    if delta == TRUE_PROG:
        return "(nil)"
    if isinstance(delta, Act):
        if len(delta.actions) == 1:
            a = delta.actions[0]
            return "(act " + a.name + "".join(" " + t.name for t in a.args) + ")"
        inner = " ".join(
            "(" + a.name + "".join(" " + t.name for t in a.args) + ")" for a in delta.actions
        )
        return f"(cact {inner})"
    if isinstance(delta, Test):
        return f"(test {fol.print_formula(delta.cond)})"
    if isinstance(delta, Seq):
        return f"(seq {print_program(delta.left)} {print_program(delta.right)})"
    if isinstance(delta, Choice):
        return f"(choice {print_program(delta.left)} {print_program(delta.right)})"
    if isinstance(delta, Pick):
        return f"(pick ({delta.var}) {print_program(delta.body)})"
    if isinstance(delta, Star):
        return f"(star {print_program(delta.body)})"
    if isinstance(delta, Conc):
        return f"(conc {print_program(delta.left)} {print_program(delta.right)})"
    if isinstance(delta, Sync):
        return f"(sync {print_program(delta.left)} {print_program(delta.right)})"
    raise TypeError(f"not a program term: {delta!r}")


# ---------------------------------------------------------------------------
# Environments and configurations


class Environment:
    """Ordered assignment of the root program's pick variables; a slot is an
    object name or None for UNSET."""

    __slots__ = ("slots", "_hash")

    def __init__(self, slots: Iterable[tuple[str, Optional[str]]]):
        object.__setattr__(self, "slots", tuple(slots))
        object.__setattr__(self, "_hash", hash(self.slots))

    @classmethod
    def for_vars(cls, names: Iterable[str]) -> "Environment":
        return cls((n, None) for n in names)

    def get(self, name: str) -> Optional[str]:
        for n, v in self.slots:
            if n == name:
                return v
        raise KeyError(name)

    def set(self, name: str, value: str) -> "Environment":
        return Environment((n, value if n == name else v) for n, v in self.slots)

    def bound(self) -> dict[str, str]:
        return {n: v for n, v in self.slots if v is not None}

    def values(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.slots if v is not None)

    def rename(self, renaming: Mapping[str, str]) -> "Environment":
        return Environment(
            (n, renaming.get(v, v) if v is not None else None) for n, v in self.slots
        )

    def __eq__(self, other):
        return isinstance(other, Environment) and self.slots == other.slots

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "<" + ",".join(f"{n}={v if v is not None else '?'}" for n, v in self.slots) + ">"


EMPTY_ENV = Environment(())


@dataclass(frozen=True, slots=True)
class Configuration:
    counter: ProgramTerm
    env: Environment
    world: WorldState


# ---------------------------------------------------------------------------
# Single-step semantics

CHECKED = 0
SYNC = 1

TestEval = Callable[[fol.Formula, dict], bool]


class TransContext:
    __slots__ = ("theory", "world", "test_eval", "in_use", "_candidates")

    def __init__(
        self,
        theory: BasicActionTheory,
        world: WorldState,
        test_eval: TestEval | None = None,
        in_use: Iterable[str] = (),
    ):
        self.theory = theory
        self.world = world
        self.test_eval = test_eval or (lambda phi, env: fol.eval_formula(phi, world, env))
        self.in_use = frozenset(in_use)
        self._candidates: dict[Environment, tuple[str, ...]] = {}

    def candidates(self, env: Environment) -> tuple[str, ...]:
        """Pick instantiation range: named constants, the active domain, any
        objects already chosen in the environment or otherwise in play (the
        ``in_use`` set a caller supplies, e.g. the whole arena state's
        objects), and a capped number of fresh anonymous objects."""
        cached = self._candidates.get(env)
        if cached is not None:
            return cached
        base = (
            set(self.theory.domain.named)
            | self.world.active_domain()
            | set(env.values())
            | self.in_use
        )
        fresh = fresh_objects(self.theory.domain.anonymous_pool_size, base)
        out = tuple(sorted(base)) + fresh
        self._candidates[env] = out
        return out


def _ground_act(node: Act, env: Environment) -> CompoundAction:
    members = []
    for a in node.actions:
        args = []
        for t in a.args:
            if isinstance(t, fol.Obj):
                args.append(t.name)
            else:
                try:
                    v = env.get(t.name)
                except KeyError:
                    raise UnresolvedPickVariable(
                        f"variable {t.name!r} is not a pick slot of this program"
                    ) from None
                if v is None:
                    raise UnresolvedPickVariable(f"pick variable {t.name!r} is unset")
                args.append(v)
        members.append(SimpleAction(a.name, tuple(args)))
    return CompoundAction(members)


def _final(delta: ProgramTerm, env: Environment, ctx: TransContext) -> bool:
    if isinstance(delta, Act):
        return False
    if isinstance(delta, Test):
        return ctx.test_eval(delta.cond, env.bound())
    if isinstance(delta, Seq):
        return _final(delta.left, env, ctx) and _final(delta.right, env, ctx)
    if isinstance(delta, Choice):
        return _final(delta.left, env, ctx) or _final(delta.right, env, ctx)
    if isinstance(delta, Pick):
        return any(
            _final(delta.body, env.set(delta.var, v), ctx) for v in ctx.candidates(env)
        )
    if isinstance(delta, Star):
        return True
    if isinstance(delta, (Conc, Sync)):
        return _final(delta.left, env, ctx) and _final(delta.right, env, ctx)
    raise TypeError(f"not a program term: {delta!r}")


def _steps(delta: ProgramTerm, env: Environment, mode: int, ctx: TransContext):
    """Yield (compound action, residual counter, environment) triples.

    In SYNC mode action nodes skip the compound precondition (it is checked on
    the union at the outermost synchronization); members are still pruned by
    their simple preconditions, which is sound because compound axioms only
    restrict the member-wise default.
    """
    if isinstance(delta, Act):
        try:
            A = _ground_act(delta, env)
        except UnresolvedPickVariable:
            raise
        if mode == CHECKED:
            if ctx.theory.poss_compound(A, ctx.world):
                yield (A, TRUE_PROG, env)
        else:
            if all(ctx.theory.poss_simple(a, ctx.world) for a in A):
                yield (A, TRUE_PROG, env)
        return
    if isinstance(delta, Test):
        return
    if isinstance(delta, Seq):
        for A, left2, env2 in _steps(delta.left, env, mode, ctx):
            yield (A, Seq(left2, delta.right), env2)
        if _final(delta.left, env, ctx):
            yield from _steps(delta.right, env, mode, ctx)
        return
    if isinstance(delta, Choice):
        yield from _steps(delta.left, env, mode, ctx)
        yield from _steps(delta.right, env, mode, ctx)
        return
    if isinstance(delta, Pick):
        for v in ctx.candidates(env):
            yield from _steps(delta.body, env.set(delta.var, v), mode, ctx)
        return
    if isinstance(delta, Star):
        for A, body2, env2 in _steps(delta.body, env, mode, ctx):
            yield (A, Seq(body2, delta), env2)
        return
    if isinstance(delta, Conc):
        for A, left2, env2 in _steps(delta.left, env, mode, ctx):
            yield (A, Conc(left2, delta.right), env2)
        for A, right2, env2 in _steps(delta.right, env, mode, ctx):
            yield (A, Conc(delta.left, right2), env2)
        return
    if isinstance(delta, Sync):
        for A1, left2, env1 in _steps(delta.left, env, SYNC, ctx):
            for A2, right2, env2 in _steps(delta.right, env1, SYNC, ctx):
                union = CompoundAction(A1.members | A2.members)
                if mode == CHECKED and not ctx.theory.poss_compound(union, ctx.world):
                    continue
                yield (union, Sync(left2, right2), env2)
        return
    raise TypeError(f"not a program term: {delta!r}")


def step_key(A: CompoundAction, counter: ProgramTerm, env: Environment) -> tuple:
    return (repr(A), print_program(counter), env.slots)


def raw_steps(
    c: Configuration,
    theory: BasicActionTheory,
    *,
    test_eval: TestEval | None = None,
    in_use: Iterable[str] = (),
) -> tuple[tuple[CompoundAction, ProgramTerm, Environment], ...]:
    """One-step successors before world progression, deduplicated and sorted."""
    ctx = TransContext(theory, c.world, test_eval, in_use)
    seen = {}
    for A, counter, env in _steps(c.counter, c.env, CHECKED, ctx):
        seen.setdefault(step_key(A, counter, env), (A, counter, env))
    return tuple(seen[k] for k in sorted(seen))


def trans(
    c: Configuration,
    theory: BasicActionTheory,
    *,
    test_eval: TestEval | None = None,
    in_use: Iterable[str] = (),
) -> tuple[tuple[CompoundAction, Configuration], ...]:
    """The exact set of one-step successors with progressed worlds."""
    out = []
    for A, counter, env in raw_steps(c, theory, test_eval=test_eval, in_use=in_use):
        world = theory.progress(A, c.world)
        out.append((A, Configuration(counter, env, world)))
    return tuple(out)


def final(c: Configuration, theory: BasicActionTheory, *, test_eval: TestEval | None = None) -> bool:
    ctx = TransContext(theory, c.world, test_eval)
    return _final(c.counter, c.env, ctx)


# ---------------------------------------------------------------------------
# Syntactic closure


def syntactic_closure(delta: ProgramTerm) -> frozenset[ProgramTerm]:
    """The finite set of counters reachable from the program, closed under the
    per-construct rules plus action and test residuals."""
    memo: dict[ProgramTerm, frozenset[ProgramTerm]] = {}

    def close(d: ProgramTerm) -> frozenset[ProgramTerm]:
        hit = memo.get(d)
        if hit is not None:
            return hit
        if isinstance(d, Act):
            out = frozenset({d, TRUE_PROG})
        elif isinstance(d, Test):
            out = frozenset({d})
        elif isinstance(d, Seq):
            out = (
                frozenset({d})
                | frozenset(Seq(x, d.right) for x in close(d.left))
                | close(d.right)
            )
        elif isinstance(d, Choice):
            out = frozenset({d}) | close(d.left) | close(d.right)
        elif isinstance(d, Pick):
            out = frozenset({d}) | close(d.body)
        elif isinstance(d, Star):
            out = frozenset({d}) | frozenset(Seq(x, d) for x in close(d.body))
        elif isinstance(d, Conc):
            out = frozenset({d}) | frozenset(
                Conc(x, y) for x in close(d.left) for y in close(d.right)
            )
        elif isinstance(d, Sync):
            out = frozenset({d}) | frozenset(
                Sync(x, y) for x in close(d.left) for y in close(d.right)
            )
        else:
            raise TypeError(f"not a program term: {d!r}")
        memo[d] = out
        return out

    return close(delta)


def closure_bound(delta: ProgramTerm) -> int:
    """A structural upper bound on the closure size."""
    if isinstance(delta, Act):
        return 2
    if isinstance(delta, Test):
        return 1
    if isinstance(delta, Seq):
        return 1 + closure_bound(delta.left) + closure_bound(delta.right)
    if isinstance(delta, Choice):
        return 1 + closure_bound(delta.left) + closure_bound(delta.right)
    if isinstance(delta, Pick):
        return 1 + closure_bound(delta.body)
    if isinstance(delta, Star):
        return 1 + closure_bound(delta.body)
    if isinstance(delta, (Conc, Sync)):
        return 1 + closure_bound(delta.left) * closure_bound(delta.right)
    raise TypeError(f"not a program term: {delta!r}")


# ---------------------------------------------------------------------------
# Complete-execution search


def do_reachable(
    theory: BasicActionTheory,
    delta: ProgramTerm,
    env: Environment,
    world: WorldState,
    *,
    test_eval: TestEval | None = None,
    max_configs: int = 100_000,
) -> frozenset[WorldState]:
    """Worlds reachable by a complete execution of the program.

    Bounded breadth-first search over configurations with a visited set; an
    empty result means no complete execution exists.
    """
    start = Configuration(delta, env, world)
    seen = {start}
    frontier = [start]
    out = set()
    while frontier:
        cfg = frontier.pop()
        if final(cfg, theory, test_eval=test_eval):
            out.add(cfg.world)
        for _, nxt in trans(cfg, theory, test_eval=test_eval):
            if nxt not in seen:
                if len(seen) >= max_configs:
                    raise RuntimeError("execution search exceeded the configuration cap")
                seen.add(nxt)
                frontier.append(nxt)
    return frozenset(out)
