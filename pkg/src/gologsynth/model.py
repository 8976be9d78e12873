"""Object domains, compound actions, basic action theories and progression.

A world state is the finite interpretation of the situation-dependent fluents
at the current situation; progression through successor-state axioms keeps it
up to date, so situations never need to be materialised as terms.  All values
here are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from . import fol
from .errors import ArityMismatch, SynthError, UndeclaredAction, UndeclaredFluent

ANON_PREFIX = "_g"

RESERVED_FLUENTS = frozenset(
    {"turnS", "turnT", "turn", "progT", "progS", "finalT", "finalS", "envT", "envS", "obsEq"}
)


def is_anonymous(name: str) -> bool:
    return name.startswith(ANON_PREFIX)


def anon_object(index: int) -> str:
    return f"{ANON_PREFIX}{index}"


def fresh_objects(count: int, in_use: frozenset[str] | set[str]) -> tuple[str, ...]:
    """The first ``count`` reservoir objects not currently in use."""
    out = []
    i = 0
    while len(out) < count:
        candidate = anon_object(i)
        if candidate not in in_use:
            out.append(candidate)
        i += 1
    return tuple(out)


@dataclass(frozen=True, slots=True)
class ObjectDomain:
    """Named constants plus a reservoir of interchangeable fresh objects.

    ``anonymous_pool_size`` caps how many fresh objects a single pick
    instantiation may draw; the reservoir itself is unbounded.
    """

    named_constants: tuple[str, ...]
    anonymous_pool_size: int = 1

    def __post_init__(self):
        if len(set(self.named_constants)) != len(self.named_constants):
            raise SynthError("named constants must be pairwise distinct")
        for c in self.named_constants:
            if is_anonymous(c):
                raise SynthError(f"constant {c!r} collides with the anonymous-object prefix")

    @property
    def named(self) -> frozenset[str]:
        return frozenset(self.named_constants)


@dataclass(frozen=True, slots=True)
class FluentSchema:
    name: str
    arity: int
    situation_dependent: bool = True
    observable: bool = False

    def __post_init__(self):
        if self.name in RESERVED_FLUENTS:
            raise SynthError(f"fluent name {self.name!r} is reserved")


@dataclass(frozen=True, slots=True)
class SimpleAction:
    """A ground simple action; for system actions the last argument is the
    resource index."""

    name: str
    args: tuple[str, ...]

    def __repr__(self):
        return f"{self.name}({','.join(self.args)})"


class CompoundAction:
    """A finite, nonempty set of simple actions executed simultaneously."""

    __slots__ = ("members", "_hash", "_sorted")

    def __init__(self, members: Iterable[SimpleAction]):
        ms = frozenset(members)
        if not ms:
            raise SynthError("compound actions must be nonempty")
        object.__setattr__(self, "members", ms)
        object.__setattr__(self, "_sorted", tuple(sorted(ms, key=lambda a: (a.name, a.args))))
        object.__setattr__(self, "_hash", hash(ms))

    def sorted_members(self) -> tuple[SimpleAction, ...]:
        return self._sorted

    def objects(self) -> tuple[str, ...]:
        return fol.action_objects(self)

    def __contains__(self, a: SimpleAction) -> bool:
        return a in self.members

    def __iter__(self):
        return iter(self._sorted)

    def __len__(self):
        return len(self.members)

    def __eq__(self, other):
        return isinstance(other, CompoundAction) and self.members == other.members

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "{" + ",".join(repr(a) for a in self._sorted) + "}"


def compound(*actions: SimpleAction) -> CompoundAction:
    return CompoundAction(actions)


@dataclass(frozen=True, slots=True)
class ActionSchema:
    name: str
    params: tuple[str, ...]
    sorts: tuple[Optional[str], ...] = ()

    def __post_init__(self):
        if self.sorts and len(self.sorts) != len(self.params):
            raise ArityMismatch(f"action {self.name!r}: sorts do not match parameters")

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True, slots=True)
class SuccessorStateAxiom:
    """The positive/negative effect split for one fluent.

    ``pos``/``neg`` are formulas over the fluent's parameters whose atoms may
    include membership tests against the executed compound action.  Fluents
    with no deletion clause use the constant false for ``neg``.
    """

    fluent: str
    params: tuple[str, ...]
    pos: fol.Formula
    neg: fol.Formula = fol.FALSE


@dataclass(frozen=True, slots=True)
class ActionPattern:
    name: str
    args: tuple[fol.Term, ...]


@dataclass(frozen=True, slots=True)
class CompoundPossRule:
    """First-match precondition override for compound actions.

    The pattern selects distinct members of the compound; ``rest_var``, when
    present, captures the remaining (possibly empty) members for recursive
    precondition tests via ``PossRest``.  Rules are assumed to only restrict
    the default member-wise conjunction, never weaken it.
    """

    patterns: tuple[ActionPattern, ...]
    rest_var: Optional[str]
    body: fol.Formula


# ---------------------------------------------------------------------------
# World states


class WorldState:
    """Finite interpretation of the fluents at the current situation."""

    __slots__ = ("domain", "extensions", "rigid_extensions", "_hash", "_adom", "_qobjs")

    def __init__(
        self,
        domain: ObjectDomain,
        extensions: Mapping[str, Iterable[tuple[str, ...]]],
        rigid_extensions: Mapping[str, Iterable[tuple[str, ...]]] | None = None,
    ):
        ext = {}
        for name, tuples in extensions.items():
            fs = frozenset(tuple(t) for t in tuples)
            if fs:
                ext[name] = fs
        rig = {}
        if rigid_extensions:
            for name, tuples in rigid_extensions.items():
                fs = frozenset(tuple(t) for t in tuples)
                if fs:
                    rig[name] = fs
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "extensions", ext)
        object.__setattr__(self, "rigid_extensions", rig)
        adom = set()
        for fs in ext.values():
            for t in fs:
                adom.update(t)
        object.__setattr__(self, "_adom", frozenset(adom))
        object.__setattr__(
            self, "_hash", hash(frozenset((k, v) for k, v in ext.items()))
        )
        object.__setattr__(self, "_qobjs", None)

    def holds(self, pred: str, args: tuple[str, ...]) -> bool:
        ext = self.extensions.get(pred)
        if ext is not None:
            return args in ext
        rig = self.rigid_extensions.get(pred)
        if rig is not None:
            return args in rig
        return False

    def extension(self, fluent: str) -> frozenset[tuple[str, ...]]:
        return self.extensions.get(fluent, frozenset())

    def active_domain(self) -> frozenset[str]:
        """Objects occurring in some situation-dependent extension tuple."""
        return self._adom

    def quantifier_objects(self) -> tuple[str, ...]:
        cached = self._qobjs
        if cached is None:
            cached = tuple(sorted(self.domain.named | self._adom))
            object.__setattr__(self, "_qobjs", cached)
        return cached

    def with_extensions(self, extensions: Mapping[str, frozenset]) -> "WorldState":
        return WorldState(self.domain, extensions, self.rigid_extensions)

    def rename(self, renaming: Mapping[str, str]) -> "WorldState":
        """Apply an object renaming to every extension tuple."""
        def ren(t):
            return tuple(renaming.get(o, o) for o in t)

        return WorldState(
            self.domain,
            {f: frozenset(ren(t) for t in ts) for f, ts in self.extensions.items()},
            {f: frozenset(ren(t) for t in ts) for f, ts in self.rigid_extensions.items()},
        )

    def __eq__(self, other):
        return (
            isinstance(other, WorldState)
            and self.extensions == other.extensions
            and self.rigid_extensions == other.rigid_extensions
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        parts = []
        for f in sorted(self.extensions):
            for t in sorted(self.extensions[f]):
                parts.append(f"{f}({','.join(t)})")
        return "{" + " ".join(parts) + "}"


def active_domain(w: WorldState) -> frozenset[str]:
    return w.active_domain()


# ---------------------------------------------------------------------------
# Basic action theories


class _TheoryPossResolver:
    __slots__ = ("theory", "world", "bound_rests")

    def __init__(self, theory, world, bound_rests):
        self.theory = theory
        self.world = world
        self.bound_rests = bound_rests

    def simple(self, name, args):
        return self.theory.poss_simple(SimpleAction(name, args), self.world)

    def rest(self, var):
        rest = self.bound_rests[var]
        if not rest:
            return True
        return self.theory.poss_compound(CompoundAction(rest), self.world)


class BasicActionTheory:
    """Action schemas, precondition axioms and successor-state axioms over an
    initial world state with complete information."""

    def __init__(
        self,
        domain: ObjectDomain,
        fluents: Sequence[FluentSchema],
        rigid_predicates: Mapping[str, int],
        actions: Sequence[ActionSchema],
        poss_axioms: Mapping[str, fol.Formula],
        ssas: Sequence[SuccessorStateAxiom],
        initial: WorldState,
        compound_poss: Sequence[CompoundPossRule] = (),
    ):
        self.domain = domain
        self.fluents = {f.name: f for f in fluents}
        self.rigid_predicates = dict(rigid_predicates)
        self.actions = {a.name: a for a in actions}
        # Free variables beyond the declared parameters are read as
        # existentially quantified, matching the usual axiom-writing style.
        self.poss_axioms = {
            name: _close_over(phi, self.actions[name].params if name in self.actions else ())
            for name, phi in poss_axioms.items()
        }
        self.ssas = {
            s.fluent: SuccessorStateAxiom(
                s.fluent,
                s.params,
                _close_over(s.pos, s.params),
                _close_over(s.neg, s.params),
            )
            for s in ssas
        }
        self.initial = initial
        self.compound_poss = tuple(compound_poss)
        self._validate()
        # Per-fluent set of action names mentioned by membership atoms, for the
        # frame fast path in progression.
        self._ssa_triggers = {
            name: _membership_names(ssa.pos) | _membership_names(ssa.neg)
            for name, ssa in self.ssas.items()
        }
        self._ssa_clauses = {
            name: _positive_clauses(ssa.pos) for name, ssa in self.ssas.items()
        }

    def _validate(self):
        for name, f in self.fluents.items():
            if name in self.rigid_predicates:
                raise SynthError(f"{name!r} declared both fluent and rigid")
        for name in self.ssas:
            if name not in self.fluents:
                raise UndeclaredFluent(f"successor-state axiom for undeclared fluent {name!r}")
        for name, f in self.fluents.items():
            if f.situation_dependent and name not in self.ssas:
                raise SynthError(f"fluent {name!r} lacks a successor-state axiom")
        for name in self.poss_axioms:
            if name not in self.actions:
                raise UndeclaredAction(f"precondition axiom for undeclared action {name!r}")
        for name in self.actions:
            if name not in self.poss_axioms:
                raise SynthError(f"action {name!r} lacks a precondition axiom")

    # -- preconditions ------------------------------------------------------

    def check_declared(self, a: SimpleAction):
        schema = self.actions.get(a.name)
        if schema is None:
            raise UndeclaredAction(f"action {a.name!r} is not declared")
        if schema.arity != len(a.args):
            raise ArityMismatch(
                f"action {a.name!r} takes {schema.arity} arguments, got {len(a.args)}"
            )
        return schema

    def poss_simple(self, a: SimpleAction, w: WorldState) -> bool:
        schema = self.check_declared(a)
        axiom = self.poss_axioms[a.name]
        env = dict(zip(schema.params, a.args))
        return fol.eval_formula(axiom, w, env)

    def poss_compound(self, A: CompoundAction, w: WorldState) -> bool:
        """First matching compound rule wins; the default is the conjunction of
        the members' preconditions."""
        for a in A:
            self.check_declared(a)
        for rule in self.compound_poss:
            matches = _match_rule(rule, A)
            if matches:
                # Disjunction over unifications of the matching rule; a
                # consistent axiom set gives every unification the same value.
                for binding, rest in matches:
                    resolver = _TheoryPossResolver(self, w, {rule.rest_var: rest} if rule.rest_var else {})
                    if fol.eval_formula(rule.body, w, binding, action=A, poss=resolver):
                        return True
                return False
        return all(self.poss_simple(a, w) for a in A)

    # -- progression --------------------------------------------------------

    def progress(self, A: CompoundAction, w: WorldState) -> WorldState:
        """Progress the world through one compound action.

        The caller is responsible for having checked ``poss_compound``; this
        function only applies the successor-state axioms.  For each fluent, a
        tuple holds afterwards iff its positive effect condition holds now, or
        it held before and its negative effect condition does not hold now.
        New tuples are found by unifying the action's members against the
        membership atoms of the positive effect clauses (range restriction:
        a new tuple's objects must come from the named constants, the current
        active domain, or the action's arguments).
        """
        for a in A:
            self.check_declared(a)
        universe = None
        new_extensions = dict(w.extensions)
        action_names = {a.name for a in A}
        for fname, ssa in self.ssas.items():
            if not (self._ssa_triggers[fname] & action_names):
                continue  # frame: unaffected by this compound action
            old = w.extension(fname)
            candidates = set(old)
            clauses = self._ssa_clauses[fname]
            need_full = False
            if clauses is None:
                need_full = ssa.pos != fol.FALSE
            else:
                for clause_vars, member_atoms, has_trigger in clauses:
                    if not has_trigger:
                        need_full = need_full or True
                        continue
                    for atom in member_atoms:
                        for a in A:
                            if a.name != atom.name or len(a.args) != len(atom.args):
                                continue
                            binding = _unify_args(atom.args, a.args)
                            if binding is None:
                                continue
                            partial = tuple(binding.get(p) for p in ssa.params)
                            if all(v is not None for v in partial):
                                candidates.add(partial)
                            else:
                                if universe is None:
                                    universe = _progress_universe(w, A)
                                holes = [i for i, v in enumerate(partial) if v is None]
                                for fill in itertools.product(universe, repeat=len(holes)):
                                    t = list(partial)
                                    for i, v in zip(holes, fill):
                                        t[i] = v
                                    candidates.add(tuple(t))
            if need_full:
                if universe is None:
                    universe = _progress_universe(w, A)
                candidates.update(itertools.product(universe, repeat=len(ssa.params)))
            new = set()
            for t in candidates:
                env = dict(zip(ssa.params, t))
                if fol.eval_formula(ssa.pos, w, env, action=A):
                    new.add(t)
                elif t in old and not fol.eval_formula(ssa.neg, w, env, action=A):
                    new.add(t)
            if new:
                new_extensions[fname] = frozenset(new)
            else:
                new_extensions.pop(fname, None)
        return w.with_extensions(new_extensions)


def _close_over(phi: fol.Formula, params: Sequence[str]) -> fol.Formula:
    extra = tuple(sorted(fol.free_vars(phi) - set(params)))
    if extra:
        return fol.Exists(extra, phi)
    return phi


def _progress_universe(w: WorldState, A: CompoundAction) -> tuple[str, ...]:
    objs = list(w.quantifier_objects())
    seen = set(objs)
    for o in A.objects():
        if o not in seen:
            objs.append(o)
            seen.add(o)
    return tuple(objs)


def _membership_names(phi: fol.Formula) -> frozenset[str]:
    if isinstance(phi, fol.Member):
        return frozenset({phi.name})
    if isinstance(phi, fol.Not):
        return _membership_names(phi.body)
    if isinstance(phi, (fol.And, fol.Or)):
        out = frozenset()
        for g in phi.items:
            out |= _membership_names(g)
        return out
    if isinstance(phi, fol.Implies):
        return _membership_names(phi.left) | _membership_names(phi.right)
    if isinstance(phi, (fol.Exists, fol.Forall)):
        return _membership_names(phi.body)
    return frozenset()


def _positive_clauses(pos: fol.Formula):
    """Split a positive effect condition into trigger-bearing clauses.

    Returns a list of (quantified vars, positive membership atoms, has_trigger)
    per top-level disjunct, or None when the formula is the constant false.
    A disjunct without a positive membership atom forces full-universe
    candidate enumeration for exactness.
    """
    if pos == fol.FALSE:
        return None
    disjuncts = list(pos.items) if isinstance(pos, fol.Or) and pos.items else [pos]
    clauses = []
    for d in disjuncts:
        vars: list[str] = []
        body = d
        while isinstance(body, fol.Exists):
            vars.extend(body.vars)
            body = body.body
        conjuncts = list(body.items) if isinstance(body, fol.And) else [body]
        members = [c for c in conjuncts if isinstance(c, fol.Member)]
        clauses.append((tuple(vars), tuple(members), bool(members)))
    return clauses


def _unify_args(pattern_args: tuple[fol.Term, ...], args: tuple[str, ...]):
    binding: dict[str, str] = {}
    for p, v in zip(pattern_args, args):
        if isinstance(p, fol.Obj):
            if p.name != v:
                return None
        else:
            bound = binding.get(p.name)
            if bound is None:
                binding[p.name] = v
            elif bound != v:
                return None
    return binding


def _match_rule(rule: CompoundPossRule, A: CompoundAction):
    """All ways to assign the rule's patterns to distinct members of A."""
    members = A.sorted_members()
    out = []

    def assign(i: int, used: frozenset, binding: dict):
        if i == len(rule.patterns):
            rest = frozenset(m for m in members if m not in used)
            if rest and rule.rest_var is None:
                return
            out.append((dict(binding), rest))
            return
        pat = rule.patterns[i]
        for m in members:
            if m in used or m.name != pat.name or len(m.args) != len(pat.args):
                continue
            extended = dict(binding)
            ok = True
            for p, v in zip(pat.args, m.args):
                if isinstance(p, fol.Obj):
                    if p.name != v:
                        ok = False
                        break
                else:
                    bound = extended.get(p.name)
                    if bound is None:
                        extended[p.name] = v
                    elif bound != v:
                        ok = False
                        break
            if ok:
                assign(i + 1, used | {m}, extended)

    assign(0, frozenset(), {})
    # Deduplicate identical (binding, rest) pairs arising from symmetric members.
    seen = set()
    unique = []
    for binding, rest in out:
        key = (tuple(sorted(binding.items())), rest)
        if key not in seen:
            seen.add(key)
            unique.append((binding, rest))
    return unique
