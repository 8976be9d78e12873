"""Action and observation mapping rules between the recipe and system theories.

Target steps may test fluents marked observable; those atoms are resolved by
rewriting through their defining formulas against the system world, while
everything else evaluates on the target world.  Mixed tests are handled
atom by atom.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from . import fol, program
from .errors import NoMappingForAction, UnmappedObservableFluent
from .model import BasicActionTheory, CompoundAction, WorldState


@dataclass(frozen=True, slots=True)
class ActionMapping:
    """Associates one target action schema with the system program realizing it."""

    target_action: str
    params: tuple[str, ...]
    body: program.ProgramTerm

    def body_vars(self) -> tuple[str, ...]:
        return self.params + program.pick_vars(self.body)


@dataclass(frozen=True, slots=True)
class ObservationMapping:
    """Defines an observable target fluent as a formula over system fluents."""

    target_fluent: str
    params: tuple[str, ...]
    formula: fol.Formula


class MappingSet:
    def __init__(
        self,
        actions: Iterable[ActionMapping],
        observations: Iterable[ObservationMapping],
        theory_t: BasicActionTheory,
    ):
        self.actions = {m.target_action: m for m in actions}
        self.observations = {m.target_fluent: m for m in observations}
        self.theory_t = theory_t
        for name in self.observations:
            schema = theory_t.fluents.get(name)
            if schema is None or not schema.observable:
                raise UnmappedObservableFluent(
                    f"observation rule for non-observable fluent {name!r}"
                )
        for name, schema in theory_t.fluents.items():
            if schema.observable and name not in self.observations:
                raise UnmappedObservableFluent(
                    f"observable fluent {name!r} has no observation rule"
                )

    def is_observable(self, fluent: str) -> bool:
        schema = self.theory_t.fluents.get(fluent)
        return bool(schema and schema.observable)

    def lookup(self, A: CompoundAction) -> tuple[program.ProgramTerm, dict[str, str]]:
        """The mapped system program and parameter binding for a ground target
        action.  Only singleton target compounds carry mappings."""
        members = A.sorted_members()
        if len(members) != 1:
            raise NoMappingForAction(
                f"no mapping for non-singleton target action {A!r}"
            )
        a = members[0]
        m = self.actions.get(a.name)
        if m is None:
            raise NoMappingForAction(f"no mapping for target action {a.name!r}")
        if len(m.params) != len(a.args):
            raise NoMappingForAction(
                f"mapping for {a.name!r} expects {len(m.params)} arguments, got {len(a.args)}"
            )
        return m.body, dict(zip(m.params, a.args))

    def pending_config(self, A: CompoundAction, world_s: WorldState) -> program.Configuration:
        """Initial configuration of the mapped program: parameters bound to the
        action's arguments, pick slots unset, at the current system world."""
        body, binding = self.lookup(A)
        m = self.actions[A.sorted_members()[0].name]
        env = program.Environment(
            [(p, binding[p]) for p in m.params]
            + [(v, None) for v in program.pick_vars(body)]
        )
        return program.Configuration(body, env, world_s)


class ObsView:
    """Interpretation routing observable atoms to the system world and all
    other atoms to the target world; quantifiers range over both."""

    __slots__ = ("world_t", "world_s", "mappings", "_qobjs")

    def __init__(self, world_t: WorldState, world_s: WorldState, mappings: MappingSet):
        self.world_t = world_t
        self.world_s = world_s
        self.mappings = mappings
        self._qobjs = None

    def holds(self, pred: str, args: tuple[str, ...]) -> bool:
        rule = self.mappings.observations.get(pred)
        if rule is not None:
            env = dict(zip(rule.params, args))
            return fol.eval_formula(rule.formula, self.world_s, env)
        return self.world_t.holds(pred, args)

    def quantifier_objects(self) -> tuple[str, ...]:
        if self._qobjs is None:
            self._qobjs = tuple(
                sorted(
                    self.world_t.domain.named
                    | self.world_t.active_domain()
                    | self.world_s.active_domain()
                )
            )
        return self._qobjs


def obs_test_eval(world_t: WorldState, world_s: WorldState, mappings: MappingSet):
    view = ObsView(world_t, world_s, mappings)
    return lambda phi, env: fol.eval_formula(phi, view, env)


def trans_obs(
    c_t: program.Configuration,
    world_s: WorldState,
    theory_t: BasicActionTheory,
    mappings: MappingSet,
    *,
    in_use: Iterable[str] = (),
) -> tuple[tuple[CompoundAction, program.Configuration], ...]:
    """Target one-step successors with observable tests routed to the system
    world; actions themselves are unaffected by observations."""
    te = obs_test_eval(c_t.world, world_s, mappings)
    return program.trans(c_t, theory_t, test_eval=te, in_use=in_use)


def final_obs(
    c_t: program.Configuration,
    world_s: WorldState,
    theory_t: BasicActionTheory,
    mappings: MappingSet,
) -> bool:
    te = obs_test_eval(c_t.world, world_s, mappings)
    return program.final(c_t, theory_t, test_eval=te)


def observation_equivalence(
    world_t: WorldState, world_s: WorldState, mappings: MappingSet
) -> bool:
    """Whether every observable fluent's target extension coincides with its
    defining formula on the system world, over the combined object range."""
    objs = tuple(
        sorted(world_t.domain.named | world_t.active_domain() | world_s.active_domain())
    )
    import itertools

    for name, rule in sorted(mappings.observations.items()):
        arity = len(rule.params)
        for args in itertools.product(objs, repeat=arity):
            lhs = world_t.holds(name, args)
            env = dict(zip(rule.params, args))
            rhs = fol.eval_formula(rule.formula, world_s, env)
            if lhs != rhs:
                return False
    return True
