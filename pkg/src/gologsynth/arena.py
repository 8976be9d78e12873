"""The turn-based game arena induced by the target and available programs.

States pair a turn marker with three configurations: the target program, the
available program, and the pending fragment of the mapped program currently
being realized.  Target turns advance the target by one observed step and load
the mapped program; system turns advance the available program and the pending
fragment jointly, requiring both to reach the same successor world, and hand
the turn back when the pending fragment may terminate.

Successor generation is pure; the lazy arena memoizes per state, so parallel
frontier expansion only needs the memo tables to behave as atomic
get-or-insert maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from . import fol, mapping as mapping_mod, program
from .model import BasicActionTheory, CompoundAction, WorldState
from .program import Configuration, Environment, ProgramTerm


@dataclass(frozen=True, slots=True)
class Problem:
    """A fully assembled synthesis problem."""

    name: str
    theory_t: BasicActionTheory
    theory_s: BasicActionTheory
    target: ProgramTerm
    system: ProgramTerm
    mappings: mapping_mod.MappingSet
    bound: int = 64
    strict_obs: bool = True


@dataclass(frozen=True, slots=True)
class ArenaState:
    turn: str  # "T" or "S"
    target_cfg: Configuration
    system_cfg: Configuration
    pending_cfg: Configuration


@dataclass(frozen=True, slots=True)
class Edge:
    """A labelled arena transition; the label is the compound action that the
    moving side executed."""

    action: CompoundAction
    state: ArenaState


class Labelling:
    """Derived first-order interpretation of an arena state.

    Turn, counter and environment markers are exposed as pseudo-fluents; when
    it is the target's turn, observable target fluents are read through their
    defining formulas on the system world.
    """

    __slots__ = (
        "turn", "final_t", "final_s", "obs_eq",
        "prog_t", "prog_s", "prog_p", "env_t", "env_s", "env_p",
        "_world_t", "_world_s", "_mappings", "_qobjs",
    )

    def __init__(self, turn, final_t, final_s, obs_eq, state: ArenaState, mappings):
        self.turn = turn
        self.final_t = final_t
        self.final_s = final_s
        self.obs_eq = obs_eq
        self.prog_t = program.print_program(state.target_cfg.counter)
        self.prog_s = program.print_program(state.system_cfg.counter)
        self.prog_p = program.print_program(state.pending_cfg.counter)
        self.env_t = state.target_cfg.env.slots
        self.env_s = state.system_cfg.env.slots
        self.env_p = state.pending_cfg.env.slots
        self._world_t = state.target_cfg.world
        self._world_s = state.system_cfg.world
        self._mappings = mappings
        self._qobjs = None

    def holds(self, pred: str, args: tuple[str, ...]) -> bool:
        if pred == "turnT":
            return self.turn == "T"
        if pred == "turnS":
            return self.turn == "S"
        if pred == "finalT":
            return self.final_t
        if pred == "finalS":
            return self.final_s
        if pred == "obsEq":
            return self.obs_eq
        if pred == "turn":
            return args == (self.turn,)
        if pred == "progT":
            return args == (self.prog_t,)
        if pred == "progS":
            return args == (self.prog_s,)
        if pred == "envT":
            return args == (repr(self.env_t),)
        if pred == "envS":
            return args == (repr(self.env_s),)
        mt = self._mappings
        if pred in mt.theory_t.fluents:
            if self.turn == "T" and mt.is_observable(pred):
                rule = mt.observations[pred]
                env = dict(zip(rule.params, args))
                return fol.eval_formula(rule.formula, self._world_s, env)
            return self._world_t.holds(pred, args)
        if pred in mt.theory_t.rigid_predicates:
            return self._world_t.holds(pred, args)
        return self._world_s.holds(pred, args)

    def quantifier_objects(self) -> tuple[str, ...]:
        if self._qobjs is None:
            self._qobjs = tuple(
                sorted(
                    self._world_t.domain.named
                    | self._world_t.active_domain()
                    | self._world_s.active_domain()
                )
            )
        return self._qobjs


def state_active_domain(q: ArenaState) -> frozenset[str]:
    """Objects occurring in some fluent extension of either world."""
    return q.target_cfg.world.active_domain() | q.system_cfg.world.active_domain()


def state_objects(q: ArenaState) -> frozenset[str]:
    """Active domain plus environment values; the in-use set for fresh picks."""
    return (
        state_active_domain(q)
        | frozenset(q.target_cfg.env.values())
        | frozenset(q.system_cfg.env.values())
        | frozenset(q.pending_cfg.env.values())
    )


def initial_state(problem: Problem) -> ArenaState:
    tcfg = Configuration(
        problem.target,
        Environment.for_vars(program.pick_vars(problem.target)),
        problem.theory_t.initial,
    )
    scfg = Configuration(
        problem.system,
        Environment.for_vars(program.pick_vars(problem.system)),
        problem.theory_s.initial,
    )
    pcfg = Configuration(program.TRUE_PROG, program.EMPTY_ENV, problem.theory_s.initial)
    return ArenaState("T", tcfg, scfg, pcfg)


class Arena:
    """Lazy successor generator with memoization."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self._edges: dict[ArenaState, tuple[Edge, ...]] = {}
        self._labels: dict[ArenaState, Labelling] = {}
        self._obs_eq: dict[tuple[WorldState, WorldState], bool] = {}
        self._trans: dict[tuple[Configuration, frozenset], tuple] = {}

    def initial(self) -> ArenaState:
        return initial_state(self.problem)

    # -- stepping helpers ---------------------------------------------------

    def _system_trans(self, cfg: Configuration, in_use: frozenset):
        key = (cfg, in_use)
        hit = self._trans.get(key)
        if hit is None:
            hit = program.trans(cfg, self.problem.theory_s, in_use=in_use)
            self._trans[key] = hit
        return hit

    # -- arena interface ------------------------------------------------------

    def edges(self, q: ArenaState) -> tuple[Edge, ...]:
        hit = self._edges.get(q)
        if hit is None:
            hit = self._expand(q)
            self._edges[q] = hit
        return hit

    def successors(self, q: ArenaState) -> tuple[ArenaState, ...]:
        out = []
        seen = set()
        for e in self.edges(q):
            if e.state not in seen:
                seen.add(e.state)
                out.append(e.state)
        return tuple(out)

    def _expand(self, q: ArenaState) -> tuple[Edge, ...]:
        problem = self.problem
        in_use = frozenset(state_objects(q) | problem.theory_s.domain.named)
        out: list[Edge] = []
        if q.turn == "T":
            steps = mapping_mod.trans_obs(
                q.target_cfg, q.system_cfg.world, problem.theory_t, problem.mappings,
                in_use=in_use,
            )
            for A, tcfg2 in steps:
                pend = problem.mappings.pending_config(A, q.system_cfg.world)
                out.append(Edge(A, ArenaState("S", tcfg2, q.system_cfg, pend)))
        else:
            avail = self._system_trans(q.system_cfg, in_use)
            pend_steps = self._system_trans(q.pending_cfg, in_use)
            by_world: dict[WorldState, list[Configuration]] = {}
            for _, pcfg2 in pend_steps:
                by_world.setdefault(pcfg2.world, []).append(pcfg2)
            for A, scfg2 in avail:
                for pcfg2 in by_world.get(scfg2.world, ()):
                    final_p = program.final(pcfg2, problem.theory_s)
                    if final_p:
                        out.append(
                            Edge(A, ArenaState("T", q.target_cfg, scfg2, pcfg2))
                        )
                    extendable = bool(
                        program.raw_steps(pcfg2, problem.theory_s, in_use=in_use)
                    )
                    if not final_p or extendable:
                        out.append(
                            Edge(A, ArenaState("S", q.target_cfg, scfg2, pcfg2))
                        )
        # Deterministic order and deduplication.
        dedup: dict[tuple, Edge] = {}
        for e in out:
            dedup.setdefault((repr(e.action), _state_sort_key(e.state)), e)
        return tuple(dedup[k] for k in sorted(dedup))

    def label(self, q: ArenaState) -> Labelling:
        hit = self._labels.get(q)
        if hit is not None:
            return hit
        problem = self.problem
        final_t = program.final(q.target_cfg, problem.theory_t)
        final_s = program.final(q.system_cfg, problem.theory_s)
        wpair = (q.target_cfg.world, q.system_cfg.world)
        obs_eq = self._obs_eq.get(wpair)
        if obs_eq is None:
            obs_eq = mapping_mod.observation_equivalence(
                q.target_cfg.world, q.system_cfg.world, problem.mappings
            )
            self._obs_eq[wpair] = obs_eq
        lab = Labelling(q.turn, final_t, final_s, obs_eq, q, problem.mappings)
        self._labels[q] = lab
        return lab

    def adom_size(self, q: ArenaState) -> int:
        return len(state_active_domain(q))


def _state_sort_key(q: ArenaState) -> tuple:
    return (
        q.turn,
        program.print_program(q.target_cfg.counter),
        q.target_cfg.env.slots,
        repr(q.target_cfg.world),
        program.print_program(q.system_cfg.counter),
        q.system_cfg.env.slots,
        repr(q.system_cfg.world),
        program.print_program(q.pending_cfg.counter),
        q.pending_cfg.env.slots,
        repr(q.pending_cfg.world),
    )


def verbatim_key(q: ArenaState) -> str:
    """Injective serialization without object renaming (oracle-mode key)."""
    return repr(_state_sort_key(q))
