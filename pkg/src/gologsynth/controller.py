"""Packaging and execution of the synthesized controller.

The controller answers each target step with the system configuration
sequence read off the strategy-induced system states until the turn returns
to the target, transferring quotient moves onto the concrete arena.  It is
stateful across calls (it tracks the concrete run and its quotient shadow)
even though the underlying strategy is memoryless.  One controller instance
drives one run; instances are independent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import mucheck, program, quotient
from .arena import Arena, ArenaState, Edge, Problem
from .errors import IllegalTargetMove, NotInWinningRelation, NotRealizable
from .model import CompoundAction
from .program import Configuration


@dataclass
class Synthesis:
    """Everything synthesize produces: the quotient, its winning set and the
    memoryless strategy."""

    problem: Problem
    finite: quotient.FiniteArena
    annotated: mucheck.AnnotatedWinningSet
    strategy: dict[str, str]

    @property
    def realizable(self) -> bool:
        return self.finite.initial in self.annotated.win


def synthesize(problem: Problem, max_states: Optional[int] = None) -> Synthesis:
    fa = quotient.build_finite_arena(problem, max_states=max_states)
    annotated = mucheck.compute_win(fa, strict_obs=problem.strict_obs)
    strategy = (
        mucheck.extract_strategy(annotated, fa)
        if fa.initial in annotated.win
        else {}
    )
    return Synthesis(problem, fa, annotated, strategy)


class Controller:
    """Executes a winning strategy against target moves on the concrete arena."""

    def __init__(self, synthesis: Synthesis, arena: Arena | None = None):
        if not synthesis.realizable:
            raise NotRealizable("cannot build a controller: the recipe is not realizable")
        self.synthesis = synthesis
        self.arena = arena or Arena(synthesis.problem)
        self.run = quotient.StrategyRun(synthesis.problem, synthesis.finite, self.arena)
        self.trace: list[str] = []
        self.trace.append(f"STATE {quotient.canonicalize(self.run.state)}")

    # -- bookkeeping ---------------------------------------------------------

    @property
    def state(self) -> ArenaState:
        return self.run.state

    def snapshot(self):
        return (self.run.snapshot(), len(self.trace))

    def restore(self, snap):
        self.run.restore(snap[0])
        del self.trace[snap[1]:]

    def target_edges(self) -> tuple[Edge, ...]:
        """The target's legal moves from the current state."""
        if self.run.state.turn != "T":
            return ()
        return self.arena.edges(self.run.state)

    # -- the controller function ---------------------------------------------

    def respond(
        self,
        c_t: Configuration,
        c_s: Configuration,
        c_t_next: Configuration,
    ) -> list[Configuration]:
        """React to the target stepping from c_t to c_t_next: execute the
        mapped program and return the visited system configurations (the
        unchanged starting configuration is not repeated)."""
        state = self.run.state
        if state.turn != "T" or self.run.key not in self.synthesis.annotated.win:
            raise NotInWinningRelation("the current joint state is not a winning target turn")
        if state.target_cfg != c_t or state.system_cfg != c_s:
            raise NotInWinningRelation("stale configurations passed to the controller")
        chosen: Optional[Edge] = None
        for e in self.target_edges():
            if e.state.target_cfg == c_t_next:
                chosen = e
                break
        if chosen is None:
            raise IllegalTargetMove(f"no observed target step reaches {c_t_next!r}")
        return self._respond_edge(chosen)

    def _respond_edge(self, edge: Edge) -> list[Configuration]:
        self.trace.append(f"T-MOVE {edge.action!r}")
        self.run.advance_target(edge.state)
        self.trace.append(f"STATE {self.run.key}")
        out: list[Configuration] = []
        while self.run.state.turn == "S":
            before = self.run.state
            nxt = self.run.system_move(self.synthesis.strategy)
            action = _joint_action(self.arena, before, nxt)
            self.trace.append(f"S-MOVE {action!r}")
            self.trace.append(f"STATE {self.run.key}")
            out.append(nxt.system_cfg)
        return out


def _joint_action(arena: Arena, before: ArenaState, after: ArenaState) -> CompoundAction:
    for e in arena.edges(before):
        if e.state == after:
            return e.action
    raise NotInWinningRelation("system move is not an arena edge")


# ---------------------------------------------------------------------------
# Playout harness


@dataclass
class TraceReport:
    verdict: str
    runs: int
    failures: list[str] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)

    def render(self) -> str:
        body = "\n".join(self.lines)
        tail = f"VERDICT {self.verdict}"
        if self.failures:
            tail += "\n" + "\n".join(f"FAILURE {f}" for f in self.failures)
        return body + ("\n" if body else "") + tail + "\n"


def _verify_response(
    ctrl: Controller,
    edge: Edge,
    start_system: Configuration,
    response: list[Configuration],
    failures: list[str],
):
    """Invariant checks on one controller reply: the reply must be executable
    step by step, must completely execute the mapped program, and must land on
    a target turn where finality is matched."""
    problem = ctrl.synthesis.problem
    theory = problem.theory_s
    cur = start_system
    for nxt in response:
        steps = program.trans(cur, theory)
        if not any(c == nxt for _, c in steps):
            failures.append(f"reply step {nxt!r} is not a one-step successor of {cur!r}")
        cur = nxt
    body, binding = problem.mappings.lookup(edge.action)
    pend0 = problem.mappings.pending_config(edge.action, start_system.world)
    reachable = program.do_reachable(theory, pend0.counter, pend0.env, pend0.world)
    final_world = response[-1].world if response else start_system.world
    if final_world not in reachable:
        failures.append(
            f"reply does not realize a complete execution of the mapped program for {edge.action!r}"
        )
    state = ctrl.run.state
    lab = ctrl.arena.label(state)
    if lab.final_t and not lab.final_s:
        failures.append("target may terminate but the system may not")


def scripted_driver(moves: Iterable[str]):
    queue = list(moves)

    def pick(edges: tuple[Edge, ...]) -> Optional[Edge]:
        if not queue:
            return None
        want = queue.pop(0)
        for e in edges:
            if repr(e.action) == want:
                return e
        raise IllegalTargetMove(f"scripted move {want!r} is not available")

    return pick


def random_driver(seed: int):
    rng = random.Random(seed)

    def pick(edges: tuple[Edge, ...]) -> Optional[Edge]:
        if not edges:
            return None
        return rng.choice(list(edges))

    return pick


def playout(
    synthesis: Synthesis,
    driver: Callable[[tuple[Edge, ...]], Optional[Edge]],
    max_steps: int = 200,
    arena: Arena | None = None,
) -> TraceReport:
    """One run of alternating target/system phases with invariant checking."""
    ctrl = Controller(synthesis, arena=arena)
    failures: list[str] = []
    steps = 0
    while steps < max_steps:
        state = ctrl.state
        lab = ctrl.arena.label(state)
        if lab.final_t and not lab.final_s:
            failures.append("target may terminate but the system may not")
        edges = ctrl.target_edges()
        edge = driver(edges) if edges else None
        if edge is None:
            break
        start_system = state.system_cfg
        response = ctrl._respond_edge(edge)
        _verify_response(ctrl, edge, start_system, response, failures)
        steps += 1
    verdict = "PASS" if not failures else "FAIL"
    return TraceReport(verdict=verdict, runs=1, failures=failures, lines=list(ctrl.trace))


def exhaustive_playout(
    synthesis: Synthesis,
    depth: int,
    max_runs: int = 10_000,
    arena: Arena | None = None,
) -> TraceReport:
    """Enumerate every target choice sequence to the given depth; the verdict
    aggregates over all maximal runs."""
    ctrl = Controller(synthesis, arena=arena)
    failures: list[str] = []
    runs = 0

    def recurse(remaining: int):
        nonlocal runs
        state = ctrl.state
        lab = ctrl.arena.label(state)
        if lab.final_t and not lab.final_s:
            failures.append("target may terminate but the system may not")
        edges = ctrl.target_edges() if remaining > 0 else ()
        if not edges:
            runs += 1
            if runs > max_runs:
                raise RuntimeError("exhaustive playout exceeded the run cap")
            return
        for edge in edges:
            snap = ctrl.snapshot()
            start_system = ctrl.state.system_cfg
            response = ctrl._respond_edge(edge)
            _verify_response(ctrl, edge, start_system, response, failures)
            recurse(remaining - 1)
            ctrl.restore(snap)

    recurse(depth)
    verdict = "PASS" if not failures else "FAIL"
    return TraceReport(verdict=verdict, runs=runs, failures=failures, lines=list(ctrl.trace))


def random_playouts(
    synthesis: Synthesis,
    runs: int,
    seed: int,
    max_steps: int = 200,
) -> TraceReport:
    """Seeded batch of random-target runs sharing one concrete arena cache."""
    arena = Arena(synthesis.problem)
    failures: list[str] = []
    lines: list[str] = []
    for i in range(runs):
        report = playout(synthesis, random_driver(seed + i), max_steps=max_steps, arena=arena)
        if report.verdict != "PASS":
            failures.extend(f"run {i}: {f}" for f in report.failures)
    verdict = "PASS" if not failures else "FAIL"
    return TraceReport(verdict=verdict, runs=runs, failures=failures, lines=lines)
