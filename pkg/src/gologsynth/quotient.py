"""Genericity-based finiteness: canonical forms, isomorphism checking, the
finite quotient arena, and transfer of quotient strategies onto concrete runs.

Two arena states are isomorphic when a bijection over their anonymous objects
(named constants fixed pointwise, counters and turn verbatim) maps one's
extensions and environments onto the other's.  The canonical form renumbers
anonymous objects by iterated signature refinement with an exact backtracking
tie-break, so equal canonical forms coincide with isomorphism.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .arena import Arena, ArenaState, Labelling, Problem, state_active_domain, verbatim_key
from .errors import BisimulationBroken, BoundExceeded
from .model import WorldState, anon_object, is_anonymous
from .program import Configuration, print_program

CANON_VERSION = "gsv1"


# ---------------------------------------------------------------------------
# Renaming and serialization


def rename_configuration(cfg: Configuration, renaming: Mapping[str, str]) -> Configuration:
    return Configuration(cfg.counter, cfg.env.rename(renaming), cfg.world.rename(renaming))


def rename_state(q: ArenaState, renaming: Mapping[str, str]) -> ArenaState:
    return ArenaState(
        q.turn,
        rename_configuration(q.target_cfg, renaming),
        rename_configuration(q.system_cfg, renaming),
        rename_configuration(q.pending_cfg, renaming),
    )


def state_anons(q: ArenaState) -> tuple[str, ...]:
    objs = set()
    for cfg in (q.target_cfg, q.system_cfg, q.pending_cfg):
        objs.update(cfg.world.active_domain())
        objs.update(cfg.env.values())
    return tuple(sorted(o for o in objs if is_anonymous(o)))


def _serialize_world(w: WorldState, renaming: Mapping[str, str]) -> str:
    parts = []
    for f in sorted(w.extensions):
        tuples = sorted(tuple(renaming.get(o, o) for o in t) for t in w.extensions[f])
        parts.append(f + ":" + ";".join(",".join(t) for t in tuples))
    return "|".join(parts)


def _serialize_cfg(cfg: Configuration, renaming: Mapping[str, str]) -> str:
    env = ";".join(
        f"{n}={renaming.get(v, v) if v is not None else '?'}" for n, v in cfg.env.slots
    )
    return print_program(cfg.counter) + "#" + env + "#" + _serialize_world(cfg.world, renaming)


def serialize_state(q: ArenaState, renaming: Mapping[str, str] | None = None) -> str:
    ren = renaming or {}
    return "␟".join(
        (
            CANON_VERSION,
            q.turn,
            _serialize_cfg(q.target_cfg, ren),
            _serialize_cfg(q.system_cfg, ren),
            _serialize_cfg(q.pending_cfg, ren),
        )
    )


# ---------------------------------------------------------------------------
# Canonical labeling


def _anon_signatures(q: ArenaState, colors: Mapping[str, int]) -> dict[str, tuple]:
    """Occurrence signature of each anonymous object, refined by current colors."""
    sigs: dict[str, list] = {a: [] for a in colors}

    def mask(o: str) -> str:
        if is_anonymous(o):
            return f"✱{colors[o]}"
        return o

    for tag, cfg in (("T", q.target_cfg), ("S", q.system_cfg), ("P", q.pending_cfg)):
        for f in sorted(cfg.world.extensions):
            for t in cfg.world.extensions[f]:
                for pos, o in enumerate(t):
                    if is_anonymous(o):
                        sigs[o].append((tag, f, pos, tuple(mask(x) for x in t)))
        for n, v in cfg.env.slots:
            if v is not None and is_anonymous(v):
                sigs[v].append((tag, "फ़nv", n))
    return {a: tuple(sorted(s)) for a, s in sigs.items()}


def _refine_partition(q: ArenaState, anons: tuple[str, ...]) -> list[list[str]]:
    colors = {a: 0 for a in anons}
    while True:
        sigs = _anon_signatures(q, colors)
        order = sorted(set(sigs.values()))
        new = {a: order.index(sigs[a]) for a in anons}
        if new == colors:
            break
        colors = new
    classes: dict[int, list[str]] = {}
    for a in anons:
        classes.setdefault(colors[a], []).append(a)
    return [sorted(classes[c]) for c in sorted(classes)]


def canonicalize(q: ArenaState) -> str:
    """Deterministic serialization with anonymous objects canonically
    renumbered; equal canonical forms mean isomorphic states."""
    anons = state_anons(q)
    if not anons:
        return serialize_state(q)
    classes = _refine_partition(q, anons)
    best: Optional[str] = None
    # Exact tie-break: all orderings within refinement classes, class order fixed.
    for perm in itertools.product(*(itertools.permutations(c) for c in classes)):
        flat = [a for cls in perm for a in cls]
        renaming = {a: anon_object(i) for i, a in enumerate(flat)}
        s = serialize_state(q, renaming)
        if best is None or s < best:
            best = s
    return best


def canonical_renaming(q: ArenaState) -> dict[str, str]:
    """A renaming realizing the canonical form (first minimizer)."""
    anons = state_anons(q)
    if not anons:
        return {}
    classes = _refine_partition(q, anons)
    best = None
    best_renaming: dict[str, str] = {}
    for perm in itertools.product(*(itertools.permutations(c) for c in classes)):
        flat = [a for cls in perm for a in cls]
        renaming = {a: anon_object(i) for i, a in enumerate(flat)}
        s = serialize_state(q, renaming)
        if best is None or s < best:
            best = s
            best_renaming = renaming
    return best_renaming


@dataclass(frozen=True, slots=True)
class Isomorphism:
    """Witnessing bijection over anonymous objects; named constants map to
    themselves."""

    mapping: tuple[tuple[str, str], ...]

    def as_dict(self) -> dict[str, str]:
        return dict(self.mapping)


def isomorphic(q1: ArenaState, q2: ArenaState) -> Optional[Isomorphism]:
    """Brute-force search for a named-constant-fixing bijection between the
    anonymous objects mapping one state onto the other."""
    if q1.turn != q2.turn:
        return None
    a1, a2 = state_anons(q1), state_anons(q2)
    if len(a1) != len(a2):
        return None
    for perm in itertools.permutations(a2):
        renaming = dict(zip(a1, perm))
        if rename_state(q1, renaming) == q2:
            return Isomorphism(tuple(sorted(renaming.items())))
    return None


# ---------------------------------------------------------------------------
# Finite arenas


@dataclass
class FiniteArena:
    """A finite game arena: states keyed by a deterministic serialization,
    edges between keys, labels per key."""

    initial: str
    reps: dict[str, ArenaState]
    edges: dict[str, tuple[str, ...]]
    labeller: Callable[[ArenaState], Labelling]
    keys: tuple[str, ...] = field(default_factory=tuple)
    _labels: dict[str, Labelling] = field(default_factory=dict)

    def __post_init__(self):
        if not self.keys:
            self.keys = tuple(sorted(self.reps))

    def label(self, key: str) -> Labelling:
        hit = self._labels.get(key)
        if hit is None:
            hit = self.labeller(self.reps[key])
            self._labels[key] = hit
        return hit

    def successors(self, key: str) -> tuple[str, ...]:
        return self.edges[key]

    def dump(self) -> str:
        """Deterministic text listing of states and edges, sorted."""
        lines = [f"arena {len(self.keys)} states"]
        for k in self.keys:
            lab = self.label(k)
            flags = []
            if lab.final_t:
                flags.append("finalT")
            if lab.final_s:
                flags.append("finalS")
            if lab.obs_eq:
                flags.append("obsEq")
            marker = " ".join(flags)
            init = "*" if k == self.initial else " "
            lines.append(f"STATE{init}[{lab.turn}] {marker}\n  {k}")
        for k in self.keys:
            for s in self.edges[k]:
                lines.append(f"EDGE\n  {k}\n  -> {s}")
        return "\n".join(lines) + "\n"


def _explore(
    problem: Problem,
    key_fn: Callable[[ArenaState], str],
    max_states: Optional[int],
    enforce_bound: bool,
) -> FiniteArena:
    arena = Arena(problem)
    q0 = arena.initial()
    k0 = key_fn(q0)
    reps: dict[str, ArenaState] = {k0: q0}
    edges: dict[str, tuple[str, ...]] = {}
    parent: dict[str, Optional[str]] = {k0: None}
    frontier = [k0]

    def check_bound(key: str, q: ArenaState):
        if enforce_bound and len(state_active_domain(q)) > problem.bound:
            trace = []
            cur: Optional[str] = key
            while cur is not None:
                trace.append(cur)
                cur = parent[cur]
            raise BoundExceeded(
                f"state exceeds the active-domain bound {problem.bound}",
                state=q,
                trace=tuple(reversed(trace)),
            )

    check_bound(k0, q0)
    while frontier:
        key = frontier.pop()
        q = reps[key]
        succ_keys = []
        for s in arena.successors(q):
            sk = key_fn(s)
            if sk not in reps:
                if max_states is not None and len(reps) >= max_states:
                    raise RuntimeError(
                        f"arena exploration exceeded {max_states} states"
                    )
                reps[sk] = s
                parent[sk] = key
                check_bound(sk, s)
                frontier.append(sk)
            succ_keys.append(sk)
        edges[key] = tuple(sorted(set(succ_keys)))
    return FiniteArena(initial=k0, reps=reps, edges=edges, labeller=arena.label)


def build_finite_arena(problem: Problem, max_states: Optional[int] = None) -> FiniteArena:
    """The reachable quotient of the lazy arena under canonicalization.

    Terminates because counters, environments over boundedly many objects, and
    bound-respecting interpretations are finitely many; raises BoundExceeded
    (with the offending trace) if a state's active domain exceeds the bound.
    """
    return _explore(problem, canonicalize, max_states, enforce_bound=True)


def build_concrete_arena(
    problem: Problem, max_states: int = 20_000, enforce_bound: bool = True
) -> FiniteArena:
    """Eager concrete arena keyed by verbatim state identity (oracle mode)."""
    return _explore(problem, verbatim_key, max_states, enforce_bound=enforce_bound)


# ---------------------------------------------------------------------------
# Strategy transfer


def _match_isomorphism(
    q_concrete: ArenaState,
    q_quotient: ArenaState,
    prev_h: Mapping[str, str],
) -> Optional[dict[str, str]]:
    """An isomorphism from the concrete state onto the quotient representative,
    preferring to keep the images of persisting objects and to avoid reusing
    the images of just-disappeared ones."""
    a_c, a_q = state_anons(q_concrete), state_anons(q_quotient)
    if len(a_c) != len(a_q):
        return None
    best = None
    best_score = None
    for perm in itertools.permutations(a_q):
        renaming = dict(zip(a_c, perm))
        if rename_state(q_concrete, renaming) != q_quotient:
            continue
        moved = sum(1 for o in a_c if o in prev_h and renaming[o] != prev_h[o])
        stale_images = {prev_h[o] for o in prev_h if o not in renaming}
        collisions = sum(1 for o in a_c if o not in prev_h and renaming[o] in stale_images)
        score = (moved, collisions)
        if best_score is None or score < best_score:
            best, best_score = renaming, score
            if score == (0, 0):
                break
    return best


class StrategyRun:
    """Tracks a concrete run against its quotient shadow.

    Maintains, per step, an isomorphism between the concrete state and the
    quotient representative of its class; the per-step isomorphism assertion
    is hard, the persistence preference soft (the quotient's representative
    choice may force a persisting object's image to change).
    """

    def __init__(self, problem: Problem, quotient: FiniteArena, concrete_arena: Arena | None = None):
        self.problem = problem
        self.quotient = quotient
        self.arena = concrete_arena or Arena(problem)
        self.state = self.arena.initial()
        self.key = canonicalize(self.state)
        h = _match_isomorphism(self.state, quotient.reps[self.key], {})
        if h is None:
            raise BisimulationBroken("initial state not isomorphic to its representative")
        self.h = h

    def snapshot(self) -> tuple:
        return (self.state, self.key, dict(self.h))

    def restore(self, snap: tuple):
        self.state, self.key, self.h = snap[0], snap[1], dict(snap[2])

    def _advance(self, new_state: ArenaState):
        new_key = canonicalize(new_state)
        if new_key not in self.quotient.reps or new_key not in set(
            self.quotient.edges.get(self.key, ())
        ):
            raise BisimulationBroken(
                "concrete move leaves the quotient edge relation"
            )
        h2 = _match_isomorphism(new_state, self.quotient.reps[new_key], self.h)
        if h2 is None:
            raise BisimulationBroken("no isomorphism onto the successor representative")
        self.state, self.key, self.h = new_state, new_key, h2

    def advance_target(self, new_state: ArenaState):
        """Register an externally chosen target move (a concrete successor)."""
        self._advance(new_state)

    def system_move(self, strategy: Mapping[str, str]) -> ArenaState:
        """Apply the quotient strategy's move to the concrete run: pick the
        concrete successor whose class matches the prescribed quotient state."""
        target_key = strategy.get(self.key)
        if target_key is None:
            raise BisimulationBroken(f"strategy undefined at {self.key!r}")
        chosen = None
        for s in self.arena.successors(self.state):
            if canonicalize(s) == target_key:
                sk = verbatim_key(s)
                if chosen is None or sk < chosen[1]:
                    chosen = (s, sk)
        if chosen is None:
            raise BisimulationBroken(
                "no concrete successor realizes the strategy's quotient move"
            )
        self._advance(chosen[0])
        return self.state
