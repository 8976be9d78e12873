"""Canonical forms, isomorphism, the finite quotient, strategy transfer."""

from __future__ import annotations

import pytest

from gologsynth.arena import Arena, ArenaState
from gologsynth.errors import BoundExceeded
from gologsynth.model import WorldState, anon_object
from gologsynth.program import Configuration, Environment, TRUE_PROG
from gologsynth.quotient import (
    build_concrete_arena,
    build_finite_arena,
    canonicalize,
    isomorphic,
    rename_state,
)

from .instances import chain_problem, micro_problem, spawn_problem


def _state_with(pb, extensions_t, extensions_s, env_vals=()):
    wt = WorldState(pb.theory_t.domain, extensions_t)
    ws = WorldState(pb.theory_s.domain, extensions_s)
    env = Environment(tuple(env_vals))
    return ArenaState(
        "S",
        Configuration(TRUE_PROG, Environment(()), wt),
        Configuration(TRUE_PROG, env, ws),
        Configuration(TRUE_PROG, Environment(()), ws),
    )


def test_isomorphic_identity():
    pb = micro_problem()
    q = _state_with(pb, {}, {"step1": {("p",)}})
    iso = isomorphic(q, q)
    assert iso is not None and iso.as_dict() == {}


def test_isomorphic_swaps_symmetric_anons():
    pb = micro_problem()
    a0, a1 = anon_object(0), anon_object(1)
    q1 = _state_with(pb, {}, {"step1": {(a0,)}, "done": {(a1,)}})
    q2 = _state_with(pb, {}, {"step1": {(a1,)}, "done": {(a0,)}})
    iso = isomorphic(q1, q2)
    assert iso is not None
    assert iso.as_dict() == {a0: a1, a1: a0}
    assert canonicalize(q1) == canonicalize(q2)


def test_not_isomorphic_on_turn_or_structure():
    pb = micro_problem()
    q1 = _state_with(pb, {}, {"step1": {("p",)}})
    q2 = ArenaState("T", q1.target_cfg, q1.system_cfg, q1.pending_cfg)
    assert isomorphic(q1, q2) is None
    q3 = _state_with(pb, {}, {"step1": {("p",)}, "done": {("p",)}})
    assert isomorphic(q1, q3) is None
    assert canonicalize(q1) != canonicalize(q3)


def test_named_constants_fixed_pointwise():
    pb = micro_problem()
    # p vs another named constant cannot be identified by renaming
    q1 = _state_with(pb, {}, {"step1": {("p",)}})
    q2 = _state_with(pb, {}, {"step1": {("1",)}})
    assert isomorphic(q1, q2) is None


def test_canonical_zero_anons_injective():
    pb = micro_problem()
    q1 = _state_with(pb, {}, {"step1": {("p",)}})
    q2 = _state_with(pb, {}, {"step1": {("p",)}, "done": {("p",)}})
    assert canonicalize(q1) != canonicalize(q2)


def test_canonicalize_matches_bruteforce_isomorphism():
    """Equal canonical form iff a witnessing bijection exists, across state
    pairs drawn from exploration of an instance with anonymous objects."""
    pb = chain_problem(chain=1, body_pick=True, anon_seed=(anon_object(0),), pool=2)
    arena = Arena(pb)
    states = []
    frontier = [arena.initial()]
    seen = set()
    while frontier and len(states) < 40:
        q = frontier.pop()
        if q in seen:
            continue
        seen.add(q)
        states.append(q)
        frontier.extend(arena.successors(q))
    assert any(len([o for o in  __import__('gologsynth').quotient.state_anons(q)]) for q in states)
    for i, qa in enumerate(states):
        for qb in states[i:]:
            same_key = canonicalize(qa) == canonicalize(qb)
            witness = isomorphic(qa, qb) is not None
            assert same_key == witness


def test_environment_values_participate_in_renaming():
    pb = micro_problem()
    a0, a1 = anon_object(0), anon_object(1)
    q1 = _state_with(pb, {}, {"step1": {(a0,)}}, env_vals=(("y", a0),))
    q2 = _state_with(pb, {}, {"step1": {(a1,)}}, env_vals=(("y", a1),))
    q3 = _state_with(pb, {}, {"step1": {(a0,)}}, env_vals=(("y", a1),))
    assert canonicalize(q1) == canonicalize(q2)
    assert canonicalize(q1) != canonicalize(q3)


def test_micro_quotient_hand_counted():
    pb = micro_problem()
    fa = build_finite_arena(pb)
    # hand count: initial target turn, two system steps, final target turn
    assert len(fa.keys) == 4
    assert fa.initial in fa.keys


def test_quotient_invariant_under_pool_size():
    base = build_finite_arena(micro_problem(pool=1))
    wide = build_finite_arena(micro_problem(pool=3))
    assert set(base.keys) == set(wide.keys)
    assert base.edges == wide.edges


def test_quotient_invariant_under_initial_anon_renaming():
    a0, a1, a5 = anon_object(0), anon_object(1), anon_object(5)
    pb1 = chain_problem(chain=1, anon_seed=(a0, a1), bound=14)
    pb2 = chain_problem(chain=1, anon_seed=(a1, a5), bound=14)
    fa1 = build_finite_arena(pb1)
    fa2 = build_finite_arena(pb2)
    assert set(fa1.keys) == set(fa2.keys)
    assert fa1.edges == fa2.edges


def test_concrete_arena_matches_quotient_on_micro():
    pb = micro_problem()
    fa = build_finite_arena(pb)
    ca = build_concrete_arena(pb)
    assert len(ca.keys) == 4
    assert {canonicalize(ca.reps[k]) for k in ca.keys} == set(fa.keys)


def test_arena_genericity_rename_then_expand():
    """Expanding a renamed state equals renaming the expansions."""
    pb = chain_problem(chain=1, body_pick=True, anon_seed=(anon_object(0), anon_object(1)), bound=14)
    arena = Arena(pb)
    swap = {anon_object(0): anon_object(1), anon_object(1): anon_object(0)}
    count = 0
    frontier = [arena.initial()]
    seen = set()
    while frontier and count < 25:
        q = frontier.pop()
        if q in seen:
            continue
        seen.add(q)
        count += 1
        renamed = rename_state(q, swap)
        lhs = {canonicalize(rename_state(s, swap)) for s in arena.successors(q)}
        rhs = {canonicalize(s) for s in Arena(pb).successors(renamed)}
        assert lhs == rhs
        frontier.extend(arena.successors(q))


def test_bound_exceeded_with_trace():
    pb = spawn_problem(bound=3)
    with pytest.raises(BoundExceeded) as exc:
        build_finite_arena(pb)
    err = exc.value
    assert err.state is not None
    assert len(err.trace) >= 2
    # the trace replays from the initial state to the offending one
    fa_keys = set(err.trace)
    assert len(fa_keys) == len(err.trace)
