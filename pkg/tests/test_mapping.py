"""Mapping rules: lookup, observation routing, TransObs/FinalObs."""

from __future__ import annotations

import pytest

from gologsynth import fol, program
from gologsynth.errors import NoMappingForAction
from gologsynth.mapping import observation_equivalence, final_obs, trans_obs
from gologsynth.model import SimpleAction, WorldState, compound
from gologsynth.program import Configuration, Environment, Test, TRUE_PROG, act1

from .instances import chain_problem, micro_problem

V = fol.Var
O = fol.Obj


def test_lookup_mapping_binding():
    pb = micro_problem()
    body, binding = pb.mappings.lookup(compound(SimpleAction("A", ("p",))))
    assert binding == {"x": "p"}
    pend = pb.mappings.pending_config(compound(SimpleAction("A", ("p",))), pb.theory_s.initial)
    assert pend.env.get("x") == "p"
    assert pend.counter == body


def test_lookup_unmapped_action():
    pb = micro_problem()
    with pytest.raises(NoMappingForAction):
        pb.mappings.lookup(compound(SimpleAction("B", ("p",))))
    with pytest.raises(NoMappingForAction):
        pb.mappings.lookup(
            compound(SimpleAction("A", ("p",)), SimpleAction("A", ("1",)))
        )


def test_observable_test_routed_to_system_world():
    pb = chain_problem(chain=1, observe=True)
    # finished(p) is defined by st1(p) on the system side
    w_t = pb.theory_t.initial  # finished is false target-side
    w_s_done = WorldState(pb.theory_s.domain, {"st1": {("p",)}})
    cfg = Configuration(Test(fol.Atom("finished", (O("p"),))), Environment(()), w_t)
    assert final_obs(cfg, w_s_done, pb.theory_t, pb.mappings)
    assert not final_obs(cfg, pb.theory_s.initial, pb.theory_t, pb.mappings)
    # without observation routing the test would read the target world
    assert not program.final(cfg, pb.theory_t)


def test_non_observable_tests_unaffected():
    pb = chain_problem(chain=1, observe=True)
    cfg = Configuration(
        Test(fol.Atom("done_t", (O("p"),))), Environment(()), pb.theory_t.initial
    )
    for w_s in (pb.theory_s.initial, WorldState(pb.theory_s.domain, {"st1": {("p",)}})):
        assert final_obs(cfg, w_s, pb.theory_t, pb.mappings) == program.final(cfg, pb.theory_t)


def test_trans_obs_equals_trans_without_observables():
    pb = micro_problem()
    cfg = Configuration(
        pb.target, Environment.for_vars(program.pick_vars(pb.target)), pb.theory_t.initial
    )
    via_obs = trans_obs(cfg, pb.theory_s.initial, pb.theory_t, pb.mappings)
    plain = program.trans(cfg, pb.theory_t)
    assert via_obs == plain


def test_trans_obs_sequencing_uses_observed_finality():
    """A sequence whose head is an observable test steps into its tail only
    when the observation holds on the system world."""
    pb = chain_problem(chain=1, observe=True)
    prog = program.Seq(Test(fol.Atom("finished", (O("p"),))), act1("check", "p"))
    cfg = Configuration(prog, Environment(()), pb.theory_t.initial)
    w_s_done = WorldState(pb.theory_s.domain, {"st1": {("p",)}})
    assert trans_obs(cfg, w_s_done, pb.theory_t, pb.mappings)
    assert not trans_obs(cfg, pb.theory_s.initial, pb.theory_t, pb.mappings)


def test_mixed_test_evaluated_atom_by_atom():
    pb = chain_problem(chain=1, observe=True)
    mixed = fol.And(
        (
            fol.Atom("finished", (O("p"),)),   # observable: system world
            fol.Not(fol.Atom("done_t", (O("p"),))),  # plain: target world
        )
    )
    cfg = Configuration(Test(mixed), Environment(()), pb.theory_t.initial)
    w_s_done = WorldState(pb.theory_s.domain, {"st1": {("p",)}})
    assert final_obs(cfg, w_s_done, pb.theory_t, pb.mappings)


def test_observation_equivalence():
    pb = chain_problem(chain=1, observe=True)
    w_t0 = pb.theory_t.initial
    w_s0 = pb.theory_s.initial
    assert observation_equivalence(w_t0, w_s0, pb.mappings)
    w_t1 = WorldState(pb.theory_t.domain, {"finished": {("p",)}, "done_t": {("p",)}})
    assert not observation_equivalence(w_t1, w_s0, pb.mappings)
    w_s1 = WorldState(pb.theory_s.domain, {"st1": {("p",)}})
    assert observation_equivalence(w_t1, w_s1, pb.mappings)
