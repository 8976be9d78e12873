"""Single-step semantics, syntactic closure, execution search."""

from __future__ import annotations

import random

import pytest

from gologsynth import fol
from gologsynth.model import (
    ActionSchema,
    BasicActionTheory,
    FluentSchema,
    ObjectDomain,
    SimpleAction,
    SuccessorStateAxiom,
    WorldState,
    anon_object,
    compound,
)
from gologsynth.program import (
    Act,
    ActionTerm,
    Choice,
    Conc,
    Configuration,
    Environment,
    Pick,
    Seq,
    Star,
    Sync,
    Test,
    TRUE_PROG,
    act1,
    closure_bound,
    do_reachable,
    final,
    pick_vars,
    print_program,
    rename_apart,
    syntactic_closure,
    trans,
)

from .gen import random_case
from .oracle import oracle_final, oracle_trans, subst_program

V = fol.Var
O = fol.Obj


def tiny_theory(poss_a=fol.TRUE, poss_b=fol.TRUE):
    domain = ObjectDomain(("o1", "o2"))
    fluents = [FluentSchema("F", 1)]
    actions = [ActionSchema("a", ()), ActionSchema("b", ()), ActionSchema("c", ("x",))]
    poss = {"a": poss_a, "b": poss_b, "c": fol.TRUE}
    ssas = [
        SuccessorStateAxiom(
            "F", ("p",), pos=fol.And((fol.Member("c", (V("p"),)),))
        )
    ]
    initial = WorldState(domain, {})
    return BasicActionTheory(domain, fluents, {}, actions, poss, ssas, initial)


def cfg(prog, theory, env_vars=None):
    env = Environment.for_vars(env_vars if env_vars is not None else pick_vars(prog))
    return Configuration(prog, env, theory.initial)


def test_final_examples():
    th = tiny_theory()
    assert final(cfg(Star(act1("a")), th), th)
    assert not final(cfg(act1("a"), th), th)
    assert final(cfg(Sync(Star(act1("a")), Star(act1("b"))), th), th)


def test_trans_single_action():
    th = tiny_theory()
    steps = trans(cfg(act1("a"), th), th)
    assert len(steps) == 1
    A, c2 = steps[0]
    assert A == compound(SimpleAction("a", ()))
    assert c2.counter == TRUE_PROG
    assert c2.world == th.initial


def test_trans_test_has_no_steps():
    th = tiny_theory()
    assert trans(cfg(Test(fol.TRUE), th), th) == ()


def test_trans_blocked_by_poss():
    th = tiny_theory(poss_a=fol.FALSE)
    assert trans(cfg(act1("a"), th), th) == ()


def test_sync_unions_actions_single_poss_check():
    th = tiny_theory()
    steps = trans(cfg(Sync(act1("a"), act1("b")), th), th)
    assert len(steps) == 1
    A, c2 = steps[0]
    assert A == compound(SimpleAction("a", ()), SimpleAction("b", ()))
    assert c2.counter == Sync(TRUE_PROG, TRUE_PROG)


def test_sync_poss_checked_on_union_not_members():
    # A compound rule can forbid the pair even though both members are possible.
    from gologsynth.model import ActionPattern, CompoundPossRule

    domain = ObjectDomain(("o1",))
    actions = [ActionSchema("a", ()), ActionSchema("b", ())]
    rule = CompoundPossRule(
        patterns=(ActionPattern("a", ()), ActionPattern("b", ())),
        rest_var=None,
        body=fol.FALSE,
    )
    th = BasicActionTheory(
        domain, [], {}, actions, {"a": fol.TRUE, "b": fol.TRUE}, [],
        WorldState(domain, {}), (rule,),
    )
    assert trans(cfg(Sync(act1("a"), act1("b")), th), th) == ()
    assert trans(cfg(Conc(act1("a"), act1("b")), th), th) != ()


def test_pick_instantiates_and_binds_environment():
    th = tiny_theory()
    prog = Pick("x", act1("c", V("x")))
    steps = trans(cfg(prog, th), th)
    # o1, o2 and one fresh object
    chosen = {c.env.get("x") for _, c in steps}
    assert chosen == {"o1", "o2", anon_object(0)}
    for A, c2 in steps:
        (member,) = A.sorted_members()
        assert member.args == (c2.env.get("x"),)
        assert c2.counter == TRUE_PROG
        # the chosen object entered the world through c's effect
        assert c2.world.extension("F") == frozenset({member.args})


def test_interleaved_is_shuffle_of_components():
    th = tiny_theory()
    left, right = act1("a"), Seq(act1("b"), act1("b"))
    steps = trans(cfg(Conc(left, right), th), th)
    for A, c2 in steps:
        assert isinstance(c2.counter, Conc)
        stepped_left = c2.counter.left != left
        stepped_right = c2.counter.right != right
        assert stepped_left != stepped_right


def test_closure_examples():
    a = act1("a")
    b = act1("b")
    assert syntactic_closure(a) == frozenset({a, TRUE_PROG})
    cl = syntactic_closure(Seq(a, b))
    assert {Seq(a, b), Seq(TRUE_PROG, b), b, TRUE_PROG} <= cl
    star = Star(a)
    assert Seq(a, star) in syntactic_closure(star)


def test_closure_transitively_closed():
    rng = random.Random(3)
    for seed in range(40):
        _, prog = random_case(seed, depth=3)
        cl = syntactic_closure(prog)
        for member in cl:
            assert syntactic_closure(member) <= cl | {TRUE_PROG}


def test_do_reachable_examples():
    th = tiny_theory()
    w = th.initial
    assert do_reachable(th, TRUE_PROG, Environment(()), w) == frozenset({w})
    two = do_reachable(th, Seq(act1("c", "o1"), act1("c", "o2")), Environment(()), w)
    expected = th.progress(compound(SimpleAction("c", ("o2",))),
                           th.progress(compound(SimpleAction("c", ("o1",))), w))
    assert two == frozenset({expected})
    assert do_reachable(th, Test(fol.FALSE), Environment(()), w) == frozenset()


# --- oracle agreement -------------------------------------------------------


def compare_with_oracle(theory, prog, max_configs=60):
    """BFS the production configurations; at each one the production step set
    (grounded through the environment) must equal the oracle's."""
    start = Configuration(prog, Environment.for_vars(pick_vars(prog)), theory.initial)
    seen = {start}
    frontier = [start]
    while frontier:
        c = frontier.pop()
        known = frozenset(c.env.values())
        ground = subst_program(c.counter, c.env.bound())
        prod_final = final(c, theory)
        assert prod_final == oracle_final(ground, c.world, theory, known), print_program(ground)
        prod = {
            (A, subst_program(c2.counter, c2.env.bound()), c2.world)
            for A, c2 in trans(c, theory)
        }
        orac = oracle_trans(ground, c.world, theory, known)
        assert prod == orac, (
            f"disagreement on {print_program(ground)}:\n"
            f"production only: {prod - orac}\noracle only: {orac - prod}"
        )
        for _, c2 in trans(c, theory):
            if c2 not in seen and len(seen) < max_configs:
                seen.add(c2)
                frontier.append(c2)


@pytest.mark.parametrize("seed", range(80))
def test_oracle_agreement_sample(seed):
    theory, prog = random_case(seed)
    compare_with_oracle(theory, prog)


@pytest.mark.parametrize("seed", range(40))
def test_closure_adequacy_sample(seed):
    theory, prog = random_case(seed, depth=3)
    cl = syntactic_closure(prog)
    bound = closure_bound(prog)
    assert len(cl) <= bound
    start = Configuration(prog, Environment.for_vars(pick_vars(prog)), theory.initial)
    seen = {start}
    frontier = [start]
    while frontier:
        c = frontier.pop()
        assert c.counter in cl or c.counter == TRUE_PROG
        for _, c2 in trans(c, theory):
            if c2 not in seen and len(seen) < 50:
                seen.add(c2)
                frontier.append(c2)


def test_trans_final_generic_under_renaming():
    """Renaming anonymous objects commutes with stepping."""
    th = tiny_theory()
    w = WorldState(th.domain, {"F": {(anon_object(0),)}})
    prog = rename_apart(Pick("x", Seq(act1("c", V("x")), act1("c", V("x")))))
    c = Configuration(prog, Environment.for_vars(pick_vars(prog)), w)
    swap = {anon_object(0): anon_object(1), anon_object(1): anon_object(0)}
    c_r = Configuration(prog, c.env.rename(swap), w.rename(swap))
    lhs = {
        (A, c2.counter, c2.env.rename(swap), c2.world.rename(swap))
        for A, c2 in trans(c, th)
    }
    lhs = {
        (compound(*(SimpleAction(a.name, tuple(swap.get(x, x) for x in a.args)) for a in A)),
         counter, env, world)
        for A, counter, env, world in lhs
    }
    rhs = {(A, c2.counter, c2.env, c2.world) for A, c2 in trans(c_r, th)}
    assert lhs == rhs
    assert final(c, th) == final(c_r, th)


def test_unset_pick_variable_raises():
    from gologsynth.errors import UnresolvedPickVariable

    th = tiny_theory()
    bad = Configuration(act1("c", V("x")), Environment.for_vars(["x"]), th.initial)
    with pytest.raises(UnresolvedPickVariable):
        trans(bad, th)


def test_rename_apart():
    prog = Seq(Pick("x", act1("c", V("x"))), Pick("x", act1("c", V("x"))))
    renamed = rename_apart(prog)
    assert len(set(pick_vars(renamed))) == 2
