"""Formula evaluation and substitution."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from gologsynth import fol
from gologsynth.errors import MembershipOutsideActionContext, UnboundVariable
from gologsynth.model import (
    CompoundAction,
    ObjectDomain,
    SimpleAction,
    WorldState,
    anon_object,
)

DOMAIN = ObjectDomain(("p", "r1", "driller", "bit1"))


def world(**extensions):
    return WorldState(DOMAIN, {k: set(v) for k, v in extensions.items()})


V = fol.Var
O = fol.Obj


def test_exists_witness():
    w = world(at={("p", "r1")})
    phi = fol.Exists(("j",), fol.Atom("at", (O("p"), V("j"))))
    assert fol.eval_formula(phi, w)


def test_drill_precondition_conjunction():
    w = world(equipd={("driller", "r1")}, ok={("bit1", "d7")})
    phi = fol.And(
        (
            fol.Atom("equipd", (O("driller"), O("r1"))),
            fol.Atom("ok", (O("bit1"), V("d"))),
        )
    )
    assert fol.eval_formula(phi, w, {"d": "d7"})


def test_universal_tautology():
    w = world(at={("p", "r1")})
    phi = fol.Forall(("x",), fol.Implies(fol.Atom("at", (V("x"), O("r1"))),
                                         fol.Atom("at", (V("x"), O("r1")))))
    assert fol.eval_formula(phi, w)
    assert fol.eval_formula(phi, world())


def test_unbound_variable():
    w = world()
    with pytest.raises(UnboundVariable):
        fol.eval_formula(fol.Atom("at", (V("x"), O("r1"))), w)


def test_membership_requires_action_context():
    w = world()
    phi = fol.Member("load", (O("p"),))
    with pytest.raises(MembershipOutsideActionContext):
        fol.eval_formula(phi, w)
    action = CompoundAction([SimpleAction("load", ("p",))])
    assert fol.eval_formula(phi, w, action=action)


def test_membership_quantifies_over_action_objects():
    # The moved object enters the world through the action itself.
    w = world()
    phi = fol.Exists(("z",), fol.Member("load", (fol.Var("z"),)))
    action = CompoundAction([SimpleAction("load", (anon_object(5),))])
    assert fol.eval_formula(phi, w, action=action)


def test_substitute_simple():
    phi = fol.Atom("at", (V("x"), O("r1")))
    assert fol.substitute(phi, {"x": O("p")}) == fol.Atom("at", (O("p"), O("r1")))


def test_substitute_skips_bound():
    phi = fol.Exists(("x",), fol.Atom("at", (V("x"), V("y"))))
    out = fol.substitute(phi, {"y": O("p")})
    assert out == fol.Exists(("x",), fol.Atom("at", (V("x"), O("p"))))


def test_substitute_capture_avoiding():
    phi = fol.Exists(("x",), fol.Atom("at", (V("x"), V("y"))))
    out = fol.substitute(phi, {"y": V("x")})
    assert isinstance(out, fol.Exists)
    bound = out.vars[0]
    assert bound != "x"
    assert out.body == fol.Atom("at", (V(bound), V("x")))


def test_print_round_trips_structure():
    phi = fol.Forall(("x",), fol.Or((fol.Not(fol.Atom("at", (V("x"), O("r1")))), fol.TRUE)))
    text = fol.print_formula(phi)
    assert "forall" in text and "(true)" in text


# --- randomized properties -------------------------------------------------


def random_world(rng: random.Random) -> WorldState:
    objs = ["p", "r1", anon_object(0), anon_object(1)]
    ext = {
        "at": {(rng.choice(objs), rng.choice(objs)) for _ in range(rng.randrange(4))},
        "ok": {(rng.choice(objs),) for _ in range(rng.randrange(3))},
    }
    return WorldState(DOMAIN, ext)


def random_sentence(rng: random.Random, depth: int, scope=()) -> fol.Formula:
    if depth == 0:
        choicez = [
            fol.Atom("at", (rng_term(rng, scope), rng_term(rng, scope))),
            fol.Atom("ok", (rng_term(rng, scope),)),
        ]
        if len(scope) >= 2:
            choicez.append(fol.Eq(fol.Var(scope[0]), fol.Var(scope[1])))
        return rng.choice(choicez)
    k = rng.randrange(5)
    if k == 0:
        return fol.Not(random_sentence(rng, depth - 1, scope))
    if k == 1:
        return fol.And((random_sentence(rng, depth - 1, scope), random_sentence(rng, depth - 1, scope)))
    if k == 2:
        return fol.Or((random_sentence(rng, depth - 1, scope), random_sentence(rng, depth - 1, scope)))
    v = f"v{len(scope)}"
    ctor = fol.Exists if k == 3 else fol.Forall
    return ctor((v,), random_sentence(rng, depth - 1, scope + (v,)))


def rng_term(rng, scope):
    if scope and rng.random() < 0.5:
        return fol.Var(rng.choice(scope))
    return fol.Obj(rng.choice(["p", "r1", anon_object(0), anon_object(1)]))


@given(st.integers(0, 10_000))
@settings(max_examples=120, deadline=None)
def test_eval_invariant_under_anonymous_renaming(seed):
    """Renaming anonymous objects simultaneously in world and formula preserves truth."""
    rng = random.Random(seed)
    w = random_world(rng)
    phi = random_sentence(rng, rng.randrange(3))
    swap = {anon_object(0): anon_object(1), anon_object(1): anon_object(0)}
    lhs = fol.eval_formula(phi, w)
    rhs = fol.eval_formula(fol.rename_objects(phi, swap), w.rename(swap))
    assert lhs == rhs


@given(st.integers(0, 10_000))
@settings(max_examples=120, deadline=None)
def test_classical_rewrites_preserve_eval(seed):
    rng = random.Random(seed)
    w = random_world(rng)
    a = random_sentence(rng, rng.randrange(2))
    b = random_sentence(rng, rng.randrange(2))
    assert fol.eval_formula(fol.Not(fol.Not(a)), w) == fol.eval_formula(a, w)
    demorgan = fol.Or((fol.Not(a), fol.Not(b)))
    assert fol.eval_formula(fol.Not(fol.And((a, b))), w) == fol.eval_formula(demorgan, w)
    body = random_sentence(rng, 1, ("v0",))
    assert fol.eval_formula(fol.Forall(("v0",), body), w) == fol.eval_formula(
        fol.Not(fol.Exists(("v0",), fol.Not(body))), w
    )
