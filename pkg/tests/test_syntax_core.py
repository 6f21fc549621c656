import itertools

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hitkernel.syntax_core import (
    EMPTY, App, Binder, J, Lam, NatElim, NegativeIndex, Pair, Pi, Sigma, Star,
    Substitution, TypingContext, Unit, Var, Zero, children, free_vars, instantiate,
    shift, size, substitute,
)
from strategies import raw_terms

PROPS = settings(max_examples=200, deadline=None, suppress_health_check=list(HealthCheck))


def test_shift_respects_cutoff():
    t = Lam(App(Var(0), Var(1)))
    assert shift(t, 0, 2) == Lam(App(Var(0), Var(3)))
    assert shift(t, 1, 2) == t


def test_negative_shift_raises():
    with pytest.raises(NegativeIndex):
        shift(Var(0), 0, -1)


def test_substitute_lowers_outer_indices():
    # (x0 x2)[v/0] = v x1
    t = App(Var(0), Var(2))
    assert substitute(t, 0, Star()) == App(Star(), Var(1))


def test_substitute_under_binder_shifts_value():
    t = Lam(App(Var(1), Var(0)))
    assert substitute(t, 0, Var(5)) == Lam(App(Var(6), Var(0)))


def test_binding_metadata_of_j_and_natelim():
    t = J(Var(3), Var(1), Var(0), Var(0), Var(0))
    assert [k for _, k in children(t)] == [3, 1, 0, 0, 0]
    n = NatElim(Var(0), Zero(), Var(0), Zero())
    assert [k for _, k in children(n)] == [1, 0, 2, 0]
    assert [k for _, k in children(Binder(4, Var(0)))] == [4]


def test_instantiate_uses_binding_order():
    body = Pair(Var(1), Var(0))     # binds a then b
    assert instantiate(body, (Star(), Unit())) == Pair(Star(), Unit())


def test_parallel_substitution_offset():
    s = Substitution((Star(),), offset=1)
    assert s.apply(App(Var(0), Var(1))) == App(Star(), Var(1))


def test_free_vars_and_size():
    t = Lam(App(Var(0), Var(3)))
    assert free_vars(t) == {2}
    assert size(t) == 4


def test_context_lookup_shifts():
    ctx = EMPTY.extend(Unit(), "a").extend(Pi(Unit(), Var(1)), "f")
    assert ctx.lookup(0) == Pi(Unit(), Var(2))
    assert ctx.names == ("a", "f")
    with pytest.raises(IndexError):
        ctx.lookup(2)
    assert isinstance(ctx, TypingContext)


# -- a named calculus with capture-avoiding substitution, as an oracle ------------

OUTER = ("p", "q", "r")


def named_terms(outer=OUTER, bound=(), n=3):
    scope = list(outer) + list(bound)
    leaf = st.one_of(st.just(("star",)), st.sampled_from(scope).map(lambda x: ("var", x)))
    if n == 0:
        return leaf
    name = st.sampled_from(["p", "q", "x", "y"])
    return st.one_of(
        leaf,
        st.tuples(st.just("app"), named_terms(outer, bound, n - 1), named_terms(outer, bound, n - 1)),
        st.tuples(st.just("pair"), named_terms(outer, bound, n - 1), named_terms(outer, bound, n - 1)),
        name.flatmap(lambda x: named_terms(outer, bound + (x,), n - 1).map(lambda b: ("lam", x, b))),
        name.flatmap(lambda x: st.tuples(named_terms(outer, bound, n - 1), named_terms(outer, bound + (x,), n - 1))
                     .map(lambda ab: ("sigma", x, ab[0], ab[1]))),
    )


def fv(t):
    match t:
        case ("var", x):
            return {x}
        case ("star",):
            return set()
        case ("app", f, a) | ("pair", f, a):
            return fv(f) | fv(a)
        case ("lam", x, b):
            return fv(b) - {x}
        case ("sigma", x, a, b):
            return fv(a) | (fv(b) - {x})


def fresh(avoid):
    for i in itertools.count():
        if (n := f"v{i}") not in avoid:
            return n


def rename(t, old, new):
    return nsubst(t, old, ("var", new))


def nsubst(t, x, v):
    match t:
        case ("var", y):
            return v if y == x else t
        case ("star",):
            return t
        case ("app", f, a):
            return ("app", nsubst(f, x, v), nsubst(a, x, v))
        case ("pair", f, a):
            return ("pair", nsubst(f, x, v), nsubst(a, x, v))
        case ("lam", y, b):
            if y == x:
                return t
            if y in fv(v):
                z = fresh(fv(v) | fv(b) | {x})
                y, b = z, rename(b, y, z)
            return ("lam", y, nsubst(b, x, v))
        case ("sigma", y, a, b):
            a = nsubst(a, x, v)
            if y == x:
                return ("sigma", y, a, b)
            if y in fv(v):
                z = fresh(fv(v) | fv(b) | {x})
                y, b = z, rename(b, y, z)
            return ("sigma", y, a, nsubst(b, x, v))


def to_db(t, env):
    """env lists names outermost first."""
    match t:
        case ("var", x):
            return Var(len(env) - 1 - max(i for i, n in enumerate(env) if n == x))
        case ("star",):
            return Star()
        case ("app", f, a):
            return App(to_db(f, env), to_db(a, env))
        case ("pair", f, a):
            return Pair(to_db(f, env), to_db(a, env))
        case ("lam", y, b):
            return Lam(to_db(b, env + (y,)))
        case ("sigma", y, a, b):
            return Sigma(to_db(a, env), to_db(b, env + (y,)))


@PROPS
@given(named_terms(), st.sampled_from(OUTER), st.data())
def test_substitution_matches_named_oracle(t, x, data):
    rest = tuple(n for n in OUTER if n != x)
    v = data.draw(named_terms(rest, n=2))
    idx = len(OUTER) - 1 - OUTER.index(x)
    assert to_db(nsubst(t, x, v), rest) == substitute(to_db(t, OUTER), idx, to_db(v, rest))


# -- cancellation laws ------------------------------------------------------------

@PROPS
@given(raw_terms(depth=2), st.integers(0, 3), st.integers(0, 3))
def test_shift_up_then_down_is_identity(t, c, k):
    assert shift(shift(t, c, k), c, -k) == t


@PROPS
@given(raw_terms(depth=2), raw_terms(depth=2))
def test_substituting_into_weakened_term_is_identity(t, v):
    assert substitute(shift(t, 0, 1), 0, v) == t


@PROPS
@given(raw_terms(depth=2), st.integers(0, 2), st.integers(0, 2))
def test_shifts_compose(t, a, b):
    assert shift(shift(t, 0, a), 0, b) == shift(t, 0, a + b)


@PROPS
@given(raw_terms(depth=3), raw_terms(depth=2))
def test_instantiate_agrees_with_substitute(t, v):
    assert instantiate(t, (v,)) == substitute(t, 0, v)
