"""Hypothesis strategies and small independent oracles shared by the tests."""

from hypothesis import strategies as st

from shiftcoerce.syntax import (
    App, ArrowC, CApp, Comp, Cons, Const, Fix, Id, Lam, Lift, Prim, Reset0, Shift0,
    TopC, Unit, Var,
)

NAMES = st.sampled_from(["x", "y", "z", "f", "k", "g"])
CONSTS = st.integers(min_value=0, max_value=50).map(Const)

coercions = st.recursive(
    st.sampled_from([Id(), TopC()]),
    lambda c: st.one_of(
        st.builds(Comp, c, c),
        st.builds(ArrowC, c, c),
        st.builds(Lift, c),
        st.builds(Cons, c, c, c),
    ),
    max_leaves=6,
)


def _terms(extra_leaves=(), extra_nodes=()):
    leaves = st.one_of(NAMES.map(Var), CONSTS, *extra_leaves)

    def grow(t):
        return st.one_of(
            st.builds(Lam, NAMES, t),
            st.builds(App, t, t),
            st.builds(Fix, NAMES, NAMES, t),
            st.builds(Prim, st.sampled_from(["+", "*"]), t, t),
            *(node(t) for node in extra_nodes),
        )

    return st.recursive(leaves, grow, max_leaves=12)


stlc_terms = _terms()
eff_terms = _terms(extra_nodes=(lambda t: st.builds(Shift0, NAMES, t),
                                lambda t: st.builds(Reset0, t)))
target_terms = _terms(extra_leaves=(st.just(Unit()),),
                      extra_nodes=(lambda t: st.builds(CApp, coercions, t),))

seeds = st.integers(min_value=0, max_value=2**31)


# ------------------------------------------------------- target oracle


def value(e) -> bool:
    if isinstance(e, (Var, Lam, Fix, Const, Unit)):
        return True
    return isinstance(e, CApp) and isinstance(e.coercion, (ArrowC, Lift, Cons)) and value(e.body)


def redex(e) -> bool:
    """Does ``e`` match the left-hand side of some reduction rule?"""
    if isinstance(e, App) and value(e.fun) and value(e.arg):
        f = e.fun
        return isinstance(f, (Lam, Fix)) or isinstance(f, CApp)
    if isinstance(e, Prim):
        return isinstance(e.left, Const) and isinstance(e.right, Const)
    if isinstance(e, CApp) and value(e.body):
        return isinstance(e.coercion, (Id, Comp, TopC))
    return False


def decompositions(e):
    """All splits of ``e`` into an evaluation context and a redex.

    Contexts: holes under the function of an application, under its argument
    once the function is a value, under either operand of a primitive (left
    to right) and under a coercion application.
    """
    out = [((), e)] if redex(e) else []
    if isinstance(e, App):
        out += [((0,) + p, r) for p, r in decompositions(e.fun)]
        if value(e.fun):
            out += [((1,) + p, r) for p, r in decompositions(e.arg)]
    elif isinstance(e, Prim):
        out += [((0,) + p, r) for p, r in decompositions(e.left)]
        if value(e.left):
            out += [((1,) + p, r) for p, r in decompositions(e.right)]
    elif isinstance(e, CApp):
        out += [((0,) + p, r) for p, r in decompositions(e.body)]
    return out
