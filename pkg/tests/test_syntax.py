import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftcoerce.surface import parse
from shiftcoerce.syntax import (
    App, CApp, Const, Fix, Id, Lam, Prim, Var, alpha_eq, free_vars, fresh_name, is_value,
    nameless, subst, term_size,
)

from strategies import NAMES, target_terms


def T(text):
    return parse("term-target", text)


@pytest.mark.parametrize("term, x, v, expected", [
    ("x", "x", "1", "1"),
    (r"\y. x y", "x", r"\z. z", r"\y. (\z. z) y"),
    (r"\x. x", "x", "1", r"\x. x"),
    ("fix f x. f y", "y", "2", "fix f x. f 2"),
    ("fix f x. f y", "f", "2", "fix f x. f y"),
])
def test_subst_examples(term, x, v, expected):
    assert subst(T(term), x, T(v)) == T(expected)


def test_subst_avoids_capture():
    out = subst(T(r"\y. x"), "x", Var("y"))
    assert isinstance(out, Lam) and out.param != "y"
    assert free_vars(out) == {"y"}


@pytest.mark.parametrize("a, b, same", [
    (r"\x. x", r"\y. y", True),
    (r"\x. \y. x", r"\a. \b. b", False),
    ("fix f x. f x", "fix g y. g y", True),
    ("fix f x. x", "fix f x. f", False),
    ("x", "y", False),
    ("[lift id]1", "[lift id]1", True),
])
def test_alpha_eq_examples(a, b, same):
    assert alpha_eq(T(a), T(b)) is same


def test_free_vars():
    assert free_vars(T(r"\x. x y (fix f z. f w)")) == {"y", "w"}


def test_fresh_name_avoids():
    assert fresh_name("x", {"x", "x1"}) not in {"x", "x1"}


def test_values():
    assert is_value(T(r"\x. x"))
    assert is_value(T("[id -> top](fix f x. x)"))
    assert is_value(T("[lift id]1"))
    assert not is_value(T("[id]1"))
    assert not is_value(T("(\\x. x) 1"))
    assert term_size(App(Var("f"), CApp(Id(), Const(1)))) == 4


def rename_bound(e, counter=None):
    """Give every binder a brand-new name."""
    counter = counter if counter is not None else iter(range(10**6))
    if isinstance(e, Lam):
        x = f"r{next(counter)}"
        return Lam(x, rename_bound(subst(e.body, e.param, Var(x)), counter))
    if isinstance(e, Fix):
        f, x = f"r{next(counter)}", f"r{next(counter)}"
        body = subst(e.body, e.param, Var(x)) if e.param != e.fun else e.body
        body = subst(body, e.fun, Var(f))
        if e.param == e.fun:
            x = f
        return Fix(f, x, rename_bound(body, counter))
    if isinstance(e, App):
        return App(rename_bound(e.fun, counter), rename_bound(e.arg, counter))
    if isinstance(e, Prim):
        return Prim(e.op, rename_bound(e.left, counter), rename_bound(e.right, counter))
    if isinstance(e, CApp):
        return CApp(e.coercion, rename_bound(e.body, counter))
    return e


@given(target_terms)
def test_alpha_eq_reflexive(e):
    assert alpha_eq(e, e)


@given(target_terms, target_terms)
def test_alpha_eq_symmetric(a, b):
    assert alpha_eq(a, b) == alpha_eq(b, a)


@given(target_terms, target_terms, target_terms)
def test_alpha_eq_transitive(a, b, c):
    if alpha_eq(a, b) and alpha_eq(b, c):
        assert alpha_eq(a, c)


@given(target_terms, NAMES)
def test_alpha_eq_matches_nameless(e, x):
    e2 = Lam(x, e)
    assert alpha_eq(e2, Lam("fresh_w", subst(e, x, Var("fresh_w"))))
    assert nameless(e2) == nameless(Lam("fresh_w", subst(e, x, Var("fresh_w"))))


@given(target_terms, NAMES, st.integers(0, 9))
def test_subst_closed_removes_variable(e, x, n):
    assert x not in free_vars(subst(e, x, Const(n)))


@given(target_terms, NAMES)
def test_subst_of_absent_variable_is_identity(e, x):
    if x not in free_vars(e):
        assert subst(e, x, Const(0)) == e


@settings(max_examples=200)
@given(target_terms)
def test_is_value_stable_under_renaming(e):
    r = rename_bound(e)
    assert alpha_eq(r, e)
    assert is_value(r) == is_value(e)
