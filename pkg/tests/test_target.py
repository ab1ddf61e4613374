import pytest
from hypothesis import given, settings

from shiftcoerce.coherence import GenConfig, gen_contexts, gen_terms, translate, translate_type
from shiftcoerce.surface import parse, show
from shiftcoerce.syntax import App, Const, Unit, Var, alpha_eq, contains_capp, free_vars
from shiftcoerce.target import (
    Converged, Flavor, FuelExhausted, InternalLimit, Stepped, Stuck, Value, coercion_check,
    HOLE, TargetTypeError, erase, erase_coercion, evaluate, iota_normalize, step,
    target_check, target_check_explain,
)

from strategies import decompositions, seeds, target_terms, value


def T(text):
    return parse("term-target", text)


def ty(text):
    return parse("type-target", text)


def test_target_check_examples():
    assert target_check({}, T(r"\x. x"), Flavor.STLC, ty("nat -> nat")) == ty("nat -> nat")
    assert target_check({}, T(r"[top -> id](\x. x)"), Flavor.STLC, ty("nat -> unit")) is not None
    assert target_check({}, T(r"\k1. \k2. k1 (k2 42)"), Flavor.EFFECT,
                        ty("[nat, nat, [nat, nat, nat]]")) is not None
    assert target_check({}, T("1 2"), Flavor.STLC) is None
    assert target_check({}, T("()"), Flavor.STLC) == ty("unit")


def test_target_check_infers_most_general_arrow():
    assert target_check({}, T(r"\x. x"), Flavor.EFFECT) == ty("nat -> nat")
    # the same lambda read as a computation over its continuation
    assert target_check({}, T(r"\k. k 1"), Flavor.EFFECT, ty("[nat, nat, nat]")) is not None
    assert target_check({}, T(r"\k. k 1"), Flavor.EFFECT, ty("(nat -> nat) -> nat")) is not None


def test_continuation_argument_must_be_a_value():
    ok = T(r"[lift id]1 (\y. y)")
    bad = T(r"[lift id]1 ((\x. x) (\y. y))")
    assert target_check({}, ok, Flavor.EFFECT, ty("nat")) is not None
    assert target_check({}, bad, Flavor.EFFECT) is None


def test_effect_environment_must_be_pure():
    eff = {"x": ty("[nat, nat, nat]")}
    assert target_check(eff, T("x"), Flavor.EFFECT) is None
    hole = {HOLE: ty("[nat, nat, nat]")}
    assert target_check(hole, App(Var(HOLE), T(r"\x. x")), Flavor.EFFECT) == ty("nat")
    with pytest.raises(TargetTypeError):
        target_check_explain({}, T("1"), Flavor.EFFECT, ty("unit"))


def test_effect_arrow_needs_arrow_continuation():
    # a lifted value expects a function continuation, not a number
    assert target_check({}, T("[lift id]1 2"), Flavor.EFFECT) is None


@pytest.mark.parametrize("c, src, dst, flavor, ok", [
    ("top", "nat", "unit", Flavor.STLC, True),
    ("lift id", "nat", "[nat, nat, nat]", Flavor.EFFECT, True),
    ("id", "nat", "unit", Flavor.STLC, False),
    ("id o top", "nat", "unit", Flavor.STLC, True),
    ("top -> id", "unit -> nat", "nat -> nat", Flavor.STLC, True),
    ("(id, lift id, id)", "[nat, [nat, nat, nat], nat]", "[nat, nat, nat]", Flavor.EFFECT, True),
    ("lift id", "nat", "[nat, nat, nat]", Flavor.STLC, False),
])
def test_coercion_check(c, src, dst, flavor, ok):
    assert coercion_check(parse("coercion", c), ty(src), ty(dst), flavor) is ok


@pytest.mark.parametrize("term, kind, result", [
    ("[top]5", "iota", "()"),
    (r"([top -> id](\x. x)) 1", "iota", r"[id]((\x. x) ([top]1))"),
    (r"([lift id]7) (\x. x)", "beta", r"[id]((\x. x) 7)"),
    ("2 * 3", "beta", "6"),
    ("[id o top]1", "iota", "[id]([top]1)"),
])
def test_step_examples(term, kind, result):
    r = step(T(term))
    assert isinstance(r, Stepped) and r.kind == kind
    assert r.result == T(result)


def test_step_value_and_stuck():
    assert step(T(r"\x. x")) == Value(T(r"\x. x"))
    assert isinstance(step(T("1 2")), Stuck)


@pytest.mark.parametrize("term, value_, beta, iota", [
    (r"(\f. f 1) ([top -> id](\x. x))", "()", 2, 3),
    ("42", "42", 0, 0),
    ("[id o id]1", "1", 0, 3),
])
def test_evaluate_examples(term, value_, beta, iota):
    assert evaluate(T(term)) == Converged(T(value_), beta, iota)


def test_evaluate_trace():
    lines = []
    evaluate(T(r"(\f. f 1) ([top -> id](\x. x))"), trace=lines.append)
    assert [l.split()[0] for l in lines] == ["beta", "iota", "iota", "beta", "iota"]
    assert lines[-1] == "iota id ()"


def test_evaluate_fuel_and_stuck():
    assert evaluate(T("(fix f x. f x) 1"), beta_fuel=100) == FuelExhausted(100)
    assert isinstance(evaluate(T("1 + (\\x. x)")), Stuck)


def test_iota_cap():
    deep = T("[" + " o ".join(["id"] * 40) + "]1")
    with pytest.raises(InternalLimit):
        evaluate(deep, iota_cap=10)


@pytest.mark.parametrize("term, expected", [
    ("[id]1", r"(\a. a) 1"),
    ("7", "7"),
    ("[lift id]1", r"(\a. \k. (\b. b) (k a)) 1"),
])
def test_erase_examples(term, expected):
    assert alpha_eq(erase(T(term)), T(expected))


def test_erased_lift_simulates_lift_rule():
    k = T(r"\x. x + 1")
    with_coercion = evaluate(App(T("[lift id]1"), k))
    erased = evaluate(App(erase(T("[lift id]1")), k))
    assert with_coercion.value == erased.value == Const(2)


def _closed_corpus(seed, n):
    """Closed target programs at their observable type: translations plugged
    into the canonical observing context."""
    out = []
    for flavor in ("stlc", "effect"):
        cfg = GenConfig(seed=seed, samples=n, flavor=flavor, size=6)
        for s in gen_terms(flavor, cfg, env={}):
            e = translate(flavor, s.derivation)
            t = translate_type(flavor, s.goal)
            ctx = gen_contexts(flavor, t, ty("nat"), GenConfig(seed=seed, contexts=1))[0]
            out.append((flavor, ctx.plug(e)))
    return out


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_step_has_unique_decomposition(seed):
    for _, e in _closed_corpus(seed, 4):
        for _ in range(60):
            ds = decompositions(e)
            r = step(e)
            if value(e):
                assert ds == [] and isinstance(r, Value)
                break
            assert len(ds) == 1, show(e)
            assert isinstance(r, Stepped)
            e = r.result


@settings(max_examples=200)
@given(target_terms)
def test_oracle_agrees_on_arbitrary_terms(e):
    # arbitrary (often ill-typed) terms: at most one decomposition, and step
    # succeeds exactly when there is one whose redex contracts
    ds = decompositions(e)
    assert len(ds) <= 1
    r = step(e)
    if value(e):
        assert isinstance(r, Value)
    elif isinstance(r, Stepped):
        assert len(ds) == 1


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_subject_reduction(seed):
    for flavor, e in _closed_corpus(seed, 3):
        fl = Flavor.STLC if flavor == "stlc" else Flavor.EFFECT
        t = target_check({}, e, fl)
        assert t is not None
        for _ in range(30):
            r = step(e)
            if not isinstance(r, Stepped):
                break
            e = r.result
            assert target_check({}, e, fl, t) is not None, show(e)


@settings(max_examples=200)
@given(target_terms)
def test_iota_only_closure_terminates(e):
    _, n = iota_normalize(e, cap=100_000)
    assert n < 100_000


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_erasure_agrees_at_nat(seed):
    for flavor in ("stlc", "effect"):
        cfg = GenConfig(seed=seed, samples=4, flavor=flavor, size=6)
        for s in gen_terms(flavor, cfg, goal=parse("type-src-stlc", "nat"), env={}):
            e = translate(flavor, s.derivation)
            er = erase(e)
            assert not contains_capp(er)
            a, b = evaluate(e), evaluate(er)
            assert isinstance(a, Converged) == isinstance(b, Converged)
            if isinstance(a, Converged):
                assert a.value == b.value


def test_erase_coercion_is_closed_lambda():
    for text in ["id", "top", "id o top", "top -> id", "lift id", "(id, lift id, id)"]:
        c = erase_coercion(parse("coercion", text))
        assert not contains_capp(c)
        assert evaluate(c) == Converged(c, 0, 0)
    assert Unit() == evaluate(T("[top]((\\x. x) 3)")).value


@settings(max_examples=1500, deadline=None)
@given(target_terms)
def test_well_typed_closed_terms_do_not_get_stuck(e):
    # type safety of the checker on arbitrary terms, in both flavors
    if free_vars(e):
        return
    for fl in Flavor:
        if target_check({}, e, fl) is not None:
            assert not isinstance(evaluate(e, beta_fuel=200), Stuck), (fl, show(e))
