"""The target calculi: flavored typechecking, beta/iota reduction and erasure.

Both target flavors share one term language.  The STLC flavor has ``unit``
and the ``top`` coercion; the effect flavor has the CPS arrow ``[t, T, U]``
and the ``lift``/cons coercions.  Reduction is call-by-value, left to right;
the rules of the two flavors never overlap, so one engine serves both.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .surface import show
from .syntax import (
    PRIM_OPS, App, ArrowC, ArrowT, CApp, Comp, Cons, Const, EffArrowT, Fix, Id, Lam,
    Lift, NatT, Prim, TopC, Unit, UnitT, Var, fresh_name, is_value, subst,
)


class Flavor(str, enum.Enum):
    STLC = "stlc"
    EFFECT = "effect"


# -------------------------------------------------------------- outcomes


@dataclass(frozen=True)
class Converged:
    value: object
    beta: int
    iota: int


@dataclass(frozen=True)
class FuelExhausted:
    budget: int
    iota: int = 0


@dataclass(frozen=True)
class Stuck:
    term: object
    beta: int = 0
    iota: int = 0


Outcome = Union[Converged, FuelExhausted, Stuck]


class InternalLimit(RuntimeError):
    """The iota safety cap tripped; iota reduction should always terminate."""


# ---------------------------------------------------------- typechecking


class TargetTypeError(Exception):
    def __init__(self, rule: str, message: str):
        self.rule = rule
        super().__init__(f"{rule}: {message}")


# Inside the checker both arrows share one constructor ``("fun", kind, a, b)``.
# A plain arrow ``a -> b`` has kind "pure"; an effect arrow ``[t, T, U]`` is
# ``("fun", "eff", ("fun", "pure", t, T), U)``, the type of a function taking
# its continuation.  The kind may be a variable, so a lambda or an application
# never has to choose between the two readings up front and checking needs no
# backtracking.  The one non-equational side condition, that an effect arrow
# takes a plain arrow, is kept as a pending pair and discharged at the end.

_PURE, _EFF = "pure", "eff"


class _Var:
    __slots__ = ("pure", "kind")

    def __init__(self, pure=False, kind=False):
        self.pure, self.kind = pure, kind


class _Checker:
    def __init__(self, flavor: Flavor):
        self.flavor = Flavor(flavor)
        self.effect = self.flavor is Flavor.EFFECT
        self.subst: dict = {}
        self.pending: list = []  # (kind, domain): an effect kind needs an arrow domain

    def fresh(self, pure=False):
        return _Var(pure)

    def fun(self, dom, cod, kind=None):
        if kind is None:
            kind = _Var(kind=True) if self.effect else _PURE
        return ("fun", kind, dom, cod)

    # -- unification
    def walk(self, t):
        while isinstance(t, _Var) and t in self.subst:
            t = self.subst[t]
        return t

    def occurs(self, v, t) -> bool:
        t = self.walk(t)
        if t is v:
            return True
        return isinstance(t, tuple) and any(self.occurs(v, p) for p in t[1:])

    def unify(self, a, b) -> bool:
        a, b = self.walk(a), self.walk(b)
        if a is b or (isinstance(a, str) and a == b):
            return True
        if isinstance(b, _Var) and not isinstance(a, _Var):
            a, b = b, a
        if isinstance(a, _Var):
            if isinstance(b, _Var) and a.pure and not b.pure:
                a, b = b, a
            if self.occurs(a, b):
                return False
            self.subst[a] = b
            if a.pure:
                return self.make_pure(b)
            return True
        if isinstance(a, tuple) and isinstance(b, tuple) and a[0] == b[0]:
            return all(self.unify(x, y) for x, y in zip(a[1:], b[1:]))
        return False

    def make_pure(self, t) -> bool:
        t = self.walk(t)
        if isinstance(t, _Var):
            if not t.pure:
                self.subst[t] = _Var(pure=True)
            return True
        if isinstance(t, tuple) and t[0] == "fun":
            return self.unify(t[1], _PURE)
        return True

    def require(self, ok: bool, rule: str, message):
        if not ok:
            raise TargetTypeError(rule, message() if callable(message) else message)

    def discharge(self):
        """Effect arrows must take plain arrows; unresolved kinds are plain."""
        changed = True
        while changed:
            changed = False
            for kind, dom in list(self.pending):
                if self.walk(kind) == _EFF:
                    self.pending.remove((kind, dom))
                    changed = True
                    self.require(self.unify(dom, self.fun(_Var(pure=True), _Var(), _PURE)),
                                 "T-KAbs", lambda: f"continuation of type {self.show(dom)}")
        for kind, _ in self.pending:
            self.unify(kind, _PURE)

    # -- conversion
    def internal(self, t):
        if isinstance(t, NatT):
            return "nat"
        if isinstance(t, UnitT):
            return "unit"
        if isinstance(t, ArrowT):
            return self.fun(self.internal(t.dom), self.internal(t.cod), _PURE)
        if isinstance(t, EffArrowT):
            k = self.fun(self.internal(t.carrier), self.internal(t.answer), _PURE)
            return self.fun(k, self.internal(t.rest), _EFF)
        raise TypeError(f"not a target type: {t!r}")

    def external(self, t):
        t = self.walk(t)
        if isinstance(t, _Var) or t == "nat":
            return NatT()
        if t == "unit":
            return UnitT()
        _, kind, dom, cod = t
        if self.walk(kind) == _EFF:
            k = self.walk(dom)
            return EffArrowT(self.external(k[2]), self.external(k[3]), self.external(cod))
        return ArrowT(self.external(dom), self.external(cod))

    def show(self, t) -> str:
        return show(self.external(t))

    # -- coercions: c : src |> dst
    def coercion(self, c, src, dst):
        def need(ok, rule, what):
            self.require(ok, rule, lambda: f"`{show(c)}` {what}, not "
                                           f"{self.show(src)} |> {self.show(dst)}")
        if isinstance(c, Id):
            need(self.unify(src, dst), "S-Refl", "needs equal types")
        elif isinstance(c, Comp):
            mid = self.fresh()
            self.coercion(c.inner, src, mid)
            self.coercion(c.outer, mid, dst)
        elif isinstance(c, TopC):
            need(not self.effect, "S-Top", "is an STLC coercion")
            need(self.unify(dst, "unit"), "S-Top", "needs a unit target")
        elif isinstance(c, ArrowC):
            a1, r1, a2, r2 = self.fresh(True), self.fresh(), self.fresh(True), self.fresh()
            need(self.unify(src, self.fun(a1, r1, _PURE))
                 and self.unify(dst, self.fun(a2, r2, _PURE)), "S-Arrow", "needs arrow types")
            self.coercion(c.arg, a2, a1)
            self.coercion(c.res, r1, r2)
        elif isinstance(c, Lift):
            need(self.effect, "S-Lift", "is an effect coercion")
            t, t1, t2 = self.fresh(True), self.fresh(), self.fresh()
            need(self.unify(src, t) and self.unify(dst, self.internal_eff(t, t1, t2)),
                 "S-Lift", "needs a pure source and an effect target")
            self.coercion(c.inner, t1, t2)
        elif isinstance(c, Cons):
            need(self.effect, "S-Cons", "is an effect coercion")
            t1, a1, u1 = self.fresh(True), self.fresh(), self.fresh()
            t2, a2, u2 = self.fresh(True), self.fresh(), self.fresh()
            need(self.unify(src, self.internal_eff(t1, a1, u1))
                 and self.unify(dst, self.internal_eff(t2, a2, u2)), "S-Cons", "needs effect types")
            self.coercion(c.carrier, t1, t2)
            self.coercion(c.cont, a2, a1)
            self.coercion(c.rest, u1, u2)
        else:
            raise TypeError(f"not a coercion: {c!r}")

    def internal_eff(self, t, a, u):
        return self.fun(self.fun(t, a, _PURE), u, _EFF)

    # -- terms
    def term(self, env, e, goal):
        def need(ok, rule):
            self.require(ok, rule, lambda: f"`{show(e)}` cannot have type {self.show(goal)}")
        if isinstance(e, Var):
            self.require(e.name in env, "T-Var", lambda: f"unbound variable {e.name}")
            need(self.unify(goal, env[e.name]), "T-Var")
        elif isinstance(e, Const):
            need(self.unify(goal, "nat"), "T-Const")
        elif isinstance(e, Unit):
            self.require(not self.effect, "T-Top", "unit outside the STLC flavor")
            need(self.unify(goal, "unit"), "T-Top")
        elif isinstance(e, Lam):
            # plain abstraction, or one over a continuation
            dom, cod = self.fresh(True), self.fresh()
            f = self.fun(dom, cod)
            need(self.unify(goal, f), "T-Abs")
            self.pending.append((f[1], dom))
            self.term({**env, e.param: dom}, e.body, cod)
        elif isinstance(e, Fix):
            dom, cod = self.fresh(True), self.fresh()
            f = self.fun(dom, cod, _PURE)
            need(self.unify(goal, f), "T-Fix")
            self.term({**env, e.fun: f, e.param: dom}, e.body, cod)
        elif isinstance(e, App):
            # plain application, or application to a continuation (a value)
            arg = self.fresh(True)
            f = self.fun(arg, goal)
            if not is_value(e.arg):
                self.unify(f[1], _PURE)
            self.pending.append((f[1], arg))
            self.term(env, e.fun, f)
            self.term(env, e.arg, arg)
        elif isinstance(e, Prim):
            need(self.unify(goal, "nat"), "T-Prim")
            self.term(env, e.left, "nat")
            self.term(env, e.right, "nat")
        elif isinstance(e, CApp):
            src = self.fresh()
            self.term(env, e.body, src)
            self.coercion(e.coercion, src, goal)
        else:
            raise TargetTypeError("syntax", f"`{show(e)}` is not a target term")


def well_formed(t, flavor: Flavor, pure: bool = False) -> bool:
    """Is ``t`` a type of the flavor (a pure one if ``pure``)?"""
    effect = Flavor(flavor) is Flavor.EFFECT
    if isinstance(t, NatT):
        return True
    if isinstance(t, UnitT):
        return not effect
    if isinstance(t, ArrowT):
        return well_formed(t.dom, flavor, True) and well_formed(t.cod, flavor)
    if isinstance(t, EffArrowT):
        return (effect and not pure and well_formed(t.carrier, flavor, True)
                and well_formed(t.answer, flavor) and well_formed(t.rest, flavor))
    return False


def target_check_explain(env: dict, e, flavor: Flavor, expected=None):
    """Type of ``e`` (``expected`` if given); raise ``TargetTypeError`` otherwise.

    Without ``expected`` the most general type is returned with free type
    variables read as ``nat``.
    """
    ck = _Checker(flavor)
    for x, t in env.items():
        if not well_formed(t, flavor, pure=ck.effect and x != HOLE):
            raise TargetTypeError("env", f"{x} : {show(t)} is not allowed in this flavor")
    if expected is not None and not well_formed(expected, flavor):
        raise TargetTypeError("type", f"{show(expected)} is not a type of this flavor")
    goal = ck.fresh() if expected is None else ck.internal(expected)
    ck.term({x: ck.internal(t) for x, t in env.items()}, e, goal)
    ck.discharge()
    return expected if expected is not None else ck.external(goal)


def target_check(env: dict, e, flavor: Flavor, expected=None):
    """Type of ``e`` in the given flavor or ``None``."""
    try:
        return target_check_explain(env, e, flavor, expected)
    except TargetTypeError:
        return None


def coercion_check(c, src, dst, flavor: Flavor) -> bool:
    if not (well_formed(src, flavor) and well_formed(dst, flavor)):
        return False
    ck = _Checker(flavor)
    try:
        ck.coercion(c, ck.internal(src), ck.internal(dst))
        ck.discharge()
    except TargetTypeError:
        return False
    return True


HOLE = "□"


# ---------------------------------------------------------------- stepping


@dataclass(frozen=True)
class Value:
    term: object


@dataclass(frozen=True)
class Stepped:
    kind: str  # "beta" or "iota"
    rule: str
    result: object


def contract(f, a):
    """Contract the application of value ``f`` to value ``a``: (kind, rule, term) or None."""
    if isinstance(f, Lam):
        return "beta", "lam", subst(f.body, f.param, a)
    if isinstance(f, Fix):
        body = subst(f.body, f.param, a)
        if f.fun != f.param:
            body = subst(body, f.fun, f)
        return "beta", "fix", body
    if isinstance(f, CApp):
        c, v1 = f.coercion, f.body
        if isinstance(c, Lift):
            return "beta", "lift", CApp(c.inner, App(a, v1))
        if isinstance(c, ArrowC):
            return "iota", "arrow", CApp(c.res, App(v1, CApp(c.arg, a)))
        if isinstance(c, Cons):
            return "iota", "cons", CApp(c.rest, App(v1, CApp(ArrowC(c.carrier, c.cont), a)))
    return None


def contract_coercion(c, v):
    if isinstance(c, Id):
        return "iota", "id", v
    if isinstance(c, Comp):
        return "iota", "comp", CApp(c.outer, CApp(c.inner, v))
    if isinstance(c, TopC):
        return "iota", "top", Unit()
    return None


def contract_prim(op, a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return "beta", "prim", Const(PRIM_OPS[op](a.value, b.value))
    return None


def step(e) -> Union[Value, Stepped, Stuck]:
    """One reduction step of a closed target term."""
    if is_value(e):
        return Value(e)
    r = _step(e)
    return Stuck(e) if r is None else Stepped(*r)


def _step(e):
    if isinstance(e, App):
        if not is_value(e.fun):
            r = _step(e.fun)
            return r and (r[0], r[1], App(r[2], e.arg))
        if not is_value(e.arg):
            r = _step(e.arg)
            return r and (r[0], r[1], App(e.fun, r[2]))
        return contract(e.fun, e.arg)
    if isinstance(e, Prim):
        if not is_value(e.left):
            r = _step(e.left)
            return r and (r[0], r[1], Prim(e.op, r[2], e.right))
        if not is_value(e.right):
            r = _step(e.right)
            return r and (r[0], r[1], Prim(e.op, e.left, r[2]))
        return contract_prim(e.op, e.left, e.right)
    if isinstance(e, CApp):
        if not is_value(e.body):
            r = _step(e.body)
            return r and (r[0], r[1], CApp(e.coercion, r[2]))
        return contract_coercion(e.coercion, e.body)
    return None


# ------------------------------------------------------------ evaluation

# evaluation-context frames: (tag, payload...)
_APP_L, _APP_R, _CRC, _PRIM_L, _PRIM_R = range(5)


def plug(frames: list, t):
    """Plug ``t`` into a frame stack (outermost frame first)."""
    for fr in reversed(frames):
        tag = fr[0]
        if tag == _APP_L:
            t = App(t, fr[1])
        elif tag == _APP_R:
            t = App(fr[1], t)
        elif tag == _CRC:
            t = CApp(fr[1], t)
        elif tag == _PRIM_L:
            t = Prim(fr[1], t, fr[2])
        else:
            t = Prim(fr[1], fr[2], t)
    return t


def evaluate(e, beta_fuel: int = 10_000, iota_cap: int = 1_000_000,
             trace: Optional[Callable[[str], None]] = None) -> Outcome:
    """Run ``e`` to a value, counting beta and iota steps separately.

    Fuel limits only beta steps.  Each contraction refocuses in place, so a
    step costs time proportional to the redex rather than the whole term.
    """
    stack: list = []
    beta = iota = 0
    focus, evaluating = e, True
    while True:
        if evaluating:
            t = focus
            if isinstance(t, App):
                stack.append((_APP_L, t.arg))
                focus = t.fun
            elif isinstance(t, Prim):
                stack.append((_PRIM_L, t.op, t.right))
                focus = t.left
            elif isinstance(t, CApp):
                stack.append((_CRC, t.coercion))
                focus = t.body
            elif isinstance(t, (Var, Lam, Fix, Const, Unit)):
                evaluating = False
            else:
                return Stuck(plug(stack, t), beta, iota)
            continue
        v = focus
        if not stack:
            return Converged(v, beta, iota)
        fr = stack.pop()
        tag = fr[0]
        if tag == _APP_L:
            stack.append((_APP_R, v))
            focus, evaluating = fr[1], True
            continue
        if tag == _PRIM_L:
            stack.append((_PRIM_R, fr[1], v))
            focus, evaluating = fr[2], True
            continue
        if tag == _CRC and isinstance(fr[1], (ArrowC, Lift, Cons)):
            focus = CApp(fr[1], v)
            continue
        if tag == _APP_R:
            r, redex = contract(fr[1], v), App(fr[1], v)
        elif tag == _PRIM_R:
            r, redex = contract_prim(fr[1], fr[2], v), Prim(fr[1], fr[2], v)
        else:
            r, redex = contract_coercion(fr[1], v), CApp(fr[1], v)
        if r is None:
            return Stuck(plug(stack, redex), beta, iota)
        kind, rule, result = r
        if kind == "beta":
            if beta >= beta_fuel:
                return FuelExhausted(beta_fuel, iota)
            beta += 1
        else:
            iota += 1
            if iota > iota_cap:
                raise InternalLimit(f"more than {iota_cap} iota steps")
        focus, evaluating = result, True
        if trace is not None:
            trace(f"{kind} {rule} {show(plug(stack, result))}")


def iota_normalize(e, cap: int = 1_000_000):
    """Apply iota steps until a value, a beta redex or a stuck term; (term, count)."""
    n = 0
    while True:
        r = step(e)
        if not isinstance(r, Stepped) or r.kind != "iota":
            return e, n
        n += 1
        if n > cap:
            raise InternalLimit(f"more than {cap} iota steps")
        e = r.result


# ---------------------------------------------------------------- erasure


class _Names:
    def __init__(self, avoid):
        self.avoid = set(avoid)

    def __call__(self, base):
        name = fresh_name(base, self.avoid)
        self.avoid.add(name)
        return name


def erase_coercion(c, names=None):
    """Closed lambda term that behaves like coercion ``c``."""
    names = names or _Names(())
    if isinstance(c, Id):
        a = names("a")
        return Lam(a, Var(a))
    if isinstance(c, TopC):
        a = names("a")
        return Lam(a, Unit())
    if isinstance(c, Comp):
        a = names("a")
        e1, e2 = erase_coercion(c.outer, names), erase_coercion(c.inner, names)
        return Lam(a, App(e1, App(e2, Var(a))))
    if isinstance(c, ArrowC):
        f, a = names("f"), names("a")
        e1, e2 = erase_coercion(c.arg, names), erase_coercion(c.res, names)
        return Lam(f, Lam(a, App(e2, App(Var(f), App(e1, Var(a))))))
    if isinstance(c, Lift):
        a, k = names("a"), names("k")
        return Lam(a, Lam(k, App(erase_coercion(c.inner, names), App(Var(k), Var(a)))))
    if isinstance(c, Cons):
        f, k, a = names("f"), names("k"), names("a")
        e, e1, e2 = (erase_coercion(x, names) for x in (c.carrier, c.cont, c.rest))
        inner = Lam(a, App(e1, App(Var(k), App(e, Var(a)))))
        return Lam(f, Lam(k, App(e2, App(Var(f), inner))))
    raise TypeError(f"not a coercion: {c!r}")


def erase(e):
    """Replace every coercion application ``[c]e`` by ``E(c) e``."""
    if isinstance(e, CApp):
        return App(erase_coercion(e.coercion, _Names(())), erase(e.body))
    if isinstance(e, Lam):
        return Lam(e.param, erase(e.body))
    if isinstance(e, Fix):
        return Fix(e.fun, e.param, erase(e.body))
    if isinstance(e, App):
        return App(erase(e.fun), erase(e.arg))
    if isinstance(e, Prim):
        return Prim(e.op, erase(e.left), erase(e.right))
    return e

