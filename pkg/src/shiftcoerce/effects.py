"""The calculus of delimited control (shift0/reset0) with effect subtyping.

Covers effect subtyping and typing derivations, the type-directed selective
CPS translation into the effect target calculus, and a direct-style
evaluator for source terms that needs no types at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .derivation import (
    DerivationError, Meta, Search, SubDeriv, TypeDeriv, check_closed, enumerate_with,
    replay_with, run_first,
)
from .surface import Skeleton
from .syntax import (
    PRIM_OPS, App, Arrow, ArrowC, ArrowT, CApp, Comp, Cons, Const, Eff, EffArrowT, Fix, Id,
    Lam, Lift, Nat, NatT, Prim, Reset0, Shift0, Var, free_vars, fresh_name, is_pure, subst,
)
from .target import Converged, FuelExhausted, Stuck

TYPE_RULES = frozenset({"T-Var", "T-Abs", "T-App", "T-PApp", "T-Fix", "T-Const", "T-Prim",
                        "T-Sub", "T-Sft", "T-Rst"})
SUB_RULES = frozenset({"S-Refl", "S-Trans", "S-Arrow", "S-Cons", "S-Lift"})

_SYNTAX = {Var: ("T-Var",), Lam: ("T-Abs",), App: ("T-PApp", "T-App"), Fix: ("T-Fix",),
           Const: ("T-Const",), Prim: ("T-Prim",), Shift0: ("T-Sft",), Reset0: ("T-Rst",)}


class EffSearch(Search):
    type_category = "type-src-eff"
    type_rules = TYPE_RULES
    sub_rules = SUB_RULES
    default_type = Nat()

    def syntax_rules(self, term):
        return _SYNTAX.get(type(term), ())

    def _kid(self, env, term, goal, kids, i, path):
        return self.derive(env, term, goal, kids[i], path + (i,), True)

    # typing rules
    def t_var(self, env, term, goal, kids, path, note):
        for _ in self.unify(goal, env[term.name]):
            yield TypeDeriv("T-Var", env, term, goal)

    def t_const(self, env, term, goal, kids, path, note):
        for _ in self.unify(goal, Nat()):
            yield TypeDeriv("T-Const", env, term, goal)

    def t_abs(self, env, term, goal, kids, path, note):
        dom, cod = self.fresh(pure=True), self.fresh()
        for _ in self.unify(goal, Arrow(dom, cod)):
            for d in self._kid({**env, term.param: dom}, term.body, cod, kids, 0, path):
                yield TypeDeriv("T-Abs", env, term, goal, (d,))

    def t_fix(self, env, term, goal, kids, path, note):
        dom, cod = self.fresh(pure=True), self.fresh()
        for _ in self.unify(goal, Arrow(dom, cod)):
            inner = {**env, term.fun: goal, term.param: dom}
            for d in self._kid(inner, term.body, cod, kids, 0, path):
                yield TypeDeriv("T-Fix", env, term, goal, (d,))

    def t_papp(self, env, term, goal, kids, path, note):
        arg_t = self.fresh(pure=True)
        fun_t = Arrow(arg_t, goal)
        bind = self.unify(fun_t, note) if note is not None else iter((None,))
        for _ in bind:
            for d1 in self._kid(env, term.fun, fun_t, kids, 0, path):
                for d2 in self._kid(env, term.arg, arg_t, kids, 1, path):
                    yield TypeDeriv("T-PApp", env, term, goal, (d1, d2))

    def t_app(self, env, term, goal, kids, path, note):
        t1, t2 = self.fresh(pure=True), self.fresh(pure=True)
        u1, u2, u3, u4 = (self.fresh() for _ in range(4))
        fun_t = Eff(Arrow(t2, Eff(t1, u4, u3)), u2, u1)
        arg_t = Eff(t2, u3, u2)
        for _ in self.unify(goal, Eff(t1, u4, u1)):
            bind = self.unify(fun_t, note) if note is not None else iter((None,))
            for _ in bind:
                for d1 in self._kid(env, term.fun, fun_t, kids, 0, path):
                    for d2 in self._kid(env, term.arg, arg_t, kids, 1, path):
                        yield TypeDeriv("T-App", env, term, goal, (d1, d2))

    def t_prim(self, env, term, goal, kids, path, note):
        for _ in self.unify(goal, Nat()):
            for d1 in self._kid(env, term.left, Nat(), kids, 0, path):
                for d2 in self._kid(env, term.right, Nat(), kids, 1, path):
                    yield TypeDeriv("T-Prim", env, term, goal, (d1, d2))

    def t_sft(self, env, term, goal, kids, path, note):
        t, a, u = self.fresh(pure=True), self.fresh(), self.fresh()
        for _ in self.unify(goal, Eff(t, a, u)):
            inner = {**env, term.param: Arrow(t, a)}
            for d in self._kid(inner, term.body, u, kids, 0, path):
                yield TypeDeriv("T-Sft", env, term, goal, (d,))

    def t_rst(self, env, term, goal, kids, path, note):
        t = self.fresh(pure=True)
        for d in self._kid(env, term.body, Eff(t, t, goal), kids, 0, path):
            yield TypeDeriv("T-Rst", env, term, goal, (d,))

    # subtyping rules
    def s_lift(self, lhs, rhs, kids, path, note):
        t, a, u = self.fresh(pure=True), self.fresh(), self.fresh()
        for _ in self.unify(lhs, t):
            for _ in self.unify(rhs, Eff(t, a, u)):
                for d in self.sub(a, u, kids[0], path + (0,)):
                    yield SubDeriv("S-Lift", lhs, rhs, (d,))

    def s_cons(self, lhs, rhs, kids, path, note):
        t1, a1, u1 = self.fresh(pure=True), self.fresh(), self.fresh()
        t2, a2, u2 = self.fresh(pure=True), self.fresh(), self.fresh()
        for _ in self.unify(lhs, Eff(t1, a1, u1)):
            for _ in self.unify(rhs, Eff(t2, a2, u2)):
                for d in self.sub(t1, t2, kids[0], path + (0,)):
                    for d1 in self.sub(a2, a1, kids[1], path + (1,)):
                        for d2 in self.sub(u1, u2, kids[2], path + (2,)):
                            yield SubDeriv("S-Cons", lhs, rhs, (d, d1, d2))

    def s_arrow(self, lhs, rhs, kids, path, note):
        a1, r1 = self.fresh(pure=True), self.fresh()
        a2, r2 = self.fresh(pure=True), self.fresh()
        for _ in self.unify(lhs, Arrow(a1, r1)):
            for _ in self.unify(rhs, Arrow(a2, r2)):
                for d1 in self.sub(a2, a1, kids[0], path + (0,)):
                    for d2 in self.sub(r1, r2, kids[1], path + (1,)):
                        yield SubDeriv("S-Arrow", lhs, rhs, (d1, d2))

    def sub_search(self, lhs, rhs, path):
        a, b = self.store.walk(lhs), self.store.walk(rhs)
        none = (None, None, None)
        yield from self.s_refl(lhs, rhs, none, path, None)
        if isinstance(a, Meta):
            if isinstance(b, Eff):
                yield from self.s_lift(lhs, rhs, none, path, None)
                yield from self.s_cons(lhs, rhs, none, path, None)
            elif isinstance(b, Arrow):
                yield from self.s_arrow(lhs, rhs, none, path, None)
        elif isinstance(b, Meta):
            if isinstance(a, Arrow):
                yield from self.s_arrow(lhs, rhs, none, path, None)
        elif isinstance(b, Eff):
            if isinstance(a, Eff):
                yield from self.s_cons(lhs, rhs, none, path, None)
            else:
                yield from self.s_lift(lhs, rhs, none, path, None)
        elif isinstance(a, Arrow) and isinstance(b, Arrow):
            yield from self.s_arrow(lhs, rhs, none, path, None)


# ------------------------------------------------------------ validation


def well_formed(t, pure: bool = False) -> bool:
    """Types are finite trees whose arrow domains and effect carriers are pure."""
    if isinstance(t, Nat):
        return True
    if isinstance(t, Arrow):
        return is_pure(t.dom) and well_formed(t.dom, True) and well_formed(t.cod)
    if isinstance(t, Eff):
        return (not pure and is_pure(t.carrier) and well_formed(t.carrier, True)
                and well_formed(t.answer) and well_formed(t.rest))
    return False


def validate_sub(d: SubDeriv, path=()):
    def bad(msg):
        raise DerivationError(path, f"{d.rule}: {msg}")
    ps, lhs, rhs = d.premises, d.lhs, d.rhs
    if d.rule not in SUB_RULES:
        bad("not a subtyping rule")
    arity = {"S-Refl": 0, "S-Trans": 2, "S-Arrow": 2, "S-Cons": 3, "S-Lift": 1}[d.rule]
    if len(ps) != arity or not all(isinstance(p, SubDeriv) for p in ps):
        bad("wrong premises")
    if not (well_formed(lhs) and well_formed(rhs)):
        bad("ill-formed type")
    sides = [(p.lhs, p.rhs) for p in ps]
    if d.rule == "S-Refl" and lhs != rhs:
        bad("sides differ")
    elif d.rule == "S-Trans":
        if sides[0][1] != rhs or sides[1][0] != lhs or sides[0][0] != sides[1][1]:
            bad("premises do not chain")
    elif d.rule == "S-Arrow":
        if not (isinstance(lhs, Arrow) and isinstance(rhs, Arrow)):
            bad("sides are not pure arrows")
        if sides != [(rhs.dom, lhs.dom), (lhs.cod, rhs.cod)]:
            bad("premises do not match")
    elif d.rule == "S-Lift":
        if not (is_pure(lhs) and isinstance(rhs, Eff) and rhs.carrier == lhs):
            bad("must lift a pure type into an effect type with the same carrier")
        if sides != [(rhs.answer, rhs.rest)]:
            bad("premise does not match")
    elif d.rule == "S-Cons":
        if not (isinstance(lhs, Eff) and isinstance(rhs, Eff)):
            bad("sides are not effect types")
        want = [(lhs.carrier, rhs.carrier), (rhs.answer, lhs.answer), (lhs.rest, rhs.rest)]
        if sides != want:
            bad("premises do not match")
    for i, p in enumerate(ps):
        validate_sub(p, path + (i,))


def validate(d: TypeDeriv, path=()):
    """Check a concrete typing derivation rule by rule."""
    def bad(msg):
        raise DerivationError(path, f"{d.rule}: {msg}")
    e, t, env, ps = d.term, d.type, d.env, d.premises

    def premise(i, env_, term_, type_):
        p = ps[i]
        if not isinstance(p, TypeDeriv) or p.env != env_ or p.term != term_ or p.type != type_:
            bad(f"premise {i} does not match")
        validate(p, path + (i,))

    if not well_formed(t):
        bad("ill-formed type")
    if not all(is_pure(v) and well_formed(v) for v in env.values()):
        bad("environment must bind pure types")
    if d.rule == "T-Var":
        if not isinstance(e, Var) or env.get(e.name) != t or ps:
            bad("variable type mismatch")
    elif d.rule == "T-Const":
        if not isinstance(e, Const) or t != Nat() or ps:
            bad("constant must be nat")
    elif d.rule == "T-Abs":
        if not isinstance(e, Lam) or not isinstance(t, Arrow) or len(ps) != 1:
            bad("shape")
        premise(0, {**env, e.param: t.dom}, e.body, t.cod)
    elif d.rule == "T-Fix":
        if not isinstance(e, Fix) or not isinstance(t, Arrow) or len(ps) != 1:
            bad("shape")
        premise(0, {**env, e.fun: t, e.param: t.dom}, e.body, t.cod)
    elif d.rule == "T-PApp":
        if not isinstance(e, App) or len(ps) != 2 or not isinstance(ps[0].type, Arrow):
            bad("shape")
        fun_t = ps[0].type
        if fun_t.cod != t:
            bad("result type mismatch")
        premise(0, env, e.fun, fun_t)
        premise(1, env, e.arg, fun_t.dom)
    elif d.rule == "T-App":
        if not isinstance(e, App) or len(ps) != 2 or not isinstance(t, Eff):
            bad("shape")
        fun_t, arg_t = ps[0].type, ps[1].type
        ok = (isinstance(fun_t, Eff) and isinstance(fun_t.carrier, Arrow)
              and isinstance(fun_t.carrier.cod, Eff) and isinstance(arg_t, Eff))
        if not ok:
            bad("premise types have the wrong shape")
        t2, inner = fun_t.carrier.dom, fun_t.carrier.cod
        want_fun = Eff(Arrow(t2, Eff(t.carrier, t.answer, inner.rest)), arg_t.rest, t.rest)
        want_arg = Eff(t2, inner.rest, arg_t.rest)
        if fun_t != want_fun or arg_t != want_arg:
            bad("intermediate answer types do not line up")
        premise(0, env, e.fun, fun_t)
        premise(1, env, e.arg, arg_t)
    elif d.rule == "T-Prim":
        if not isinstance(e, Prim) or t != Nat() or len(ps) != 2:
            bad("shape")
        premise(0, env, e.left, Nat())
        premise(1, env, e.right, Nat())
    elif d.rule == "T-Sft":
        if not isinstance(e, Shift0) or not isinstance(t, Eff) or len(ps) != 1:
            bad("shape")
        premise(0, {**env, e.param: Arrow(t.carrier, t.answer)}, e.body, t.rest)
    elif d.rule == "T-Rst":
        if not isinstance(e, Reset0) or len(ps) != 1 or not isinstance(ps[0].type, Eff):
            bad("shape")
        inner = ps[0].type
        if inner.answer != inner.carrier or inner.rest != t:
            bad("body must have type [t, t, T]")
        premise(0, env, e.body, inner)
    elif d.rule == "T-Sub":
        if len(ps) != 2 or not isinstance(ps[1], SubDeriv):
            bad("shape")
        premise(0, env, e, ps[0].type)
        if ps[1].lhs != ps[0].type or ps[1].rhs != t:
            bad("subtyping premise mismatch")
        validate_sub(ps[1], path + (1,))
    else:
        bad("not a typing rule of this calculus")


# ----------------------------------------------------------- operations


def _check_env(env: dict):
    for x, t in env.items():
        if not (is_pure(t) and well_formed(t)):
            raise ValueError(f"environment entry {x} must have a pure type")


def subtype(t1, t2) -> Optional[SubDeriv]:
    """Canonical (Trans-free) derivation of ``t1 <: t2`` or ``None``."""
    s = EffSearch("canonical")
    return run_first(s, s.sub(t1, t2))


def check(env: dict, e, goal, max_ticks: int = 50_000) -> Optional[TypeDeriv]:
    """Canonical derivation of ``env |- e : goal`` or ``None``."""
    check_closed(env, e)
    _check_env(env)
    s = EffSearch("canonical", max_ticks=max_ticks)
    d = run_first(s, s.derive(env, e, goal))
    if d is not None:
        validate(d)
    return d


def replay(env: dict, e, goal, skel: Skeleton) -> TypeDeriv:
    _check_env(env)
    return replay_with(EffSearch, env, e, goal, skel, validate)


def enumerate_derivations(env: dict, e, goal, budget: int = 2, limit: int = 16) -> list:
    canonical = check(env, e, goal)
    return enumerate_with(EffSearch, env, e, goal, budget, limit, canonical, validate)


def translate_type(t):
    if isinstance(t, Nat):
        return NatT()
    if isinstance(t, Arrow):
        return ArrowT(translate_type(t.dom), translate_type(t.cod))
    if isinstance(t, Eff):
        return EffArrowT(translate_type(t.carrier), translate_type(t.answer),
                         translate_type(t.rest))
    raise TypeError(f"not an effect-calculus type: {t!r}")


def translate_sub(d: SubDeriv):
    ps = d.premises
    if d.rule == "S-Refl":
        return Id()
    if d.rule == "S-Trans":
        return Comp(translate_sub(ps[0]), translate_sub(ps[1]))
    if d.rule == "S-Arrow":
        return ArrowC(translate_sub(ps[0]), translate_sub(ps[1]))
    if d.rule == "S-Lift":
        return Lift(translate_sub(ps[0]))
    if d.rule == "S-Cons":
        return Cons(*(translate_sub(p) for p in ps))
    raise ValueError(f"not an effect subtyping rule: {d.rule}")


def translate_term(d: TypeDeriv):
    e, ps = d.term, d.premises
    if d.rule in ("T-Var", "T-Const"):
        return e
    if d.rule == "T-Abs":
        return Lam(e.param, translate_term(ps[0]))
    if d.rule == "T-Fix":
        return Fix(e.fun, e.param, translate_term(ps[0]))
    if d.rule == "T-PApp":
        return App(translate_term(ps[0]), translate_term(ps[1]))
    if d.rule == "T-Prim":
        return Prim(e.op, translate_term(ps[0]), translate_term(ps[1]))
    if d.rule == "T-Sub":
        return CApp(translate_sub(ps[1]), translate_term(ps[0]))
    if d.rule == "T-Sft":
        return Lam(e.param, translate_term(ps[0]))
    if d.rule == "T-Rst":
        return App(translate_term(ps[0]), Lam("x", Var("x")))
    if d.rule == "T-App":
        fun, arg = translate_term(ps[0]), translate_term(ps[1])
        fv_arg = free_vars(arg)
        k = fresh_name("k", free_vars(fun) | fv_arg)
        f = fresh_name("f", fv_arg | {k})
        x = fresh_name("x", {k, f})
        body = App(App(Var(f), Var(x)), Var(k))
        return Lam(k, App(fun, Lam(f, App(arg, Lam(x, body)))))
    raise ValueError(f"not an effect typing rule: {d.rule}")


def translate_env(env: dict) -> dict:
    return {x: translate_type(t) for x, t in env.items()}


# ------------------------------------------------- direct-style evaluator

# frames of a pure evaluation context
@dataclass(frozen=True)
class AppL:
    arg: object


@dataclass(frozen=True)
class AppR:
    fun: object


@dataclass(frozen=True)
class PrimL:
    op: str
    right: object


@dataclass(frozen=True)
class PrimR:
    op: str
    left: object


def plug_frames(frames, t):
    """Plug ``t`` into a pure context given as frames, outermost first."""
    for fr in reversed(frames):
        if isinstance(fr, AppL):
            t = App(t, fr.arg)
        elif isinstance(fr, AppR):
            t = App(fr.fun, t)
        elif isinstance(fr, PrimL):
            t = Prim(fr.op, t, fr.right)
        else:
            t = Prim(fr.op, fr.left, t)
    return t


def recompose(meta: list, t):
    """Plug ``t`` into a metacontext: a list of pure contexts, outermost first,
    each one after the first delimited by a reset0."""
    for i in range(len(meta) - 1, -1, -1):
        t = plug_frames(meta[i], t)
        if i > 0:
            t = Reset0(t)
    return t


def _src_value(e) -> bool:
    return isinstance(e, (Var, Lam, Fix, Const))


def decompose(e):
    """Split a non-value term into ``(metacontext, redex)``; ``None`` for values.

    The redex is the subterm the next step acts on: a beta/prim redex, a
    shift0, or a reset0 around a value.
    """
    meta: list = [[]]
    t = e
    while True:
        if isinstance(t, App):
            if not _src_value(t.fun):
                meta[-1].append(AppL(t.arg))
                t = t.fun
            elif not _src_value(t.arg):
                meta[-1].append(AppR(t.fun))
                t = t.arg
            else:
                return meta, t
        elif isinstance(t, Prim):
            if not _src_value(t.left):
                meta[-1].append(PrimL(t.op, t.right))
                t = t.left
            elif not _src_value(t.right):
                meta[-1].append(PrimR(t.op, t.left))
                t = t.right
            else:
                return meta, t
        elif isinstance(t, Reset0):
            if _src_value(t.body):
                return meta, t
            meta.append([])
            t = t.body
        elif isinstance(t, Shift0):
            return meta, t
        else:
            return (meta, t) if t is not e else None


def _apply(f, v):
    if isinstance(f, Lam):
        return subst(f.body, f.param, v)
    if isinstance(f, Fix):
        body = subst(f.body, f.param, v)
        return body if f.fun == f.param else subst(body, f.fun, f)
    return None


def _continuation(frames):
    hole = fresh_name("y", free_vars(plug_frames(frames, Const(0))))
    return Lam(hole, Reset0(plug_frames(frames, Var(hole))))


def source_step(e):
    """One textual step; ``None`` for values, ``Stuck`` if no rule applies."""
    split = decompose(e)
    if split is None:
        return None
    meta, r = split
    if isinstance(r, App):
        out = _apply(r.fun, r.arg)
    elif isinstance(r, Prim):
        ok = isinstance(r.left, Const) and isinstance(r.right, Const)
        out = Const(PRIM_OPS[r.op](r.left.value, r.right.value)) if ok else None
    elif isinstance(r, Reset0):
        out = r.body
    elif isinstance(r, Shift0) and len(meta) > 1:
        k = _continuation(meta.pop())
        out = subst(r.body, r.param, k)
    else:
        out = None
    if out is None:
        return Stuck(e)
    return recompose(meta, out)


def source_eval(e, fuel: int = 10_000):
    """Evaluate a closed source term with the direct shift0/reset0 semantics.

    Every step (beta, fix, prim, capture, reset of a value) counts against
    ``fuel`` and is reported in ``Converged.beta``.
    """
    meta: list = [[]]
    steps = 0
    focus, evaluating = e, True

    def tick():
        nonlocal steps
        if steps >= fuel:
            return False
        steps += 1
        return True

    while True:
        if evaluating:
            t = focus
            if isinstance(t, App):
                meta[-1].append(AppL(t.arg))
                focus = t.fun
            elif isinstance(t, Prim):
                meta[-1].append(PrimL(t.op, t.right))
                focus = t.left
            elif isinstance(t, Reset0):
                meta.append([])
                focus = t.body
            elif isinstance(t, Shift0):
                if len(meta) == 1:
                    return Stuck(recompose(meta, t), steps)
                if not tick():
                    return FuelExhausted(fuel)
                k = _continuation(meta.pop())
                focus = subst(t.body, t.param, k)
            elif _src_value(t):
                evaluating = False
            else:
                return Stuck(recompose(meta, t), steps)
            continue
        v = focus
        frames = meta[-1]
        if not frames:
            if len(meta) == 1:
                return Converged(v, steps, 0)
            if not tick():
                return FuelExhausted(fuel)
            meta.pop()
            continue
        fr = frames.pop()
        if isinstance(fr, AppL):
            frames.append(AppR(v))
            focus, evaluating = fr.arg, True
        elif isinstance(fr, PrimL):
            frames.append(PrimR(fr.op, v))
            focus, evaluating = fr.right, True
        elif isinstance(fr, AppR):
            out = _apply(fr.fun, v)
            if out is None:
                return Stuck(recompose(meta, App(fr.fun, v)), steps)
            if not tick():
                return FuelExhausted(fuel)
            focus, evaluating = out, True
        else:
            if not (isinstance(fr.left, Const) and isinstance(v, Const)):
                return Stuck(recompose(meta, Prim(fr.op, fr.left, v)), steps)
            if not tick():
                return FuelExhausted(fuel)
            focus = Const(PRIM_OPS[fr.op](fr.left.value, v.value))
