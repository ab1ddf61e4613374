"""Simply-typed lambda calculus with Top: subtyping, typing derivations and
the coercion translation into the target calculus with explicit coercions.
"""

from __future__ import annotations

from typing import Optional

from .derivation import (
    DerivationError, Meta, Search, SubDeriv, TypeDeriv, check_closed, enumerate_with,
    replay_with, run_first,
)
from .surface import Skeleton
from .syntax import (
    App, Arrow, ArrowC, ArrowT, CApp, Comp, Const, Fix, Id, Lam, Nat, NatT, Prim, Top,
    TopC, UnitT, Var,
)

TYPE_RULES = frozenset({"T-Var", "T-Abs", "T-App", "T-Fix", "T-Const", "T-Prim", "T-Sub"})
SUB_RULES = frozenset({"S-Refl", "S-Trans", "S-Arrow", "S-Top"})

_SYNTAX = {Var: ("T-Var",), Lam: ("T-Abs",), App: ("T-App",), Fix: ("T-Fix",),
           Const: ("T-Const",), Prim: ("T-Prim",)}


class StlcSearch(Search):
    type_category = "type-src-stlc"
    type_rules = TYPE_RULES
    sub_rules = SUB_RULES
    default_type = Nat()

    @property
    def inner_sub(self) -> bool:
        # canonical derivations subsume only at application arguments and the root
        return self.mode != "canonical"

    def syntax_rules(self, term):
        return _SYNTAX.get(type(term), ())

    # typing rules
    def t_var(self, env, term, goal, kids, path, note):
        for _ in self.unify(goal, env[term.name]):
            yield TypeDeriv("T-Var", env, term, goal)

    def t_const(self, env, term, goal, kids, path, note):
        for _ in self.unify(goal, Nat()):
            yield TypeDeriv("T-Const", env, term, goal)

    def t_abs(self, env, term, goal, kids, path, note):
        dom, cod = self.fresh(), self.fresh()
        for _ in self.unify(goal, Arrow(dom, cod)):
            inner = {**env, term.param: dom}
            for d in self.derive(inner, term.body, cod, kids[0], path + (0,), self.inner_sub):
                yield TypeDeriv("T-Abs", env, term, goal, (d,))

    def t_fix(self, env, term, goal, kids, path, note):
        dom, cod = self.fresh(), self.fresh()
        for _ in self.unify(goal, Arrow(dom, cod)):
            inner = {**env, term.fun: goal, term.param: dom}
            for d in self.derive(inner, term.body, cod, kids[0], path + (0,), self.inner_sub):
                yield TypeDeriv("T-Fix", env, term, goal, (d,))

    def t_app(self, env, term, goal, kids, path, note):
        arg_t = self.fresh()
        fun_t = Arrow(arg_t, goal)
        bind = self.unify(fun_t, note) if note is not None else iter((None,))
        for _ in bind:
            for d1 in self.derive(env, term.fun, fun_t, kids[0], path + (0,), self.inner_sub):
                for d2 in self.derive(env, term.arg, arg_t, kids[1], path + (1,), True):
                    yield TypeDeriv("T-App", env, term, goal, (d1, d2))

    def t_prim(self, env, term, goal, kids, path, note):
        for _ in self.unify(goal, Nat()):
            for d1 in self.derive(env, term.left, Nat(), kids[0], path + (0,), self.inner_sub):
                for d2 in self.derive(env, term.right, Nat(), kids[1], path + (1,), self.inner_sub):
                    yield TypeDeriv("T-Prim", env, term, goal, (d1, d2))

    # subtyping rules
    def s_top(self, lhs, rhs, kids, path, note):
        for _ in self.unify(rhs, Top()):
            yield SubDeriv("S-Top", lhs, rhs)

    def s_arrow(self, lhs, rhs, kids, path, note):
        a1, r1, a2, r2 = (self.fresh() for _ in range(4))
        for _ in self.unify(lhs, Arrow(a1, r1)):
            for _ in self.unify(rhs, Arrow(a2, r2)):
                for d1 in self.sub(a2, a1, kids[0], path + (0,)):
                    for d2 in self.sub(r1, r2, kids[1], path + (1,)):
                        yield SubDeriv("S-Arrow", lhs, rhs, (d1, d2))

    def sub_search(self, lhs, rhs, path):
        a, b = self.store.walk(lhs), self.store.walk(rhs)
        none = (None, None)
        if isinstance(b, Meta):
            # an open supertype is taken as large as possible first
            yield from self.s_top(lhs, rhs, (), path, None)
            yield from self.s_refl(lhs, rhs, (), path, None)
            return
        yield from self.s_refl(lhs, rhs, (), path, None)
        if isinstance(b, Top):
            yield SubDeriv("S-Top", lhs, rhs)
        elif isinstance(b, Arrow) and isinstance(a, (Arrow, Meta)):
            yield from self.s_arrow(lhs, rhs, none, path, None)


# ------------------------------------------------------------ validation


def validate_sub(d: SubDeriv, path=()):
    """Check a concrete subtyping derivation rule by rule."""
    def bad(msg):
        raise DerivationError(path, f"{d.rule}: {msg}")
    ps = d.premises
    if d.rule not in SUB_RULES:
        bad("not a subtyping rule")
    arity = {"S-Refl": 0, "S-Top": 0, "S-Trans": 2, "S-Arrow": 2}[d.rule]
    if len(ps) != arity or not all(isinstance(p, SubDeriv) for p in ps):
        bad("wrong premises")
    if d.rule == "S-Refl" and d.lhs != d.rhs:
        bad("sides differ")
    if d.rule == "S-Top" and d.rhs != Top():
        bad("supertype is not top")
    if d.rule == "S-Trans":
        upper, lower = ps
        if upper.rhs != d.rhs or lower.lhs != d.lhs or upper.lhs != lower.rhs:
            bad("premises do not chain")
    if d.rule == "S-Arrow":
        if not (isinstance(d.lhs, Arrow) and isinstance(d.rhs, Arrow)):
            bad("sides are not arrows")
        if (ps[0].lhs, ps[0].rhs) != (d.rhs.dom, d.lhs.dom):
            bad("domain premise mismatch")
        if (ps[1].lhs, ps[1].rhs) != (d.lhs.cod, d.rhs.cod):
            bad("codomain premise mismatch")
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
    elif d.rule == "T-App":
        if not isinstance(e, App) or len(ps) != 2 or not isinstance(ps[0].type, Arrow):
            bad("shape")
        fun_t = ps[0].type
        if fun_t.cod != t:
            bad("result type mismatch")
        premise(0, env, e.fun, fun_t)
        premise(1, env, e.arg, fun_t.dom)
    elif d.rule == "T-Prim":
        if not isinstance(e, Prim) or t != Nat() or len(ps) != 2:
            bad("shape")
        premise(0, env, e.left, Nat())
        premise(1, env, e.right, Nat())
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


def subtype(t1, t2) -> Optional[SubDeriv]:
    """Canonical derivation of ``t1 <: t2`` (Trans-free), or ``None``."""
    s = StlcSearch("canonical")
    return run_first(s, s.sub(t1, t2))


def check(env: dict, e, goal) -> Optional[TypeDeriv]:
    """Canonical derivation of ``env |- e : goal``, or ``None``."""
    check_closed(env, e)
    s = StlcSearch("canonical")
    d = run_first(s, s.derive(env, e, goal))
    if d is not None:
        validate(d)
    return d


def replay(env: dict, e, goal, skel: Skeleton) -> TypeDeriv:
    return replay_with(StlcSearch, env, e, goal, skel, validate)


def enumerate_derivations(env: dict, e, goal, budget: int = 2, limit: int = 16) -> list:
    return enumerate_with(StlcSearch, env, e, goal, budget, limit, check(env, e, goal), validate)


def translate_type(t):
    if isinstance(t, Nat):
        return NatT()
    if isinstance(t, Top):
        return UnitT()
    if isinstance(t, Arrow):
        return ArrowT(translate_type(t.dom), translate_type(t.cod))
    raise TypeError(f"not an STLC type: {t!r}")


def translate_sub(d: SubDeriv):
    if d.rule == "S-Refl":
        return Id()
    if d.rule == "S-Top":
        return TopC()
    if d.rule == "S-Trans":
        return Comp(translate_sub(d.premises[0]), translate_sub(d.premises[1]))
    if d.rule == "S-Arrow":
        return ArrowC(translate_sub(d.premises[0]), translate_sub(d.premises[1]))
    raise ValueError(f"not an STLC subtyping rule: {d.rule}")


def translate_term(d: TypeDeriv):
    e, ps = d.term, d.premises
    if d.rule in ("T-Var", "T-Const"):
        return e
    if d.rule == "T-Abs":
        return Lam(e.param, translate_term(ps[0]))
    if d.rule == "T-Fix":
        return Fix(e.fun, e.param, translate_term(ps[0]))
    if d.rule == "T-App":
        return App(translate_term(ps[0]), translate_term(ps[1]))
    if d.rule == "T-Prim":
        return Prim(e.op, translate_term(ps[0]), translate_term(ps[1]))
    if d.rule == "T-Sub":
        return CApp(translate_sub(ps[1]), translate_term(ps[0]))
    raise ValueError(f"not an STLC typing rule: {d.rule}")


def translate_env(env: dict) -> dict:
    return {x: translate_type(t) for x, t in env.items()}
