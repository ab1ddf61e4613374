"""Typing/subtyping derivation trees and the search engine that builds them.

A derivation is found by depth-first search over the inference rules with
first-order unification on types.  Metavariables carry a sort: a *pure*
metavariable may only be instantiated with a type whose head is not an
effect type.  Every search operation is a generator that yields once per
solution with its bindings in place, and undoes them when resumed.
Metavariables left unconstrained by a solution are defaulted to ``nat``.

The same engine runs in three modes:

``canonical``   first solution, subsumption only where the calculus allows it
``enumerate``   all solutions with at most ``budget`` T-Sub/S-Trans nodes
``replay``      rules dictated by a user-supplied skeleton
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .surface import ARITY, ParseError, Skeleton, parse, show
from .syntax import (
    App, Arrow, ArrowT, Const, Eff, EffArrowT, Fix, Lam, Nat, Prim, Reset0, Shift0, Var,
    free_vars,
)


class UnboundVariable(Exception):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name}")


class SearchExhausted(Exception):
    """The search visited more nodes than its budget allows."""


class ReplayError(Exception):
    def __init__(self, path: tuple, message: str):
        self.path = path
        super().__init__(f"at node {'.'.join(map(str, path)) or 'root'}: {message}")


class DerivationError(Exception):
    """A concrete derivation violates one of the inference rules."""

    def __init__(self, path: tuple, message: str):
        self.path = path
        super().__init__(f"at node {'.'.join(map(str, path)) or 'root'}: {message}")


@dataclass(frozen=True, eq=False)
class Meta:
    ident: int
    pure: bool = False


@dataclass(frozen=True)
class SubDeriv:
    rule: str
    lhs: object
    rhs: object
    premises: tuple = ()


@dataclass(frozen=True)
class TypeDeriv:
    rule: str
    env: dict = field(hash=False)
    term: object = None
    type: object = None
    premises: tuple = ()


def components(t) -> tuple:
    if isinstance(t, (Arrow, ArrowT)):
        return (t.dom, t.cod)
    if isinstance(t, (Eff, EffArrowT)):
        return (t.carrier, t.answer, t.rest)
    return ()


def rebuild(t, parts):
    return type(t)(*parts) if parts else t


def _effect_head(t) -> bool:
    return isinstance(t, (Eff, EffArrowT))


class Store:
    """Metavariable bindings with an undo trail."""

    def __init__(self):
        self.bindings: dict[Meta, object] = {}
        self._ids = itertools.count()

    def fresh(self, pure: bool = False) -> Meta:
        return Meta(next(self._ids), pure)

    def walk(self, t):
        while isinstance(t, Meta) and t in self.bindings:
            t = self.bindings[t]
        return t

    def resolve(self, t):
        t = self.walk(t)
        parts = components(t)
        if not parts:
            return t
        return rebuild(t, tuple(self.resolve(p) for p in parts))

    def _occurs(self, m: Meta, t) -> bool:
        t = self.walk(t)
        if t is m:
            return True
        return any(self._occurs(m, p) for p in components(t))

    def _bind(self, m: Meta, t, trail: list) -> bool:
        if isinstance(t, Meta):
            if m.pure and not t.pure:
                m, t = t, m
        elif m.pure and _effect_head(t):
            return False
        if self._occurs(m, t):
            return False
        self.bindings[m] = t
        trail.append(m)
        return True

    def _unify(self, a, b, trail: list) -> bool:
        a, b = self.walk(a), self.walk(b)
        if a is b:
            return True
        if isinstance(a, Meta):
            return self._bind(a, b, trail)
        if isinstance(b, Meta):
            return self._bind(b, a, trail)
        if type(a) is not type(b):
            return False
        return all(self._unify(x, y, trail) for x, y in zip(components(a), components(b)))

    def _undo(self, trail: list):
        for m in reversed(trail):
            del self.bindings[m]

    def unify(self, a, b) -> Iterator[None]:
        trail: list = []
        if self._unify(a, b, trail):
            yield
        self._undo(trail)

    def identical(self, a, b) -> bool:
        a, b = self.walk(a), self.walk(b)
        if a is b:
            return True
        if type(a) is not type(b) or isinstance(a, Meta):
            return False
        return all(self.identical(x, y) for x, y in zip(components(a), components(b)))

    def is_unbound(self, t) -> bool:
        return isinstance(self.walk(t), Meta)

    def finalize(self, d, default):
        """Resolve every type in a derivation, defaulting free metavariables."""
        def ty(t):
            t = self.resolve(t)
            return default_metas(t, default)
        if isinstance(d, SubDeriv):
            return SubDeriv(d.rule, ty(d.lhs), ty(d.rhs),
                            tuple(self.finalize(p, default) for p in d.premises))
        env = {k: ty(v) for k, v in d.env.items()}
        return TypeDeriv(d.rule, env, d.term, ty(d.type),
                         tuple(self.finalize(p, default) for p in d.premises))


def default_metas(t, default):
    if isinstance(t, Meta):
        return default
    parts = components(t)
    if not parts:
        return t
    return rebuild(t, tuple(default_metas(p, default) for p in parts))


# ------------------------------------------------------------- skeletons


def to_skeleton(d, annotate: bool = False) -> Skeleton:
    """Rule tree of a concrete derivation.

    With ``annotate`` the types that a skeleton cannot recover from the goal
    alone are attached: the premise type at T-Sub, the function type at
    T-App/T-PApp and the middle type at S-Trans.
    """
    kids = tuple(to_skeleton(p, annotate) for p in d.premises)
    note = None
    if annotate:
        if d.rule == "T-Sub":
            note = show(d.premises[0].type)
        elif d.rule in ("T-App", "T-PApp"):
            note = show(d.premises[0].type)
        elif d.rule == "S-Trans":
            note = show(d.premises[0].lhs)
    return Skeleton(d.rule, kids, note)


def count_rules(d, rules) -> int:
    return (d.rule in rules) + sum(count_rules(p, rules) for p in d.premises)


def derivation_size(d) -> int:
    return 1 + sum(derivation_size(p) for p in d.premises)


# ---------------------------------------------------------------- search

_TERM_FORM = {
    "T-Var": Var, "T-Abs": Lam, "T-App": App, "T-PApp": App, "T-Fix": Fix,
    "T-Const": Const, "T-Prim": Prim, "T-Sft": Shift0, "T-Rst": Reset0,
}


class Search:
    """Rule-driven derivation search; subclasses supply the rules."""

    type_category = ""
    type_rules: frozenset = frozenset()
    sub_rules: frozenset = frozenset()
    default_type = Nat()

    def __init__(self, mode: str = "canonical", budget: int = 0, max_ticks: int = 50_000,
                 strict: bool = False):
        self.store = Store()
        self.mode = mode
        # strict: every T-Sub changes the type, and no S-Trans
        self.strict = strict or mode == "canonical"
        self.budget = budget
        self.used = 0
        self.ticks = 0
        self.max_ticks = max_ticks
        self.failure: Optional[ReplayError] = None

    # -- plumbing
    def tick(self):
        self.ticks += 1
        if self.ticks > self.max_ticks:
            raise SearchExhausted(f"gave up after {self.max_ticks} search steps")

    def unify(self, a, b):
        return self.store.unify(a, b)

    def fresh(self, pure=False):
        return self.store.fresh(pure)

    def fail(self, path, message):
        if self.failure is None:
            self.failure = ReplayError(path, message)

    def show_type(self, t) -> str:
        return show(self.store.resolve(t))

    def annotation(self, skel: Optional[Skeleton], path):
        if skel is None or skel.annotation is None:
            return None
        try:
            return parse(self.type_category, skel.annotation)
        except ParseError as err:
            self.fail(path, f"bad annotation {skel.annotation!r}: {err}")
            return False

    def spend(self) -> bool:
        if self.used >= self.budget:
            return False
        self.used += 1
        return True

    def finalize(self, d):
        return self.store.finalize(d, self.default_type)

    # -- typing
    def derive(self, env, term, goal, skel: Optional[Skeleton] = None, path=(), sub_ok=True):
        self.tick()
        if skel is not None:
            yield from self._replay_node(env, term, goal, skel, path)
            return
        for rule in self.syntax_rules(term):
            yield from getattr(self, _method(rule))(env, term, goal, (None,) * ARITY[rule], path, None)
        if sub_ok and self.subsumption_allowed(term):
            yield from self.t_sub(env, term, goal, (None, None), path, None)

    def _replay_node(self, env, term, goal, skel, path):
        rule = skel.rule
        if rule not in self.type_rules:
            self.fail(path, f"{rule} is not a typing rule of this calculus")
            return
        form = _TERM_FORM.get(rule)
        if form is not None and not isinstance(term, form):
            self.fail(path, f"{rule} does not apply to `{show(term)}`")
            return
        note = self.annotation(skel, path)
        if note is False:
            return
        method = getattr(self, _method(rule))
        if note is None or rule in ("T-Sub", "T-App", "T-PApp"):
            gen = method(env, term, goal, skel.children, path, note)
        else:
            gen = self._after(self.unify(goal, note), method, env, term, goal, skel.children, path, None)
        yield from self._reported(gen, path, f"{rule} cannot conclude `{show(term)}` : {{goal}}", goal)

    def _after(self, binding, method, *args):
        for _ in binding:
            yield from method(*args)

    def _reported(self, gen, path, message, *types):
        before = self.failure
        found = False
        for d in gen:
            found = True
            yield d
        if not found and self.failure is before:
            if len(types) == 2:
                names = {"lhs": self.show_type(types[0]), "rhs": self.show_type(types[1])}
            else:
                names = {"goal": self.show_type(types[0])}
            self.fail(path, message.format(**names))

    def t_sub(self, env, term, goal, kids, path, note):
        counted = self.mode == "enumerate"
        if counted and not self.spend():
            return
        premise = self.fresh()
        bind = self.unify(premise, note) if note is not None else iter((None,))
        for _ in bind:
            nested = self.mode == "enumerate"
            for d1 in self.derive(env, term, premise, kids[0], path + (0,), sub_ok=nested):
                for sd in self.sub(premise, goal, kids[1], path + (1,)):
                    if self.strict and self.store.identical(premise, goal):
                        continue
                    yield TypeDeriv("T-Sub", env, term, goal, (d1, sd))
        if counted:
            self.used -= 1

    # -- subtyping
    def sub(self, lhs, rhs, skel: Optional[Skeleton] = None, path=()):
        self.tick()
        if skel is None:
            yield from self.sub_search(lhs, rhs, path)
            if self.mode == "enumerate" and not self.strict:
                yield from self.s_trans(lhs, rhs, (None, None), path, None)
            return
        rule = skel.rule
        if rule not in self.sub_rules:
            self.fail(path, f"{rule} is not a subtyping rule of this calculus")
            return
        note = self.annotation(skel, path)
        if note is False:
            return
        method = getattr(self, _method(rule))
        if note is None or rule == "S-Trans":
            gen = method(lhs, rhs, skel.children, path, note)
        else:
            gen = self._after(self.unify(lhs, note), method, lhs, rhs, skel.children, path, None)
        yield from self._reported(gen, path, f"{rule} cannot conclude {{lhs}} <: {{rhs}}", lhs, rhs)

    def s_refl(self, lhs, rhs, kids, path, note):
        for _ in self.unify(lhs, rhs):
            yield SubDeriv("S-Refl", lhs, rhs)

    def s_trans(self, lhs, rhs, kids, path, note):
        counted = self.mode == "enumerate"
        if counted and not self.spend():
            return
        mid = self.fresh()
        bind = self.unify(mid, note) if note is not None else iter((None,))
        for _ in bind:
            for upper in self.sub(mid, rhs, kids[0], path + (0,)):
                for lower in self.sub(lhs, mid, kids[1], path + (1,)):
                    yield SubDeriv("S-Trans", lhs, rhs, (upper, lower))
        if counted:
            self.used -= 1

    # -- hooks for subclasses
    def syntax_rules(self, term) -> tuple:
        raise NotImplementedError

    def subsumption_allowed(self, term) -> bool:
        return True

    def sub_search(self, lhs, rhs, path):
        raise NotImplementedError


def _method(rule: str) -> str:
    return rule.lower().replace("-", "_")


def run_first(search: Search, gen):
    """First solution of ``gen`` finalized, or ``None``."""
    try:
        for d in gen:
            return search.finalize(d)
    except SearchExhausted:
        return None
    return None


def check_closed(env: dict, e):
    missing = sorted(free_vars(e) - env.keys())
    if missing:
        raise UnboundVariable(missing[0])


def replay_with(search_cls, env, term, goal, skel: Skeleton, validate):
    """Rebuild the derivation dictated by ``skel``; raise ``ReplayError`` if impossible."""
    check_closed(env, term)
    s = search_cls("replay")
    try:
        for d in s.derive(env, term, goal, skel):
            out = s.finalize(d)
            validate(out)
            return out
    except SearchExhausted as err:
        raise ReplayError((), str(err)) from None
    raise s.failure or ReplayError((), "the skeleton does not derive the judgment")


def enumerate_with(search_cls, env, term, goal, budget, limit, canonical, validate,
                   max_ticks: int = 200_000) -> list:
    """Distinct derivations (by annotated skeleton), the canonical one first.

    Strict passes (every subsumption changes the type, no S-Trans) with a
    growing budget run before the unrestricted one, so structurally
    different derivations are not crowded out by identity-coercion variants.
    """
    found, seen = [], set()

    def add(d):
        key = to_skeleton(d, annotate=True)
        if key not in seen:
            validate(d)
            seen.add(key)
            found.append(d)

    if canonical is not None:
        add(canonical)
    passes = [(b, True) for b in range(budget + 1)] + [(budget, False)]
    for b, strict in passes:
        s = search_cls("enumerate", budget=b, max_ticks=max_ticks, strict=strict)
        try:
            for d in s.derive(env, term, goal):
                if len(found) >= limit:
                    break
                add(s.finalize(d))
        except SearchExhausted:
            pass
    return found[:limit]
