"""Abstract syntax shared by the two source calculi and their targets.

One term AST serves all four calculi; each calculus uses a subset of the
constructors (the parser and typecheckers enforce which).  Types come in two
families: source types (``Nat``, ``Top``, ``Arrow``, ``Eff``) and target types
(``NatT``, ``UnitT``, ``ArrowT``, ``EffArrowT``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    param: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Fix:
    fun: str
    param: str
    body: "Term"


@dataclass(frozen=True)
class Const:
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("constants are natural numbers")


@dataclass(frozen=True)
class Prim:
    op: str  # "+" or "*"
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Shift0:
    param: str
    body: "Term"


@dataclass(frozen=True)
class Reset0:
    body: "Term"


@dataclass(frozen=True)
class CApp:
    coercion: "Coercion"
    body: "Term"


@dataclass(frozen=True)
class Unit:
    pass


Term = Union[Var, Lam, App, Fix, Const, Prim, Shift0, Reset0, CApp, Unit]

PRIM_OPS = {"+": lambda a, b: a + b, "*": lambda a, b: a * b}


# ------------------------------------------------------------ coercions


@dataclass(frozen=True)
class Id:
    pass


@dataclass(frozen=True)
class Comp:
    """``outer o inner``; ``inner`` is applied first."""

    outer: "Coercion"
    inner: "Coercion"


@dataclass(frozen=True)
class TopC:
    pass


@dataclass(frozen=True)
class ArrowC:
    arg: "Coercion"
    res: "Coercion"


@dataclass(frozen=True)
class Lift:
    inner: "Coercion"


@dataclass(frozen=True)
class Cons:
    carrier: "Coercion"
    cont: "Coercion"
    rest: "Coercion"


Coercion = Union[Id, Comp, TopC, ArrowC, Lift, Cons]


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Nat:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Arrow:
    dom: "SrcType"
    cod: "SrcType"


@dataclass(frozen=True)
class Eff:
    """Effect type ``[carrier, answer, rest]``; ``carrier`` is always pure."""

    carrier: "SrcType"
    answer: "SrcType"
    rest: "SrcType"


SrcType = Union[Nat, Top, Arrow, Eff]


@dataclass(frozen=True)
class NatT:
    pass


@dataclass(frozen=True)
class UnitT:
    pass


@dataclass(frozen=True)
class ArrowT:
    dom: "TgtType"
    cod: "TgtType"


@dataclass(frozen=True)
class EffArrowT:
    carrier: "TgtType"
    answer: "TgtType"
    rest: "TgtType"


TgtType = Union[NatT, UnitT, ArrowT, EffArrowT]


def is_pure(t) -> bool:
    return not isinstance(t, (Eff, EffArrowT))


# -------------------------------------------------------- binding basics


def free_vars(e: Term) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (Lam, Shift0)):
        return free_vars(e.body) - {e.param}
    if isinstance(e, Fix):
        return free_vars(e.body) - {e.fun, e.param}
    if isinstance(e, App):
        return free_vars(e.fun) | free_vars(e.arg)
    if isinstance(e, Prim):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, (Reset0, CApp)):
        return free_vars(e.body)
    return frozenset()


def fresh_name(base: str, avoid) -> str:
    if base not in avoid:
        return base
    base = base.rstrip("0123456789") or "v"
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def subst(e: Term, x: str, v: Term) -> Term:
    """Capture-avoiding ``e[x := v]``."""
    fv = free_vars(v)
    return _subst(e, x, v, fv)


def _subst(e, x, v, fv):
    if isinstance(e, Var):
        return v if e.name == x else e
    if isinstance(e, (Const, Unit)):
        return e
    if isinstance(e, App):
        return App(_subst(e.fun, x, v, fv), _subst(e.arg, x, v, fv))
    if isinstance(e, Prim):
        return Prim(e.op, _subst(e.left, x, v, fv), _subst(e.right, x, v, fv))
    if isinstance(e, CApp):
        return CApp(e.coercion, _subst(e.body, x, v, fv))
    if isinstance(e, Reset0):
        return Reset0(_subst(e.body, x, v, fv))
    if isinstance(e, (Lam, Shift0)):
        if e.param == x:
            return e
        param, body = e.param, e.body
        if param in fv:
            new = fresh_name(param, fv | free_vars(body) | {x})
            body = _subst(body, param, Var(new), frozenset((new,)))
            param = new
        return type(e)(param, _subst(body, x, v, fv))
    if isinstance(e, Fix):
        if x in (e.fun, e.param):
            return e
        fun, param, body = e.fun, e.param, e.body
        if fun in fv or param in fv:
            avoid = fv | free_vars(body) | {x, fun, param}
            if fun in fv:
                new = fresh_name(fun, avoid)
                body = _subst(body, fun, Var(new), frozenset((new,)))
                avoid |= {new}
                fun = new
            if param in fv:
                new = fresh_name(param, avoid)
                body = _subst(body, param, Var(new), frozenset((new,)))
                param = new
        return Fix(fun, param, _subst(body, x, v, fv))
    raise TypeError(f"not a term: {e!r}")


def nameless(e: Term, bound: tuple = ()):
    """Canonical de Bruijn form; free variables stay named."""
    if isinstance(e, Var):
        for i, name in enumerate(reversed(bound)):
            if name == e.name:
                return ("bv", i)
        return ("fv", e.name)
    if isinstance(e, Lam):
        return ("lam", nameless(e.body, bound + (e.param,)))
    if isinstance(e, Shift0):
        return ("shift0", nameless(e.body, bound + (e.param,)))
    if isinstance(e, Fix):
        return ("fix", nameless(e.body, bound + (e.fun, e.param)))
    if isinstance(e, App):
        return ("app", nameless(e.fun, bound), nameless(e.arg, bound))
    if isinstance(e, Prim):
        return ("prim", e.op, nameless(e.left, bound), nameless(e.right, bound))
    if isinstance(e, Reset0):
        return ("reset0", nameless(e.body, bound))
    if isinstance(e, CApp):
        return ("capp", e.coercion, nameless(e.body, bound))
    if isinstance(e, Const):
        return ("const", e.value)
    if isinstance(e, Unit):
        return ("unit",)
    raise TypeError(f"not a term: {e!r}")


def alpha_eq(e1: Term, e2: Term) -> bool:
    return nameless(e1) == nameless(e2)


def is_value(e: Term) -> bool:
    if isinstance(e, (Var, Lam, Fix, Const, Unit)):
        return True
    if isinstance(e, CApp) and isinstance(e.coercion, (ArrowC, Lift, Cons)):
        return is_value(e.body)
    return False


def term_size(e: Term) -> int:
    if isinstance(e, (Var, Const, Unit)):
        return 1
    if isinstance(e, (Lam, Shift0, Fix, Reset0, CApp)):
        return 1 + term_size(e.body)
    if isinstance(e, App):
        return 1 + term_size(e.fun) + term_size(e.arg)
    if isinstance(e, Prim):
        return 1 + term_size(e.left) + term_size(e.right)
    raise TypeError(f"not a term: {e!r}")


def coercion_size(c: Coercion) -> int:
    if isinstance(c, (Id, TopC)):
        return 1
    if isinstance(c, (Comp, ArrowC)):
        a, b = (c.outer, c.inner) if isinstance(c, Comp) else (c.arg, c.res)
        return 1 + coercion_size(a) + coercion_size(b)
    if isinstance(c, Lift):
        return 1 + coercion_size(c.inner)
    if isinstance(c, Cons):
        return 1 + coercion_size(c.carrier) + coercion_size(c.cont) + coercion_size(c.rest)
    raise TypeError(f"not a coercion: {c!r}")


def contains_capp(e: Term) -> bool:
    if isinstance(e, CApp):
        return True
    if isinstance(e, (Lam, Shift0, Fix, Reset0)):
        return contains_capp(e.body)
    if isinstance(e, App):
        return contains_capp(e.fun) or contains_capp(e.arg)
    if isinstance(e, Prim):
        return contains_capp(e.left) or contains_capp(e.right)
    return False
