"""Concrete ASCII syntax: tokenizer, recursive-descent parser and printer.

Terms::

    \\x. e     fix f x. e     S0 k. e     <e>     [c]e     ()     e1 e2
    e1 + e2   e1 * e2

Application binds tighter than ``+``/``*``; both are left-associative.
Coercions: ``id``, ``top``, ``c1 o c2`` (``c2`` applied first), ``c1 -> c2``,
``lift c``, ``(c, c1, c2)``.  Types: ``nat``, ``top``, ``unit``, ``t1 -> t2``
(right-associative) and ``[t, T, U]``.

Derivation skeletons are parenthesized rule trees such as
``(T-Sub (T-Var) (S-Lift (S-Refl)))``, optionally annotated with
``@ "type"`` just before the closing parenthesis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    App, Arrow, ArrowC, ArrowT, CApp, Comp, Cons, Const, Eff, EffArrowT, Fix,
    Id, Lam, Lift, Nat, NatT, Prim, Reset0, Shift0, Top, TopC, Unit, UnitT, Var,
    is_pure,
)

CATEGORIES = (
    "term-src-stlc", "term-src-eff", "term-target",
    "type-src-stlc", "type-src-eff", "type-target",
    "coercion", "derivation",
)

# premise counts of every rule; sub-derivations count as premises
ARITY = {
    "T-Var": 0, "T-Abs": 1, "T-App": 2, "T-PApp": 2, "T-Fix": 1, "T-Const": 0,
    "T-Prim": 2, "T-Sub": 2, "T-Sft": 1, "T-Rst": 1,
    "S-Refl": 0, "S-Trans": 2, "S-Arrow": 2, "S-Top": 0, "S-Cons": 3, "S-Lift": 1,
}


@dataclass(frozen=True)
class Skeleton:
    rule: str
    children: tuple["Skeleton", ...] = ()
    annotation: Optional[str] = None

    def bare(self) -> "Skeleton":
        return Skeleton(self.rule, tuple(c.bare() for c in self.children))


class ParseError(Exception):
    def __init__(self, line: int, column: int, expected, found: str):
        self.line, self.column = line, column
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        super().__init__(
            f"{line}:{column}: expected {' or '.join(self.expected)}, found {found}"
        )


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<rule>[TS]-[A-Za-z]+)
  | (?P<arrow>->)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[\\.()<>\[\],+*@])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, ["a token"], repr(text[pos]))
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "end of input", line, pos - line_start + 1))
    return toks


_TERM_FEATURES = {
    "term-src-stlc": set(),
    "term-src-eff": {"shift", "reset"},
    "term-target": {"capp", "unit"},
}

_KEYWORDS = {"fix", "S0"}


class _Parser:
    def __init__(self, text: str, category: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.category = category

    # -- token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, *expected):
        t = self.tok
        raise ParseError(t.line, t.col, expected, repr(t.text) if t.kind != "eof" else t.text)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("punct", "arrow", "ident")

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.error(repr(text))
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in _KEYWORDS:
            self.error("identifier")
        self.i += 1
        return t.text

    def done(self):
        if self.tok.kind != "eof":
            self.error("end of input")

    # -- terms
    def term(self):
        feats = _TERM_FEATURES[self.category]
        if self.at("\\"):
            self.i += 1
            x = self.ident()
            self.expect(".")
            return Lam(x, self.term())
        if self.at("fix"):
            self.i += 1
            f = self.ident()
            x = self.ident()
            self.expect(".")
            return Fix(f, x, self.term())
        if self.at("S0"):
            if "shift" not in feats:
                self.error("term")
            self.i += 1
            k = self.ident()
            self.expect(".")
            return Shift0(k, self.term())
        return self.sum()

    def sum(self):
        left = self.app()
        while self.at("+") or self.at("*"):
            op = self.tok.text
            self.i += 1
            left = Prim(op, left, self.app())
        return left

    def _starts_aterm(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "ident":
            return t.text not in _KEYWORDS
        return t.kind == "punct" and t.text in "(<["

    def app(self):
        e = self.aterm()
        while self._starts_aterm():
            e = App(e, self.aterm())
        return e

    def aterm(self):
        feats = _TERM_FEATURES[self.category]
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Const(int(t.text))
        if t.kind == "ident" and t.text not in _KEYWORDS:
            self.i += 1
            return Var(t.text)
        if self.at("("):
            if self.peek().text == ")" and self.peek().kind == "punct":
                if "unit" not in feats:
                    self.error("term")
                self.i += 2
                return Unit()
            self.i += 1
            e = self.term()
            self.expect(")")
            return e
        if self.at("<") and "reset" in feats:
            self.i += 1
            e = self.term()
            self.expect(">")
            return Reset0(e)
        if self.at("[") and "capp" in feats:
            self.i += 1
            c = self.coercion()
            self.expect("]")
            return CApp(c, self.aterm())
        self.error("term")

    # -- coercions
    def coercion(self):
        c = self.crc2()
        if self.at("o"):
            self.i += 1
            return Comp(c, self.coercion())
        return c

    def crc2(self):
        c = self.crc1()
        if self.at("->"):
            self.i += 1
            return ArrowC(c, self.crc2())
        return c

    def crc1(self):
        if self.at("id"):
            self.i += 1
            return Id()
        if self.at("top"):
            self.i += 1
            return TopC()
        if self.at("lift"):
            self.i += 1
            return Lift(self.crc1())
        if self.at("("):
            self.i += 1
            c = self.coercion()
            if self.at(","):
                self.i += 1
                c1 = self.coercion()
                self.expect(",")
                c2 = self.coercion()
                self.expect(")")
                return Cons(c, c1, c2)
            self.expect(")")
            return c
        self.error("coercion")

    # -- types
    def type_(self):
        t = self.atype()
        if self.at("->"):
            tok = self.tok
            self.i += 1
            cod = self.type_()
            if self.category == "type-src-stlc":
                return Arrow(t, cod)
            if not is_pure(t):
                raise ParseError(tok.line, tok.col, ["pure domain type"], "effect type")
            return Arrow(t, cod) if self.category == "type-src-eff" else ArrowT(t, cod)
        return t

    def atype(self):
        cat = self.category
        if self.at("nat"):
            self.i += 1
            return NatT() if cat == "type-target" else Nat()
        if self.at("top") and cat == "type-src-stlc":
            self.i += 1
            return Top()
        if self.at("unit") and cat == "type-target":
            self.i += 1
            return UnitT()
        if self.at("[") and cat != "type-src-stlc":
            tok = self.expect("[")
            a = self.type_()
            self.expect(",")
            b = self.type_()
            self.expect(",")
            c = self.type_()
            self.expect("]")
            if not is_pure(a):
                raise ParseError(tok.line, tok.col, ["pure carrier type"], "effect type")
            return Eff(a, b, c) if cat == "type-src-eff" else EffArrowT(a, b, c)
        if self.at("("):
            self.i += 1
            t = self.type_()
            self.expect(")")
            return t
        self.error("type")

    # -- derivation skeletons
    def deriv(self):
        self.expect("(")
        t = self.tok
        if t.kind != "rule" or t.text not in ARITY:
            self.error("rule name")
        self.i += 1
        children = []
        while self.at("("):
            children.append(self.deriv())
        note = None
        if self.at("@"):
            self.i += 1
            s = self.tok
            if s.kind != "string":
                self.error("quoted type")
            self.i += 1
            note = s.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        if len(children) != ARITY[t.text]:
            raise ParseError(
                t.line, t.col, [f"{ARITY[t.text]} premises for {t.text}"],
                f"{len(children)} premises",
            )
        self.expect(")")
        return Skeleton(t.text, tuple(children), note)


def parse(category: str, text: str):
    """Parse ``text`` as an object of the given category."""
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    p = _Parser(text, category)
    if category.startswith("term"):
        out = p.term()
    elif category.startswith("type"):
        out = p.type_()
    elif category == "coercion":
        out = p.coercion()
    else:
        out = p.deriv()
    p.done()
    return out


def parse_env(text: str, category: str) -> dict:
    """Parse ``name : type`` lines (blank lines and ``#`` comments ignored)."""
    env = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, ty = line.partition(":")
        name = name.strip()
        if not sep or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name):
            raise ParseError(lineno, 1, ["name : type"], repr(line))
        try:
            env[name] = parse(category, ty)
        except ParseError as err:
            raise ParseError(lineno, err.column + len(name) + 1, err.expected, err.found) from None
    return env


# ------------------------------------------------------------- printing


def show(obj) -> str:
    """Render a term, type, coercion or skeleton in the concrete syntax."""
    if isinstance(obj, Skeleton):
        return _show_skel(obj)
    if isinstance(obj, (Id, Comp, TopC, ArrowC, Lift, Cons)):
        return _show_crc(obj, 0)
    if isinstance(obj, (Nat, Top, Arrow, Eff, NatT, UnitT, ArrowT, EffArrowT)) or hasattr(obj, "ident"):
        return _show_type(obj, 0)
    return _show_term(obj, 0)


def _paren(s: str, wrap: bool) -> str:
    return f"({s})" if wrap else s


# levels: 0 term, 1 sum, 2 app, 3 atom
def _show_term(e, level: int) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Unit):
        return "()"
    if isinstance(e, Reset0):
        return f"<{_show_term(e.body, 0)}>"
    if isinstance(e, CApp):
        return _paren(f"[{_show_crc(e.coercion, 0)}]{_show_term(e.body, 3)}", level > 2)
    if isinstance(e, Lam):
        return _paren(f"\\{e.param}. {_show_term(e.body, 0)}", level > 0)
    if isinstance(e, Fix):
        return _paren(f"fix {e.fun} {e.param}. {_show_term(e.body, 0)}", level > 0)
    if isinstance(e, Shift0):
        return _paren(f"S0 {e.param}. {_show_term(e.body, 0)}", level > 0)
    if isinstance(e, App):
        return _paren(f"{_show_term(e.fun, 2)} {_show_term(e.arg, 3)}", level > 2)
    if isinstance(e, Prim):
        return _paren(f"{_show_term(e.left, 1)} {e.op} {_show_term(e.right, 2)}", level > 1)
    raise TypeError(f"cannot show {e!r}")


# levels: 0 coercion, 1 crc2, 2 crc1
def _show_crc(c, level: int) -> str:
    if isinstance(c, Id):
        return "id"
    if isinstance(c, TopC):
        return "top"
    if isinstance(c, Lift):
        return f"lift {_show_crc(c.inner, 2)}"
    if isinstance(c, Cons):
        return f"({_show_crc(c.carrier, 0)}, {_show_crc(c.cont, 0)}, {_show_crc(c.rest, 0)})"
    if isinstance(c, Comp):
        return _paren(f"{_show_crc(c.outer, 1)} o {_show_crc(c.inner, 0)}", level > 0)
    if isinstance(c, ArrowC):
        return _paren(f"{_show_crc(c.arg, 2)} -> {_show_crc(c.res, 1)}", level > 1)
    raise TypeError(f"cannot show {c!r}")


def _show_type(t, level: int) -> str:
    if isinstance(t, (Nat, NatT)):
        return "nat"
    if isinstance(t, Top):
        return "top"
    if isinstance(t, UnitT):
        return "unit"
    if isinstance(t, (Eff, EffArrowT)):
        return f"[{_show_type(t.carrier, 0)}, {_show_type(t.answer, 0)}, {_show_type(t.rest, 0)}]"
    if isinstance(t, (Arrow, ArrowT)):
        return _paren(f"{_show_type(t.dom, 1)} -> {_show_type(t.cod, 0)}", level > 0)
    # metavariables print as ?n
    name = getattr(t, "ident", None)
    if name is not None:
        return f"?{name}"
    raise TypeError(f"cannot show {t!r}")


def _show_skel(s: Skeleton) -> str:
    parts = [s.rule] + [_show_skel(c) for c in s.children]
    if s.annotation is not None:
        quoted = s.annotation.replace("\\", "\\\\").replace('"', '\\"')
        parts += ["@", f'"{quoted}"']
    return "(" + " ".join(parts) + ")"
