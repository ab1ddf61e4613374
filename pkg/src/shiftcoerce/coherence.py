"""Differential testing of coherence.

Derivations of one typing judgment are translated separately and the
translations are run side by side inside generated closing contexts.
Translations of a coherent calculus never disagree on termination, and at
``nat`` they produce the same constant.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import effects, stlc
from .derivation import SubDeriv, TypeDeriv, to_skeleton
from .surface import show
from .syntax import (
    App, Arrow, ArrowT, Const, Eff, EffArrowT, Fix, Lam, Nat, NatT, Prim, Reset0, Shift0,
    Top, Unit, UnitT, Var, free_vars, subst,
)
from .target import (
    HOLE, Converged, Flavor, FuelExhausted, Stuck, erase, evaluate, target_check,
)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    size: int = 5              # maximum derivation depth of generated terms
    budget: int = 2            # extra T-Sub/S-Trans nodes per enumerated derivation
    max_derivations: int = 4
    contexts: int = 4
    fuel: int = 10_000
    flavor: Flavor = Flavor.STLC
    samples: int = 100
    allow_control: bool = True

    def __post_init__(self):
        for name in ("size", "max_derivations", "contexts", "fuel", "samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        object.__setattr__(self, "flavor", Flavor(self.flavor))


def _calculus(flavor):
    return stlc if Flavor(flavor) is Flavor.STLC else effects


def replay_derivation(flavor, env, e, goal, skeleton):
    """Rebuild and validate the derivation a skeleton describes.

    Raises ``ReplayError`` carrying the path of the first failing node.
    """
    return _calculus(flavor).replay(env, e, goal, skeleton)


def enumerate_derivations(flavor, env, e, goal, budget: int = 2, limit: int = 16) -> list:
    return _calculus(flavor).enumerate_derivations(env, e, goal, budget, limit)


def translate(flavor, d: TypeDeriv):
    return _calculus(flavor).translate_term(d)


def translate_type(flavor, t):
    return _calculus(flavor).translate_type(t)


def translate_env(flavor, env):
    return _calculus(flavor).translate_env(env)


# ------------------------------------------------------ term generation


@dataclass(frozen=True)
class Sample:
    env: dict = field(hash=False)
    term: object = None
    goal: object = None
    derivation: TypeDeriv = None


class _Gen:
    """Random derivations built top-down from the goal type."""

    def __init__(self, flavor, rng: random.Random, allow_control: bool = True):
        self.effect = Flavor(flavor) is Flavor.EFFECT
        self.rng = rng
        self.control = allow_control and self.effect
        self.names = itertools.count(1)

    def name(self, base):
        return f"{base}{next(self.names)}"

    def chance(self, p):
        return self.rng.random() < p

    # -- types
    def type_(self, depth: int, pure: bool = False):
        r = self.rng.random()
        if depth <= 0 or r < 0.45:
            if not self.effect and r < 0.1:
                return Top()
            return Nat()
        if self.effect and self.control and not pure and r < 0.7:
            return Eff(self.type_(depth - 1, True), self.type_(depth - 1), self.type_(depth - 1))
        return Arrow(self.type_(depth - 1, True), self.type_(depth - 1, pure=not self.control))

    # -- subtyping: derivations of  ? <: t  and  t <: ?
    def below(self, t, depth: int) -> SubDeriv:
        opts = ["refl"]
        if depth > 0:
            if isinstance(t, Top):
                opts.append("top")
            if isinstance(t, Arrow):
                opts += ["arrow", "arrow"]
            if isinstance(t, Eff):
                opts += ["lift", "lift", "cons"]
            if self.chance(0.15):
                opts.append("trans")
        rule = self.rng.choice(opts)
        if rule == "top":
            return SubDeriv("S-Top", self.type_(1), t)
        if rule == "arrow":
            p0, p1 = self.above(t.dom, depth - 1, pure=True), self.below(t.cod, depth - 1)
            return SubDeriv("S-Arrow", Arrow(p0.rhs, p1.lhs), t, (p0, p1))
        if rule == "lift":
            d = effects.subtype(t.answer, t.rest)
            if d is not None:
                return SubDeriv("S-Lift", t.carrier, t, (d,))
            rule = "cons"
        if rule == "cons":
            p0 = self.below(t.carrier, depth - 1)
            p1 = self.above(t.answer, depth - 1)
            p2 = self.below(t.rest, depth - 1)
            return SubDeriv("S-Cons", Eff(p0.lhs, p1.rhs, p2.lhs), t, (p0, p1, p2))
        if rule == "trans":
            upper = self.below(t, depth - 1)
            lower = self.below(upper.lhs, depth - 1)
            return SubDeriv("S-Trans", lower.lhs, t, (upper, lower))
        return SubDeriv("S-Refl", t, t)

    def above(self, t, depth: int, pure: bool = False) -> SubDeriv:
        opts = ["refl"]
        if depth > 0:
            if not self.effect:
                opts.append("top")
            if isinstance(t, Arrow):
                opts += ["arrow", "arrow"]
            if self.control and not pure and not isinstance(t, Eff):
                opts += ["lift"]
            if isinstance(t, Eff):
                opts += ["cons"]
            if self.chance(0.15):
                opts.append("trans")
        rule = self.rng.choice(opts)
        if rule == "top":
            return SubDeriv("S-Top", t, Top())
        if rule == "arrow":
            p0, p1 = self.below(t.dom, depth - 1), self.above(t.cod, depth - 1)
            return SubDeriv("S-Arrow", t, Arrow(p0.lhs, p1.rhs), (p0, p1))
        if rule == "lift":
            d = self.below(self.type_(1), depth - 1)
            return SubDeriv("S-Lift", t, Eff(t, d.lhs, d.rhs), (d,))
        if rule == "cons":
            p0 = self.above(t.carrier, depth - 1, pure=True)
            p1 = self.below(t.answer, depth - 1)
            p2 = self.above(t.rest, depth - 1)
            return SubDeriv("S-Cons", t, Eff(p0.rhs, p1.lhs, p2.rhs), (p0, p1, p2))
        if rule == "trans":
            lower = self.above(t, depth - 1, pure)
            upper = self.above(lower.rhs, depth - 1, pure)
            return SubDeriv("S-Trans", t, upper.rhs, (upper, lower))
        return SubDeriv("S-Refl", t, t)

    # -- typing
    def term(self, env: dict, goal, depth: int, avoid=frozenset()) -> TypeDeriv:
        usable = sorted(x for x, t in env.items() if t == goal and x not in avoid)
        if depth <= 0:
            if usable and self.chance(0.6):
                return TypeDeriv("T-Var", env, Var(self.rng.choice(usable)), goal)
            return self.leaf(env, goal, avoid)
        opts = [("var", 3)] if usable else []
        opts += [("sub", 1.5), ("app", 1.5)]
        if isinstance(goal, Nat):
            opts += [("const", 2), ("prim", 1)]
        if isinstance(goal, Arrow):
            opts += [("abs", 3), ("fix", 0.4)]
        if isinstance(goal, Eff):
            opts += [("sft", 2.5), ("eapp", 2)]
        if self.control:
            opts += [("rst", 1)]
        kinds, weights = zip(*opts)
        kind = self.rng.choices(kinds, weights)[0]
        return getattr(self, "_" + kind)(env, goal, depth, avoid, usable)

    def leaf(self, env, goal, avoid):
        if isinstance(goal, Nat):
            return TypeDeriv("T-Const", env, Const(self.rng.randint(0, 9)), goal)
        if isinstance(goal, Top):
            d = TypeDeriv("T-Const", env, Const(self.rng.randint(0, 9)), Nat())
            return TypeDeriv("T-Sub", env, d.term, goal, (d, SubDeriv("S-Top", Nat(), goal)))
        if isinstance(goal, Arrow):
            x = self.name("x")
            inner = {**env, x: goal.dom}
            body = self.term(inner, goal.cod, 0, avoid)
            return TypeDeriv("T-Abs", env, Lam(x, body.term), goal, (body,))
        k = self.name("k")
        inner = {**env, k: Arrow(goal.carrier, goal.answer)}
        body = self.term(inner, goal.rest, 0, avoid)
        return TypeDeriv("T-Sft", env, Shift0(k, body.term), goal, (body,))

    def _var(self, env, goal, depth, avoid, usable):
        return TypeDeriv("T-Var", env, Var(self.rng.choice(usable)), goal)

    def _const(self, env, goal, depth, avoid, usable):
        return self.leaf(env, goal, avoid)

    def _prim(self, env, goal, depth, avoid, usable):
        d1 = self.term(env, Nat(), depth - 1, avoid)
        d2 = self.term(env, Nat(), depth - 1, avoid)
        op = self.rng.choice("+*")
        return TypeDeriv("T-Prim", env, Prim(op, d1.term, d2.term), goal, (d1, d2))

    def _sub(self, env, goal, depth, avoid, usable):
        sd = self.below(goal, 2)
        d = self.term(env, sd.lhs, depth - 1, avoid)
        return TypeDeriv("T-Sub", env, d.term, goal, (d, sd))

    def _app(self, env, goal, depth, avoid, usable):
        arg_t = self.type_(1, pure=True)
        d1 = self.term(env, Arrow(arg_t, goal), depth - 1, avoid)
        d2 = self.term(env, arg_t, depth - 1, avoid)
        rule = "T-PApp" if self.effect else "T-App"
        return TypeDeriv(rule, env, App(d1.term, d2.term), goal, (d1, d2))

    def _abs(self, env, goal, depth, avoid, usable):
        x = self.name("x")
        body = self.term({**env, x: goal.dom}, goal.cod, depth - 1, avoid)
        return TypeDeriv("T-Abs", env, Lam(x, body.term), goal, (body,))

    def _fix(self, env, goal, depth, avoid, usable):
        f, x = self.name("f"), self.name("x")
        # recursive calls mostly diverge, so the body rarely gets to use f
        inner_avoid = avoid if self.chance(0.1) else avoid | {f}
        body = self.term({**env, f: goal, x: goal.dom}, goal.cod, depth - 1, inner_avoid)
        return TypeDeriv("T-Fix", env, Fix(f, x, body.term), goal, (body,))

    def _sft(self, env, goal, depth, avoid, usable):
        k = self.name("k")
        inner = {**env, k: Arrow(goal.carrier, goal.answer)}
        body = self.term(inner, goal.rest, depth - 1, avoid)
        return TypeDeriv("T-Sft", env, Shift0(k, body.term), goal, (body,))

    def _eapp(self, env, goal, depth, avoid, usable):
        t2 = self.type_(1, pure=True)
        u2, u3 = self.type_(1), self.type_(1)
        fun_t = Eff(Arrow(t2, Eff(goal.carrier, goal.answer, u3)), u2, goal.rest)
        d1 = self.term(env, fun_t, depth - 1, avoid)
        d2 = self.term(env, Eff(t2, u3, u2), depth - 1, avoid)
        return TypeDeriv("T-App", env, App(d1.term, d2.term), goal, (d1, d2))

    def _rst(self, env, goal, depth, avoid, usable):
        t = self.type_(1, pure=True)
        body = self.term(env, Eff(t, t, goal), depth - 1, avoid)
        return TypeDeriv("T-Rst", env, Reset0(body.term), goal, (body,))


def trial_rng(seed, *index) -> random.Random:
    """Independent RNG for one trial, split from the root seed."""
    return random.Random(":".join(map(str, (seed,) + index)))


def gen_terms(flavor, config: GenConfig, goal=None, env=None) -> list:
    """Well-typed samples built from random derivations; reproducible from the seed."""
    calc = _calculus(flavor)
    out = []
    for i in range(config.samples):
        rng = trial_rng(config.seed, "term", i)
        g = _Gen(flavor, rng, config.allow_control)
        t = goal if goal is not None else g.type_(2, pure=not g.control)
        base = dict(env or {})
        d = g.term(base, t, rng.randint(1, config.size))
        calc.validate(d)
        out.append(Sample(base, d.term, t, d))
    return out


# ----------------------------------------------------------- contexts


@dataclass(frozen=True)
class Context:
    """A closing context: ``body`` mentions the hole variable once the
    ``bindings`` (closed values for the judgment's free variables) are applied."""

    body: object
    bindings: tuple = ()

    def plug(self, e):
        for x, v in self.bindings:
            e = subst(e, x, v)
        return subst(self.body, HOLE, e)

    def __str__(self):
        text = show(self.body)
        if self.bindings:
            text += " where " + ", ".join(f"{x} := {show(v)}" for x, v in self.bindings)
        return text


def inhabitant(t):
    """A closed value of target type ``t``."""
    if isinstance(t, NatT):
        return Const(0)
    if isinstance(t, UnitT):
        return Unit()
    if isinstance(t, ArrowT):
        return Lam("a", inhabitant(t.cod))
    if isinstance(t, EffArrowT):
        return Lam("k", inhabitant(t.rest))
    raise TypeError(f"not a target type: {t!r}")


def source_type(flavor, t):
    """Inverse of the type translation."""
    if isinstance(t, NatT):
        return Nat()
    if isinstance(t, UnitT):
        return Top()
    if isinstance(t, ArrowT):
        return Arrow(source_type(flavor, t.dom), source_type(flavor, t.cod))
    if isinstance(t, EffArrowT):
        return Eff(*(source_type(flavor, x) for x in (t.carrier, t.answer, t.rest)))
    raise TypeError(f"not a target type: {t!r}")


def _identity(t=None):
    return Lam("x", Var("x"))


def observe(e, t, answer):
    """Wrap ``e : t`` until it has type ``answer``.

    Effect arrows get continuations (identity where the types allow),
    functions get arguments, and anything else is discarded by a constant
    function.
    """
    while t != answer:
        if isinstance(t, EffArrowT):
            k = _identity(t) if t.answer == t.carrier else Lam("x", inhabitant(t.answer))
            e, t = App(e, k), t.rest
        elif isinstance(t, ArrowT):
            e, t = App(e, inhabitant(t.dom)), t.cod
        else:
            return App(Lam("u", inhabitant(answer)), e)
    return e


def _translated_term(flavor, rng, env, goal, depth):
    g = _Gen(flavor, rng)
    d = g.term(env, goal, depth)
    return translate(flavor, d)


def _random_value(flavor, rng, t):
    """A generated closed value of target type ``t`` (pure types only)."""
    v = _translated_term(flavor, rng, {}, source_type(flavor, t), rng.randint(1, 3))
    return v if isinstance(v, (Lam, Fix, Const, Unit)) else inhabitant(t)


def _random_context(flavor, rng, hole_type, answer):
    """Peel effect arrows with generated continuations, maybe apply the
    result to generated arguments, then feed it to a generated function of
    the answer type that mentions its parameter when possible."""
    e, t = Var(HOLE), hole_type
    while isinstance(t, EffArrowT):
        if rng.random() < 0.5 and t.answer == t.carrier:
            k = _identity()
        else:
            k = _random_value(flavor, rng, ArrowT(t.carrier, t.answer))
        e, t = App(e, k), t.rest
    while isinstance(t, ArrowT) and rng.random() < 0.5:
        e, t = App(e, _random_value(flavor, rng, t.dom)), t.cod
        while isinstance(t, EffArrowT):
            k = _identity() if t.answer == t.carrier else inhabitant(ArrowT(t.carrier, t.answer))
            e, t = App(e, k), t.rest
    if t == answer and rng.random() < 0.3:
        return e
    y = "y"
    src = {y: source_type(flavor, t)}
    goal = source_type(flavor, answer)
    for _ in range(6):
        body = _translated_term(flavor, rng, src, goal, rng.randint(1, 4))
        if y in free_vars(body):
            break
    return App(Lam(y, body), e)


def gen_contexts(flavor, hole_type, answer_type, config: GenConfig) -> list:
    """Closing contexts ``C`` with ``hole : hole_type |- C : answer_type``.

    The first context is the canonical minimal one.  Each context is checked
    by typing its body with the hole as a variable.
    """
    flavor = Flavor(flavor)
    canonical = Var(HOLE) if hole_type == answer_type else observe(Var(HOLE), hole_type, answer_type)
    out, seen = [], set()

    def add(body):
        if body in seen:
            return
        if target_check({HOLE: hole_type}, body, flavor, answer_type) is not None:
            seen.add(body)
            out.append(Context(body))

    add(canonical)
    for i in range(config.contexts * 4):
        if len(out) >= config.contexts:
            break
        rng = trial_rng(config.seed, "ctx", i)
        add(_random_context(flavor, rng, hole_type, answer_type))
    return out


def closing_contexts(flavor, env: dict, hole_type, answer_type, config: GenConfig) -> list:
    """Contexts for an open judgment: each also substitutes closed values for
    the free variables."""
    base = gen_contexts(flavor, hole_type, answer_type, config)
    if not env:
        return base
    out = []
    for i, ctx in enumerate(base):
        rng = trial_rng(config.seed, "env", i)
        bindings = []
        for x in sorted(env):
            v = inhabitant(env[x]) if i == 0 else _random_value(flavor, rng, env[x])
            bindings.append((x, v))
        out.append(Context(ctx.body, tuple(bindings)))
    return out


# ------------------------------------------------------- observations


@dataclass(frozen=True)
class Holds:
    pass


@dataclass(frozen=True)
class Fails:
    witness: object


@dataclass(frozen=True)
class Unknown:
    fuel: int


def approx_at(k: int, fuel: int, e1, e2) -> Union[Holds, Fails, Unknown]:
    """Finite-index approximation: if ``e1`` converges within ``k`` beta
    steps then ``e2`` must converge."""
    if not isinstance(evaluate(e1, beta_fuel=k), Converged):
        return Holds()
    o2 = evaluate(e2, beta_fuel=fuel)
    if isinstance(o2, Converged):
        return Holds()
    if isinstance(o2, Stuck):
        return Fails(o2.term)
    return Unknown(fuel)


def describe(o) -> str:
    if isinstance(o, Converged):
        return f"{show(o.value)} (beta={o.beta}, iota={o.iota})"
    if isinstance(o, FuelExhausted):
        return f"fuel exhausted after {o.budget} beta steps"
    return f"stuck at {show(o.term)}"


@dataclass(frozen=True)
class Agree:
    observation: str
    low_confidence: bool = False


@dataclass(frozen=True)
class Disagree:
    context: int
    obs1: str
    obs2: str


Verdict = Union[Agree, Disagree, Unknown]


def compare(o1, o2, ctx: int, fuel: int, at_nat: bool) -> Verdict:
    if isinstance(o1, Stuck) or isinstance(o2, Stuck):
        return Disagree(ctx, describe(o1), describe(o2))
    c1, c2 = isinstance(o1, Converged), isinstance(o2, Converged)
    if c1 and c2:
        if at_nat and o1.value != o2.value:
            return Disagree(ctx, describe(o1), describe(o2))
        return Agree(show(o1.value) if at_nat else "converges")
    if not c1 and not c2:
        return Agree("diverges", low_confidence=True)
    return Unknown(fuel)


@dataclass
class CoherenceReport:
    judgment: str
    derivations: list
    translations: list
    contexts: list
    pairs: list
    verdicts: list             # verdicts[pair][context]
    erasure: list              # per derivation, for closed programs at nat
    type_errors: list          # ill-typed translations and erasure mismatches
    summary: str
    seed: int
    fuel: int

    @property
    def witnesses(self) -> list:
        out = []
        for (i, j), row in zip(self.pairs, self.verdicts):
            for v in row:
                if isinstance(v, Disagree):
                    out.append((i, j, v))
        return out

    def to_json(self) -> str:
        def verdict(v):
            if isinstance(v, Agree):
                return {"verdict": "agree", "observation": v.observation,
                        "low_confidence": v.low_confidence}
            if isinstance(v, Disagree):
                return {"verdict": "disagree", "context": v.context, "obs1": v.obs1,
                        "obs2": v.obs2}
            return {"verdict": "unknown", "fuel": v.fuel}
        data = {
            "judgment": self.judgment,
            "derivations": [show(d) for d in self.derivations],
            "translations": [show(t) for t in self.translations],
            "contexts": [str(c) for c in self.contexts],
            "pairs": [list(p) for p in self.pairs],
            "verdicts": [[verdict(v) for v in row] for row in self.verdicts],
            "erasure": self.erasure,
            "type_errors": self.type_errors,
            "summary": self.summary,
            "seed": self.seed,
            "fuel": self.fuel,
        }
        return json.dumps(data, indent=2)

    def to_text(self) -> str:
        lines = [f"judgment: {self.judgment}", f"seed: {self.seed}  fuel: {self.fuel}",
                 "derivations:"]
        for i, (d, t) in enumerate(zip(self.derivations, self.translations)):
            lines.append(f"  D{i}: {show(d)}")
            lines.append(f"      => {show(t)}")
        lines.append("contexts:")
        lines += [f"  C{i}: {c}" for i, c in enumerate(self.contexts)]
        for err in self.type_errors:
            lines.append(f"type error: {err}")
        for (i, j), row in zip(self.pairs, self.verdicts):
            cells = []
            for c, v in enumerate(row):
                if isinstance(v, Agree):
                    cells.append(f"C{c}: agree {v.observation}" + ("?" if v.low_confidence else ""))
                elif isinstance(v, Disagree):
                    cells.append(f"C{c}: DISAGREE {v.obs1} vs {v.obs2}")
                else:
                    cells.append(f"C{c}: unknown")
            lines.append(f"D{i} vs D{j}: " + "; ".join(cells))
        if self.erasure:
            lines.append("erased: " + ", ".join(self.erasure))
        lines.append(f"summary: {self.summary}")
        return "\n".join(lines)


def _judgment(env, e, goal) -> str:
    ctx = ", ".join(f"{x} : {show(t)}" for x, t in env.items())
    return f"{ctx} |- {show(e)} : {show(goal)}".lstrip()


def coherence_check(flavor, env: dict, e, goal, config: GenConfig,
                    derivations: Optional[list] = None) -> CoherenceReport:
    """Run every pair of derivations of ``env |- e : goal`` in generated contexts."""
    flavor = Flavor(flavor)
    if derivations is None:
        derivations = enumerate_derivations(flavor, env, e, goal, config.budget,
                                            config.max_derivations)
    translations = [translate(flavor, d) for d in derivations]
    tenv = translate_env(flavor, env)
    ttype = translate_type(flavor, goal)
    type_errors = []
    for i, t in enumerate(translations):
        if target_check(tenv, t, flavor, ttype) is None:
            type_errors.append(f"D{i} does not translate to a term of type {show(ttype)}")

    answer = NatT()
    contexts = closing_contexts(flavor, tenv, ttype, answer, config)
    observations = [[evaluate(c.plug(t), beta_fuel=config.fuel) for c in contexts]
                    for t in translations]
    pairs = list(itertools.combinations(range(len(translations)), 2))
    verdicts = [[compare(observations[i][c], observations[j][c], c, config.fuel, True)
                 for c in range(len(contexts))] for i, j in pairs]

    erasure = []
    if not env and ttype == NatT():
        # whole programs at nat: erased translations must agree as well
        erased = [evaluate(erase(t), beta_fuel=config.fuel) for t in translations]
        erasure = [describe(o) for o in erased]
        direct = [evaluate(t, beta_fuel=config.fuel) for t in translations]
        for i, o in enumerate(erased):
            if isinstance(compare(direct[i], o, -1, config.fuel, True), Disagree):
                type_errors.append(f"D{i} and its erasure disagree: "
                                   f"{describe(direct[i])} vs {describe(o)}")
        for i, j in pairs:
            if isinstance(compare(erased[i], erased[j], -1, config.fuel, True), Disagree):
                type_errors.append(f"erasures of D{i} and D{j} disagree")

    flat = [v for row in verdicts for v in row]
    if type_errors or any(isinstance(v, Disagree) for v in flat):
        summary = "Incoherent"
    elif flat and all(isinstance(v, Unknown) for v in flat):
        summary = "Inconclusive"
    else:
        summary = "Coherent"
    skeletons = [to_skeleton(d, annotate=True) for d in derivations]
    return CoherenceReport(_judgment(env, e, goal), skeletons, translations, contexts, pairs,
                           verdicts, erasure, type_errors, summary, config.seed, config.fuel)


@dataclass(frozen=True)
class FuzzResult:
    judgments: int
    incoherent: list        # (seed, report); the seed regenerates the judgment
    inconclusive: int


def fuzz(flavor, config: GenConfig, judgments: int) -> FuzzResult:
    """Check coherence on generated judgments that have at least two derivations."""
    flavor = Flavor(flavor)
    checked, incoherent, inconclusive = 0, [], 0
    index = 0
    while checked < judgments:
        cfg = replace(config, samples=1, seed=config.seed * 1_000_003 + index)
        sample = gen_terms(flavor, cfg)[0]
        index += 1
        found = enumerate_derivations(flavor, sample.env, sample.term, sample.goal,
                                      config.budget, config.max_derivations)
        derivs = _dedupe([sample.derivation] + found)[: config.max_derivations]
        if len(derivs) < 2:
            continue
        report = coherence_check(flavor, sample.env, sample.term, sample.goal, cfg, derivs)
        checked += 1
        if report.summary == "Incoherent":
            incoherent.append((cfg.seed, report))
        elif report.summary == "Inconclusive":
            inconclusive += 1
    return FuzzResult(checked, incoherent, inconclusive)


def _dedupe(derivs):
    seen, out = set(), []
    for d in derivs:
        key = to_skeleton(d, annotate=True)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out
