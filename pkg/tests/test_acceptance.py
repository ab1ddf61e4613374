"""Acceptance suite: golden examples and corpus-level properties.

Each test records one PASS/FAIL line, collected in the terminal summary.
"""

import io
import time

from shiftcoerce import effects, stlc
from shiftcoerce.cli import main
from shiftcoerce.coherence import (
    Disagree, GenConfig, Holds, approx_at, coherence_check, fuzz, gen_contexts, gen_terms,
    translate, translate_env, translate_type,
)
from shiftcoerce.surface import parse, parse_env, show
from shiftcoerce.syntax import Nat, alpha_eq
from shiftcoerce.target import (
    Converged, Flavor, FuelExhausted, Stepped, Stuck, evaluate, erase, iota_normalize, step,
    target_check,
)

from strategies import decompositions, value

FLAVORS = ("stlc", "effect")


def T(text):
    return parse("term-target", text)


def test_criterion_1_identity_application(verdict):
    start = time.perf_counter()
    d = stlc.check({}, parse("term-src-stlc", r"(\f. f 1) (\x. x)"), parse("type-src-stlc", "top"))
    out = stlc.translate_term(d)
    result = evaluate(out)
    elapsed = time.perf_counter() - start
    ok = (alpha_eq(out, T(r"(\f. f 1) ([top -> id](\x. x))"))
          and result == Converged(T("()"), 2, 3) and elapsed < 1.0)
    assert verdict(1, ok, f"{show(out)} -> {show(result.value)} beta={result.beta} "
                          f"iota={result.iota} in {elapsed:.3f}s")


def test_criterion_2_direct_semantics(verdict, tmp_path):
    start = time.perf_counter()
    outputs = []
    for text in ["1 + <10 + (S0 k. 100 + k (k 0))>", "<1 + <10 * (S0 k1. S0 k2. k1 (k2 0))>>"]:
        src = tmp_path / "p.src"
        src.write_text(text)
        out = io.StringIO()
        code = main(["run", "--fuel", "1000", str(src)], out, io.StringIO())
        outputs.append((code, out.getvalue()))
    elapsed = time.perf_counter() - start
    ok = outputs == [(0, "121\n"), (0, "10\n")] and elapsed < 1.0
    assert verdict(2, ok, f"outputs {[o.strip() for _, o in outputs]} in {elapsed:.3f}s")


def test_criterion_3_reset_example(verdict):
    env = parse_env("x : nat -> nat\ny : nat -> [nat, nat, nat]\nz : nat -> nat", "type-src-eff")
    skel = parse("derivation", "(T-PApp (T-Var) (T-Rst (T-App (T-Sub (T-Var) (S-Lift (S-Refl))) "
                               "(T-Sft (T-PApp (T-Var) (T-PApp (T-Var) (T-Const)))))))")
    d = effects.replay(env, parse("term-src-eff", r"x <y (S0 k. z (k 42))>"), Nat(), skel)
    out = effects.translate_term(d)
    expected = T(r"x ((\l. [lift id]y (\f. (\k. z (k 42)) (\u. f u l))) (\v. v))")
    assert verdict(3, alpha_eq(out, expected), show(out))


def test_criterion_4_looping_application(verdict):
    e = parse("term-src-eff", "(fix f x. f x) 1")
    goal = parse("type-src-eff", "[nat, nat, nat]")
    d1 = effects.replay({}, e, goal, parse("derivation", "(T-PApp (T-Fix (T-PApp (T-Var) (T-Var))) (T-Const))"))
    d2 = effects.replay({}, e, goal, parse(
        "derivation", "(T-App (T-Sub (T-Fix (T-PApp (T-Var) (T-Var))) (S-Lift (S-Refl))) "
                      "(T-Sub (T-Const) (S-Lift (S-Refl))))"))
    t1, t2 = effects.translate_term(d1), effects.translate_term(d2)
    cfg = GenConfig(seed=0, fuel=10_000, contexts=4, flavor="effect")
    report = coherence_check("effect", {}, e, goal, cfg, [d1, d2])
    disagreements = [v for row in report.verdicts for v in row if isinstance(v, Disagree)]
    ok = (alpha_eq(t1, T("(fix f x. f x) 1"))
          and alpha_eq(t2, T(r"\k. [lift id](fix f x. f x) (\g. [lift id]1 (\y. g y k))"))
          and not disagreements and not report.type_errors and len(report.contexts) >= 2)
    assert verdict(4, ok, f"{len(report.contexts)} contexts, {len(disagreements)} disagreements, "
                          f"summary {report.summary}")


def test_criterion_5_type_preservation(verdict):
    start = time.perf_counter()
    total = failures = 0
    for flavor in FLAVORS:
        calc = stlc if flavor == "stlc" else effects
        fl = Flavor(flavor)
        for s in gen_terms(flavor, GenConfig(seed=2024, samples=500, flavor=flavor, size=7)):
            out = translate(flavor, s.derivation)
            want = translate_type(flavor, s.goal)
            total += 1
            if target_check(translate_env(flavor, s.env), out, fl, want) is None:
                failures += 1
            calc.validate(s.derivation)
    elapsed = time.perf_counter() - start
    ok = total >= 1000 and failures == 0 and elapsed < 60
    assert verdict(5, ok, f"{total - failures}/{total} translations typecheck in {elapsed:.1f}s")


def _closed_programs(seed, per_flavor):
    out = []
    nat = parse("type-target", "nat")
    for flavor in FLAVORS:
        cfg = GenConfig(seed=seed, samples=per_flavor, flavor=flavor, size=7)
        for i, s in enumerate(gen_terms(flavor, cfg, env={})):
            e = translate(flavor, s.derivation)
            hole = translate_type(flavor, s.goal)
            ctxs = gen_contexts(flavor, hole, nat, GenConfig(seed=seed + i, contexts=2))
            out.append(ctxs[-1].plug(e))
    return out


def test_criterion_6_determinism_and_iota_termination(verdict):
    start = time.perf_counter()
    programs = _closed_programs(77, 500)
    checked = bad = iota_max = 0
    cap = 100_000
    for e in programs:
        for _ in range(25):
            checked += 1
            ds = decompositions(e)
            r = step(e)
            if value(e):
                bad += bool(ds) or isinstance(r, Stuck)
                break
            bad += len(ds) != 1 or not isinstance(r, Stepped)
            _, n = iota_normalize(e, cap)
            iota_max = max(iota_max, n)
            e = r.result
    elapsed = time.perf_counter() - start
    ok = len(programs) >= 1000 and bad == 0 and iota_max < cap and elapsed < 60
    assert verdict(6, ok, f"{len(programs)} programs, {checked} states, {bad} bad, "
                          f"longest iota run {iota_max}, {elapsed:.1f}s")


def test_criterion_7_erasure(verdict):
    pairs = unknown = disagree = 0
    for flavor in FLAVORS:
        cfg = GenConfig(seed=99, samples=300, flavor=flavor, size=8)
        for s in gen_terms(flavor, cfg, goal=Nat(), env={}):
            e = translate(flavor, s.derivation)
            a, b = evaluate(e, beta_fuel=10_000), evaluate(erase(e), beta_fuel=10_000)
            pairs += 1
            if isinstance(a, FuelExhausted) or isinstance(b, FuelExhausted):
                unknown += 1
            elif not (isinstance(a, Converged) and isinstance(b, Converged) and a.value == b.value):
                disagree += 1
    rate = unknown / pairs
    ok = pairs >= 300 and disagree == 0 and rate < 0.10
    assert verdict(7, ok, f"{pairs} programs, {disagree} disagreements, unknown rate {rate:.1%}")


def test_criterion_8_coherence_fuzzing(verdict):
    start = time.perf_counter()
    judged, seeds, inconclusive = 0, [], 0
    for flavor in FLAVORS:
        res = fuzz(flavor, GenConfig(seed=8, fuel=2000, contexts=4, flavor=flavor), 200)
        judged += res.judgments
        inconclusive += res.inconclusive
        seeds += [(flavor, seed) for seed, _ in res.incoherent]
    elapsed = time.perf_counter() - start
    ok = judged >= 200 and not seeds and elapsed < 300
    detail = f"{judged} judgments, {inconclusive} inconclusive, {elapsed:.1f}s"
    if seeds:
        detail += f", incoherent seeds {seeds}"
    assert verdict(8, ok, detail)


def test_criterion_9_approximation(verdict):
    programs = _closed_programs(5, 60)
    loop = T("(fix f x. f x) 1")
    pool = programs[:90] + [loop] * 10
    pairs = [(pool[i], pool[(i * 7 + 3) % len(pool)]) for i in range(100)]
    violations = 0
    for e1, e2 in pairs:
        holds = [approx_at(k, 1000, e1, e2) == Holds() for k in (1, 10, 100)]
        # holding at a larger index implies holding at every smaller one
        for hi in range(3):
            for lo in range(hi):
                if holds[hi] and not holds[lo]:
                    violations += 1
    examples = [
        approx_at(1, 1000, T(r"(\x. x) 1"), T("1")) == Holds(),
        all(approx_at(k, 1000, loop, T("1 2")) == Holds() for k in (1, 10, 100)),
        approx_at(1, 1000, T("1"), T("1")) == Holds(),
    ]
    ok = len(pairs) == 100 and violations == 0 and all(examples)
    assert verdict(9, ok, f"{len(pairs)} pairs, {violations} monotonicity violations, "
                          f"{sum(examples)}/3 examples")
