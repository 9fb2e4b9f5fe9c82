"""Dynamic semantics, program enumeration, and soundness fuzzing."""

import pytest

from rxcheck import (
    PipelineIR,
    Resolution,
    RtThread,
    SoundAccept,
    SoundReject,
    SourceThread,
    Stage,
    check_soundness,
    enumerate_programs,
    enumerate_resolutions,
    lower,
    parse_program,
    parse_stub_file,
    pretty,
    resolve_annotations,
    run,
    run_soundness_fuzz,
    type_chain,
)
from rxcheck import TypeEnv, merge
from rxcheck.frontend.ast import AnnotatedType, MethodCall, NamedType, StreamType, VarRef
from rxcheck.oracle import OPERATOR_ALPHABET, _op_call, count_programs
from rxcheck.qualifiers import EffectQual, ThreadQual, thread_leq

from conftest import CORPUS, load_resolved

E = EffectQual
T = ThreadQual


# -- lowering -----------------------------------------------------------------


def test_lower_fig1(env):
    irs = lower(load_resolved("fig1.mrx", env))
    assert len(irs) == 1
    ir = irs[0]
    assert ir.source is SourceThread.UNKNOWN
    assert [s.label() for s in ir.stages] == [
        "filter",
        "observeOn(UI)",
        "delay",
        "subscribe(UI)",
    ]


def test_lower_forpda(env):
    (ir,) = lower(load_resolved("forpda.mrx", env))
    assert [s.label() for s in ir.stages] == [
        "onErrorReturn(UI)",
        "observeOn(UI)",
        "subscribe(safe)",
    ]


def test_lower_no_chains(env):
    rp = resolve_annotations(
        parse_program([("a.mrx", "package p { class A { void m() { } } }")]).program,
        env,
    )
    assert lower(rp) == []


# -- running ------------------------------------------------------------------


def test_fig1_violates_under_every_resolution(env):
    (ir,) = lower(load_resolved("fig1.mrx", env))
    for res in enumerate_resolutions(ir):
        trace = run(ir, res)
        assert trace.violations
        stage_idx, _ = trace.violations[0]
        assert ir.stages[stage_idx].op == "subscribe"


def test_fig1_fixed_never_violates(env):
    (ir,) = lower(load_resolved("fig1_fixed.mrx", env))
    for res in enumerate_resolutions(ir):
        assert run(ir, res).violations == ()


def test_forpda_violates_only_from_comp_source(env):
    (ir,) = lower(load_resolved("forpda.mrx", env))
    by_source = {
        res.source: run(ir, res).violations for res in enumerate_resolutions(ir)
    }
    assert by_source[RtThread.COMP] != ()
    assert by_source[RtThread.COMP][0][0] == 0  # the onErrorReturn stage
    assert by_source[RtThread.UI] == ()


def test_run_is_deterministic():
    ir = PipelineIR(
        SourceThread.UNKNOWN,
        (Stage("filter", callback=E.SAFE), Stage("switchMap", callback=E.SAFE),
         Stage("subscribe", callback=E.UI)),
    )
    res = Resolution(source=RtThread.UI, switch=(RtThread.COMP,))
    assert run(ir, res) == run(ir, res)
    trace = run(ir, res)
    assert trace.stage_threads == ((0, RtThread.UI), (1, RtThread.COMP), (2, RtThread.COMP))
    assert trace.violations != ()


def test_resolution_must_be_total():
    ir = PipelineIR(SourceThread.UNKNOWN, (Stage("subscribe", callback=E.SAFE),))
    with pytest.raises(ValueError):
        run(ir, Resolution())
    ir2 = PipelineIR(
        SourceThread.UI,
        (Stage("switchMap", callback=E.SAFE), Stage("subscribe", callback=E.SAFE)),
    )
    with pytest.raises(ValueError):
        run(ir2, Resolution())


# -- static/dynamic agreement ------------------------------------------------------


def test_static_stage_type_bounds_every_runtime_thread(env):
    """For each operator and each concrete incoming thread, the statically
    instantiated output qualifier bounds every thread the oracle can land on."""
    helper = "package gen { @UIType class Ui { void touch() { } } }"
    for letter in OPERATOR_ALPHABET:
        for in_thread, in_qual in ((RtThread.UI, T.UI), (RtThread.COMP, T.COMP)):
            program = parse_program([("e.mrx", helper)]).program
            rp = resolve_annotations(program, env)
            tenv = TypeEnv(rp, env, None, E.SAFE)
            tenv.define("src", AnnotatedType(StreamType("Item"), in_qual))
            tenv.define("unit", AnnotatedType(NamedType("TimeUnit")))
            tenv.define("ui", AnnotatedType(NamedType("Ui")))
            call = _op_call(VarRef("src"), letter)
            static_t, diags = type_chain(call, tenv)
            assert diags == [], (letter, diags)
            static_q = static_t.qualifier

            subscribe = MethodCall(call, "subscribe", [])
            ir_source = SourceThread.UI if in_thread is RtThread.UI else SourceThread.COMP
            op = call.name
            if op == "observeOn":
                stage = Stage(
                    "observeOn",
                    scheduler=RtThread.UI if "UI" in letter else RtThread.COMP,
                )
            elif op in ("filter", "map", "switchMap", "onErrorReturn"):
                stage = Stage(op, callback=E.SAFE)
            else:
                stage = Stage(op)
            ir = PipelineIR(ir_source, (stage, Stage("subscribe", callback=E.SAFE)))
            for res in enumerate_resolutions(ir):
                trace = run(ir, res)
                runtime = trace.stage_threads[0][1]
                runtime_q = T.UI if runtime is RtThread.UI else T.COMP
                assert thread_leq(runtime_q, static_q), (letter, in_qual, runtime_q, static_q)


# -- enumeration ---------------------------------------------------------------------


def test_enumeration_counts():
    assert count_programs(0) == 6
    assert count_programs(1) == 6 + 3 * 9 * 2 == 60
    assert sum(1 for _ in enumerate_programs(0)) == 6
    assert sum(1 for _ in enumerate_programs(1)) == 60


def test_enumerated_programs_parse_and_resolve_cleanly(env):
    for rp in enumerate_programs(1, env):
        printed = pretty(rp.program)
        reparsed = parse_program([("gen.mrx", printed)])
        assert reparsed.program is not None, reparsed.diagnostics
        rp2 = resolve_annotations(reparsed.program, env)
        assert rp2.program == rp.program
        assert rp2.diagnostics == []


def test_enumeration_is_deterministic(env):
    first = [lower(rp)[0].describe() for rp in enumerate_programs(1, env)]
    second = [lower(rp)[0].describe() for rp in enumerate_programs(1, env)]
    assert first == second


# -- soundness ---------------------------------------------------------------------


def test_fig1_verdicts(env):
    verdict = check_soundness(load_resolved("fig1.mrx", env), env)
    assert isinstance(verdict, SoundReject)
    assert [d.code for d in verdict.diagnostics] == ["rx.thread.violation"]
    fixed = check_soundness(load_resolved("fig1_fixed.mrx", env), env)
    assert isinstance(fixed, SoundAccept)


def test_fuzz_depth_two_is_sound(env):
    report = run_soundness_fuzz(2, env)
    assert report.programs == count_programs(2) == 546
    assert report.unsound == 0
    assert report.accepted + report.rejected == report.programs


def test_mutated_delay_rule_is_caught(env):
    text = (CORPUS / "mutant_delay.astub").read_text(encoding="utf-8")
    sigs = parse_stub_file(text, "mutant_delay.astub").sigs
    mutated = merge(env, sigs)
    report = run_soundness_fuzz(1, mutated)
    assert report.unsound >= 1
    witness = report.witnesses[0]
    assert any(s.op == "delay" for s in witness.ir.stages)
    assert "UNSOUND" in witness.describe()


def test_safe_lambda_rescan_over_fuzz_corpus(env):
    """Inference soundness: no accepted lambda inferred safe has a direct UI call."""
    from rxcheck.checker import Checker

    checked = 0
    for rp in enumerate_programs(1, env):
        checker = Checker(rp, env)
        diags = checker.run()
        if diags:
            continue
        for il in checker.inferred_lambdas:
            if il.effect is E.SAFE:
                tenv = TypeEnv(rp, env, il.owner, E.SAFE)
                assert not checker._body_calls_ui(il.lam.body, il.lam.params, tenv)
                checked += 1
    assert checked > 0
