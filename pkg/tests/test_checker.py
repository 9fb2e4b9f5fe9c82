"""Unit rules and whole-program checking."""

import itertools

import pytest

from rxcheck import (
    TypeEnv,
    check_call_effect,
    check_override,
    check_program,
    check_subscribe,
    infer_lambda_effect,
    parse_program,
    resolve_annotations,
    type_chain,
)
from rxcheck.checker import Checker, UnknownInterface
from rxcheck.diagnostics import BUILTIN_SPAN, Span
from rxcheck.frontend.ast import (
    AnnotatedType,
    Lambda,
    Literal,
    MethodCall,
    NamedType,
    StreamType,
    VarRef,
)
from rxcheck.qualifiers import EffectQual, ThreadQual
from rxcheck.stubs import MethodSig, StubEnv

from conftest import load_resolved

E = EffectQual
T = ThreadQual
SPAN = Span("unit.mrx", 1, 1, 1, 2)


def sig_with_effect(effect):
    return MethodSig(
        "A", "m", effect, AnnotatedType(NamedType("A")), (), AnnotatedType(NamedType("A"))
    )


# -- call effect (transitivity + poly receiver) --------------------------------


@pytest.mark.parametrize(
    "caller,callee,same_recv,code",
    [
        (E.SAFE, E.UI, False, "effect.transitivity"),
        (E.UI, E.SAFE, False, None),
        (E.POLY, E.POLY, False, "effect.poly.receiver"),
        (E.POLY, E.POLY, True, None),
        (E.POLY, E.SAFE, False, None),
        (E.POLY, E.UI, False, "effect.transitivity"),
        (E.SAFE, E.POLY, False, "effect.transitivity"),
        (E.UI, E.POLY, False, None),
        (E.SAFE, E.SAFE, False, None),
        (E.UI, E.UI, False, None),
    ],
)
def test_check_call_effect(caller, callee, same_recv, code):
    d = check_call_effect(caller, sig_with_effect(callee), same_recv, SPAN)
    if code is None:
        assert d is None
    else:
        assert d is not None and d.code == code
        assert str(caller) in d.message or str(callee) in d.message


def test_call_effect_message_names_both_effects():
    d = check_call_effect(E.SAFE, sig_with_effect(E.UI), False, SPAN)
    assert "@UIEffect" in d.message and "@SafeEffect" in d.message


# -- overrides ---------------------------------------------------------------


@pytest.mark.parametrize(
    "sub,super_,violates",
    [
        (E.UI, E.SAFE, True),
        (E.SAFE, E.UI, False),
        (E.POLY, E.UI, False),
        (E.UI, E.POLY, True),
        (E.SAFE, E.POLY, False),
        (E.SAFE, E.SAFE, False),
    ],
)
def test_check_override(sub, super_, violates):
    d = check_override(sig_with_effect(sub), sig_with_effect(super_))
    assert (d is not None) is violates
    if d:
        assert d.code == "effect.inheritance"


# -- subscribe rule -------------------------------------------------------------


@pytest.mark.parametrize(
    "thread,effect,violates",
    [
        (T.COMP, E.UI, True),
        (T.UI, E.UI, False),
        (T.ANY, E.UI, True),
        (T.ANY, E.SAFE, False),
        (T.BOTTOM, E.UI, False),
        (T.COMP, E.SAFE, False),
        (T.UI, E.SAFE, False),
        (T.BOTTOM, E.SAFE, False),
    ],
)
def test_check_subscribe(thread, effect, violates):
    d = check_subscribe(thread, effect)
    assert (d is not None) is violates
    if d:
        assert d.code == "rx.thread.violation"
        assert str(thread) in d.message and "@UIEffect" in d.message


def test_subscribe_any_rejection_is_backed_by_the_oracle():
    """Derivation for the (AnyThread, UIEffect) case: some schedule of an
    unconstrained source runs the UI callback on a computation thread."""
    from rxcheck import PipelineIR, SourceThread, Stage, enumerate_resolutions, run

    ir = PipelineIR(SourceThread.UNKNOWN, (Stage("subscribe", callback=E.UI),))
    outcomes = [bool(run(ir, r).violations) for r in enumerate_resolutions(ir)]
    assert any(outcomes) and not all(outcomes)
    assert check_subscribe(T.ANY, E.UI) is not None


def test_subscribe_monotone_in_stream_thread():
    from rxcheck.qualifiers import CONCRETE_THREADS, thread_leq

    for t in CONCRETE_THREADS:
        for e in (E.SAFE, E.UI):
            if check_subscribe(t, e) is None:
                for t2 in CONCRETE_THREADS:
                    if thread_leq(t2, t):
                        assert check_subscribe(t2, e) is None


def test_subscribe_lenient_mode_accepts_any():
    assert check_subscribe(T.ANY, E.UI, treat_any_as_error=False) is None
    assert check_subscribe(T.COMP, E.UI, treat_any_as_error=False) is not None


def test_subscribe_requires_concrete_inputs():
    with pytest.raises(ValueError):
        check_subscribe(T.POLY, E.UI)
    with pytest.raises(ValueError):
        check_subscribe(T.UI, E.POLY)


# -- chain typing ------------------------------------------------------------------


def chain_env(env, **vars):
    program = parse_program([("empty.mrx", "")]).program
    rp = resolve_annotations(program, env)
    tenv = TypeEnv(rp, env, None, E.SAFE)
    for name, t in vars.items():
        tenv.define(name, t)
    return tenv


def stream(qual, elem="Car"):
    return AnnotatedType(StreamType(elem), qual)


def test_chain_observe_on_takes_scheduler_thread(env):
    tenv = chain_env(env, s=stream(T.ANY))
    sched = MethodCall(VarRef("AndroidSchedulers"), "mainThread", [])
    call = MethodCall(VarRef("s"), "observeOn", [sched])
    t, diags = type_chain(call, tenv)
    assert diags == []
    assert t.qualifier is T.UI and t.base == StreamType("Car")


def test_chain_delay_forces_comp(env):
    tenv = chain_env(env, s=stream(T.UI), unit=AnnotatedType(NamedType("TimeUnit")))
    call = MethodCall(VarRef("s"), "delay", [Literal(100), VarRef("unit")])
    t, diags = type_chain(call, tenv)
    assert diags == []
    assert t.qualifier is T.COMP


def test_chain_take_preserves_thread(env):
    tenv = chain_env(env, s=stream(T.UI))
    t, diags = type_chain(MethodCall(VarRef("s"), "take", [Literal(3)]), tenv)
    assert diags == []
    assert t.qualifier is T.UI


def test_chain_switch_map_returns_any(env):
    tenv = chain_env(env, s=stream(T.ANY))
    call = MethodCall(VarRef("s"), "switchMap", [Lambda(["x"], VarRef("x"))])
    t, diags = type_chain(call, tenv)
    assert diags == []
    assert t.qualifier is T.ANY


def test_chain_unknown_method(env):
    tenv = chain_env(env, s=stream(T.ANY))
    _, diags = type_chain(MethodCall(VarRef("s"), "frobnicate", []), tenv)
    assert [d.code for d in diags] == ["resolve.unknown.method"]


def test_chain_argument_base_mismatch(env):
    tenv = chain_env(env, s=stream(T.ANY), unit=AnnotatedType(NamedType("TimeUnit")))
    call = MethodCall(VarRef("s"), "observeOn", [VarRef("unit")])
    _, diags = type_chain(call, tenv)
    assert "type.argument" in [d.code for d in diags]


def test_chain_poly_unbound_surfaces_as_diagnostic(env):
    bad = MethodSig(
        "Gadget",
        "poll",
        E.SAFE,
        AnnotatedType(NamedType("Gadget")),
        (),
        AnnotatedType(StreamType("T", True), T.POLY),
    )
    hand_built = StubEnv({bad.key: bad}, {})
    tenv = chain_env(hand_built, g=AnnotatedType(NamedType("Gadget")))
    _, diags = type_chain(MethodCall(VarRef("g"), "poll", []), tenv)
    assert [d.code for d in diags] == ["type.poly.unbound"]


# -- lambda inference -----------------------------------------------------------------


def test_infer_ui_body_against_poly_target(env):
    rp = load_resolved("fig1.mrx", env)
    render = rp.classes["CarMapScreen"].methods[1]
    subscribe = render.body[0].expr
    lam = subscribe.args[0]
    target = env.lookup("Observable", "subscribe", 2).params[0]
    tenv = TypeEnv(rp, env, "CarMapScreen", E.SAFE)
    assert infer_lambda_effect(lam, target, tenv) is E.UI


def test_infer_trivial_lambda_is_safe(env):
    rp = load_resolved("fig1.mrx", env)
    tenv = TypeEnv(rp, env, "CarMapScreen", E.SAFE)
    lam = Lambda(["x"], VarRef("x"))
    target = env.lookup("Observable", "subscribe", 1).params[0]
    assert infer_lambda_effect(lam, target, tenv) is E.SAFE


def test_infer_nested_lambda_outer_safe_inner_ui(env):
    rp = load_resolved("nested_lambda.mrx", env)
    hook = rp.classes["Widget"].methods[0]
    outer = hook.body[0].expr.args[0]
    inner_call = outer.body
    inner = inner_call.args[0]
    tenv = TypeEnv(rp, env, "Widget", E.SAFE)

    outer_target = env.lookup("Observable", "subscribe", 1).params[0]
    assert infer_lambda_effect(outer, outer_target, tenv) is E.SAFE

    inner_target = env.lookup("TextView", "post", 1).params[0]
    assert infer_lambda_effect(inner, inner_target, tenv) is E.UI


def test_infer_concrete_target_wins(env):
    rp = load_resolved("fig1.mrx", env)
    tenv = TypeEnv(rp, env, "CarMapScreen", E.SAFE)
    lam = Lambda(["x"], VarRef("x"))
    target = env.lookup("TextView", "post", 1).params[0]  # @UI Runnable
    assert infer_lambda_effect(lam, target, tenv) is E.UI


def test_infer_unknown_interface_raises(env):
    rp = load_resolved("fig1.mrx", env)
    tenv = TypeEnv(rp, env, "CarMapScreen", E.SAFE)
    lam = Lambda(["x"], VarRef("x"))
    with pytest.raises(UnknownInterface):
        infer_lambda_effect(lam, AnnotatedType(NamedType("Car")), tenv)


# -- whole-program checks ----------------------------------------------------------


def check_corpus(name, env, **kw):
    return check_program(load_resolved(name, env), env, **kw)


def test_fig1_has_exactly_one_thread_violation(env):
    diags = check_corpus("fig1.mrx", env)
    assert [d.code for d in diags] == ["rx.thread.violation"]
    d = diags[0]
    assert "Subscribing a callback with @UIEffect" in d.message
    assert "@CompThread" in d.message
    assert (d.span.line, d.span.col) == (22, 10)


def test_fig1_fixed_is_clean(env):
    assert check_corpus("fig1_fixed.mrx", env) == []


def test_fig5_transitivity_and_inheritance(env):
    diags = check_corpus("fig5.mrx", env)
    assert [d.code for d in diags] == ["effect.transitivity", "effect.inheritance"]
    trans, inherit = diags
    assert (trans.span.line, trans.span.col) == (9, 30)
    assert "A#foo" in trans.message
    assert (inherit.span.line, inherit.span.col) == (10, 20)
    assert "A#bar" in inherit.message and "B#bar" in inherit.message


def test_forpda_and_its_fix(env):
    diags = check_corpus("forpda.mrx", env)
    assert [d.code for d in diags] == ["rx.thread.violation"]
    assert check_corpus("forpda_fixed.mrx", env) == []


def test_forpda_lenient_mode_is_permissive_and_unsound(env):
    assert check_corpus("forpda.mrx", env, treat_any_subscribe_as_error=False) == []


def test_ui_package_exclusion(env):
    diags = check_corpus("ui_package.mrx", env)
    assert [d.code for d in diags] == ["effect.transitivity"]
    assert "Toolbar#refresh" in diags[0].message


def test_poly_receiver_rule(env):
    diags = check_corpus("poly_relay.mrx", env)
    assert [d.code for d in diags] == ["effect.poly.receiver"]


def test_nested_lambda_and_anon_callback_are_clean(env):
    assert check_corpus("nested_lambda.mrx", env) == []
    assert check_corpus("anon_callback.mrx", env) == []


def test_anon_class_ui_method_in_safe_anon_rejected(env):
    text = """
package p {
  @UIType class V { void blink() { } }
  class A {
    V v;
    TextView label;
    void m() {
      label.post(new @UI Runnable() { void run() { v.blink(); } });
      Runnable r = new Runnable() { void run() { v.blink(); } };
    }
  }
}
"""
    rp = resolve_annotations(parse_program([("a.mrx", text)]).program, env)
    diags = check_program(rp, env)
    # The @UI instance may touch the UI; the unqualified (safe) one may not.
    assert [d.code for d in diags] == ["effect.transitivity"]


def test_assignment_subsumption(env):
    text = """
package p {
  class A {
    TimeUnit unit;
    Observable<Car> data;
    void m() {
      @UIThread Observable<Car> s = data.delay(100, unit);
    }
  }
}
"""
    rp = resolve_annotations(parse_program([("a.mrx", text)]).program, env)
    diags = check_program(rp, env)
    assert [d.code for d in diags] == ["type.argument"]


def test_argument_effect_subsumption(env):
    text = """
package p {
  class A {
    @UI Predicate busy;
    Observable<Car> data;
    void m() {
      data.filter(busy);
    }
  }
}
"""
    rp = resolve_annotations(parse_program([("a.mrx", text)]).program, env)
    diags = check_program(rp, env)
    assert [d.code for d in diags] == ["type.argument"]


def test_call_on_lambda_parameter_is_unresolvable(env):
    text = """
package p {
  class A {
    Observable<Car> data;
    void m() {
      data.subscribe(x -> x.frob());
    }
  }
}
"""
    rp = resolve_annotations(parse_program([("a.mrx", text)]).program, env)
    diags = check_program(rp, env)
    assert "resolve.unknown.method" in [d.code for d in diags]


def test_poly_stream_receiver_subscribes_conservatively(env):
    text = """
package p {
  @UIType class V { void blink() { } }
  class A {
    V v;
    void safeCase(@PolyThread Observable<Car> s) {
      s.subscribe(x -> nop());
    }
    void uiCase(@PolyThread Observable<Car> s) {
      s.subscribe(x -> v.blink());
    }
    @SafeEffect void nop() { }
  }
}
"""
    rp = resolve_annotations(parse_program([("a.mrx", text)]).program, env)
    diags = check_program(rp, env)
    assert [d.code for d in diags] == ["rx.thread.violation"]


def test_checker_is_deterministic(env):
    a = check_corpus("fig5.mrx", env)
    b = check_corpus("fig5.mrx", env)
    assert a == b


def test_safe_lambda_rescan_holds_on_corpus(env):
    for name in ("fig1.mrx", "nested_lambda.mrx", "forpda_fixed.mrx"):
        rp = load_resolved(name, env)
        checker = Checker(rp, env)
        checker.run()
        for il in checker.inferred_lambdas:
            if il.effect is E.SAFE:
                tenv = TypeEnv(rp, env, il.owner, E.SAFE)
                assert not checker._body_calls_ui(il.lam.body, il.lam.params, tenv)
