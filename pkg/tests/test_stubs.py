"""The built-in trusted model and stub merging."""

from pathlib import Path

import pytest

from rxcheck import (
    StubConflict,
    builtin_env,
    empty_env,
    merge,
    parse_stub_file,
)
from rxcheck.frontend.ast import CallbackType, StreamType
from rxcheck.qualifiers import EffectQual, ThreadQual
from rxcheck.stubs import MethodSig, validate_sig
from rxcheck.frontend.ast import AnnotatedType, NamedType

from conftest import CORPUS

BUILTIN_ASTUB = Path(__file__).resolve().parents[1] / "src/rxcheck/builtin.astub"


def test_builtin_is_constant():
    assert builtin_env() == builtin_env()


def test_builtin_lookup_delay(env):
    sig = env.lookup("Observable", "delay", 2)
    assert sig is not None
    assert sig.ret.qualifier is ThreadQual.COMP
    assert sig.receiver.qualifier is ThreadQual.ANY


def test_builtin_lookup_take(env):
    sig = env.lookup("Observable", "take", 1)
    assert sig.receiver.qualifier is ThreadQual.POLY
    assert sig.ret.qualifier is ThreadQual.POLY


def test_builtin_lookup_scrollview_post(env):
    sig = env.lookup("ScrollView", "post", 1)
    assert sig.effect is EffectQual.SAFE
    assert sig.params[0] == AnnotatedType(CallbackType("Runnable"), EffectQual.UI)
    assert env.mark_of("ScrollView") == "ui"


def test_builtin_lookup_observe_on_and_switch_map(env):
    observe = env.lookup("Observable", "observeOn", 1)
    assert observe.params[0].qualifier is ThreadQual.POLY
    assert observe.ret.qualifier is ThreadQual.POLY
    switch = env.lookup("Observable", "switchMap", 1)
    assert switch.ret.qualifier is ThreadQual.ANY


def test_builtin_schedulers(env):
    assert env.lookup("AndroidSchedulers", "mainThread", 0).ret.qualifier is ThreadQual.UI
    assert env.lookup("Schedulers", "computation", 0).ret.qualifier is ThreadQual.COMP
    assert env.lookup("Schedulers", "io", 0).ret.qualifier is ThreadQual.COMP


def test_builtin_callback_interfaces_are_poly(env):
    for name in ("Runnable", "Consumer", "Action", "Observer", "Callback"):
        assert env.mark_of(name) == "poly"
        sam = env.sam_of(name)
        assert sam is not None and sam.effect is EffectQual.POLY


def test_builtin_subscribe_overloads(env):
    one = env.lookup("Observable", "subscribe", 1)
    two = env.lookup("Observable", "subscribe", 2)
    assert one is not None and two is not None
    for sig in (one, two):
        for p in sig.params:
            assert p.qualifier is EffectQual.POLY


def test_every_builtin_signature_passes_invariants(env):
    for sig in env.sigs.values():
        assert validate_sig(sig) is None


def test_builtin_astub_file_matches_builtin_env(env):
    """The shipped human-readable stubs and the programmatic model agree."""
    result = parse_stub_file(BUILTIN_ASTUB.read_text(encoding="utf-8"), "builtin.astub")
    assert result.diagnostics == []
    parsed = merge(empty_env(), result.sigs)
    assert parsed == env


# -- merging --------------------------------------------------------------------


def test_merge_identity(env):
    assert merge(env, []) == env


def test_merge_user_stub_shadows_builtin(env):
    text = (CORPUS / "shadow_delay.astub").read_text(encoding="utf-8")
    result = parse_stub_file(text, "shadow_delay.astub")
    assert result.diagnostics == []
    merged = merge(env, result.sigs)
    assert merged.lookup("Observable", "delay", 2).ret.qualifier is ThreadQual.ANY
    # Everything else is untouched.
    assert merged.lookup("Observable", "take", 1) == env.lookup("Observable", "take", 1)


def test_merge_conflicting_user_stubs_raise(env):
    a = MethodSig(
        "X", "m", EffectQual.UI, AnnotatedType(NamedType("X")), (), AnnotatedType(NamedType("X"))
    )
    b = MethodSig(
        "X", "m", EffectQual.SAFE, AnnotatedType(NamedType("X")), (), AnnotatedType(NamedType("X"))
    )
    with pytest.raises(StubConflict):
        merge(env, [a, b])


def test_validate_sig_rejects_uninferable_poly_return():
    bad = MethodSig(
        "Observable",
        "late",
        EffectQual.SAFE,
        AnnotatedType(StreamType("T", True), ThreadQual.ANY),
        (),
        AnnotatedType(StreamType("T", True), ThreadQual.POLY),
    )
    assert validate_sig(bad) is not None
    result = parse_stub_file("class Observable<T> { @PolyThread Observable<T> late(); }")
    assert any(d.code == "stub.parse.error" for d in result.diagnostics)
