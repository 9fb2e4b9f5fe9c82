"""Exhaustive laws for the two qualifier lattices (small enough to enumerate)."""

import itertools

import pytest

from rxcheck.qualifiers import (
    CONCRETE_EFFECTS,
    CONCRETE_THREADS,
    EMPTY_BINDING,
    EffectQual,
    PolyBinding,
    ThreadQual,
    UnboundPolyQualifier,
    effect_join,
    effect_leq,
    instantiate,
    thread_join,
    thread_leq,
)

E = EffectQual
T = ThreadQual


# -- pinned single cases -----------------------------------------------------


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (E.SAFE, E.UI, True),
        (E.UI, E.UI, True),
        (E.UI, E.SAFE, False),
        (E.SAFE, E.POLY, True),
        (E.POLY, E.UI, True),
        (E.POLY, E.SAFE, False),
        (E.UI, E.POLY, False),
    ],
)
def test_effect_leq_cases(a, b, expected):
    assert effect_leq(a, b) is expected


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (T.UI, T.ANY, True),
        (T.COMP, T.UI, False),
        (T.UI, T.COMP, False),
        (T.BOTTOM, T.COMP, True),
        (T.BOTTOM, T.UI, True),
        (T.COMP, T.ANY, True),
        (T.ANY, T.UI, False),
    ],
)
def test_thread_leq_cases(a, b, expected):
    assert thread_leq(a, b) is expected


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (T.UI, T.COMP, T.ANY),
        (T.BOTTOM, T.UI, T.UI),
        (T.ANY, T.COMP, T.ANY),
        (T.BOTTOM, T.BOTTOM, T.BOTTOM),
    ],
)
def test_thread_join_cases(a, b, expected):
    assert thread_join(a, b) is expected


# -- partial-order laws, exhaustively -----------------------------------------


def test_effect_order_is_reflexive_antisymmetric_transitive():
    for a in CONCRETE_EFFECTS:
        assert effect_leq(a, a)
    for a, b in itertools.product(CONCRETE_EFFECTS, repeat=2):
        if effect_leq(a, b) and effect_leq(b, a):
            assert a is b
    for a, b, c in itertools.product(CONCRETE_EFFECTS, repeat=3):
        if effect_leq(a, b) and effect_leq(b, c):
            assert effect_leq(a, c)


def test_thread_order_is_reflexive_antisymmetric_transitive():
    for a in CONCRETE_THREADS:
        assert thread_leq(a, a)
    for a, b in itertools.product(CONCRETE_THREADS, repeat=2):
        if thread_leq(a, b) and thread_leq(b, a):
            assert a is b
    for a, b, c in itertools.product(CONCRETE_THREADS, repeat=3):
        if thread_leq(a, b) and thread_leq(b, c):
            assert thread_leq(a, c)


def test_thread_join_is_least_upper_bound():
    for a, b in itertools.product(CONCRETE_THREADS, repeat=2):
        j = thread_join(a, b)
        assert thread_leq(a, j) and thread_leq(b, j)
        for c in CONCRETE_THREADS:
            if thread_leq(a, c) and thread_leq(b, c):
                assert thread_leq(j, c)


def test_thread_join_algebra():
    for a, b in itertools.product(CONCRETE_THREADS, repeat=2):
        assert thread_join(a, b) is thread_join(b, a)
    for a, b, c in itertools.product(CONCRETE_THREADS, repeat=3):
        assert thread_join(a, thread_join(b, c)) is thread_join(thread_join(a, b), c)
    for a in CONCRETE_THREADS:
        assert thread_join(a, a) is a


def test_effect_join_is_least_upper_bound():
    for a, b in itertools.product(CONCRETE_EFFECTS, repeat=2):
        j = effect_join(a, b)
        assert effect_leq(a, j) and effect_leq(b, j)
        for c in CONCRETE_EFFECTS:
            if effect_leq(a, c) and effect_leq(b, c):
                assert effect_leq(j, c)


# -- polymorphic qualifiers -----------------------------------------------------


def test_thread_operations_reject_poly():
    with pytest.raises(ValueError):
        thread_leq(T.POLY, T.ANY)
    with pytest.raises(ValueError):
        thread_leq(T.UI, T.POLY)
    with pytest.raises(ValueError):
        thread_join(T.POLY, T.UI)


def test_instantiate_substitutes_poly():
    assert instantiate(T.POLY, PolyBinding(thread=T.UI)) is T.UI
    assert instantiate(T.COMP, PolyBinding(thread=T.UI)) is T.COMP
    assert instantiate(E.POLY, PolyBinding(effect=E.SAFE)) is E.SAFE


def test_instantiate_idempotent_on_concrete():
    for q in CONCRETE_THREADS + CONCRETE_EFFECTS:
        if q in (T.POLY, E.POLY):
            continue
        assert instantiate(q, EMPTY_BINDING) is q
        assert instantiate(instantiate(q, EMPTY_BINDING), EMPTY_BINDING) is q


def test_instantiate_unbound_raises():
    with pytest.raises(UnboundPolyQualifier):
        instantiate(T.POLY, EMPTY_BINDING)
    with pytest.raises(UnboundPolyQualifier):
        instantiate(E.POLY, PolyBinding(thread=T.UI))


def test_binding_must_be_concrete():
    with pytest.raises(ValueError):
        PolyBinding(thread=T.POLY)
    with pytest.raises(ValueError):
        PolyBinding(effect=E.POLY)
