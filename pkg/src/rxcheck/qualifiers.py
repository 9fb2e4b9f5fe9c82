"""Effect and thread qualifier lattices.

Two refinement hierarchies drive the whole checker:

* effects, refining methods and callback-like values:
  ``@SafeEffect`` (never touches the UI) below ``@UIEffect`` (may touch it),
  with ``@PolyUIEffect`` as the polymorphic qualifier sitting between them
  so that ``Safe <= Poly <= UI`` holds for whatever the variable resolves to;

* threads, refining streams and schedulers: a diamond with ``@BottomThread``
  (emits nowhere) at the bottom, ``@CompThread`` and ``@UIThread`` as
  incomparable arms, and ``@AnyThread`` (no restriction) on top.
  ``@PolyThread`` is a variable, not a point of the order; it must be
  instantiated before any comparison.

Everything here is a pure total function over tiny enums, safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class EffectQual(Enum):
    SAFE = "@SafeEffect"
    POLY = "@PolyUIEffect"
    UI = "@UIEffect"

    @property
    def spelling(self) -> str:
        return self.value

    def __str__(self) -> str:
        return self.value


class ThreadQual(Enum):
    BOTTOM = "@BottomThread"
    COMP = "@CompThread"
    UI = "@UIThread"
    ANY = "@AnyThread"
    POLY = "@PolyThread"

    @property
    def spelling(self) -> str:
        return self.value

    def __str__(self) -> str:
        return self.value


CONCRETE_EFFECTS = (EffectQual.SAFE, EffectQual.POLY, EffectQual.UI)
CONCRETE_THREADS = (ThreadQual.BOTTOM, ThreadQual.COMP, ThreadQual.UI, ThreadQual.ANY)

# Height of each effect in the Safe <= Poly <= UI chain.
_EFFECT_RANK = {EffectQual.SAFE: 0, EffectQual.POLY: 1, EffectQual.UI: 2}

# Height in the thread diamond; Comp and UI share a rank but are incomparable.
_THREAD_RANK = {
    ThreadQual.BOTTOM: 0,
    ThreadQual.COMP: 1,
    ThreadQual.UI: 1,
    ThreadQual.ANY: 2,
}


class UnboundPolyQualifier(Exception):
    """A polymorphic qualifier was used where no binding was available.

    Reaching this from user input means the checker failed to collect a
    binding for a call site; it surfaces as a ``type.poly.unbound``
    diagnostic rather than a crash.
    """


@dataclass(frozen=True)
class PolyBinding:
    """Concrete instantiation of a signature's polymorphic qualifiers.

    A signature is parameterized by at most one thread variable and one
    effect variable, so a single pair of bindings applies uniformly to every
    polymorphic position of that signature.
    """

    thread: ThreadQual | None = None
    effect: EffectQual | None = None

    def __post_init__(self) -> None:
        if self.thread is ThreadQual.POLY:
            raise ValueError("thread binding must be concrete")
        if self.effect is EffectQual.POLY:
            raise ValueError("effect binding must be concrete")


EMPTY_BINDING = PolyBinding()


def effect_leq(a: EffectQual, b: EffectQual) -> bool:
    """True iff effect ``a`` may stand in for effect ``b`` (a <= b)."""
    return _EFFECT_RANK[a] <= _EFFECT_RANK[b]


def thread_leq(a: ThreadQual, b: ThreadQual) -> bool:
    """True iff ``a <= b`` in the thread diamond.

    Both arguments must be concrete; instantiate polymorphic qualifiers
    first.
    """
    if a is ThreadQual.POLY or b is ThreadQual.POLY:
        raise ValueError("thread_leq is only defined on concrete qualifiers")
    if a is b or a is ThreadQual.BOTTOM or b is ThreadQual.ANY:
        return True
    return False


def thread_join(a: ThreadQual, b: ThreadQual) -> ThreadQual:
    """Least upper bound of two concrete thread qualifiers."""
    if a is ThreadQual.POLY or b is ThreadQual.POLY:
        raise ValueError("thread_join is only defined on concrete qualifiers")
    if thread_leq(a, b):
        return b
    if thread_leq(b, a):
        return a
    return ThreadQual.ANY


def effect_join(a: EffectQual, b: EffectQual) -> EffectQual:
    """Least upper bound along the effect chain."""
    return a if _EFFECT_RANK[a] >= _EFFECT_RANK[b] else b


def instantiate(
    qual: ThreadQual | EffectQual, binding: PolyBinding
) -> ThreadQual | EffectQual:
    """Resolve a possibly-polymorphic qualifier against a call-site binding.

    Concrete qualifiers pass through unchanged, which makes this idempotent.
    Raises :class:`UnboundPolyQualifier` when a polymorphic qualifier has no
    binding to resolve to.
    """
    if qual is ThreadQual.POLY:
        if binding.thread is None:
            raise UnboundPolyQualifier("no thread binding at this call site")
        return binding.thread
    if qual is EffectQual.POLY:
        if binding.effect is None:
            raise UnboundPolyQualifier("no effect binding at this call site")
        return binding.effect
    return qual
