"""Trusted annotated signatures for unanalyzed library code.

A :class:`StubEnv` maps ``(owner, name, arity)`` to a :class:`MethodSig` and
records which classes carry a class-level effect shorthand. The built-in
environment models the slice of the ReactiveX and Android surfaces this
checker understands:

* thread-preserving operators (``filter``, ``map``, ``take``,
  ``onErrorReturn``) relate receiver and result with ``@PolyThread``;
* ``delay`` always returns a computation-thread stream;
* ``observeOn`` returns a stream on its scheduler's thread;
* ``switchMap`` may swap threads entirely, so it returns ``@AnyThread``;
* ``subscribe`` takes effect-polymorphic callbacks and is subject to the
  custom subscribe rule at call sites;
* Android UI classes are ``@UIType`` with thread-safe ``post`` /
  ``runOnUiThread`` escape hatches;
* the callback interfaces are effect-polymorphic (``@PolyUIType``).

The same model ships as ``builtin.astub`` next to this module; a test
asserts that parsing that file reproduces ``builtin_env()`` exactly, keeping
the human-readable and programmatic forms in sync.

Stubs are trusted, not checked: a wrong signature here is a soundness hole
by construction. The oracle deliberately encodes the same documented
semantics, so the property tests exercise the typing rules and inference,
not the fidelity of these signatures to the real libraries.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diagnostics import BUILTIN_SPAN, Diagnostic, Span
from .frontend.ast import (
    CALLBACK_INTERFACES,
    AnnotatedType,
    CallbackType,
    ClassDecl,
    NamedType,
    PrimitiveType,
    SchedulerType,
    StreamType,
    UnitType,
    MARK_POLY,
    MARK_UI,
)
from .qualifiers import EffectQual, ThreadQual


@dataclass(frozen=True)
class MethodSig:
    """A fully qualified method signature.

    All polymorphic qualifiers in one signature denote the same variable
    (one thread variable and one effect variable at most). ``owner_mark``
    carries the declaring class's class-level shorthand, if any.
    """

    owner: str
    name: str
    effect: EffectQual
    receiver: AnnotatedType
    params: tuple[AnnotatedType, ...]
    ret: AnnotatedType
    is_static: bool = False
    owner_mark: str | None = None
    span: Span = field(compare=False, default=BUILTIN_SPAN)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.owner, self.name, self.arity)


def validate_sig(sig: MethodSig) -> str | None:
    """Check the MethodSig invariants; return a problem description or None.

    A ``@PolyThread`` return without a ``@PolyThread`` receiver or parameter
    could never be instantiated at a call site, so it is rejected up front.
    """
    if sig.ret.thread is ThreadQual.POLY:
        positions = [sig.receiver, *sig.params]
        if not any(p.thread is ThreadQual.POLY for p in positions):
            return (
                f"{sig.owner}#{sig.name}/{sig.arity}: @PolyThread return requires a "
                "@PolyThread receiver or parameter"
            )
    return None


class StubConflict(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class StubEnv:
    """Immutable lookup table of trusted signatures; shareable anywhere."""

    sigs: dict[tuple[str, str, int], MethodSig]
    marks: dict[str, str]  # class name -> MARK_UI | MARK_POLY

    def lookup(self, owner: str, name: str, arity: int) -> MethodSig | None:
        return self.sigs.get((owner, name, arity))

    def mark_of(self, class_name: str) -> str | None:
        return self.marks.get(class_name)

    def knows_class(self, name: str) -> bool:
        if name in self.marks:
            return True
        return any(owner == name for owner, _, _ in self.sigs)

    def methods_of(self, owner: str) -> list[MethodSig]:
        return sorted(
            (s for s in self.sigs.values() if s.owner == owner),
            key=lambda s: (s.name, s.arity),
        )

    def sam_of(self, interface: str) -> MethodSig | None:
        """The single abstract method, when ``interface`` declares exactly one."""
        methods = self.methods_of(interface)
        return methods[0] if len(methods) == 1 else None


def _env_from_sigs(sigs: list[MethodSig]) -> tuple[StubEnv, list[Diagnostic]]:
    table: dict[tuple[str, str, int], MethodSig] = {}
    marks: dict[str, str] = {}
    diags: list[Diagnostic] = []
    for sig in sigs:
        problem = validate_sig(sig)
        if problem is not None:
            diags.append(Diagnostic("stub.parse.error", sig.span, problem))
            continue
        if sig.key in table and table[sig.key] != sig:
            diags.append(
                Diagnostic(
                    "stub.conflict",
                    sig.span,
                    f"conflicting stubs for {sig.owner}#{sig.name}/{sig.arity}",
                    related=(table[sig.key].span,),
                )
            )
            continue
        table[sig.key] = sig
        if sig.owner_mark is not None:
            if marks.get(sig.owner, sig.owner_mark) != sig.owner_mark:
                diags.append(
                    Diagnostic(
                        "stub.conflict",
                        sig.span,
                        f"conflicting class-level annotations for '{sig.owner}'",
                    )
                )
                continue
            marks[sig.owner] = sig.owner_mark
    return StubEnv(table, marks), diags


def validate_sigs(sigs: list[MethodSig]) -> list[Diagnostic]:
    """Invariant and conflict check for a batch of parsed signatures."""
    _, diags = _env_from_sigs(sigs)
    return diags


def empty_env() -> StubEnv:
    return StubEnv({}, {})


def merge(env: StubEnv, extra: list[MethodSig]) -> StubEnv:
    """Layer user stubs over ``env``; user signatures shadow on exact key.

    Conflicts inside ``extra`` raise :class:`StubConflict`; shadowing an
    existing entry is the intended workflow and is not a conflict.
    """
    overlay, diags = _env_from_sigs(extra)
    if diags:
        raise StubConflict(diags[0])
    sigs = dict(env.sigs)
    sigs.update(overlay.sigs)
    marks = dict(env.marks)
    for owner, mark in overlay.marks.items():
        marks[owner] = mark
    return StubEnv(sigs, marks)


def sigs_from_class_decls(
    classes: list[ClassDecl],
) -> tuple[list[MethodSig], list[Diagnostic]]:
    """Convert parsed stub classes into normalized MethodSigs.

    Effects: explicit annotation wins, else the class mark, else safe.
    Unqualified stream/scheduler positions become ``@AnyThread``;
    unqualified callback positions take the safe instantiation.
    """
    sigs: list[MethodSig] = []
    diags: list[Diagnostic] = []
    poly_classes = {c.name for c in classes if c.mark == MARK_POLY}

    def norm(t: AnnotatedType) -> AnnotatedType:
        if t.qualifier is not None:
            return t
        if isinstance(t.base, (StreamType, SchedulerType)):
            return replace(t, qualifier=ThreadQual.ANY)
        if isinstance(t.base, CallbackType):
            return replace(t, qualifier=EffectQual.SAFE)
        if isinstance(t.base, NamedType) and t.base.name in poly_classes:
            return replace(t, qualifier=EffectQual.SAFE)
        return t

    for cls in classes:
        for m in cls.methods:
            if len(m.annotations) > 1:
                diags.append(
                    Diagnostic(
                        "stub.parse.error",
                        m.name_span,
                        f"method '{m.name}' carries more than one effect annotation",
                    )
                )
                continue
            if m.annotations:
                effect = m.annotations[0]
            elif cls.mark == MARK_UI:
                effect = EffectQual.UI
            elif cls.mark == MARK_POLY:
                effect = EffectQual.POLY
            else:
                effect = EffectQual.SAFE
            if m.receiver is not None:
                receiver = norm(m.receiver.declared_type)
            else:
                receiver = default_receiver(cls.name, cls.mark, cls.type_params, m.is_static)
            sigs.append(
                MethodSig(
                    owner=cls.name,
                    name=m.name,
                    effect=effect,
                    receiver=receiver,
                    params=tuple(norm(p.declared_type) for p in m.params),
                    ret=norm(m.return_type),
                    is_static=m.is_static,
                    owner_mark=cls.mark,
                    span=m.name_span,
                )
            )
    return sigs, diags


def default_receiver(
    owner: str, mark: str | None, type_params: list[str], is_static: bool
) -> AnnotatedType:
    """Receiver type for a method declared without an explicit ``this``.

    Stream operators get an unconstrained stream receiver; methods of a
    ``@PolyUIType`` interface get the interface's effect variable on their
    receiver, which is what ties an instance's qualifier to its method's
    effect.
    """
    if owner == "Observable" and not is_static:
        elem = type_params[0] if type_params else "T"
        return AnnotatedType(StreamType(elem, True), ThreadQual.ANY)
    base = CallbackType(owner) if owner in CALLBACK_INTERFACES else NamedType(owner)
    if mark == MARK_POLY and not is_static:
        return AnnotatedType(base, EffectQual.POLY)
    return AnnotatedType(base)


# ---------------------------------------------------------------------------
# Built-in model


def _stream(qual: ThreadQual) -> AnnotatedType:
    return AnnotatedType(StreamType("T", True), qual)


def _scheduler(qual: ThreadQual) -> AnnotatedType:
    return AnnotatedType(SchedulerType(), qual)


def _cb(interface: str, qual: EffectQual) -> AnnotatedType:
    return AnnotatedType(CallbackType(interface), qual)


_VOID = AnnotatedType(UnitType())
_INT = AnnotatedType(PrimitiveType("int"))
_LONG = AnnotatedType(PrimitiveType("long"))
_BOOL = AnnotatedType(PrimitiveType("boolean"))
_STRING = AnnotatedType(PrimitiveType("String"))
_OBJECT = AnnotatedType(NamedType("Object"))


def _observable_sigs() -> list[MethodSig]:
    poly_this = _stream(ThreadQual.POLY)
    any_this = _stream(ThreadQual.ANY)

    def op(name, receiver, params, ret):
        return MethodSig(
            "Observable", name, EffectQual.SAFE, receiver, tuple(params), ret
        )

    return [
        op("filter", poly_this, [_cb("Predicate", EffectQual.SAFE)], _stream(ThreadQual.POLY)),
        op("map", poly_this, [_cb("Function", EffectQual.SAFE)], _stream(ThreadQual.POLY)),
        op("take", poly_this, [_INT], _stream(ThreadQual.POLY)),
        op(
            "onErrorReturn",
            poly_this,
            [_cb("Function", EffectQual.POLY)],
            _stream(ThreadQual.POLY),
        ),
        op("delay", any_this, [_LONG, AnnotatedType(NamedType("TimeUnit"))], _stream(ThreadQual.COMP)),
        op("observeOn", any_this, [_scheduler(ThreadQual.POLY)], _stream(ThreadQual.POLY)),
        op("switchMap", any_this, [_cb("Function", EffectQual.SAFE)], _stream(ThreadQual.ANY)),
        op("subscribe", any_this, [_cb("Consumer", EffectQual.POLY)], _VOID),
        op(
            "subscribe",
            any_this,
            [_cb("Consumer", EffectQual.POLY), _cb("Consumer", EffectQual.POLY)],
            _VOID,
        ),
    ]


def _scheduler_factory_sigs() -> list[MethodSig]:
    def factory(owner, name, qual):
        return MethodSig(
            owner,
            name,
            EffectQual.SAFE,
            AnnotatedType(NamedType(owner)),
            (),
            _scheduler(qual),
            is_static=True,
        )

    return [
        factory("AndroidSchedulers", "mainThread", ThreadQual.UI),
        # The lattice has a single non-UI concrete arm, so the io pool maps
        # to the computation qualifier as well.
        factory("Schedulers", "computation", ThreadQual.COMP),
        factory("Schedulers", "io", ThreadQual.COMP),
        MethodSig(
            "TimeUnit",
            "millis",
            EffectQual.SAFE,
            AnnotatedType(NamedType("TimeUnit")),
            (),
            AnnotatedType(NamedType("TimeUnit")),
            is_static=True,
        ),
    ]


def _android_sigs() -> list[MethodSig]:
    sigs: list[MethodSig] = []

    def ui_method(owner, name, effect, params, ret):
        sigs.append(
            MethodSig(
                owner,
                name,
                effect,
                AnnotatedType(NamedType(owner)),
                tuple(params),
                ret,
                owner_mark=MARK_UI,
            )
        )

    ui_runnable = _cb("Runnable", EffectQual.UI)
    ui_method("View", "post", EffectQual.SAFE, [ui_runnable], _BOOL)
    ui_method("View", "invalidate", EffectQual.UI, [], _VOID)
    ui_method("ScrollView", "post", EffectQual.SAFE, [ui_runnable], _BOOL)
    ui_method("ScrollView", "scrollTo", EffectQual.UI, [_INT, _INT], _VOID)
    ui_method("TextView", "post", EffectQual.SAFE, [ui_runnable], _BOOL)
    ui_method("TextView", "setText", EffectQual.UI, [_STRING], _VOID)
    ui_method("Activity", "runOnUiThread", EffectQual.SAFE, [ui_runnable], _VOID)
    ui_method("Activity", "setTitle", EffectQual.UI, [_STRING], _VOID)
    return sigs


def _callback_interface_sigs() -> list[MethodSig]:
    def sam(owner, name, params, ret):
        return MethodSig(
            owner,
            name,
            EffectQual.POLY,
            _cb(owner, EffectQual.POLY),
            tuple(params),
            ret,
            owner_mark=MARK_POLY,
        )

    return [
        sam("Runnable", "run", [], _VOID),
        sam("Consumer", "accept", [_OBJECT], _VOID),
        sam("Action", "run", [], _VOID),
        sam("Observer", "onNext", [_OBJECT], _VOID),
        sam("Callback", "handleMessage", [AnnotatedType(NamedType("Message"))], _BOOL),
        sam("Function", "apply", [_OBJECT], _OBJECT),
        sam("Predicate", "test", [_OBJECT], _BOOL),
    ]


def builtin_env() -> StubEnv:
    """The trusted built-in model; constant across calls."""
    sigs = (
        _observable_sigs()
        + _scheduler_factory_sigs()
        + _android_sigs()
        + _callback_interface_sigs()
    )
    env, diags = _env_from_sigs(sigs)
    assert not diags, f"builtin stubs failed validation: {diags}"
    return env
