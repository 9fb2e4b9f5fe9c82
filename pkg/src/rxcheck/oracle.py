"""Executable dynamic semantics for fluent stream pipelines.

The oracle assigns a concrete thread to every pipeline stage and records a
violation wherever a UI-effectful callback ran off the UI thread. Since the
only nondeterminism is the thread of an unconstrained source and the thread
of each ``switchMap`` result, every possible schedule can be enumerated
exhaustively, which makes the oracle a ground truth for soundness testing:
a program the checker accepts must exhibit zero violations under every
resolution.

The operator semantics here deliberately encode the same documented behavior
the annotation stubs claim (delay hops to the computation pool, observeOn
follows its scheduler, filter-like operators stay put, switchMap may land
anywhere). The fuzz harness therefore validates the typing rules and the
inference, not the stubs' fidelity to the real libraries; the stubs remain
a trusted input on both sides.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .checker import Checker, TypeEnv, check_program
from .diagnostics import BUILTIN_SPAN, Diagnostic, Span
from .frontend.ast import (
    UNKNOWN,
    AnnotatedType,
    AnonClass,
    ClassDecl,
    ExprNode,
    ExprStmt,
    FieldDecl,
    IfStmt,
    Lambda,
    Literal,
    LocalDecl,
    MethodCall,
    MethodDecl,
    NamedType,
    PackageDecl,
    Param,
    Program,
    ReturnStmt,
    Stmt,
    StreamType,
    UnitType,
    VarRef,
    MARK_UI,
)
from .frontend.resolve import ResolvedProgram, resolve_annotations
from .qualifiers import EffectQual, ThreadQual
from .stubs import StubEnv, builtin_env


class RtThread(Enum):
    UI = "UI"
    COMP = "Comp"

    def __str__(self) -> str:
        return self.value


class SourceThread(Enum):
    UI = "UI"
    COMP = "Comp"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


class OracleUnsupported(Exception):
    """A pipeline uses constructs outside the modeled operator set."""

    code = "oracle.unsupported"

    def __init__(self, message: str, span: Span = BUILTIN_SPAN):
        super().__init__(message)
        self.message = message
        self.span = span


# Operators with modeled runtime semantics, with their argument shapes.
THREAD_PRESERVING = ("filter", "map", "take", "onErrorReturn")
MODELED_OPERATORS = THREAD_PRESERVING + ("delay", "observeOn", "switchMap", "subscribe")


@dataclass(frozen=True)
class Stage:
    op: str
    callback: EffectQual | None = None
    scheduler: RtThread | None = None

    def label(self) -> str:
        if self.op == "observeOn":
            return f"observeOn({self.scheduler})"
        if self.callback is not None and self.op in ("onErrorReturn", "subscribe"):
            kind = "UI" if self.callback is EffectQual.UI else "safe"
            return f"{self.op}({kind})"
        return self.op


@dataclass(frozen=True)
class PipelineIR:
    """One subscribe-terminated chain: a source plus ordered stages."""

    source: SourceThread
    stages: tuple[Stage, ...]
    span: Span = field(compare=False, default=BUILTIN_SPAN)

    def __post_init__(self) -> None:
        if not self.stages or self.stages[-1].op != "subscribe":
            raise ValueError("a pipeline must end in subscribe")

    def switch_count(self) -> int:
        return sum(1 for s in self.stages if s.op == "switchMap")

    def describe(self) -> str:
        return f"source={self.source} [" + ", ".join(s.label() for s in self.stages) + "]"


@dataclass(frozen=True)
class Resolution:
    """Concrete choice for every nondeterministic point of one pipeline."""

    source: RtThread | None = None
    switch: tuple[RtThread, ...] = ()

    def describe(self) -> str:
        parts = []
        if self.source is not None:
            parts.append(f"source={self.source}")
        if self.switch:
            parts.append("switch=[" + ", ".join(str(t) for t in self.switch) + "]")
        return " ".join(parts) if parts else "(deterministic)"


@dataclass(frozen=True)
class Trace:
    stage_threads: tuple[tuple[int, RtThread], ...]
    violations: tuple[tuple[int, str], ...]


def run(ir: PipelineIR, res: Resolution) -> Trace:
    """Propagate threads through the pipeline under one resolution.

    Filter-like operators keep the incoming thread and run their callbacks
    on it; ``delay`` hops to the computation pool; ``observeOn`` follows its
    scheduler; ``switchMap`` lands on the resolution's choice for that
    stage; ``subscribe`` runs its callback on the incoming thread.
    """
    if ir.source is SourceThread.UNKNOWN:
        if res.source is None:
            raise ValueError("resolution must choose a thread for an unknown source")
        cur = res.source
    else:
        cur = RtThread.UI if ir.source is SourceThread.UI else RtThread.COMP
    if len(res.switch) != ir.switch_count():
        raise ValueError("resolution must choose a thread for every switchMap")

    stage_threads: list[tuple[int, RtThread]] = []
    violations: list[tuple[int, str]] = []
    switch_idx = 0
    for i, stage in enumerate(ir.stages):
        callback_thread: RtThread | None = None
        if stage.op in THREAD_PRESERVING or stage.op == "subscribe":
            callback_thread = cur
        elif stage.op == "switchMap":
            callback_thread = cur
            cur = res.switch[switch_idx]
            switch_idx += 1
        elif stage.op == "delay":
            cur = RtThread.COMP
        elif stage.op == "observeOn":
            assert stage.scheduler is not None
            cur = stage.scheduler
        if (
            stage.callback is EffectQual.UI
            and callback_thread is RtThread.COMP
        ):
            violations.append(
                (i, f"UI-effectful callback of {stage.label()} ran on Comp")
            )
        stage_threads.append((i, cur))
    return Trace(tuple(stage_threads), tuple(violations))


def enumerate_resolutions(ir: PipelineIR) -> Iterator[Resolution]:
    source_choices = (
        [RtThread.UI, RtThread.COMP] if ir.source is SourceThread.UNKNOWN else [None]
    )
    switch_choices = itertools.product([RtThread.UI, RtThread.COMP], repeat=ir.switch_count())
    for switches in switch_choices:
        for src in source_choices:
            yield Resolution(source=src, switch=switches)


# ---------------------------------------------------------------------------
# Lowering programs to pipelines


def _thread_to_source(q: ThreadQual | None, span: Span) -> SourceThread:
    if q is ThreadQual.UI:
        return SourceThread.UI
    if q is ThreadQual.COMP:
        return SourceThread.COMP
    if q is ThreadQual.BOTTOM:
        raise OracleUnsupported("a @BottomThread source never emits", span)
    return SourceThread.UNKNOWN  # AnyThread, poly, or unknown


def _callback_effect(checker: Checker, arg: ExprNode, formal, env: TypeEnv) -> EffectQual:
    if isinstance(arg, Lambda):
        try:
            return checker.infer_lambda_effect(arg, formal, env)
        except Exception:
            return EffectQual.UI
    t = checker.type_expr(arg, env)
    if isinstance(t, AnnotatedType) and t.effect is not None:
        return EffectQual.UI if t.effect is not EffectQual.SAFE else EffectQual.SAFE
    return EffectQual.UI  # unknowable callbacks assumed UI, matching the checker


def lower(rp: ResolvedProgram, env: StubEnv | None = None) -> list[PipelineIR]:
    """Extract one PipelineIR per subscribe-terminated fluent chain.

    Chains are collected from method-body statements (including branches of
    conditionals); a chain is the longest run of modeled operators ending at
    the ``subscribe`` call, and whatever lies beneath it is the source, whose
    statically declared thread qualifier seeds the pipeline.
    """
    stubs = env if env is not None else rp.stubs
    checker = Checker(rp, stubs)
    irs: list[PipelineIR] = []

    for _, cls in rp.program.all_classes():
        for m in cls.methods:
            if m.body is None:
                continue
            tenv = TypeEnv(rp, stubs, cls.name, m.effect or EffectQual.SAFE, None)
            sig = rp.sigs.get((cls.name, m.name, m.arity))
            if not m.is_static and sig is not None:
                tenv.define("this", sig.receiver)
            for p in m.params:
                tenv.define(p.name, p.declared_type)
            _lower_stmts(m.body, checker, tenv, irs)
    return irs


def _lower_stmts(
    stmts: list[Stmt], checker: Checker, env: TypeEnv, out: list[PipelineIR]
) -> None:
    for s in stmts:
        if isinstance(s, LocalDecl):
            env.define(s.name, s.declared_type)
        elif isinstance(s, ExprStmt):
            ir = _lower_chain(s.expr, checker, env)
            if ir is not None:
                out.append(ir)
        elif isinstance(s, IfStmt):
            _lower_stmts(s.then_body, checker, env, out)
            _lower_stmts(s.else_body, checker, env, out)


def _lower_chain(
    expr: ExprNode, checker: Checker, env: TypeEnv
) -> PipelineIR | None:
    if not isinstance(expr, MethodCall) or expr.name != "subscribe":
        return None
    # Unwind the receiver spine while it consists of modeled operators.
    spine: list[MethodCall] = []
    node: ExprNode = expr
    while (
        isinstance(node, MethodCall)
        and node.receiver is not None
        and node.name in MODELED_OPERATORS
    ):
        spine.append(node)
        node = node.receiver
    if not spine or spine[0].name != "subscribe":
        return None
    spine.reverse()

    source_type = checker.type_expr(node, env)
    if isinstance(source_type, AnnotatedType) and isinstance(source_type.base, StreamType):
        source = _thread_to_source(source_type.thread, expr.span)
    else:
        source = SourceThread.UNKNOWN

    stages: list[Stage] = []
    for call in spine:
        op = call.name
        sig = checker.lookup_method("Observable", op, len(call.args))
        if sig is None:
            raise OracleUnsupported(
                f"operator '{op}' with {len(call.args)} argument(s) is not modeled",
                call.span,
            )
        if op == "observeOn":
            sched_t = checker.type_expr(call.args[0], env)
            q = sched_t.thread if isinstance(sched_t, AnnotatedType) else None
            if q is ThreadQual.UI:
                stages.append(Stage("observeOn", scheduler=RtThread.UI))
            elif q is ThreadQual.COMP:
                stages.append(Stage("observeOn", scheduler=RtThread.COMP))
            else:
                raise OracleUnsupported(
                    "observeOn requires a scheduler statically known to be "
                    "@UIThread or @CompThread",
                    call.span,
                )
        elif op in ("filter", "map", "switchMap", "onErrorReturn"):
            eff = _callback_effect(checker, call.args[0], sig.params[0], env)
            stages.append(Stage(op, callback=eff))
        elif op == "take" or op == "delay":
            stages.append(Stage(op))
        elif op == "subscribe":
            eff = EffectQual.SAFE
            for arg, formal in zip(call.args, sig.params):
                one = _callback_effect(checker, arg, formal, env)
                if one is EffectQual.UI:
                    eff = EffectQual.UI
            stages.append(Stage("subscribe", callback=eff))
    return PipelineIR(source, tuple(stages), expr.span)


# ---------------------------------------------------------------------------
# Soundness harness


@dataclass(frozen=True)
class SoundAccept:
    resolutions_checked: int


@dataclass(frozen=True)
class SoundReject:
    diagnostics: tuple[Diagnostic, ...]


@dataclass(frozen=True)
class Unsound:
    """A checker-accepted program with a violating schedule: a checker bug."""

    ir: PipelineIR
    resolution: Resolution
    trace: Trace

    def describe(self) -> str:
        stage_idx, reason = self.trace.violations[0]
        return (
            f"UNSOUND: {self.ir.describe()} under {self.resolution.describe()} "
            f"-> stage {stage_idx}: {reason}"
        )


Verdict = SoundAccept | SoundReject | Unsound


def check_soundness(rp: ResolvedProgram, env: StubEnv | None = None) -> Verdict:
    """Check the program, then confront an accepted verdict with every schedule."""
    stubs = env if env is not None else rp.stubs
    diags = check_program(rp, stubs)
    if diags:
        return SoundReject(tuple(diags))
    count = 0
    for ir in lower(rp, stubs):
        for res in enumerate_resolutions(ir):
            count += 1
            trace = run(ir, res)
            if trace.violations:
                return Unsound(ir, res, trace)
    return SoundAccept(count)


def has_any_violation(rp: ResolvedProgram, env: StubEnv | None = None) -> bool:
    """True when some resolution of some pipeline produces a violation."""
    for ir in lower(rp, env):
        for res in enumerate_resolutions(ir):
            if run(ir, res).violations:
                return True
    return False


# ---------------------------------------------------------------------------
# Exhaustive program generation


OPERATOR_ALPHABET: tuple[str, ...] = (
    "filter",
    "map",
    "take",
    "delay",
    "observeOn(UI)",
    "observeOn(Comp)",
    "switchMap",
    "onErrorReturn(safe)",
    "onErrorReturn(UI)",
)

SOURCE_QUALIFIERS: tuple[ThreadQual, ...] = (
    ThreadQual.UI,
    ThreadQual.COMP,
    ThreadQual.ANY,
)

SUBSCRIBE_VARIANTS: tuple[str, ...] = ("safe", "UI")


def _safe_lambda() -> Lambda:
    return Lambda(["x"], VarRef("x"))


def _ui_lambda() -> Lambda:
    return Lambda(["x"], MethodCall(VarRef("ui"), "touch", []))


def _op_call(receiver: ExprNode, letter: str) -> MethodCall:
    if letter == "filter":
        return MethodCall(receiver, "filter", [Lambda(["x"], Literal(True))])
    if letter == "map":
        return MethodCall(receiver, "map", [_safe_lambda()])
    if letter == "take":
        return MethodCall(receiver, "take", [Literal(3)])
    if letter == "delay":
        return MethodCall(receiver, "delay", [Literal(100), VarRef("unit")])
    if letter == "observeOn(UI)":
        sched = MethodCall(VarRef("AndroidSchedulers"), "mainThread", [])
        return MethodCall(receiver, "observeOn", [sched])
    if letter == "observeOn(Comp)":
        sched = MethodCall(VarRef("Schedulers"), "computation", [])
        return MethodCall(receiver, "observeOn", [sched])
    if letter == "switchMap":
        return MethodCall(receiver, "switchMap", [_safe_lambda()])
    if letter == "onErrorReturn(safe)":
        return MethodCall(receiver, "onErrorReturn", [_safe_lambda()])
    if letter == "onErrorReturn(UI)":
        return MethodCall(receiver, "onErrorReturn", [_ui_lambda()])
    raise ValueError(f"unknown operator letter {letter!r}")


def _generated_program(
    source_qual: ThreadQual, ops: tuple[str, ...], subscribe_variant: str
) -> Program:
    chain: ExprNode = VarRef("src")
    for letter in ops:
        chain = _op_call(chain, letter)
    cb = _ui_lambda() if subscribe_variant == "UI" else _safe_lambda()
    chain = MethodCall(chain, "subscribe", [cb])

    ui_class = ClassDecl(
        name="Ui",
        mark=MARK_UI,
        methods=[
            MethodDecl(
                name="touch",
                return_type=AnnotatedType(UnitType()),
                params=[],
                body=[],
            )
        ],
    )
    gen_class = ClassDecl(
        name="Gen",
        fields=[
            FieldDecl("ui", AnnotatedType(NamedType("Ui"))),
            FieldDecl("unit", AnnotatedType(NamedType("TimeUnit"))),
            FieldDecl("src", AnnotatedType(StreamType("Item"), source_qual)),
        ],
        methods=[
            MethodDecl(
                name="run",
                return_type=AnnotatedType(UnitType()),
                params=[],
                body=[ExprStmt(chain)],
            )
        ],
    )
    return Program([PackageDecl("gen", False, [ui_class, gen_class])])


def enumerate_programs(
    max_len: int, env: StubEnv | None = None
) -> Iterator[ResolvedProgram]:
    """Deterministically yield every chain of up to ``max_len`` operators.

    Chains draw from the nine-operator alphabet over the three source
    qualifiers, each terminated by a safe and a UI subscribe: that is
    ``sum(3 * 9**n * 2 for n in 0..max_len)`` programs.
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    stubs = env if env is not None else builtin_env()
    for n in range(max_len + 1):
        for ops in itertools.product(OPERATOR_ALPHABET, repeat=n):
            for source_qual in SOURCE_QUALIFIERS:
                for variant in SUBSCRIBE_VARIANTS:
                    program = _generated_program(source_qual, ops, variant)
                    yield resolve_annotations(program, stubs)


def count_programs(max_len: int) -> int:
    return sum(3 * (9**n) * 2 for n in range(max_len + 1))


# ---------------------------------------------------------------------------
# Fuzz driver


@dataclass
class SoundnessReport:
    programs: int = 0
    accepted: int = 0
    rejected: int = 0
    unsound: int = 0
    false_positives: int = 0
    witnesses: list[Unsound] = field(default_factory=list)

    @property
    def false_positive_rate(self) -> float:
        return self.false_positives / self.rejected if self.rejected else 0.0


def run_soundness_fuzz(max_len: int, env: StubEnv | None = None) -> SoundnessReport:
    """Exhaustively fuzz the checker against the oracle up to ``max_len``.

    Rejected programs are replayed through the oracle as well: a rejection
    that no schedule can justify counts toward the (reported, not asserted)
    false-positive rate of the conservative checker.
    """
    stubs = env if env is not None else builtin_env()
    report = SoundnessReport()
    for rp in enumerate_programs(max_len, stubs):
        report.programs += 1
        verdict = check_soundness(rp, stubs)
        if isinstance(verdict, SoundAccept):
            report.accepted += 1
        elif isinstance(verdict, SoundReject):
            report.rejected += 1
            if not has_any_violation(rp, stubs):
                report.false_positives += 1
        else:
            report.unsound += 1
            report.witnesses.append(verdict)
    return report
