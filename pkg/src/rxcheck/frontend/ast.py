"""AST for MiniRx programs and annotation stub files.

Every node carries a source span. Spans are excluded from equality
comparisons so that structural identity (used by the pretty-print round-trip
and by resolution idempotency) ignores layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..diagnostics import BUILTIN_SPAN, Span
from ..qualifiers import EffectQual, ThreadQual

# ---------------------------------------------------------------------------
# Base types


@dataclass(frozen=True)
class StreamType:
    """An Observable; ``elem_is_var`` marks a class type parameter like T."""

    elem: str
    elem_is_var: bool = False


@dataclass(frozen=True)
class SchedulerType:
    pass


@dataclass(frozen=True)
class CallbackType:
    """One of the built-in callback interfaces (Runnable, Consumer, ...)."""

    interface: str


@dataclass(frozen=True)
class NamedType:
    name: str


@dataclass(frozen=True)
class UnitType:
    pass


@dataclass(frozen=True)
class PrimitiveType:
    name: str  # int | long | boolean | String


@dataclass(frozen=True)
class UnknownType:
    """Type of expressions the checker cannot resolve (lambda params, null)."""


BaseType = Union[
    StreamType, SchedulerType, CallbackType, NamedType, UnitType, PrimitiveType, UnknownType
]

# Names the parser classifies as callback interfaces.
CALLBACK_INTERFACES = frozenset(
    {"Runnable", "Consumer", "Action", "Observer", "Callback", "Function", "Predicate"}
)
PRIMITIVE_NAMES = frozenset({"int", "long", "boolean", "String"})


@dataclass(frozen=True)
class AnnotatedType:
    """A base type plus an optional thread or effect qualifier.

    Thread qualifiers are only legal on Stream/Scheduler bases, effect
    qualifiers only on Callback/Named bases; the parser enforces this.
    """

    base: BaseType
    qualifier: ThreadQual | EffectQual | None = None
    span: Span = field(compare=False, default=BUILTIN_SPAN)

    @property
    def thread(self) -> ThreadQual | None:
        return self.qualifier if isinstance(self.qualifier, ThreadQual) else None

    @property
    def effect(self) -> EffectQual | None:
        return self.qualifier if isinstance(self.qualifier, EffectQual) else None


UNKNOWN = AnnotatedType(UnknownType())


# ---------------------------------------------------------------------------
# Expressions


@dataclass
class Expr:
    span: Span = field(compare=False, default=BUILTIN_SPAN, kw_only=True)


@dataclass
class Literal(Expr):
    value: int | str | bool | None
    kind: str = ""  # int | string | boolean | null

    def __post_init__(self) -> None:
        if not self.kind:
            if self.value is None:
                self.kind = "null"
            elif isinstance(self.value, bool):
                self.kind = "boolean"
            elif isinstance(self.value, int):
                self.kind = "int"
            else:
                self.kind = "string"


@dataclass
class VarRef(Expr):
    name: str


@dataclass
class FieldRef(Expr):
    receiver: "ExprNode"
    name: str


@dataclass
class MethodCall(Expr):
    """``receiver.name(args)``; receiver None means an implicit-this call.

    The span covers the method name through the closing parenthesis, so
    diagnostics for a stage of a fluent chain point at that stage alone.
    """

    receiver: "ExprNode | None"
    name: str
    args: list["ExprNode"]


@dataclass
class Lambda(Expr):
    """Parameters are bare names; the syntax admits no annotations on them."""

    params: list[str]
    body: "ExprNode | list[Stmt]"


@dataclass
class AnonClass(Expr):
    """``new @UI Consumer() { ... }``: an instance with an explicit effect."""

    qualifier: EffectQual | None
    interface: str
    methods: list["MethodDecl"]


@dataclass
class New(Expr):
    class_name: str
    args: list["ExprNode"]


ExprNode = Union[Literal, VarRef, FieldRef, MethodCall, Lambda, AnonClass, New]


# ---------------------------------------------------------------------------
# Statements


@dataclass
class Stmt:
    span: Span = field(compare=False, default=BUILTIN_SPAN, kw_only=True)


@dataclass
class LocalDecl(Stmt):
    declared_type: AnnotatedType
    name: str
    init: ExprNode


@dataclass
class ExprStmt(Stmt):
    expr: ExprNode


@dataclass
class ReturnStmt(Stmt):
    value: ExprNode | None


@dataclass
class IfStmt(Stmt):
    cond: ExprNode
    then_body: list[Stmt]
    else_body: list[Stmt]


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class Param:
    name: str
    declared_type: AnnotatedType
    span: Span = field(compare=False, default=BUILTIN_SPAN)


@dataclass
class MethodDecl:
    """A method; ``body`` is None for abstract/stub signatures.

    ``receiver`` holds the explicit ``this`` parameter when one is written
    (it is required to come first). ``annotations`` keeps the raw effect
    annotations; resolution collapses them into ``effect``.
    """

    name: str
    return_type: AnnotatedType
    params: list[Param]
    receiver: Param | None = None
    annotations: list[EffectQual] = field(default_factory=list)
    effect: EffectQual | None = None
    is_static: bool = False
    body: list[Stmt] | None = None
    span: Span = field(compare=False, default=BUILTIN_SPAN)
    name_span: Span = field(compare=False, default=BUILTIN_SPAN)

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class FieldDecl:
    name: str
    declared_type: AnnotatedType
    span: Span = field(compare=False, default=BUILTIN_SPAN)


# Class-level effect shorthands.
MARK_UI = "ui"
MARK_POLY = "poly"


@dataclass
class ClassDecl:
    name: str
    superclass: str | None = None
    mark: str | None = None  # MARK_UI (@UIType) or MARK_POLY (@PolyUIType)
    type_params: list[str] = field(default_factory=list)
    fields: list[FieldDecl] = field(default_factory=list)
    methods: list[MethodDecl] = field(default_factory=list)
    span: Span = field(compare=False, default=BUILTIN_SPAN)


@dataclass
class PackageDecl:
    name: str
    is_ui_package: bool = False
    classes: list[ClassDecl] = field(default_factory=list)
    span: Span = field(compare=False, default=BUILTIN_SPAN)


@dataclass
class Program:
    packages: list[PackageDecl] = field(default_factory=list)

    def all_classes(self) -> list[tuple[PackageDecl, ClassDecl]]:
        return [(pkg, cls) for pkg in self.packages for cls in pkg.classes]
