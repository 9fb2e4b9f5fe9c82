"""Annotation resolution: fills in every implicit qualifier and effect.

After resolution no method lacks an effect and no stream or scheduler type
lacks a thread qualifier. The precedence is:

* method effects: explicit annotation, else the class-level shorthand
  (``@UIType``/``@PolyUIType``), else the package-level ``@UIPackage``,
  else ``@SafeEffect``. An explicit ``@SafeEffect`` therefore excludes a
  method from an enclosing blanket annotation.
* stream/scheduler positions: explicit qualifier, else ``@AnyThread``.
* callback-typed positions whose interface is effect-polymorphic: explicit
  qualifier, else the safe instantiation.

Resolution is deterministic and idempotent; it never mutates its input.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

from ..diagnostics import Diagnostic
from ..qualifiers import EffectQual, ThreadQual
from .ast import (
    AnnotatedType,
    AnonClass,
    CallbackType,
    ClassDecl,
    ExprNode,
    ExprStmt,
    FieldRef,
    IfStmt,
    Lambda,
    Literal,
    LocalDecl,
    MethodCall,
    MethodDecl,
    NamedType,
    New,
    PackageDecl,
    Program,
    ReturnStmt,
    SchedulerType,
    Stmt,
    StreamType,
    VarRef,
    MARK_POLY,
    MARK_UI,
)

if TYPE_CHECKING:
    from ..stubs import MethodSig, StubEnv


@dataclass
class ResolvedProgram:
    """A qualifier-complete program plus its lookup tables."""

    program: Program
    stubs: "StubEnv"
    classes: dict[str, ClassDecl]
    superclass: dict[str, str | None]
    sigs: dict[tuple[str, str, int], "MethodSig"]
    field_types: dict[tuple[str, str], AnnotatedType]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def lookup_method(self, owner: str, name: str, arity: int) -> "MethodSig | None":
        """Resolve through the user class chain, then the stub environment."""
        cls: str | None = owner
        while cls is not None:
            sig = self.sigs.get((cls, name, arity))
            if sig is not None:
                return sig
            stub = self.stubs.lookup(cls, name, arity)
            if stub is not None:
                return stub
            cls = self.superclass.get(cls)
        return self.stubs.lookup(owner, name, arity)

    def lookup_field(self, owner: str, name: str) -> AnnotatedType | None:
        cls: str | None = owner
        while cls is not None:
            t = self.field_types.get((cls, name))
            if t is not None:
                return t
            cls = self.superclass.get(cls)
        return None

    def mark_of(self, class_name: str) -> str | None:
        cls = self.classes.get(class_name)
        if cls is not None:
            return cls.mark
        return self.stubs.mark_of(class_name)

    def knows_class(self, name: str) -> bool:
        return name in self.classes or self.stubs.knows_class(name)

    def sam_of(self, interface: str) -> "MethodSig | None":
        cls = self.classes.get(interface)
        if cls is not None:
            abstract = [m for m in cls.methods if m.body is None]
            if len(abstract) == 1 and len(cls.methods) == 1:
                return self.sigs.get((interface, abstract[0].name, abstract[0].arity))
            return None
        return self.stubs.sam_of(interface)


def resolve_annotations(program: Program, stubs: "StubEnv") -> ResolvedProgram:
    """Produce a ResolvedProgram with every implicit qualifier filled in."""
    from ..stubs import MethodSig, default_receiver

    program = copy.deepcopy(program)
    diags: list[Diagnostic] = []
    poly_classes = {name for name, mark in stubs.marks.items() if mark == MARK_POLY}
    for _, cls in program.all_classes():
        if cls.mark == MARK_POLY:
            poly_classes.add(cls.name)

    def fill(t: AnnotatedType) -> AnnotatedType:
        if t.qualifier is not None:
            return t
        if isinstance(t.base, (StreamType, SchedulerType)):
            return replace(t, qualifier=ThreadQual.ANY)
        if isinstance(t.base, CallbackType):
            # The callback interfaces are all effect-polymorphic; an
            # unannotated position takes the safe instantiation.
            return replace(t, qualifier=EffectQual.SAFE)
        if isinstance(t.base, NamedType) and t.base.name in poly_classes:
            return replace(t, qualifier=EffectQual.SAFE)
        return t

    def fill_expr(e: ExprNode) -> None:
        if isinstance(e, MethodCall):
            if e.receiver is not None:
                fill_expr(e.receiver)
            for a in e.args:
                fill_expr(a)
        elif isinstance(e, FieldRef):
            fill_expr(e.receiver)
        elif isinstance(e, Lambda):
            if isinstance(e.body, list):
                fill_stmts(e.body)
            else:
                fill_expr(e.body)
        elif isinstance(e, AnonClass):
            for m in e.methods:
                resolve_method(m, None, False)
        elif isinstance(e, New):
            for a in e.args:
                fill_expr(a)
        elif isinstance(e, (VarRef, Literal)):
            pass

    def fill_stmts(stmts: list[Stmt]) -> None:
        for s in stmts:
            if isinstance(s, LocalDecl):
                s.declared_type = fill(s.declared_type)
                fill_expr(s.init)
            elif isinstance(s, ExprStmt):
                fill_expr(s.expr)
            elif isinstance(s, ReturnStmt):
                if s.value is not None:
                    fill_expr(s.value)
            elif isinstance(s, IfStmt):
                fill_expr(s.cond)
                fill_stmts(s.then_body)
                fill_stmts(s.else_body)

    def resolve_method(m: MethodDecl, cls_mark: str | None, pkg_ui: bool) -> None:
        if len(m.annotations) > 1:
            diags.append(
                Diagnostic(
                    "annot.conflict",
                    m.name_span,
                    f"method '{m.name}' carries more than one effect annotation",
                )
            )
        if m.annotations:
            m.effect = m.annotations[0]
        elif cls_mark == MARK_UI:
            m.effect = EffectQual.UI
        elif cls_mark == MARK_POLY:
            m.effect = EffectQual.POLY
        elif pkg_ui:
            m.effect = EffectQual.UI
        else:
            m.effect = EffectQual.SAFE
        m.return_type = fill(m.return_type)
        if m.receiver is not None:
            m.receiver.declared_type = fill(m.receiver.declared_type)
        for p in m.params:
            p.declared_type = fill(p.declared_type)
        if m.body is not None:
            fill_stmts(m.body)

    classes: dict[str, ClassDecl] = {}
    superclass: dict[str, str | None] = {}
    sigs: dict[tuple[str, str, int], MethodSig] = {}
    field_types: dict[tuple[str, str], AnnotatedType] = {}

    for pkg in program.packages:
        for cls in pkg.classes:
            classes[cls.name] = cls
            superclass[cls.name] = cls.superclass
            for f in cls.fields:
                f.declared_type = fill(f.declared_type)
                field_types[(cls.name, f.name)] = f.declared_type
            for m in cls.methods:
                resolve_method(m, cls.mark, pkg.is_ui_package)
                receiver = (
                    m.receiver.declared_type
                    if m.receiver is not None
                    else default_receiver(cls.name, cls.mark, cls.type_params, m.is_static)
                )
                sig = MethodSig(
                    owner=cls.name,
                    name=m.name,
                    effect=m.effect,
                    receiver=receiver,
                    params=tuple(p.declared_type for p in m.params),
                    ret=m.return_type,
                    is_static=m.is_static,
                    owner_mark=cls.mark,
                    span=m.name_span,
                )
                sigs.setdefault(sig.key, sig)

    return ResolvedProgram(
        program=program,
        stubs=stubs,
        classes=classes,
        superclass=superclass,
        sigs=sigs,
        field_types=field_types,
        diagnostics=diags,
    )
