"""Canonical source rendering of a Program.

``parse(pretty(p))`` reproduces ``p`` up to spans; tests rely on this
round-trip to validate both the parser and the generated-program corpus.
"""

from __future__ import annotations

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
    PrimitiveType,
    Program,
    ReturnStmt,
    SchedulerType,
    Stmt,
    StreamType,
    UnitType,
    VarRef,
    MARK_POLY,
    MARK_UI,
)

_TYPE_USE_EFFECT = {EffectQual.UI: "@UI", EffectQual.POLY: "@PolyUI"}


def type_str(t: AnnotatedType) -> str:
    base = t.base
    if isinstance(base, StreamType):
        text = f"Observable<{base.elem}>"
    elif isinstance(base, SchedulerType):
        text = "Scheduler"
    elif isinstance(base, CallbackType):
        text = base.interface
    elif isinstance(base, NamedType):
        text = base.name
    elif isinstance(base, UnitType):
        text = "void"
    elif isinstance(base, PrimitiveType):
        text = base.name
    else:
        text = "<unknown>"
    if t.qualifier is None:
        return text
    if isinstance(t.qualifier, ThreadQual):
        return f"{t.qualifier.spelling} {text}"
    return f"{_TYPE_USE_EFFECT[t.qualifier]} {text}"


def expr_str(e: ExprNode) -> str:
    if isinstance(e, Literal):
        if e.kind == "string":
            return f'"{e.value}"'
        if e.kind == "boolean":
            return "true" if e.value else "false"
        if e.kind == "null":
            return "null"
        return str(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, FieldRef):
        return f"{expr_str(e.receiver)}.{e.name}"
    if isinstance(e, MethodCall):
        args = ", ".join(expr_str(a) for a in e.args)
        if e.receiver is None:
            return f"{e.name}({args})"
        return f"{expr_str(e.receiver)}.{e.name}({args})"
    if isinstance(e, Lambda):
        params = e.params[0] if len(e.params) == 1 else "(" + ", ".join(e.params) + ")"
        if isinstance(e.body, list):
            inner = " ".join(_stmt_str(s) for s in e.body)
            return f"{params} -> {{ {inner} }}"
        return f"{params} -> {expr_str(e.body)}"
    if isinstance(e, AnonClass):
        qual = f"{_TYPE_USE_EFFECT[e.qualifier]} " if e.qualifier else ""
        if not e.methods:
            return f"new {qual}{e.interface}()"
        body = " ".join(_method_header(m) + " " + _block_str(m.body or []) for m in e.methods)
        return f"new {qual}{e.interface}() {{ {body} }}"
    if isinstance(e, New):
        args = ", ".join(expr_str(a) for a in e.args)
        return f"new {e.class_name}({args})"
    raise TypeError(f"unhandled expression {e!r}")


def _stmt_str(s: Stmt) -> str:
    if isinstance(s, LocalDecl):
        return f"{type_str(s.declared_type)} {s.name} = {expr_str(s.init)};"
    if isinstance(s, ExprStmt):
        return f"{expr_str(s.expr)};"
    if isinstance(s, ReturnStmt):
        return "return;" if s.value is None else f"return {expr_str(s.value)};"
    if isinstance(s, IfStmt):
        text = f"if ({expr_str(s.cond)}) {_block_str(s.then_body)}"
        if s.else_body:
            text += f" else {_block_str(s.else_body)}"
        return text
    raise TypeError(f"unhandled statement {s!r}")


def _block_str(stmts: list[Stmt]) -> str:
    if not stmts:
        return "{ }"
    return "{ " + " ".join(_stmt_str(s) for s in stmts) + " }"


def _method_header(m: MethodDecl) -> str:
    parts = [a.spelling for a in m.annotations]
    if m.is_static:
        parts.append("static")
    parts.append(type_str(m.return_type))
    params = []
    if m.receiver is not None:
        params.append(f"{type_str(m.receiver.declared_type)} this")
    params.extend(f"{type_str(p.declared_type)} {p.name}" for p in m.params)
    parts.append(f"{m.name}({', '.join(params)})")
    return " ".join(parts)


def _emit_method(m: MethodDecl, out: list[str], indent: str) -> None:
    header = indent + _method_header(m)
    if m.body is None:
        out.append(header + ";")
        return
    out.append(header + " {")
    for s in m.body:
        out.append(indent + "  " + _stmt_str(s))
    out.append(indent + "}")


def _emit_class(cls: ClassDecl, out: list[str], indent: str) -> None:
    head = indent
    if cls.mark == MARK_UI:
        head += "@UIType "
    elif cls.mark == MARK_POLY:
        head += "@PolyUIType "
    head += f"class {cls.name}"
    if cls.type_params:
        head += f"<{', '.join(cls.type_params)}>"
    if cls.superclass:
        head += f" extends {cls.superclass}"
    out.append(head + " {")
    for f in cls.fields:
        out.append(f"{indent}  {type_str(f.declared_type)} {f.name};")
    for m in cls.methods:
        _emit_method(m, out, indent + "  ")
    out.append(indent + "}")


def pretty(program: Program) -> str:
    """Render a Program as canonical MiniRx source."""
    out: list[str] = []
    for pkg in program.packages:
        head = "@UIPackage " if pkg.is_ui_package else ""
        out.append(f"{head}package {pkg.name} {{")
        for cls in pkg.classes:
            _emit_class(cls, out, "  ")
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")
