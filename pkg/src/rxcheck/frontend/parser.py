"""Recursive-descent parser for MiniRx programs and annotation stub files.

Program files (``.mrx``) contain package declarations; stub files
(``.astub``) contain bare class declarations whose methods are signatures
ending in ``;``. Both share the same expression-free declaration syntax; the
``mode`` flag controls the differences (``@BottomThread`` and bodiless
methods are stub-only, bodies are program-only).

On any error the parser records a diagnostic and resynchronizes at the next
statement or member boundary, so several errors can be reported per run; a
run with errors yields no (partial) AST.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import Diagnostic, Span, sort_diagnostics
from ..qualifiers import EffectQual, ThreadQual
from .ast import (
    CALLBACK_INTERFACES,
    PRIMITIVE_NAMES,
    AnnotatedType,
    AnonClass,
    CallbackType,
    ClassDecl,
    ExprNode,
    ExprStmt,
    FieldDecl,
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
    Param,
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
from .lexer import LexError, Token, tokenize

EFFECT_ANNOTATIONS = {
    "@UIEffect": EffectQual.UI,
    "@SafeEffect": EffectQual.SAFE,
    "@PolyUIEffect": EffectQual.POLY,
}

THREAD_ANNOTATIONS = {
    "@UIThread": ThreadQual.UI,
    "@CompThread": ThreadQual.COMP,
    "@AnyThread": ThreadQual.ANY,
    "@BottomThread": ThreadQual.BOTTOM,
    "@PolyThread": ThreadQual.POLY,
}

# Instance-level effect shorthands usable in type positions (``@UI Runnable``).
TYPE_USE_EFFECTS = {"@UI": EffectQual.UI, "@PolyUI": EffectQual.POLY}

CLASS_MARKS = {"@UIType": MARK_UI, "@PolyUIType": MARK_POLY}


class _Bail(Exception):
    """Internal: unwind to the nearest recovery point after a parse error."""


@dataclass
class ParseResult:
    program: Program | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


@dataclass
class StubParseResult:
    sigs: list  # list[MethodSig]; typed loosely to avoid a circular import
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


@dataclass
class _Scope:
    names: set[str] = field(default_factory=set)
    lambda_boundary: bool = False


class _Parser:
    def __init__(self, tokens: list[Token], file: str, mode: str):
        self.tokens = tokens
        self.file = file
        self.mode = mode  # "program" | "stub"
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.scopes: list[_Scope] = []
        self.type_params: list[str] = []

    # -- token helpers ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def take(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None, what: str = "") -> Token:
        if self.at(kind, text):
            return self.take()
        wanted = what or (text if text else kind)
        got = self.peek().text or "end of file"
        self.error(f"expected {wanted!r}, found {got!r}", self.peek())
        raise _Bail()

    def span_of(self, tok: Token) -> Span:
        return tok.span(self.file)

    def span_between(self, start: Token, end: Token) -> Span:
        return Span(self.file, start.line, start.col, end.line, end.col + len(end.text))

    def last(self) -> Token:
        return self.tokens[max(self.pos - 1, 0)]

    # -- diagnostics -------------------------------------------------------

    def error(self, message: str, tok: Token, code: str = "") -> None:
        code = code or ("stub.parse.error" if self.mode == "stub" else "parse.error")
        self.diags.append(Diagnostic(code, self.span_of(tok), message))

    def duplicate(self, message: str, tok: Token) -> None:
        code = "stub.parse.error" if self.mode == "stub" else "parse.duplicate"
        self.diags.append(Diagnostic(code, self.span_of(tok), message))

    def sync(self, stop: tuple[str, ...] = (";", "}")) -> None:
        depth = 0
        while not self.at("eof"):
            t = self.peek()
            if t.kind == "punct":
                if t.text == "{":
                    depth += 1
                elif t.text == "}" and depth > 0:
                    depth -= 1
                elif depth == 0 and t.text in stop:
                    if t.text == ";":
                        self.take()
                    return
            self.take()

    # -- scopes for duplicate-local detection ------------------------------

    def push_scope(self, lambda_boundary: bool = False) -> None:
        self.scopes.append(_Scope(lambda_boundary=lambda_boundary))

    def pop_scope(self) -> None:
        self.scopes.pop()

    def declare(self, name: str, tok: Token) -> None:
        for scope in reversed(self.scopes):
            if name in scope.names:
                self.duplicate(f"'{name}' is already declared in this scope", tok)
                return
            if scope.lambda_boundary:
                break
        self.scopes[-1].names.add(name)

    # -- annotations --------------------------------------------------------

    def take_annotations(self) -> list[Token]:
        anns = []
        while self.at("annotation"):
            anns.append(self.take())
        return anns

    def type_use_qualifier(self, tok: Token) -> ThreadQual | EffectQual | None:
        name = tok.text
        if name in THREAD_ANNOTATIONS:
            qual = THREAD_ANNOTATIONS[name]
            if qual is ThreadQual.BOTTOM and self.mode == "program":
                self.error(
                    "@BottomThread may not be written in source programs; "
                    "it is reserved for stub files",
                    tok,
                )
                raise _Bail()
            return qual
        if name in TYPE_USE_EFFECTS:
            return TYPE_USE_EFFECTS[name]
        self.error(f"annotation {name} is not a type qualifier", tok)
        raise _Bail()

    # -- types ---------------------------------------------------------------

    def parse_annotated_type(self) -> AnnotatedType:
        qual: ThreadQual | EffectQual | None = None
        qual_tok: Token | None = None
        if self.at("annotation"):
            qual_tok = self.take()
            qual = self.type_use_qualifier(qual_tok)
        start = self.peek()
        base = self.parse_base_type()
        span = self.span_between(qual_tok or start, self.last())
        if qual is not None:
            if isinstance(qual, ThreadQual) and not isinstance(
                base, (StreamType, SchedulerType)
            ):
                self.error(
                    f"thread qualifier {qual} only applies to Observable or Scheduler types",
                    qual_tok,
                )
                raise _Bail()
            if isinstance(qual, EffectQual) and not isinstance(
                base, (CallbackType, NamedType)
            ):
                self.error(
                    f"effect qualifier {qual_tok.text} only applies to callback or class types",
                    qual_tok,
                )
                raise _Bail()
        return AnnotatedType(base, qual, span)

    def parse_base_type(self):
        if self.at("keyword", "void"):
            self.take()
            return UnitType()
        tok = self.expect("ident", what="a type name")
        name = tok.text
        if name == "Observable":
            self.expect("punct", "<")
            elem = self.expect("ident", what="an element type").text
            self.expect("punct", ">")
            return StreamType(elem, elem_is_var=elem in self.type_params)
        if self.at("punct", "<"):
            self.error(f"only Observable takes a type argument, not {name!r}", self.peek())
            raise _Bail()
        if name == "Scheduler":
            return SchedulerType()
        if name in PRIMITIVE_NAMES:
            return PrimitiveType(name)
        if name in CALLBACK_INTERFACES:
            return CallbackType(name)
        return NamedType(name)

    # -- program structure ----------------------------------------------------

    def parse_program_file(self) -> list[PackageDecl]:
        packages = []
        while not self.at("eof"):
            try:
                packages.append(self.parse_package())
            except _Bail:
                self.sync(stop=("}",))
                if self.at("punct", "}"):
                    self.take()
        return packages

    def parse_package(self) -> PackageDecl:
        anns = self.take_annotations()
        is_ui = False
        for a in anns:
            if a.text == "@UIPackage":
                is_ui = True
            else:
                self.error(f"annotation {a.text} is not valid on a package", a)
        start = anns[0] if anns else self.peek()
        self.expect("keyword", "package")
        name_parts = [self.expect("ident", what="a package name").text]
        while self.at("punct", "."):
            self.take()
            name_parts.append(self.expect("ident", what="a package name part").text)
        self.expect("punct", "{")
        classes = []
        while not self.at("punct", "}") and not self.at("eof"):
            try:
                classes.append(self.parse_class())
            except _Bail:
                self.sync()
        end = self.expect("punct", "}")
        return PackageDecl(
            ".".join(name_parts), is_ui, classes, self.span_between(start, end)
        )

    def parse_class(self) -> ClassDecl:
        anns = self.take_annotations()
        mark: str | None = None
        mark_count = 0
        for a in anns:
            if a.text in CLASS_MARKS:
                mark_count += 1
                if mark_count == 1:
                    mark = CLASS_MARKS[a.text]
                else:
                    # Keep parsing; resolution reports the conflict with full context.
                    mark = CLASS_MARKS[a.text]
            else:
                self.error(f"annotation {a.text} is not valid on a class", a)
        start = anns[0] if anns else self.peek()
        if self.at("keyword", "class") or self.at("keyword", "interface"):
            self.take()
        else:
            self.error("expected 'class' or 'interface'", self.peek())
            raise _Bail()
        name_tok = self.expect("ident", what="a class name")
        type_params: list[str] = []
        if self.at("punct", "<"):
            self.take()
            type_params.append(self.expect("ident", what="a type parameter").text)
            self.expect("punct", ">")
        superclass = None
        if self.at("keyword", "extends"):
            self.take()
            superclass = self.expect("ident", what="a superclass name").text
        self.expect("punct", "{")
        old_params = self.type_params
        self.type_params = type_params
        fields: list[FieldDecl] = []
        methods: list[MethodDecl] = []
        seen_methods: set[str] = set()
        seen_fields: set[str] = set()
        while not self.at("punct", "}") and not self.at("eof"):
            try:
                member = self.parse_member()
            except _Bail:
                self.sync()
                continue
            if isinstance(member, FieldDecl):
                if member.name in seen_fields:
                    self.duplicate(f"duplicate field '{member.name}'", name_tok)
                seen_fields.add(member.name)
                fields.append(member)
            else:
                if self.mode == "program":
                    if member.name in seen_methods:
                        self.diags.append(
                            Diagnostic(
                                "parse.duplicate",
                                member.name_span,
                                f"duplicate method '{member.name}' in class '{name_tok.text}'",
                            )
                        )
                    seen_methods.add(member.name)
                methods.append(member)
        end = self.expect("punct", "}")
        self.type_params = old_params
        decl = ClassDecl(
            name_tok.text,
            superclass,
            mark,
            type_params,
            fields,
            methods,
            self.span_between(start, end),
        )
        if mark_count > 1:
            self.diags.append(
                Diagnostic(
                    "annot.conflict",
                    self.span_of(name_tok),
                    f"class '{decl.name}' carries more than one class-level effect annotation",
                )
            )
        return decl

    def parse_member(self) -> FieldDecl | MethodDecl:
        # Leading annotations mix method-level effects (@SafeEffect ...) with
        # the member type's own qualifier (@CompThread Observable<T> ...).
        start_tok = self.peek()
        effect_anns: list[EffectQual] = []
        type_qual_tok: Token | None = None
        while self.at("annotation"):
            a = self.peek()
            if a.text in EFFECT_ANNOTATIONS:
                effect_anns.append(EFFECT_ANNOTATIONS[self.take().text])
            elif a.text in THREAD_ANNOTATIONS or a.text in TYPE_USE_EFFECTS:
                break  # belongs to the type
            else:
                self.error(f"annotation {a.text} is not valid on a member", self.take())

        is_static = False
        if self.at("keyword", "static"):
            self.take()
            is_static = True

        declared = self.parse_annotated_type()
        name_tok = self.expect("ident", what="a member name")

        if self.at("punct", "("):
            return self.parse_method_rest(
                effect_anns, declared, name_tok, is_static, start_tok
            )
        # Field declaration.
        if effect_anns:
            self.error("method effect annotations are not valid on a field", name_tok)
            raise _Bail()
        if is_static:
            self.error("fields may not be static", name_tok)
            raise _Bail()
        end = self.expect("punct", ";")
        return FieldDecl(name_tok.text, declared, self.span_between(start_tok, end))

    def parse_method_rest(
        self,
        effect_anns: list[EffectQual],
        return_type: AnnotatedType,
        name_tok: Token,
        is_static: bool,
        start_tok: Token,
    ) -> MethodDecl:
        self.expect("punct", "(")
        params: list[Param] = []
        receiver: Param | None = None
        seen: set[str] = set()
        first = True
        while not self.at("punct", ")"):
            if not first:
                self.expect("punct", ",")
            first = False
            ptype = self.parse_annotated_type()
            ptok = self.expect("ident", what="a parameter name")
            if ptok.text == "this":
                if params or receiver is not None:
                    self.error("'this' must be the first parameter", ptok)
                    raise _Bail()
                receiver = Param("this", ptype, self.span_of(ptok))
                continue
            if ptok.text in seen:
                self.duplicate(f"duplicate parameter '{ptok.text}'", ptok)
            seen.add(ptok.text)
            params.append(Param(ptok.text, ptype, self.span_of(ptok)))
        self.expect("punct", ")")

        body: list[Stmt] | None = None
        if self.at("punct", ";"):
            self.take()  # abstract or stub signature
        elif self.at("punct", "{"):
            if self.mode == "stub":
                self.error("stub methods are signatures and may not have bodies", self.peek())
                raise _Bail()
            self.push_scope()
            for p in params:
                self.scopes[-1].names.add(p.name)
            body = self.parse_block()
            self.pop_scope()
        else:
            self.error("expected ';' or a method body", self.peek())
            raise _Bail()

        return MethodDecl(
            name=name_tok.text,
            return_type=return_type,
            params=params,
            receiver=receiver,
            annotations=effect_anns,
            effect=None,
            is_static=is_static,
            body=body,
            span=self.span_between(start_tok, self.last()),
            name_span=self.span_of(name_tok),
        )

    # -- statements -------------------------------------------------------------

    def parse_block(self) -> list[Stmt]:
        self.expect("punct", "{")
        stmts: list[Stmt] = []
        while not self.at("punct", "}") and not self.at("eof"):
            try:
                stmts.append(self.parse_stmt())
            except _Bail:
                self.sync()
        self.expect("punct", "}")
        return stmts

    def parse_stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "keyword" and t.text == "return":
            start = self.take()
            value = None
            if not self.at("punct", ";"):
                value = self.parse_expr()
            end = self.expect("punct", ";")
            return ReturnStmt(value, span=self.span_between(start, end))
        if t.kind == "keyword" and t.text == "if":
            return self.parse_if()
        if self.looks_like_local_decl():
            return self.parse_local_decl()
        start = self.peek()
        expr = self.parse_expr()
        end = self.expect("punct", ";")
        return ExprStmt(expr, span=self.span_between(start, end))

    def looks_like_local_decl(self) -> bool:
        t = self.peek()
        if t.kind == "annotation":
            return True
        if t.kind == "keyword":
            return False
        if t.kind != "ident":
            return False
        nxt = self.peek(1)
        if nxt.kind == "ident":
            return True
        return nxt.kind == "punct" and nxt.text == "<"

    def parse_local_decl(self) -> LocalDecl:
        start = self.peek()
        declared = self.parse_annotated_type()
        name_tok = self.expect("ident", what="a variable name")
        self.declare(name_tok.text, name_tok)
        self.expect("punct", "=", what="'=' (locals require an initializer)")
        init = self.parse_expr()
        end = self.expect("punct", ";")
        return LocalDecl(declared, name_tok.text, init, span=self.span_between(start, end))

    def parse_if(self) -> IfStmt:
        start = self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        self.push_scope()
        then_body = self.parse_block()
        self.pop_scope()
        else_body: list[Stmt] = []
        if self.at("keyword", "else"):
            self.take()
            self.push_scope()
            if self.at("keyword", "if"):
                else_body = [self.parse_if()]
            else:
                else_body = self.parse_block()
            self.pop_scope()
        return IfStmt(cond, then_body, else_body, span=self.span_between(start, self.last()))

    # -- expressions ---------------------------------------------------------------

    def parse_expr(self) -> ExprNode:
        expr = self.parse_primary()
        while self.at("punct", "."):
            self.take()
            name_tok = self.expect("ident", what="a member name")
            if self.at("punct", "("):
                args, end = self.parse_args()
                expr = MethodCall(
                    expr, name_tok.text, args, span=self.span_between(name_tok, end)
                )
            else:
                expr = FieldRef(
                    expr, name_tok.text, span=self.span_between(name_tok, self.last())
                )
        return expr

    def parse_args(self) -> tuple[list[ExprNode], Token]:
        self.expect("punct", "(")
        args: list[ExprNode] = []
        while not self.at("punct", ")"):
            if args:
                self.expect("punct", ",")
            args.append(self.parse_expr())
        end = self.expect("punct", ")")
        return args, end

    def parse_primary(self) -> ExprNode:
        t = self.peek()
        if t.kind == "int":
            self.take()
            return Literal(int(t.text), span=self.span_of(t))
        if t.kind == "string":
            self.take()
            return Literal(t.text[1:-1], span=self.span_of(t))
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.take()
            return Literal(t.text == "true", span=self.span_of(t))
        if t.kind == "keyword" and t.text == "null":
            self.take()
            return Literal(None, span=self.span_of(t))
        if t.kind == "keyword" and t.text == "new":
            return self.parse_new()
        if t.kind == "punct" and t.text == "(":
            if self.is_paren_lambda():
                return self.parse_lambda_parenthesized()
            self.take()
            inner = self.parse_expr()
            self.expect("punct", ")")
            return inner
        if t.kind == "ident":
            nxt = self.peek(1)
            if nxt.kind == "punct" and nxt.text == "->":
                start = self.take()
                self.take()  # ->
                body = self.parse_lambda_body()
                return Lambda([start.text], body, span=self.span_between(start, self.last()))
            if nxt.kind == "punct" and nxt.text == "(":
                name_tok = self.take()
                args, end = self.parse_args()
                return MethodCall(
                    None, name_tok.text, args, span=self.span_between(name_tok, end)
                )
            self.take()
            return VarRef(t.text, span=self.span_of(t))
        self.error(f"expected an expression, found {t.text or 'end of file'!r}", t)
        raise _Bail()

    def is_paren_lambda(self) -> bool:
        i = 1
        if self.peek(i).kind == "punct" and self.peek(i).text == ")":
            nxt = self.peek(i + 1)
            return nxt.kind == "punct" and nxt.text == "->"
        while True:
            if self.peek(i).kind != "ident":
                return False
            i += 1
            t = self.peek(i)
            if t.kind == "punct" and t.text == ",":
                i += 1
                continue
            if t.kind == "punct" and t.text == ")":
                nxt = self.peek(i + 1)
                return nxt.kind == "punct" and nxt.text == "->"
            return False

    def parse_lambda_parenthesized(self) -> Lambda:
        start = self.expect("punct", "(")
        params: list[str] = []
        while not self.at("punct", ")"):
            if params:
                self.expect("punct", ",")
            params.append(self.expect("ident", what="a lambda parameter").text)
        self.expect("punct", ")")
        self.expect("punct", "->")
        body = self.parse_lambda_body()
        return Lambda(params, body, span=self.span_between(start, self.last()))

    def parse_lambda_body(self) -> ExprNode | list[Stmt]:
        if self.at("punct", "{"):
            self.push_scope(lambda_boundary=True)
            body = self.parse_block()
            self.pop_scope()
            return body
        return self.parse_expr()

    def parse_new(self) -> ExprNode:
        start = self.expect("keyword", "new")
        qual: EffectQual | None = None
        if self.at("annotation"):
            a = self.take()
            if a.text in TYPE_USE_EFFECTS:
                qual = TYPE_USE_EFFECTS[a.text]
            else:
                self.error(
                    f"annotation {a.text} is not valid on an instance creation", a
                )
                raise _Bail()
        name_tok = self.expect("ident", what="a class name")
        args, end = self.parse_args()
        if self.at("punct", "{"):
            self.take()
            methods: list[MethodDecl] = []
            while not self.at("punct", "}") and not self.at("eof"):
                member = self.parse_member()
                if not isinstance(member, MethodDecl):
                    self.error("anonymous classes may only declare methods", name_tok)
                    raise _Bail()
                methods.append(member)
            end = self.expect("punct", "}")
            return AnonClass(
                qual, name_tok.text, methods, span=self.span_between(start, end)
            )
        if qual is not None:
            return AnonClass(qual, name_tok.text, [], span=self.span_between(start, end))
        return New(name_tok.text, args, span=self.span_between(start, end))

    # -- stub files -------------------------------------------------------------------

    def parse_stub_classes(self) -> list[ClassDecl]:
        classes = []
        while not self.at("eof"):
            try:
                classes.append(self.parse_class())
            except _Bail:
                self.sync(stop=("}",))
                if self.at("punct", "}"):
                    self.take()
        return classes


def parse_program(sources: list[tuple[str, str]]) -> ParseResult:
    """Parse one or more ``.mrx`` files into a single Program.

    Class names share one global scope (MiniRx has no qualified names), so a
    name collision anywhere in the input is a ``parse.duplicate``. Any error
    means no Program is returned at all.
    """
    diags: list[Diagnostic] = []
    packages: list[PackageDecl] = []
    for path, text in sources:
        try:
            tokens = tokenize(text)
        except LexError as e:
            diags.append(
                Diagnostic(
                    "parse.error", Span(path, e.line, e.col, e.line, e.col + 1), e.message
                )
            )
            continue
        p = _Parser(tokens, path, mode="program")
        packages.extend(p.parse_program_file())
        diags.extend(p.diags)

    seen: dict[str, Span] = {}
    for pkg in packages:
        for cls in pkg.classes:
            if cls.name in seen:
                diags.append(
                    Diagnostic(
                        "parse.duplicate",
                        cls.span,
                        f"duplicate class '{cls.name}'",
                        related=(seen[cls.name],),
                    )
                )
            else:
                seen[cls.name] = cls.span

    if diags:
        return ParseResult(None, sort_diagnostics(diags))
    return ParseResult(Program(packages), [])


def parse_stub_file(text: str, path: str = "<stub>") -> StubParseResult:
    """Parse a ``.astub`` file into trusted method signatures.

    Signatures are normalized on the way out: explicit effect annotations
    win, otherwise the class-level mark applies, otherwise methods are safe;
    unqualified stream/scheduler positions become ``@AnyThread`` and
    unqualified callback positions take the safe instantiation.
    """
    from ..stubs import sigs_from_class_decls, validate_sigs

    try:
        tokens = tokenize(text)
    except LexError as e:
        return StubParseResult(
            [],
            [
                Diagnostic(
                    "stub.parse.error",
                    Span(path, e.line, e.col, e.line, e.col + 1),
                    e.message,
                )
            ],
        )
    p = _Parser(tokens, path, mode="stub")
    classes = p.parse_stub_classes()
    if p.diags:
        return StubParseResult([], sort_diagnostics(p.diags))
    sigs, diags = sigs_from_class_decls(classes)
    diags.extend(validate_sigs(sigs))
    return StubParseResult(sigs if not diags else [], sort_diagnostics(diags))
