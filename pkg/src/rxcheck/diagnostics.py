"""Checker diagnostics: source spans, error codes, and output formats."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Iterable

# The stable catalog of diagnostic codes. Tools that consume checker output
# may rely on these strings never changing.
CODES = frozenset(
    {
        "parse.error",
        "parse.duplicate",
        "stub.parse.error",
        "stub.conflict",
        "annot.conflict",
        "resolve.unknown.method",
        "type.argument",
        "type.poly.unbound",
        "infer.unknown.interface",
        "effect.transitivity",
        "effect.inheritance",
        "effect.poly.receiver",
        "rx.thread.violation",
    }
)


@dataclass(frozen=True)
class Span:
    """Half-open source range: 1-based line/col, end column exclusive."""

    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def sort_key(self) -> tuple:
        return (self.file, self.line, self.col, self.end_line, self.end_col)


# Synthetic span for signatures constructed in code rather than parsed.
BUILTIN_SPAN = Span("<builtin>", 1, 1, 1, 1)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    span: Span
    message: str
    related: tuple[Span, ...] = ()

    def __post_init__(self) -> None:
        if self.code not in CODES:
            raise ValueError(f"unknown diagnostic code: {self.code}")

    def text_line(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.col}: error: [{self.code}] {self.message}"

    def to_json_obj(self) -> dict[str, Any]:
        s = self.span
        return {
            "code": self.code,
            "file": s.file,
            "line": s.line,
            "col": s.col,
            "endLine": s.end_line,
            "endCol": s.end_col,
            "message": self.message,
            "related": [
                {
                    "file": r.file,
                    "line": r.line,
                    "col": r.col,
                    "endLine": r.end_line,
                    "endCol": r.end_col,
                }
                for r in self.related
            ],
        }


def _span_from_json(obj: dict[str, Any]) -> Span:
    return Span(obj["file"], obj["line"], obj["col"], obj["endLine"], obj["endCol"])


def diagnostic_from_json_obj(obj: dict[str, Any]) -> Diagnostic:
    return Diagnostic(
        code=obj["code"],
        span=_span_from_json(obj),
        message=obj["message"],
        related=tuple(_span_from_json(r) for r in obj.get("related", [])),
    )


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    """Deterministic order: file path, start position, then code."""
    return sorted(diags, key=lambda d: (d.span.file, d.span.line, d.span.col, d.code))


def render_text(diags: Iterable[Diagnostic]) -> str:
    return "".join(d.text_line() + "\n" for d in diags)


def render_json(diags: Iterable[Diagnostic]) -> str:
    return json.dumps([d.to_json_obj() for d in diags]) + "\n"


def parse_json(text: str) -> list[Diagnostic]:
    return [diagnostic_from_json_obj(o) for o in json.loads(text)]


def with_file(diag: Diagnostic, file: str) -> Diagnostic:
    return replace(diag, span=replace(diag.span, file=file))


__all__ = [
    "CODES",
    "Span",
    "BUILTIN_SPAN",
    "Diagnostic",
    "sort_diagnostics",
    "render_text",
    "render_json",
    "parse_json",
    "diagnostic_from_json_obj",
    "with_file",
]
