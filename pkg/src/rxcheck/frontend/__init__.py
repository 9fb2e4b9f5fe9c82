"""MiniRx frontend: lexer, parser, pretty-printer, and annotation resolution."""

from . import ast
from .lexer import LexError, Token, tokenize
from .parser import ParseResult, StubParseResult, parse_program, parse_stub_file
from .printer import pretty
from .resolve import ResolvedProgram, resolve_annotations

__all__ = [
    "ast",
    "LexError",
    "Token",
    "tokenize",
    "ParseResult",
    "StubParseResult",
    "parse_program",
    "parse_stub_file",
    "pretty",
    "ResolvedProgram",
    "resolve_annotations",
]
