"""Tokenizer for MiniRx source and stub files."""

from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import Span

KEYWORDS = frozenset(
    {
        "package",
        "class",
        "interface",
        "extends",
        "new",
        "return",
        "if",
        "else",
        "true",
        "false",
        "null",
        "static",
        "void",
    }
)

PUNCT = ("->", "{", "}", "(", ")", "<", ">", ",", ";", ".", "=")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | annotation | int | string | punct | eof
    text: str
    line: int
    col: int

    def span(self, file: str) -> Span:
        return Span(file, self.line, self.col, self.line, self.col + len(self.text))


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            advance((j if j != -1 else n) - i)
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j == -1:
                raise LexError("unterminated block comment", line, col)
            advance(j + 2 - i)
            continue
        start_line, start_col = line, col
        if c == "@":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise LexError("'@' must introduce an annotation name", line, col)
            tokens.append(Token("annotation", text[i:j], start_line, start_col))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, start_line, start_col))
            advance(j - i)
            continue
        if c.isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], start_line, start_col))
            advance(j - i)
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise LexError("unterminated string literal", line, col)
            tokens.append(Token("string", text[i : j + 1], start_line, start_col))
            advance(j + 1 - i)
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, start_line, start_col))
                advance(len(p))
                break
        else:
            raise LexError(f"unexpected character {c!r}", line, col)

    tokens.append(Token("eof", "", line, col))
    return tokens
