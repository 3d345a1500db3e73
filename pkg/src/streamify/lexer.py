"""Tokenizer for MiniJ source text."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MiniJSyntaxError

KEYWORDS = {
    "void", "int", "if", "else", "while", "for",
    "break", "continue", "return", "new",
}

# Longest match first.
PUNCT = [
    "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "++", "--",
    "(", ")", "{", "}", ";", ",", ".", "<", ">", "+", "-", "*", "/", "%",
    "!", "=", ":",
]


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "kw" | punctuation text | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                advance(1)
            continue
        if source.startswith("/*", i):
            start_line, start_col = line, col
            advance(2)
            while i < n and not source.startswith("*/", i):
                advance(1)
            if i >= n:
                raise MiniJSyntaxError("unterminated comment", start_line, start_col)
            advance(2)
            continue
        if c.isdigit():
            start_line, start_col = line, col
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            advance(j - i)
            toks.append(Token("int", text, start_line, start_col))
            continue
        if c.isalpha() or c == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            advance(j - i)
            kind = "kw" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, start_line, start_col))
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                toks.append(Token(p, p, line, col))
                advance(len(p))
                break
        else:
            raise MiniJSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks
