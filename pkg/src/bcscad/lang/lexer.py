"""Tokenizer for BCS source.

Operates on the UTF-8 byte encoding so token spans are byte-exact.
Comments and whitespace are skipped (they live in the gaps between node
spans); unterminated block comments and stray bytes become diagnostics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .source import LineIndex, SourceSpan

# Token kinds
NUMBER = "number"
IDENT = "ident"
KEYWORD = "keyword"
PUNCT = "punct"
EOF = "eof"

KEYWORDS = {"module", "for", "if", "else", "true", "false"}

_TOKEN_RE = re.compile(
    rb"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<block_comment_open>/\*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_]*)
  | (?P<punct><=|>=|==|!=|&&|\|\||[\[\]{}(),;:=+\-*/%<>!])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


class LexError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span


def tokenize(source: str, index: LineIndex | None = None) -> list[Token]:
    """Tokenize source, returning a Token list ending with an EOF token.

    Raises LexError on the first unrecognized byte or unterminated block
    comment. The EOF token has a zero-width span at end of input.
    """
    index = index or LineIndex(source)
    data = index.data
    tokens: list[Token] = []
    pos = 0
    n = len(data)
    while pos < n:
        m = _TOKEN_RE.match(data, pos)
        if m is None:
            span = index.span(pos, min(pos + 1, n))
            raise LexError(f"unexpected character {data[pos:pos + 1]!r}", span)
        kind = m.lastgroup
        if kind == "block_comment_open":
            # Anchor at end of input, never zero-width.
            span = index.span(max(0, n - 1), n)
            raise LexError("unterminated block comment", span)
        if kind in ("ws", "line_comment", "block_comment"):
            pos = m.end()
            continue
        text = m.group().decode("utf-8")
        if kind == "ident" and text in KEYWORDS:
            kind = KEYWORD
        tokens.append(Token(kind, text, m.start(), m.end()))
        pos = m.end()
    tokens.append(Token(EOF, "", n, n))
    return tokens
