"""Tokenizer for the Verilog subset.

Comments and whitespace are dropped. ``timescale`` directive lines are stripped; any
other compiler directive is passed through as a ``directive`` token so the
parser can reject it with a precise diagnostic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .ast import Span
from .errors import LexError

KEYWORD = "keyword"
IDENTIFIER = "identifier"
SIZED_LITERAL = "sized-literal"
UNSIZED_LITERAL = "unsized-literal"
OPERATOR = "operator"
PUNCTUATION = "punctuation"
STRING = "string"
DIRECTIVE = "directive"

KEYWORDS = frozenset(
    """
    module endmodule macromodule input output inout wire reg parameter localparam
    assign always begin end if else case casez casex endcase default posedge
    negedge or and nand nor xor xnor not buf signed integer real time realtime
    initial generate endgenerate genvar function endfunction task endtask for
    while repeat forever fork join wait event supply0 supply1 tri specify
    endspecify defparam always_ff always_comb always_latch logic
    """.split()
)

# Longest operators first so that maximal munch falls out of alternation order.
OPERATORS = (
    "<<<", ">>>", "===", "!==",
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "~&", "~|", "~^", "^~", "**", "+:", "-:",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "?", "=",
)
PUNCT = "()[]{};:,.@#"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*(?s:.*?)\*/)
  | (?P<open_comment>/\*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<open_string>")
  | (?P<timescale>`timescale[^\n]*)
  | (?P<directive>`[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<sized>[0-9][0-9_]*\s*'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+)
  | (?P<based>'[sS]?[bBoOdDhH]\s*[0-9a-fA-FxXzZ?_]+)
  | (?P<decimal>[0-9][0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<sysident>\$[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<escaped>\\[^\s]+)
  | (?P<op>"""
    + "|".join(re.escape(op) for op in OPERATORS)
    + r""")
  | (?P<punct>["""
    + re.escape(PUNCT)
    + r"""])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    span: Span

    def is_(self, kind: str, lexeme: str | None = None) -> bool:
        return self.kind == kind and (lexeme is None or self.lexeme == lexeme)

    def __repr__(self) -> str:
        return f"Token({self.kind}:{self.lexeme!r}@{self.span[0]})"


def _byte_offsets(text: str):
    """Map character offsets to byte offsets; identity for ASCII input."""
    if text.isascii():
        return lambda i: i
    table = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        table.append(total)
    return table.__getitem__


def decode_source(source: Union[str, bytes]) -> str:
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LexError("invalid UTF-8 in source", (exc.start, exc.end)) from None
    return source


def tokenize(source: Union[str, bytes]) -> list[Token]:
    text = decode_source(source)
    to_byte = _byte_offsets(text)
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LexError(f"illegal character {text[pos]!r}", (to_byte(pos), to_byte(pos + 1)))
        group = m.lastgroup
        start, end = m.span()
        span = (to_byte(start), to_byte(end))
        lexeme = m.group()
        if group == "open_comment":
            raise LexError("unterminated block comment", (to_byte(start), to_byte(n)))
        if group == "open_string":
            eol = text.find("\n", start)
            raise LexError("unterminated string", (to_byte(start), to_byte(n if eol < 0 else eol)))
        if group in ("ws", "line_comment", "block_comment", "timescale"):
            pass
        elif group == "string":
            tokens.append(Token(STRING, lexeme, span))
        elif group == "directive":
            tokens.append(Token(DIRECTIVE, lexeme, span))
        elif group in ("sized", "based"):
            tokens.append(Token(SIZED_LITERAL, lexeme, span))
        elif group == "decimal":
            tokens.append(Token(UNSIZED_LITERAL, lexeme, span))
        elif group == "ident":
            tokens.append(Token(KEYWORD if lexeme in KEYWORDS else IDENTIFIER, lexeme, span))
        elif group in ("sysident", "escaped"):
            tokens.append(Token(IDENTIFIER, lexeme, span))
        elif group == "op":
            tokens.append(Token(OPERATOR, lexeme, span))
        else:
            tokens.append(Token(PUNCTUATION, lexeme, span))
        pos = end
    return tokens
