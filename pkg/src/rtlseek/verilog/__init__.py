"""Verilog-subset front end: lexer, parser, resolver, printer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import ast
from .ast import SyntaxTree
from .errors import LexError, ParseError, ResolveError, UnsupportedError, VerilogError
from .lexer import Token, decode_source, tokenize
from .parser import parse
from .printer import format_tree


@dataclass(frozen=True)
class SyntaxVerdict:
    ok: bool
    tree: Optional[SyntaxTree] = None
    diagnostics: tuple[VerilogError, ...] = field(default=())

    @property
    def error(self) -> Optional[VerilogError]:
        return self.diagnostics[0] if self.diagnostics else None

    def to_json(self) -> dict:
        return {"ok": self.ok, "diagnostics": [d.to_json() for d in self.diagnostics]}


def parse_source(source: Union[str, bytes]) -> SyntaxTree:
    """Tokenize, parse and resolve; raises on the first problem."""
    text = decode_source(source)
    return parse(tokenize(text), len(text.encode("utf-8")))


def check_syntax(source: Union[str, bytes]) -> SyntaxVerdict:
    try:
        tree = parse_source(source)
    except VerilogError as exc:
        return SyntaxVerdict(False, None, (exc,))
    return SyntaxVerdict(True, tree)


__all__ = [
    "LexError",
    "ParseError",
    "ResolveError",
    "SyntaxTree",
    "SyntaxVerdict",
    "Token",
    "UnsupportedError",
    "VerilogError",
    "ast",
    "check_syntax",
    "format_tree",
    "parse",
    "parse_source",
    "tokenize",
]
