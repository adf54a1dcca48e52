from __future__ import annotations

from typing import Optional

from .ast import Span


class VerilogError(Exception):
    """Base class for front-end failures. All of them count as a syntax failure."""

    category = "error"

    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "message": self.message,
            "span": list(self.span) if self.span is not None else None,
        }

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.message} at {self.span[0]}..{self.span[1]}"


class LexError(VerilogError):
    category = "lex"


class ParseError(VerilogError):
    category = "parse"

    def __init__(self, expected: str, found: str, span: Span):
        super().__init__(f"expected {expected}, found {found}", span)
        self.expected = expected
        self.found = found


class UnsupportedError(VerilogError):
    """A recognized Verilog construct that lies outside the supported subset."""

    category = "unsupported"


class ResolveError(VerilogError):
    category = "resolve"

    def __init__(self, message: str, span: Optional[Span] = None, identifier: Optional[str] = None):
        super().__init__(message, span)
        self.identifier = identifier

    def to_json(self) -> dict:
        out = super().to_json()
        out["identifier"] = self.identifier
        return out
