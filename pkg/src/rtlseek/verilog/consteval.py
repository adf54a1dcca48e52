"""Constant expression evaluation (parameters, ranges, replication counts).

Values are unsigned and sized by Verilog's self-determined width rules.
"""

from __future__ import annotations

from typing import Mapping, Optional

from . import ast as A


class NotConstant(Exception):
    pass


def _mask(width: int) -> int:
    return (1 << width) - 1


_COMPARE = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "===": lambda a, b: a == b,
    "!==": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def const_eval(expr: A.Expr, params: Optional[Mapping[str, tuple[int, int]]] = None) -> tuple[int, int]:
    """Return ``(value, width)``; raises ``NotConstant`` on any non-constant leaf."""
    params = params or {}
    if isinstance(expr, A.Number):
        return expr.value, expr.width
    if isinstance(expr, A.Identifier):
        if expr.name in params:
            return params[expr.name]
        raise NotConstant(expr.name)
    if isinstance(expr, A.Unary):
        v, w = const_eval(expr.operand, params)
        op = expr.op
        if op == "+":
            return v, w
        if op == "-":
            return (-v) & _mask(w), w
        if op == "~":
            return (~v) & _mask(w), w
        if op == "!":
            return int(v == 0), 1
        bits = bin(v).count("1")
        red = {
            "&": v == _mask(w),
            "~&": v != _mask(w),
            "|": v != 0,
            "~|": v == 0,
            "^": bits % 2 == 1,
            "~^": bits % 2 == 0,
            "^~": bits % 2 == 0,
        }
        return int(red[op]), 1
    if isinstance(expr, A.Binary):
        a, wa = const_eval(expr.left, params)
        b, wb = const_eval(expr.right, params)
        op = expr.op
        if op in _COMPARE:
            return int(_COMPARE[op](a, b)), 1
        if op == "&&":
            return int(bool(a) and bool(b)), 1
        if op == "||":
            return int(bool(a) or bool(b)), 1
        if op in ("<<", "<<<"):
            return (a << b) & _mask(wa), wa
        if op in (">>", ">>>"):
            return a >> b, wa
        if op == "**":
            return pow(a, b, 1 << wa), wa
        w = max(wa, wb)
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            if b == 0:
                raise NotConstant("division by zero")
            r = a // b
        elif op == "%":
            if b == 0:
                raise NotConstant("modulo by zero")
            r = a % b
        elif op == "&":
            r = a & b
        elif op == "|":
            r = a | b
        elif op == "^":
            r = a ^ b
        elif op in ("~^", "^~"):
            r = ~(a ^ b)
        else:
            raise NotConstant(op)
        return r & _mask(w), w
    if isinstance(expr, A.Ternary):
        c, _ = const_eval(expr.cond, params)
        t, wt = const_eval(expr.then, params)
        e, we = const_eval(expr.otherwise, params)
        return (t if c else e), max(wt, we)
    if isinstance(expr, (A.Concat, A.Replication)):
        parts = [const_eval(p, params) for p in expr.parts]
        v, w = 0, 0
        for pv, pw in parts:
            v = (v << pw) | pv
            w += pw
        if isinstance(expr, A.Replication):
            n, _ = const_eval(expr.count, params)
            v = int(format(v, f"0{w}b") * n, 2) if n and w else 0
            w *= n
            if w == 0:
                raise NotConstant("zero-width replication")
        return v, w
    if isinstance(expr, A.BitSelect):
        v, w = const_eval(expr.target, params)
        i, _ = const_eval(expr.index, params)
        return (v >> i) & 1, 1
    if isinstance(expr, A.PartSelect):
        v, w = const_eval(expr.target, params)
        hi, _ = const_eval(expr.msb, params)
        lo, _ = const_eval(expr.lsb, params)
        if hi < lo:
            raise NotConstant("reversed part-select")
        return (v >> lo) & _mask(hi - lo + 1), hi - lo + 1
    raise NotConstant(type(expr).__name__)


def is_literal_only(expr: A.Expr) -> bool:
    return not any(isinstance(n, A.Identifier) for n in expr.walk())
