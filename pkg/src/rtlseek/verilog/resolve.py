"""Identifier resolution over a parsed tree.

Every module has one flat namespace shared by parameters, ports, nets and
instance names. Redeclaration, references to undeclared names, and
assignments to the wrong kind of object are ``ResolveError``.
"""

from __future__ import annotations

from . import ast as A
from .errors import ResolveError


class _Scope:
    def __init__(self, module: A.ModuleDecl):
        self.module = module
        self.kinds: dict[str, str] = {}

    def declare(self, name: str, kind: str, span: A.Span) -> None:
        if name in self.kinds:
            raise ResolveError(f"{name!r} is already declared in module {self.module.name!r}", span, name)
        self.kinds[name] = kind

    def lookup(self, ident: A.Identifier, allowed: tuple[str, ...], role: str) -> str:
        kind = self.kinds.get(ident.name)
        if kind is None:
            raise ResolveError(f"undeclared identifier {ident.name!r}", ident.span, ident.name)
        if kind not in allowed:
            raise ResolveError(f"{ident.name!r} ({kind}) cannot be used as {role}", ident.span, ident.name)
        return kind


_VALUE_KINDS = ("param", "input", "output-wire", "output-reg", "inout", "wire", "reg")
_SIGNAL_KINDS = ("input", "output-wire", "output-reg", "inout", "wire", "reg")
_NET_TARGETS = ("output-wire", "inout", "wire")
_REG_TARGETS = ("output-reg", "reg")


def _port_kind(port: A.Port) -> str:
    if port.direction == "output":
        return f"output-{port.net}"
    return port.direction


def _check_expr(scope: _Scope, expr: A.Expr, allowed=_VALUE_KINDS, role="a value") -> None:
    for node in expr.walk():
        if isinstance(node, A.Identifier):
            scope.lookup(node, allowed, role)


def _check_lvalue(scope: _Scope, lhs: A.Expr, targets: tuple[str, ...], role: str) -> None:
    if isinstance(lhs, A.Concat):
        for part in lhs.parts:
            _check_lvalue(scope, part, targets, role)
        return
    if isinstance(lhs, A.Identifier):
        scope.lookup(lhs, targets, role)
        return
    if isinstance(lhs, (A.BitSelect, A.PartSelect)):
        scope.lookup(lhs.target, targets, role)
        for sub in lhs.children():
            if sub is not lhs.target:
                _check_expr(scope, sub)
        return
    raise ResolveError("invalid assignment target", lhs.span)


def _check_stmt(scope: _Scope, stmt: A.Stmt) -> None:
    if isinstance(stmt, (A.BlockingAssign, A.NonBlockingAssign)):
        _check_lvalue(scope, stmt.lhs, _REG_TARGETS, "a procedural assignment target (needs reg)")
        _check_expr(scope, stmt.rhs)
    elif isinstance(stmt, A.If):
        _check_expr(scope, stmt.cond)
        _check_stmt(scope, stmt.then)
        if stmt.otherwise is not None:
            _check_stmt(scope, stmt.otherwise)
    elif isinstance(stmt, A.Case):
        _check_expr(scope, stmt.expr)
        for arm in stmt.items:
            for label in arm.labels:
                _check_expr(scope, label)
            _check_stmt(scope, arm.body)
        if stmt.default is not None:
            _check_stmt(scope, stmt.default)
    elif isinstance(stmt, A.Block):
        for s in stmt.stmts:
            _check_stmt(scope, s)


def resolve_module(module: A.ModuleDecl) -> None:
    scope = _Scope(module)
    for p in module.parameters:
        _check_expr(scope, p.value, ("param",), "a constant")
        if p.range is not None:
            _check_expr(scope, p.range, ("param",), "a constant")
        scope.declare(p.name, "param", p.span)
    for port in module.ports:
        scope.declare(port.name, _port_kind(port), port.span)
    for item in module.items:
        if isinstance(item, A.NetDecl):
            for name in item.names:
                scope.declare(name, item.net, item.span)
        elif isinstance(item, A.Instantiation) and item.name is not None:
            scope.declare(item.name, "instance", item.span)

    for port in module.ports:
        if port.range is not None:
            _check_expr(scope, port.range, ("param",), "a constant")
    for item in module.items:
        if isinstance(item, A.NetDecl):
            if item.range is not None:
                _check_expr(scope, item.range, ("param",), "a constant")
        elif isinstance(item, A.ContinuousAssign):
            _check_lvalue(scope, item.lhs, _NET_TARGETS, "a continuous assignment target (needs a net)")
            _check_expr(scope, item.rhs)
        elif isinstance(item, A.AlwaysBlock):
            for s in item.sensitivity.items:
                scope.lookup(A.Identifier(s.signal, span=s.span), _SIGNAL_KINDS, "a sensitivity signal")
            _check_stmt(scope, item.body)
        elif isinstance(item, A.Instantiation):
            for conn in item.parameters:
                if conn.expr is not None:
                    _check_expr(scope, conn.expr, ("param",), "a constant")
            for conn in item.connections:
                if conn.expr is not None:
                    _check_expr(scope, conn.expr)


def resolve(tree: A.SyntaxTree) -> A.SyntaxTree:
    seen: set[str] = set()
    for module in tree.modules:
        if module.name in seen:
            raise ResolveError(f"module {module.name!r} is defined twice", module.span, module.name)
        seen.add(module.name)
        resolve_module(module)
    return tree
