"""Verilog source generation from a syntax tree.

Output is not meant to preserve formatting. It is meant to reparse to a tree
equal to the input, so every compound operand is parenthesized.
"""

from __future__ import annotations

from . import ast as A

_INDENT = "    "


def format_expr(e: A.Expr) -> str:
    if isinstance(e, A.Identifier):
        return e.name
    if isinstance(e, A.Number):
        if e.text:
            return e.text
        if e.width == 32:
            return str(e.value)
        return f"{e.width}'d{e.value}"
    if isinstance(e, A.Unary):
        return f"{e.op}({format_expr(e.operand)})"
    if isinstance(e, A.Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, A.Ternary):
        return f"({format_expr(e.cond)} ? {format_expr(e.then)} : {format_expr(e.otherwise)})"
    if isinstance(e, A.Concat):
        return "{" + ", ".join(format_expr(p) for p in e.parts) + "}"
    if isinstance(e, A.Replication):
        return "{" + format_expr(e.count) + "{" + ", ".join(format_expr(p) for p in e.parts) + "}}"
    if isinstance(e, A.BitSelect):
        return f"{e.target.name}[{format_expr(e.index)}]"
    if isinstance(e, A.PartSelect):
        return f"{e.target.name}[{format_expr(e.msb)}:{format_expr(e.lsb)}]"
    raise TypeError(f"not an expression: {type(e).__name__}")


def _range(r: A.Range | None) -> str:
    if r is None:
        return ""
    return f"[{format_expr(r.msb)}:{format_expr(r.lsb)}] "


def _stmt_lines(s: A.Stmt, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(s, A.BlockingAssign):
        return [f"{pad}{format_expr(s.lhs)} = {format_expr(s.rhs)};"]
    if isinstance(s, A.NonBlockingAssign):
        return [f"{pad}{format_expr(s.lhs)} <= {format_expr(s.rhs)};"]
    if isinstance(s, A.NullStmt):
        return [f"{pad};"]
    if isinstance(s, A.Block):
        head = f"{pad}begin" + (f" : {s.label}" if s.label else "")
        lines = [head]
        for sub in s.stmts:
            lines.extend(_stmt_lines(sub, depth + 1))
        lines.append(f"{pad}end")
        return lines
    if isinstance(s, A.If):
        lines = [f"{pad}if ({format_expr(s.cond)})"]
        # wrap the then-branch so a nested if cannot capture our else
        then = A.Block((s.then,)) if isinstance(s.then, A.If) and s.otherwise is not None else s.then
        lines.extend(_stmt_lines(then, depth + 1))
        if s.otherwise is not None:
            lines.append(f"{pad}else")
            lines.extend(_stmt_lines(s.otherwise, depth + 1))
        return lines
    if isinstance(s, A.Case):
        lines = [f"{pad}case ({format_expr(s.expr)})"]
        for arm in s.items:
            lines.append(f"{pad}{_INDENT}{', '.join(format_expr(x) for x in arm.labels)}:")
            lines.extend(_stmt_lines(arm.body, depth + 2))
        if s.default is not None:
            lines.append(f"{pad}{_INDENT}default:")
            lines.extend(_stmt_lines(s.default, depth + 2))
        lines.append(f"{pad}endcase")
        return lines
    raise TypeError(f"not a statement: {type(s).__name__}")


def _sensitivity(sens: A.Sensitivity) -> str:
    if sens.style == "star":
        return "@(*)"
    parts = [f"{i.edge} {i.signal}" if i.edge else i.signal for i in sens.items]
    return "@(" + " or ".join(parts) + ")"


def _connections(conns: tuple[A.Connection, ...]) -> str:
    out = []
    for c in conns:
        expr = "" if c.expr is None else format_expr(c.expr)
        out.append(f".{c.port}({expr})" if c.port is not None else expr)
    return ", ".join(out)


def _item_lines(item, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(item, A.NetDecl):
        return [f"{pad}{item.net} {_range(item.range)}{', '.join(item.names)};"]
    if isinstance(item, A.ContinuousAssign):
        return [f"{pad}assign {format_expr(item.lhs)} = {format_expr(item.rhs)};"]
    if isinstance(item, A.AlwaysBlock):
        return [f"{pad}always {_sensitivity(item.sensitivity)}"] + _stmt_lines(item.body, depth + 1)
    if isinstance(item, A.Instantiation):
        params = f" #({_connections(item.parameters)})" if item.parameters else ""
        name = f" {item.name}" if item.name else ""
        return [f"{pad}{item.module}{params}{name} ({_connections(item.connections)});"]
    raise TypeError(f"not a module item: {type(item).__name__}")


def format_module(m: A.ModuleDecl) -> str:
    # header params only when they form a prefix, so parameter order survives
    n_header = 0
    while n_header < len(m.parameters) and not m.parameters[n_header].local:
        n_header += 1
    header_params = m.parameters[:n_header]
    body_params = m.parameters[n_header:]
    head = f"module {m.name}"
    if header_params:
        head += " #(" + ", ".join(
            f"parameter {_range(p.range)}{p.name} = {format_expr(p.value)}" for p in header_params
        ) + ")"
    ports = ", ".join(
        f"{p.direction} {'reg ' if p.net == 'reg' else ''}{_range(p.range)}{p.name}" for p in m.ports
    )
    lines = [f"{head}({ports});"]
    for p in body_params:
        kw = "localparam" if p.local else "parameter"
        lines.append(f"{_INDENT}{kw} {_range(p.range)}{p.name} = {format_expr(p.value)};")
    for item in m.items:
        lines.extend(_item_lines(item, 1))
    lines.append("endmodule")
    return "\n".join(lines)


def format_tree(tree: A.SyntaxTree) -> str:
    return "\n\n".join(format_module(m) for m in tree.modules) + "\n"
