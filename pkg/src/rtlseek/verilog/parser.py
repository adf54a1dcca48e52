"""Recursive-descent parser for the Verilog subset.

Single-token lookahead, no error recovery: the first problem raises. Constructs
that are valid Verilog but outside the subset raise ``UnsupportedError`` so
callers can tell them apart from malformed input.
"""

from __future__ import annotations

import re
from typing import Optional

from . import ast as A
from .errors import ParseError, UnsupportedError
from .lexer import (
    DIRECTIVE,
    IDENTIFIER,
    KEYWORD,
    OPERATOR,
    PUNCTUATION,
    SIZED_LITERAL,
    STRING,
    UNSIZED_LITERAL,
    Token,
)

UNSIZED_WIDTH = 32

# Binary operator precedence, loosest first.
_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("|",),
    ("^", "^~", "~^"),
    ("&",),
    ("==", "!=", "===", "!=="),
    ("<", "<=", ">", ">="),
    ("<<", ">>", "<<<", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
    ("**",),
]
_UNARY_OPS = frozenset({"+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~"})

_UNSUPPORTED_ITEMS = {
    "initial": "initial blocks",
    "generate": "generate blocks",
    "genvar": "genvar declarations",
    "function": "functions",
    "task": "tasks",
    "integer": "integer variables",
    "real": "real variables",
    "realtime": "real variables",
    "time": "time variables",
    "event": "named events",
    "specify": "specify blocks",
    "defparam": "defparam",
    "supply0": "supply nets",
    "supply1": "supply nets",
    "tri": "tri nets",
    "always_ff": "SystemVerilog always_ff",
    "always_comb": "SystemVerilog always_comb",
    "always_latch": "SystemVerilog always_latch",
    "logic": "SystemVerilog logic",
    "signed": "signed declarations",
}
_UNSUPPORTED_STMTS = {
    "for": "for loops",
    "while": "while loops",
    "repeat": "repeat loops",
    "forever": "forever loops",
    "fork": "fork/join",
    "wait": "wait statements",
    "casez": "casez",
    "casex": "casex",
}

_BASES = {"b": 2, "o": 8, "d": 10, "h": 16}
_LITERAL_RE = re.compile(r"^(?P<size>[0-9_]*)\s*'(?P<signed>[sS]?)(?P<base>[bBoOdDhH])\s*(?P<digits>.+)$")


def parse_number(lexeme: str, span: A.Span = A.NO_SPAN) -> A.Number:
    """Normalize a literal to ``(width, value)``.

    Unsized literals get width 32. x/z/? digits read as 0 (two-state), and
    values wider than the declared size are truncated.
    """
    if "'" not in lexeme:
        return A.Number(UNSIZED_WIDTH, int(lexeme.replace("_", "")) & ((1 << UNSIZED_WIDTH) - 1), lexeme, span=span)
    m = _LITERAL_RE.match(lexeme)
    if m is None:
        raise ParseError("number literal", repr(lexeme), span)
    if m.group("signed"):
        raise UnsupportedError("signed literals are outside the supported subset", span)
    size = m.group("size").replace("_", "")
    width = int(size) if size else UNSIZED_WIDTH
    if width == 0:
        raise ParseError("nonzero literal width", repr(lexeme), span)
    base = _BASES[m.group("base").lower()]
    digits = re.sub(r"[xXzZ?]", "0", m.group("digits").replace("_", ""))
    try:
        value = int(digits, base)
    except ValueError:
        raise ParseError(f"base-{base} digits", repr(lexeme), span) from None
    return A.Number(width, value & ((1 << width) - 1), lexeme, span=span)


def _describe(tok: Optional[Token]) -> str:
    if tok is None:
        return "end of input"
    return f"{tok.kind} {tok.lexeme!r}"


class Parser:
    def __init__(self, tokens: list[Token], source_length: Optional[int] = None):
        self.tokens = tokens
        self.pos = 0
        if source_length is None:
            source_length = tokens[-1].span[1] if tokens else 0
        self.end = source_length

    # -- token navigation ---------------------------------------------------

    @property
    def tok(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _eof_span(self) -> A.Span:
        return (self.end, self.end)

    def _span_here(self) -> A.Span:
        return self.tok.span if self.tok is not None else self._eof_span()

    def at(self, lexeme: str, kind: Optional[str] = None) -> bool:
        t = self.tok
        return t is not None and t.lexeme == lexeme and (kind is None or t.kind == kind) and t.kind != STRING

    def at_kind(self, kind: str) -> bool:
        return self.tok is not None and self.tok.kind == kind

    def advance(self) -> Token:
        t = self.tok
        if t is None:
            raise ParseError("more input", "end of input", self._eof_span())
        self.pos += 1
        return t

    def expect(self, lexeme: str) -> Token:
        if not self.at(lexeme):
            self.fail(repr(lexeme))
        return self.advance()

    def accept(self, lexeme: str) -> Optional[Token]:
        if self.at(lexeme):
            return self.advance()
        return None

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t is None or t.kind != IDENTIFIER:
            self.fail(what)
        if t.lexeme.startswith("$"):
            raise UnsupportedError(f"system task/function {t.lexeme} is outside the supported subset", t.span)
        if t.lexeme.startswith("\\"):
            raise UnsupportedError("escaped identifiers are outside the supported subset", t.span)
        return self.advance()

    def fail(self, expected: str):
        t = self.tok
        if t is not None and t.kind == DIRECTIVE:
            raise UnsupportedError(f"compiler directive {t.lexeme} is outside the supported subset", t.span)
        raise ParseError(expected, _describe(t), self._span_here())

    def _prev_end(self) -> int:
        return self.tokens[self.pos - 1].span[1]

    # -- source unit --------------------------------------------------------

    def parse(self) -> A.SyntaxTree:
        modules = []
        while self.tok is not None:
            if self.at_kind(DIRECTIVE):
                self.fail("'module'")
            if self.at("macromodule", KEYWORD):
                raise UnsupportedError("macromodule is outside the supported subset", self.tok.span)
            modules.append(self.parse_module())
        return A.SyntaxTree(tuple(modules), span=(0, self.end))

    def parse_module(self) -> A.ModuleDecl:
        start = self.expect("module").span[0]
        name = self.expect_ident("module name").lexeme
        params: list[A.Parameter] = []
        if self.accept("#"):
            self.expect("(")
            if not self.at(")"):
                params.extend(self.parse_header_params())
            self.expect(")")

        header_names: list[tuple[str, A.Span]] = []
        ansi_ports: list[A.Port] = []
        if self.accept("("):
            if not self.at(")"):
                if self.tok is not None and self.tok.lexeme in ("input", "output", "inout") and self.tok.kind == KEYWORD:
                    ansi_ports = self.parse_ansi_ports()
                else:
                    while True:
                        t = self.expect_ident("port name")
                        header_names.append((t.lexeme, t.span))
                        if not self.accept(","):
                            break
            self.expect(")")
        self.expect(";")

        port_decls: dict[str, A.Port] = {}
        items: list = []
        while not self.at("endmodule"):
            if self.tok is None:
                self.fail("'endmodule'")
            self.parse_item(items, params, port_decls, bool(ansi_ports))
        end = self.advance().span[1]

        if ansi_ports:
            ports = tuple(ansi_ports)
        else:
            items = self._fold_port_nets(items, port_decls)
            ports_list = []
            for pname, pspan in header_names:
                decl = port_decls.pop(pname, None)
                if decl is None:
                    raise ParseError(f"direction declaration for port {pname!r}", "none", pspan)
                ports_list.append(decl)
            if port_decls:
                pname, decl = next(iter(port_decls.items()))
                raise ParseError(f"{pname!r} in the module port list", "a port declaration", decl.span)
            ports = tuple(ports_list)
        return A.ModuleDecl(name, tuple(params), ports, tuple(items), span=(start, end))

    @staticmethod
    def _fold_port_nets(items: list, port_decls: dict[str, A.Port]) -> list:
        """Merge non-ANSI ``output y; reg y;`` pairs into a single reg port."""
        out = []
        for item in items:
            if not isinstance(item, A.NetDecl):
                out.append(item)
                continue
            keep = []
            for name in item.names:
                port = port_decls.get(name)
                if port is None:
                    keep.append(name)
                    continue
                if item.net == "reg":
                    if port.direction != "output":
                        raise ParseError("output port for reg redeclaration", port.direction, item.span)
                    port_decls[name] = A.Port(port.direction, port.name, port.range, "reg", span=port.span)
            if keep:
                out.append(A.NetDecl(item.net, item.range, tuple(keep), span=item.span))
        return out

    def parse_header_params(self) -> list[A.Parameter]:
        params = []
        self.expect("parameter")
        rng = self.parse_opt_range()
        while True:
            params.append(self.parse_param_assign(local=False, rng=rng))
            if not self.accept(","):
                break
            if self.accept("parameter"):
                rng = self.parse_opt_range()
        return params

    def parse_param_assign(self, local: bool, rng: Optional[A.Range]) -> A.Parameter:
        t = self.expect_ident("parameter name")
        self.expect("=")
        value = self.parse_expr()
        return A.Parameter(t.lexeme, value, local, rng, span=(t.span[0], self._prev_end()))

    def _check_unsupported_decl(self):
        t = self.tok
        if t is not None and t.kind == KEYWORD and t.lexeme in _UNSUPPORTED_ITEMS:
            raise UnsupportedError(f"{_UNSUPPORTED_ITEMS[t.lexeme]} are outside the supported subset", t.span)

    def parse_ansi_ports(self) -> list[A.Port]:
        ports = []
        direction = None
        net = "wire"
        rng = None
        while True:
            t = self.tok
            start = self._span_here()[0]
            if t is not None and t.kind == KEYWORD and t.lexeme in ("input", "output", "inout"):
                direction = self.advance().lexeme
                net = "wire"
                if self.at("wire") or self.at("reg"):
                    net = self.advance().lexeme
                self._check_unsupported_decl()
                rng = self.parse_opt_range()
            elif direction is None:
                self.fail("port direction")
            name = self.expect_ident("port name")
            if net == "reg" and direction != "output":
                raise ParseError("output direction for reg port", direction, name.span)
            ports.append(A.Port(direction, name.lexeme, rng, net, span=(start, name.span[1])))
            if self.at("["):
                raise UnsupportedError("array ports are outside the supported subset", self.tok.span)
            if not self.accept(","):
                break
        return ports

    def parse_opt_range(self) -> Optional[A.Range]:
        if not self.at("["):
            return None
        start = self.advance().span[0]
        msb = self.parse_expr()
        self.expect(":")
        lsb = self.parse_expr()
        end = self.expect("]").span[1]
        return A.Range(msb, lsb, span=(start, end))

    # -- module items -------------------------------------------------------

    def parse_item(self, items, params, port_decls, ansi: bool) -> None:
        t = self.tok
        if t.kind == DIRECTIVE:
            self.fail("module item")
        if t.kind == KEYWORD:
            kw = t.lexeme
            if kw in ("input", "output", "inout"):
                if ansi:
                    raise ParseError("module item", f"port declaration {kw!r} after ANSI port list", t.span)
                self.parse_port_decl(port_decls)
                return
            if kw in ("wire", "reg"):
                self.parse_net_decl(items)
                return
            if kw in ("parameter", "localparam"):
                self.advance()
                self._check_unsupported_decl()
                rng = self.parse_opt_range()
                while True:
                    params.append(self.parse_param_assign(local=kw == "localparam", rng=rng))
                    if not self.accept(","):
                        break
                self.expect(";")
                return
            if kw == "assign":
                self.advance()
                while True:
                    start = self._span_here()[0]
                    lhs = self.parse_lvalue()
                    self.expect("=")
                    rhs = self.parse_expr()
                    items.append(A.ContinuousAssign(lhs, rhs, span=(start, self._prev_end())))
                    if not self.accept(","):
                        break
                self.expect(";")
                return
            if kw == "always":
                items.append(self.parse_always())
                return
            if kw in A.GATE_PRIMITIVES:
                self.parse_gate(items)
                return
            if kw in _UNSUPPORTED_ITEMS:
                self._check_unsupported_decl()
        if t.kind == IDENTIFIER:
            self.parse_instantiation(items)
            return
        self.fail("module item")

    def parse_port_decl(self, port_decls) -> None:
        start = self.tok.span[0]
        direction = self.advance().lexeme
        net = "wire"
        if self.at("wire") or self.at("reg"):
            net = self.advance().lexeme
        self._check_unsupported_decl()
        rng = self.parse_opt_range()
        while True:
            name = self.expect_ident("port name")
            if name.lexeme in port_decls:
                raise ParseError("a new port name", f"redeclared port {name.lexeme!r}", name.span)
            port_decls[name.lexeme] = A.Port(direction, name.lexeme, rng, net, span=(start, name.span[1]))
            if not self.accept(","):
                break
        self.expect(";")

    def parse_net_decl(self, items) -> None:
        start = self.tok.span[0]
        net = self.advance().lexeme
        self._check_unsupported_decl()
        rng = self.parse_opt_range()
        names: list[str] = []
        inits: list[A.ContinuousAssign] = []
        while True:
            t = self.expect_ident("net name")
            if self.at("["):
                raise UnsupportedError("memories (arrays) are outside the supported subset", self.tok.span)
            if self.at("=") and net == "wire":
                self.advance()
                rhs = self.parse_expr()
                names.append(t.lexeme)
                inits.append(
                    A.ContinuousAssign(A.Identifier(t.lexeme, span=t.span), rhs, span=(t.span[0], self._prev_end()))
                )
            elif self.at("="):
                raise UnsupportedError("reg initializers are outside the supported subset", self.tok.span)
            else:
                names.append(t.lexeme)
            if not self.accept(","):
                break
        end = self.expect(";").span[1]
        if names:
            items.append(A.NetDecl(net, rng, tuple(names), span=(start, end)))
        items.extend(inits)

    def parse_always(self) -> A.AlwaysBlock:
        start = self.advance().span[0]
        if not self.at("@"):
            t = self.tok
            raise UnsupportedError("always blocks without an event control are outside the supported subset", t.span if t else self._eof_span())
        sens = self.parse_sensitivity()
        body = self.parse_stmt()
        return A.AlwaysBlock(sens, body, span=(start, body.span[1]))

    def parse_sensitivity(self) -> A.Sensitivity:
        start = self.expect("@").span[0]
        if self.accept("*"):
            return A.Sensitivity("star", (), span=(start, self._prev_end()))
        if not self.at("("):
            t = self.expect_ident("sensitivity signal")
            item = A.SensItem(None, t.lexeme, span=t.span)
            return A.Sensitivity("list", (item,), span=(start, t.span[1]))
        self.expect("(")
        if self.accept("*"):
            end = self.expect(")").span[1]
            return A.Sensitivity("star", (), span=(start, end))
        entries = []
        while True:
            s = self._span_here()[0]
            edge = None
            if self.at("posedge") or self.at("negedge"):
                edge = self.advance().lexeme
            t = self.expect_ident("sensitivity signal")
            if self.at("["):
                raise UnsupportedError("bit-selects in sensitivity lists are outside the supported subset", self.tok.span)
            entries.append(A.SensItem(edge, t.lexeme, span=(s, t.span[1])))
            if not (self.accept("or") or self.accept(",")):
                break
        end = self.expect(")").span[1]
        edged = [e.edge is not None for e in entries]
        if all(edged):
            style = "edge"
        elif not any(edged):
            style = "list"
        else:
            raise UnsupportedError("mixed edge and level sensitivity is outside the supported subset", (start, end))
        return A.Sensitivity(style, tuple(entries), span=(start, end))

    def parse_connections(self) -> list[A.Connection]:
        conns: list[A.Connection] = []
        if self.at(")"):
            return conns
        named = self.at(".")
        while True:
            start = self._span_here()[0]
            if named:
                self.expect(".")
                port = self.expect_ident("port name").lexeme
                self.expect("(")
                expr = None if self.at(")") else self.parse_expr()
                self.expect(")")
                conns.append(A.Connection(port, expr, span=(start, self._prev_end())))
            else:
                if self.at("."):
                    self.fail("positional connection")
                expr = self.parse_expr()
                conns.append(A.Connection(None, expr, span=(start, self._prev_end())))
            if not self.accept(","):
                break
        return conns

    def parse_instantiation(self, items) -> None:
        mod = self.expect_ident("module name")
        params: list[A.Connection] = []
        if self.accept("#"):
            self.expect("(")
            params = self.parse_connections()
            self.expect(")")
        while True:
            inst = self.expect_ident("instance name")
            if self.at("["):
                raise UnsupportedError("instance arrays are outside the supported subset", self.tok.span)
            self.expect("(")
            conns = self.parse_connections()
            self.expect(")")
            items.append(
                A.Instantiation(mod.lexeme, inst.lexeme, tuple(conns), tuple(params), span=(mod.span[0], self._prev_end()))
            )
            if not self.accept(","):
                break
        self.expect(";")

    def parse_gate(self, items) -> None:
        gate = self.advance()
        if self.at("#"):
            raise UnsupportedError("gate delays are outside the supported subset", self.tok.span)
        while True:
            name = None
            if self.at_kind(IDENTIFIER):
                name = self.expect_ident("instance name").lexeme
            self.expect("(")
            if self.at("."):
                self.fail("positional gate terminal")
            conns = self.parse_connections()
            self.expect(")")
            need = 2 if gate.lexeme in ("not", "buf") else 3
            if len(conns) < need or (need == 2 and len(conns) != 2):
                raise ParseError(f"{need}{'' if need == 2 else '+'} gate terminals", str(len(conns)), (gate.span[0], self._prev_end()))
            items.append(A.Instantiation(gate.lexeme, name, tuple(conns), (), span=(gate.span[0], self._prev_end())))
            if not self.accept(","):
                break
        self.expect(";")

    # -- statements ---------------------------------------------------------

    def parse_stmt(self) -> A.Stmt:
        t = self.tok
        if t is None:
            self.fail("statement")
        if t.kind == PUNCTUATION and t.lexeme == ";":
            self.advance()
            return A.NullStmt(span=t.span)
        if t.kind == PUNCTUATION and t.lexeme == "#":
            raise UnsupportedError("delays are outside the supported subset", t.span)
        if t.kind == PUNCTUATION and t.lexeme == "@":
            raise UnsupportedError("event controls inside statements are outside the supported subset", t.span)
        if t.kind == KEYWORD:
            kw = t.lexeme
            if kw == "begin":
                return self.parse_block()
            if kw == "if":
                return self.parse_if()
            if kw == "case":
                return self.parse_case()
            if kw in _UNSUPPORTED_STMTS:
                raise UnsupportedError(f"{_UNSUPPORTED_STMTS[kw]} are outside the supported subset", t.span)
            self.fail("statement")
        if t.kind == IDENTIFIER and t.lexeme.startswith("$"):
            raise UnsupportedError(f"system task {t.lexeme} is outside the supported subset", t.span)
        if t.kind == IDENTIFIER or (t.kind == PUNCTUATION and t.lexeme == "{"):
            lhs = self.parse_lvalue()
            if self.accept("="):
                if self.at("#") or self.at("@"):
                    raise UnsupportedError("intra-assignment timing controls are outside the supported subset", self.tok.span)
                rhs = self.parse_expr()
                self.expect(";")
                return A.BlockingAssign(lhs, rhs, span=(t.span[0], self._prev_end()))
            if self.accept("<="):
                if self.at("#") or self.at("@"):
                    raise UnsupportedError("intra-assignment timing controls are outside the supported subset", self.tok.span)
                rhs = self.parse_expr()
                self.expect(";")
                return A.NonBlockingAssign(lhs, rhs, span=(t.span[0], self._prev_end()))
            self.fail("'=' or '<='")
        self.fail("statement")

    def parse_block(self) -> A.Block:
        start = self.expect("begin").span[0]
        label = None
        if self.accept(":"):
            label = self.expect_ident("block label").lexeme
        stmts = []
        while not self.at("end"):
            if self.tok is None:
                self.fail("'end'")
            if self.at("reg") or self.at("wire") or self.at("integer"):
                raise UnsupportedError("block-local declarations are outside the supported subset", self.tok.span)
            stmts.append(self.parse_stmt())
        end = self.advance().span[1]
        return A.Block(tuple(stmts), label, span=(start, end))

    def parse_if(self) -> A.If:
        start = self.expect("if").span[0]
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_stmt()
        otherwise = None
        if self.accept("else"):
            otherwise = self.parse_stmt()
        end = (otherwise or then).span[1]
        return A.If(cond, then, otherwise, span=(start, end))

    def parse_case(self) -> A.Case:
        start = self.expect("case").span[0]
        self.expect("(")
        subject = self.parse_expr()
        self.expect(")")
        arms: list[A.CaseItem] = []
        default = None
        while not self.at("endcase"):
            if self.tok is None:
                self.fail("'endcase'")
            if self.at("default"):
                dtok = self.advance()
                if default is not None:
                    raise ParseError("a single default arm", "second 'default'", dtok.span)
                self.accept(":")
                default = self.parse_stmt()
                continue
            s = self._span_here()[0]
            labels = [self.parse_expr()]
            while self.accept(","):
                labels.append(self.parse_expr())
            self.expect(":")
            body = self.parse_stmt()
            arms.append(A.CaseItem(tuple(labels), body, span=(s, body.span[1])))
        end_tok = self.advance()
        if not arms and default is None:
            raise ParseError("at least one case arm", "'endcase'", end_tok.span)
        return A.Case(subject, tuple(arms), default, span=(start, end_tok.span[1]))

    # -- expressions --------------------------------------------------------

    def parse_lvalue(self) -> A.Expr:
        t = self.tok
        if t is not None and t.lexeme == "{" and t.kind == PUNCTUATION:
            self.advance()
            parts = [self.parse_lvalue()]
            while self.accept(","):
                parts.append(self.parse_lvalue())
            end = self.expect("}").span[1]
            return A.Concat(tuple(parts), span=(t.span[0], end))
        ident = self.expect_ident("assignment target")
        return self.parse_selects(A.Identifier(ident.lexeme, span=ident.span))

    def parse_selects(self, target: A.Identifier) -> A.Expr:
        if not self.at("["):
            return target
        self.advance()
        first = self.parse_expr()
        if self.at("+:") or self.at("-:"):
            raise UnsupportedError("indexed part-selects are outside the supported subset", self.tok.span)
        if self.accept(":"):
            second = self.parse_expr()
            end = self.expect("]").span[1]
            node: A.Expr = A.PartSelect(target, first, second, span=(target.span[0], end))
        else:
            end = self.expect("]").span[1]
            node = A.BitSelect(target, first, span=(target.span[0], end))
        if self.at("["):
            raise UnsupportedError("multi-dimensional selects are outside the supported subset", self.tok.span)
        return node

    def parse_expr(self) -> A.Expr:
        cond = self.parse_binary(0)
        if self.accept("?"):
            then = self.parse_expr()
            self.expect(":")
            otherwise = self.parse_expr()
            return A.Ternary(cond, then, otherwise, span=(cond.span[0], otherwise.span[1]))
        return cond

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        ops = _BINARY_LEVELS[level]
        left = self.parse_binary(level + 1)
        while self.tok is not None and self.tok.kind == OPERATOR and self.tok.lexeme in ops:
            op = self.advance().lexeme
            right = self.parse_binary(level + 1)
            left = A.Binary(op, left, right, span=(left.span[0], right.span[1]))
        return left

    def parse_unary(self) -> A.Expr:
        t = self.tok
        if t is not None and t.kind == OPERATOR and t.lexeme in _UNARY_OPS:
            self.advance()
            operand = self.parse_unary()
            return A.Unary(t.lexeme, operand, span=(t.span[0], operand.span[1]))
        return self.parse_primary()

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t is None:
            self.fail("expression")
        if t.kind in (SIZED_LITERAL, UNSIZED_LITERAL):
            self.advance()
            return parse_number(t.lexeme, t.span)
        if t.kind == STRING:
            raise UnsupportedError("string literals are outside the supported subset", t.span)
        if t.kind == IDENTIFIER:
            ident = self.expect_ident()
            if self.at("("):
                raise UnsupportedError("function calls are outside the supported subset", ident.span)
            return self.parse_selects(A.Identifier(ident.lexeme, span=ident.span))
        if t.kind == PUNCTUATION and t.lexeme == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if t.kind == PUNCTUATION and t.lexeme == "{":
            return self.parse_concat()
        self.fail("expression")

    def parse_concat(self) -> A.Expr:
        start = self.expect("{").span[0]
        first = self.parse_expr()
        if self.at("{"):
            self.advance()
            parts = [self.parse_expr()]
            while self.accept(","):
                parts.append(self.parse_expr())
            self.expect("}")
            end = self.expect("}").span[1]
            return A.Replication(first, tuple(parts), span=(start, end))
        parts = [first]
        while self.accept(","):
            parts.append(self.parse_expr())
        end = self.expect("}").span[1]
        return A.Concat(tuple(parts), span=(start, end))


def parse(tokens: list[Token], source_length: Optional[int] = None, *, resolve: bool = True) -> A.SyntaxTree:
    """Parse a token stream and, by default, run the identifier resolution pass."""
    tree = Parser(tokens, source_length).parse()
    if resolve:
        from .resolve import resolve as _resolve

        _resolve(tree)
    return tree
