"""Syntax tree node types for the supported Verilog subset.

Nodes are frozen dataclasses. Every node carries a ``span`` (byte offsets into
the source) that is excluded from equality, so two trees compare equal when
their structure and attributes match regardless of where they came from.
Child sequences are tuples to keep trees hashable and immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional, Union

Span = tuple[int, int]

NO_SPAN: Span = (0, 0)


@dataclass(frozen=True)
class Node:
    span: Span = field(default=NO_SPAN, compare=False, repr=False, kw_only=True)

    @property
    def kind(self) -> str:
        return type(self).__name__

    def children(self) -> Iterator[Node]:
        for f in fields(self):
            if f.name == "span":
                continue
            value = getattr(self, f.name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, tuple):
                for v in value:
                    if isinstance(v, Node):
                        yield v

    def walk(self) -> Iterator[Node]:
        """Pre-order depth-first traversal."""
        yield self
        for child in self.children():
            yield from child.walk()


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Identifier(Node):
    name: str


@dataclass(frozen=True)
class Number(Node):
    """Literal normalized to ``(width, value)``.

    ``text`` keeps the original spelling for printing only; it does not take
    part in comparison, so ``8'hFF`` and ``8'd255`` are the same literal.
    """

    width: int
    value: int
    text: str = field(default="", compare=False)

    @property
    def sized(self) -> bool:
        return "'" in self.text if self.text else True


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: Expr


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Ternary(Node):
    cond: Expr
    then: Expr
    otherwise: Expr


@dataclass(frozen=True)
class Concat(Node):
    parts: tuple[Expr, ...]


@dataclass(frozen=True)
class Replication(Node):
    count: Expr
    parts: tuple[Expr, ...]


@dataclass(frozen=True)
class BitSelect(Node):
    target: Identifier
    index: Expr


@dataclass(frozen=True)
class PartSelect(Node):
    target: Identifier
    msb: Expr
    lsb: Expr


Expr = Union[Identifier, Number, Unary, Binary, Ternary, Concat, Replication, BitSelect, PartSelect]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class BlockingAssign(Node):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class NonBlockingAssign(Node):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: Stmt
    otherwise: Optional[Stmt] = None


@dataclass(frozen=True)
class CaseItem(Node):
    labels: tuple[Expr, ...]
    body: Stmt


@dataclass(frozen=True)
class Case(Node):
    expr: Expr
    items: tuple[CaseItem, ...]
    default: Optional[Stmt] = None


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple[Stmt, ...]
    label: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class NullStmt(Node):
    pass


Stmt = Union[BlockingAssign, NonBlockingAssign, If, Case, Block, NullStmt]


# -- module items ------------------------------------------------------------


@dataclass(frozen=True)
class Range(Node):
    msb: Expr
    lsb: Expr


@dataclass(frozen=True)
class Parameter(Node):
    name: str
    value: Expr
    local: bool = False
    range: Optional[Range] = None


@dataclass(frozen=True)
class Port(Node):
    direction: str  # input | output | inout
    name: str
    range: Optional[Range] = None
    net: str = "wire"  # wire | reg


@dataclass(frozen=True)
class NetDecl(Node):
    net: str  # wire | reg
    range: Optional[Range]
    names: tuple[str, ...]


@dataclass(frozen=True)
class ContinuousAssign(Node):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class SensItem(Node):
    edge: Optional[str]  # posedge | negedge | None
    signal: str


@dataclass(frozen=True)
class Sensitivity(Node):
    style: str  # star | edge | list
    items: tuple[SensItem, ...] = ()


@dataclass(frozen=True)
class AlwaysBlock(Node):
    sensitivity: Sensitivity
    body: Stmt


@dataclass(frozen=True)
class Connection(Node):
    """Port or parameter connection; ``port`` is None for positional ones."""

    port: Optional[str]
    expr: Optional[Expr]


@dataclass(frozen=True)
class Instantiation(Node):
    module: str
    name: Optional[str]
    connections: tuple[Connection, ...]
    parameters: tuple[Connection, ...] = ()


Item = Union[NetDecl, ContinuousAssign, AlwaysBlock, Instantiation]

GATE_PRIMITIVES = frozenset({"and", "or", "nand", "nor", "xor", "xnor", "not", "buf"})


@dataclass(frozen=True)
class ModuleDecl(Node):
    name: str
    parameters: tuple[Parameter, ...]
    ports: tuple[Port, ...]
    items: tuple[Item, ...]

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class SyntaxTree(Node):
    modules: tuple[ModuleDecl, ...]

    def module(self, name: str) -> Optional[ModuleDecl]:
        for m in self.modules:
            if m.name == name:
                return m
        return None


def node_fields(node: Node, *, structural: bool = False) -> list[tuple[str, object]]:
    """Named field values of ``node``, minus the span.

    With ``structural=True`` only fields that participate in equality are
    returned.
    """
    out = []
    for f in fields(node):
        if f.name == "span" or (structural and not f.compare):
            continue
        out.append((f.name, getattr(node, f.name)))
    return out
