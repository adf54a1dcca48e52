"""Structural equivalence of Verilog designs.

Two designs are equivalent when their canonical trees match. Canonicalization
erases the superficial variation an LLM produces between otherwise identical
answers:

* literal spelling (``8'hFF`` vs ``8'd255``),
* identifier names, including the module name,
* the order of module-level items (declarations, assigns, always blocks,
  instances) and of named port connections.

Statement order inside procedural blocks is kept because it changes meaning.
Port order is kept because it is part of the interface.

Item order is fixed by iterative hash refinement: items are first hashed with
every identifier replaced by one placeholder, then identifiers are coloured by
the items they appear in (and where), and items re-hashed with those colours,
until the partition stops splitting. Items still tied fall back to their
original position, which can only keep two designs apart, never merge them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .verilog import ast as A
from .verilog.consteval import NotConstant, const_eval, is_literal_only

_PLACEHOLDER = "?"


@dataclass(frozen=True)
class CanonicalForm:
    tree: A.SyntaxTree
    digest: str

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CanonicalForm):
            return NotImplemented
        return self.digest == other.digest and first_difference(self.tree, other.tree) is None

    def __hash__(self) -> int:
        return hash(self.digest)


@dataclass(frozen=True)
class EquivClassPartition:
    classes: tuple[tuple[int, ...], ...]
    representatives: tuple[int, ...]
    digests: tuple[str, ...] = ()

    def class_of(self) -> list[int]:
        """Class id for every candidate index."""
        out = [0] * sum(len(c) for c in self.classes)
        for cid, members in enumerate(self.classes):
            for i in members:
                out[i] = cid
        return out

    def __len__(self) -> int:
        return len(self.classes)


# -- serialization -----------------------------------------------------------


def structural_key(node) -> object:
    """JSON-compatible encoding of the fields that take part in equality."""
    if isinstance(node, A.Node):
        return [node.kind] + [structural_key(v) for _, v in A.node_fields(node, structural=True)]
    if isinstance(node, tuple):
        return [structural_key(v) for v in node]
    return node


def _hash(*parts: object) -> str:
    text = json.dumps(parts, separators=(",", ":"), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def tree_digest(tree: A.SyntaxTree) -> str:
    return hashlib.sha256(
        json.dumps(structural_key(tree), separators=(",", ":")).encode("utf-8")
    ).hexdigest()


# -- name mapping --------------------------------------------------------------


def map_names(node, local: Callable[[str], str], module: Callable[[str], str]):
    """Rebuild ``node`` with every name passed through ``local`` or ``module``.

    Also drops literal spellings and block labels and sorts sensitivity lists,
    so the result depends only on structure and the mapped names.
    """
    if isinstance(node, tuple):
        return tuple(map_names(v, local, module) for v in node)
    if not isinstance(node, A.Node):
        return node
    changes = {}
    for f in fields(node):
        if f.name == "span":
            continue
        changes[f.name] = map_names(getattr(node, f.name), local, module)
    if isinstance(node, A.Identifier):
        changes["name"] = local(node.name)
    elif isinstance(node, A.SensItem):
        changes["signal"] = local(node.signal)
    elif isinstance(node, A.Sensitivity):
        changes["items"] = tuple(sorted(changes["items"], key=lambda s: (s.edge or "", s.signal)))
    elif isinstance(node, A.NetDecl):
        changes["names"] = tuple(local(n) for n in node.names)
    elif isinstance(node, A.Instantiation):
        changes["name"] = None if node.name is None else local(node.name)
        changes["module"] = module(node.module)
    elif isinstance(node, (A.Parameter, A.Port)):
        changes["name"] = local(node.name)
    elif isinstance(node, A.ModuleDecl):
        changes["name"] = module(node.name)
    elif isinstance(node, A.Number):
        changes["text"] = ""
    elif isinstance(node, A.Block):
        changes["label"] = None
    return type(node)(**changes, span=node.span)


def local_names(node) -> Iterator[str]:
    """Local identifier occurrences in canonical traversal order."""
    if isinstance(node, tuple):
        for v in node:
            yield from local_names(v)
        return
    if not isinstance(node, A.Node):
        return
    if isinstance(node, A.Identifier):
        yield node.name
    elif isinstance(node, A.SensItem):
        yield node.signal
    elif isinstance(node, (A.Parameter, A.Port)):
        yield node.name
        yield from local_names(node.range)
        if isinstance(node, A.Parameter):
            yield from local_names(node.value)
    elif isinstance(node, A.NetDecl):
        yield from local_names(node.range)
        yield from node.names
    elif isinstance(node, A.Instantiation):
        if node.name is not None:
            yield node.name
        yield from local_names(node.parameters)
        yield from local_names(node.connections)
    elif isinstance(node, A.AlwaysBlock):
        yield from local_names(node.body)
        yield from local_names(node.sensitivity)
    else:
        for _, value in A.node_fields(node):
            yield from local_names(value)


# -- normalization ----------------------------------------------------------------


def _fold(expr: A.Expr) -> A.Expr:
    if isinstance(expr, A.Number) or not is_literal_only(expr):
        return expr
    try:
        value, width = const_eval(expr)
    except NotConstant:
        return expr
    return A.Number(width, value, span=expr.span)


def _fold_range(r: Optional[A.Range]) -> Optional[A.Range]:
    if r is None:
        return None
    return A.Range(_fold(r.msb), _fold(r.lsb), span=r.span)


def _flatten(stmt: A.Stmt) -> A.Stmt:
    """Splice nested blocks and unwrap single-statement blocks; order is kept."""
    if isinstance(stmt, A.Block):
        out: list[A.Stmt] = []
        for s in stmt.stmts:
            s = _flatten(s)
            out.extend(s.stmts if isinstance(s, A.Block) else (s,))
        if len(out) == 1:
            return out[0]
        return A.Block(tuple(out), span=stmt.span)
    if isinstance(stmt, A.If):
        other = None if stmt.otherwise is None else _flatten(stmt.otherwise)
        return A.If(stmt.cond, _flatten(stmt.then), other, span=stmt.span)
    if isinstance(stmt, A.Case):
        items = tuple(A.CaseItem(ci.labels, _flatten(ci.body), span=ci.span) for ci in stmt.items)
        default = None if stmt.default is None else _flatten(stmt.default)
        return A.Case(stmt.expr, items, default, span=stmt.span)
    return stmt


def _positional(conns: tuple[A.Connection, ...], names: Sequence[str]) -> tuple[A.Connection, ...]:
    if not conns or conns[0].port is None:
        return conns
    by_port = {c.port: c for c in conns}
    if len(by_port) != len(conns) or not set(by_port) <= set(names):
        return tuple(sorted(conns, key=lambda c: c.port))
    return tuple(
        A.Connection(None, by_port[n].expr if n in by_port else None, span=by_port[n].span if n in by_port else A.NO_SPAN)
        for n in names
    )


def _normalize_module(m: A.ModuleDecl, library: dict[str, A.ModuleDecl]) -> A.ModuleDecl:
    items: list = []
    for item in m.items:
        if isinstance(item, A.NetDecl):
            rng = _fold_range(item.range)
            items.extend(A.NetDecl(item.net, rng, (n,), span=item.span) for n in item.names)
        elif isinstance(item, A.Instantiation):
            child = library.get(item.module)
            conns, params = item.connections, item.parameters
            if child is not None:
                conns = _positional(conns, [p.name for p in child.ports])
                params = _positional(params, [p.name for p in child.parameters if not p.local])
            else:
                conns = _positional(conns, [])
                params = _positional(params, [])
            items.append(A.Instantiation(item.module, item.name, conns, params, span=item.span))
        elif isinstance(item, A.AlwaysBlock):
            items.append(A.AlwaysBlock(item.sensitivity, _flatten(item.body), span=item.span))
        else:
            items.append(item)
    params = tuple(
        A.Parameter(p.name, _fold(p.value), p.local, _fold_range(p.range), span=p.span) for p in m.parameters
    )
    ports = tuple(A.Port(p.direction, p.name, _fold_range(p.range), p.net, span=p.span) for p in m.ports)
    return A.ModuleDecl(m.name, params, ports, tuple(items), span=m.span)


# -- item ordering --------------------------------------------------------------


def _declared(m: A.ModuleDecl) -> list[str]:
    names = [p.name for p in m.parameters] + [p.name for p in m.ports]
    for item in m.items:
        if isinstance(item, A.NetDecl):
            names.extend(item.names)
        elif isinstance(item, A.Instantiation) and item.name is not None:
            names.append(item.name)
    return names


def canonical_item_order(m: A.ModuleDecl, module_ref: Callable[[str], str]) -> list[int]:
    """Indices of ``m.items`` in canonical order."""
    items = m.items
    if len(items) <= 1:
        return list(range(len(items)))

    color: dict[str, str] = {name: _PLACEHOLDER for name in _declared(m)}
    for i, p in enumerate(m.parameters):
        color[p.name] = f"param{i}"
    for i, p in enumerate(m.ports):
        color[p.name] = f"port{i}"
    slots = [list(local_names(item)) for item in items]

    def item_hashes(col: Callable[[str], str]) -> list[str]:
        return [_hash(structural_key(map_names(item, col, module_ref))) for item in items]

    round0 = item_hashes(lambda n: _PLACEHOLDER)
    current = round0
    n_classes = (len(set(current)), len(set(color.values())))
    for _ in range(len(items) + len(color) + 1):
        contributions: dict[str, list] = {name: [] for name in color}
        for j, names in enumerate(slots):
            for pos, name in enumerate(names):
                if name in contributions:
                    contributions[name].append((current[j], pos))
        color = {name: _hash(color[name], sorted(contributions[name])) for name in color}
        current = item_hashes(lambda n: color.get(n, n))
        refined = (len(set(current)), len(set(color.values())))
        if refined == n_classes:
            break
        n_classes = refined
    return sorted(range(len(items)), key=lambda j: (current[j], round0[j], j))


def _canonical_module(m: A.ModuleDecl, module_ref: Callable[[str], str]) -> A.ModuleDecl:
    order = canonical_item_order(m, module_ref)
    reordered = A.ModuleDecl(m.name, m.parameters, m.ports, tuple(m.items[j] for j in order), span=m.span)
    index: dict[str, str] = {}
    declared = set(_declared(m))
    for name in local_names((reordered.parameters, reordered.ports, reordered.items)):
        if name in declared and name not in index:
            index[name] = f"n{len(index)}"
    return map_names(reordered, lambda n: index.get(n, n), module_ref)


def _dependency_order(tree: A.SyntaxTree) -> list[int]:
    """Module indices with instantiated modules before their users."""
    by_name = {m.name: i for i, m in enumerate(tree.modules)}
    state: dict[int, int] = {}
    out: list[int] = []

    def visit(i: int) -> None:
        if state.get(i) == 2 or state.get(i) == 1:
            return
        state[i] = 1
        for item in tree.modules[i].items:
            if isinstance(item, A.Instantiation) and item.module in by_name:
                visit(by_name[item.module])
        state[i] = 2
        out.append(i)

    for i in range(len(tree.modules)):
        visit(i)
    return out


def canonicalize(tree: A.SyntaxTree) -> CanonicalForm:
    library = {m.name: m for m in tree.modules}
    normalized = [_normalize_module(m, library) for m in tree.modules]
    tokens: dict[str, str] = {}
    local: list[Optional[A.ModuleDecl]] = [None] * len(normalized)

    for i in _dependency_order(tree):
        m = normalized[i]
        own = m.name

        def ref(name: str, own=own) -> str:
            if name == own:
                return "self"
            if name in library:
                return tokens.get(name, f"cycle:{name}")
            return name

        canon = _canonical_module(m, ref)
        local[i] = canon
        tokens[own] = "mod:" + _hash(structural_key(canon))

    order = sorted(range(len(normalized)), key=lambda i: (tokens[normalized[i].name], i))
    final_names: dict[str, str] = {}
    for rank, i in enumerate(order):
        final_names.setdefault(tokens[normalized[i].name], f"M{rank}")

    modules = []
    for rank, i in enumerate(order):
        own_name = f"M{rank}"

        def rename(token: str, own_name=own_name) -> str:
            if token == "self":
                return own_name
            return final_names.get(token, token)

        modules.append(map_names(local[i], lambda n: n, rename))
    canonical = A.SyntaxTree(tuple(modules), span=tree.span)
    return CanonicalForm(canonical, tree_digest(canonical))


# -- comparison --------------------------------------------------------------


def first_difference(a, b, path: str = "") -> Optional[str]:
    """Depth-first node comparison; returns the path of the first mismatch."""
    if isinstance(a, A.Node) and isinstance(b, A.Node):
        if type(a) is not type(b):
            return f"{path or '<root>'}: {a.kind} != {b.kind}"
        for (name, va), (_, vb) in zip(A.node_fields(a, structural=True), A.node_fields(b, structural=True)):
            diff = first_difference(va, vb, f"{path}.{name}" if path else name)
            if diff is not None:
                return diff
        return None
    if isinstance(a, tuple) and isinstance(b, tuple):
        if len(a) != len(b):
            return f"{path}: {len(a)} children != {len(b)} children"
        for i, (x, y) in enumerate(zip(a, b)):
            diff = first_difference(x, y, f"{path}[{i}]")
            if diff is not None:
                return diff
        return None
    if a != b:
        return f"{path}: {a!r} != {b!r}"
    return None


def structurally_equivalent(a: A.SyntaxTree, b: A.SyntaxTree) -> bool:
    return canonicalize(a) == canonicalize(b)


def explain(a: A.SyntaxTree, b: A.SyntaxTree) -> Optional[str]:
    """Path of the first differing canonical node, or None when equivalent."""
    return first_difference(canonicalize(a).tree, canonicalize(b).tree)


def partition(candidates: Iterable[A.SyntaxTree]) -> EquivClassPartition:
    forms = [canonicalize(t) for t in candidates]
    return partition_forms(forms)


def partition_forms(forms: Sequence[CanonicalForm]) -> EquivClassPartition:
    classes: list[list[int]] = []
    by_digest: dict[str, list[int]] = {}
    for i, form in enumerate(forms):
        bucket = by_digest.setdefault(form.digest, [])
        for cid in bucket:
            if first_difference(forms[classes[cid][0]].tree, form.tree) is None:
                classes[cid].append(i)
                break
        else:
            bucket.append(len(classes))
            classes.append([i])
    return EquivClassPartition(
        tuple(tuple(c) for c in classes),
        tuple(c[0] for c in classes),
        tuple(forms[c[0]].digest for c in classes),
    )
