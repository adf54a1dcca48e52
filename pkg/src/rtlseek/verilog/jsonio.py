"""Stable JSON encoding of syntax trees (schema ``ast/1``)."""

from __future__ import annotations

import json
from typing import Any

from . import ast as A

SCHEMA = "ast/1"

_NODE_TYPES: dict[str, type] = {
    cls.__name__: cls
    for cls in vars(A).values()
    if isinstance(cls, type) and issubclass(cls, A.Node) and cls is not A.Node
}


def node_to_json(node: Any) -> Any:
    if isinstance(node, A.Node):
        out: dict[str, Any] = {"kind": node.kind, "span": list(node.span)}
        for name, value in A.node_fields(node):
            out[name] = node_to_json(value)
        return out
    if isinstance(node, tuple):
        return [node_to_json(v) for v in node]
    return node


def node_from_json(data: Any) -> Any:
    if isinstance(data, list):
        return tuple(node_from_json(v) for v in data)
    if not isinstance(data, dict):
        return data
    cls = _NODE_TYPES[data["kind"]]
    kwargs = {k: node_from_json(v) for k, v in data.items() if k not in ("kind", "span")}
    return cls(**kwargs, span=tuple(data["span"]))


def tree_to_json(tree: A.SyntaxTree) -> dict:
    return {"schema": SCHEMA, "tree": node_to_json(tree)}


def tree_from_json(doc: dict) -> A.SyntaxTree:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema {doc.get('schema')!r}, expected {SCHEMA!r}")
    return node_from_json(doc["tree"])


def dumps(obj: Any) -> str:
    """Canonical JSON text used for every machine-readable output."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"
