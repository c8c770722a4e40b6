"""Graph documents: JSON parsing, emission and the bundled examples.

A graph document is a JSON object::

    {"k": 2, "vertices": ["v"], "adjacency": [[[2]], [[3]]], "delta": 0.5,
     "metadata": {}}

``vertices``, ``delta`` and ``metadata`` are optional.  Schema errors name
the offending field with a JSON-pointer-like path such as
``adjacency[1][0]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ParseError, SchemaError
from .kgraph import KGraph
from .report import dumps

BUNDLED = ("G1", "G2", "G3", "G4")
_KEYS = ("k", "vertices", "adjacency", "delta", "metadata")


@dataclass
class GraphDocument:
    k: int
    adjacency: list[list[list[int]]]
    vertices: list[str] | None = None
    delta: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_graph(self) -> KGraph:
        return graph_from_document(self)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_matrix(a: Any, i: int, n: int | None) -> int:
    name = f"adjacency[{i}]"
    if not isinstance(a, list) or not a:
        raise SchemaError("must be a non-empty list of rows", name)
    size = len(a) if n is None else n
    if len(a) != size:
        raise SchemaError(f"has {len(a)} rows, expected {size}", name)
    for r, row in enumerate(a):
        if not isinstance(row, list):
            raise SchemaError("row must be a list", f"{name}[{r}]")
        if len(row) != size:
            raise SchemaError(f"row length {len(row)} does not match matrix size {size}",
                              f"{name}[{r}]")
        for c, v in enumerate(row):
            if not _is_int(v):
                raise SchemaError(f"entry {v!r} is not an integer", f"{name}[{r}][{c}]")
    return size


def document_from_obj(obj: Any) -> GraphDocument:
    """Check the schema of an already decoded JSON value."""
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object", "$")
    unknown = sorted(set(obj) - set(_KEYS))
    if unknown:
        raise SchemaError(f"unknown field(s) {', '.join(unknown)}", unknown[0])
    for key in ("k", "adjacency"):
        if key not in obj:
            raise SchemaError("required field is missing", key)
    k = obj["k"]
    if not _is_int(k) or k < 1:
        raise SchemaError("must be a positive integer", "k")
    adj = obj["adjacency"]
    if not isinstance(adj, list):
        raise SchemaError("must be a list of matrices", "adjacency")
    if len(adj) != k:
        raise SchemaError(f"has {len(adj)} matrices, expected k = {k}", "adjacency")
    n = None
    for i, a in enumerate(adj):
        n = _check_matrix(a, i, n)
    vertices = obj.get("vertices")
    if vertices is not None:
        if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
            raise SchemaError("must be a list of strings", "vertices")
        if len(vertices) != n:
            raise SchemaError(f"has {len(vertices)} labels for {n} vertices", "vertices")
        if len(set(vertices)) != len(vertices):
            raise SchemaError("labels must be distinct", "vertices")
    delta = obj.get("delta")
    if delta is not None:
        if not _is_number(delta):
            raise SchemaError("must be a number", "delta")
        delta = float(delta)
    metadata = obj.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SchemaError("must be an object", "metadata")
    return GraphDocument(k, [[list(r) for r in a] for a in adj],
                         list(vertices) if vertices is not None else None, delta, metadata)


def parse_graph(text: str | bytes) -> GraphDocument:
    """Parse a JSON graph document.

    Raises
    ------
    ParseError
        On malformed UTF-8 or JSON, with line and column.
    SchemaError
        On a structural problem, naming the field.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return document_from_obj(obj)


def document_as_dict(doc: GraphDocument) -> dict:
    out: dict[str, Any] = {"k": doc.k}
    if doc.vertices is not None:
        out["vertices"] = doc.vertices
    out["adjacency"] = doc.adjacency
    if doc.delta is not None:
        out["delta"] = doc.delta
    out["metadata"] = doc.metadata
    return out


def emit_graph(doc: GraphDocument) -> str:
    return dumps(document_as_dict(doc))


def graph_from_document(doc: GraphDocument) -> KGraph:
    return KGraph(doc.adjacency, doc.vertices, doc.delta)


def document_from_graph(g: KGraph, metadata: dict | None = None) -> GraphDocument:
    return GraphDocument(g.k, [a.astype(int).tolist() for a in g.adjacency], list(g.vertices),
                         g.delta_default, dict(metadata or {}))


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled graph {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("kgspectral").joinpath("data", f"{name}.json").read_text("utf-8")


def load_bundled(name: str) -> GraphDocument:
    return parse_graph(bundled_text(name))


def load_graph(source: str) -> GraphDocument:
    """A bundled name (``G1`` ... ``G4``) or a path to a JSON file."""
    if source in BUNDLED and not Path(source).exists():
        return load_bundled(source)
    try:
        data = Path(source).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from exc
    return parse_graph(data)
