"""Stationary Bratteli diagrams of a k-graph and their finite paths.

Level ``n >= 1`` of the diagram carries the edges of colour
``pattern[(n - 1) % len(pattern)]``.  The default pattern ``(0, 1, ..., k-1)``
is the rainbow diagram; a pattern with ``J_1`` zeros, then ``J_2`` ones, and
so on gives the J-rainbow diagram.

Paths of length ``n`` are enumerated lexicographically by
``(range, source, mult)`` edge by edge.  In that order the extensions of a
path form a contiguous block at every deeper level, so a function constant on
length-``n`` cylinders is a dense vector and refinement is ``np.repeat``.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DepthTooLarge,
    InvalidPath,
    NotRainbowMultiple,
    ParseError,
    SourceRangeMismatch,
)
from .kgraph import KGraph

DEFAULT_MAX_PATHS = 10**7

Edge = tuple[int, int, int]


def max_paths() -> int:
    """Enumeration cap; the ``KGS_MAX_PATHS`` environment variable overrides it."""
    raw = os.environ.get("KGS_MAX_PATHS")
    return int(raw) if raw else DEFAULT_MAX_PATHS


@dataclass(frozen=True)
class BrattEdge:
    level: int
    color: int
    range_vertex: int
    source_vertex: int
    mult: int


@dataclass(frozen=True)
class FinitePath:
    """A finite path: a root vertex and ``(range, source, mult)`` triples.

    Edge ``i`` (0-based) lies on level ``i + 1``.
    """

    root: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(int(v) for v in e) for e in self.edges))
        prev = self.root
        for i, (r, s, m) in enumerate(self.edges):
            if r != prev:
                raise InvalidPath(f"edge {i} has range {r}, expected {prev}")
            if m < 0:
                raise InvalidPath(f"edge {i} has negative multiplicity index")
            prev = s

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def source(self) -> int:
        return self.edges[-1][1] if self.edges else self.root

    def prefix(self, n: int) -> FinitePath:
        return FinitePath(self.root, self.edges[:n])

    def extend(self, edge: Edge) -> FinitePath:
        return FinitePath(self.root, self.edges + (tuple(edge),))

    def __str__(self) -> str:
        return format_path(self)


EQUAL = "EQUAL"


@dataclass(frozen=True)
class LazyInfinitePath:
    """Eventually periodic infinite path ``prefix`` followed by ``cycle`` forever.

    ``cycle`` is a tuple of edge triples forming a loop at ``prefix.source``;
    its length must be a positive multiple of the colour period so the
    repetition respects the level colouring.
    """

    prefix: FinitePath
    cycle: tuple[Edge, ...]

    def __post_init__(self):
        cyc = tuple(tuple(int(v) for v in e) for e in self.cycle)
        object.__setattr__(self, "cycle", cyc)
        if not cyc:
            raise InvalidPath("cycle must be non-empty")
        FinitePath(self.prefix.source, cyc)
        if cyc[-1][1] != cyc[0][0]:
            raise InvalidPath("cycle is not a loop")

    @property
    def root(self) -> int:
        return self.prefix.root

    def edge(self, i: int) -> Edge:
        n = len(self.prefix.edges)
        if i < n:
            return self.prefix.edges[i]
        return self.cycle[(i - n) % len(self.cycle)]

    def head(self, n: int) -> FinitePath:
        return FinitePath(self.root, tuple(self.edge(i) for i in range(n)))


@dataclass(frozen=True)
class Level:
    """Arrays describing all paths of one length, in enumeration order."""

    n: int
    source: np.ndarray
    parent: np.ndarray
    range_: np.ndarray
    mult: np.ndarray
    starts: np.ndarray  # children of parent i are indices starts[i]:starts[i+1]

    @property
    def count(self) -> int:
        return len(self.source)


class Diagram:
    """Stationary Bratteli diagram of ``g`` with a periodic level colouring.

    Instances cache per-level arrays; use :func:`diagram` to share them.
    """

    def __init__(self, g: KGraph, pattern: Sequence[int] | None = None):
        self.graph = g
        self.pattern = tuple(range(g.k)) if pattern is None else tuple(int(c) for c in pattern)
        if not self.pattern or any(not 0 <= c < g.k for c in self.pattern):
            raise ValueError(f"invalid colour pattern {self.pattern}")
        self.mats = g.matrices
        self.nv = g.n_vertices
        self._levels: list[Level] = []
        self._children = []
        for a in self.mats:
            rs = a.sum(axis=1)
            width = max(int(rs.max()), 1)
            src = np.zeros((self.nv, width), dtype=np.int64)
            mult = np.zeros((self.nv, width), dtype=np.int64)
            for v in range(self.nv):
                src[v, :rs[v]] = np.repeat(np.arange(self.nv), a[v])
                mult[v, :rs[v]] = np.concatenate([np.arange(c) for c in a[v]])
            self._children.append((rs, src, mult))
        self._anc: dict[tuple[int, int], np.ndarray] = {}

    @property
    def period(self) -> int:
        return len(self.pattern)

    def color(self, level: int) -> int:
        """0-based colour of the edges on ``level >= 1``."""
        return self.pattern[(level - 1) % self.period]

    def degree(self, n: int) -> np.ndarray:
        """Degree vector of any path of length ``n``."""
        q, t = divmod(n, self.period)
        d = np.zeros(self.graph.k, dtype=np.int64)
        for c in self.pattern:
            d[c] += q
        for c in self.pattern[:t]:
            d[c] += 1
        return d

    def transfer(self, start_level: int, n: int) -> np.ndarray:
        """Exact integer matrix counting paths on levels ``start_level+1 .. start_level+n``."""
        out = np.eye(self.nv, dtype=np.int64).astype(object)
        for lev in range(start_level + 1, start_level + n + 1):
            out = out.dot(self.mats[self.color(lev)].astype(object))
        return out

    def count(self, n: int) -> int:
        if n < len(self._levels):
            return self._levels[n].count
        return int(self.transfer(0, n).sum())

    def level(self, n: int) -> Level:
        """Arrays for the paths of length ``n`` (built on demand, cached)."""
        if n < len(self._levels):
            return self._levels[n]
        cap = max_paths()
        if self.count(n) > cap:
            raise DepthTooLarge(f"{self.count(n)} paths of length {n} exceed the cap {cap}")
        if not self._levels:
            v = np.arange(self.nv, dtype=np.int64)
            neg = np.full(self.nv, -1, dtype=np.int64)
            self._levels.append(Level(0, v, neg, neg, neg, np.zeros(1, dtype=np.int64)))
        while len(self._levels) <= n:
            prev = self._levels[-1]
            lev = len(self._levels)
            rs, src, mult = self._children[self.color(lev)]
            counts = rs[prev.source]
            starts = np.concatenate([[0], np.cumsum(counts)])
            parent = np.repeat(np.arange(prev.count), counts)
            offset = np.arange(starts[-1]) - starts[parent]
            rng = prev.source[parent]
            self._levels.append(Level(lev, src[rng, offset], parent, rng, mult[rng, offset], starts))
        return self._levels[n]

    def ancestors(self, n: int, m: int) -> np.ndarray:
        """Index at length ``m`` of the length-``m`` prefix of each length-``n`` path."""
        if m == n:
            return np.arange(self.level(n).count)
        key = (n, m)
        if key not in self._anc:
            idx = self.level(n).parent
            for lev in range(n - 1, m, -1):
                idx = self.level(lev).parent[idx]
            self._anc[key] = idx
        return self._anc[key]

    def block(self, m: int, i: int, n: int) -> tuple[int, int]:
        """Index range at length ``n`` of the extensions of path ``i`` of length ``m``."""
        lo, hi = i, i + 1
        for lev in range(m + 1, n + 1):
            starts = self.level(lev).starts
            lo, hi = int(starts[lo]), int(starts[hi])
        return lo, hi

    def index(self, p: FinitePath) -> int:
        """Position of ``p`` in the enumeration of paths of length ``len(p)``."""
        self.check(p)
        idx = p.root
        for lev, (r, s, m) in enumerate(p.edges, start=1):
            a = self.mats[self.color(lev)]
            rank = int(a[r, :s].sum()) + m
            idx = int(self.level(lev).starts[idx]) + rank
        return idx

    def path(self, n: int, i: int) -> FinitePath:
        """The ``i``-th path of length ``n``."""
        edges = []
        for lev in range(n, 0, -1):
            L = self.level(lev)
            edges.append((int(L.range_[i]), int(L.source[i]), int(L.mult[i])))
            i = int(L.parent[i])
        return FinitePath(i, tuple(reversed(edges)))

    def paths(self, n: int) -> list[FinitePath]:
        return [self.path(n, i) for i in range(self.level(n).count)]

    def check(self, p: FinitePath, offset: int = 0) -> None:
        """Raise :class:`InvalidPath` unless ``p`` is a path of this diagram.

        ``offset`` shifts the level of the first edge (used for cycles).
        """
        if not 0 <= p.root < self.nv:
            raise InvalidPath(f"root {p.root} is not a vertex")
        for lev, (r, s, m) in enumerate(p.edges, start=offset + 1):
            if not 0 <= s < self.nv:
                raise InvalidPath(f"source {s} on level {lev} is not a vertex")
            avail = int(self.mats[self.color(lev)][r, s])
            if m >= avail:
                raise InvalidPath(
                    f"edge ({r},{s},{m}) on level {lev}: only {avail} edges of colour "
                    f"{self.color(lev) + 1} from {s} to {r}")

    def check_infinite(self, x: LazyInfinitePath) -> None:
        self.check(x.prefix)
        if len(x.cycle) % self.period:
            raise NotRainbowMultiple(
                f"cycle length {len(x.cycle)} is not a multiple of {self.period}")
        self.check(FinitePath(x.prefix.source, x.cycle), offset=len(x.prefix))


@lru_cache(maxsize=64)
def diagram(g: KGraph, pattern: tuple[int, ...] | None = None) -> Diagram:
    """Shared, cached :class:`Diagram` for ``g``."""
    return Diagram(g, pattern)


def j_pattern(J: Sequence[int]) -> tuple[int, ...]:
    """Level colouring with ``J[0]`` edges of colour 1, then ``J[1]`` of colour 2, ..."""
    if any(int(j) < 1 for j in J):
        raise ValueError(f"J entries must be positive, got {tuple(J)}")
    return tuple(c for c, j in enumerate(J) for _ in range(int(j)))


def enumerate_paths(g: KGraph, n: int, root: int | None = None) -> list[FinitePath]:
    """All paths of length ``n`` (optionally with a given root), in lexicographic order."""
    if n < 0:
        raise ValueError("n must be >= 0")
    d = diagram(g)
    if root is None:
        return d.paths(n)
    lo, hi = d.block(0, root, n)
    return [d.path(n, i) for i in range(lo, hi)]


def iter_paths(g: KGraph, n: int) -> Iterator[FinitePath]:
    d = diagram(g)
    for i in range(d.level(n).count):
        yield d.path(n, i)


def count_paths(g: KGraph, n: int, range_vertex: int, source_vertex: int) -> int:
    """``(A^q A_1 ... A_t)(range, source)`` for ``n = qk + t``, as an exact integer."""
    if n < 0:
        raise ValueError("n must be >= 0")
    q, t = divmod(n, g.k)
    mats = [a.astype(object) for a in g.matrices]
    prod = np.eye(g.n_vertices, dtype=np.int64).astype(object)
    for a in mats:
        prod = prod.dot(a)
    out = np.eye(g.n_vertices, dtype=np.int64).astype(object)
    power = prod
    while q:
        if q & 1:
            out = out.dot(power)
        power = power.dot(power)
        q >>= 1
    for a in mats[:t]:
        out = out.dot(a)
    return int(out[range_vertex, source_vertex])


def degree(p: FinitePath, k: int) -> tuple[int, ...]:
    """Degree ``(q+1, ..., q+1, q, ..., q)`` (``t`` leading entries) for ``|p| = qk + t``."""
    q, t = divmod(len(p), k)
    return tuple(q + 1 if i < t else q for i in range(k))


def concat(lam: FinitePath, eta: FinitePath, k: int) -> FinitePath:
    """The path ``lam`` followed by ``eta``; requires ``|lam|`` to be a multiple of ``k``."""
    if len(lam) % k:
        raise NotRainbowMultiple(f"|lambda| = {len(lam)} is not a multiple of k = {k}")
    if lam.source != eta.root:
        raise SourceRangeMismatch(f"s(lambda) = {lam.source} differs from r(eta) = {eta.root}")
    return FinitePath(lam.root, lam.edges + eta.edges)


def common_prefix(x: LazyInfinitePath, y: LazyInfinitePath) -> FinitePath | str | None:
    """Longest common initial path of ``x`` and ``y``.

    Returns ``None`` when the roots differ, the vertex path at the common root
    when the first edges differ, and :data:`EQUAL` when ``x == y``.
    """
    if x.root != y.root:
        return None
    bound = max(len(x.prefix), len(y.prefix)) + math.lcm(len(x.cycle), len(y.cycle))
    for i in range(bound):
        if x.edge(i) != y.edge(i):
            return x.head(i)
    return EQUAL


_EDGE_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)")


def format_path(p: FinitePath) -> str:
    """Text form ``root:(r,s,m)/(r,s,m)/...``."""
    return f"{p.root}:" + "/".join(f"({r},{s},{m})" for r, s, m in p.edges)


def parse_path(text: str) -> FinitePath:
    """Inverse of :func:`format_path`."""
    root, sep, rest = text.strip().partition(":")
    if not sep or not root.strip().isdigit():
        raise ParseError(f"path {text!r}: expected 'root:(r,s,m)/...'")
    edges = []
    if rest.strip():
        for part in rest.split("/"):
            m = _EDGE_RE.fullmatch(part.strip())
            if not m:
                raise ParseError(f"path {text!r}: bad edge {part!r}")
            edges.append(tuple(int(v) for v in m.groups()))
    try:
        return FinitePath(int(root), tuple(edges))
    except InvalidPath as exc:
        raise ParseError(f"path {text!r}: {exc}") from exc
