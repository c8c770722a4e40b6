"""Finite k-graphs given by commuting adjacency matrices.

A :class:`KGraph` stores ``k`` square non-negative integer matrices
``A_1, ..., A_k``.  Entry ``A_i[v, w]`` counts the colour-``i`` edges with
range ``v`` and source ``w``.  :func:`validate` checks the structural
hypotheses, :func:`perron` computes the common Perron-Frobenius vector and
:func:`period_and_cesaro` the period of ``A = A_1 ... A_k`` together with the
Cesaro limits ``A^(j) = lim_m A^(mp+j) / rho^(mp+j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Any, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    DiameterHypothesisFailed,
    DimensionMismatch,
    GraphNotAdmitted,
    NegativeEntry,
    NoConvergence,
    NonIntegerEntry,
    NotCommonEigenvector,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**6

CHECKS = ("commutation", "source_free", "strongly_connected", "diameter", "rho_gt_one")


@dataclass(frozen=True, eq=False)
class KGraph:
    """A finite k-graph described by its adjacency matrices.

    Parameters
    ----------
    adjacency : sequence of array_like
        ``k`` square matrices, one per colour.
    vertices : sequence of str, optional
        Vertex labels in matrix order.  Defaults to ``"0", "1", ...``.
    delta_default : float, optional
        Preferred exponent for the weight ``w_delta``.

    Notes
    -----
    Construction only normalises the data.  Structural checks are performed
    by :func:`validate`, which every downstream operation runs first.
    """

    adjacency: tuple[np.ndarray, ...]
    vertices: tuple[str, ...] = ()
    delta_default: float | None = None

    def __init__(self, adjacency: Sequence[Any], vertices: Sequence[str] | None = None,
                 delta_default: float | None = None):
        mats = []
        for i, a in enumerate(adjacency):
            try:
                arr = np.array(a)
            except ValueError as exc:
                raise DimensionMismatch(f"A_{i + 1} is ragged") from exc
            if arr.ndim != 2:
                raise DimensionMismatch(f"A_{i + 1} is not a matrix (ndim={arr.ndim})")
            arr.setflags(write=False)
            mats.append(arr)
        if not mats:
            raise DimensionMismatch("at least one adjacency matrix is required")
        n = mats[0].shape[0]
        if vertices is None:
            vertices = [str(v) for v in range(n)]
        object.__setattr__(self, "adjacency", tuple(mats))
        object.__setattr__(self, "vertices", tuple(str(v) for v in vertices))
        object.__setattr__(self, "delta_default", delta_default)

    @property
    def k(self) -> int:
        return len(self.adjacency)

    @property
    def n_vertices(self) -> int:
        return self.adjacency[0].shape[0]

    @property
    def matrices(self) -> tuple[np.ndarray, ...]:
        """Adjacency matrices as ``int64`` arrays."""
        return tuple(a.astype(np.int64) for a in self.adjacency)

    def product(self) -> np.ndarray:
        """Integer product ``A = A_1 A_2 ... A_k`` as an object array (exact)."""
        mats = [a.astype(object) for a in self.matrices]
        return reduce(np.dot, mats)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KGraph):
            return NotImplemented
        return (self.vertices == other.vertices and self.k == other.k
                and self.delta_default == other.delta_default
                and all(a.shape == b.shape and np.array_equal(a, b)
                        for a, b in zip(self.adjacency, other.adjacency)))

    def __hash__(self) -> int:
        return hash((self.vertices, tuple(a.tobytes() for a in self.matrices)))


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the five structural checks, keyed by name."""

    checks: dict[str, CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def measure_ok(self) -> bool:
        return all(c.passed for name, c in self.checks.items() if name != "diameter")

    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c.passed]

    def require(self, spectral: bool = False) -> None:
        """Raise unless the checks needed by the caller pass.

        ``spectral=True`` additionally requires the diameter hypothesis.
        """
        missing = [n for n in self.failures() if n != "diameter"]
        if missing:
            raise GraphNotAdmitted(f"graph fails checks: {', '.join(missing)}", self)
        if spectral and not self.checks["diameter"].passed:
            raise DiameterHypothesisFailed(
                f"diameter hypothesis fails: {self.checks['diameter'].detail}", self)

    def as_dict(self) -> dict:
        return {name: {"passed": c.passed, **({"detail": c.detail} if c.detail else {})}
                for name, c in self.checks.items()}


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Perron-Frobenius and Cesaro data of an admitted k-graph.

    ``period`` and ``cesaro`` are ``None`` until :func:`period_and_cesaro`
    has been run.
    """

    rho: np.ndarray
    x: np.ndarray
    period: int | None = None
    cesaro: tuple[np.ndarray, ...] | None = None
    product_irreducible: bool | None = None

    @property
    def rho_prod(self) -> float:
        return float(np.prod(self.rho))

    @property
    def log_rho(self) -> np.ndarray:
        return np.log(self.rho)

    @property
    def cantor_ok(self) -> bool:
        return self.rho_prod > 1.0


def _check_entries(g: KGraph) -> None:
    n = g.adjacency[0].shape
    for i, a in enumerate(g.adjacency):
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"A_{i + 1} is not square: shape {a.shape}")
        if a.shape != n:
            raise DimensionMismatch(f"A_{i + 1} has shape {a.shape}, A_1 has shape {n}")
        if n[0] < 1:
            raise DimensionMismatch("matrices must have dimension >= 1")
        if not np.issubdtype(a.dtype, np.number) or np.iscomplexobj(a):
            raise NonIntegerEntry(f"A_{i + 1} has non-numeric entries")
        if np.any(a < 0):
            v, w = map(int, np.argwhere(a < 0)[0])
            raise NegativeEntry(f"A_{i + 1}[{v},{w}] = {a[v, w]} < 0")
        if np.any(a != np.round(a)):
            v, w = map(int, np.argwhere(a != np.round(a))[0])
            raise NonIntegerEntry(f"A_{i + 1}[{v},{w}] = {a[v, w]} is not an integer")
    if len(g.vertices) != n[0]:
        raise DimensionMismatch(f"{len(g.vertices)} vertex labels for {n[0]} vertices")


def _spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a.astype(float)))))


def validate(g: KGraph) -> ValidationReport:
    """Run the five structural checks.

    Raises
    ------
    DimensionMismatch
        If the matrices are not square of a common size.
    NegativeEntry
        If an entry is negative.
    """
    _check_entries(g)
    mats = [a.astype(object) for a in g.matrices]
    checks: dict[str, CheckResult] = {}

    bad = None
    for i in range(g.k):
        for j in range(i + 1, g.k):
            ab, ba = mats[i].dot(mats[j]), mats[j].dot(mats[i])
            diff = np.argwhere(ab != ba)
            if len(diff):
                v, w = map(int, diff[0])
                bad = {"pair": [i + 1, j + 1], "entry": [v, w],
                       "AiAj": int(ab[v, w]), "AjAi": int(ba[v, w])}
                break
        if bad:
            break
    checks["commutation"] = CheckResult(bad is None, bad or {})

    zero_rows = [[i + 1, int(v)] for i, a in enumerate(g.matrices)
                 for v in np.flatnonzero(a.sum(axis=1) == 0)]
    checks["source_free"] = CheckResult(not zero_rows, {"zero_rows": zero_rows} if zero_rows else {})

    support = sum(a for a in g.matrices) > 0
    n_comp, labels = connected_components(support, directed=True, connection="strong")
    sc_detail = {} if n_comp == 1 else {"components": int(n_comp), "labels": labels.tolist()}
    checks["strongly_connected"] = CheckResult(n_comp == 1, sc_detail)

    thin = [[i + 1, int(v), int(a.sum(axis=1)[v])] for i, a in enumerate(g.matrices)
            for v in np.flatnonzero(a.sum(axis=1) < 2)]
    checks["diameter"] = CheckResult(not thin, {"rows_below_2": thin} if thin else {})

    radii = [_spectral_radius(a) for a in g.matrices]
    small = [[i + 1, r] for i, r in enumerate(radii) if not r > 1.0]
    checks["rho_gt_one"] = CheckResult(not small, {"rho_le_1": small} if small else {})
    return ValidationReport(checks)


def perron(g: KGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SpectralData:
    """Common positive eigenvector ``x`` (sum 1) and spectral radii ``rho_i``.

    Power iteration runs on ``I + S`` with ``S = sum_i A_i``; the shift makes
    the iteration converge for periodic ``S`` without changing ``x``.
    """
    _check_entries(g)
    mats = [a.astype(float) for a in g.matrices]
    n = g.n_vertices
    t = np.eye(n) + sum(mats)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        y = t @ x
        y /= y.sum()
        if np.max(np.abs(y - x)) < tol:
            x = y
            break
        x = y
    else:
        raise NoConvergence(f"power iteration did not reach tol={tol} in {max_iter} steps")
    if np.any(x <= 0):
        raise NoConvergence("Perron vector has non-positive entries; is S irreducible?")
    x = x / x.sum()

    rho = np.empty(g.k)
    for i, a in enumerate(mats):
        ratios = (a @ x) / x
        rho[i] = float((a @ x).sum())
        spread = float(np.max(ratios) - np.min(ratios))
        if spread > max(1e3 * tol, 1e-9) * max(rho[i], 1.0):
            raise NotCommonEigenvector(
                f"(A_{i + 1} x)_v / x_v varies by {spread:.3e} across vertices")
    return SpectralData(rho=rho, x=x)


def _bfs_period(adj: np.ndarray, nodes: np.ndarray) -> int:
    """Period of the strongly connected subgraph on ``nodes`` (0 if acyclic)."""
    sub = adj[np.ix_(nodes, nodes)]
    level = {0: 0}
    queue = [0]
    g = 0
    while queue:
        u = queue.pop(0)
        for v in np.flatnonzero(sub[u]):
            v = int(v)
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g)


def support_period(a: np.ndarray) -> tuple[int, bool]:
    """Period of the support digraph of ``a`` and whether ``a`` is irreducible.

    For reducible ``a`` the period is the lcm of the periods of its cyclic
    strongly connected components.
    """
    adj = np.asarray(a) != 0
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    period = 1
    for c in range(n_comp):
        nodes = np.flatnonzero(labels == c)
        p = _bfs_period(adj, nodes)
        if p:
            period = math.lcm(period, p)
    return period, n_comp == 1


def period_and_cesaro(g: KGraph, sd: SpectralData, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> SpectralData:
    """Complete ``sd`` with the period of ``A`` and its Cesaro limits.

    ``A^(0) = lim_m (A/rho)^(mp)`` is obtained by iterating until the sup-norm
    difference of successive iterates drops below ``tol``; then
    ``A^(j) = (A/rho)^j A^(0)``.
    """
    prod = g.product()
    period, irreducible = support_period(prod != 0)
    b = prod.astype(float) / sd.rho_prod
    step = np.linalg.matrix_power(b, period)
    q = step.copy()
    for _ in range(max_iter):
        nxt = q @ step
        if np.max(np.abs(nxt - q)) < tol:
            q = nxt
            break
        q = nxt
    else:
        raise NoConvergence(f"Cesaro limit did not stabilise within {max_iter} periods")
    limits = [q]
    for _ in range(1, period):
        limits.append(b @ limits[-1])
    for j, lim in enumerate(limits):
        lim[np.abs(lim) < tol] = 0.0
        if np.any(lim < 0) or np.any(lim.max(axis=1) <= 0):
            raise NoConvergence(f"Cesaro limit A^({j}) has a row without positive entry")
        lim.setflags(write=False)
    return replace(sd, period=period, cesaro=tuple(limits), product_irreducible=irreducible)


def spectral_data(g: KGraph, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> SpectralData:
    """:func:`perron` followed by :func:`period_and_cesaro`."""
    return period_and_cesaro(g, perron(g, tol, max_iter), tol, max_iter)
