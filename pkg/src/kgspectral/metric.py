"""Weights, ultrametric and the measure ``M`` on the infinite path space.

For a path ``lam`` of degree ``d`` the measure of its cylinder is
``M([lam]) = rho^{-d} x_{s(lam)}`` and its weight is
``w_delta(lam) = (rho^{d})^{-1/delta} x_{s(lam)}``, where
``rho^{d} = prod_i rho_i^{d_i}``.  All values are evaluated from
``log rho_i`` so deep levels do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bratteli import Diagram, FinitePath, LazyInfinitePath, common_prefix, diagram
from .errors import InvalidDelta
from .kgraph import DEFAULT_TOL, KGraph, SpectralData, ValidationReport, spectral_data, validate


@dataclass(frozen=True, eq=False)
class WeightContext:
    """A validated graph with its spectral data and weight exponent ``delta``."""

    graph: KGraph
    sd: SpectralData
    delta: float
    report: ValidationReport
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise InvalidDelta(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def x(self) -> np.ndarray:
        return self.sd.x

    @property
    def diameter_ok(self) -> bool:
        return self.report.checks["diameter"].passed

    def require_spectral(self) -> None:
        """Raise :class:`DiameterHypothesisFailed` if the graph is not fully admitted."""
        self.report.require(spectral=True)

    def with_delta(self, delta: float) -> WeightContext:
        return WeightContext(self.graph, self.sd, delta, self.report, self._cache)

    def diagram(self, pattern: tuple[int, ...] | None = None) -> Diagram:
        return diagram(self.graph, pattern)

    def log_scale(self, d) -> float:
        """``log rho^{d}`` for a degree vector ``d``."""
        return float(np.dot(np.asarray(d, dtype=float), self.sd.log_rho))

    def log_measures(self, n: int, pattern: tuple[int, ...] | None = None) -> np.ndarray:
        dia = self.diagram(pattern)
        return np.log(self.x)[dia.level(n).source] - self.log_scale(dia.degree(n))

    def measures(self, n: int, pattern: tuple[int, ...] | None = None) -> np.ndarray:
        """``M([lam])`` for every path of length ``n``, in enumeration order."""
        key = ("M", n, pattern)
        if key not in self._cache:
            dia = self.diagram(pattern)
            vals = self.x[dia.level(n).source] * np.exp(-self.log_scale(dia.degree(n)))
            vals.setflags(write=False)
            self._cache[key] = vals
        return self._cache[key]

    def weights(self, n: int) -> np.ndarray:
        """``w_delta(lam)`` for every path of length ``n`` of the rainbow diagram."""
        key = ("w", n, self.delta)
        if key not in self._cache:
            dia = self.diagram()
            vals = self.x[dia.level(n).source] * np.exp(-self.log_scale(dia.degree(n)) / self.delta)
            vals.setflags(write=False)
            self._cache[key] = vals
        return self._cache[key]


def make_context(g: KGraph, delta: float | None = None, tol: float = DEFAULT_TOL) -> WeightContext:
    """Validate ``g`` and compute everything the downstream modules need.

    Raises :class:`GraphNotAdmitted` when a check other than the diameter
    hypothesis fails.  ``delta`` defaults to ``g.delta_default`` or 0.5.
    """
    report = validate(g)
    report.require(spectral=False)
    if delta is None:
        delta = g.delta_default if g.delta_default is not None else 0.5
    if not (0.0 < delta < 1.0):
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    return WeightContext(g, spectral_data(g, tol), float(delta), report)


def _degree(ctx: WeightContext, p: FinitePath) -> np.ndarray:
    dia = ctx.diagram()
    dia.check(p)
    return dia.degree(len(p))


def weight(ctx: WeightContext, p: FinitePath) -> float:
    """``w_delta(p) = (rho^{d(p)})^{-1/delta} x_{s(p)}``."""
    return float(ctx.x[p.source] * np.exp(-ctx.log_scale(_degree(ctx, p)) / ctx.delta))


def log_measure_M(ctx: WeightContext, p: FinitePath) -> float:
    return float(np.log(ctx.x[p.source]) - ctx.log_scale(_degree(ctx, p)))


def measure_M(ctx: WeightContext, p: FinitePath) -> float:
    """``M([p]) = rho^{-d(p)} x_{s(p)}``."""
    return float(ctx.x[p.source] * np.exp(-ctx.log_scale(_degree(ctx, p))))


def distance(ctx: WeightContext, x: LazyInfinitePath, y: LazyInfinitePath) -> float:
    """Ultrametric ``d(x, y) = w(x ^ y)``; 1 for different roots, 0 for ``x == y``."""
    dia = ctx.diagram()
    dia.check_infinite(x)
    dia.check_infinite(y)
    p = common_prefix(x, y)
    if p is None:
        return 1.0
    if isinstance(p, str):
        return 0.0
    return weight(ctx, p)


def diam(ctx: WeightContext, p: FinitePath) -> float:
    """Diameter of ``[p]``, equal to ``w_delta(p)`` under the diameter hypothesis."""
    ctx.require_spectral()
    return weight(ctx, p)


@dataclass(frozen=True)
class CylinderMeasureTable:
    """``M`` on all cylinders of one length, in enumeration order."""

    depth: int
    paths: tuple[FinitePath, ...]
    values: np.ndarray
    log_values: np.ndarray

    def as_dict(self) -> dict[FinitePath, float]:
        return dict(zip(self.paths, map(float, self.values)))


def cylinder_measures(ctx: WeightContext, n: int) -> CylinderMeasureTable:
    dia = ctx.diagram()
    return CylinderMeasureTable(n, tuple(dia.paths(n)), ctx.measures(n), ctx.log_measures(n))
