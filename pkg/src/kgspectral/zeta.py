"""Zeta function, Dixmier-trace measure and Hausdorff dimension.

Level sums ``sum_{|lam| = n} w_delta(lam)^s`` are evaluated from path-count
vectors, never by enumeration.  With ``u_n = 1^T A_{c(1)} ... A_{c(n)}`` and
``R_n = rho^{d(n)}`` the level sum equals ``(u_n . x^s) R_n^{-s/delta}``.
The code keeps ``u_n / R_n`` (bounded, since ``u_n . x`` is preserved) and
works with logarithms so that divergent and deep series stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .bratteli import FinitePath
from .errors import Undecided
from .metric import WeightContext, measure_M

CONVERGED = "converged"
DIVERGED = "diverged"
UNDECIDED = "undecided"

STABLE_BLOCKS = 10
RATIO_STABILITY = 1e-6
RATIO_MARGIN = 1e-9


@dataclass(frozen=True)
class ZetaEvaluation:
    s: float
    delta: float
    level_sums: np.ndarray
    log_level_sums: np.ndarray
    partial_sum: float
    classification: str
    tail_bound: float | None
    block_ratio: float | None

    def as_dict(self) -> dict:
        return {
            "s": self.s, "delta": self.delta, "depth": len(self.level_sums) - 1,
            "partial_sum": self.partial_sum, "classification": self.classification,
            "tail_bound": self.tail_bound, "block_ratio": self.block_ratio,
        }


@dataclass(frozen=True)
class DixmierResult:
    gamma: FinitePath
    closed_form: float
    numeric: float
    M_value: float
    rel_error_closed_vs_M: float
    rel_error_numeric_vs_closed: float
    product_irreducible: bool
    probes: list[tuple[float, float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "gamma": str(self.gamma), "closed_form": self.closed_form, "numeric": self.numeric,
            "M": self.M_value, "rel_error_closed_vs_M": self.rel_error_closed_vs_M,
            "rel_error_numeric_vs_closed": self.rel_error_numeric_vs_closed,
            "product_irreducible": self.product_irreducible,
            "probes": [list(p) for p in self.probes],
        }


@dataclass(frozen=True)
class _Transfer:
    """Normalised count vectors ``u_n / R'_n`` with their log scales."""

    u: np.ndarray        # shape (levels, V)
    log_r: np.ndarray    # log rho^{d(n)} for the absolute length n
    log_rp: np.ndarray   # log of rho_c over the levels actually traversed


def _transfer(ctx: WeightContext, depth: int, root: int | None = None, start: int = 0) -> _Transfer:
    """Vectors for lengths ``start .. depth``; ``root=None`` sums over all roots."""
    key = ("transfer", root, start)
    cached = ctx._cache.get(key)
    if cached is not None and len(cached.u) > depth - start:
        n = depth - start + 1
        return _Transfer(cached.u[:n], cached.log_r[:n], cached.log_rp[:n])
    dia = ctx.diagram()
    mats = [a.astype(float) / r for a, r in zip(dia.mats, ctx.sd.rho)]
    log_rho = ctx.sd.log_rho
    n_lev = depth - start + 1
    u = np.empty((n_lev, dia.nv))
    log_rp = np.zeros(n_lev)
    u[0] = 1.0 if root is None else np.eye(dia.nv)[root]
    for i in range(1, n_lev):
        c = dia.color(start + i)
        u[i] = u[i - 1] @ mats[c]
        log_rp[i] = log_rp[i - 1] + log_rho[c]
    log_r = log_rp + ctx.log_scale(dia.degree(start))
    out = _Transfer(u, log_r, log_rp)
    ctx._cache[key] = out
    return out


def _log_level_sums(ctx: WeightContext, s: float, tr: _Transfer) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(tr.u @ ctx.x ** s) + tr.log_rp - (s / ctx.delta) * tr.log_r


def _classify(log_terms: np.ndarray, block: int) -> tuple[str, float | None, float | None]:
    """Ratio test on consecutive block sums of a positive series given by logs.

    Returns ``(classification, ratio, log_tail_bound)``.
    """
    n_blocks = len(log_terms) // block
    if n_blocks < STABLE_BLOCKS + 1:
        return UNDECIDED, None, None
    blocks = logsumexp(log_terms[: n_blocks * block].reshape(n_blocks, block), axis=1)
    log_ratios = np.diff(blocks[-(STABLE_BLOCKS + 1):])
    if not np.all(np.isfinite(log_ratios)):
        return UNDECIDED, None, None
    if np.ptp(log_ratios) > RATIO_STABILITY:
        return UNDECIDED, float(np.exp(log_ratios[-1])), None
    ratio = float(np.exp(log_ratios[-1]))
    if ratio < 1.0 - RATIO_MARGIN:
        # tail after the last complete block, geometric from the final ratio
        tail = blocks[-1] + math.log(ratio) - math.log1p(-ratio)
        rest = log_terms[n_blocks * block:]
        if len(rest):
            tail = float(np.logaddexp(tail, logsumexp(rest)))
        return CONVERGED, ratio, tail
    return DIVERGED, ratio, None


def _block(ctx: WeightContext) -> int:
    return ctx.k * (ctx.sd.period or 1)


def zeta_eval(ctx: WeightContext, s: float, depth: int) -> ZetaEvaluation:
    """Partial sums of ``zeta_delta(s) = sum_lam w_delta(lam)^s`` up to length ``depth``.

    The series is classified by the ratio of consecutive block sums, one block
    being one period ``k p`` of levels.
    """
    ctx.require_spectral()
    if depth < 1:
        raise ValueError("depth must be >= 1")
    logs = _log_level_sums(ctx, s, _transfer(ctx, depth))
    cls, ratio, log_tail = _classify(logs, _block(ctx))
    with np.errstate(over="ignore"):
        level_sums = np.exp(logs)
        partial = float(np.exp(logsumexp(logs)))
    tail = float(np.exp(log_tail)) if log_tail is not None else None
    return ZetaEvaluation(float(s), ctx.delta, level_sums, logs, partial, cls, tail, ratio)


def _bisect(classify, tol: float, lo: float = 0.0, hi: float = 1.0) -> float:
    cls = classify(hi)
    while cls != CONVERGED:
        if cls == UNDECIDED or hi > 64:
            raise Undecided(f"classification at s={hi} is {cls}")
        lo, hi = hi, 2 * hi
        cls = classify(hi)
    if classify(lo) == UNDECIDED:
        raise Undecided(f"classification at s={lo} is undecided")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        cls = classify(mid)
        if cls == UNDECIDED:
            raise Undecided(f"classification at s={mid} is undecided")
        if cls == CONVERGED:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def abscissa_estimate(ctx: WeightContext, tol: float = 1e-3, depth: int | None = None) -> float:
    """Abscissa of convergence of ``zeta_delta`` by bisection on ``s``.

    Raises :class:`Undecided` if some probe cannot be classified at ``depth``
    (default: 400 periods).
    """
    ctx.require_spectral()
    depth = depth or 400 * _block(ctx)
    tr = _transfer(ctx, depth)
    block = _block(ctx)
    return _bisect(lambda s: _classify(_log_level_sums(ctx, s, tr), block)[0], tol / 4)


def hausdorff_sum(ctx: WeightContext, q: int, s: float) -> float:
    """``sum_{|gamma| = qk} w_delta(gamma)^s``, the cover sum at square depth ``q``.

    Path counts are exact integers and ``rho_i`` powers are taken per colour,
    so graphs with integral data give exact results.
    """
    ctx.require_spectral()
    dia = ctx.diagram()
    counts = dia.transfer(0, q * ctx.k).sum(axis=0)
    factor = 1.0
    for r in ctx.sd.rho:
        factor *= float(r) ** (-q * s / ctx.delta)
    try:
        return float(sum((float(c) * factor) * float(xb) ** s for c, xb in zip(counts, ctx.x)))
    except OverflowError:
        logs = [math.log(int(c)) + s * math.log(xb) for c, xb in zip(counts, ctx.x) if c]
        return math.exp(float(logsumexp(logs)) - q * s / ctx.delta * float(np.sum(ctx.sd.log_rho)))


def hausdorff_log_sums(ctx: WeightContext, s: float, q_max: int) -> np.ndarray:
    """``log hausdorff_sum(q, s)`` for ``q = 0 .. q_max`` in floating point."""
    tr = _transfer(ctx, q_max * ctx.k)
    return _log_level_sums(ctx, s, tr)[:: ctx.k]


def hausdorff_dim_estimate(ctx: WeightContext, tol: float = 1e-3, q_max: int | None = None) -> float:
    """Boundary between cover sums tending to 0 and not tending to 0.

    A cover-sum sequence whose block ratio stays below one tends to 0 (the
    ``s``-dimensional cover measure vanishes); otherwise it stays bounded
    below or grows.
    """
    ctx.require_spectral()
    p = ctx.sd.period or 1
    q_max = q_max or 400 * p

    def classify(s):
        return _classify(hausdorff_log_sums(ctx, s, q_max), p)[0]

    return _bisect(classify, tol / 4)


def _y_vector(ctx: WeightContext) -> np.ndarray:
    """``Y_{a;0}(delta)`` for every vertex ``a``."""
    sd = ctx.sd
    mats = [a.astype(float) for a in ctx.graph.matrices]
    xd = ctx.x ** ctx.delta
    inner = np.zeros(len(ctx.x))
    partial = np.eye(len(ctx.x))
    for t in range(ctx.k):
        if t:
            partial = partial @ mats[t - 1] / sd.rho[t - 1]
        inner += partial @ xd
    return sum(sd.cesaro) @ inner


def dixmier_closed(ctx: WeightContext, gamma: FinitePath) -> float:
    """``mu_delta([gamma])`` from the Cesaro-limit closed form.

    For ``|gamma| = q0 k`` it is ``rho^{-q0} Y_{s(gamma);0} / Y``; otherwise
    ``sum_a (A_{t0+1} ... A_k)(s(gamma), a) Y_{a;0} / (rho^{q0+1} Y)``.
    """
    ctx.require_spectral()
    ctx.diagram().check(gamma)
    y0 = _y_vector(ctx)
    total = float(y0.sum())
    q0, t0 = divmod(len(gamma), ctx.k)
    log_rho = float(np.sum(ctx.sd.log_rho))
    v = gamma.source
    if t0 == 0:
        return float(y0[v] * math.exp(-q0 * log_rho) / total)
    tail = np.eye(len(y0))
    for a in ctx.graph.matrices[t0:]:
        tail = tail @ a.astype(float)
    return float(tail[v] @ y0 * math.exp(-(q0 + 1) * log_rho) / total)


def _probe_depth(ctx: WeightContext, s: float, start: int, tail_tol: float = 1e-13) -> int:
    log_ratio = ctx.sd.period * (1.0 - s / ctx.delta) * float(np.sum(ctx.sd.log_rho))
    blocks = math.ceil(math.log(tail_tol) / log_ratio) + 2
    return start + blocks * _block(ctx)


def dixmier_series(ctx: WeightContext, gamma: FinitePath, steps: int = 10,
                   depth: int | None = None) -> list[tuple[float, float]]:
    """Probe values ``(s_j, N_gamma(s_j) / zeta(s_j))`` with ``s_j = delta (1 + 2^{-j})``."""
    ctx.require_spectral()
    ctx.diagram().check(gamma)
    if steps < 2:
        raise ValueError("steps must be >= 2")
    svals = [ctx.delta * (1.0 + 2.0 ** -j) for j in range(1, steps + 1)]
    depth = depth or _probe_depth(ctx, svals[-1], len(gamma))
    full = _transfer(ctx, depth)
    sub = _transfer(ctx, depth, root=gamma.source, start=len(gamma))
    out = []
    for s in svals:
        num = logsumexp(_log_level_sums(ctx, s, sub))
        den = logsumexp(_log_level_sums(ctx, s, full))
        out.append((s, float(np.exp(num - den))))
    return out


def _extrapolate(probes: list[tuple[float, float]]) -> float:
    vals = [g for _, g in probes]
    rich = [2.0 * b - a for a, b in zip(vals, vals[1:])]
    if len(rich) > 1 and abs(rich[-1] - rich[-2]) > 1e-4:
        raise Undecided(f"Dixmier probe sequence not Cauchy: {rich[-2]} vs {rich[-1]}")
    return float(rich[-1])


def dixmier_numeric(ctx: WeightContext, gamma: FinitePath, steps: int = 10,
                    depth: int | None = None) -> float:
    """Limit of ``N_gamma(s) / zeta_delta(s)`` as ``s`` decreases to ``delta``.

    The probe sequence is extrapolated with two-point Richardson steps
    (the ratio is smooth in ``s`` with error linear in ``s - delta``).

    Raises
    ------
    Undecided
        If the last two extrapolated values differ by more than 1e-4.
    """
    return _extrapolate(dixmier_series(ctx, gamma, steps, depth))


def dixmier(ctx: WeightContext, gamma: FinitePath, steps: int = 10,
            depth: int | None = None) -> DixmierResult:
    """Closed form, numeric limit and ``M`` for one cylinder."""
    closed = dixmier_closed(ctx, gamma)
    probes = dixmier_series(ctx, gamma, steps, depth)
    numeric = _extrapolate(probes)
    m = measure_M(ctx, gamma)
    return DixmierResult(
        gamma, closed, numeric, m, abs(closed - m) / m, abs(numeric - closed) / closed,
        bool(ctx.sd.product_irreducible), probes)
