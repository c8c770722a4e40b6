"""Step functions on the path space, wavelets, eigenspaces and the Laplacian.

A :class:`StepFunction` is constant on the cylinders of a fixed path length
and stores one coefficient per cylinder in enumeration order.  Batches of
functions are 2-D arrays whose last axis runs over cylinders; every
array-level helper here acts on that last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .bratteli import FinitePath, j_pattern
from .errors import NotRainbowMultiple
from .metric import WeightContext
from .report import ReportBundle

E_MINUS_ONE = "E-1"
E_ZERO = "E0"


# array-level plumbing -------------------------------------------------------

def refine_array(ctx: WeightContext, arr: np.ndarray, n: int, m: int,
                 pattern: tuple[int, ...] | None = None) -> np.ndarray:
    """Coefficients at length ``m >= n`` of functions given at length ``n``."""
    if m < n:
        raise ValueError(f"cannot refine from length {n} down to {m}")
    dia = ctx.diagram(pattern)
    for lev in range(n + 1, m + 1):
        arr = np.repeat(arr, np.diff(dia.level(lev).starts), axis=-1)
    return arr


def integrate_array(ctx: WeightContext, arr: np.ndarray, n: int, m: int,
                    pattern: tuple[int, ...] | None = None) -> np.ndarray:
    """Integrals over length-``m`` cylinders (``m <= n``) of functions at length ``n``."""
    dia = ctx.diagram(pattern)
    out = arr * ctx.measures(n, pattern)
    for lev in range(n, m, -1):
        out = np.add.reduceat(out, dia.level(lev).starts[:-1], axis=-1)
    return out


def _check_multiple(ctx: WeightContext, lam: FinitePath, pattern) -> None:
    period = ctx.diagram(pattern).period
    if len(lam) % period:
        raise NotRainbowMultiple(f"|lambda| = {len(lam)} is not a multiple of {period}")


def _half_scale(ctx: WeightContext, lam: FinitePath, pattern) -> float:
    return float(np.exp(0.5 * ctx.log_scale(ctx.diagram(pattern).degree(len(lam)))))


def s_array(ctx: WeightContext, lam: FinitePath, arr: np.ndarray, n: int,
            pattern: tuple[int, ...] | None = None, out: np.ndarray | None = None) -> np.ndarray:
    """``S_lam`` on functions at length ``n``; result at length ``n + |lam|``.

    If ``out`` is given the result is added into it.
    """
    _check_multiple(ctx, lam, pattern)
    dia = ctx.diagram(pattern)
    lo, hi = dia.block(0, lam.source, n)
    tlo, thi = dia.block(len(lam), dia.index(lam), n + len(lam))
    if out is None:
        out = np.zeros(arr.shape[:-1] + (dia.level(n + len(lam)).count,), dtype=arr.dtype)
    out[..., tlo:thi] += _half_scale(ctx, lam, pattern) * arr[..., lo:hi]
    return out


def s_star_array(ctx: WeightContext, lam: FinitePath, arr: np.ndarray, n: int,
                 pattern: tuple[int, ...] | None = None) -> tuple[np.ndarray, int]:
    """``S_lam^*`` on functions at length ``n``; returns ``(array, new_length)``."""
    _check_multiple(ctx, lam, pattern)
    dia = ctx.diagram(pattern)
    if n < len(lam):
        arr, n = refine_array(ctx, arr, n, len(lam), pattern), len(lam)
    m = n - len(lam)
    lo, hi = dia.block(len(lam), dia.index(lam), n)
    tlo, thi = dia.block(0, lam.source, m)
    out = np.zeros(arr.shape[:-1] + (dia.level(m).count,), dtype=arr.dtype)
    out[..., tlo:thi] = arr[..., lo:hi] / _half_scale(ctx, lam, pattern)
    return out, m


# step functions ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StepFunction:
    """Function constant on cylinders ``[lam]`` with ``|lam| = length``.

    ``length = N k`` corresponds to square depth ``N``.  ``pattern`` selects
    a non-rainbow level colouring (J-wavelets); ``None`` is the rainbow one.
    """

    ctx: WeightContext
    length: int
    coeffs: np.ndarray
    pattern: tuple[int, ...] | None = None

    def __post_init__(self):
        count = self.ctx.diagram(self.pattern).level(self.length).count
        if self.coeffs.shape != (count,):
            raise ValueError(f"expected {count} coefficients, got shape {self.coeffs.shape}")

    @property
    def depth(self) -> int:
        """Square depth ``N`` with ``length = N * period`` (rounded up)."""
        period = self.ctx.diagram(self.pattern).period
        return -(-self.length // period)

    @classmethod
    def constant(cls, ctx: WeightContext, value: float = 1.0, pattern=None) -> StepFunction:
        return cls(ctx, 0, np.full(ctx.graph.n_vertices, value, dtype=float), pattern)

    @classmethod
    def indicator(cls, ctx: WeightContext, p: FinitePath, pattern=None) -> StepFunction:
        dia = ctx.diagram(pattern)
        c = np.zeros(dia.level(len(p)).count)
        c[dia.index(p)] = 1.0
        return cls(ctx, len(p), c, pattern)

    def refine(self, length: int) -> StepFunction:
        return StepFunction(self.ctx, length,
                            refine_array(self.ctx, self.coeffs, self.length, length, self.pattern),
                            self.pattern)

    def _binary(self, other: StepFunction, op) -> StepFunction:
        n = max(self.length, other.length)
        a, b = self.refine(n), other.refine(n)
        return StepFunction(self.ctx, n, op(a.coeffs, b.coeffs), self.pattern)

    def __add__(self, other: StepFunction) -> StepFunction:
        return self._binary(other, np.add)

    def __sub__(self, other: StepFunction) -> StepFunction:
        return self._binary(other, np.subtract)

    def __mul__(self, scalar) -> StepFunction:
        return StepFunction(self.ctx, self.length, self.coeffs * scalar, self.pattern)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(abs(inner(self, self))))


def inner(f: StepFunction, g: StepFunction) -> complex | float:
    """``<f, g> = sum conj(f_lam) g_lam M([lam])`` at the common refinement."""
    n = max(f.length, g.length)
    a, b = f.refine(n).coeffs, g.refine(n).coeffs
    val = np.sum(np.conj(a) * b * f.ctx.measures(n, f.pattern))
    return float(val) if np.isrealobj(val) else complex(val)


# subspaces --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Basis vectors (rows of ``coeffs``) at a common cylinder length."""

    label: str
    ctx: WeightContext
    length: int
    coeffs: np.ndarray
    pattern: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def vectors(self) -> list[StepFunction]:
        return [StepFunction(self.ctx, self.length, row, self.pattern) for row in self.coeffs]

    @property
    def gram(self) -> np.ndarray:
        key = "gram"
        if key not in self.meta:
            m = self.ctx.measures(self.length, self.pattern)
            self.meta[key] = (np.conj(self.coeffs) * m) @ self.coeffs.T
        return self.meta[key]

    def refine(self, length: int) -> SubspaceBasis:
        return SubspaceBasis(self.label, self.ctx, length,
                             refine_array(self.ctx, self.coeffs, self.length, length, self.pattern),
                             self.pattern)

    def weighted(self, length: int | None = None) -> np.ndarray:
        """Columns are the basis vectors in M-orthonormal cylinder coordinates."""
        b = self if length is None else self.refine(length)
        return (b.coeffs * np.sqrt(self.ctx.measures(b.length, self.pattern))).T

    def projector_coords(self, length: int) -> np.ndarray:
        """Orthonormal basis (columns) of the span, in M-orthonormal coordinates."""
        q, r = np.linalg.qr(self.weighted(length))
        return q[:, : self.dim]


def stack(label: str, bases: Sequence[SubspaceBasis]) -> SubspaceBasis:
    """Direct sum of bases, refined to a common length."""
    ctx, pattern = bases[0].ctx, bases[0].pattern
    n = max(b.length for b in bases)
    rows = [b.refine(n).coeffs for b in bases if b.dim]
    count = ctx.diagram(pattern).level(n).count
    coeffs = np.vstack(rows) if rows else np.zeros((0, count))
    return SubspaceBasis(label, ctx, n, coeffs, pattern)


def principal_angle(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """Largest principal angle between two spans (``pi/2`` if dimensions differ)."""
    if a.dim != b.dim:
        return float(np.pi / 2)
    if a.dim == 0:
        return 0.0
    n = max(a.length, b.length)
    return float(np.max(subspace_angles(a.weighted(n), b.weighted(n))))


def level_space(ctx: WeightContext, length: int, pattern=None, label: str | None = None) -> SubspaceBasis:
    """Span of all cylinder indicators at ``length`` (``V_N`` for ``length = N k``)."""
    count = ctx.diagram(pattern).level(length).count
    return SubspaceBasis(label or f"span(length {length})", ctx, length, np.eye(count), pattern)


# wavelets ---------------------------------------------------------------------

def _mother_rows(ctx: WeightContext, v: int, pattern=None) -> tuple[np.ndarray, int]:
    dia = ctx.diagram(pattern)
    n = dia.period
    lo, hi = dia.block(0, v, n)
    m = ctx.measures(n, pattern)
    rows = np.zeros((max(hi - lo - 1, 0), dia.level(n).count))
    for r, i in enumerate(range(lo + 1, hi)):
        rows[r, lo] = 1.0 / m[lo]
        rows[r, i] = -1.0 / m[i]
    return rows, n


def mother_wavelets(ctx: WeightContext, v: int, pattern=None) -> SubspaceBasis:
    """``f^{i,v} = chi[lam_0]/M[lam_0] - chi[lam_i]/M[lam_i]`` over paths ``lam_i`` of one period from ``v``.

    ``lam_0`` is the lexicographically smallest path.
    """
    rows, n = _mother_rows(ctx, v, pattern)
    return SubspaceBasis(f"mother(v={v})", ctx, n, rows, pattern)


def apply_S(ctx: WeightContext, lam: FinitePath, f: StepFunction) -> StepFunction:
    """``S_lam chi[eta] = rho^{d(lam)/2} chi[lam eta]``."""
    return StepFunction(ctx, f.length + len(lam),
                        s_array(ctx, lam, f.coeffs, f.length, f.pattern), f.pattern)


def apply_S_star(ctx: WeightContext, lam: FinitePath, f: StepFunction) -> StepFunction:
    """Adjoint of :func:`apply_S`: restrict to ``[lam]``, strip ``lam``, scale by ``rho^{-d(lam)/2}``."""
    arr, m = s_star_array(ctx, lam, f.coeffs, f.length, f.pattern)
    return StepFunction(ctx, m, arr, f.pattern)


def _translate_family(ctx: WeightContext, label: str, q: int, mothers: dict[int, np.ndarray],
                      mother_len: int, pattern=None) -> SubspaceBasis:
    """``{S_lam f : |lam| = q * period, f in mothers[s(lam)]}`` in enumeration order."""
    dia = ctx.diagram(pattern)
    n = q * dia.period
    out_len = n + mother_len
    blocks = []
    for i in range(dia.level(n).count):
        lam = dia.path(n, i)
        rows = mothers[lam.source]
        if len(rows):
            blocks.append(s_array(ctx, lam, rows, mother_len, pattern))
    count = dia.level(out_len).count
    coeffs = np.vstack(blocks) if blocks else np.zeros((0, count))
    return SubspaceBasis(label, ctx, out_len, coeffs, pattern)


def wavelet_basis(ctx: WeightContext, n: int) -> SubspaceBasis:
    """Basis ``{S_lam f^{i,s(lam)} : d(lam) = (n, ..., n)}`` of ``W_n``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    mothers = {v: _mother_rows(ctx, v)[0] for v in range(ctx.graph.n_vertices)}
    return _translate_family(ctx, f"W_{n}", n, mothers, ctx.k)


def _gram_schmidt_complement(weights: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``{c : sum c_e w_e = 0}`` in ``<c, c'> = sum c_e c'_e w_e``.

    Gram-Schmidt runs on ``(1, ..., 1), e_0, e_1, ...``; the constant
    direction is discarded.
    """
    d = len(weights)
    found: list[np.ndarray] = []
    for cand in [np.ones(d)] + list(np.eye(d)):
        v = cand.astype(float)
        for _ in range(2):
            for u in found:
                v = v - np.sum(u * v * weights) * u
        nrm = np.sqrt(np.sum(v * v * weights))
        if nrm > 1e-10 * np.sqrt(np.sum(cand * cand * weights)):
            found.append(v / nrm)
        if len(found) == d:
            break
    return np.array(found[1:]).reshape(-1, d)


def _refined_mothers(ctx: WeightContext, j: int, pattern=None) -> dict[int, np.ndarray]:
    """Orthonormal complements of constants over the children of every path of length ``j - 1``."""
    dia = ctx.diagram(pattern)
    m = ctx.measures(j, pattern)
    count = dia.level(j).count
    by_root: dict[int, list[np.ndarray]] = {v: [] for v in range(dia.nv)}
    prev = dia.level(j - 1)
    starts = dia.level(j).starts
    root_of = dia.ancestors(j - 1, 0)
    for i in range(prev.count):
        lo, hi = int(starts[i]), int(starts[i + 1])
        for c in _gram_schmidt_complement(m[lo:hi]):
            row = np.zeros(count)
            row[lo:hi] = c
            by_root[int(root_of[i])].append(row)
    return {v: np.array(rows).reshape(-1, count) for v, rows in by_root.items()}


def refined_wavelet_basis(ctx: WeightContext, q: int, j: int) -> SubspaceBasis:
    """Orthonormal basis of ``W_{q,j}``, the part of ``W_q`` living on level ``qk + j``."""
    if not 1 <= j <= ctx.k:
        raise ValueError(f"j must lie in 1..{ctx.k}")
    return _translate_family(ctx, f"W_{q},{j}", q, _refined_mothers(ctx, j), j)


def j_wavelet_basis(ctx: WeightContext, J: Sequence[int], j: int,
                    ell: int | None = None) -> SubspaceBasis:
    """Wavelets on the J-rainbow diagram.

    With ``ell=None`` returns ``W_j^J`` (translates of the one-period mother
    wavelets by paths of degree ``jJ``); with ``ell`` in ``1..|J|`` returns the
    refined piece ``W_{j,ell}^J``.
    """
    if len(J) != ctx.k:
        raise ValueError(f"J must have {ctx.k} entries")
    pattern = j_pattern(J)
    if ell is None:
        mothers = {v: _mother_rows(ctx, v, pattern)[0] for v in range(ctx.graph.n_vertices)}
        return _translate_family(ctx, f"W^J_{j}", j, mothers, len(pattern), pattern)
    if not 1 <= ell <= len(pattern):
        raise ValueError(f"ell must lie in 1..{len(pattern)}")
    return _translate_family(ctx, f"W^J_{j},{ell}", j, _refined_mothers(ctx, ell, pattern),
                             ell, pattern)


# Laplacian eigenspaces --------------------------------------------------------

def eigenspace_basis(ctx: WeightContext, gamma: FinitePath | str) -> SubspaceBasis:
    """Basis of ``E_gamma`` from the pairs ``(e_0, e_i)`` of one-edge extensions.

    ``gamma`` may also be :data:`E_MINUS_ONE` (constants) or :data:`E_ZERO`
    (vertex differences).
    """
    ctx.require_spectral()
    dia = ctx.diagram()
    nv = dia.nv
    if gamma == E_MINUS_ONE:
        return SubspaceBasis("E_-1", ctx, 0, np.ones((1, nv)))
    if gamma == E_ZERO:
        rows = np.zeros((nv - 1, nv))
        for r in range(nv - 1):
            rows[r, 0] = 1.0 / ctx.x[0]
            rows[r, r + 1] = -1.0 / ctx.x[r + 1]
        return SubspaceBasis("E_0", ctx, 0, rows)
    n = len(gamma)
    lo, hi = dia.block(n, dia.index(gamma), n + 1)
    m = ctx.measures(n + 1)
    rows = np.zeros((hi - lo - 1, dia.level(n + 1).count))
    for r, i in enumerate(range(lo + 1, hi)):
        rows[r, lo] = 1.0 / m[lo]
        rows[r, i] = -1.0 / m[i]
    return SubspaceBasis(f"E[{gamma}]", ctx, n + 1, rows)


def _laplacian_coefficients(ctx: WeightContext, s: float, n: int) -> list[np.ndarray]:
    """``c(gamma) = 2 F_gamma w(gamma)^{s-2}`` for paths of each length ``0 .. n-1``.

    ``1/F_gamma`` sums ``M[gamma e] M[gamma e']`` over ordered pairs ``e != e'``.
    """
    dia = ctx.diagram()
    out = []
    for lev in range(n):
        m_child = ctx.measures(lev + 1)
        starts = dia.level(lev + 1).starts[:-1]
        m = ctx.measures(lev)
        inv_f = m ** 2 - np.add.reduceat(m_child ** 2, starts)
        out.append(2.0 / inv_f * ctx.weights(lev) ** (s - 2.0))
    return out


def laplacian_array(ctx: WeightContext, s: float, arr: np.ndarray, n: int) -> np.ndarray:
    """Laplacian on functions at length ``n`` (last axis), result at length ``n``.

    For ``eta`` of length ``n`` with prefixes ``eta_i`` the operator is
    ``-sum_i c(eta_i) (M([eta_i] - [eta_{i+1}]) chi[eta] - M[eta] chi([eta_i] - [eta_{i+1}]))``.
    Summed over ``eta`` the second part only needs cylinder integrals of ``f``.
    """
    ctx.require_spectral()
    dia = ctx.diagram()
    coef = _laplacian_coefficients(ctx, s, n)
    h = np.zeros(dia.level(n).count)
    result = np.zeros_like(arr, dtype=np.result_type(arr, float))
    integrals = [None] * (n + 1)
    integrals[n] = arr * ctx.measures(n)
    for lev in range(n - 1, -1, -1):
        integrals[lev] = np.add.reduceat(integrals[lev + 1], dia.level(lev + 1).starts[:-1], axis=-1)
    for lev in range(n):
        anc = dia.ancestors(n, lev)
        anc_next = dia.ancestors(n, lev + 1)
        m, m_next = ctx.measures(lev), ctx.measures(lev + 1)
        parent = dia.level(lev + 1).parent
        h += coef[lev][anc] * (m[anc] - m_next[anc_next])
        result += (coef[lev] * integrals[lev])[..., anc]
        result -= (coef[lev][parent] * integrals[lev + 1])[..., anc_next]
    return result - h * arr


def laplacian_apply(ctx: WeightContext, s: float, f: StepFunction) -> StepFunction:
    """``Delta_s f`` at the length of ``f``."""
    if f.pattern is not None:
        raise ValueError("the Laplacian acts on the rainbow diagram")
    return StepFunction(ctx, f.length, laplacian_array(ctx, s, f.coeffs, f.length))


def laplacian_matrix(ctx: WeightContext, s: float, n: int) -> np.ndarray:
    """Matrix of ``Delta_s`` on length-``n`` step functions, M-orthonormal coordinates."""
    sq = np.sqrt(ctx.measures(n))
    cols = laplacian_array(ctx, s, np.diag(1.0 / sq), n)
    return (cols * sq).T


def eigen_residual(ctx: WeightContext, s: float, basis: SubspaceBasis) -> dict:
    """Rayleigh quotients and relative residuals ``||Delta f - c f|| / ||f||`` per vector."""
    n = basis.length
    m = ctx.measures(n)
    out = laplacian_array(ctx, s, basis.coeffs, n)
    quotients, residuals = [], []
    for f, df in zip(basis.coeffs, out):
        ff = np.sum(f * f * m)
        c = float(np.sum(f * df * m) / ff)
        quotients.append(c)
        residuals.append(float(np.sqrt(np.sum((df - c * f) ** 2 * m) / ff)))
    spread = float(np.ptp(quotients)) if quotients else 0.0
    return {"eigenvalue": quotients[0] if quotients else None, "quotients": quotients,
            "max_residual": max(residuals, default=0.0), "quotient_spread": spread}


def _clusters(values: np.ndarray, rtol: float) -> list[np.ndarray]:
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    scale = max(1.0, float(np.max(np.abs(values))))
    for i in order[1:]:
        if values[i] - values[cur[-1]] <= rtol * scale:
            cur.append(i)
        else:
            groups.append(np.array(cur))
            cur = [i]
    groups.append(np.array(cur))
    return groups


def eigenspace_stability(ctx: WeightContext, n: int, s1: float, s2: float,
                         rtol: float = 1e-8) -> float:
    """Largest angle by which an eigenspace of ``Delta_{s1}`` fails to be ``Delta_{s2}``-invariant.

    The leak ``||(I - P) B P||`` is measured relative to ``||B||``.  Both
    directions are checked.  Zero means the two operators share their
    eigenspace decomposition on length-``n`` step functions.
    """
    worst = 0.0
    mats = {s: laplacian_matrix(ctx, s, n) for s in (s1, s2)}
    for a, b in ((s1, s2), (s2, s1)):
        vals, vecs = np.linalg.eigh(0.5 * (mats[a] + mats[a].T))
        scale = np.linalg.norm(mats[b], 2)
        for grp in _clusters(vals, rtol):
            u = vecs[:, grp]
            img = mats[b] @ u
            leak = np.linalg.norm(img - u @ (u.T @ img), 2) / scale
            worst = max(worst, float(np.arcsin(min(1.0, leak))))
    return worst


def verify_refinement(ctx: WeightContext, n: int, s_probe: float = 2.0) -> ReportBundle:
    """Compare ``W_n`` with the Laplacian eigenspaces ``E_gamma``, ``nk <= |gamma| < (n+1)k``."""
    ctx.require_spectral()
    dia = ctx.diagram()
    k = ctx.k
    w = wavelet_basis(ctx, n)
    eig, residuals = [], []
    for length in range(n * k, (n + 1) * k):
        for i in range(dia.level(length).count):
            gamma = dia.path(length, i)
            e = eigenspace_basis(ctx, gamma)
            eig.append(e)
            r = eigen_residual(ctx, s_probe, e)
            residuals.append({"gamma": str(gamma), "dim": e.dim, **r})
    e_sum = stack(f"sum E (n={n})", eig)
    v0 = level_space(ctx, 0, label="V_0")
    e_low = stack("E_-1 + E_0", [eigenspace_basis(ctx, E_MINUS_ONE), eigenspace_basis(ctx, E_ZERO)])
    warnings = []
    if not ctx.sd.product_irreducible:
        warnings.append("A = A_1...A_k is reducible; E_gamma uses M in place of mu_delta")
    results = {
        "n": n,
        "dim_W": w.dim,
        "dim_sum_E": e_sum.dim,
        "dim_identity": w.dim == e_sum.dim == dia.count((n + 1) * k) - dia.count(n * k),
        "principal_angle_W_vs_E": principal_angle(w, e_sum),
        "s_probe": s_probe,
        "max_eigen_residual": max((r["max_residual"] for r in residuals), default=0.0),
        "eigenspaces": residuals,
        "V0_dim": v0.dim,
        "E_minus1_plus_E0_dim": e_low.dim,
        "principal_angle_V0": principal_angle(v0, e_low),
        "ext1_convention": "ordered pairs",
    }
    return ReportBundle("verify_refinement", {"n": n, "s_probe": s_probe}, results, warnings)
