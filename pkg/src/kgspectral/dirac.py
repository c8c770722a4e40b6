"""Dirac operator on the wavelet filtration and Cuntz-Krieger checks.

``R_s`` is the span of cylinder indicators of square depth ``s`` and
``Xi_s`` the orthogonal projection onto it (a conditional expectation);
``Xi_{-1}`` projects onto constants.  The Dirac operator is
``D = sum_q alpha_q (Xi_q - Xi_{q-1})``.  Operators are represented in the
M-orthonormal cylinder basis ``chi[lam] / sqrt(M[lam])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .bratteli import FinitePath
from .errors import NotRainbowMultiple, SourceRangeMismatch
from .harmonic import (
    StepFunction,
    integrate_array,
    refine_array,
    s_array,
    s_star_array,
    wavelet_basis,
)
from .metric import WeightContext
from .report import ReportBundle


@dataclass(frozen=True)
class AlphaSequence:
    """Increasing eigenvalue sequence ``alpha_0 < alpha_1 < ...``.

    ``linear(c, a0)`` is ``alpha_q = a0 + c q``; ``custom`` lists leading values
    and continues with the last gap.
    """

    kind: str
    values: tuple[float, ...] = ()
    slope: float = 1.0
    offset: float = 1.0

    def __post_init__(self):
        if self.kind == "linear":
            if self.slope <= 0 or self.offset < 0:
                raise ValueError("linear alpha needs slope > 0 and alpha_0 >= 0")
        elif self.kind == "custom":
            v = self.values
            if len(v) < 2 or v[0] < 0 or any(b <= a for a, b in zip(v, v[1:])):
                raise ValueError("custom alpha needs >= 2 strictly increasing non-negative values")
        else:
            raise ValueError(f"unknown alpha kind {self.kind!r}")

    @classmethod
    def linear(cls, c: float = 1.0, a0: float | None = None) -> AlphaSequence:
        return cls("linear", slope=float(c), offset=float(c if a0 is None else a0))

    @classmethod
    def custom(cls, values: Sequence[float]) -> AlphaSequence:
        return cls("custom", values=tuple(float(v) for v in values))

    @classmethod
    def parse(cls, text: str) -> AlphaSequence:
        """``linear:C`` (``alpha_q = C (q+1)``), ``linear:C,A0`` or ``custom:v0,v1,...``."""
        kind, _, rest = text.partition(":")
        nums = [float(t) for t in rest.split(",") if t.strip()]
        if kind == "linear" and len(nums) in (1, 2):
            return cls.linear(*nums)
        if kind == "custom":
            return cls.custom(nums)
        raise ValueError(f"cannot parse alpha specification {text!r}")

    def __call__(self, q: int) -> float:
        if self.kind == "linear":
            return self.offset + self.slope * q
        v = self.values
        if q < len(v):
            return v[q]
        return v[-1] + (q - len(v) + 1) * (v[-1] - v[-2])

    @property
    def lipschitz_bound(self) -> float:
        if self.kind == "linear":
            return self.slope
        return max(b - a for a, b in zip(self.values, self.values[1:]))

    def as_dict(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear", "slope": self.slope, "alpha_0": self.offset}
        return {"kind": "custom", "values": list(self.values)}


DEFAULT_ALPHA = AlphaSequence.linear(1.0)


def project_array(ctx: WeightContext, s: int, arr: np.ndarray, n: int) -> np.ndarray:
    """``Xi_s`` on functions at length ``n``; the result stays at length ``n``."""
    if s < 0:
        total = integrate_array(ctx, arr, n, 0).sum(axis=-1, keepdims=True)
        return np.broadcast_to(total, arr.shape).copy()
    m = s * ctx.k
    if m >= n:
        return arr.copy()
    avg = integrate_array(ctx, arr, n, m) / ctx.measures(m)
    return refine_array(ctx, avg, m, n)


def project_R(ctx: WeightContext, s: int, f: StepFunction) -> StepFunction:
    """Orthogonal projection of ``f`` onto ``R_s = V_s`` (conditional expectation)."""
    return StepFunction(ctx, f.length, project_array(ctx, s, f.coeffs, f.length))


def dirac_array(ctx: WeightContext, alpha: AlphaSequence, arr: np.ndarray, n: int) -> np.ndarray:
    top = -(-n // ctx.k)
    proj = [project_array(ctx, q, arr, n) for q in range(-1, top + 1)]
    out = np.zeros_like(proj[0])
    for q in range(top + 1):
        out += alpha(q) * (proj[q + 1] - proj[q])
    return out


def dirac_apply(ctx: WeightContext, alpha: AlphaSequence, f: StepFunction) -> StepFunction:
    """``D f = sum_{q=0}^{N} alpha_q (Xi_q - Xi_{q-1}) f``."""
    return StepFunction(ctx, f.length, dirac_array(ctx, alpha, f.coeffs, f.length))


@dataclass(frozen=True)
class OperatorAtDepth:
    depth: int
    matrix: np.ndarray


def _basis_rows(ctx: WeightContext, n: int) -> tuple[np.ndarray, np.ndarray]:
    sq = np.sqrt(ctx.measures(n))
    return np.diag(1.0 / sq), sq


def dirac_matrix(ctx: WeightContext, alpha: AlphaSequence, depth: int) -> OperatorAtDepth:
    """Matrix of ``D`` on ``V_depth`` in the M-orthonormal cylinder basis."""
    n = depth * ctx.k
    rows, sq = _basis_rows(ctx, n)
    return OperatorAtDepth(depth, (dirac_array(ctx, alpha, rows, n) * sq).T)


def _multiplicities(vals: np.ndarray, tol: float) -> list[tuple[float, int]]:
    out: list[list] = []
    for v in np.sort(vals):
        if out and abs(v - out[-1][0]) <= tol:
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return [(v, c) for v, c in out]


def dirac_eigen_report(ctx: WeightContext, alpha: AlphaSequence = DEFAULT_ALPHA,
                       depth: int = 3, tol: float = 1e-8) -> ReportBundle:
    """Eigenvalues of ``D`` on ``V_depth`` against the wavelet spaces ``W_q``."""
    ctx.require_spectral()
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = depth * ctx.k
    mat = dirac_matrix(ctx, alpha, depth).matrix
    asym = float(np.max(np.abs(mat - mat.T)))
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    scale = max(1.0, float(np.max(np.abs(vals))))
    mult = _multiplicities(vals, tol * scale)
    levels = []
    for q in range(depth):
        target = alpha(q + 1)
        sel = np.abs(vals - target) <= tol * scale
        w = wavelet_basis(ctx, q)
        wcoords = w.weighted(n)
        angle = (float(np.max(subspace_angles(vecs[:, sel], wcoords)))
                 if sel.sum() == w.dim and w.dim else float(np.pi / 2) if w.dim else 0.0)
        levels.append({"q": q, "eigenvalue": target, "multiplicity": int(sel.sum()),
                       "dim_W": w.dim, "principal_angle": angle})
    zero = int(np.sum(np.abs(vals) <= tol * scale))
    results = {
        "depth": depth, "alpha": alpha.as_dict(), "dimension": int(len(vals)),
        "max_asymmetry": asym,
        "multiplicities": [{"eigenvalue": v, "multiplicity": c} for v, c in mult],
        "kernel_dimension": zero,
        "V0_complement": {"eigenvalue": alpha(0),
                          "multiplicity": int(np.sum(np.abs(vals - alpha(0)) <= tol * scale)),
                          "expected": ctx.graph.n_vertices - 1 + (1 if alpha(0) == 0 else 0)},
        "wavelet_levels": levels,
        "max_principal_angle": max((lv["principal_angle"] for lv in levels), default=0.0),
    }
    return ReportBundle("dirac", {"depth": depth, "alpha": alpha.as_dict()}, results)


def _check_pair(ctx: WeightContext, lam: FinitePath, mu: FinitePath) -> None:
    for p, name in ((lam, "lambda"), (mu, "mu")):
        if len(p) % ctx.k:
            raise NotRainbowMultiple(f"|{name}| = {len(p)} is not a multiple of k = {ctx.k}")
        ctx.diagram().check(p)
    if lam.source != mu.source:
        raise SourceRangeMismatch(f"s(lambda) = {lam.source} differs from s(mu) = {mu.source}")


def commutator_norm(ctx: WeightContext, alpha: AlphaSequence, lam: FinitePath, mu: FinitePath,
                    depth: int) -> float:
    """Operator norm of ``[D, S_lam S_mu^*]`` on ``V_depth`` (largest singular value)."""
    _check_pair(ctx, lam, mu)
    n = depth * ctx.k
    if n < max(len(lam), len(mu)) + ctx.k:
        raise ValueError("depth must be at least max(|lambda|, |mu|)/k + 1")
    rows, _ = _basis_rows(ctx, n)

    def t(arr):
        down, m = s_star_array(ctx, mu, arr, n)
        return s_array(ctx, lam, down, m)

    out_len = n - len(mu) + len(lam)
    comm = dirac_array(ctx, alpha, t(rows), out_len) - t(dirac_array(ctx, alpha, rows, n))
    mat = (comm * np.sqrt(ctx.measures(out_len))).T
    return float(np.linalg.norm(mat, 2))


def _identity_on(ctx: WeightContext, n: int) -> np.ndarray:
    rows, _ = _basis_rows(ctx, n)
    return rows


def _coords(ctx: WeightContext, arr: np.ndarray, n: int) -> np.ndarray:
    return arr * np.sqrt(ctx.measures(n))


def ck_check(ctx: WeightContext, depth: int, seed: int = 0, n_random: int = 6) -> ReportBundle:
    """Residuals of the Cuntz-Krieger relations for the ``S_lam`` on ``V_depth``.

    CK1 and CK4 act on the whole of ``V_depth``.  CK2 and CK3 map out of
    ``V_depth`` and are checked on ``n_random`` seeded random vectors: CK3
    for every ``lam`` of square depth at most 2, CK2 for every composable
    pair of square depth at most 1.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    dia = ctx.diagram()
    k = ctx.k
    n = depth * k
    ident = _identity_on(ctx, n)
    verts = [FinitePath(v) for v in range(dia.nv)]

    ck1 = 0.0
    for v in verts:
        sv = s_array(ctx, v, ident, n)
        ck1 = max(ck1, float(np.max(np.abs(_coords(ctx, s_array(ctx, v, sv, n) - sv, n)))))
        for w in verts:
            if w != v:
                ck1 = max(ck1, float(np.max(np.abs(_coords(ctx, s_array(ctx, w, sv, n), n)))))

    rng = np.random.default_rng(seed)
    test = rng.standard_normal((n_random, dia.level(n).count))
    lams = [p for L in range(0, min(2, depth) * k + 1, k) for p in dia.paths(L)]

    ck3 = 0.0
    for lam in lams:
        up = s_array(ctx, lam, test, n)
        back, m = s_star_array(ctx, lam, up, n + len(lam))
        expect = s_array(ctx, FinitePath(lam.source), test, n)
        ck3 = max(ck3, float(np.max(np.abs(_coords(ctx, back - expect, m)))))

    short = [p for p in lams if len(p) <= k]
    ck2 = 0.0
    for lam in short:
        for eta in short:
            if eta.root != lam.source:
                continue
            both = s_array(ctx, lam, s_array(ctx, eta, test, n), n + len(eta))
            direct = s_array(ctx, FinitePath(lam.root, lam.edges + eta.edges), test, n)
            ck2 = max(ck2, float(np.max(np.abs(_coords(ctx, both - direct, n + len(lam) + len(eta))))))

    ck4 = 0.0
    for q in range(depth):
        for v in verts:
            acc = np.zeros_like(ident)
            lo, hi = dia.block(0, v.root, q * k)
            for i in range(lo, hi):
                lam = dia.path(q * k, i)
                down, m = s_star_array(ctx, lam, ident, n)
                s_array(ctx, lam, down, m, out=acc)
            sv = s_array(ctx, v, ident, n)
            ck4 = max(ck4, float(np.max(np.abs(_coords(ctx, acc - sv, n)))))

    results = {"depth": depth, "CK1": ck1, "CK2": ck2, "CK3": ck3, "CK4": ck4,
               "max_residual": max(ck1, ck2, ck3, ck4),
               "ck3_lambda_lengths": sorted({len(p) for p in lams}),
               "ck2_lambda_lengths": sorted({len(p) for p in short}),
               "random_vectors": n_random, "seed": seed}
    return ReportBundle("ck-check", {"depth": depth}, results)
