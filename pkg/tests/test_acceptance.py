"""Acceptance criteria 1-12 on the bundled graphs G1-G4.

Each test prints one ``CRITERION n: PASS|FAIL`` line with the measured
quantities, then asserts.
"""

import time

import numpy as np

from kgspectral.bratteli import FinitePath, count_paths
from kgspectral.dirac import AlphaSequence, ck_check, commutator_norm, dirac_eigen_report
from kgspectral.harmonic import (
    eigen_residual,
    eigenspace_basis,
    eigenspace_stability,
    integrate_array,
    verify_refinement,
    wavelet_basis,
)
from kgspectral.io import BUNDLED, load_bundled
from kgspectral.kgraph import spectral_data
from kgspectral.metric import make_context, measure_M
from kgspectral.zeta import (
    abscissa_estimate,
    dixmier_closed,
    dixmier_numeric,
    hausdorff_dim_estimate,
    hausdorff_sum,
)

from oracles import brute_paths, exact_measure, source

IRREDUCIBLE = ("G1", "G2", "G3")
DELTAS = (0.3, 0.5, 0.8)


def graph(name):
    return load_bundled(name).to_graph()


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_perron(capsys):
    worst, slowest = 0.0, 0.0
    for name in BUNDLED:
        g = graph(name)
        t0 = time.perf_counter()
        sd = spectral_data(g)
        slowest = max(slowest, time.perf_counter() - t0)
        for a, r in zip(g.matrices, sd.rho):
            worst = max(worst, float(np.max(np.abs(a @ sd.x - r * sd.x))))
    verdict(capsys, 1, worst <= 1e-10 and slowest < 1.0,
            f"max |A_i x - rho_i x| = {worst:.2e}, slowest {slowest:.3f}s")


def test_criterion_02_measure_normalisation(capsys, exact):
    worst = 0.0
    for name in BUNDLED:
        ctx = make_context(graph(name))
        for n in range(9):
            worst = max(worst, abs(float(np.sum(ctx.measures(n))) - 1.0))
    # second route: exact rational sums from enumeration
    exact_ok = all(sum(exact_measure(name, p) for p in brute_paths(exact[name][0], n)) == 1
                   for name in BUNDLED for n in range(6))
    verdict(capsys, 2, worst <= 1e-10 and exact_ok,
            f"max |sum M - 1| over n <= 8 = {worst:.2e}; exact rational sums n <= 5: {exact_ok}")


def test_criterion_03_dixmier_equals_measure(capsys):
    worst, spread, numeric = 0.0, 0.0, 0.0
    for name in IRREDUCIBLE:
        base = make_context(graph(name))
        dia = base.diagram()
        closed_by_delta = []
        for delta in DELTAS:
            ctx = base.with_delta(delta)
            vals = []
            for n in range(3 * ctx.k + 1):
                for i in range(dia.level(n).count):
                    gamma = dia.path(n, i)
                    c, m = dixmier_closed(ctx, gamma), measure_M(ctx, gamma)
                    worst = max(worst, abs(c - m) / m)
                    vals.append(c)
            closed_by_delta.append(np.array(vals))
        for v in closed_by_delta[1:]:
            spread = max(spread, float(np.max(np.abs(v - closed_by_delta[0]) / closed_by_delta[0])))
        # numeric limit route on the one-square cylinders
        ctx = base.with_delta(0.5)
        for i in range(dia.level(ctx.k).count):
            gamma = dia.path(ctx.k, i)
            numeric = max(numeric, abs(dixmier_numeric(ctx, gamma) - measure_M(ctx, gamma))
                          / measure_M(ctx, gamma))
    verdict(capsys, 3, worst <= 1e-6 and spread <= 1e-6 and numeric <= 1e-4,
            f"closed vs M {worst:.2e}, delta spread {spread:.2e}, numeric vs M {numeric:.2e}")


def test_criterion_04_abscissa(capsys):
    rows, ok = [], True
    for name in IRREDUCIBLE:
        for delta in DELTAS:
            t0 = time.perf_counter()
            est = abscissa_estimate(make_context(graph(name), delta))
            dt = time.perf_counter() - t0
            ok &= abs(est - delta) <= 0.01 and dt < 10
            rows.append(f"{name}/{delta}:{est - delta:+.1e}({dt:.2f}s)")
    verdict(capsys, 4, ok, "estimate - delta: " + " ".join(rows))


def test_criterion_05_hausdorff(capsys):
    worst = 0.0
    for name in IRREDUCIBLE:
        for delta in DELTAS:
            worst = max(worst, abs(hausdorff_dim_estimate(make_context(graph(name), delta)) - delta))
    ctx = make_context(graph("G1"), 0.5)
    exact_one = all(hausdorff_sum(ctx, q, 0.5) == 1.0 for q in range(21))
    verdict(capsys, 5, worst <= 0.02 and exact_one,
            f"max |dim - delta| = {worst:.2e}; G1 cover sums == 1 for q <= 20: {exact_one}")


def test_criterion_06_wavelets(capsys):
    min_sv, pairing, dims_ok = np.inf, 0.0, True
    for name in BUNDLED:
        ctx = make_context(graph(name))
        dia = ctx.diagram()
        k = ctx.k
        dims = []
        for n in range(3):
            w = wavelet_basis(ctx, n)
            dims.append(w.dim)
            unit = w.coeffs / np.sqrt(np.diag(w.gram))[:, None]
            min_sv = min(min_sv, float(np.linalg.svd(unit * np.sqrt(ctx.measures(w.length)),
                                                     compute_uv=False).min()))
            ints = integrate_array(ctx, unit, w.length, n * k)
            pairing = max(pairing, float(np.max(np.abs(ints / np.sqrt(ctx.measures(n * k))))))
            dims_ok &= dia.nv + sum(dims) == dia.count((n + 1) * k)
    verdict(capsys, 6, min_sv > 1e-8 and pairing <= 1e-10 and dims_ok,
            f"min singular value (unit vectors) {min_sv:.3f}, max pairing with V_n "
            f"{pairing:.2e}, dim identity N <= 3: {dims_ok}")


def test_criterion_07_refinement(capsys):
    worst, dims_ok = 0.0, True
    for name in IRREDUCIBLE:
        ctx = make_context(graph(name))
        for n in range(3):
            r = verify_refinement(ctx, n).results
            worst = max(worst, r["principal_angle_W_vs_E"])
            dims_ok &= r["dim_identity"]
    verdict(capsys, 7, worst <= 1e-8 and dims_ok,
            f"max angle W_n vs sum E_gamma {worst:.2e}, dimension identities {dims_ok}")


def test_criterion_08_laplacian(capsys):
    residual, spread, angle, count = 0.0, 0.0, 0.0, 0
    for name in IRREDUCIBLE:
        ctx = make_context(graph(name))
        dia = ctx.diagram()
        for n in range(2 * ctx.k + 1):
            for i in range(dia.level(n).count):
                basis = eigenspace_basis(ctx, dia.path(n, i))
                for s in (2.0, 4.0):
                    r = eigen_residual(ctx, s, basis)
                    residual = max(residual, r["max_residual"])
                    spread = max(spread, r["quotient_spread"])
                    count += 1
        angle = max(angle, eigenspace_stability(ctx, 2 * ctx.k + 1, 2.0, 4.0))
    verdict(capsys, 8, residual <= 1e-8 and spread <= 1e-9 and angle <= 1e-8,
            f"{count} (E_gamma, s) pairs: max residual {residual:.2e}, eigenvalue spread "
            f"{spread:.2e}, s=2 vs s=4 eigenspace angle {angle:.2e}")


def test_criterion_09_dirac(capsys):
    alpha = AlphaSequence.linear(1.0)
    angle = 0.0
    for name in BUNDLED:
        r = dirac_eigen_report(make_context(graph(name)), alpha, 3).results
        angle = max(angle, r["max_principal_angle"])
        if name == "G2":
            mult = [m["multiplicity"] for m in r["multiplicities"]]
    ok = angle <= 1e-8 and mult[:3] == [1, 5, 30]
    verdict(capsys, 9, ok, f"max angle eigenspace vs W_q {angle:.2e}; G2 multiplicities {mult}")


def test_criterion_10_cuntz_krieger(capsys):
    worst = {key: 0.0 for key in ("CK1", "CK2", "CK3", "CK4")}
    for name in BUNDLED:
        ctx = make_context(graph(name))
        for depth in range(1, 5):
            r = ck_check(ctx, depth).results
            for key in worst:
                worst[key] = max(worst[key], r[key])
    verdict(capsys, 10, max(worst.values()) <= 1e-12,
            ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_11_commutator(capsys):
    ctx = make_context(graph("G1"))
    lam = FinitePath(0, ((0, 0, 0),))
    norms = [commutator_norm(ctx, AlphaSequence.linear(1.0), lam, FinitePath(0), d)
             for d in range(4, 9)]
    variation = (max(norms) - min(norms)) / max(norms)
    verdict(capsys, 11, variation < 0.05,
            f"norms at depths 4..8 {[round(v, 6) for v in norms]}, variation {variation:.1e}")


def test_criterion_12_enumeration(capsys, exact):
    checked, ok = 0, True
    for name in BUNDLED:
        g = graph(name)
        adj = exact[name][0]
        for n in range(7):
            paths = brute_paths(adj, n)
            for r in range(g.n_vertices):
                for s in range(g.n_vertices):
                    want = sum(1 for p in paths if p[0] == r and source(p) == s)
                    ok &= count_paths(g, n, r, s) == want
                    checked += 1
    verdict(capsys, 12, ok, f"{checked} (graph, n, r, s) counts equal brute-force enumeration")
