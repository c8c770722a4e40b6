import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgspectral.bratteli import FinitePath
from kgspectral.dirac import (
    AlphaSequence,
    ck_check,
    commutator_norm,
    dirac_eigen_report,
    dirac_matrix,
    project_array,
)
from kgspectral.errors import NotRainbowMultiple, SourceRangeMismatch

from oracles import dense_dirac, dense_S

NAMES = ("G1", "G2", "G3", "G4")
ALPHA = AlphaSequence.linear(1.0)


@pytest.mark.parametrize("name", NAMES)
def test_dirac_matches_dense_projections(context, exact, name):
    adj, rho, x = exact[name]
    ctx = context(name)
    depth = 2
    want = dense_dirac(adj, rho, x, depth, ALPHA)
    got = dirac_matrix(ctx, ALPHA, depth).matrix
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_dirac_is_symmetric(context, name):
    mat = dirac_matrix(context(name), ALPHA, 3).matrix
    assert np.max(np.abs(mat - mat.T)) <= 1e-12


@pytest.mark.parametrize("name", NAMES)
def test_projections_idempotent_and_nested(context, name):
    ctx = context(name)
    n = 3 * ctx.k
    f = np.random.default_rng(0).standard_normal((3, ctx.diagram().level(n).count))
    for q in range(-1, 4):
        pq = project_array(ctx, q, f, n)
        np.testing.assert_allclose(project_array(ctx, q, pq, n), pq, atol=1e-12)
        for r in range(-1, q):
            pr = project_array(ctx, r, f, n)
            np.testing.assert_allclose(project_array(ctx, r, pq, n), pr, atol=1e-12)
            np.testing.assert_allclose(project_array(ctx, q, pr, n), pr, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.0, 5.0))
def test_dirac_linear_in_alpha(context, c, a0):
    ctx = context("G4")
    base = dirac_matrix(ctx, AlphaSequence.linear(1.0, 0.0), 2).matrix
    ident = dirac_matrix(ctx, AlphaSequence.custom([1.0, 2.0]), 2).matrix
    proj_const = np.outer(np.sqrt(ctx.measures(4)), np.sqrt(ctx.measures(4)))
    # alpha_q = a0 + c q acts as c D_q + a0 (I - P_-1)
    scaled = dirac_matrix(ctx, AlphaSequence.linear(c, a0), 2).matrix
    want = c * base + a0 * (np.eye(len(base)) - proj_const)
    np.testing.assert_allclose(scaled, want, atol=1e-10 * max(c, a0, 1))
    np.testing.assert_allclose(ident, base + np.eye(len(base)) - proj_const, atol=1e-12)


def test_multiplicities_g2(context):
    r = dirac_eigen_report(context("G2"), ALPHA, 3).results
    mult = [m["multiplicity"] for m in r["multiplicities"]]
    assert mult == [1, 5, 30, 180]
    assert [lv["multiplicity"] for lv in r["wavelet_levels"]] == [5, 30, 180]
    assert r["max_principal_angle"] <= 1e-8
    assert r["kernel_dimension"] == 1


def test_multiplicities_g1_and_shifted_alpha(context):
    r = dirac_eigen_report(context("G1"), ALPHA, 3).results
    assert [(round(m["eigenvalue"], 8), m["multiplicity"]) for m in r["multiplicities"]] == [
        (0.0, 1), (2.0, 1), (3.0, 2), (4.0, 4)]
    r0 = dirac_eigen_report(context("G1"), AlphaSequence.linear(1.0, 0.0), 3).results
    assert [m["multiplicity"] for m in r0["multiplicities"]] == [1, 1, 2, 4]


@pytest.mark.parametrize("name", ["G3", "G4"])
def test_vertex_differences_get_alpha_zero(context, name):
    r = dirac_eigen_report(context(name), ALPHA, 2).results
    assert r["V0_complement"]["multiplicity"] == r["V0_complement"]["expected"] == 1
    assert r["max_principal_angle"] <= 1e-8


@pytest.mark.parametrize("name", NAMES)
def test_ck_relations(context, name):
    r = ck_check(context(name), 3).results
    for key in ("CK1", "CK2", "CK3", "CK4"):
        assert r[key] <= 1e-12


def test_ck_relations_dense(context, exact):
    # dense S_lam from enumeration; adjoints taken in L^2(M)
    adj, rho, x = exact["G4"]
    ctx = context("G4")
    d = ctx.diagram()
    m2, m4 = ctx.measures(2), ctx.measures(4)
    roots2, roots4 = d.ancestors(2, 0), d.ancestors(4, 0)
    ops = []
    for lam in d.paths(2):
        s = dense_S(adj, rho, x, (lam.root, lam.edges), 2)
        adjoint = (s * m4[:, None]).T / m2[:, None]
        ops.append((lam, s, adjoint))
        np.testing.assert_allclose(adjoint @ s, np.diag((roots2 == lam.source) * 1.0), atol=1e-12)
    for v in range(2):
        acc = sum(s @ a for lam, s, a in ops if lam.root == v)
        np.testing.assert_allclose(acc, np.diag((roots4 == v) * 1.0), atol=1e-12)


def test_commutator_stabilises_g1(context):
    ctx = context("G1")
    lam = FinitePath(0, ((0, 0, 1),))
    norms = [commutator_norm(ctx, ALPHA, lam, FinitePath(0), d) for d in range(4, 9)]
    assert (max(norms) - min(norms)) / max(norms) < 0.05
    # on W_q the commutator is (alpha_{q+2} - alpha_{q+1}) S_lam, norm 1; on constants
    # it is alpha_1 sqrt(2) (chi[lam] - 1/2), norm sqrt(2); the images are orthogonal
    assert norms[0] == pytest.approx(np.sqrt(2), rel=1e-12)


def test_commutator_scales_with_alpha(context):
    ctx = context("G2")
    lam = ctx.diagram().path(2, 3)
    mu = FinitePath(0)
    a = commutator_norm(ctx, ALPHA, lam, mu, 3)
    b = commutator_norm(ctx, AlphaSequence.linear(3.0), lam, mu, 3)
    assert b == pytest.approx(3 * a, rel=1e-12)


def test_commutator_errors(context):
    ctx = context("G2")
    with pytest.raises(NotRainbowMultiple):
        commutator_norm(ctx, ALPHA, FinitePath(0, ((0, 0, 0),)), FinitePath(0), 3)
    ctx4 = context("G4")
    lam = FinitePath(0, ((0, 1, 0), (1, 1, 0)))
    with pytest.raises(SourceRangeMismatch):
        commutator_norm(ctx4, ALPHA, lam, FinitePath(0), 3)


def test_alpha_parsing():
    assert AlphaSequence.parse("linear:1")(0) == 1.0
    assert AlphaSequence.parse("linear:2,0")(3) == 6.0
    custom = AlphaSequence.parse("custom:0,1,3")
    assert [custom(q) for q in range(5)] == [0.0, 1.0, 3.0, 5.0, 7.0]
    assert custom.lipschitz_bound == 2.0
    for bad in ("linear:", "custom:1", "custom:2,1", "cubic:1", "linear:-1"):
        with pytest.raises(ValueError):
            AlphaSequence.parse(bad)
