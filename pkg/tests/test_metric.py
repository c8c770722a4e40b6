import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgspectral.bratteli import FinitePath, LazyInfinitePath, diagram
from kgspectral.errors import InvalidDelta
from kgspectral.metric import (
    cylinder_measures,
    diam,
    distance,
    make_context,
    measure_M,
    weight,
)

from oracles import brute_paths, exact_measure, float_weight

NAMES = ("G1", "G2", "G3", "G4")


@pytest.mark.parametrize("name", NAMES)
def test_measure_matches_exact_fractions(context, exact, name):
    ctx = context(name)
    adj = exact[name][0]
    for n in range(5):
        want = [float(exact_measure(name, p)) for p in brute_paths(adj, n)]
        np.testing.assert_allclose(ctx.measures(n), want, rtol=1e-13, atol=0)
        assert sum(exact_measure(name, p) for p in brute_paths(adj, n)) == 1


@pytest.mark.parametrize("name", NAMES)
def test_measure_is_additive(context, name):
    ctx = context(name)
    d = ctx.diagram()
    for n in range(4):
        parent = ctx.measures(n)
        kids = np.add.reduceat(ctx.measures(n + 1), d.level(n + 1).starts[:-1])
        np.testing.assert_allclose(kids, parent, rtol=1e-13)


@pytest.mark.parametrize("name", NAMES)
def test_weights_match_brute(context, exact, name):
    adj, rho, x = exact[name]
    for delta in (0.3, 0.5, 0.8):
        ctx = context(name, delta)
        want = [float_weight(adj, rho, x, p, delta) for p in brute_paths(adj, 3)]
        np.testing.assert_allclose(ctx.weights(3), want, rtol=1e-12)


def test_single_path_helpers(context):
    ctx = context("G2")
    lam = FinitePath(0, ((0, 0, 1), (0, 0, 2)))
    assert measure_M(ctx, lam) == pytest.approx(1 / 6, rel=1e-15)
    assert weight(ctx, lam) == pytest.approx(1 / 36, rel=1e-15)
    assert diam(ctx, lam) == weight(ctx, lam)


def test_measure_table(context):
    table = cylinder_measures(context("G3"), 2)
    assert len(table.paths) == 8
    assert sum(table.as_dict().values()) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(np.exp(table.log_values), table.values)


def test_delta_bounds(graphs):
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(InvalidDelta):
            make_context(graphs["G1"], bad)


def test_delta_default_from_graph(graphs):
    assert make_context(graphs["G1"]).delta == 0.5


def test_scale_relation(context):
    # w_delta = x_s^(1 - 1/delta) M^(1/delta)
    ctx = context("G4", 0.3)
    d = ctx.diagram()
    src = d.level(4).source
    lhs = ctx.weights(4)
    rhs = ctx.x[src] ** (1 - 1 / 0.3) * ctx.measures(4) ** (1 / 0.3)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


# ultrametric ------------------------------------------------------------------

def _edges(adj, level, r, pattern=(0, 1)):
    a = adj[pattern[(level - 1) % len(pattern)]]
    return [(r, s, m) for s in range(len(a)) for m in range(a[r][s])]


@st.composite
def infinite_paths_g4(draw):
    adj = [[[1, 1], [1, 1]], [[2, 0], [0, 2]]]
    root = draw(st.integers(0, 1))
    edges, v = [], root
    for level in range(1, draw(st.sampled_from([0, 2, 4, 6])) + 1):
        opts = _edges(adj, level, v)
        e = opts[draw(st.integers(0, len(opts) - 1))]
        edges.append(e)
        v = e[1]
    cyc, u = [], v
    for level in range(1, 3):
        opts = [e for e in _edges(adj, level, u) if e[1] == v]
        e = opts[draw(st.integers(0, len(opts) - 1))]
        cyc.append(e)
        u = e[1]
    return LazyInfinitePath(FinitePath(root, tuple(edges)), tuple(cyc))


def _brute_distance(ctx, x, y, depth=40):
    if x.root != y.root:
        return 1.0
    adj = [a.tolist() for a in ctx.graph.matrices]
    rho, xv = ctx.sd.rho, ctx.x
    for i in range(depth):
        if x.edge(i) != y.edge(i):
            head = x.head(i)
            return float_weight(adj, rho, xv, (head.root, head.edges), ctx.delta)
    return 0.0


@settings(max_examples=80, deadline=None)
@given(infinite_paths_g4(), infinite_paths_g4(), infinite_paths_g4())
def test_ultrametric_inequality(context, x, y, z):
    ctx = context("G4")
    dxy, dyz, dxz = distance(ctx, x, y), distance(ctx, y, z), distance(ctx, x, z)
    assert dxz <= max(dxy, dyz) * (1 + 1e-12)
    assert distance(ctx, y, x) == dxy
    assert (dxy == 0) == (x.head(40) == y.head(40))
    assert dxy == pytest.approx(_brute_distance(ctx, x, y), rel=1e-12)


def test_distance_special_values(context):
    ctx = context("G1")
    e0, e1 = (0, 0, 0), (0, 0, 1)
    x = LazyInfinitePath(FinitePath(0), (e0,))
    y = LazyInfinitePath(FinitePath(0, (e0, e0)), (e1,))
    assert distance(ctx, x, x) == 0.0
    assert distance(ctx, x, y) == pytest.approx(2.0 ** (-2 / 0.5))
    ctx3 = context("G3")
    a = LazyInfinitePath(FinitePath(0), ((0, 0, 0),))
    b = LazyInfinitePath(FinitePath(1), ((1, 1, 0),))
    assert distance(ctx3, a, b) == 1.0


def test_cylinder_diameter_attained(context):
    # two paths in [lam] diverging right after lam realise w(lam)
    ctx = context("G2")
    lam = FinitePath(0, ((0, 0, 1), (0, 0, 0)))
    x = LazyInfinitePath(lam.extend((0, 0, 0)), ((0, 0, 0), (0, 0, 0)))
    y = LazyInfinitePath(lam.extend((0, 0, 1)), ((0, 0, 0), (0, 0, 0)))
    assert distance(ctx, x, y) == pytest.approx(diam(ctx, lam), rel=1e-14)
    assert math.isclose(diam(ctx, lam), 6.0 ** (-2), rel_tol=1e-14)


def test_measure_sum_deep(context):
    for name in NAMES:
        ctx = context(name)
        d = diagram(ctx.graph)
        assert abs(ctx.measures(8).sum() - 1) <= 1e-10, d.count(8)
