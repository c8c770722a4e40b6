"""Brute-force reference implementations.

Everything here works from the raw adjacency lists with explicit recursion
and dense matrices, sharing no code with the package beyond the input data.
"""

from fractions import Fraction
from itertools import product

import numpy as np

# name -> (adjacency, rho, x) with exact Perron data
BUNDLED_EXACT = {
    "G1": ([[[2]]], (2,), (Fraction(1),)),
    "G2": ([[[2]], [[3]]], (2, 3), (Fraction(1),)),
    "G3": ([[[1, 1], [1, 1]]], (2,), (Fraction(1, 2), Fraction(1, 2))),
    "G4": ([[[1, 1], [1, 1]], [[2, 0], [0, 2]]], (2, 2), (Fraction(1, 2), Fraction(1, 2))),
}


def colour(pattern, level):
    return pattern[(level - 1) % len(pattern)]


def brute_paths(adj, n, pattern=None):
    """All paths ``(root, ((r, s, m), ...))`` of length ``n``, lexicographic."""
    pattern = pattern or tuple(range(len(adj)))
    nv = len(adj[0])
    out = []

    def rec(root, edges):
        if len(edges) == n:
            out.append((root, tuple(edges)))
            return
        a = adj[colour(pattern, len(edges) + 1)]
        r = edges[-1][1] if edges else root
        for s in range(nv):
            for m in range(a[r][s]):
                rec(root, edges + [(r, s, m)])

    for v in range(nv):
        rec(v, [])
    return out


def source(path):
    root, edges = path
    return edges[-1][1] if edges else root


def degree(adj, n, pattern=None):
    pattern = pattern or tuple(range(len(adj)))
    d = [0] * len(adj)
    for lev in range(1, n + 1):
        d[colour(pattern, lev)] += 1
    return d


def exact_measure(name, path, pattern=None):
    """``M([path])`` as a Fraction."""
    adj, rho, x = BUNDLED_EXACT[name]
    val = x[source(path)]
    for r, d in zip(rho, degree(adj, len(path[1]), pattern)):
        val /= Fraction(r) ** d
    return val


def float_measure(adj, rho, x, path, pattern=None):
    val = float(x[source(path)])
    for r, d in zip(rho, degree(adj, len(path[1]), pattern)):
        val *= float(r) ** (-d)
    return val


def float_weight(adj, rho, x, path, delta):
    val = float(x[source(path)])
    for r, d in zip(rho, degree(adj, len(path[1]))):
        val *= float(r) ** (-d / delta)
    return val


def children(adj, path):
    root, edges = path
    a = adj[colour(tuple(range(len(adj))), len(edges) + 1)]
    s = source(path)
    return [(root, edges + ((s, w, m),)) for w in range(len(adj[0])) for m in range(a[s][w])]


def is_prefix(p, q):
    return p[0] == q[0] and q[1][: len(p[1])] == p[1]


def ancestor(path, n):
    return (path[0], path[1][:n])


# ----------------------------------------------------------------------------
# dense operators on coefficient vectors of step functions at a fixed length

def measure_vector(adj, rho, x, n, pattern=None):
    return np.array([float_measure(adj, rho, x, p, pattern) for p in brute_paths(adj, n, pattern)])


def conditional_expectation(adj, rho, x, n, m):
    """Dense matrix of ``E[f | length-m cylinders]`` acting on length-``n`` coefficients."""
    paths = brute_paths(adj, n)
    mv = measure_vector(adj, rho, x, n)
    size = len(paths)
    out = np.zeros((size, size))
    if m < 0:
        for i in range(size):
            out[i, :] = mv / mv.sum()
        return out
    for i, p in enumerate(paths):
        group = [j for j, q in enumerate(paths) if ancestor(q, m) == ancestor(p, m)]
        tot = mv[group].sum()
        for j in group:
            out[i, j] = mv[j] / tot
    return out


def dense_dirac(adj, rho, x, depth, alpha):
    """``sum_q alpha(q) (E_q - E_{q-1})`` in M-orthonormal coordinates."""
    k = len(adj)
    n = depth * k
    proj = [conditional_expectation(adj, rho, x, n, -1)]
    proj += [conditional_expectation(adj, rho, x, n, q * k) for q in range(depth + 1)]
    d = sum(alpha(q) * (proj[q + 1] - proj[q]) for q in range(depth + 1))
    sq = np.sqrt(measure_vector(adj, rho, x, n))
    return sq[:, None] * d / sq[None, :]


def dense_S(adj, rho, x, lam, n):
    """``S_lam`` from length ``n`` to length ``n + |lam|`` on coefficients."""
    k = len(adj)
    scale = 1.0
    for r, d in zip(rho, degree(adj, len(lam[1]))):
        scale *= float(r) ** (d / 2)
    src = brute_paths(adj, n)
    dst = brute_paths(adj, n + len(lam[1]))
    index = {p: i for i, p in enumerate(dst)}
    out = np.zeros((len(dst), len(src)))
    assert len(lam[1]) % k == 0
    for j, mu in enumerate(src):
        if mu[0] == source(lam):
            out[index[(lam[0], lam[1] + mu[1])], j] = scale
    return out


def brute_laplacian_of_indicator(adj, rho, x, delta, s, eta, length):
    """``Delta_s chi[eta]`` on length-``length`` coefficients, term by term."""
    paths = brute_paths(adj, length)
    index = {p: i for i, p in enumerate(paths)}

    def M(p):
        return float_measure(adj, rho, x, p)

    def w(p):
        return float_weight(adj, rho, x, p, delta)

    def chi(p):
        v = np.zeros(len(paths))
        for q in paths:
            if is_prefix(p, q):
                v[index[q]] = 1.0
        return v

    def F(g):
        mu = [M(c) for c in children(adj, g)]
        pairs = product(range(len(mu)), repeat=2)
        return 1.0 / sum(mu[i] * mu[j] for i, j in pairs if i != j)

    out = np.zeros(len(paths))
    for i in range(len(eta[1])):
        g, g1 = ancestor(eta, i), ancestor(eta, i + 1)
        c = 2 * F(g) * w(g) ** (s - 2)
        out -= c * ((M(g) - M(g1)) * chi(eta) - M(eta) * (chi(g) - chi(g1)))
    return out


def brute_laplacian(adj, rho, x, delta, s, length):
    """Dense matrix of ``Delta_s`` on length-``length`` coefficients."""
    paths = brute_paths(adj, length)
    cols = [brute_laplacian_of_indicator(adj, rho, x, delta, s, p, length) for p in paths]
    return np.array(cols).T


def eventually_periodic_head(prefix_edges, cycle_edges, n):
    edges = list(prefix_edges)
    while len(edges) < n:
        edges.extend(cycle_edges)
    return tuple(edges[:n])
