"""Command-line interface ``kgs``.

Every subcommand takes a graph (a JSON file or a bundled name ``G1`` ...
``G4``), prints a JSON report to stdout and exits with

* 0 on success,
* 2 on invalid input or a failed structural check,
* 3 when a limit cannot be decided or an iteration does not converge.

``--format csv`` writes the command's table (``measure``, ``wavelets``,
``commutator``, ``hausdorff``, ``zeta``) as CSV, to ``--out`` if given and
to stdout otherwise.  With ``--out`` and JSON format the report goes to the
file.  ``--emit-series PREFIX`` writes two-column ``x y`` text files for
plotting.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bratteli import FinitePath, parse_path
from .dirac import AlphaSequence, DEFAULT_ALPHA, ck_check, commutator_norm, dirac_eigen_report
from .errors import KGSError, NoConvergence, Undecided, ValidationError
from .harmonic import (
    E_MINUS_ONE,
    E_ZERO,
    eigen_residual,
    eigenspace_basis,
    eigenspace_stability,
    integrate_array,
    j_wavelet_basis,
    refined_wavelet_basis,
    verify_refinement,
    wavelet_basis,
)
from .io import GraphDocument, load_graph
from .kgraph import validate
from .metric import WeightContext, make_context
from .report import ReportBundle, dumps
from .zeta import (
    UNDECIDED,
    abscissa_estimate,
    dixmier,
    dixmier_closed,
    hausdorff_dim_estimate,
    hausdorff_sum,
    zeta_eval,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNDECIDED = 3

COMMANDS = ("validate", "spectral", "measure", "zeta", "dixmier", "hausdorff", "wavelets",
            "laplacian", "dirac", "ck-check", "commutator")
MEASURE_COLUMNS = ("path", "degree", "M", "w_delta", "diam")


@dataclass
class Outcome:
    bundle: ReportBundle
    exit_code: int = EXIT_OK
    table: tuple[list[str], list[list]] | None = None
    series: dict[str, list[tuple[float, float]]] = field(default_factory=dict)


def _depth_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _gamma(text: str):
    return text if text in (E_MINUS_ONE, E_ZERO) else parse_path(text)


def _inputs(doc: GraphDocument, ctx: WeightContext | None, **extra) -> dict:
    out = {"k": doc.k, "adjacency": doc.adjacency}
    if ctx is not None:
        out["delta"] = ctx.delta
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# commands ---------------------------------------------------------------------

def cmd_validate(doc: GraphDocument, args) -> Outcome:
    g = doc.to_graph()
    report = validate(g)
    results = {"ok": report.ok, "measure_ok": report.measure_ok, "failures": report.failures(),
               "checks": report.as_dict()}
    comm = report.checks["commutation"]
    if not comm.passed:
        i, j = comm.detail["pair"]
        results["non_commuting_matrices"] = [f"A_{i}", f"A_{j}"]
    code = EXIT_OK if report.ok else EXIT_INVALID
    return Outcome(ReportBundle("validate", _inputs(doc, None), results), code)


def cmd_spectral(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    sd = ctx.sd
    residuals = [float(np.max(np.abs(a @ sd.x - r * sd.x)))
                 for a, r in zip(ctx.graph.matrices, sd.rho)]
    results = {"rho": sd.rho, "x": sd.x, "rho_prod": sd.rho_prod, "cantor_ok": sd.cantor_ok,
               "period": sd.period, "product_irreducible": sd.product_irreducible,
               "cesaro": [c for c in sd.cesaro], "eigen_residuals": residuals}
    warnings = [] if sd.product_irreducible else ["A = A_1...A_k is reducible"]
    return Outcome(ReportBundle("spectral", _inputs(doc, ctx), results, warnings))


def cmd_measure(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    n = args.depth
    dia = ctx.diagram()
    paths = dia.paths(n)
    deg = "(" + ",".join(str(int(d)) for d in dia.degree(n)) + ")"
    m, w = ctx.measures(n), ctx.weights(n)
    warnings = []
    if not ctx.diameter_ok:
        warnings.append("diameter hypothesis fails; diam column left empty")
    rows = [[str(p), deg, _fmt(mi), _fmt(wi), _fmt(wi) if ctx.diameter_ok else ""]
            for p, mi, wi in zip(paths, m, w)]
    results = {"depth": n, "count": len(paths), "total_M": float(np.sum(m)),
               "rows": [dict(zip(MEASURE_COLUMNS, r)) for r in rows]}
    return Outcome(ReportBundle("measure", _inputs(doc, ctx, depth=n), results, warnings),
                   table=(list(MEASURE_COLUMNS), rows))


def cmd_zeta(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    if args.s is None:
        est = abscissa_estimate(ctx, tol=args.tol, depth=args.depth)
        results = {"abscissa_estimate": est, "tol": args.tol, "delta": ctx.delta}
        return Outcome(ReportBundle("zeta", _inputs(doc, ctx, depth=args.depth), results))
    depth = args.depth or 60
    ev = zeta_eval(ctx, args.s, depth)
    results = {**ev.as_dict(), "result": ev.partial_sum}
    pts = [(float(i), float(v)) for i, v in enumerate(ev.level_sums)]
    code = EXIT_UNDECIDED if ev.classification == UNDECIDED else EXIT_OK
    return Outcome(ReportBundle("zeta", _inputs(doc, ctx, s=args.s, depth=depth), results),
                   code, table=(["n", "level_sum"], [[int(x), _fmt(y)] for x, y in pts]),
                   series={"level_sums": pts})


def cmd_dixmier(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    warnings = []
    if not ctx.sd.product_irreducible:
        warnings.append("A = A_1...A_k is reducible; the closed form need not equal M")
    if args.gamma is not None:
        gamma = parse_path(args.gamma)
        res = dixmier(ctx, gamma, steps=args.steps)
        bundle = ReportBundle("dixmier", _inputs(doc, ctx, gamma=args.gamma, steps=args.steps),
                              res.as_dict(), warnings)
        return Outcome(bundle, series={"probes": res.probes})
    depth = args.depth if args.depth is not None else ctx.k
    dia = ctx.diagram()
    rows, worst = [], 0.0
    for n in range(depth + 1):
        for p, m in zip(dia.paths(n), ctx.measures(n)):
            c = dixmier_closed(ctx, p)
            err = abs(c - m) / m
            worst = max(worst, err)
            rows.append({"gamma": str(p), "closed_form": c, "M": float(m), "rel_error": err})
    results = {"depth": depth, "max_rel_error_closed_vs_M": worst, "cylinders": rows}
    cols = ["gamma", "closed_form", "M", "rel_error"]
    table = (cols, [[r["gamma"]] + [_fmt(r[c]) for c in cols[1:]] for r in rows])
    return Outcome(ReportBundle("dixmier", _inputs(doc, ctx, depth=depth), results, warnings),
                   table=table)


def cmd_hausdorff(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    s = ctx.delta if args.s is None else args.s
    q_max = args.depth if args.depth is not None else 20
    sums = [(float(q), hausdorff_sum(ctx, q, s)) for q in range(q_max + 1)]
    est = hausdorff_dim_estimate(ctx, tol=args.tol)
    results = {"dimension_estimate": est, "tol": args.tol, "s": s,
               "cover_sums": [{"q": int(q), "sum": v} for q, v in sums]}
    return Outcome(ReportBundle("hausdorff", _inputs(doc, ctx, s=s, depth=q_max), results),
                   table=(["q", "sum"], [[int(q), _fmt(v)] for q, v in sums]),
                   series={"cover_sums": sums})


def cmd_wavelets(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    n = args.level
    if args.J is not None:
        basis = j_wavelet_basis(ctx, _int_list(args.J), n, args.refined)
    elif args.refined is not None:
        basis = refined_wavelet_basis(ctx, n, args.refined)
    else:
        basis = wavelet_basis(ctx, n)
    dia = ctx.diagram(basis.pattern)
    period = dia.period
    gram = basis.gram
    sv = np.linalg.svd(gram, compute_uv=False) if basis.dim else np.zeros(0)
    base_len = n * period
    # pairing with the M-orthonormal indicators of V_n
    pair = integrate_array(ctx, basis.coeffs, basis.length, base_len, basis.pattern)
    pair = pair / np.sqrt(ctx.measures(base_len, basis.pattern))
    results = {
        "label": basis.label, "level": n, "dim": basis.dim, "length": basis.length,
        "gram_min_singular": float(sv.min()) if basis.dim else None,
        "gram_max_singular": float(sv.max()) if basis.dim else None,
        "gram_offdiag_max": float(np.max(np.abs(gram - np.diag(np.diag(gram))))) if basis.dim else 0.0,
        "max_pairing_V_n": float(np.max(np.abs(pair))) if basis.dim else 0.0,
        "gram": gram,
    }
    if args.J is None and args.refined is None:
        dims = [wavelet_basis(ctx, q).dim for q in range(n + 1)]
        results["completeness"] = {"dim_V0": dia.nv, "dim_W": dims,
                                   "count": dia.count((n + 1) * period),
                                   "holds": dia.nv + sum(dims) == dia.count((n + 1) * period)}
    header = [str(p) for p in dia.paths(basis.length)]
    rows = [[_fmt(v) for v in row] for row in basis.coeffs]
    inputs = _inputs(doc, ctx, level=n, refined=args.refined, J=args.J)
    return Outcome(ReportBundle("wavelets", inputs, results), table=(header, rows))


def cmd_laplacian(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    s = 2.0 if args.s is None else args.s
    if args.gamma is None:
        bundle = verify_refinement(ctx, args.level, s)
        bundle.command = "laplacian"
        bundle.inputs = _inputs(doc, ctx, s=s, level=args.level)
        return Outcome(bundle)
    basis = eigenspace_basis(ctx, _gamma(args.gamma))
    results = {"gamma": args.gamma, "dim": basis.dim, **eigen_residual(ctx, s, basis)}
    if args.s2 is not None:
        length = max(basis.length, 1)
        results["stability_angle"] = eigenspace_stability(ctx, length, s, args.s2)
    warnings = [] if ctx.sd.product_irreducible else [
        "A = A_1...A_k is reducible; E_gamma uses M in place of mu_delta"]
    return Outcome(ReportBundle("laplacian", _inputs(doc, ctx, s=s, gamma=args.gamma, s2=args.s2),
                                results, warnings))


def cmd_dirac(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    bundle = dirac_eigen_report(ctx, args.alpha, args.depth or 3)
    bundle.inputs = _inputs(doc, ctx, depth=args.depth or 3, alpha=args.alpha.as_dict())
    return Outcome(bundle)


def cmd_ck_check(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    depth = args.depth or 3
    bundle = ck_check(ctx, depth, seed=args.seed)
    bundle.inputs = _inputs(doc, ctx, depth=depth, seed=args.seed)
    return Outcome(bundle)


def cmd_commutator(doc: GraphDocument, args) -> Outcome:
    ctx = make_context(doc.to_graph(), args.delta)
    lam = parse_path(args.lam) if args.lam else ctx.diagram().path(ctx.k, 0)
    mu = parse_path(args.mu) if args.mu else FinitePath(lam.source)
    depths = _depth_range(args.depths)
    norms = [(float(d), commutator_norm(ctx, args.alpha, lam, mu, d)) for d in depths]
    vals = np.array([v for _, v in norms])
    variation = float((vals.max() - vals.min()) / vals.max()) if vals.max() > 0 else 0.0
    results = {"lambda": str(lam), "mu": str(mu), "alpha": args.alpha.as_dict(),
               "norms": [{"depth": int(d), "norm": v} for d, v in norms],
               "relative_variation": variation, "lipschitz_bound": args.alpha.lipschitz_bound}
    inputs = _inputs(doc, ctx, **{"lambda": str(lam), "mu": str(mu), "depths": depths,
                                  "alpha": args.alpha.as_dict()})
    return Outcome(ReportBundle("commutator", inputs, results),
                   table=(["depth", "norm"], [[int(d), _fmt(v)] for d, v in norms]),
                   series={"norms": norms})


HANDLERS = {
    "validate": cmd_validate, "spectral": cmd_spectral, "measure": cmd_measure,
    "zeta": cmd_zeta, "dixmier": cmd_dixmier, "hausdorff": cmd_hausdorff,
    "wavelets": cmd_wavelets, "laplacian": cmd_laplacian, "dirac": cmd_dirac,
    "ck-check": cmd_ck_check, "commutator": cmd_commutator,
}


# plumbing ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("graph", help="graph JSON file or bundled name (G1, G2, G3, G4)")
    common.add_argument("--delta", type=float, default=None, help="weight exponent in (0, 1)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing")
    common.add_argument("--emit-series", metavar="PREFIX", default=None,
                        help="write PREFIX.<name>.txt two-column series")

    parser = argparse.ArgumentParser(prog="kgs", description="Spectral geometry of finite k-graphs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = {name: sub.add_parser(name, parents=[common]) for name in COMMANDS}

    p["measure"].add_argument("--depth", type=int, required=True)
    p["zeta"].add_argument("--s", type=float, default=None,
                           help="evaluate at s; omit to estimate the abscissa")
    p["zeta"].add_argument("--depth", type=int, default=None)
    p["zeta"].add_argument("--tol", type=float, default=1e-3)
    p["dixmier"].add_argument("--gamma", default=None, help="path root:(r,s,m)/...")
    p["dixmier"].add_argument("--depth", type=int, default=None)
    p["dixmier"].add_argument("--steps", type=int, default=10)
    p["hausdorff"].add_argument("--s", type=float, default=None)
    p["hausdorff"].add_argument("--depth", type=int, default=None)
    p["hausdorff"].add_argument("--tol", type=float, default=1e-3)
    p["wavelets"].add_argument("--level", type=int, required=True)
    p["wavelets"].add_argument("--refined", type=int, default=None)
    p["wavelets"].add_argument("--J", default=None, help="comma-separated J = (j_1, ..., j_k)")
    p["laplacian"].add_argument("--s", type=float, default=None)
    p["laplacian"].add_argument("--s2", type=float, default=None,
                                help="second exponent for the eigenspace stability check")
    p["laplacian"].add_argument("--gamma", default=None, help="path, E-1 or E0")
    p["laplacian"].add_argument("--level", type=int, default=0)
    for name in ("dirac", "commutator"):
        p[name].add_argument("--alpha", type=AlphaSequence.parse, default=DEFAULT_ALPHA,
                             help="linear:C, linear:C,A0 or custom:v0,v1,...")
    p["dirac"].add_argument("--depth", type=int, default=None)
    p["ck-check"].add_argument("--depth", type=int, default=None)
    p["ck-check"].add_argument("--seed", type=int, default=0)
    p["commutator"].add_argument("--lambda", dest="lam", default=None)
    p["commutator"].add_argument("--mu", default=None)
    p["commutator"].add_argument("--depths", default="4..8")
    return parser


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write(text: str, out: str | None, stdout) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def _error_bundle(command: str, exc: Exception) -> ReportBundle:
    err = {"type": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "field", ""):
        err["field"] = exc.field
    report = getattr(exc, "report", None)
    if report is not None:
        err["checks"] = report.as_dict()
    return ReportBundle(command, {}, {"error": err})


def execute(args: argparse.Namespace) -> Outcome:
    start = time.perf_counter()
    try:
        doc = load_graph(args.graph)
        outcome = HANDLERS[args.command](doc, args)
    except (ValidationError, MemoryError, ValueError) as exc:
        return Outcome(_error_bundle(args.command, exc), EXIT_INVALID)
    except (Undecided, NoConvergence) as exc:
        return Outcome(_error_bundle(args.command, exc), EXIT_UNDECIDED)
    except KGSError as exc:
        return Outcome(_error_bundle(args.command, exc), 1)
    if args.timing:
        outcome.bundle.timing = {"seconds": time.perf_counter() - start}
    return outcome


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    outcome = execute(args)
    if args.emit_series:
        for name, pts in outcome.series.items():
            lines = "".join(f"{_fmt(x)} {_fmt(y)}\n" for x, y in pts)
            Path(f"{args.emit_series}.{name}.txt").write_text(lines, encoding="utf-8")
    if args.format == "csv" and outcome.table is None and outcome.exit_code == EXIT_OK:
        outcome.bundle.warnings.append(f"{args.command} has no CSV table; JSON emitted")
    if args.format == "csv" and outcome.table is not None and outcome.exit_code != EXIT_INVALID:
        text = _csv_text(*outcome.table)
    else:
        text = dumps(outcome.bundle)
    try:
        _write(text, args.out, stdout)
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
