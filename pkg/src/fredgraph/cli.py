"""Command line interface.

Exit codes: 0 success (or Fredholm), 2 NotFredholm, 3 Inconclusive, 1 any error
including usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .assemble import section_condition_number
from .errors import FredgraphError
from .floquet import essential_spectrum, fiber_blocks, fiber_invertibility_scan, hausdorff, limit_family, \
    section_eigenvalues
from .fredholm import FREDHOLM, NOT_FREDHOLM, FredholmConfig, check_fredholm_conv, check_fredholm_sio
from .io import load_graph, load_operator, write_csv, write_spectrum_csv
from .sio import KernelModulation, asymptote_lambda, edge_symbol_pair, vertex_symbol_matrix

EXIT_OK, EXIT_ERROR, EXIT_NOT_FREDHOLM, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# -- subcommands --------------------------------------------------------------------
def cmd_validate(args) -> int:
    G = load_graph(args.graph)
    _emit({"valid": True, "rank": G.rank, "vertices": G.vertex_ids, "edges": [e.id for e in G.edges],
           "valency": dict(zip(G.vertex_ids, map(int, G.valency))), "total_length": G.total_length})
    return EXIT_OK


def _require_sio(op, what):
    if op.kind not in ("sio", "multiplication"):
        raise FredgraphError(f"{what} symbols are defined for 'sio' or 'multiplication' specs, not '{op.kind}'")


def cmd_symbol(args) -> int:
    op = load_operator(args.operator)
    _require_sio(op, args.which)
    phi = op.phi or KernelModulation.constant(0.0)
    G = op.graph
    rows = []
    if args.which == "edge":
        n = args.grid
        for e in G.edges:
            for s in (np.arange(n) + 0.5) / n * e.length:
                plus, minus = edge_symbol_pair(op.a, op.b, phi, G.point(e.id, float(s)))
                for xi, v in ((1.0, plus), (-1.0, minus)):
                    rows.append([e.id, float(s), xi, v.real, v.imag, abs(v)])
        header = ["edge", "s", "xi", "re", "im", "abs"]
    else:
        L = asymptote_lambda()
        lam = np.linspace(-L, L, args.grid)
        for vid in G.vertex_ids:
            eps = G.default_epsilon(vid)
            r = np.geomspace(1e-6 * eps, eps / 2, args.r_points)
            sym = vertex_symbol_matrix(G, vid, op.a, op.b, phi, op.p, op.weight, epsilon=eps)
            D = sym.det(r[:, None], lam[None, :])
            for i, ri in enumerate(r):
                for j, lj in enumerate(lam):
                    rows.append([vid, ri, lj, D[i, j].real, D[i, j].imag, abs(D[i, j])])
        header = ["vertex", "r", "lambda", "re", "im", "abs_det"]
    if args.csv_out:
        write_csv(args.csv_out, header, rows)
    mins = {}
    for row in rows:
        mins[row[0]] = min(mins.get(row[0], np.inf), row[-1])
    _emit({"which": args.which, "rows": len(rows), "min_abs": mins, "csv": args.csv_out})
    return EXIT_OK


def cmd_check(args) -> int:
    op = load_operator(args.operator)
    if args.p is not None:
        op.p = args.p
    cfg = FredholmConfig(tau_grid=args.tau_grid, panels_per_unit=op.panels_per_unit, order=op.order,
                         band_radius=op.band_radius, tail_tol=op.tail_tol)
    if op.kind in ("sio", "multiplication"):
        b = op.b if op.kind == "sio" else 0
        report = check_fredholm_sio(op.a, b, op.phi, op.weight, op.p, op.graph, cfg)
    elif op.kind == "convolution":
        report = check_fredholm_conv(op.a, op.b, op.kernel, op.graph, op.p, cfg)
    else:
        raise FredgraphError("check-fredholm needs a single 'sio', 'convolution' or 'multiplication' operator")
    if args.json_out:
        _emit(report.to_dict(), args.json_out)
    print(json.dumps({"verdict": report.verdict, "reason": report.reason, "witnesses": report.witnesses,
                      "caveat": report.caveat}, indent=2))
    return {FREDHOLM: EXIT_OK, NOT_FREDHOLM: EXIT_NOT_FREDHOLM}.get(report.verdict, EXIT_INCONCLUSIVE)


def _periodic_family(A):
    if A.periodic:
        return [A.periodic_part()], ["periodic"], {}
    fam = limit_family(A)
    return fam.operators, fam.labels, fam.failures


def cmd_spectrum(args) -> int:
    op = load_operator(args.operator)
    A = op.band()
    ops, labels, failures = _periodic_family(A)
    fams = [fiber_blocks(B, lab) for B, lab in zip(ops, labels)]
    est = essential_spectrum(fams, args.tau_grid, adaptive=not args.fixed_grid)
    margins = [fiber_invertibility_scan(F, est.grid_size, shift=args.shift) for F in fams]
    worst = min(margins, key=lambda m: m.margin)
    if args.csv_out:
        write_spectrum_csv(args.csv_out, est)
    _emit({"points": int(len(est.points)), "grid_size": est.grid_size, "hausdorff_motion": est.hausdorff_motion,
           "family": labels, "failed_directions": failures, "shift": [args.shift.real, args.shift.imag],
           "min_margin": worst.margin, "argmin_tau": [[z.real, z.imag] for z in np.atleast_1d(worst.argmin_tau)],
           "tail_bound": worst.tail_bound, "note": est.note, "csv": args.csv_out})
    return EXIT_OK


def cmd_oracle(args) -> int:
    op = load_operator(args.operator)
    A = op.band()
    ev = section_eigenvalues(A, args.radius)
    out = {"radius": args.radius, "eigenvalues": int(len(ev))}
    if A.periodic:
        est = essential_spectrum(A.periodic_part(), args.tau_grid)
        d = est.distance_to(ev)
        out.update(max_distance_to_fiber_cloud=float(d.max()),
                   hausdorff_to_fiber_cloud=hausdorff(ev, est.points),
                   section_extremes=[float(ev.real.min()), float(ev.real.max())],
                   cloud_extremes=[float(est.points.real.min()), float(est.points.real.max())])
    if args.condition:
        out["condition_number"] = section_condition_number(A, args.radius)
    if args.csv_out:
        write_csv(args.csv_out, ["re", "im"], zip(ev.real, ev.imag))
        out["csv"] = args.csv_out
    _emit(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fredgraph", description="Fredholm checks and spectra for operators on periodic graphs")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a graph spec")
    p.add_argument("graph")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("symbol", help="scan edge or vertex symbols to CSV")
    p.add_argument("which", choices=["edge", "vertex"])
    p.add_argument("operator")
    p.add_argument("--grid", type=int, default=64, help="samples per edge, or lambda points")
    p.add_argument("--r-points", type=int, default=40)
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_symbol)

    p = sub.add_parser("check-fredholm", help="three-condition Fredholm verdict")
    p.add_argument("operator")
    p.add_argument("--p", type=float)
    p.add_argument("--tau-grid", type=int, default=128)
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ess-spectrum", help="essential spectrum from Floquet fibers")
    p.add_argument("operator")
    p.add_argument("--tau-grid", type=int, default=256)
    p.add_argument("--fixed-grid", action="store_true", help="no adaptive grid doubling")
    p.add_argument("--shift", type=complex, default=0j, help="point for the invertibility margin")
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle", help="brute-force cross-checks")
    osub = p.add_subparsers(dest="oracle", required=True, parser_class=_Parser)
    q = osub.add_parser("finite-section", help="finite-section eigenvalues vs the fiber cloud")
    q.add_argument("operator")
    q.add_argument("--radius", type=int, required=True)
    q.add_argument("--tau-grid", type=int, default=256)
    q.add_argument("--condition", action="store_true", help="also report the condition number")
    q.add_argument("--csv-out")
    q.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FredgraphError, OSError, ValueError) as exc:
        print(f"fredgraph: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
