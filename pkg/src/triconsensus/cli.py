"""Command-line front end.

Exit status: 0 success, 1 computation failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Sequence, TextIO

from .errors import ConsensusError
from .graph import FamilySpec, Graph, family_graph, read_edge_list, write_edge_list
from .metrics import MODES, coherence_spectral, metrics_report, spectral_report
from .simulator import (
    BEST,
    SimConfig,
    delay_stability_probe,
    estimate_first_order_coherence,
    run_consensus,
    write_trace,
)
from .spectra import (
    Spectrum,
    full_spectrum,
    max_deviation,
    numeric_spectrum,
    write_spectrum_csv,
)

OUTPUT_DIR_ENV = "TRICONSENSUS_OUTPUT_DIR"
METRICS = ("T", "H1", "H2", "Tmax")
ORACLE_TOL = 1e-8

# Figure grids from the results section; n per series for fig5/fig7 and the r
# series for fig6/fig8 are not stated there and are our choice.
PRESETS = {
    "fig3": dict(n=[100], r=[4, 6, 8], metric="T"),
    "fig4": dict(n=[100, 200, 300], r=[4], metric="T"),
    "fig5": dict(n=[100, 200, 300], r=[50], metric="Tmax"),
    "fig6": dict(n=[100], r=[4, 6, 8], metric="Tmax"),
    "fig7": dict(n=[100, 200, 300], r=[4], metric="H1"),
    "fig8": dict(n=[100], r=[4, 6, 8], metric="H2"),
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    """Parse ``1,2,5`` or ``1-20`` or a mix like ``1-3,8``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            if sep and lo:
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _h_value(text: str) -> float | str:
    if text == BEST:
        return BEST
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--h must be a number or '{BEST}'") from None


def _add_family(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("-n", type=int, required=required, help="base ring size")
    p.add_argument("-r", type=int, required=required, help="base degree (even)")
    p.add_argument("-q", type=int, default=0, help="triangulation parameter (default 0)")


def _spec(args) -> FamilySpec:
    if args.n is None or args.r is None:
        raise UsageError("-n and -r are required")
    if args.q is not None and args.q < 0:
        raise UsageError(f"q must be >= 0, got {args.q}")
    try:
        return FamilySpec(args.n, args.r, args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _open_out(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="")


def _close(fh: TextIO) -> None:
    if fh is not sys.stdout:
        fh.close()


def cmd_graph(args) -> int:
    g = family_graph(_spec(args))
    fh = _open_out(args.output)
    write_edge_list(g, fh)
    _close(fh)
    return 0


def cmd_spectrum(args) -> int:
    spec = _spec(args)
    fh = _open_out(args.output)
    try:
        if args.which == "analytic":
            write_spectrum_csv(full_spectrum(spec), fh)
        elif args.which == "numeric":
            write_spectrum_csv(numeric_spectrum(family_graph(spec)), fh)
        else:
            return _spectrum_both(spec, fh)
    finally:
        _close(fh)
    return 0


def _labels_expanded(s: Spectrum) -> list[str]:
    return [e.label for e in s.entries for _ in range(e.multiplicity)]


def _spectrum_both(spec: FamilySpec, fh: TextIO) -> int:
    ana = full_spectrum(spec)
    num = numeric_spectrum(family_graph(spec))
    dev = max_deviation(ana, num)
    va, vn, labels = ana.values(), num.values(), _labels_expanded(ana)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "analytic", "label", "numeric", "abs_deviation"])
    for i in range(max(va.size, vn.size)):
        a = f"{va[i]:.15g}" if i < va.size else ""
        b = f"{vn[i]:.15g}" if i < vn.size else ""
        d = f"{abs(va[i] - vn[i]):.3e}" if i < min(va.size, vn.size) else ""
        w.writerow([i, a, labels[i] if i < va.size else "", b, d])
    fh.write(f"# max_abs_deviation={dev:.3e}\n")
    if not dev < ORACLE_TOL:
        print(f"error: analytic and numeric spectra differ by {dev:.3e} (> {ORACLE_TOL:g})", file=sys.stderr)
        return 1
    return 0


def cmd_metrics(args) -> int:
    modes = MODES if args.mode == "both" else (args.mode,)
    if args.graph:
        if args.mode == "paper":
            raise UsageError("paper-mode closed forms only exist for ring families; use --mode spectral")
        reports = [spectral_report(numeric_spectrum(read_edge_list(args.graph)))]
    else:
        spec = _spec(args)
        reports = [metrics_report(spec, m) for m in modes]
    for rep in reports:
        print(rep.to_json())
    if len(reports) == 2 and reports[0].Tmax != reports[1].Tmax:
        print(
            f"note: Tmax differs between modes ({reports[0].Tmax:.6g} paper vs {reports[1].Tmax:.6g} spectral). "
            "The paper-mode closed form evaluates pi/(2 f_-(lambda_1)), the smaller branch at k=1; "
            "spectral mode uses pi/(2 lambda_max) over the full spectrum.",
            file=sys.stderr,
        )
    return 0


def _metric_value(spec: FamilySpec, mode: str, metric: str) -> float:
    return getattr(metrics_report(spec, mode), metric)


def sweep_rows(n_values, r_values, q_values, metric: str, mode: str, skipped: list[str] | None = None):
    """Yield (n, r, q, mode, metric, value) in n, r, q, mode order; invalid points go to ``skipped``."""
    modes = MODES if mode == "both" else (mode,)
    for n in n_values:
        for r in r_values:
            for q in q_values:
                try:
                    spec = FamilySpec(n, r, q)
                except ValueError as exc:
                    if skipped is not None:
                        skipped.append(f"n={n} r={r} q={q}: {exc}")
                    continue
                for m in modes:
                    yield n, r, q, m, metric, _metric_value(spec, m, metric)


def cmd_sweep(args) -> int:
    n_values, r_values, metric = args.n, args.r, args.metric
    if args.preset:
        p = PRESETS[args.preset]
        n_values = n_values or p["n"]
        r_values = r_values or p["r"]
        metric = metric or p["metric"]
    if not (n_values and r_values and metric):
        raise UsageError("sweep needs -n, -r and --metric (or --preset)")
    skipped: list[str] = []
    rows = list(sweep_rows(n_values, r_values, args.q, metric, args.mode, skipped))
    out = args.output
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        name = f"sweep_{args.preset or metric}_{args.mode}.csv"
        out = str(Path(os.environ[OUTPUT_DIR_ENV]) / name)
    if skipped:
        log = "\n".join(skipped) + "\n"
        if out and out != "-":
            Path(out + ".skipped.log").write_text(log)
        print(f"skipped {len(skipped)} invalid grid point(s):\n{log}", file=sys.stderr, end="")
    if not rows:
        raise UsageError("no valid grid points in the sweep")
    fh = _open_out(out)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "r", "q", "mode", "metric", "value"])
    for n, r, q, m, met, v in rows:
        w.writerow([n, r, q, m, met, f"{v:.15g}"])
    _close(fh)
    if out and out != "-":
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    return 0


def _sim_graph(args) -> tuple[Graph, dict]:
    if args.graph:
        return read_edge_list(args.graph), {"graph": str(args.graph)}
    if args.n is None or args.r is None:
        raise UsageError("give either --graph FILE or -n/-r/-q")
    spec = _spec(args)
    return family_graph(spec), {"n": spec.n, "r": spec.r, "q": spec.q}


def cmd_simulate(args) -> int:
    g, where = _sim_graph(args)
    try:
        cfg = SimConfig(
            seed=args.seed,
            steps=args.steps if args.steps is not None else {"consensus": 200, "coherence": 200_000, "delay": 1}[args.kind],
            h=args.h,
            noise_sigma=args.sigma if args.sigma is not None else (1.0 if args.kind == "coherence" else 0.0),
            dt=args.dt,
            tau=args.tau,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    meta = {"kind": args.kind, **where, "config": dataclasses.asdict(cfg)}
    try:
        if args.kind == "consensus":
            trace = run_consensus(g, cfg)
            summary = {**meta, **trace.summary()}
            series = (trace.disagreement, trace.time)
        elif args.kind == "coherence":
            estimate = estimate_first_order_coherence(g, cfg)
            target = coherence_spectral(numeric_spectrum(g))[0] * cfg.noise_sigma**2
            summary = {**meta, "estimate": estimate, "target_H1": target, "relative_error": estimate / target - 1 if target else None}
            series = None
        else:
            res = delay_stability_probe(g, cfg.tau, cfg, horizon=args.horizon)
            summary = {**meta, **res.summary()}
            series = (res.disagreement, res.time)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.trace and series is not None:
        write_trace(args.trace, series[0], series[1], summary)
    print(json.dumps(summary, default=float))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triconsensus",
        description="Spectra and consensus metrics of q-triangular r-regular ring networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="write the edge list of a ring family member")
    _add_family(p)
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("spectrum", help="Laplacian spectrum as CSV")
    _add_family(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--analytic", dest="which", action="store_const", const="analytic")
    g.add_argument("--numeric", dest="which", action="store_const", const="numeric")
    g.add_argument("--both", dest="which", action="store_const", const="both",
                   help="side by side, with a max-deviation footer; exit 1 if it exceeds 1e-8")
    p.set_defaults(which="analytic")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("metrics", help="metrics report as JSON (one object per line)")
    _add_family(p, required=False)
    p.add_argument("--mode", choices=(*MODES, "both"), default="both")
    p.add_argument("--graph", help="edge-list file; spectral mode only")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="parameter sweep as CSV (n,r,q,mode,metric,value)")
    p.add_argument("-n", type=_int_list, help="base sizes, e.g. 100 or 100,200,300")
    p.add_argument("-r", type=_int_list, help="degrees, e.g. 4,6,8")
    p.add_argument("-q", type=_int_list, default=list(range(1, 21)), help="q values (default 1-20)")
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--mode", choices=(*MODES, "both"), default="paper")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("-o", "--output", help=f"output CSV (default stdout, or ${OUTPUT_DIR_ENV}/...)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="run a consensus, coherence or delay simulation")
    p.add_argument("kind", choices=("consensus", "coherence", "delay"))
    p.add_argument("-n", type=int)
    p.add_argument("-r", type=int)
    p.add_argument("-q", type=int, default=0)
    p.add_argument("--graph", help="edge-list file instead of -n/-r/-q")
    p.add_argument("--h", type=_h_value, default=BEST, help="edge weight or 'best' (consensus)")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--dt", type=float)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--horizon", type=float, help="delay probe horizon (default 50/lambda_2)")
    p.add_argument("--trace", help="write step,time,disagreement CSV here (+ .json metadata)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ConsensusError as exc:
        print(f"{parser.prog} {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
