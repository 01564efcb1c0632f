"""Command-line interface.

Subcommands: ``test`` (analyze a CSV of predictions and outcomes),
``simulate`` (null or power studies), ``plot`` (re-render figures from a
report), ``casestudy`` (synthetic two-model demonstration).  Exit codes:
0 success (regardless of statistical outcome), 1 internal failure, 2
usage or input error.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._version import __version__
from .data import build_dataset, cumulative_process, walk_statistics
from .dataio import (
    AnalysisReport,
    read_dataset_csv,
    read_report_json,
    summarize_dataset,
    write_report_json,
    write_study_json,
)
from .simulation import run_null_study, run_power_study
from .stattests import (
    bb_test_from_process,
    bm_test_from_process,
    fit_logistic_recalibration,
    hosmer_lemeshow_test,
    monte_carlo_test,
    weak_calibration_lr_test,
)
from .svgplot import (
    PlotStyle,
    render_binned_calibration_plot,
    render_cumulative_plot,
    render_study_figures,
)

_DF_RULES = {"g-2": "g_minus_2", "g": "g"}
_FAMILIES = {"logit-linear": "logit_linear", "logit-power": "logit_power"}


def _default_outdir():
    return os.environ.get("CALIBWALK_OUTDIR", ".")


def _timestamp():
    stamp = os.environ.get("CALIBWALK_TIMESTAMP")
    if stamp:
        return stamp
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _analyze(data, groups, df_rule, mc, seed, with_hl=True, with_lr=True):
    proc = cumulative_process(data)
    stats = walk_statistics(proc)
    bm = bm_test_from_process(proc, stats)
    bb = bb_test_from_process(proc, stats)
    hl = None
    if with_hl and data.n >= groups:
        hl = hosmer_lemeshow_test(data, groups, df_rule)
    weak = weak_calibration_lr_test(data) if with_lr else None
    monte_carlo = None
    if mc:
        monte_carlo = {
            "replications": mc,
            "seed": seed,
            "bm_p_value": monte_carlo_test(data, "bm", mc, seed),
            "bb_p_value": monte_carlo_test(data, "bb", mc, seed),
        }
    report = AnalysisReport(
        dataset=summarize_dataset(data, proc),
        bm=bm,
        bb=bb,
        hl=hl,
        weak_calibration=weak,
        monte_carlo=monte_carlo,
        timestamp=_timestamp(),
    )
    return proc, report


def _print_report(report, out=None):
    out = out if out is not None else sys.stdout
    ds = report.dataset
    print(
        f"n = {ds.n}, events = {ds.events} "
        f"({100.0 * ds.events / ds.n:.1f}%), mean prediction = "
        f"{ds.mean_prediction:.4f}, total variance = {ds.total_variance:.2f}",
        file=out,
    )
    if ds.tie_flag:
        print(
            "warning: tied predictions present; statistics may depend on "
            "the within-tie input order",
            file=out,
        )
    if ds.small_sample_warning:
        print(
            "warning: total variance below 30; asymptotic p-values are "
            "unreliable (consider --mc)",
            file=out,
        )
    bm = report.bm
    print(
        f"BM test: max |walk| = {bm.s_star:.4f} (raw {bm.c_star:.4g}) at "
        f"prediction {bm.location.prediction:.4g} "
        f"(t = {bm.location.time:.3f}), p = {bm.p_value:.4f}",
        file=out,
    )
    bb = report.bb
    print(
        f"BB test: terminal = {bb.s_n:.4f} (mean error {bb.c_n:.4g}, "
        f"p_A = {bb.p_a:.4f}); bridged max = {bb.b_star:.4f} at prediction "
        f"{bb.location_bridge.prediction:.4g} (p_B = {bb.p_b:.4f}); "
        f"unified p = {bb.p_unified:.4f}",
        file=out,
    )
    if report.hl is not None:
        hl = report.hl
        print(
            f"HL test: chi2 = {hl.statistic:.4f} ({hl.groups} groups, "
            f"{hl.df} df), p = {hl.p_value:.4f}",
            file=out,
        )
    if report.weak_calibration is not None:
        w = report.weak_calibration
        if w.converged:
            print(
                f"LR test: intercept = {w.intercept:.4f}, slope = "
                f"{w.slope:.4f}, LR = {w.lr_statistic:.4f}, "
                f"p = {w.p_value:.4f}",
                file=out,
            )
        else:
            print(
                "LR test: fit did not converge (separation or degenerate "
                "outcomes); no p-value",
                file=out,
            )
    if report.monte_carlo is not None:
        mc = report.monte_carlo
        print(
            f"Monte Carlo ({mc['replications']} replications, seed "
            f"{mc['seed']}): BM p = {mc['bm_p_value']:.4f}, "
            f"BB p = {mc['bb_p_value']:.4f}",
            file=out,
        )


def cmd_test(args) -> int:
    data = read_dataset_csv(
        args.data,
        prediction_column=args.prediction_column,
        outcome_column=args.outcome_column,
        clamp_epsilon=args.clamp,
    )
    proc, report = _analyze(
        data, args.groups, _DF_RULES[args.df_rule], args.mc, args.seed,
        with_hl=not args.no_hl, with_lr=not args.no_lr,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report_path = outdir / "report.json"
    write_report_json(report, report_path)
    _print_report(report)
    artifacts = [str(report_path)]
    if not args.no_plots:
        style = PlotStyle(significance_level=args.alpha)
        for mode, result in (("bm", report.bm), ("bb", report.bb)):
            path = outdir / f"cumulative_{mode}.svg"
            _write_text(path, render_cumulative_plot(proc, mode, result, style))
            artifacts.append(str(path))
    print("wrote " + ", ".join(artifacts))
    return 0


def cmd_simulate(args) -> int:
    if args.kind == "null":
        summaries = run_null_study(
            args.beta0, args.n, replications=args.reps, seed=args.seed,
            alpha=args.alpha,
        )
    else:
        summaries = run_power_study(
            _FAMILIES[args.family], args.a, args.b, args.n,
            replications=args.reps, seed=args.seed, alpha=args.alpha,
        )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    study_path = outdir / "study.json"
    write_study_json(summaries, study_path)
    for key, svg in render_study_figures(summaries).items():
        _write_text(outdir / f"{key}.svg", svg)
    for summary in summaries:
        scenario = summary.scenario
        label = (f"beta0={scenario.beta0:g} n={scenario.n}"
                 if scenario.family == "null"
                 else f"a={scenario.a:g} b={scenario.b:g} n={scenario.n}")
        rates = ", ".join(
            f"{name}={summary.rejections[name]:.3f}"
            for name in sorted(summary.rejections)
        )
        print(f"{scenario.family} {label}: rejections {rates}")
    print(f"wrote {study_path} and {len(summaries)} figure(s) in {outdir}")
    return 0


def cmd_plot(args) -> int:
    report = read_report_json(args.report)
    data = read_dataset_csv(
        args.data,
        prediction_column=args.prediction_column,
        outcome_column=args.outcome_column,
        clamp_epsilon=args.clamp,
    )
    proc = cumulative_process(data)
    stats = walk_statistics(proc)
    if abs(stats.s_star - report.bm.s_star) > 1e-9 + 1e-9 * abs(stats.s_star):
        raise ValueError(
            "report does not match the dataset (max |walk| differs); "
            "re-run the test subcommand"
        )
    outdir = Path(args.out)
    style = PlotStyle(significance_level=args.alpha)
    for mode, result in (("bm", report.bm), ("bb", report.bb)):
        _write_text(outdir / f"cumulative_{mode}.svg",
                    render_cumulative_plot(proc, mode, result, style))
    print(f"re-rendered figures in {outdir}")
    return 0


def run_case_study(seed, dev_n=50_000, small_n=500, holdout_n=10_000,
                   out_dir=None, alpha=0.05, groups=10,
                   render_figures=True):
    """Synthetic two-model contrast: large vs small development sample.

    Draws a population with true risk logit(p) = -2 + x, fits the
    single-predictor logistic model by IRLS on the full development split
    and on its first ``small_n`` rows, then evaluates both fits on a
    held-out split.  Returns per-model fits and analysis reports; artifacts
    are written when ``out_dir`` is given.
    """
    if small_n > dev_n:
        raise ValueError("small_n cannot exceed dev_n")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xCA5E)))
    x_dev = rng.standard_normal(dev_n)
    y_dev = (rng.random(dev_n) < _expit_scalar_array(-2.0 + x_dev)).astype(float)
    x_hold = rng.standard_normal(holdout_n)
    y_hold = (rng.random(holdout_n) < _expit_scalar_array(-2.0 + x_hold)).astype(float)

    results = {}
    for label, rows in (("full", slice(None)), ("small", slice(0, small_n))):
        carrier = build_dataset(_expit_scalar_array(x_dev[rows]), y_dev[rows])
        fit = fit_logistic_recalibration(carrier)
        predictions = _expit_scalar_array(fit.intercept + fit.slope * x_hold)
        holdout = build_dataset(predictions, y_hold)
        proc, report = _analyze(holdout, groups, "g", mc=0, seed=seed)
        results[label] = {"fit": fit, "report": report, "process": proc,
                          "dataset": holdout}
        if out_dir is not None:
            outdir = Path(out_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            write_report_json(report, outdir / f"{label}_report.json")
            if render_figures:
                style = PlotStyle(significance_level=alpha)
                figures = {
                    f"{label}_binned_deciles.svg":
                        render_binned_calibration_plot(holdout, groups, style),
                    f"{label}_binned_fine.svg":
                        render_binned_calibration_plot(holdout, 2 * groups, style),
                    f"{label}_cumulative_bm.svg":
                        render_cumulative_plot(proc, "bm", report.bm, style),
                    f"{label}_cumulative_bb.svg":
                        render_cumulative_plot(proc, "bb", report.bb, style),
                }
                for name, svg in figures.items():
                    _write_text(outdir / name, svg)
    return results


def _expit_scalar_array(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def cmd_casestudy(args) -> int:
    results = run_case_study(
        args.seed, dev_n=args.dev_n, small_n=args.small_n,
        holdout_n=args.holdout_n, out_dir=args.out, alpha=args.alpha,
    )
    for label in ("full", "small"):
        entry = results[label]
        fit = entry["fit"]
        print(f"--- {label} model (intercept {fit.intercept:.4f}, "
              f"slope {fit.slope:.4f}) on holdout ---")
        _print_report(entry["report"])
    print(f"wrote case-study artifacts in {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calibwalk",
        description="Assess calibration of binary risk predictions via "
                    "cumulative prediction-error random walks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run the calibration tests on a CSV")
    p_test.add_argument("data", help="CSV with prediction and outcome columns")
    p_test.add_argument("--prediction-column", default="p")
    p_test.add_argument("--outcome-column", default="y")
    p_test.add_argument("--clamp", type=float, default=None, metavar="EPS",
                        help="clip predictions into [EPS, 1-EPS] before "
                             "validation")
    p_test.add_argument("--groups", type=int, default=10,
                        help="Hosmer-Lemeshow group count")
    p_test.add_argument("--df-rule", choices=sorted(_DF_RULES), default="g-2",
                        help="Hosmer-Lemeshow degrees of freedom rule")
    p_test.add_argument("--alpha", type=float, default=0.05,
                        help="significance level for critical lines")
    p_test.add_argument("--mc", type=int, default=0, metavar="N",
                        help="also run Monte Carlo variants with N "
                             "replications")
    p_test.add_argument("--seed", type=int, default=0,
                        help="seed for the Monte Carlo variants")
    p_test.add_argument("--no-hl", action="store_true",
                        help="skip the Hosmer-Lemeshow comparator")
    p_test.add_argument("--no-lr", action="store_true",
                        help="skip the logistic recalibration LR test")
    p_test.add_argument("--no-plots", action="store_true",
                        help="write the report only")
    p_test.add_argument("--out", default=_default_outdir(),
                        help="output directory (default: $CALIBWALK_OUTDIR "
                             "or .)")
    p_test.set_defaults(handler=cmd_test)

    p_sim = sub.add_parser("simulate", help="run a simulation study")
    p_sim.add_argument("kind", choices=("null", "power"))
    p_sim.add_argument("--beta0", type=float, nargs="+", default=[-1.0],
                       help="null-family intercept grid")
    p_sim.add_argument("--family", choices=sorted(_FAMILIES),
                       default="logit-linear")
    p_sim.add_argument("--a", type=float, nargs="+", default=[0.0],
                       help="miscalibration intercept grid")
    p_sim.add_argument("--b", type=float, nargs="+", default=[1.0],
                       help="miscalibration slope grid")
    p_sim.add_argument("--n", type=int, nargs="+", required=True,
                       help="sample size grid")
    p_sim.add_argument("--reps", type=int, required=True,
                       help="replications per cell")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--out", default=_default_outdir())
    p_sim.set_defaults(handler=cmd_simulate)

    p_plot = sub.add_parser("plot", help="re-render figures from a report")
    p_plot.add_argument("--report", required=True)
    p_plot.add_argument("--data", required=True)
    p_plot.add_argument("--prediction-column", default="p")
    p_plot.add_argument("--outcome-column", default="y")
    p_plot.add_argument("--clamp", type=float, default=None)
    p_plot.add_argument("--alpha", type=float, default=0.05)
    p_plot.add_argument("--out", default=_default_outdir())
    p_plot.set_defaults(handler=cmd_plot)

    p_case = sub.add_parser(
        "casestudy",
        help="synthetic large-vs-small development sample demonstration",
    )
    p_case.add_argument("--seed", type=int, required=True)
    p_case.add_argument("--dev-n", type=int, default=50_000)
    p_case.add_argument("--small-n", type=int, default=500)
    p_case.add_argument("--holdout-n", type=int, default=10_000)
    p_case.add_argument("--alpha", type=float, default=0.05)
    p_case.add_argument("--out", default=_default_outdir())
    p_case.set_defaults(handler=cmd_casestudy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
