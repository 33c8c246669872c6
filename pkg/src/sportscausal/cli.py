"""Command-line front end: simulate panels, analyze them, benchmark.

Subcommands
-----------
simulate
    Generate a synthetic experiment; writes panel.csv (+ features.csv when
    confounded) and truth.json.
analyze {ancova,match,impact,sports}
    Run one estimator on an outcomes CSV; writes result.json, series.csv,
    and impact.svg.
bench
    Fraction sweep times seeds, vanilla vs corrected impact per cell;
    writes bench.csv and summary.json.

Every run echoes its fully resolved configuration to
config.resolved.json in the output directory; re-running from that file
reproduces result.json byte for byte. Flags override config-file values.
The default output directory comes from $SPORTSCAUSAL_OUT.

Exit codes: 0 ok, 1 I/O failure, 2 validation failure, 3 numerical failure.
Failures also print a machine-readable error JSON to stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from ._json import dump_json
from .errors import NumericalError, ValidationError
from .estimators import (
    _corrected_series,
    ancova,
    bootstrap_matching_estimate,
    causal_impact,
    sports_causal,
)
from .panel import aggregate_groups, load_panel, write_panel
from .plotting import write_impact_svg
from .simulate import SimConfig, fraction_sweep, gen_experiment
from .timeseries import StateSpaceSpec, fit_state_space

SIM_DEFAULTS = {
    "m": 100, "n": 100, "t0": 60, "t_post": 30, "baseline": 100.0,
    "ar_coefficient": 0.6, "noise_sd": 1.0, "direct_effect": 10.0,
    "spillover_effect": 0.0, "ramp_length": 0, "confounder_strength": 0.0,
    "seasonal_period": None, "seasonal_amplitude": 0.0,
    "common_noise_share": 0.5, "subject_sd": 0.0, "seed": 0,
}

ANALYZE_DEFAULTS = {
    "features": None, "t0": None, "b": None, "seed": 0, "caliper_sd": 0.2,
    "ar_max_order": 5, "trend": "local_level", "seasonal_period": None,
    "workers": 1, "dump_model": False,
}

BENCH_DEFAULTS = {
    **SIM_DEFAULTS,
    "fractions": "0.05,0.5", "conservation": 1.0, "n_seeds": 20,
    "ar_max_order": 5, "trend": "local_level", "b": 1, "workers": 1,
}


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, help="control-arm size")
    p.add_argument("--n", type=int, help="treated-arm size")
    p.add_argument("--t0", type=int, help="pre-period length")
    p.add_argument("--t-post", type=int, dest="t_post", help="post-period length")
    p.add_argument("--baseline", type=float)
    p.add_argument("--ar-coefficient", "--phi", type=float, dest="ar_coefficient")
    p.add_argument("--noise-sd", type=float, dest="noise_sd")
    p.add_argument("--direct-effect", "--d", type=float, dest="direct_effect")
    p.add_argument("--spillover-effect", "--s", type=float, dest="spillover_effect")
    p.add_argument("--ramp-length", type=int, dest="ramp_length")
    p.add_argument("--confounder-strength", type=float, dest="confounder_strength")
    p.add_argument("--seasonal-period", type=int, dest="seasonal_period")
    p.add_argument("--seasonal-amplitude", type=float, dest="seasonal_amplitude")
    p.add_argument("--common-noise-share", type=float, dest="common_noise_share")
    p.add_argument("--subject-sd", type=float, dest="subject_sd")
    p.add_argument("--seed", type=int)


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ar-max-order", type=int, dest="ar_max_order")
    p.add_argument("--trend", choices=["local_level", "local_linear_trend"])
    p.add_argument("--caliper-sd", type=float, dest="caliper_sd")
    p.add_argument("--workers", type=int)
    p.add_argument("-B", "--b", type=int, dest="b", help="bootstrap replicates")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sportscausal",
        description="Treatment-effect estimation for experiments with spillover.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic experiment")
    p_sim.add_argument("--config", help="JSON config file (flags override)")
    p_sim.add_argument("--out", "-o", help="output directory")
    _add_sim_flags(p_sim)

    p_an = sub.add_parser("analyze", help="estimate a treatment effect")
    p_an.add_argument("method", choices=["ancova", "match", "impact", "sports"])
    p_an.add_argument("--config", help="JSON config file (flags override)")
    p_an.add_argument("--out", "-o", help="output directory")
    p_an.add_argument("--outcomes", help="long-format outcomes CSV")
    p_an.add_argument("--features", help="features CSV")
    p_an.add_argument("--t0", type=int, help="last pre-treatment time index")
    p_an.add_argument("--seed", type=int)
    p_an.add_argument("--seasonal-period", type=int, dest="seasonal_period")
    p_an.add_argument("--dump-model", action="store_true", default=None,
                      dest="dump_model", help="also write the fitted model JSON")
    _add_estimator_flags(p_an)

    p_b = sub.add_parser("bench", help="fraction sweep benchmark")
    p_b.add_argument("--config", help="JSON config file (flags override)")
    p_b.add_argument("--out", "-o", help="output directory")
    p_b.add_argument("--fractions", help="comma-separated treated fractions")
    p_b.add_argument("--conservation", type=float, help="spillover conservation factor")
    p_b.add_argument("--n-seeds", type=int, dest="n_seeds", help="seeds per fraction")
    _add_sim_flags(p_b)
    _add_estimator_flags(p_b)
    return parser


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    resolved = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            file_values = json.load(fh)
        for key, value in file_values.items():
            if key in resolved or key in ("out", "method", "outcomes"):
                resolved[key] = value
    for key in list(resolved) + ["out", "method", "outcomes"]:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    resolved.setdefault("out", None)
    return resolved


def _out_dir(resolved: dict) -> Path:
    out = resolved.get("out") or os.environ.get("SPORTSCAUSAL_OUT") or "sportscausal-output"
    resolved["out"] = str(out)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sim_config(resolved: dict) -> SimConfig:
    fields = {k: resolved[k] for k in SIM_DEFAULTS}
    return SimConfig(**fields)


def _spec(resolved: dict) -> StateSpaceSpec:
    return StateSpaceSpec(
        trend=resolved["trend"],
        seasonal_period=resolved["seasonal_period"],
        use_regression=True,
    )


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    resolved = _resolve(args, SIM_DEFAULTS)
    out = _out_dir(resolved)
    config = _sim_config(resolved)
    panel, truth = gen_experiment(config)
    write_panel(
        panel,
        out / "panel.csv",
        out / "features.csv" if panel.n_features else None,
    )
    dump_json({**truth, "t0": config.t0, "m": config.m, "n": config.n,
               "seed": config.seed}, out / "truth.json")
    dump_json({"command": "simulate", **resolved}, out / "config.resolved.json")
    print(f"wrote {out / 'panel.csv'}"
          + (f" and {out / 'features.csv'}" if panel.n_features else ""))
    return 0


def _series_rows(panel, impact=None, control_cf=None):
    agg = aggregate_groups(panel)
    n = agg.control.size
    rows = []
    cumulative = 0.0
    for t in range(n):
        row = {
            "t": t + 1,
            "treated": float(agg.treated[t]),
            "control": float(agg.control[t]),
            "predicted_treated": None,
            "predicted_treated_var": None,
            "pointwise_effect": None,
            "cumulative_effect": None,
            "predicted_control": None,
        }
        if impact is not None and t >= panel.t0:
            h = t - panel.t0
            row["predicted_treated"] = float(impact.counterfactual.mean[h])
            row["predicted_treated_var"] = float(impact.counterfactual.variance[h])
            pointwise = float(agg.treated[t]) - row["predicted_treated"]
            cumulative += pointwise
            row["pointwise_effect"] = pointwise
            row["cumulative_effect"] = cumulative
        if control_cf is not None and t >= panel.t0:
            row["predicted_control"] = float(control_cf.mean[t - panel.t0])
        rows.append(row)
    return rows


def _write_series_csv(rows, path: Path) -> None:
    fieldnames = ["t", "treated", "control", "predicted_treated",
                  "predicted_treated_var", "pointwise_effect",
                  "cumulative_effect", "predicted_control"]
    tmp = path.with_suffix(".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([
                row["t"],
                *(("" if row[k] is None else repr(row[k])) for k in fieldnames[1:]),
            ])
    os.replace(tmp, path)


def cmd_analyze(args: argparse.Namespace) -> int:
    resolved = _resolve(args, ANALYZE_DEFAULTS)
    method = resolved["method"]
    if not resolved.get("outcomes"):
        raise ValidationError("analyze requires --outcomes")
    if resolved.get("t0") is None:
        raise ValidationError("analyze requires --t0")
    out = _out_dir(resolved)
    panel = load_panel(resolved["outcomes"], resolved.get("features"),
                       t0=int(resolved["t0"]))
    b_default = 200 if method in ("match", "sports") else 1
    b = int(resolved["b"]) if resolved["b"] is not None else b_default
    resolved["b"] = b
    seed = int(resolved["seed"])
    spec = _spec(resolved)
    model_dump = None

    if method == "ancova":
        estimate = ancova(panel)
        result = {"method": "ancova", "estimate": estimate}
        rows = _series_rows(panel)
    elif method == "match":
        summary = bootstrap_matching_estimate(
            panel, B=b, seed=seed,
            caliper_sd=float(resolved["caliper_sd"]),
            workers=int(resolved["workers"]),
        )
        result = {"method": "bootstrap_matching", "bootstrap": summary}
        rows = _series_rows(panel)
    elif method == "impact":
        agg = aggregate_groups(panel)
        impact = causal_impact(agg, spec)
        result = {"method": "causal_impact", "impact": impact}
        rows = _series_rows(panel, impact=impact)
        if resolved["dump_model"]:
            fit = fit_state_space(agg.treated[: panel.t0],
                                  agg.control[: panel.t0], spec)
            model_dump = {"impact_fit": fit}
    else:
        sports = sports_causal(
            panel, spec,
            ar_max_order=int(resolved["ar_max_order"]),
            B=b, seed=seed,
            caliper_sd=float(resolved["caliper_sd"]),
            workers=int(resolved["workers"]),
        )
        result = {
            "method": "sports",
            "vanilla": sports.vanilla,
            "corrected": sports.corrected,
            "control_counterfactual": sports.control_counterfactual,
            "bootstrap": sports.bootstrap,
            "spillover_gap": sports.spillover_gap,
        }
        rows = _series_rows(panel, impact=sports.corrected,
                            control_cf=sports.control_counterfactual)
        if resolved["dump_model"]:
            agg, corrected_agg, _ = _corrected_series(
                panel, int(resolved["ar_max_order"]))
            model_dump = {
                "vanilla_fit": fit_state_space(
                    agg.treated[: panel.t0], agg.control[: panel.t0], spec),
                "corrected_fit": fit_state_space(
                    corrected_agg.treated[: panel.t0],
                    corrected_agg.control[: panel.t0], spec),
            }

    dump_json(result, out / "result.json")
    _write_series_csv(rows, out / "series.csv")
    write_impact_svg(out / "impact.svg", rows, panel.t0)
    if model_dump is not None:
        dump_json(model_dump, out / "model.json")
    dump_json({"command": "analyze", **resolved}, out / "config.resolved.json")
    print(json.dumps(_headline(result), indent=2))
    return 0


def _headline(result: dict) -> dict:
    method = result["method"]
    if method == "ancova":
        est = result["estimate"]
        return {"method": method, "effect": est.effect, "p_value": est.p_value}
    if method == "bootstrap_matching":
        summary = result["bootstrap"]
        return {"method": method, "effect": summary.mean_effect,
                "p_value": summary.p_value, "n_failed": summary.n_failed}
    if method == "causal_impact":
        est = result["impact"].estimate
        return {"method": method, "effect": est.effect, "p_value": est.p_value,
                "relative_effect": result["impact"].relative_effect}
    return {
        "method": method,
        "vanilla_effect": result["vanilla"].estimate.effect,
        "corrected_effect": result["corrected"].estimate.effect,
        "spillover_gap": result["spillover_gap"],
        "corrected_p_value": result["corrected"].estimate.p_value,
    }


def _bench_cell(cell):
    fraction_idx, seed_idx, fraction, panel, truth, spec, ar_max_order, b, seed = cell
    result = sports_causal(panel, spec, ar_max_order=ar_max_order, B=b, seed=seed)
    return (
        fraction_idx, seed_idx, fraction,
        result.vanilla.estimate.effect,
        result.corrected.estimate.effect,
        truth["direct_effect"], truth["spillover_effect"],
    )


def cmd_bench(args: argparse.Namespace) -> int:
    resolved = _resolve(args, BENCH_DEFAULTS)
    out = _out_dir(resolved)
    fractions = [float(f) for f in str(resolved["fractions"]).split(",") if f]
    base = _sim_config(resolved)
    spec = _spec(resolved)
    ar_max_order = int(resolved["ar_max_order"])
    b = int(resolved["b"])
    n_seeds = int(resolved["n_seeds"])

    cells = []
    for seed_idx in range(n_seeds):
        seeded = replace(base, seed=base.seed + seed_idx)
        for fraction_idx, (fraction, panel, truth) in enumerate(
                fraction_sweep(seeded, fractions, float(resolved["conservation"]))):
            cells.append((fraction_idx, seed_idx, fraction, panel, truth,
                          spec, ar_max_order, b, seeded.seed))

    workers = int(resolved["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_cell, cells, chunksize=1))
    else:
        rows = [_bench_cell(c) for c in cells]
    rows.sort(key=lambda r: (r[0], r[1]))

    bench_path = out / "bench.csv"
    tmp = bench_path.with_suffix(".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "seed", "vanilla_effect", "corrected_effect",
                         "true_direct", "true_spillover"])
        for _, seed_idx, fraction, van, cor, td, ts in rows:
            writer.writerow([fraction, base.seed + seed_idx, repr(van), repr(cor),
                             repr(float(td)), repr(float(ts))])
    os.replace(tmp, bench_path)

    summary = []
    for fraction_idx, fraction in enumerate(fractions):
        sel = [r for r in rows if r[0] == fraction_idx]
        vans = [r[3] for r in sel]
        cors = [r[4] for r in sel]
        summary.append({
            "fraction": fraction,
            "mean_vanilla": sum(vans) / len(vans),
            "sd_vanilla": _sd(vans),
            "mean_corrected": sum(cors) / len(cors),
            "sd_corrected": _sd(cors),
            "true_direct": float(sel[0][5]),
            "true_spillover": float(sel[0][6]),
        })
    dump_json({"cells": len(rows), "per_fraction": summary}, out / "summary.json")
    dump_json({"command": "bench", **resolved}, out / "config.resolved.json")

    print(f"{'fraction':>9} {'vanilla':>10} {'corrected':>10} {'true d':>8} {'true s':>8}")
    for s in summary:
        print(f"{s['fraction']:>9.3g} {s['mean_vanilla']:>10.3f} "
              f"{s['mean_corrected']:>10.3f} {s['true_direct']:>8.3g} "
              f"{s['true_spillover']:>8.3g}")
    return 0


def _sd(values) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = sum(values) / n
    return (sum((v - mean) ** 2 for v in values) / (n - 1)) ** 0.5


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": cmd_simulate, "analyze": cmd_analyze, "bench": cmd_bench}
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        _print_error(exc)
        return 2
    except NumericalError as exc:
        _print_error(exc)
        return 3
    except OSError as exc:
        _print_error(exc)
        return 1


def _print_error(exc: Exception) -> None:
    print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))


if __name__ == "__main__":
    sys.exit(main())
