"""Scenario-driven command line interface.

Subcommands map one-to-one onto module surfaces: ``value`` runs a single
scenario, ``sweep`` evaluates a parameter grid into a flat table,
``verify`` executes the built-in verification suite, ``classify`` reports
risk coefficients and moment-preference labels, and ``dualmoments``
reports the moment diagnostics of a distribution.

Output is deterministic: identical config + seed produce byte-identical
files.  Wall time goes to stderr only, never into the payload.  Exit
codes: 0 success, 1 computation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
import time
from typing import Any, Mapping

from . import __version__
from .config import MAX_GRID_POINTS, ScenarioConfig, load_config, parse_config
from .distributions import moments
from .errors import ConfigError, CotvError, GridTooLargeError
from .eu import EconomicContext, evaluate as eu_evaluate
from .non_eu import DtContext, RduContext, dt_valuation, rdu_valuation
from .numerics import RngStream, mc_estimate
from .preferences import classify_moment_preference, risk_coefficients

__all__ = ["main", "entrypoint", "run_scenario", "scenario_row", "sweep_rows",
           "render_envelope", "render_csv"]

_BASE_COLUMNS = ["framework", "phi", "mu", "sigma", "cv", "vot_at_mu",
                 "rho_upper_bound"]
_METHOD_COLUMNS = ["premium", "vot", "cot", "cotv", "rho", "eta",
                   "congestion_multiplier", "bound_slack", "bound_violated"]
_CROSS_COLUMNS = ["premium_abs_error", "premium_scaled_error", "rho_gap"]

_BOUND_SLACK_TOL = 1e-9


def _value_columns() -> list[str]:
    cols = list(_BASE_COLUMNS)
    for method in ("exact", "second_order"):
        cols.extend(f"{name}_{method}" for name in _METHOD_COLUMNS)
    cols.extend(_CROSS_COLUMNS)
    return cols


def _evaluate_one(config: ScenarioConfig, method: str):
    model = config.model()
    framework = config.framework
    if framework == "eu":
        ctx = EconomicContext(phi=config.phi, method=method)
        return eu_evaluate(config.utility(), model, ctx)
    w = config.weighting()
    p0, psi, tau_h = config.weighting_anchor()
    if framework == "dt":
        return dt_valuation(model, DtContext(w=w, p0=p0, psi=psi),
                            config.phi, method=method)
    ctx = RduContext(u=config.utility(), w=w, p0=p0, tau_h=tau_h)
    return rdu_valuation(model, ctx, config.phi, method=method)


def run_scenario(config: ScenarioConfig) -> dict:
    """Evaluate one scenario into a report envelope (JSON-ready dict)."""
    methods = (["exact", "second_order"] if config.method == "both"
               else [config.method])
    reports = {method: _evaluate_one(config, method) for method in methods}

    results: dict[str, Any] = {}
    first = reports[methods[0]]
    results["framework"] = first.framework
    results["phi"] = first.phi
    results["mu"] = first.mu
    results["sigma"] = first.sigma
    results["cv"] = first.cv
    results["vot_at_mu"] = first.vot_at_mu
    results["rho_upper_bound"] = first.rho_upper_bound
    for method, report in reports.items():
        for name in _METHOD_COLUMNS:
            if name in ("bound_slack", "bound_violated"):
                continue
            results[f"{name}_{method}"] = getattr(report, name)
        if report.rho_upper_bound is not None:
            slack = report.rho_upper_bound - report.rho
            results[f"bound_slack_{method}"] = slack
            results[f"bound_violated_{method}"] = bool(slack < -_BOUND_SLACK_TOL)
        else:
            results[f"bound_slack_{method}"] = None
            results[f"bound_violated_{method}"] = None
    if len(reports) == 2:
        exact = reports["exact"]
        second = reports["second_order"]
        err = abs(exact.premium - second.premium)
        results["premium_abs_error"] = err
        results["premium_scaled_error"] = (
            err / exact.sigma**2 if exact.sigma > 0 else 0.0)
        results["rho_gap"] = abs(exact.rho - second.rho)

    diagnostics = {method: dict(report.diagnostics)
                   for method, report in reports.items()}
    return {
        "tool": {"name": "cotv", "version": __version__},
        "config": config.canonical(),
        "results": results,
        "diagnostics": diagnostics,
    }


def scenario_row(envelope: Mapping) -> dict:
    """Flat table row of an envelope, keyed by the fixed column list."""
    results = envelope["results"]
    return {column: results.get(column) for column in _value_columns()}


def _set_path(data: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = data
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"sweep.axes.{dotted}",
                              "path does not exist in the base config")
        node = node[part]
    if not isinstance(node, dict):
        raise ConfigError(f"sweep.axes.{dotted}",
                          "path does not exist in the base config")
    node[parts[-1]] = value


def sweep_rows(config: ScenarioConfig) -> tuple[list[str], list[dict]]:
    """Evaluate the scenario grid; rows are ordered lexicographically over
    the sorted axis names, values in the order given."""
    sweep = config.sweep
    if sweep is None:
        raise ConfigError("sweep", "config has no sweep block")
    axes = sweep["axes"]
    names = sorted(axes)
    total = 1
    for name in names:
        total *= len(axes[name])
    if total > MAX_GRID_POINTS:
        raise GridTooLargeError(
            "sweep.axes", f"{total} grid points exceed the {MAX_GRID_POINTS} cap")

    columns = [f"axis:{name}" for name in names] + _value_columns()
    rows = []
    for combo in itertools.product(*(axes[name] for name in names)):
        point = config.canonical()
        point.pop("sweep", None)
        for name, value in zip(names, combo):
            _set_path(point, name, value)
        point_config = parse_config(point)
        envelope = run_scenario(point_config)
        row = {f"axis:{name}": value for name, value in zip(names, combo)}
        row.update(scenario_row(envelope))
        rows.append(row)
    return columns, rows


def classify_payload(config: ScenarioConfig) -> dict:
    """Risk coefficients at the mean time plus moment-preference labels."""
    model = config.model()
    u = config.utility()
    profile = risk_coefficients(u, model.mean())
    labels = classify_moment_preference(profile)
    return {
        "tool": {"name": "cotv", "version": __version__},
        "config": config.canonical(),
        "results": {**profile.to_dict(), **labels.to_dict()},
    }


def dualmoments_payload(config: ScenarioConfig) -> dict:
    """Moment diagnostics with a seeded order-statistic Monte Carlo check."""
    model = config.model()
    mset = moments(model)
    stream = RngStream(seed=config.seed, stream_id=0)

    def sampler(gen, n):
        return model.draw(gen, 2 * n).reshape(n, 2)

    # max(pair) - mean(pair) estimates the dual moment about the mean
    def statistic(pairs):
        return pairs.max(axis=1) - pairs.mean(axis=1)

    mc = mc_estimate(sampler, statistic, 100_000, stream)
    delta = mc.estimate - mset.m2_dual_mean
    return {
        "tool": {"name": "cotv", "version": __version__},
        "config": config.canonical(),
        "results": {
            **mset.to_dict(),
            "mc_m2_dual_mean": mc.estimate,
            "mc_std_error": mc.std_error,
            "mc_quadrature_delta": delta,
            "mc_within_3se": bool(abs(delta) <= 3.0 * mc.std_error
                                  or mc.std_error == 0.0),
        },
    }


# ---------------------------------------------------------------- rendering

def _canonical_json(payload: Mapping) -> str:
    return json.dumps(payload, sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def render_envelope(payload: Mapping) -> str:
    return _canonical_json(payload)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def render_csv(columns: list[str], rows: list[Mapping]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


# ---------------------------------------------------------------- commands

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=None,
                        help="override the config output format")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--method", choices=("exact", "second_order", "both"),
                        default=None, help="override the config method")


def _resolve_output(args, config: ScenarioConfig) -> tuple[str, str | None]:
    out_format = args.format or config.output_format
    out_path = args.out if args.out is not None else config.output_path
    return out_format, out_path


def _run_value(args) -> int:
    config = load_config(args.config, args.seed, args.method)
    envelope = run_scenario(config)
    out_format, out_path = _resolve_output(args, config)
    if out_format == "json":
        _emit(render_envelope(envelope), out_path)
    else:
        _emit(render_csv(_value_columns(), [scenario_row(envelope)]), out_path)
    return 0


def _run_sweep(args) -> int:
    config = load_config(args.config, args.seed, args.method)
    columns, rows = sweep_rows(config)
    out_format, out_path = _resolve_output(args, config)
    if out_format == "json":
        payload = {
            "tool": {"name": "cotv", "version": __version__},
            "config": config.canonical(),
            "columns": columns,
            "rows": rows,
        }
        _emit(render_envelope(payload), out_path)
    else:
        _emit(render_csv(columns, rows), out_path)
    return 0


def _run_classify(args) -> int:
    config = load_config(args.config, args.seed, args.method)
    payload = classify_payload(config)
    out_format, out_path = _resolve_output(args, config)
    if out_format == "json":
        _emit(render_envelope(payload), out_path)
    else:
        columns = list(payload["results"])
        _emit(render_csv(columns, [payload["results"]]), out_path)
    return 0


def _run_dualmoments(args) -> int:
    config = load_config(args.config, args.seed, args.method)
    payload = dualmoments_payload(config)
    out_format, out_path = _resolve_output(args, config)
    if out_format == "json":
        _emit(render_envelope(payload), out_path)
    else:
        columns = list(payload["results"])
        _emit(render_csv(columns, [payload["results"]]), out_path)
    return 0


def _run_verify(args) -> int:
    from .verification import format_line, run_checks

    checks = run_checks(args.profile, fault=args.inject_tolerance_fault)
    failed = [check for check in checks if not check.passed]
    for check in checks:
        sys.stdout.write(format_line(check) + "\n")
    sys.stdout.write(
        f"{len(checks) - len(failed)}/{len(checks)} checks passed "
        f"(profile={args.profile})\n")
    return 0 if not failed else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cotv",
        description="Valuation of service-time variability: premiums, time "
                    "costs, variability costs, and their ratios.")
    parser.add_argument("--version", action="version",
                        version=f"cotv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    value_parser = sub.add_parser("value", help="evaluate one scenario")
    _add_common(value_parser)
    value_parser.set_defaults(func=_run_value)

    sweep_parser = sub.add_parser("sweep", help="evaluate a scenario grid")
    _add_common(sweep_parser)
    sweep_parser.set_defaults(func=_run_sweep)

    classify_parser = sub.add_parser(
        "classify", help="risk coefficients and moment-preference labels")
    _add_common(classify_parser)
    classify_parser.set_defaults(func=_run_classify)

    dual_parser = sub.add_parser(
        "dualmoments", help="distribution moment diagnostics")
    _add_common(dual_parser)
    dual_parser.set_defaults(func=_run_dualmoments)

    verify_parser = sub.add_parser("verify", help="run the verification suite")
    verify_parser.add_argument("--profile", choices=("quick", "full"),
                               default="quick")
    verify_parser.add_argument("--inject-tolerance-fault", action="store_true",
                               help=argparse.SUPPRESS)
    verify_parser.set_defaults(func=_run_verify)

    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        status = args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except CotvError as exc:
        sys.stderr.write(f"computation error ({type(exc).__name__}): {exc}\n")
        return 1
    finally:
        elapsed = time.perf_counter() - started
        sys.stderr.write(f"wall-time: {elapsed:.3f}s\n")
    return status


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
