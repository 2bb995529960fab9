"""Command-line interface: generate | calibrate | cascade | simulate | report.

Every command validates its inputs before writing anything, writes
each output atomically, and removes whatever it did write if a later
step fails, so a nonzero exit never leaves partial results behind.
Flags beat config-file values beat defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import io as cio
from .calibration import FitOptions, fit_all, _histogram
from .cascade import CascadeConfig, run_cascade
from .econ import MacroSeries, POLICIES, ZERO_REVENUE
from .netgen import (
    GeneratorConfig,
    economy_from_panel,
    forward_simulate,
    simulate_economy,
)

FORMATS = ("json", "dot", "graphml")


class CliError(Exception):
    pass


class _Outputs:
    """Tracks written files so a failing command can take them back."""

    def __init__(self) -> None:
        self.paths: list[str] = []

    def write(self, writer, path: str, *args, **kwargs) -> None:
        writer(path, *args, **kwargs)
        self.paths.append(path)

    def discard(self) -> None:
        for path in self.paths:
            try:
                os.unlink(path)
            except OSError:
                pass


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must hold a JSON object")
    return cfg


def _pick(cli_value, cfg: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    if key in cfg:
        return cfg[key]
    return default


def _ensure_out_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def _cmd_generate(args: argparse.Namespace, out: _Outputs) -> int:
    cfg = _load_config_file(args.config)
    fields = {f.name for f in dataclasses.fields(GeneratorConfig)}
    unknown = set(cfg) - fields - {"noise_on"}
    if unknown:
        raise CliError(f"unknown generator config keys: {sorted(unknown)}")
    values = {k: v for k, v in cfg.items() if k in fields}
    for key, cli_value in (("n_firms", args.firms),
                           ("horizon", args.horizon),
                           ("edge_model", args.edge_model),
                           ("mean_out_degree", args.mean_out_degree),
                           ("seed", args.seed)):
        if cli_value is not None:
            values[key] = cli_value
    for key in ("alpha_range", "beta_range", "strength_range",
                "cost_coeff_range", "revenue_range", "equity_frac_range"):
        if key in values:
            values[key] = tuple(values[key])
    try:
        gen = GeneratorConfig(**values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad generator config: {exc}") from None
    noise_on = not args.no_noise if args.no_noise else cfg.get("noise_on", True)

    economy, network, macro, result = simulate_economy(gen, noise_on=noise_on)
    echo = dataclasses.asdict(gen)
    echo["noise_on"] = bool(noise_on)
    _ensure_out_dir(args.out_dir)
    join = lambda name: os.path.join(args.out_dir, name)
    out.write(cio.write_panel, join("panel.csv"), result.panel, echo, gen.seed)
    out.write(cio.write_edges, join("edges.csv"), network, echo, gen.seed)
    out.write(cio.write_gdp, join("gdp.csv"), macro, echo, gen.seed)
    out.write(cio.write_params, join("params.csv"), economy.params, echo, gen.seed)
    print(f"generated {gen.n_firms} firms, {network.n_edges()} edges, "
          f"{gen.horizon} periods -> {args.out_dir} "
          f"({len(result.floor_events)} revenue floor events)")
    return 0


def _load_panel_bundle(args) -> tuple:
    panel = cio.load_panel(args.panel)
    macro = cio.load_gdp(args.gdp)
    panel = cio.attach_gdp(panel, macro)
    network = cio.load_edges(args.edges, panel.firm_ids)
    return panel, macro, network


def _cmd_calibrate(args: argparse.Namespace, out: _Outputs) -> int:
    cfg = _load_config_file(args.config)
    tol = float(_pick(args.tol, cfg, "tol", FitOptions.tol))
    max_iter = int(_pick(args.max_iter, cfg, "max_iter", FitOptions.max_iter))
    panel, _, network = _load_panel_bundle(args)
    options = FitOptions(tol=tol, max_iter=max_iter)
    report = fit_all(panel, network, options)
    echo = {"panel": args.panel, "edges": args.edges, "gdp": args.gdp,
            "tol": tol, "max_iter": max_iter}
    _ensure_out_dir(args.out_dir)
    path = os.path.join(args.out_dir, "fit_report.json")
    out.write(cio.export_fit_report, path, report, echo, args.seed)
    n_bad = len(report.failures)
    print(f"calibrated {len(report.results)} firms "
          f"({n_bad} failures) -> {path}")
    return 0


def _apply_fit_report(path: str, params: dict, network):
    """Overlay fitted elasticities and strengths onto truth inputs."""
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read fit report {path}: {exc}") from None
    firms = report.get("firms", {})
    new_params = dict(params)
    overrides = {}
    for fid, rec in firms.items():
        if fid in new_params:
            base = new_params[fid]
            new_params[fid] = dataclasses.replace(
                base, alpha=float(rec["alpha"]), beta=float(rec["beta"]))
        for cid, k in rec.get("strengths", {}).items():
            overrides[(fid, cid)] = float(k)
    known = {(s, c) for s, c, _ in network.edges()}
    overrides = {e: v for e, v in overrides.items() if e in known}
    return new_params, network.with_strengths(overrides)


def _cmd_cascade(args: argparse.Namespace, out: _Outputs) -> int:
    cfg = _load_config_file(args.config)
    panel, macro, network = _load_panel_bundle(args)
    params = cio.load_params(args.params)
    if args.fit_report:
        params, network = _apply_fit_report(args.fit_report, params, network)
    triggers = args.trigger or cfg.get("trigger") or []
    if not triggers:
        raise CliError("no trigger firms given (use --trigger)")
    policy = _pick(args.policy, cfg, "policy", ZERO_REVENUE)
    max_gen = _pick(args.max_generations, cfg, "max_generations", None)
    gdp_growth = _pick(args.gdp_ratio, cfg, "gdp_ratio",
                       macro.ratio(len(macro) - 1))
    formats = tuple(args.format or cfg.get("format") or FORMATS)
    for fmt in formats:
        if fmt not in FORMATS:
            raise CliError(f"unknown format {fmt!r}")
    economy = economy_from_panel(panel, params)
    try:
        config = CascadeConfig(
            trigger_firms=tuple(triggers),
            gdp_growth=float(gdp_growth),
            policy=policy,
            max_generations=None if max_gen is None else int(max_gen),
        )
        result = run_cascade(economy, network, config, seed=args.seed or 0)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    echo = {"panel": args.panel, "edges": args.edges, "gdp": args.gdp,
            "params": args.params, "fit_report": args.fit_report,
            "trigger": sorted(triggers), "policy": policy,
            "gdp_ratio": float(gdp_growth),
            "max_generations": max_gen,
            "money_flow": not args.product_flow}
    _ensure_out_dir(args.out_dir)
    money_flow = not args.product_flow
    written = []
    if "json" in formats:
        path = os.path.join(args.out_dir, "cascade.json")
        out.write(cio.export_cascade, path, result, echo, args.seed)
        written.append(path)
    if "dot" in formats:
        path = os.path.join(args.out_dir, "network.dot")
        out.write(cio.export_network_dot, path, network, result, money_flow)
        written.append(path)
    if "graphml" in formats:
        path = os.path.join(args.out_dir, "network.graphml")
        out.write(cio.export_network_graphml, path, network, result, money_flow)
        written.append(path)
    print(f"cascade: {len(result.bankrupt)} bankrupt over "
          f"{result.generations_run} generations -> {' '.join(written)}")
    return 0


def _cmd_simulate(args: argparse.Namespace, out: _Outputs) -> int:
    cfg = _load_config_file(args.config)
    panel, macro, network = _load_panel_bundle(args)
    params = cio.load_params(args.params)
    if args.fit_report:
        params, network = _apply_fit_report(args.fit_report, params, network)
    horizon = int(_pick(args.horizon, cfg, "horizon", 11))
    if horizon < 3:
        raise CliError("horizon must be >= 3")
    seed = int(_pick(args.seed, cfg, "seed", 0))
    ratios = [macro.ratio(t) for t in range(1, len(macro))]
    growth = _pick(args.gdp_growth, cfg, "gdp_growth",
                   float(np.mean(ratios) - 1.0) if ratios else 0.02)
    vol = _pick(args.gdp_volatility, cfg, "gdp_volatility",
                float(np.std(ratios)) if ratios else 0.0)
    jitter = float(_pick(args.decision_jitter, cfg, "decision_jitter", 0.0))
    economy = economy_from_panel(panel, params)

    rng = np.random.default_rng([seed, 7])
    values = [macro.gdp[-1]]
    for _ in range(horizon - 1):
        while True:
            nxt = values[-1] * (1.0 + growth + vol * rng.normal())
            if nxt > 0.0:
                break
        values.append(nxt)
    start = panel.periods[-1]
    future = MacroSeries(gdp=tuple(values),
                         periods=tuple(range(start, start + horizon)))
    result = forward_simulate(
        economy, network, future,
        noise_on=not args.no_noise,
        decision_jitter=jitter,
        seed=seed,
    )
    echo = {"panel": args.panel, "edges": args.edges, "gdp": args.gdp,
            "params": args.params, "fit_report": args.fit_report,
            "horizon": horizon, "gdp_growth": float(growth),
            "gdp_volatility": float(vol), "decision_jitter": jitter,
            "noise_on": not args.no_noise}
    _ensure_out_dir(args.out_dir)
    panel_path = os.path.join(args.out_dir, "panel_sim.csv")
    gdp_path = os.path.join(args.out_dir, "gdp_sim.csv")
    out.write(cio.write_panel, panel_path, result.panel, echo, seed)
    out.write(cio.write_gdp, gdp_path, future, echo, seed)
    print(f"simulated {horizon} periods for {len(panel.firm_ids)} firms -> "
          f"{panel_path} ({len(result.floor_events)} revenue floor events)")
    return 0


def _cmd_report(args: argparse.Namespace, out: _Outputs) -> int:
    try:
        with open(args.fit_report, encoding="utf-8") as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read fit report {args.fit_report}: {exc}") from None
    firms = report.get("firms", {})
    if not firms:
        raise CliError(f"{args.fit_report} holds no firm results")
    histograms = {
        "alpha": _histogram([r["alpha"] for r in firms.values()]),
        "beta": _histogram([r["beta"] for r in firms.values()]),
        "alpha_plus_beta": _histogram([r["alpha"] + r["beta"]
                                       for r in firms.values()]),
        "strength": _histogram([k for r in firms.values()
                                for k in r.get("strengths", {}).values()]),
        "average_error": _histogram([r["average_error"]
                                     for r in firms.values()]),
    }
    payload = {
        "config": {"fit_report": args.fit_report},
        "seed": report.get("seed"),
        "n_firms": len(firms),
        "n_failures": len(report.get("failures", {})),
        "histograms": histograms,
    }
    _ensure_out_dir(args.out_dir)
    path = os.path.join(args.out_dir, "histograms.json")
    out.write(cio._atomic_write_text, path,
              json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"report for {len(firms)} firms -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainsim",
        description="Simulate, calibrate and stress firm transaction networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic economy and panel")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--firms", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--edge-model", choices=("random", "scale-free"))
    p.add_argument("--mean-out-degree", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("calibrate", help="fit firm parameters from a panel")
    p.add_argument("--panel", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--gdp", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("cascade", help="propagate bankruptcies from triggers")
    p.add_argument("--panel", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--gdp", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--fit-report")
    p.add_argument("--trigger", action="append")
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--max-generations", type=int)
    p.add_argument("--gdp-ratio", type=float)
    p.add_argument("--format", action="append", choices=FORMATS)
    p.add_argument("--product-flow", action="store_true",
                   help="orient exports along product flow instead of money flow")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_cascade)

    p = sub.add_parser("simulate", help="roll a calibrated economy forward")
    p.add_argument("--panel", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--gdp", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--fit-report")
    p.add_argument("--horizon", type=int)
    p.add_argument("--gdp-growth", type=float)
    p.add_argument("--gdp-volatility", type=float)
    p.add_argument("--decision-jitter", type=float)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="histogram summary of a fit report")
    p.add_argument("--fit-report", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = _Outputs()
    try:
        return args.func(args, out)
    except (CliError, cio.FormatError, ValueError, OSError) as exc:
        out.discard()
        print(f"chainsim: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main(sys.argv[1:]))
