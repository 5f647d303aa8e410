"""Command-line entry point: ``hmmimo run`` and ``hmmimo validate``."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, downlink, uplink
from .campaign import (CampaignResult, check_equal_budget, results_csv, run_campaign,
                       simulate_drop, summary_json)
from .config import SCENARIOS, ConfigError, NetworkConfig, derive_scenario, load_config, schema_text
from .plot import cdf_svg
from .rng import stream
from .validation import run_suite

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmmimo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run Monte Carlo campaigns and write CSV/JSON/SVG results")
    run.add_argument("--config", action="append", default=[], metavar="PATH",
                     help="config file; repeat to give one file per scenario")
    run.add_argument("--scenario", choices=SCENARIOS + ("all",), default=None)
    run.add_argument("--drops", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--output", default="results", metavar="DIR")
    run.add_argument("--emit-plot", action="store_true")
    run.add_argument("--diagnostics", action="store_true",
                     help="write oracle term powers for user (0, 0) of drop 0")
    run.add_argument("--diagnostic-samples", type=int, default=10_000)
    run.add_argument("--allow-unequal", action="store_true",
                     help="permit scenarios with different antenna or UE budgets")
    run.add_argument("--workers", type=int, default=1)

    val = sub.add_parser("validate", help="analytic vs. simulated term checks on small instances")
    val.add_argument("--tolerance", type=float, default=None,
                     help="relative tolerance for every check (default 2%%, 3%% for the 4th moment)")
    val.add_argument("--paper-mode-dl", action="store_true",
                     help="also report how far the reference-mode J1 terms are from simulation")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--instances", type=int, default=4)
    val.add_argument("--symbols", type=int, default=100_000)
    val.add_argument("--blocks", type=int, default=1_000_000)

    sub.add_parser("schema", help="print every config key with its default")
    return p


def _resolve_configs(args) -> dict[str, NetworkConfig]:
    overrides = {"drops": args.drops, "seed": args.seed}
    if len(args.config) > 1:
        if args.scenario not in (None, "all"):
            raise ConfigError("--scenario cannot select among several --config files")
        configs = {}
        for path in args.config:
            cfg = load_config(path, **overrides)
            if cfg.scenario in configs:
                raise ConfigError(f"scenario {cfg.scenario!r} given twice", path=path, key="scenario")
            configs[cfg.scenario] = cfg
        return configs
    if args.config:
        base = load_config(args.config[0], **overrides)
    else:
        base = NetworkConfig(**{k: v for k, v in overrides.items() if v is not None})
    if args.scenario is None:
        names = [base.scenario]
    elif args.scenario == "all":
        names = list(SCENARIOS)
    else:
        names = [args.scenario]
    return {s: derive_scenario(base, s) for s in names}


def _diagnostics(config: NetworkConfig, n: int) -> dict:
    state = simulate_drop(config, 0)
    eta = np.ones((config.C, config.K_c))
    rng = stream(config.seed, 0, "oracle")
    ul_ana = uplink.ul_terms_analytic(state.estimates, state.beta, eta, config, 0, 0,
                                      channel_cov=state.channels.cov)
    g_ul = uplink.ul_sinr_all(state.estimates, state.channels.cov, eta, config)[0, 0]
    g_ul_emp, ul_emp = uplink.ul_sinr_empirical(state.channels, state.estimates, eta, config, n, rng)
    dl_ana = downlink.dl_terms_analytic(state.estimates, state.channels.cov, state.power, config, 0, 0)
    g_dl = {m: float(downlink.dl_sinr_all(state.estimates, state.channels.cov, state.power, config,
                                          m)[0, 0]) for m in downlink.MODES}
    g_dl_emp, dl_emp = downlink.dl_sinr_empirical(state.channels, state.estimates, state.power,
                                                  config, n, rng)
    return {
        "drop": 0, "cell": 0, "user": 0,
        "uplink": {"gamma_analytic": float(g_ul), "gamma_empirical": float(g_ul_emp),
                   "terms_analytic": ul_ana, "terms_empirical": ul_emp.as_dict()},
        "downlink": {"gamma_analytic": g_dl, "gamma_empirical": float(g_dl_emp),
                     "terms_analytic": dl_ana, "terms_empirical": dl_emp.as_dict()},
    }


def cmd_run(args) -> int:
    try:
        configs = _resolve_configs(args)
        if not args.allow_unequal:
            check_equal_budget(configs)
    except ConfigError as exc:
        print(f"hmmimo: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hmmimo: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    results: dict[str, CampaignResult] = {}
    for name, cfg in configs.items():
        print(f"{name}: {cfg.drops} drops, {cfg.total_antennas} antennas, {cfg.total_users} UEs",
              file=sys.stderr)
        results[name] = run_campaign(cfg, workers=args.workers)

    out = Path(args.output)
    files = {"results": "results.csv", "summary": "summary.json", "manifest": "manifest.json"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / files["results"]).write_text(results_csv(results))
        (out / files["summary"]).write_text(summary_json(results))
        if args.emit_plot:
            for link in ("ul", "dl"):
                curves = {s: getattr(r, link).sorted_se for s, r in results.items()}
                title = f"{'Uplink' if link == 'ul' else 'Downlink'} per-user SE CDF"
                files[f"plot_{link}"] = f"cdf_{link}.svg"
                (out / files[f"plot_{link}"]).write_text(cdf_svg(curves, title))
        if args.diagnostics:
            diag = {s: _diagnostics(c, args.diagnostic_samples) for s, c in configs.items()}
            files["diagnostics"] = "diagnostics.json"
            (out / files["diagnostics"]).write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n")
        combined = hashlib.sha256("".join(configs[s].canonical_text() for s in sorted(configs))
                                  .encode()).hexdigest()
        manifest = {
            "artifact_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config_hash": combined,
            "scenario_config_hash": {s: c.config_hash() for s, c in configs.items()},
            "scenarios": list(configs),
            "outputs": files,
        }
        (out / files["manifest"]).write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        print(f"hmmimo: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO

    for name, res in results.items():
        s = res.summary()
        print(f"{name:8s} n={s['n']:7d}  95%-likely UL={s['likely95_ul']:.4f}  "
              f"DL={s['likely95_dl']:.4f}  median UL={s['median']['ul']:.4f}  "
              f"DL={s['median']['dl']:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = run_suite(seed=args.seed, n_instances=args.instances, n_symbols=args.symbols,
                       n_blocks=args.blocks, tol=args.tolerance, paper_mode=args.paper_mode_dl)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} check(s) outside tolerance; first: {failed[0].name}", file=sys.stderr)
        return EXIT_TOLERANCE
    print(f"all {len(checks)} checks within tolerance")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "validate":
        return cmd_validate(args)
    sys.stdout.write(schema_text())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
