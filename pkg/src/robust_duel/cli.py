"""Command-line entry point: ``run``, ``compare`` and ``sweep``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .exceptions import (ConfigError, DomainExceedsLinearRegion, EpisodeFailure, InvalidTheta,
                         WrongLink)
from .harness import aggregate, compare, run_policy, sweep_budget

log = logging.getLogger("robust_duel")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
_CONFIG_ERRORS = (ConfigError, DomainExceedsLinearRegion, InvalidTheta, WrongLink)


def fmt(x) -> str:
    """At most 6 significant digits, shortest form."""
    return format(float(x), ".6g")


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.stem + ".config.json")


def _write_csv(out: Path, header: list[str], rows) -> None:
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    tmp.replace(out)


def _write_sidecar(out: Path, resolved: dict, **extra) -> None:
    doc = dict(resolved)
    doc.update(extra)
    with open(sidecar_path(out), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(path, seed) -> dict:
    resolved = config_mod.load(path)
    if seed is not None:
        resolved["base_seed"] = seed
        resolved = config_mod.resolve(resolved)
    return resolved


def cmd_run(config_path, out_path, seed=None) -> int:
    resolved = _load(config_path, seed)
    cfg = config_mod.to_run_config(resolved)
    if len(cfg.policies) > 1:
        log.warning("run uses only the first policy (%s); use compare for several",
                    cfg.policies[0].name)
    pc = cfg.policies[0]
    log.info("running %s for %d rounds x %d seeds", pc.name, cfg.T, cfg.runs)
    agg = aggregate(run_policy(cfg, pc))
    rows = [[t + 1, fmt(agg.instant_mean[t]), fmt(agg.mean[t]), fmt(agg.std[t]),
             fmt(agg.flips_mean[t]), fmt(agg.weight_mean[t])] for t in range(cfg.T)]
    out = Path(out_path)
    _write_csv(out, ["round", "instant_regret", "cum_regret_mean", "cum_regret_std",
                     "flips_used_mean", "weight_mean"], rows)
    _write_sidecar(out, resolved)
    return EXIT_OK


def cmd_compare(config_path, out_path, seed=None) -> int:
    resolved = _load(config_path, seed)
    cfg = config_mod.to_run_config(resolved)
    if len(cfg.policies) < 2:
        raise ConfigError("policies: compare needs at least two policies")
    results = compare(cfg)
    header = ["round"]
    for name in results:
        header += [f"{name}_mean", f"{name}_std"]
    rows = []
    for t in range(cfg.T):
        row = [t + 1]
        for agg in results.values():
            row += [fmt(agg.mean[t]), fmt(agg.std[t])]
        rows.append(row)
    out = Path(out_path)
    _write_csv(out, header, rows)
    _write_sidecar(out, resolved)
    return EXIT_OK


def parse_budgets(text: str, T: int) -> list[int]:
    try:
        budgets = [int(tok) for tok in text.split(",")]
    except ValueError:
        raise ConfigError(f"--budgets: expected comma-separated integers, got {text!r}") from None
    if any(c < 0 or c > T for c in budgets):
        raise ConfigError(f"--budgets: every budget must lie in [0, {T}]")
    if any(b <= a for a, b in zip(budgets, budgets[1:])):
        raise ConfigError("--budgets: budgets must be strictly ascending")
    return budgets


def cmd_sweep(config_path, out_path, budgets, seed=None) -> int:
    resolved = _load(config_path, seed)
    cfg = config_mod.to_run_config(resolved)
    budget_list = parse_budgets(budgets, cfg.T)
    rows_out = sweep_budget(cfg, budget_list)
    header = ["c"]
    for pc in cfg.policies:
        header += [f"{pc.name}_final_mean", f"{pc.name}_final_std"]
    rows = []
    for row in rows_out:
        line = [row.c]
        for pc in cfg.policies:
            mean, std = row.final[pc.name]
            line += [fmt(mean), fmt(std)]
        rows.append(line)
    out = Path(out_path)
    _write_csv(out, header, rows)
    _write_sidecar(out, resolved, budgets=budget_list)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-duel",
        description="Simulate contextual dueling bandits under label-flipping attacks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "one policy over several seeds; per-round traces"),
                        ("compare", "several policies on the same seeds; regret curves"),
                        ("sweep", "final regret as a function of the corruption budget")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--quiet", action="store_true", help="only report warnings and errors")
        if name == "sweep":
            p.add_argument("--budgets", required=True,
                           help="ascending comma-separated budgets, e.g. 20,40,60")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.seed)
        if args.command == "compare":
            return cmd_compare(args.config, args.out, args.seed)
        return cmd_sweep(args.config, args.out, args.budgets, args.seed)
    except _CONFIG_ERRORS as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except EpisodeFailure as exc:
        log.error("numerical failure at round %d: %s", exc.round_index, exc.cause)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
