"""Command-line experiment runner.

Config files are INI-style (``configparser``)::

    [shared]
    K = 40
    r = 10
    mu = 10
    alpha = 0.01
    iterations = 10000
    seed = 1

    [output]
    dir = results        ; relative to the config file
    plot = true

    [scheme GC-MMC-2]
    scheme = GC_MMC_Uncorrelated
    P = 4
    order_vector = 6, 8, 10

Every ``[scheme NAME]`` section is one entry; it may override nothing from
``[shared]``. Keys: scheme, P, m, order_vector, baseline_threshold,
baseline_computations.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from gcmmc import coding, gradcheck
from gcmmc.model import ConfigError, Scheme, SchemeConfig, validate_config
from gcmmc.simulator import SchemeInstance, build_scheme, compare_schemes

log = logging.getLogger("gcmmc")

SHARED_KEYS = {"K": int, "r": int, "mu": float, "alpha": float, "iterations": int, "seed": int}
SCHEME_KEYS = {"scheme", "p", "m", "order_vector", "baseline_threshold", "baseline_computations"}
TRIAL_COLUMNS = ["trial_id", "scheme", "completion_time", "comm_load"]
PLOT_COLUMNS = ["scheme", "mean_completion_time", "stderr_completion_time", "mean_comm_load", "stderr_comm_load"]


@dataclass
class ExperimentConfig:
    names: list[str]
    schemes: list[SchemeConfig]
    out_dir: Path
    plot: bool = True


def _fmt(x) -> str:
    # locale-independent, round-trippable
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace("[", "").replace("]", "").replace(",", " ").split())


def load_config(path: Path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not parser.has_section("shared"):
        raise ConfigError("config needs a [shared] section")
    shared = {}
    for key, conv in SHARED_KEYS.items():
        if key not in parser["shared"]:
            raise ConfigError(f"[shared] is missing {key}")
        try:
            shared[key] = conv(parser["shared"][key])
        except ValueError as e:
            raise ConfigError(f"[shared] {key}: {e}") from e
    extra = set(parser["shared"]) - {k.lower() for k in SHARED_KEYS}
    if extra:
        raise ConfigError(f"[shared] has unknown keys {sorted(extra)}")

    names, schemes = [], []
    for section in parser.sections():
        if not section.startswith("scheme"):
            continue
        name = section[len("scheme"):].strip()
        if not name:
            raise ConfigError(f"section [{section}] needs a name, e.g. [scheme GC]")
        body = parser[section]
        unknown = set(body) - SCHEME_KEYS
        if unknown:
            raise ConfigError(f"[{section}] has unknown keys {sorted(unknown)}")
        try:
            cfg = SchemeConfig(
                scheme=Scheme(body.get("scheme", "")),
                P=int(body.get("P", "1")),
                m=int(body["m"]) if "m" in body else None,
                order_vector=_ints(body["order_vector"]) if "order_vector" in body else None,
                baseline_threshold=int(body["baseline_threshold"]) if "baseline_threshold" in body else None,
                baseline_computations=int(body["baseline_computations"]) if "baseline_computations" in body else None,
                **shared,
            )
        except ValueError as e:
            raise ConfigError(f"[{section}]: {e}") from e
        names.append(name)
        schemes.append(cfg)

    out = parser["output"] if parser.has_section("output") else {}
    out_dir = Path(out.get("dir", "results"))
    if not out_dir.is_absolute():
        out_dir = Path(path).parent / out_dir
    plot = parser.getboolean("output", "plot", fallback=True) if parser.has_section("output") else True
    return ExperimentConfig(names, schemes, out_dir, plot)


def write_outputs(rows, out_dir: Path, distinct: bool, plot: bool) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"trials": out_dir / "trials.csv", "summary": out_dir / "summary.json",
             "plot_data": out_dir / "plot_data.csv"}
    with open(paths["trials"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for row in rows:
            for i, (t, c) in enumerate(zip(row.trials.completion_time, row.trials.comm_load)):
                w.writerow([i, row.name, _fmt(t), _fmt(c)])
    with open(paths["plot_data"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for row in rows:
            s = row.summary
            w.writerow([row.name, _fmt(s.mean_completion_time), _fmt(s.stderr_completion_time),
                        _fmt(s.mean_comm_load), _fmt(s.stderr_comm_load)])
    summary = {
        "comm_load_mode": "distinct" if distinct else "all",
        "schemes": [{"name": row.name, **row.summary.to_dict()} for row in rows],
    }
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if plot:
        from gcmmc.plotting import figure1

        paths["figure"] = figure1(
            [r.name for r in rows],
            [r.summary.mean_completion_time for r in rows],
            [r.summary.stderr_completion_time for r in rows],
            [r.summary.mean_comm_load for r in rows],
            [r.summary.stderr_comm_load for r in rows],
            out_dir / "figure1.png",
        )
    return paths


def verify_instance(name: str, instance: SchemeInstance, patterns: int = 50, seed: int = 0) -> bool:
    """Certify the code and run a decode round-trip sweep; prints one line each."""
    if instance.code.encoding is None:
        print(f"{name}: external threshold baseline, no code to verify")
        return True
    cert = coding.verify_code(instance.code.encoding, instance.code.threshold, seed=seed)
    print(f"{name}: certificate {cert}")
    problem = gradcheck.RegressionProblem.random(instance.K, seed=seed)
    rng = np.random.default_rng(seed)
    worst, failed = 0.0, None
    for _ in range(patterns):
        pattern = gradcheck.sample_admissible_pattern(instance, rng)
        theta = rng.standard_normal(problem.dim)
        try:
            rep = gradcheck.coded_round_trip(problem, instance, pattern, theta)
        except gradcheck.InfeasiblePattern as e:
            failed = str(e)
            break
        worst = max(worst, rep.relative_error)
        if not rep.ok:
            failed = f"pattern {pattern.tolist()} error {rep.relative_error:.2e}"
            break
    if failed:
        print(f"{name}: round trip FAIL: {failed}")
    else:
        print(f"{name}: round trip PASS on {patterns} straggler patterns, worst relative error {worst:.3e}")
    return cert.passed and failed is None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcmmc", description="Simulate gradient coding schemes with multi-message communication.")
    p.add_argument("config", type=Path, help="experiment config (INI)")
    p.add_argument("-o", "--out", type=Path, help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=int, help="override the shared seed")
    p.add_argument("--trials", type=int, help="override the shared iteration count")
    p.add_argument("--verify", action="store_true", help="certify codes and check decoding instead of simulating")
    p.add_argument("--distinct-comm-load", action="store_true",
                   help="count distinct coded messages instead of every received message")
    p.add_argument("--exact", action="store_true", help="decide decodability by solving the decode system (slow)")
    p.add_argument("--threads", type=int, help="worker threads for trial blocks (default: $GCMMC_THREADS or 1)")
    p.add_argument("--no-plot", action="store_true", help="skip figure1.png")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        exp = load_config(args.config)
        if not exp.schemes:
            raise ConfigError("no schemes in config")
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["iterations"] = args.trials
        schemes = [replace(c, **overrides) for c in exp.schemes]
        for name, cfg in zip(exp.names, schemes):
            errors = validate_config(cfg)
            if errors:
                raise ConfigError(f"scheme {name}: " + "; ".join(errors))
    except ConfigError as e:
        print(f"gcmmc: error: {e}", file=sys.stderr)
        return 2

    if args.verify:
        ok = True
        for name, cfg in zip(exp.names, schemes):
            ok &= verify_instance(name, build_scheme(cfg), seed=cfg.seed)
        return 0 if ok else 1

    try:
        rows = compare_schemes(schemes, exp.names, exact=args.exact,
                               distinct=args.distinct_comm_load, threads=args.threads)
        paths = write_outputs(rows, args.out or exp.out_dir, args.distinct_comm_load,
                              exp.plot and not args.no_plot)
    except (ValueError, OSError) as e:
        print(f"gcmmc: error: {e}", file=sys.stderr)
        return 1
    for row in rows:
        s = row.summary
        extra = f"  undecodable={s.undecodable}" if s.undecodable else ""
        print(f"{row.name:<20} completion {s.mean_completion_time:.4f} +/- {s.stderr_completion_time:.4f}"
              f"   comm_load {s.mean_comm_load:.2f} +/- {s.stderr_comm_load:.2f}{extra}")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
