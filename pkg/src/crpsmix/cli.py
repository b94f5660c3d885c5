"""Command-line front end: synthetic runs, CSV aggregation, report exports.

Subcommands::

    crpsmix synth     --out DIR [--seed S ...]   # triangular-mixture benchmark
    crpsmix aggregate INPUT.csv --out DIR [...]  # one protocol round per row
    crpsmix report    RUNDIR [--out DIR]         # plot-ready exports

All numbers are written with 17 significant digits so that logs round-trip
float64 exactly; reruns with the same config and inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from .aggregation import AggregatorConfig
from .distributions import GridDomain, Triangular, discretize, parse_distribution
from .estimator import CRPSAggregator
from .regret import theoretical_bound
from .synthetic import (
    RNG_ALGORITHM,
    MixtureScenario,
    build_expert_pool,
    sample_sequence,
    weight_schedule,
)
from .validation import check_outcome

SCHEMA_VERSION = 1

logger = logging.getLogger(__name__)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", type=float, default=0.0, help="interval lower endpoint")
    p.add_argument("--b", type=float, default=1.0, help="interval upper endpoint")
    p.add_argument("--grid", type=int, default=1024, help="number of grid cells")
    p.add_argument("--alpha", type=float, default=0.001, help="Fixed Share parameter (0 disables)")
    p.add_argument("--confidence", action="store_true", help="use per-expert confidence levels")
    p.add_argument("--seed", type=int, default=0, help="random seed (synthetic data)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--snapshots", type=str, default="", help="comma-separated rounds to snapshot the learner CDF at")
    p.add_argument("--config", type=Path, default=None, help="JSON file whose entries override flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crpsmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="run the synthetic mixture benchmark with both rules")
    _add_common(p_synth)
    p_synth.add_argument("--horizon", type=int, default=3000, help="number of rounds")
    p_synth.add_argument("--segments", type=int, default=6, help="number of equal-length segments")
    p_synth.add_argument("--method", type=int, choices=(1, 2), default=1, help="mixing schedule")
    p_synth.set_defaults(func=cmd_synth, components=None)

    p_agg = sub.add_parser("aggregate", help="aggregate a CSV forecast stream")
    p_agg.add_argument("input", type=Path, help="forecast CSV file")
    _add_common(p_agg)
    p_agg.add_argument("--rule", choices=("aa", "wa"), default="aa")
    mode = p_agg.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="reject outcomes outside [a, b] (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false",
                      help="clip out-of-range outcomes with a warning")
    p_agg.set_defaults(func=cmd_aggregate)

    p_rep = sub.add_parser("report", help="emit plot-ready exports for a completed run")
    p_rep.add_argument("run_dir", type=Path)
    p_rep.add_argument("--out", type=Path, default=None, help="report directory (default RUNDIR/report)")
    p_rep.set_defaults(func=cmd_report)
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None) is None:
        return
    overrides = json.loads(Path(args.config).read_text())
    allowed = {k for k in vars(args) if k not in ("func", "command", "config")}
    for key, value in overrides.items():
        if key not in allowed:
            raise ValueError(f"unknown config key {key!r} (allowed: {sorted(allowed)})")
        if key in ("out", "input"):
            value = Path(value)
        setattr(args, key, value)


def _parse_snapshots(raw: str) -> set[int]:
    if not raw:
        return set()
    return {int(part) for part in raw.split(",") if part.strip()}


# ---------------------------------------------------------------------------
# Run output files
# ---------------------------------------------------------------------------


def _write_rounds_csv(path: Path, est: CRPSAggregator) -> None:
    n = est.n_experts_
    header = (
        ["t", "y", "h"]
        + [f"l_{i}" for i in range(1, n + 1)]
        + [f"p_{i}" for i in range(1, n + 1)]
        + [f"w_{i}" for i in range(1, n + 1)]
    )
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in est.ledger_.rounds:
            row = [str(r.t), _fmt(r.outcome), _fmt(r.learner_loss)]
            row += [_fmt(v) for v in r.expert_losses]
            row += [_fmt(v) for v in r.confidences]
            row += [_fmt(v) for v in r.weights]
            writer.writerow(row)


def _write_regret_csv(path: Path, est: CRPSAggregator) -> None:
    ledger = est.ledger_
    n = ledger.settings.n_experts
    bound = theoretical_bound(n, ledger.settings.learning_rate)
    curves = ledger.discounted_regret_curves()
    header = ["t"] + [f"r_{i}" for i in range(1, n + 1)] + ["bound"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, row in enumerate(curves, start=1):
            writer.writerow([str(t)] + [_fmt(v) for v in row] + [_fmt(bound)])


def _write_snapshots_csv(path: Path, est: CRPSAggregator, snapshots: dict[int, np.ndarray]) -> None:
    points = est.domain_.points
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "u", "f"])
        for t in sorted(snapshots):
            for u, f in zip(points, snapshots[t]):
                writer.writerow([str(t), _fmt(u), _fmt(f)])


def _run_summary(est: CRPSAggregator, config_echo: dict) -> dict:
    ledger = est.ledger_
    learner_cum = np.cumsum(ledger.learner_losses())
    expert_cum = np.cumsum(ledger.expert_losses(), axis=0)
    cum_regret = ledger.cumulative_regret_curves()[-1]
    disc_regret = ledger.discounted_regret_curves()[-1]
    report = ledger.verify_bounds()
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_echo,
        "n_experts": est.n_experts_,
        "rounds": len(ledger),
        "final": {
            "learner_loss": float(learner_cum[-1]),
            "expert_losses": [float(v) for v in expert_cum[-1]],
            "cumulative_regret": [float(v) for v in cum_regret],
            "discounted_regret": [float(v) for v in disc_regret],
        },
        "bound": {
            "value": report.bound,
            "max_prefix_discounted_regret": [float(v) for v in report.max_prefix_regret],
            "verdict": report.verdict,
            "tolerance": report.tolerance,
        },
        "asleep_rounds": list(est.asleep_rounds_),
    }


def write_run(outdir: Path, est: CRPSAggregator, config_echo: dict,
              snapshots: dict[int, np.ndarray] | None = None) -> dict:
    """Write rounds.csv, regret.csv, summary.json (and snapshots) for one run."""
    outdir.mkdir(parents=True, exist_ok=True)
    _write_rounds_csv(outdir / "rounds.csv", est)
    _write_regret_csv(outdir / "regret.csv", est)
    if snapshots:
        _write_snapshots_csv(outdir / "cdf_snapshots.csv", est, snapshots)
    summary = _run_summary(est, config_echo)
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _drive(est: CRPSAggregator, rounds, snapshot_at: set[int]) -> dict[int, np.ndarray]:
    """Feed (forecasts, outcome, confidences) triples into the estimator."""
    snapshots: dict[int, np.ndarray] = {}
    for t, (forecasts, outcome, conf) in enumerate(rounds, start=1):
        est.partial_fit(forecasts, outcome, conf)
        if t in snapshot_at:
            snapshots[t] = est.forecast_.values.copy()
    return snapshots


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def _scenario_from_args(args: argparse.Namespace) -> MixtureScenario:
    if args.components is not None:
        components = tuple(Triangular(*c) for c in args.components)
        return MixtureScenario(seed=args.seed, components=components,
                               horizon=args.horizon, segments=args.segments,
                               method=args.method)
    return MixtureScenario(seed=args.seed, horizon=args.horizon,
                           segments=args.segments, method=args.method)


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")


def cmd_synth(args: argparse.Namespace) -> None:
    domain = GridDomain(args.a, args.b, args.grid)
    _check_alpha(args.alpha)
    scenario = _scenario_from_args(args)
    schedule = weight_schedule(scenario)
    outcomes = sample_sequence(scenario, schedule)
    pool = build_expert_pool(scenario, domain)
    snapshot_at = _parse_snapshots(args.snapshots)

    args.out.mkdir(parents=True, exist_ok=True)
    with (args.out / "scenario.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y", "g_1", "g_2", "g_3"])
        for t, (y, g) in enumerate(zip(outcomes, schedule), start=1):
            writer.writerow([str(t), _fmt(y)] + [_fmt(v) for v in g])

    per_rule: dict[str, dict] = {}
    for rule in ("aa", "wa"):
        est = CRPSAggregator(rule=rule, lower=args.a, upper=args.b,
                             n_cells=args.grid, alpha=args.alpha, confidence=False)
        snaps = _drive(est, ((pool, y, None) for y in outcomes), snapshot_at)
        echo = {"rule": rule, "a": args.a, "b": args.b, "grid": args.grid,
                "alpha": args.alpha, "confidence": False, "seed": args.seed,
                "mode": "synth"}
        per_rule[rule] = write_run(args.out / rule, est, echo, snaps)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "scenario": {
            "horizon": scenario.horizon,
            "segments": scenario.segments,
            "method": scenario.method,
            "seed": scenario.seed,
            "components": [list(c.params()) for c in scenario.components],
            "rng": {"algorithm": RNG_ALGORITHM, "seed": scenario.seed},
        },
        "rules": {
            rule: {"final_learner_loss": s["final"]["learner_loss"],
                   "final_expert_losses": s["final"]["expert_losses"]}
            for rule, s in per_rule.items()
        },
        "aa_minus_wa": per_rule["aa"]["final"]["learner_loss"]
        - per_rule["wa"]["final"]["learner_loss"],
    }
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for rule in ("aa", "wa"):
        print(f"{rule}: final learner loss {_fmt(per_rule[rule]['final']['learner_loss'])}")
    print(f"aa - wa: {_fmt(summary['aa_minus_wa'])}")


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------


def _expert_columns(fieldnames: list[str]) -> int:
    """Number of experts encoded in the header; raises on gaps."""
    indices = set()
    for name in fieldnames:
        m = re.fullmatch(r"expert(\d+)_(kind|params|conf)", name)
        if m:
            indices.add(int(m.group(1)))
    if not indices:
        raise ValueError("no expert columns found (expected expert1_kind, ...)")
    n = max(indices)
    for k in range(1, n + 1):
        for suffix in ("kind", "params", "conf"):
            if f"expert{k}_{suffix}" not in fieldnames:
                raise ValueError(f"missing column expert{k}_{suffix}")
    return n


def read_forecast_csv(path: Path, domain: GridDomain, strict: bool = True):
    """Yield (forecasts, outcome, confidences) per row, validating as it goes.

    Rows must carry contiguous round indices starting at 1. Errors point at
    the offending CSV line.
    """
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "t" not in reader.fieldnames or "y" not in reader.fieldnames:
            raise ValueError(f"{path}: malformed header (need t, y, expert columns)")
        n = _expert_columns(reader.fieldnames)
        expected_t = 1
        for row in reader:
            line = reader.line_num
            try:
                t = int(row["t"])
                y = float(row["y"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path} line {line}: bad t/y field: {exc}") from None
            if t != expected_t:
                raise ValueError(
                    f"{path} line {line}: non-contiguous round index {t} (expected {expected_t})"
                )
            expected_t += 1
            try:
                y = check_outcome(y, domain.lower, domain.upper, lenient=not strict)
            except ValueError as exc:
                raise ValueError(f"{path} line {line}: {exc}") from None
            if y != float(row["y"]):
                logger.warning("%s line %d: outcome clipped to %s", path, line, y)
            forecasts = []
            conf = np.empty(n)
            for k in range(1, n + 1):
                try:
                    kind = row[f"expert{k}_kind"].strip()
                    params = [float(p) for p in row[f"expert{k}_params"].split(";") if p.strip()]
                    conf[k - 1] = float(row[f"expert{k}_conf"])
                    dist = parse_distribution(kind, params, domain.lower, domain.upper)
                except (AttributeError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path} line {line}: expert {k}: {exc}") from None
                forecasts.append(discretize(dist, domain))
            if conf.min() < 0.0 or conf.max() > 1.0:
                raise ValueError(f"{path} line {line}: confidences must lie in [0, 1]")
            yield forecasts, y, conf


def cmd_aggregate(args: argparse.Namespace) -> None:
    domain = GridDomain(args.a, args.b, args.grid)
    _check_alpha(args.alpha)
    est = CRPSAggregator(rule=args.rule, lower=args.a, upper=args.b,
                         n_cells=args.grid, alpha=args.alpha,
                         confidence=args.confidence)
    rows = read_forecast_csv(args.input, domain, strict=args.strict)
    snaps = _drive(est, rows, _parse_snapshots(args.snapshots))
    echo = {"rule": args.rule, "a": args.a, "b": args.b, "grid": args.grid,
            "alpha": args.alpha, "confidence": args.confidence,
            "strict": args.strict, "input": str(args.input), "mode": "aggregate"}
    summary = write_run(args.out, est, echo, snaps)
    print(f"{args.rule}: {summary['rounds']} rounds, "
          f"final learner loss {_fmt(summary['final']['learner_loss'])}, "
          f"bound check: {summary['bound']['verdict']}")


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _read_rounds_csv(path: Path):
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "h" not in reader.fieldnames:
            raise ValueError(f"{path}: not a rounds.csv file")
        n = sum(1 for c in reader.fieldnames if c.startswith("l_"))
        t, y, h = [], [], []
        losses, confs, weights = [], [], []
        for row in reader:
            t.append(int(row["t"]))
            y.append(float(row["y"]))
            h.append(float(row["h"]))
            losses.append([float(row[f"l_{i}"]) for i in range(1, n + 1)])
            confs.append([float(row[f"p_{i}"]) for i in range(1, n + 1)])
            weights.append([float(row[f"w_{i}"]) for i in range(1, n + 1)])
    return (np.array(t), np.array(y), np.array(h),
            np.array(losses), np.array(confs), np.array(weights))


def cmd_report(args: argparse.Namespace) -> None:
    run_dir = args.run_dir
    rounds_path = run_dir / "rounds.csv"
    summary_path = run_dir / "summary.json"
    if not rounds_path.exists() or not summary_path.exists():
        raise FileNotFoundError(f"{run_dir} is not a completed run (missing rounds.csv/summary.json)")
    summary = json.loads(summary_path.read_text())
    cfg = summary["config"]
    t, y, h, losses, confs, weights = _read_rounds_csv(rounds_path)
    n = losses.shape[1]

    config = AggregatorConfig(
        domain=GridDomain(cfg["a"], cfg["b"], cfg["grid"]),
        n_experts=n, rule=cfg["rule"], alpha=cfg["alpha"],
        confidence=cfg.get("confidence", False),
    )
    bound = theoretical_bound(n, config.learning_rate)

    out = args.out if args.out is not None else run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)

    learner_cum = np.cumsum(h)
    expert_cum = np.cumsum(losses, axis=0)
    with (out / "cumulative_losses.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "learner"] + [f"expert_{i}" for i in range(1, n + 1)])
        for i in range(len(t)):
            writer.writerow([str(t[i]), _fmt(learner_cum[i])] + [_fmt(v) for v in expert_cum[i]])

    with (out / "weights.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"w_{i}" for i in range(1, n + 1)])
        for i in range(len(t)):
            writer.writerow([str(t[i])] + [_fmt(v) for v in weights[i]])

    cum_regret = np.cumsum(h[:, None] - losses, axis=0)
    disc = np.cumsum(confs * (h[:, None] - losses), axis=0)
    with (out / "regret_curves.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"r_{i}" for i in range(1, n + 1)] + ["bound"])
        for i in range(len(t)):
            writer.writerow([str(t[i])] + [_fmt(v) for v in disc[i]] + [_fmt(bound)])

    files = ["cumulative_losses.csv", "weights.csv", "regret_curves.csv"]
    snap_path = run_dir / "cdf_snapshots.csv"
    if snap_path.exists():
        _export_densities(snap_path, out / "densities.csv", config.domain)
        files.append("densities.csv")

    report = {
        "schema_version": SCHEMA_VERSION,
        "source": str(run_dir),
        "files": files,
        "bound": bound,
        "final": {
            "learner_loss": float(learner_cum[-1]),
            "expert_losses": [float(v) for v in expert_cum[-1]],
            "cumulative_regret": [float(v) for v in cum_regret[-1]],
            "discounted_regret": [float(v) for v in disc[-1]],
        },
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"report written to {out}")


def _export_densities(snap_path: Path, out_path: Path, domain: GridDomain) -> None:
    """Finite-difference densities of snapshot CDFs: (f_s - f_{s-1}) / width."""
    by_round: dict[int, list[tuple[float, float]]] = {}
    with snap_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            by_round.setdefault(int(row["t"]), []).append((float(row["u"]), float(row["f"])))
    with out_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "u", "f", "density"])
        for t in sorted(by_round):
            values = np.array([f for _, f in by_round[t]])
            if len(values) != domain.n_cells:
                raise ValueError(f"corrupt snapshot for round {t}")
            density = np.diff(values, prepend=0.0) / domain.cell_width
            for u, f, dens in zip(domain.points, values, density):
                writer.writerow([str(t), _fmt(u), _fmt(f), _fmt(dens)])


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
