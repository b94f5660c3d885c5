"""Example forecast-stream generator for the CSV aggregation workflow.

Ships a small synthetic stand-in for a pool of specialized experts: one
anytime expert plus three specialists whose confidence windows tile a
repeating cycle. Confidences follow :func:`trapezoidal_confidence`, flat at
1 inside an expert's competence window and decreasing linearly to 0 just
outside it. The bundled ``data/sample_forecasts.csv`` was produced by
:func:`write_sample_csv` with the default arguments.
"""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = ["trapezoidal_confidence", "write_sample_csv", "sample_forecasts_path"]


def trapezoidal_confidence(
    position: float, core_start: float, core_end: float, ramp: float
) -> float:
    """Confidence 1 on the core window, ramping linearly to 0 over ``ramp``.

    Returns 0 outside ``[core_start - ramp, core_end + ramp]``.
    """
    if core_end < core_start or ramp < 0:
        raise ValueError("need core_start <= core_end and ramp >= 0")
    if core_start <= position <= core_end:
        return 1.0
    if ramp == 0:
        return 0.0
    if position < core_start:
        return max(0.0, 1.0 - (core_start - position) / ramp)
    return max(0.0, 1.0 - (position - core_end) / ramp)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_sample_csv(path: str | Path, rows: int = 500, seed: int = 20240811) -> Path:
    """Write a demo forecast stream: 4 experts, cyclic confidence windows.

    Expert 1 is an anytime Gaussian-mixture forecaster with confidence 1.
    Experts 2 to 4 are specialists for the low, middle, and high regimes of
    a cyclically drifting outcome process; their confidences are
    trapezoids over the cycle. Column schema per expert ``k``:
    ``expert<k>_kind, expert<k>_params`` (semicolon-separated reals),
    ``expert<k>_conf``.
    """
    path = Path(path)
    rng = np.random.default_rng(seed)
    cycle = 125
    centers = {"low": 0.2, "mid": 0.5, "high": 0.8}
    windows = {"low": (5.0, 35.0), "mid": (45.0, 75.0), "high": (85.0, 115.0)}
    ramp = 15.0

    header = ["t", "y"]
    for k in range(1, 5):
        header += [f"expert{k}_kind", f"expert{k}_params", f"expert{k}_conf"]

    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(1, rows + 1):
            pos = (t - 1) % cycle
            # Outcome regime drifts low -> mid -> high across the cycle.
            phase = pos / cycle * 3.0
            anchors = [centers["low"], centers["mid"], centers["high"], centers["low"]]
            idx = min(int(phase), 2)
            center = anchors[idx] + (phase - idx) * (anchors[idx + 1] - anchors[idx])
            y = min(1.0, max(0.0, rng.triangular(center - 0.15, center, center + 0.15)))

            wiggle = 0.02 * np.sin(2.0 * np.pi * (t - 1) / cycle)
            e1 = ("gaussmix", (0.5, 0.35, 0.2, 0.5, 0.65, 0.2), 1.0)
            e2 = (
                "triangular",
                (max(0.0, 0.0 + wiggle), 0.2 + wiggle, 0.45 + wiggle),
                trapezoidal_confidence(pos, *windows["low"], ramp),
            )
            e3 = (
                "uniform",
                (0.3 + wiggle, 0.7 + wiggle),
                trapezoidal_confidence(pos, *windows["mid"], ramp),
            )
            e4 = (
                "gaussmix",
                (1.0, 0.8 + wiggle, 0.1),
                trapezoidal_confidence(pos, *windows["high"], ramp),
            )
            row = [str(t), _fmt(y)]
            for kind, params, conf in (e1, e2, e3, e4):
                row += [kind, ";".join(_fmt(p) for p in params), _fmt(conf)]
            writer.writerow(row)
    return path


def sample_forecasts_path() -> Path:
    """Filesystem path of the bundled 500-row demo forecast stream."""
    return Path(resources.files("crpsmix").joinpath("data/sample_forecasts.csv"))
