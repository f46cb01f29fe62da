"""Plot-ready JSON series from run metrics: mean return against environment
steps and wall clock, raw and smoothed (moving mean)."""

from __future__ import annotations

import math
import os

from .metrics import read_metrics


class PlotDataError(ValueError):
    pass


def _moving_mean(values: list[float], window: int) -> list[float]:
    if len(values) < window:
        return []
    out = []
    acc = sum(values[:window])
    out.append(acc / window)
    for i in range(window, len(values)):
        acc += values[i] - values[i - window]
        out.append(acc / window)
    return out


def plot_data(run_dirs: list[str], window: int = 10) -> dict:
    series: dict[str, dict] = {}
    for run_dir in run_dirs:
        path = os.path.join(run_dir, "metrics.csv")
        if not os.path.exists(path):
            raise PlotDataError(f"no metrics.csv in {run_dir}")
        rows = read_metrics(path)
        eval_rows = [r for r in rows if r.get("mean_return") is not None]
        if not eval_rows:
            raise PlotDataError(f"{path}: no evaluation rows")
        for i, r in enumerate(eval_rows):
            for key in ("env_steps", "wall_clock_s", "mean_return"):
                v = r.get(key)
                if v is None or math.isnan(v):
                    raise PlotDataError(f"{path}: row {i + 1}: invalid {key}")
        name = os.path.basename(os.path.normpath(run_dir))
        returns = [r["mean_return"] for r in eval_rows]
        env_steps = [r["env_steps"] for r in eval_rows]
        wall = [r["wall_clock_s"] for r in eval_rows]
        smoothed = _moving_mean(returns, window)
        series[name] = {
            "env_steps": env_steps,
            "wall_clock_s": wall,
            "mean_return": returns,
            "smoothed": {
                "window": window,
                "env_steps": env_steps[window - 1 :] if smoothed else [],
                "mean_return": smoothed,
            },
        }
    return {"series": series}
