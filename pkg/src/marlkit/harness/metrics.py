"""Append-only metrics CSV with a stable column schema.

The schema is the union across systems: base counters, per-agent returns,
and the loss columns of every trainer family; inapplicable cells stay empty.
"""

from __future__ import annotations

import csv

BASE_COLUMNS = ["wall_clock_s", "env_steps", "trainer_steps", "episodes", "exploration", "mean_return"]
LOSS_COLUMNS = ["loss", "critic_loss", "policy_loss"]
SCHEMA_VERSION = 1


def schema(agent_ids: list[str]) -> list[str]:
    return BASE_COLUMNS + [f"return/{a}" for a in sorted(agent_ids)] + LOSS_COLUMNS


class MetricsWriter:
    def __init__(self, path: str, agent_ids: list[str]):
        self.path = path
        self.columns = schema(agent_ids)
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(self.columns)
        self._fh.flush()

    def write(self, row: dict) -> None:
        self._writer.writerow([_fmt(row.get(c)) for c in self.columns])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def read_metrics(path: str) -> list[dict[str, float | None]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            rows.append({k: (float(v) if v != "" else None) for k, v in zip(header, raw)})
        return rows
