"""Experiment lifecycle: build the plan, launch the program, stream metrics,
write the checkpoint."""

from __future__ import annotations

import os

from ..distribution import EXIT_CRASH, EXIT_OK, InProcessRun, build_program, launch
from .checkpoint import restore_checkpoint, save_checkpoint
from .config import ExperimentConfig
from .metrics import MetricsWriter


class RunResult:
    def __init__(self, exit_code: int, run_dir: str, failed_node: str | None = None, metrics=None):
        self.exit_code = exit_code
        self.run_dir = run_dir
        self.failed_node = failed_node
        self.metrics = metrics or []


def run_experiment(
    config: ExperimentConfig,
    run_dir: str,
    stop_condition=None,
    resume: bool = False,
) -> RunResult:
    os.makedirs(run_dir, exist_ok=True)
    config.write_effective(os.path.join(run_dir, "effective_config.ini"))
    plan = config.to_plan(run_dir=run_dir)
    writer = MetricsWriter(os.path.join(run_dir, "metrics.csv"), config.agent_ids())
    try:
        if config.mode == "inprocess":
            run = InProcessRun(plan, metrics_callback=writer.write, stop_condition=stop_condition)
            if resume:
                restore_checkpoint(run_dir, run.trainer)
            run.run()
            save_checkpoint(run_dir, run.trainer)
            return RunResult(EXIT_OK, run_dir, metrics=run.metrics)
        graph = build_program(plan.system, config.num_executors)
        rows: list[dict] = []

        def on_metrics(row: dict) -> None:
            rows.append(row)
            if "mean_return" in row:
                writer.write(row)

        handle = launch(graph, "local", plan, metrics_callback=on_metrics)
        code = handle.wait()
        if code != EXIT_OK:
            return RunResult(EXIT_CRASH, run_dir, failed_node=handle.failed_node, metrics=rows)
        return RunResult(EXIT_OK, run_dir, metrics=rows)
    finally:
        writer.close()
