"""Program-graph construction and launch.

A program is one replay node, one trainer node, N executor nodes and one
evaluator node. `launch` runs it either as local OS processes connected by
the binary RPC protocol, or interleaved in-process on a fixed deterministic
schedule; the system code (builder, executors, trainer) is identical in
both modes.
"""

from __future__ import annotations

import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.loop import run_episode
from ..envs import make_env
from ..replay import NotReadyError
from ..systems import SystemBuilder, SystemSpec
from .services import RpcClient, VariableSource, serve_metrics, serve_replay, serve_variables

EXIT_OK = 0
EXIT_CRASH = 3


@dataclass(frozen=True)
class NodeSpec:
    name: str
    kind: str  # replay | trainer | executor | evaluator


@dataclass
class ProgramGraph:
    nodes: list[NodeSpec]
    edges: list[tuple[str, str]]
    resources: dict[str, dict[str, str]] = field(default_factory=dict)

    def node_names(self) -> list[str]:
        return [n.name for n in self.nodes]

    def env_for(self, node: NodeSpec) -> dict[str, str]:
        merged: dict[str, str] = {}
        merged.update(self.resources.get(node.kind, {}))
        merged.update(self.resources.get(node.name, {}))
        return merged


def build_program(system: SystemSpec, num_executors: int, resources: dict | None = None) -> ProgramGraph:
    """One replay + one trainer + num_executors executors + one evaluator."""
    if num_executors < 1:
        raise ValueError("num_executors must be at least 1")
    del system  # the graph shape does not depend on the algorithm
    nodes = [NodeSpec("replay", "replay"), NodeSpec("trainer", "trainer")]
    nodes += [NodeSpec(f"executor_{k}", "executor") for k in range(num_executors)]
    nodes.append(NodeSpec("evaluator", "evaluator"))
    edges = [("trainer", "replay")]
    for k in range(num_executors):
        edges += [(f"executor_{k}", "replay"), (f"executor_{k}", "trainer")]
    edges.append(("evaluator", "trainer"))
    return ProgramGraph(nodes, edges, resources or {})


@dataclass
class RunPlan:
    """Everything a node needs to reconstruct its part of the system."""

    system: SystemSpec
    env_key: str
    seed: int
    num_executors: int = 1
    env_kwargs: dict = field(default_factory=dict)
    executor_env_steps: int = 10_000  # per-executor step budget
    eval_interval_episodes: int = 20
    eval_episodes: int = 10
    max_episode_steps: int = 1_000
    host: str = "127.0.0.1"
    replay_port: int = 0
    trainer_port: int = 0
    metrics_port: int = 0
    run_dir: str | None = None
    trainer_metric_period: int = 20


def _make_builder(plan: RunPlan) -> tuple[SystemBuilder, "object"]:
    probe = make_env(plan.env_key, seed=0, **plan.env_kwargs)
    builder = SystemBuilder(
        plan.system, probe.spec(), getattr(probe, "native_message_size", 0), plan.seed
    )
    return builder, probe


def _metric_row(
    *,
    started: float,
    env_steps: int,
    trainer_steps: int,
    episodes: int,
    exploration: float,
    returns: list[dict[str, float]],
    losses: dict[str, float],
) -> dict[str, float]:
    agents = sorted(returns[0]) if returns else []
    row = {
        "wall_clock_s": time.monotonic() - started,
        "env_steps": float(env_steps),
        "trainer_steps": float(trainer_steps),
        "episodes": float(episodes),
        "exploration": exploration,
        "mean_return": float(np.mean([np.mean(list(r.values())) for r in returns])) if returns else 0.0,
    }
    for a in agents:
        row[f"return/{a}"] = float(np.mean([r[a] for r in returns]))
    for key in ("loss", "critic_loss", "policy_loss"):
        if key in losses:
            row[key] = float(losses[key])
    return row


# ---------------------------------------------------------------------------
# in-process launch
# ---------------------------------------------------------------------------


class InProcessRun:
    """All nodes interleaved deterministically in one process.

    Cycle: each executor runs one episode; the trainer then catches up to
    one step per `train_period` environment steps; the evaluator runs every
    `eval_interval_episodes` episodes.
    """

    def __init__(self, plan: RunPlan, metrics_callback=None, stop_condition=None):
        self.plan = plan
        self.metrics_callback = metrics_callback
        self.stop_condition = stop_condition
        self.builder, _ = _make_builder(plan)
        self.table = self.builder.make_table()
        self.variable_source = VariableSource()
        self.trainer = self.builder.make_trainer(self.table.sample)
        self.trainer.attach_variable_source(self.variable_source)

        def fetch(known_version: int):
            return self.variable_source.get()

        self.envs = [
            make_env(plan.env_key, seed=self.builder.executor_env_seed(k), **plan.env_kwargs)
            for k in range(plan.num_executors)
        ]
        self.executors = [
            self.builder.make_executor(
                "explore", executor_id=str(k), sink=self.table.insert, variable_fetch=fetch
            )
            for k in range(plan.num_executors)
        ]
        self.eval_env = make_env(plan.env_key, seed=self.builder.evaluator_env_seed(), **plan.env_kwargs)
        self.evaluator = self.builder.make_executor("greedy", executor_id="eval", variable_fetch=fetch)
        self.metrics: list[dict[str, float]] = []

    def _evaluate(self) -> list[dict[str, float]]:
        self.evaluator.variable_client.force_update(self.evaluator._named_tensors())
        return [
            run_episode(self.evaluator, self.eval_env, self.plan.max_episode_steps)
            for _ in range(self.plan.eval_episodes)
        ]

    def run(self) -> list[dict[str, float]]:
        plan = self.plan
        started = time.monotonic()
        train_period = int(plan.system.hyper["train_period"])
        total_budget = plan.num_executors * plan.executor_env_steps
        episodes = 0
        next_eval = plan.eval_interval_episodes
        last_losses: dict[str, float] = {}
        stopped = False
        while not stopped:
            for env, ex in zip(self.envs, self.executors):
                run_episode(ex, env, plan.max_episode_steps)
                episodes += 1
            env_steps = sum(ex.env_steps for ex in self.executors)
            while self.trainer.trainer_steps < env_steps // train_period:
                try:
                    last_losses = self.trainer.step()
                except NotReadyError:
                    break
            if episodes >= next_eval or env_steps >= total_budget:
                next_eval = episodes + plan.eval_interval_episodes
                returns = self._evaluate()
                row = _metric_row(
                    started=started,
                    env_steps=env_steps,
                    trainer_steps=self.trainer.trainer_steps,
                    episodes=episodes,
                    exploration=self.executors[0].current_epsilon
                    if plan.system.value_based
                    else plan.system.hyper.get("sigma_explore", 0.0),
                    returns=returns,
                    losses=last_losses,
                )
                self.metrics.append(row)
                if self.metrics_callback is not None:
                    self.metrics_callback(row)
                if self.stop_condition is not None and self.stop_condition(row):
                    stopped = True
            if env_steps >= total_budget:
                break
        return self.metrics


# ---------------------------------------------------------------------------
# local multi-process launch
# ---------------------------------------------------------------------------


def _apply_node_env(env_vars: dict[str, str]) -> None:
    os.environ.update(env_vars or {})


def _replay_node_main(plan: RunPlan, env_vars, ready, stop) -> None:
    _apply_node_env(env_vars)
    builder, _ = _make_builder(plan)
    server = serve_replay(builder.make_table(), plan.host, plan.replay_port)
    ready.put(("replay", server.port))
    while not stop.is_set():
        time.sleep(0.05)
    server.stop()


def _trainer_node_main(plan: RunPlan, env_vars, ready, stop) -> None:
    _apply_node_env(env_vars)
    builder, _ = _make_builder(plan)
    source = VariableSource()
    server = serve_variables(source, plan.host, plan.trainer_port)
    ready.put(("trainer", server.port))
    replay = RpcClient(plan.host, plan.replay_port)
    trainer = builder.make_trainer(lambda batch: replay.sample(batch))
    trainer.attach_variable_source(source)
    metrics = RpcClient(plan.host, plan.metrics_port) if plan.metrics_port else None
    last = {}
    while not stop.is_set():
        try:
            last = trainer.step()
        except NotReadyError:
            time.sleep(0.02)
            continue
        if metrics and trainer.trainer_steps % plan.trainer_metric_period == 0:
            row = {"trainer_steps": float(trainer.trainer_steps)}
            row.update({k: v for k, v in last.items() if "/" not in k})
            try:
                metrics.insert(row, table="metrics")
            except Exception:
                pass
    if plan.run_dir:
        from ..harness.checkpoint import save_checkpoint

        save_checkpoint(plan.run_dir, trainer)
    server.stop()


def _executor_node_main(plan: RunPlan, executor_id: int, env_vars, stop) -> None:
    _apply_node_env(env_vars)
    builder, _ = _make_builder(plan)
    env = make_env(plan.env_key, seed=builder.executor_env_seed(executor_id), **plan.env_kwargs)
    replay = RpcClient(plan.host, plan.replay_port)
    variables = RpcClient(plan.host, plan.trainer_port)
    executor = builder.make_executor(
        "explore",
        executor_id=str(executor_id),
        sink=lambda item: replay.insert(item),
        variable_fetch=lambda known: variables.get_variables(known),
    )
    while not stop.is_set() and executor.env_steps < plan.executor_env_steps:
        run_episode(executor, env, plan.max_episode_steps)


def _evaluator_node_main(plan: RunPlan, env_vars, stop) -> None:
    _apply_node_env(env_vars)
    builder, _ = _make_builder(plan)
    env = make_env(plan.env_key, seed=builder.evaluator_env_seed(), **plan.env_kwargs)
    variables = RpcClient(plan.host, plan.trainer_port)
    replay = RpcClient(plan.host, plan.replay_port)
    metrics = RpcClient(plan.host, plan.metrics_port) if plan.metrics_port else None
    executor = builder.make_executor(
        "greedy", executor_id="eval", variable_fetch=lambda known: variables.get_variables(known)
    )
    started = time.monotonic()
    episodes = 0
    while not stop.is_set():
        try:
            executor.variable_client.force_update(executor._named_tensors())
        except Exception:
            time.sleep(0.2)
            continue
        returns = [run_episode(executor, env, plan.max_episode_steps) for _ in range(plan.eval_episodes)]
        episodes += plan.eval_episodes
        try:
            info = replay.table_info()
            env_steps = info["insert_count"]
        except Exception:
            env_steps = 0
        if metrics:
            row = _metric_row(
                started=started,
                env_steps=env_steps,
                trainer_steps=executor.variable_client.version,
                episodes=episodes,
                exploration=0.0,
                returns=returns,
                losses={},
            )
            try:
                metrics.insert(row, table="metrics")
            except Exception:
                pass
        time.sleep(0.05)


class MultiProcessHandle:
    """Supervises the node processes of one running program."""

    def __init__(self, processes: dict[str, mp.Process], stop_event, plan: RunPlan, abort_on_crash: bool):
        self.processes = processes
        self._stop = stop_event
        self.plan = plan
        self.abort_on_crash = abort_on_crash
        self.failed_node: str | None = None

    def executor_names(self) -> list[str]:
        return [n for n in self.processes if n.startswith("executor_")]

    def wait(self, timeout: float | None = None) -> int:
        """Block until the step budget completes (0) or a node crashes (3)."""
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            executors = [self.processes[n] for n in self.executor_names()]
            alive_exec = [p for p in executors if p.is_alive()]
            for name, p in self.processes.items():
                if not p.is_alive() and p.exitcode not in (0, None):
                    if name.startswith("executor_") and not self.abort_on_crash:
                        continue
                    self.failed_node = name
                    self.stop()
                    return EXIT_CRASH
            if not alive_exec:
                self.stop()
                return EXIT_OK
            if deadline is not None and time.monotonic() > deadline:
                self.stop()
                return EXIT_OK
            time.sleep(0.05)

    def stop(self) -> None:
        self._stop.set()
        deadline = time.monotonic() + 5.0
        for p in self.processes.values():
            p.join(timeout=max(0.0, deadline - time.monotonic()))
        for p in self.processes.values():
            if p.is_alive():
                p.terminate()
                p.join(timeout=1.0)
        for p in self.processes.values():
            if p.is_alive():
                p.kill()
                p.join(timeout=1.0)
        server = getattr(self, "_metrics_server", None)
        if server is not None:
            server.stop()
            self._metrics_server = None


def launch(
    graph: ProgramGraph,
    mode: str,
    plan: RunPlan,
    metrics_callback=None,
    stop_condition=None,
    abort_on_crash: bool = True,
):
    """Launch a program graph.

    mode "inprocess": runs to completion and returns the InProcessRun.
    mode "local": spawns one OS process per node and returns a
    MultiProcessHandle; metric rows stream to `metrics_callback`.
    """
    if mode == "inprocess":
        run = InProcessRun(plan, metrics_callback=metrics_callback, stop_condition=stop_condition)
        run.run()
        return run
    if mode != "local":
        raise ValueError(f"unknown launch mode {mode!r}; expected 'inprocess' or 'local'")

    ctx = mp.get_context("spawn")
    stop = ctx.Event()
    ready: "mp.Queue" = ctx.Queue()
    metrics_server = None
    if metrics_callback is not None:
        metrics_server = serve_metrics(metrics_callback, plan.host, plan.metrics_port)
        plan = replace(plan, metrics_port=metrics_server.port)

    by_name = {n.name: n for n in graph.nodes}
    processes: dict[str, mp.Process] = {}
    try:
        p = ctx.Process(
            target=_replay_node_main,
            args=(plan, graph.env_for(by_name["replay"]), ready, stop),
            name="replay",
        )
        p.start()
        processes["replay"] = p
        kind, port = ready.get(timeout=30)
        assert kind == "replay"
        plan = replace(plan, replay_port=port)

        p = ctx.Process(
            target=_trainer_node_main,
            args=(plan, graph.env_for(by_name["trainer"]), ready, stop),
            name="trainer",
        )
        p.start()
        processes["trainer"] = p
        kind, port = ready.get(timeout=30)
        assert kind == "trainer"
        plan = replace(plan, trainer_port=port)

        for node in graph.nodes:
            if node.kind == "executor":
                k = int(node.name.split("_")[1])
                p = ctx.Process(
                    target=_executor_node_main,
                    args=(plan, k, graph.env_for(node), stop),
                    name=node.name,
                )
                p.start()
                processes[node.name] = p
        p = ctx.Process(
            target=_evaluator_node_main,
            args=(plan, graph.env_for(by_name["evaluator"]), stop),
            name="evaluator",
        )
        p.start()
        processes["evaluator"] = p
    except Exception:
        stop.set()
        for p in processes.values():
            p.terminate()
        if metrics_server:
            metrics_server.stop()
        raise

    handle = MultiProcessHandle(processes, stop, plan, abort_on_crash)
    handle._metrics_server = metrics_server
    return handle
