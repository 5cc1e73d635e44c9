"""Experiment harness: specs, policy management, sweeps, timing, CSVs.

An experiment evaluates one (scheme, opinion model, FP strategy) cell, or
a sweep of cells along one axis (TP propagation count, network
observability, or prior belief), as the mean of `runs` independent
episodes. DRL policies are trained on demand and cached as parameter
files; per-run seeds derive from the master seed and the full coordinate
tuple, so any spec re-run reproduces its result CSVs byte for byte
(wall-clock timings live in a separate file).
"""

from __future__ import annotations

import csv
import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from drim.baselines import make_scheme_agent
from drim.datasets import load_urv_email
from drim.network import Graph, ObservableGraph, full_view, load_edge_list
from drim.opinion import TrustModel, TrustVariant
from drim.population import PopulationState
from drim.propagation import Episode, EpisodeConfig, RoundLog, run_episode
from drim.rl import PolicyAgent, PPOConfig, load_params, save_params, train_agent
from drim.strategies import Agent, Scheme, action_space, make_heuristic_agent

FP_STRATEGIES = ("random", "af", "bf", "sgf", "cf", "drl")
OPINION_MODELS = ("uom", "hom", "nom")

SWEEP_DEFAULTS = {
    "ip": (1, 2, 3, 4, 5),
    "p_nv": (0.2, 0.4, 0.6, 0.8, 1.0),
    "prior_a": (0.1, 0.3, 0.5, 0.7, 0.9),
}

WORKER_ENV_VAR = "DRIM_WORKERS"


def trust_model(name: str) -> TrustModel:
    return TrustModel(TrustVariant(name))


@dataclass
class ExperimentSpec:
    """One experiment cell or sweep, plus its training configuration."""

    scheme: Scheme = Scheme.DRIM_A
    opinion_model: str = "uom"
    fp_strategy: str = "cf"
    runs: int = 20
    sweep_axis: str | None = None
    sweep_values: tuple | None = None
    dataset: str | Path | None = None
    out_dir: Path = Path("results")
    policy_dir: Path | None = None
    master_seed: int = 0
    k: int = 50
    p_t: int = 2
    p_f: int = 1
    p_nv: float = 1.0
    prior_a: float = 0.5
    auto_train: bool = True
    ppo: PPOConfig = field(default_factory=PPOConfig)

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.opinion_model not in OPINION_MODELS:
            raise ValueError(f"unknown opinion model {self.opinion_model!r}")
        if self.fp_strategy not in FP_STRATEGIES:
            raise ValueError(f"unknown FP strategy {self.fp_strategy!r}")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_DEFAULTS:
                raise ValueError(f"unknown sweep axis {self.sweep_axis!r}")
            if self.sweep_values is None:
                self.sweep_values = SWEEP_DEFAULTS[self.sweep_axis]
            if not self.sweep_values:
                raise ValueError("sweep grid must be nonempty")
        self.out_dir = Path(self.out_dir)
        if self.policy_dir is None:
            self.policy_dir = self.out_dir / "policies"
        self.policy_dir = Path(self.policy_dir)

    def episode_config(self, sweep_value=None) -> EpisodeConfig:
        cfg = EpisodeConfig(
            k=self.k,
            p_t=self.p_t,
            p_f=self.p_f,
            opinion_model=trust_model(self.opinion_model),
            p_nv=self.p_nv,
            prior_a=self.prior_a,
        )
        if self.sweep_axis is None or sweep_value is None:
            return cfg
        if self.sweep_axis == "ip":
            return replace(cfg, p_t=int(sweep_value))
        if self.sweep_axis == "p_nv":
            return replace(cfg, p_nv=float(sweep_value))
        return replace(cfg, prior_a=float(sweep_value))

    def coordinates(self, scheme: Scheme | None = None, fp: str | None = None, sweep_value=None):
        return (
            (scheme or self.scheme).value,
            self.opinion_model,
            fp or self.fp_strategy,
            self.sweep_axis or "none",
            "none" if sweep_value is None else f"{sweep_value:g}",
        )


@dataclass
class ResultRow:
    """Aggregated metrics for one experiment cell."""

    scheme: str
    opinion_model: str
    fp_strategy: str
    sweep_axis: str
    sweep_value: str
    runs: int
    mean_n_true: float
    std_n_true: float
    mean_n_false: float
    mean_decided_n_true: float
    mean_episode_seconds: float

    COLUMNS = (
        "scheme", "opinion_model", "fp_strategy", "sweep_axis", "sweep_value",
        "runs", "mean_n_true", "std_n_true", "mean_n_false",
        "mean_decided_n_true",
    )

    def csv_values(self) -> list[str]:
        return [
            self.scheme, self.opinion_model, self.fp_strategy,
            self.sweep_axis, self.sweep_value, str(self.runs),
            f"{self.mean_n_true:.4f}", f"{self.std_n_true:.4f}",
            f"{self.mean_n_false:.4f}", f"{self.mean_decided_n_true:.4f}",
        ]


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and a coordinate tuple."""
    text = "|".join([str(master_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def worker_count() -> int:
    env = os.environ.get(WORKER_ENV_VAR)
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, 4))


def _parallel_map(fn, items: list, workers: int | None = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def load_graph(spec: ExperimentSpec) -> Graph:
    if spec.dataset is None:
        return load_urv_email()
    return load_edge_list(spec.dataset)


# ----------------------------------------------------------------------
# Policy training & caching
# ----------------------------------------------------------------------

def _ppo_tag(ppo: PPOConfig, train_cfg: EpisodeConfig) -> str:
    text = "|".join(
        str(x)
        for x in (
            ppo.gamma, ppo.clip_epsilon, ppo.epochs, ppo.actor_lr, ppo.critic_lr,
            ppo.rollout_episodes, ppo.updates, ppo.entropy_coef, ppo.hidden,
            ppo.selfplay_updates_per_side, ppo.selfplay_alternations,
            train_cfg.k, train_cfg.p_t, train_cfg.p_f, train_cfg.p_nv, train_cfg.prior_a,
        )
    )
    return hashlib.sha256(text.encode()).hexdigest()[:8]


def policy_paths(spec: ExperimentSpec, scheme: Scheme, fp: str) -> tuple[Path, Path | None]:
    tag = _ppo_tag(spec.ppo, spec.episode_config())
    stem = f"{scheme.value}_{spec.opinion_model}_vs_{fp}_{tag}_s{spec.master_seed}"
    tp = spec.policy_dir / f"{stem}.bin"
    fp_path = spec.policy_dir / f"{stem}_fp.bin" if fp == "drl" else None
    return tp, fp_path


@dataclass
class _TrainTask:
    spec: ExperimentSpec
    scheme: Scheme
    fp: str


def _train_one(task: _TrainTask) -> None:
    spec, scheme, fp = task.spec, task.scheme, task.fp
    tp_path, fp_path = policy_paths(spec, scheme, fp)
    if tp_path.exists() and (fp_path is None or fp_path.exists()):
        return
    graph = load_graph(spec)
    train_cfg = spec.episode_config()
    seed = derive_seed(spec.master_seed, "train", scheme.value, spec.opinion_model, fp)
    observable = full_view(graph) if train_cfg.p_nv >= 1.0 else None
    result = train_agent(scheme, fp, graph, train_cfg, spec.ppo, seed, observable=observable)
    spec.policy_dir.mkdir(parents=True, exist_ok=True)
    save_params(result.params, tp_path)
    if fp_path is not None:
        assert result.opponent_params is not None
        save_params(result.opponent_params, fp_path)
    curve_path = tp_path.with_suffix(".curve.csv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("update,mean_return,entropy\n")
        for update, mean_return, entropy in result.curve:
            fh.write(f"{update},{mean_return:.4f},{entropy:.6f}\n")


def ensure_policies(spec: ExperimentSpec, cells: list[tuple[Scheme, str]], workers: int | None = None) -> None:
    """Train (in parallel) any policies the given cells are missing."""
    tasks = []
    seen = set()
    for scheme, fp in cells:
        tp_path, fp_path = policy_paths(spec, scheme, fp)
        if tp_path in seen:
            continue
        seen.add(tp_path)
        if tp_path.exists() and (fp_path is None or fp_path.exists()):
            continue
        if not spec.auto_train:
            raise FileNotFoundError(f"missing policy file {tp_path} (auto_train disabled)")
        tasks.append(_TrainTask(spec, scheme, fp))
    _parallel_map(_train_one, tasks, workers)


def load_cell_agents(spec: ExperimentSpec, scheme: Scheme, fp: str) -> tuple[Agent, Agent]:
    """Evaluation agents (tp_agent, fp_agent) for one cell."""
    tp_path, fp_path = policy_paths(spec, scheme, fp)
    params = load_params(tp_path, expected_actions=len(action_space(scheme)))
    tp_agent = make_scheme_agent(scheme, params)
    if fp == "drl":
        fp_params = load_params(fp_path, expected_actions=len(action_space(Scheme.DRIM_A)))
        fp_agent = PolicyAgent(fp_params, action_space(Scheme.DRIM_A))
    else:
        fp_agent = make_heuristic_agent(fp)
    return tp_agent, fp_agent


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------

@dataclass
class _EvalTask:
    graph: Graph
    observable: ObservableGraph | None
    cfg: EpisodeConfig
    tp_agent: Agent
    fp_agent: Agent


def _run_eval(task: _EvalTask) -> tuple[dict[str, float], float, list[RoundLog]]:
    start = time.perf_counter()
    ep = run_episode(task.graph, task.cfg, task.tp_agent, task.fp_agent, task.observable)
    elapsed = time.perf_counter() - start
    return ep.final_metrics(), elapsed, ep.logs


def run_cell(
    spec: ExperimentSpec,
    graph: Graph,
    scheme: Scheme,
    fp: str,
    sweep_value=None,
    workers: int | None = None,
    observable: ObservableGraph | None = None,
) -> tuple[ResultRow, list[dict], list[float]]:
    """Evaluate one cell: `spec.runs` episodes with derived seeds."""
    cfg = spec.episode_config(sweep_value)
    tp_agent, fp_agent = load_cell_agents(spec, scheme, fp)
    coords = spec.coordinates(scheme, fp, sweep_value)
    if observable is None and cfg.p_nv >= 1.0:
        observable = full_view(graph)
    tasks = []
    for run in range(spec.runs):
        seed = derive_seed(spec.master_seed, *coords, run)
        tasks.append(_EvalTask(graph, observable, cfg.with_seed(seed), tp_agent, fp_agent))
    outcomes = _parallel_map(_run_eval, tasks, workers)
    metrics = [m for m, _, _ in outcomes]
    seconds = [s for _, s, _ in outcomes]
    n_true = np.array([m["n_true"] for m in metrics])
    decided = np.array([m["decided_n_true"] for m in metrics])
    n_false = np.array([m["n_false"] for m in metrics])
    row = ResultRow(
        *coords,
        runs=spec.runs,
        mean_n_true=float(n_true.mean()),
        std_n_true=float(n_true.std()),
        mean_n_false=float(n_false.mean()),
        mean_decided_n_true=float(decided.mean()),
        mean_episode_seconds=float(np.mean(seconds)),
    )
    raw = [
        {
            "scheme": coords[0], "opinion_model": coords[1], "fp_strategy": coords[2],
            "sweep_axis": coords[3], "sweep_value": coords[4], "run": run,
            "n_true": m["n_true"], "n_false": m["n_false"],
            "decided_n_true": m["decided_n_true"], "decided_n_false": m["decided_n_false"],
        }
        for run, m in enumerate(metrics)
    ]
    return row, raw, seconds


def run_grid(
    spec: ExperimentSpec,
    schemes: tuple[Scheme, ...] | None = None,
    opinion_models: tuple[str, ...] | None = None,
    fp_strategies: tuple[str, ...] | None = None,
    graph: Graph | None = None,
    workers: int | None = None,
) -> list[ResultRow]:
    """Evaluate a grid of cells sharing the spec's episode and training
    configuration; write combined result CSVs into spec.out_dir."""
    schemes = schemes or (spec.scheme,)
    opinion_models = opinion_models or (spec.opinion_model,)
    fp_strategies = fp_strategies or (spec.fp_strategy,)
    graph = graph if graph is not None else load_graph(spec)
    points = list(spec.sweep_values) if spec.sweep_axis else [None]
    shared_view = full_view(graph)

    for om in opinion_models:
        om_spec = replace(spec, opinion_model=om)
        ensure_policies(om_spec, [(s, fp) for s in schemes for fp in fp_strategies], workers)

    rows: list[ResultRow] = []
    raw_rows: list[dict] = []
    timing_rows: list[tuple] = []
    for om in opinion_models:
        om_spec = replace(spec, opinion_model=om)
        for scheme in schemes:
            for fp in fp_strategies:
                for point in points:
                    cfg = om_spec.episode_config(point)
                    observable = shared_view if cfg.p_nv >= 1.0 else None
                    row, raw, seconds = run_cell(
                        om_spec, graph, scheme, fp, point, workers, observable
                    )
                    rows.append(row)
                    raw_rows.extend(raw)
                    coords = om_spec.coordinates(scheme, fp, point)
                    timing_rows.extend((*coords, i, s) for i, s in enumerate(seconds))

    spec.out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(spec.out_dir / "results.csv", rows)
    write_raw_csv(spec.out_dir / "raw_runs.csv", raw_rows)
    write_timings_csv(spec.out_dir / "timings.csv", timing_rows)
    return rows


def run_experiment(
    spec: ExperimentSpec, graph: Graph | None = None, workers: int | None = None
) -> list[ResultRow]:
    """Evaluate the spec (one cell, or its sweep); write result CSVs."""
    return run_grid(spec, graph=graph, workers=workers)


# ----------------------------------------------------------------------
# CSV writers / readers
# ----------------------------------------------------------------------

def write_results_csv(path: Path, rows: list[ResultRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ResultRow.COLUMNS)
        for row in sorted(rows, key=lambda r: (r.scheme, r.opinion_model, r.fp_strategy,
                                               r.sweep_axis, r.sweep_value)):
            writer.writerow(row.csv_values())


def read_results_csv(path: Path) -> list[ResultRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                ResultRow(
                    scheme=rec["scheme"],
                    opinion_model=rec["opinion_model"],
                    fp_strategy=rec["fp_strategy"],
                    sweep_axis=rec["sweep_axis"],
                    sweep_value=rec["sweep_value"],
                    runs=int(rec["runs"]),
                    mean_n_true=float(rec["mean_n_true"]),
                    std_n_true=float(rec["std_n_true"]),
                    mean_n_false=float(rec["mean_n_false"]),
                    mean_decided_n_true=float(rec["mean_decided_n_true"]),
                    mean_episode_seconds=0.0,
                )
            )
    return rows


def write_raw_csv(path: Path, raw_rows: list[dict]) -> None:
    cols = ("scheme", "opinion_model", "fp_strategy", "sweep_axis", "sweep_value",
            "run", "n_true", "n_false", "decided_n_true", "decided_n_false")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for rec in raw_rows:
            writer.writerow([f"{rec[c]:g}" if isinstance(rec[c], float) else rec[c] for c in cols])


def write_timings_csv(path: Path, timing_rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("scheme", "opinion_model", "fp_strategy", "sweep_axis",
                         "sweep_value", "run", "seconds"))
        for rec in timing_rows:
            writer.writerow([*rec[:-1], f"{rec[-1]:.6f}"])


def write_roundlog_csv(path: Path, episode_logs: list[tuple[int, list[RoundLog]]]) -> None:
    """Per-step audit export: episode, t, party, strategy, seed, counts, reward."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("episode", "t", "party", "strategy", "seed_id",
                         "n_true", "n_false", "reward"))
        for episode_idx, logs in episode_logs:
            for e in logs:
                writer.writerow((episode_idx, e.t, e.party.value, e.strategy, e.seed,
                                 e.n_true, e.n_false, f"{e.reward:g}"))


def write_population_csv(path: Path, state: PopulationState) -> None:
    """Documented snapshot format: user_id, role, p_read, p_share, b, d, u, a."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("user_id", "role", "p_read", "p_share", "b", "d", "u", "a"))
        for row in state.snapshot_rows():
            uid, role, p_read, p_share, b, d, u, a = row
            writer.writerow((uid, role, f"{p_read:g}", f"{p_share:g}",
                             f"{b:.12g}", f"{d:.12g}", f"{u:.12g}", f"{a:.12g}"))


# ----------------------------------------------------------------------
# Report layouts
# ----------------------------------------------------------------------

LAYOUTS = ("table1", "fig2", "fig3a", "fig3b", "fig3c", "table2")

_SCHEME_ORDER = ("drim-a", "drim-na", "storm", "cstorm")


def _cell_value(rows, **filters) -> ResultRow:
    matches = [
        r for r in rows
        if all(getattr(r, key) == val for key, val in filters.items())
    ]
    if not matches:
        wanted = ", ".join(f"{k}={v}" for k, v in filters.items())
        raise ValueError(f"missing result cell: {wanted}")
    return matches[0]


def emit_report(rows: list[ResultRow], layout: str, out_path: Path) -> Path:
    """Pivot result rows into one layout CSV keyed to the experiment grids.

    Influence cells report the decided true-party count; table2 reports
    mean per-episode seconds.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    lines: list[list] = []

    if layout == "table1":
        header = ["scheme_om"] + list(FP_STRATEGIES)
        for scheme in _SCHEME_ORDER:
            for om in OPINION_MODELS:
                line = [f"{scheme}/{om}"]
                for fp in FP_STRATEGIES:
                    cell = _cell_value(rows, scheme=scheme, opinion_model=om,
                                       fp_strategy=fp, sweep_axis="none")
                    line.append(f"{cell.mean_decided_n_true:.4f}")
                lines.append(line)
    elif layout == "fig2":
        header = ["scheme"] + list(FP_STRATEGIES)
        for scheme in _SCHEME_ORDER:
            line = [scheme]
            for fp in FP_STRATEGIES:
                cell = _cell_value(rows, scheme=scheme, opinion_model="uom",
                                   fp_strategy=fp, sweep_axis="none")
                line.append(f"{cell.mean_decided_n_true:.4f}")
            lines.append(line)
    elif layout in ("fig3a", "fig3b", "fig3c"):
        axis = {"fig3a": "ip", "fig3b": "p_nv", "fig3c": "prior_a"}[layout]
        header = [axis] + list(_SCHEME_ORDER)
        values = sorted(
            {r.sweep_value for r in rows if r.sweep_axis == axis},
            key=float,
        )
        if not values:
            raise ValueError(f"missing result cell: sweep_axis={axis}")
        for value in values:
            line = [value]
            for scheme in _SCHEME_ORDER:
                cell = _cell_value(rows, scheme=scheme, sweep_axis=axis, sweep_value=value)
                line.append(f"{cell.mean_decided_n_true:.4f}")
            lines.append(line)
    else:  # table2
        header = ["scheme", "mean_episode_seconds"]
        for scheme in _SCHEME_ORDER:
            cell = _cell_value(rows, scheme=scheme, sweep_axis="none")
            lines.append([scheme, f"{cell.mean_episode_seconds:.6f}"])

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(lines)
    return out_path


# ----------------------------------------------------------------------
# Runtime benchmark
# ----------------------------------------------------------------------

def bench_runtime(
    spec: ExperimentSpec,
    schemes: tuple[Scheme, ...] = (Scheme.DRIM_A, Scheme.DRIM_NA, Scheme.STORM, Scheme.C_STORM),
    episodes: int = 20,
    workers: int | None = None,
) -> dict[str, float]:
    """Mean wall-clock seconds per evaluation episode for each scheme.

    Runs episodes+1 per scheme in-process and discards the first (warmup).
    """
    if episodes < 1:
        raise ValueError("bench needs at least one timed episode")
    graph = load_graph(spec)
    ensure_policies(spec, [(s, spec.fp_strategy) for s in schemes], workers)
    observable = full_view(graph) if spec.p_nv >= 1.0 else None
    cfg = spec.episode_config()
    out: dict[str, float] = {}
    for scheme in schemes:
        tp_agent, fp_agent = load_cell_agents(spec, scheme, spec.fp_strategy)
        times = []
        for run in range(episodes + 1):
            seed = derive_seed(spec.master_seed, "bench", scheme.value, run)
            task = _EvalTask(graph, observable, cfg.with_seed(seed), tp_agent, fp_agent)
            _, elapsed, _ = _run_eval(task)
            times.append(elapsed)
        out[scheme.value] = float(np.mean(times[1:]))
    return out
