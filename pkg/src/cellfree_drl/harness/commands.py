"""Train, evaluate, compare and sweep workflows writing CSV files."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import re
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..baselines import BaselineConfig, run_baseline
from ..ddpg.agent import DdpgAgent
from ..ddpg.train import dims, make_agent, rollout_agent, rollout_partitioner, train
from ..env import CellFreeEnv
from ..phy import MetricsRecord
from ..seeding import sub_seed
from .config import ConfigError, ExperimentConfig, load_grid, resolve_key

log = logging.getLogger(__name__)

TRAIN_COLUMNS = ["episode", "mean_reward", "sigma", "buffer_fill"]
EPISODE_COLUMNS = ["episode", "intervals", "mean_r_sum", "mean_rho", "mean_c_max",
                   "mean_p_tot", "mean_eta_ee", "feasible_fraction", "handovers",
                   "mean_reward", "tape_digest"]
COMPARE_COLUMNS = ["seed", "method"] + EPISODE_COLUMNS
CHECKPOINT_RE = re.compile(r"checkpoint_(\d+)\.json$")
MA_WINDOW = 50


def run_dir(base: Path, seed: int) -> Path:
    return Path(base) / f"seed_{seed}"


def checkpoint_path(directory: Path, episodes: int) -> Path:
    return Path(directory) / f"checkpoint_{episodes:06d}.json"


def latest_checkpoint(directory: Path) -> Path | None:
    found = sorted((int(m.group(1)), p) for p in Path(directory).glob("checkpoint_*.json")
                   if (m := CHECKPOINT_RE.search(p.name)))
    return found[-1][1] if found else None


def seeded(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(cfg, scenario=replace(cfg.scenario, seed=seed))


def train_env(cfg: ExperimentConfig) -> CellFreeEnv:
    # training rewards use one small-scale draw per interval
    return CellFreeEnv(cfg.scenario, cfg.objective, cfg.energy, n_draws=1)


def eval_env(cfg: ExperimentConfig) -> CellFreeEnv:
    return CellFreeEnv(cfg.scenario, cfg.objective, cfg.energy, n_draws=cfg.eval.n_draws)


def _write_rows(path: Path, columns, rows, mode="w") -> None:
    with open(path, mode, newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        if mode == "w":
            writer.writeheader()
        writer.writerows(rows)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def check_width(agent: DdpgAgent, env: CellFreeEnv, source) -> None:
    state_dim, action_dim = dims(env)
    if (agent.state_dim, agent.action_dim) != (state_dim, action_dim):
        raise ConfigError(
            f"{source}: network expects state width {agent.state_dim} and action width "
            f"{agent.action_dim}, but the config gives L + |A| = {state_dim} and "
            f"|A| = {action_dim} (L={env.scenario.L}, M={env.scenario.M})")


# training

def train_seed(cfg: ExperimentConfig, seed: int, directory: Path,
               resume: bool = False) -> DdpgAgent:
    """Train one seed into `directory`, checkpointing every cfg.checkpoint_every episodes."""
    cfg = seeded(cfg, seed)
    directory.mkdir(parents=True, exist_ok=True)
    env = train_env(cfg)
    log_path = directory / "train_log.csv"
    agent = None
    if resume:
        ckpt = latest_checkpoint(directory)
        if ckpt is None:
            log.info("no checkpoint in %s, starting from scratch", directory)
        else:
            agent = DdpgAgent.load(ckpt, with_resume_state=True)
            check_width(agent, env, ckpt)
            if replace(agent.cfg, episodes=cfg.agent.episodes) != cfg.agent:
                raise ConfigError(f"{ckpt}: agent settings differ from the config; "
                                  "only agent.episodes may change on resume")
            agent.cfg = cfg.agent
            log.info("resuming %s after episode %d", directory, agent.episodes_done)
    if agent is None:
        agent = make_agent(cfg.agent, env)
        _write_rows(log_path, TRAIN_COLUMNS, [])
    else:
        kept = [r for r in read_csv(log_path) if int(r["episode"]) < agent.episodes_done]
        _write_rows(log_path, TRAIN_COLUMNS, kept)

    def on_episode(entry):
        _write_rows(log_path, TRAIN_COLUMNS, [vars(entry)], mode="a")
        if agent.episodes_done % cfg.checkpoint_every == 0:
            agent.save(checkpoint_path(directory, agent.episodes_done), seed)
        if agent.episodes_done % max(1, cfg.agent.episodes // 10) == 0:
            log.info("seed %d episode %d/%d mean reward %.4f", seed, agent.episodes_done,
                     cfg.agent.episodes, entry.mean_reward)

    train(env, agent, on_episode=on_episode)
    agent.save(checkpoint_path(directory, agent.episodes_done), seed)
    _write_moving_average(log_path, directory / "train_log_ma.csv")
    return agent


def _write_moving_average(log_path: Path, out: Path) -> None:
    rows = read_csv(log_path)
    rewards = np.array([float(r["mean_reward"]) for r in rows])
    csum = np.concatenate([[0.0], np.cumsum(rewards)])
    smoothed = []
    for i, r in enumerate(rows):
        lo = max(0, i + 1 - MA_WINDOW)
        smoothed.append({"episode": r["episode"],
                         f"mean_reward_ma{MA_WINDOW}": (csum[i + 1] - csum[lo]) / (i + 1 - lo)})
    _write_rows(out, ["episode", f"mean_reward_ma{MA_WINDOW}"], smoothed)


def cmd_train(cfg: ExperimentConfig, resume: bool = False) -> list[Path]:
    dirs = []
    for seed in cfg.seeds:
        d = run_dir(cfg.output_dir, seed)
        train_seed(cfg, seed, d, resume)
        dirs.append(d)
    return dirs


# evaluation

def aggregate(episode: int, records: list[MetricsRecord], digest: str) -> dict:
    def mean(name):
        return float(np.mean([getattr(r, name) for r in records]))

    return {
        "episode": episode,
        "intervals": len(records),
        "mean_r_sum": mean("r_sum"),
        "mean_rho": mean("rho"),
        "mean_c_max": mean("c_max"),
        "mean_p_tot": mean("p_tot"),
        "mean_eta_ee": mean("eta_ee"),
        "feasible_fraction": mean("feasible"),
        "handovers": int(sum(r.handovers for r in records)),
        "mean_reward": mean("reward"),
        "tape_digest": digest,
    }


def evaluate_agent(cfg: ExperimentConfig, agent: DdpgAgent):
    """Greedy rollouts on the eval tapes; returns (interval rows, episode rows)."""
    env = eval_env(cfg)
    check_width(agent, env, "checkpoint")
    intervals, episodes = [], []
    for e in range(cfg.eval.n_eval_episodes):
        records, _ = rollout_agent(env, agent, e, tape="eval")
        intervals += [{"episode": e, **r.row()} for r in records]
        episodes.append(aggregate(e, records, env.tape_digest()))
    return intervals, episodes


def write_eval(directory: Path, intervals, episodes) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    _write_rows(directory / "eval_intervals.csv", ["episode"] + MetricsRecord.columns(),
                intervals)
    _write_rows(directory / "eval_episodes.csv", EPISODE_COLUMNS, episodes)


def cmd_eval(cfg: ExperimentConfig, checkpoint) -> Path:
    checkpoint = Path(checkpoint)
    if not checkpoint.is_file():
        raise ConfigError(f"checkpoint {checkpoint} not found")
    try:
        agent = DdpgAgent.load(checkpoint)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{checkpoint}: not a valid checkpoint ({exc})") from exc
    seed = int(json.loads(checkpoint.read_text())["seed"])
    directory = run_dir(cfg.output_dir, seed)
    write_eval(directory, *evaluate_agent(seeded(cfg, seed), agent))
    return directory


# comparison

def baseline_partitioner(cfg: BaselineConfig, M: int, episode: int):
    """Baseline re-run every interval with its own per-(episode, t) random seed."""
    def partition(state, t):
        seed = int(sub_seed(cfg.seed, "baseline", episode, t).generate_state(1)[0])
        return run_baseline(state, M, replace(cfg, seed=seed))
    return partition


def agent_for(cfg: ExperimentConfig, seed: int) -> DdpgAgent:
    d = run_dir(cfg.output_dir, seed)
    ckpt = latest_checkpoint(d) if d.is_dir() else None
    if ckpt is not None:
        log.info("using %s", ckpt)
        return DdpgAgent.load(ckpt)
    log.info("no checkpoint for seed %d, training first", seed)
    return train_seed(cfg, seed, d)


def compare_seed(cfg: ExperimentConfig, seed: int, agent: DdpgAgent,
                 methods=None) -> list[dict]:
    """One row per (method, episode); every method replays identical tapes."""
    cfg = seeded(cfg, seed)
    methods = ["DDPG"] + [m.value for m in cfg.methods] if methods is None else list(methods)
    env = eval_env(cfg)
    check_width(agent, env, "checkpoint")
    rows = []
    for e in range(cfg.eval.n_eval_episodes):
        digests = set()
        for name in methods:
            if name == "DDPG":
                records, _ = rollout_agent(env, agent, e, tape="eval")
            else:
                base = replace(cfg.baseline, method=name)
                records, _ = rollout_partitioner(
                    env, baseline_partitioner(base, cfg.scenario.M, e), e, tape="eval")
            digest = env.tape_digest()
            digests.add(digest)
            rows.append({"seed": seed, "method": name, **aggregate(e, records, digest)})
        if len(digests) != 1:
            raise RuntimeError(f"episode {e}: methods saw different network tapes")
    return rows


def cmd_compare(cfg: ExperimentConfig) -> Path:
    if not cfg.methods:
        raise ConfigError("compare needs baseline.methods (or baseline.method)")
    rows = []
    for seed in cfg.seeds:
        rows += compare_seed(cfg, seed, agent_for(cfg, seed))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "compare.csv"
    _write_rows(out, COMPARE_COLUMNS, rows)
    return out


# sweep

def grid_cells(cfg: ExperimentConfig, grid: dict):
    keys = list(grid)
    targets = [resolve_key(k) for k in keys]
    for values in itertools.product(*(grid[k] for k in keys)):
        cell = cfg
        for (section, name), value in zip(targets, values):
            cell = cell.with_override(section, name, value)
        yield dict(zip(keys, values)), cell


def run_cell(cell: ExperimentConfig, directory: Path) -> list[dict]:
    """Train and evaluate every seed of one grid cell; one summary row per seed."""
    rows = []
    for seed in cell.seeds:
        d = run_dir(directory, seed)
        agent = train_seed(cell, seed, d)
        intervals, episodes = evaluate_agent(seeded(cell, seed), agent)
        write_eval(d, intervals, episodes)
        row = {"seed": seed}
        for col in EPISODE_COLUMNS[2:-1]:
            row[col] = float(np.mean([ep[col] for ep in episodes]))
        rows.append(row)
    return rows


def cmd_sweep(cfg: ExperimentConfig, grid_path) -> Path:
    grid = load_grid(grid_path)
    cells = list(grid_cells(cfg, grid))
    rows = []
    for i, (values, cell) in enumerate(cells):
        log.info("cell %d/%d %s", i + 1, len(cells), values)
        for row in run_cell(cell, cfg.output_dir / f"cell_{i:03d}"):
            rows.append({"cell": i, **values, **row})
    columns = ["cell", *grid, "seed", *EPISODE_COLUMNS[2:-1]]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "sweep.csv"
    _write_rows(out, columns, rows)
    return out
