"""Training loop and frozen-policy rollouts."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..env import CellFreeEnv
from ..partition import AnchorSet
from ..scenario import channel_feature
from ..seeding import stream
from .agent import (AgentConfig, DdpgAgent, anchor_width, decode_action, encode_state,
                    initial_anchors, noise_std)

log = logging.getLogger(__name__)


@dataclass
class EpisodeLog:
    episode: int
    mean_reward: float
    sigma: float
    buffer_fill: int


def dims(env: CellFreeEnv) -> tuple[int, int]:
    sc = env.scenario
    action_dim = sc.M * anchor_width(env.has_weight)
    return sc.L + action_dim, action_dim


def make_agent(cfg: AgentConfig, env: CellFreeEnv) -> DdpgAgent:
    state_dim, action_dim = dims(env)
    return DdpgAgent(cfg, state_dim, action_dim, stream(env.scenario.seed, "agent-init"))


def observe(env: CellFreeEnv, prev: AnchorSet, cfg: AgentConfig) -> np.ndarray:
    return encode_state(channel_feature(env.state), prev, env.scenario.area_side,
                        cfg.db_low, cfg.db_high)


def train(env: CellFreeEnv, agent: DdpgAgent, episodes: int | None = None,
          on_episode=None) -> list[EpisodeLog]:
    """Run episodes agent.episodes_done .. episodes-1.

    Per step: act with Gaussian exploration, score the resulting partition,
    move users, store the transition, and once the buffer holds a batch do one
    critic step, one actor step and a soft target update. Exploration noise and
    minibatch sampling use per-episode sub-streams, so a resumed run replays the
    exact numbers of an uninterrupted one.
    """
    cfg = agent.cfg
    sc = env.scenario
    episodes = cfg.episodes if episodes is None else episodes
    steps = cfg.steps_per_episode or sc.T
    scale = env.objective.scale
    logs = []
    for e in range(agent.episodes_done, episodes):
        sigma = noise_std(e, cfg)
        noise_rng = stream(sc.seed, "noise", e)
        sample_rng = stream(sc.seed, "minibatch", e)
        env.reset(e, tape="train")
        prev = initial_anchors(sc.M, env.has_weight, sc.area_side)
        s = observe(env, prev, cfg)
        rewards = []
        for _ in range(steps):
            a = agent.select_action(s, sigma, noise_rng)
            anchors = decode_action(a, sc.M, env.has_weight, sc.area_side)
            rec, _ = env.score_anchors(anchors)
            env.advance()
            s_next = observe(env, anchors, cfg)
            agent.buffer.add(s, a, rec.reward, s_next)
            if len(agent.buffer) >= cfg.batch_size:
                agent.learn(sample_rng, scale)
            rewards.append(rec.reward)
            s = s_next
        agent.episodes_done = e + 1
        entry = EpisodeLog(e, float(np.mean(rewards)), sigma, len(agent.buffer))
        logs.append(entry)
        log.debug("episode %d mean reward %.4f sigma %.4f", e, entry.mean_reward, sigma)
        if on_episode is not None:
            on_episode(entry)
    return logs


def infer(agent: DdpgAgent, s, M: int, has_weight: bool, area_side: float) -> AnchorSet:
    return decode_action(agent.act(s), M, has_weight, area_side)


def rollout_agent(env: CellFreeEnv, agent: DdpgAgent, episode: int, tape: str = "eval",
                  steps: int | None = None):
    """Greedy rollout of a frozen policy; returns (records, partitions)."""
    sc = env.scenario
    steps = steps or sc.T
    env.reset(episode, tape=tape)
    prev = initial_anchors(sc.M, env.has_weight, sc.area_side)
    records, partitions = [], []
    for t in range(steps):
        anchors = infer(agent, observe(env, prev, agent.cfg), sc.M, env.has_weight, sc.area_side)
        rec, part = env.score_anchors(anchors)
        records.append(rec)
        partitions.append(part)
        prev = anchors
        if t < steps - 1:
            env.advance()
    return records, partitions


def rollout_partitioner(env: CellFreeEnv, partitioner, episode: int, tape: str = "eval",
                        steps: int | None = None):
    """Rollout of any callable (state, t) -> Partition on the same tape."""
    steps = steps or env.scenario.T
    env.reset(episode, tape=tape)
    records, partitions = [], []
    for t in range(steps):
        part = partitioner(env.state, t)
        records.append(env.score(part))
        partitions.append(part)
        if t < steps - 1:
            env.advance()
    return records, partitions
