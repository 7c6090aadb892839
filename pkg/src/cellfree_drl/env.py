"""Interval-by-interval environment shared by the agent, baselines and harness.

An episode's randomness (placement, mobility, churn, small-scale fading) is a
tape keyed by (seed, tape label, episode index). Any policy replayed on the
same key sees the same NetworkState sequence and the same fading draws.
"""
from __future__ import annotations

import hashlib

import numpy as np

from . import objective as obj
from .partition import AnchorSet, Partition, affiliate, handover_count
from .phy import EnergyParams, MetricsRecord, evaluate
from .scenario import NetworkState, ScenarioConfig, init_snapshot, step_mobility, vary_users
from .seeding import stream


class CellFreeEnv:
    def __init__(self, scenario: ScenarioConfig, objective: obj.ObjectiveConfig,
                 energy: EnergyParams | None = None, n_draws: int = 1):
        self.scenario = scenario
        self.objective = objective
        self.energy = energy or EnergyParams()
        self.n_draws = n_draws
        self.state: NetworkState | None = None
        self.prev_partition: Partition | None = None
        self._hash = None

    @property
    def has_weight(self) -> bool:
        return self.objective.case.energy

    def reset(self, episode: int, tape: str = "train") -> NetworkState:
        seed = self.scenario.seed
        self._mob_rng = stream(seed, f"{tape}/scenario", episode)
        self._fade_rng = stream(seed, f"{tape}/fading", episode)
        self.state = init_snapshot(self.scenario, self._mob_rng)
        self.prev_partition = None
        self._hash = hashlib.sha256(self.state.fingerprint())
        return self.state

    def tape_digest(self) -> str:
        """Hash of every state visited since reset."""
        return self._hash.hexdigest()

    def score(self, partition: Partition) -> MetricsRecord:
        """Evaluate a partition of the current state and fill handovers and reward."""
        rec = evaluate(self.state, partition, self.energy, self.n_draws,
                       self._fade_rng, self.scenario.noise_power)
        if self.prev_partition is not None:
            rec.handovers = handover_count(self.prev_partition, partition)
        rec.reward = obj.reward(self.objective, partition, rec)
        self.prev_partition = partition
        return rec

    def score_anchors(self, anchors: AnchorSet) -> tuple[MetricsRecord, Partition]:
        partition = affiliate(anchors, self.state)
        return self.score(partition), partition

    def advance(self) -> NetworkState:
        state = step_mobility(self.state, self.scenario, self._mob_rng)
        if self.scenario.dynamic_users:
            state = vary_users(state, self.scenario, self._mob_rng)
        self.state = state
        self._hash.update(state.fingerprint())
        return state


def random_anchor_policy(M: int, has_weight: bool, area_side: float, rng: np.random.Generator):
    """Anchors drawn uniformly over the area (and weights over (0, 1)) each interval."""
    def policy(_state):
        xy = rng.uniform(0.0, area_side, size=(M, 2))
        w = rng.uniform(0.01, 0.99, size=M) if has_weight else None
        return AnchorSet(xy, w)
    return policy
