"""Deep deterministic policy gradient agent for anchor-based partitioning."""
from .agent import (AgentConfig, DdpgAgent, ReplayBuffer, decode_action, encode_state,
                    initial_anchors, noise_std, polyak_update)
from .mlp import AdamState, Mlp, adam_step
from .train import EpisodeLog, infer, make_agent, rollout_agent, rollout_partitioner, train

__all__ = [
    "AdamState", "AgentConfig", "DdpgAgent", "EpisodeLog", "Mlp", "ReplayBuffer",
    "adam_step", "decode_action", "encode_state", "infer", "initial_anchors",
    "make_agent", "noise_std", "polyak_update", "rollout_agent", "rollout_partitioner",
    "train",
]
