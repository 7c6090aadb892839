"""DDPG agent: actor/critic pair, target networks, replay memory, exploration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..partition import AnchorSet
from .mlp import AdamState, Mlp, adam_step


@dataclass(frozen=True)
class AgentConfig:
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    soft_update: float = 1e-3
    discount: float = 0.99
    sigma_max: float = 0.25
    sigma_min: float = 0.001
    noise_decay: float = 1e-4
    batch_size: int = 128
    buffer_capacity: int = 10000
    episodes: int = 4000
    steps_per_episode: int | None = None  # None: use the scenario's T
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    actor_hidden: tuple = (256, 128)
    critic_hidden: tuple = (512, 256, 128)
    final_layer_scale: float = 1e-3
    db_low: float = -140.0
    db_high: float = -40.0

    def __post_init__(self):
        object.__setattr__(self, "actor_hidden", tuple(int(n) for n in self.actor_hidden))
        object.__setattr__(self, "critic_hidden", tuple(int(n) for n in self.critic_hidden))
        if not 0 < self.soft_update <= 1:
            raise ValueError("soft_update must lie in (0, 1]")
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie in (0, 1)")
        if self.sigma_min > self.sigma_max:
            raise ValueError("sigma_min must not exceed sigma_max")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("need 1 <= batch_size <= buffer_capacity")
        if self.db_low >= self.db_high:
            raise ValueError("db_low must be below db_high")

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d


def anchor_width(has_weight: bool) -> int:
    return 3 if has_weight else 2


def encode_state(channel_feature, prev_anchors: AnchorSet, area_side: float,
                 db_low: float = -140.0, db_high: float = -40.0) -> np.ndarray:
    """[normalized per-AP fading in dB, previous anchors / area_side (+ weights)]."""
    db = 20.0 * np.log10(np.asarray(channel_feature, dtype=float))
    gamma_hat = (np.clip(db, db_low, db_high) - db_low) / (db_high - db_low)
    return np.concatenate([gamma_hat, anchors_to_unit(prev_anchors, area_side)])


def anchors_to_unit(anchors: AnchorSet, area_side: float) -> np.ndarray:
    cols = [anchors.xy / area_side]
    if anchors.has_weight:
        cols.append(anchors.w[:, None])
    return np.hstack(cols).ravel()


def decode_action(a, M: int, has_weight: bool, area_side: float) -> AnchorSet:
    a = np.asarray(a, dtype=float)
    width = anchor_width(has_weight)
    if a.shape != (M * width,):
        raise ValueError(f"action length {a.size} does not match M={M} "
                         f"({'3M' if has_weight else '2M'} = {M * width})")
    tuples = a.reshape(M, width)
    xy = tuples[:, :2] * area_side
    w = np.clip(tuples[:, 2], 0.01, 0.99) if has_weight else None
    return AnchorSet(xy, w)


def initial_anchors(M: int, has_weight: bool, area_side: float) -> AnchorSet:
    """M points on a uniform grid over the square, weights 0.5."""
    cols = int(np.ceil(np.sqrt(M)))
    rows = int(np.ceil(M / cols))
    xy = [((c + 0.5) / cols, (r + 0.5) / rows) for r in range(rows) for c in range(cols)][:M]
    w = np.full(M, 0.5) if has_weight else None
    return AnchorSet(np.asarray(xy) * area_side, w)


def noise_std(episode: int, cfg: AgentConfig) -> float:
    return max(cfg.sigma_max - cfg.noise_decay * episode, cfg.sigma_min)


class ReplayBuffer:
    """Fixed-capacity ring of (s, a, r, s') transitions; oldest overwritten first."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, s, a, r, s_next) -> None:
        if not np.isfinite(r):
            raise ValueError("reward must be finite")
        i = self.cursor
        self.s[i], self.a[i], self.r[i], self.s_next[i] = s, a, r, s_next
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def ordered_indices(self) -> np.ndarray:
        """Slots from oldest to newest."""
        start = self.cursor if self.size == self.capacity else 0
        return (start + np.arange(self.size)) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx]

    def state_dict(self) -> dict:
        return {"s": self.s, "a": self.a, "r": self.r, "s_next": self.s_next,
                "cursor": self.cursor, "size": self.size}

    def load_state_dict(self, d) -> None:
        self.s, self.a, self.r, self.s_next = (np.array(d[k]) for k in ("s", "a", "r", "s_next"))
        self.cursor, self.size = int(d["cursor"]), int(d["size"])


def polyak_update(net: Mlp, target: Mlp, delta: float) -> Mlp:
    for p, p_t in zip(net.params, target.params):
        p_t[...] = delta * p + (1.0 - delta) * p_t
    return target


class DdpgAgent:
    def __init__(self, cfg: AgentConfig, state_dim: int, action_dim: int,
                 rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.cfg = cfg
        self.state_dim, self.action_dim = state_dim, action_dim
        self.actor = Mlp([state_dim, *cfg.actor_hidden, action_dim], "sigmoid", rng,
                         final_scale=cfg.final_layer_scale)
        self.critic = Mlp([state_dim + action_dim, *cfg.critic_hidden, 1], "identity", rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = AdamState.zeros_like(self.actor.params)
        self.critic_opt = AdamState.zeros_like(self.critic.params)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, state_dim, action_dim)
        self.episodes_done = 0

    def _adam(self, net, grads, opt, lr):
        adam_step(net.params, grads, opt, lr, self.cfg.adam_beta1, self.cfg.adam_beta2,
                  self.cfg.adam_eps)

    def q_value(self, critic: Mlp, s, a) -> np.ndarray:
        return critic.forward(np.hstack([np.atleast_2d(s), np.atleast_2d(a)]))[:, 0]

    def td_target(self, r, s_next) -> np.ndarray:
        a_next = self.target_actor.forward(np.atleast_2d(s_next))
        return np.asarray(r) + self.cfg.discount * self.q_value(self.target_critic, s_next, a_next)

    def critic_update(self, s, a, y) -> float:
        """One Adam step on the mean squared TD error; returns the pre-step loss."""
        q, cache = self.critic.forward(np.hstack([s, a]), return_cache=True)
        err = q[:, 0] - y
        loss = float(np.mean(err ** 2))
        gW, gb, _ = self.critic.backward(cache, (2.0 / len(y)) * err[:, None])
        self._adam(self.critic, gW + gb, self.critic_opt, self.cfg.lr_critic)
        return loss

    def actor_gradients(self, s):
        """Returns (J, actor grads of -J) with J = mean Q(s, pi(s))."""
        a, actor_cache = self.actor.forward(s, return_cache=True)
        q, critic_cache = self.critic.forward(np.hstack([s, a]), return_cache=True)
        B = len(s)
        _, _, g_in = self.critic.backward(critic_cache, np.full((B, 1), -1.0 / B))
        gW, gb, _ = self.actor.backward(actor_cache, g_in[:, self.state_dim:])
        return float(q.mean()), gW + gb

    def actor_update(self, s) -> float:
        J, grads = self.actor_gradients(s)
        self._adam(self.actor, grads, self.actor_opt, self.cfg.lr_actor)
        return J

    def soft_update_targets(self) -> None:
        polyak_update(self.critic, self.target_critic, self.cfg.soft_update)
        polyak_update(self.actor, self.target_actor, self.cfg.soft_update)

    def learn(self, rng: np.random.Generator, reward_scale: float = 1.0):
        s, a, r, s_next = self.buffer.sample(self.cfg.batch_size, rng)
        y = self.td_target(r / reward_scale, s_next)
        loss = self.critic_update(s, a, y)
        J = self.actor_update(s)
        self.soft_update_targets()
        return loss, J

    def act(self, s) -> np.ndarray:
        return self.actor.forward(s)

    def select_action(self, s, sigma: float, rng: np.random.Generator) -> np.ndarray:
        noise = rng.standard_normal(self.action_dim)
        return np.clip(self.act(s) + sigma * noise, 0.0, 1.0)

    # persistence

    def checkpoint_dict(self, seed: int) -> dict:
        return {
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "actor": self.actor.to_dict(),
            "critic": self.critic.to_dict(),
            "agent_config": self.cfg.to_dict(),
            "episodes": self.episodes_done,
            "seed": seed,
        }

    def save(self, path, seed: int, with_resume_state: bool = True) -> None:
        path = Path(path)
        path.write_text(json.dumps(self.checkpoint_dict(seed)))
        if with_resume_state:
            arrays = {}
            for name, net in (("target_actor", self.target_actor),
                              ("target_critic", self.target_critic)):
                for i, p in enumerate(net.params):
                    arrays[f"{name}/{i}"] = p
            for name, opt in (("actor_opt", self.actor_opt), ("critic_opt", self.critic_opt)):
                arrays[f"{name}/step"] = np.array(opt.step)
                for i, (m, v) in enumerate(zip(opt.m, opt.v)):
                    arrays[f"{name}/m{i}"] = m
                    arrays[f"{name}/v{i}"] = v
            for k, v in self.buffer.state_dict().items():
                arrays[f"buffer/{k}"] = np.asarray(v)
            np.savez(resume_state_path(path), **arrays)

    @classmethod
    def load(cls, path, with_resume_state: bool = False) -> "DdpgAgent":
        path = Path(path)
        d = json.loads(path.read_text())
        known = {f.name for f in fields(AgentConfig)}
        cfg = AgentConfig.from_dict({k: v for k, v in d["agent_config"].items() if k in known})
        agent = cls.__new__(cls)
        agent.cfg = cfg
        agent.state_dim, agent.action_dim = int(d["state_dim"]), int(d["action_dim"])
        agent.actor = Mlp.from_dict(d["actor"])
        agent.critic = Mlp.from_dict(d["critic"])
        agent.target_actor = agent.actor.copy()
        agent.target_critic = agent.critic.copy()
        agent.actor_opt = AdamState.zeros_like(agent.actor.params)
        agent.critic_opt = AdamState.zeros_like(agent.critic.params)
        agent.buffer = ReplayBuffer(cfg.buffer_capacity, agent.state_dim, agent.action_dim)
        agent.episodes_done = int(d["episodes"])
        if with_resume_state:
            z = np.load(resume_state_path(path))
            for name, net in (("target_actor", agent.target_actor),
                              ("target_critic", agent.target_critic)):
                for i, p in enumerate(net.params):
                    p[...] = z[f"{name}/{i}"]
            for name, opt in (("actor_opt", agent.actor_opt), ("critic_opt", agent.critic_opt)):
                opt.step = int(z[f"{name}/step"])
                for i in range(len(opt.m)):
                    opt.m[i][...] = z[f"{name}/m{i}"]
                    opt.v[i][...] = z[f"{name}/v{i}"]
            agent.buffer.load_state_dict({k: z[f"buffer/{k}"]
                                          for k in ("s", "a", "r", "s_next", "cursor", "size")})
        return agent


def resume_state_path(checkpoint_path) -> Path:
    p = Path(checkpoint_path)
    return p.with_name(p.stem + ".state.npz")
