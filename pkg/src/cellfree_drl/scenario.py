"""Network topology, random-walk mobility, user churn and channel draws."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MIN_DISTANCE = 1.0  # m, clamp before path loss


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class ScenarioConfig:
    K: int = 50
    L: int = 100
    M: int = 5
    T: int = 100
    area_side: float = 1000.0
    interval_duration: float = 1.0
    v_max: float = 5.0
    alpha: float = 4.0
    sigma_sh: float = 8.0
    noise_power: float = dbm_to_watt(-104.0)
    dynamic_users: bool = False
    k_change_max: int = 0
    seed: int = 0
    # "uniform" or "hotspot"; hotspot users are Gaussian around hotspot_centers
    # given as fractions of area_side
    user_placement: str = "uniform"
    hotspot_centers: tuple = ((0.25, 0.25), (0.75, 0.75))
    hotspot_std: float = 0.08

    def __post_init__(self):
        if not (self.K >= self.M >= 1):
            raise ValueError(f"need K >= M >= 1, got K={self.K}, M={self.M}")
        if self.L < self.M:
            raise ValueError(f"need L >= M, got L={self.L}, M={self.M}")
        if self.area_side <= 0 or self.alpha <= 0 or self.v_max < 0:
            raise ValueError("area_side and alpha must be > 0, v_max >= 0")
        if self.noise_power <= 0 or self.interval_duration <= 0 or self.T < 1:
            raise ValueError("noise_power, interval_duration and T must be positive")
        if self.k_change_max < 0:
            raise ValueError("k_change_max must be >= 0")
        if self.user_placement not in ("uniform", "hotspot"):
            raise ValueError(f"unknown user_placement {self.user_placement!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "noise_power_dbm" in d:
            d["noise_power"] = dbm_to_watt(d.pop("noise_power_dbm"))
        if "hotspot_centers" in d:
            d["hotspot_centers"] = tuple(tuple(c) for c in d["hotspot_centers"])
        return cls(**d)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkState:
    """One time interval of the network: positions, shadowing and fading."""

    user_pos: np.ndarray  # (K, 2)
    ap_pos: np.ndarray  # (L, 2)
    shadow_db: np.ndarray  # (K, L)
    gamma: np.ndarray  # (K, L)
    t: int
    user_ids: np.ndarray = field(default=None)  # stable identities across churn
    next_user_id: int = -1

    def __post_init__(self):
        K = len(self.user_pos)
        if self.user_ids is None:
            object.__setattr__(self, "user_ids", np.arange(K))
        if self.next_user_id < 0:
            object.__setattr__(self, "next_user_id", int(K))
        for name in ("user_pos", "ap_pos", "shadow_db", "gamma", "user_ids"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def K(self) -> int:
        return self.user_pos.shape[0]

    @property
    def L(self) -> int:
        return self.ap_pos.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "user_pos": self.user_pos.tolist(),
            "ap_pos": self.ap_pos.tolist(),
            "shadow_db": self.shadow_db.tolist(),
            "t": self.t,
        })

    def fingerprint(self) -> bytes:
        """Raw bytes identifying the state; used to hash episode tapes."""
        return b"".join(a.tobytes() for a in (self.user_pos, self.ap_pos, self.shadow_db)) + \
            int(self.t).to_bytes(8, "little")


def large_scale_fading(distance, shadow_db, alpha: float):
    """Amplitude sqrt(d^-alpha * 10^(chi/10)), distances clamped at 1 m."""
    scalar = np.ndim(distance) == 0 and np.ndim(shadow_db) == 0
    # scalars go through the array kernels too, so results agree to the bit
    d = np.maximum(np.atleast_1d(np.asarray(distance, dtype=float)), MIN_DISTANCE)
    chi = np.atleast_1d(np.asarray(shadow_db, dtype=float))
    out = np.sqrt(d ** (-alpha) * 10.0 ** (chi / 10.0))
    return float(out[0]) if scalar else out


def distances(user_pos: np.ndarray, ap_pos: np.ndarray) -> np.ndarray:
    diff = user_pos[:, None, :] - ap_pos[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def _sample_users(n: int, config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    A = config.area_side
    if config.user_placement == "uniform":
        return rng.uniform(0.0, A, size=(n, 2))
    centers = np.asarray(config.hotspot_centers, dtype=float) * A
    which = rng.integers(0, len(centers), size=n)
    pos = centers[which] + rng.normal(0.0, config.hotspot_std * A, size=(n, 2))
    return np.clip(pos, 0.0, A)


def _build(user_pos, ap_pos, shadow_db, config, t, user_ids=None, next_user_id=-1):
    gamma = large_scale_fading(distances(user_pos, ap_pos), shadow_db, config.alpha)
    return NetworkState(user_pos, ap_pos, shadow_db, gamma, t, user_ids, next_user_id)


def init_snapshot(config: ScenarioConfig, rng: np.random.Generator) -> NetworkState:
    ap_pos = rng.uniform(0.0, config.area_side, size=(config.L, 2))
    user_pos = _sample_users(config.K, config, rng)
    shadow_db = rng.normal(0.0, config.sigma_sh, size=(config.K, config.L))
    return _build(user_pos, ap_pos, shadow_db, config, t=1)


def reflect(x, side: float):
    """Fold coordinates back into [0, side] as if bouncing off the walls."""
    period = 2.0 * side
    y = np.mod(x, period)
    return np.where(y > side, period - y, y)


def step_mobility(state: NetworkState, config: ScenarioConfig,
                  rng: np.random.Generator) -> NetworkState:
    K = state.K
    speed = rng.uniform(0.0, config.v_max, size=K)
    heading = rng.uniform(0.0, 2.0 * np.pi, size=K)
    # drawn for every pair so the stream does not depend on who moved
    fresh_shadow = rng.normal(0.0, config.sigma_sh, size=(K, state.L))

    step = speed * config.interval_duration
    delta = np.stack([step * np.cos(heading), step * np.sin(heading)], axis=1)
    user_pos = reflect(state.user_pos + delta, config.area_side)

    moved = step > 0
    shadow_db = np.where(moved[:, None], fresh_shadow, state.shadow_db)
    return _build(user_pos, state.ap_pos, shadow_db, config, state.t + 1,
                  state.user_ids, state.next_user_id)


def draw_churn(config: ScenarioConfig, rng: np.random.Generator) -> int:
    m = config.k_change_max
    return int(rng.integers(-m, m + 1))


def vary_users(state: NetworkState, config: ScenarioConfig,
               rng: np.random.Generator) -> NetworkState:
    """Add or remove a uniform random number of users, never going below M."""
    if not config.dynamic_users:
        raise ValueError("vary_users requires dynamic_users=True")
    change = draw_churn(config, rng)
    user_pos, shadow_db, ids = state.user_pos, state.shadow_db, state.user_ids
    next_id = state.next_user_id
    if change > 0:
        new_pos = _sample_users(change, config, rng)
        new_shadow = rng.normal(0.0, config.sigma_sh, size=(change, state.L))
        user_pos = np.vstack([user_pos, new_pos])
        shadow_db = np.vstack([shadow_db, new_shadow])
        ids = np.concatenate([ids, np.arange(next_id, next_id + change)])
        next_id += change
    elif change < 0:
        n_remove = min(-change, state.K - config.M)
        if n_remove > 0:
            drop = rng.choice(state.K, size=n_remove, replace=False)
            keep = np.setdiff1d(np.arange(state.K), drop)
            user_pos, shadow_db, ids = user_pos[keep], shadow_db[keep], ids[keep]
    return _build(user_pos, state.ap_pos, shadow_db, config, state.t, ids, next_id)


@dataclass(frozen=True, eq=False)
class ChannelDraw:
    h: np.ndarray  # (K, L) complex


def draw_small_scale(K: int, L: int, rng: np.random.Generator) -> ChannelDraw:
    a = rng.standard_normal((K, L))
    b = rng.standard_normal((K, L))
    return ChannelDraw((a + 1j * b) / np.sqrt(2.0))


def channel_feature(state: NetworkState) -> np.ndarray:
    """Strongest large-scale fading seen by each AP (length L)."""
    return state.gamma.max(axis=0)
