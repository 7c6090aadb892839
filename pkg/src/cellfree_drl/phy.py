"""Zero-forcing downlink rates, power consumption and energy efficiency."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields

import numpy as np

from .partition import Partition, balance, c_max
from .scenario import ChannelDraw, NetworkState, draw_small_scale

RIDGE = 1e-12
MAX_CONDITION = 1e12


class InfeasibleZF(ValueError):
    """A subnetwork has fewer active APs than users."""


class SingularChannel(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class EnergyParams:
    p_tx: float = 2.0
    tau: float = 0.38
    p_c: float = 1.0
    p_fix: float = 0.05
    p_b: float = 0.1

    def __post_init__(self):
        if min(self.p_tx, self.tau, self.p_c, self.p_fix, self.p_b) <= 0 or self.tau > 1:
            raise ValueError("energy parameters must be positive with tau in (0, 1]")


@dataclass(frozen=True, eq=False)
class PrecodeResult:
    W: np.ndarray  # (L, K) complex, zero outside each user's active serving APs
    power: np.ndarray  # (K,) watts
    blocks: dict  # m -> (ap indices, user indices, L_m x K_m precoder)


@dataclass
class MetricsRecord:
    t: int
    r_sum: float
    rho: float
    rho_u: float
    rho_b: float
    c_max: int
    p_tot: float
    eta_ee: float
    feasible: bool
    handovers: int = 0
    reward: float = 0.0

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> dict:
        d = asdict(self)
        d["feasible"] = int(self.feasible)
        return d


def write_metrics_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MetricsRecord.columns())
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())


def composite_gain(state: NetworkState, draw: ChannelDraw) -> np.ndarray:
    return state.gamma * draw.h


def zf_block(G: np.ndarray) -> np.ndarray:
    """Unit-norm zero-forcing precoder (L_m x K_m) for a K_m x L_m channel.

    Rows are scaled to unit norm before the ridged inverse; this leaves the
    zero-forcing directions unchanged and keeps the Gram matrix well conditioned
    when users see very different path losses.
    Raises SingularChannel when the ridged Gram condition number exceeds 1e12.
    """
    K_m = G.shape[0]
    row_norm = np.linalg.norm(G, axis=1, keepdims=True)
    Gn = G / row_norm
    gram = Gn @ Gn.conj().T
    eps = RIDGE * np.trace(gram).real / K_m
    gram = gram + eps * np.eye(K_m)
    if np.linalg.cond(gram) > MAX_CONDITION:
        raise SingularChannel("subnetwork Gram matrix is numerically singular")
    A = Gn.conj().T @ np.linalg.inv(gram)
    # one refinement step strips the ridge bias from the null space
    W = A + A @ (np.eye(K_m) - Gn @ A)
    return W / np.linalg.norm(W, axis=0, keepdims=True)


def zf_precoders(state: NetworkState, draw: ChannelDraw, partition: Partition,
                 p_tx: float = 2.0) -> PrecodeResult:
    G = composite_gain(state, draw)
    K, L = G.shape
    W = np.zeros((L, K), dtype=complex)
    power = np.zeros(K)
    blocks = {}
    for m in range(partition.M):
        users = np.flatnonzero(partition.user_assign == m)
        if users.size == 0:
            continue
        aps = np.flatnonzero((partition.ap_assign == m) & partition.ap_active)
        if aps.size < users.size:
            raise InfeasibleZF(f"subnetwork {m}: {aps.size} active APs < {users.size} users")
        Wm = zf_block(G[np.ix_(users, aps)])
        W[np.ix_(aps, users)] = Wm
        power[users] = p_tx * aps.size / users.size
        blocks[m] = (aps, users, Wm)
    return PrecodeResult(W, power, blocks)


def _sinr(G: np.ndarray, precode: PrecodeResult, noise_power: float) -> np.ndarray:
    # received[k, j] = |g_k . w_j|^2 P_j; w_j is zero outside j's serving set,
    # so row k sums intra- and inter-subnetwork terms alike
    received = np.abs(G @ precode.W) ** 2 * precode.power[None, :]
    desired = np.diag(received)
    interference = received.sum(axis=1) - desired
    return desired / (interference + noise_power)


def user_rate(k: int, state: NetworkState, draw: ChannelDraw, partition: Partition,
              precode: PrecodeResult, noise_power: float) -> float:
    G = composite_gain(state, draw)
    return float(np.log2(1.0 + _sinr(G, precode, noise_power)[k]))


def user_rates(state, draw, partition, precode, noise_power) -> np.ndarray:
    return np.log2(1.0 + _sinr(composite_gain(state, draw), precode, noise_power))


def sum_rate(state, draw, partition, precode, noise_power) -> float:
    return float(user_rates(state, draw, partition, precode, noise_power).sum())


def total_power(partition: Partition, energy: EnergyParams, r_sum: float) -> float:
    n_active = int(partition.ap_active.sum())
    return ((energy.p_tx / energy.tau + energy.p_c) * n_active
            + energy.p_fix * partition.L + energy.p_b * r_sum)


def energy_efficiency(r_sum: float, p_tot: float) -> float:
    if p_tot <= 0:
        raise ValueError("p_tot must be positive")
    return r_sum / p_tot


def evaluate(state: NetworkState, partition: Partition, energy: EnergyParams,
             n_draws: int, rng: np.random.Generator, noise_power: float) -> MetricsRecord:
    """Average the sum rate over n_draws small-scale fading realizations.

    All draws are taken from rng up front, so the stream consumed depends only
    on the network size and never on the partition.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    draws = [draw_small_scale(state.K, state.L, rng) for _ in range(n_draws)]
    feasible = True
    rates = []
    try:
        for draw in draws:
            pre = zf_precoders(state, draw, partition, energy.p_tx)
            rates.append(sum_rate(state, draw, partition, pre, noise_power))
    except (InfeasibleZF, SingularChannel):
        feasible = False
    r_sum = float(np.mean(rates)) if feasible else 0.0
    rho, rho_u, rho_b = balance(partition)
    p_tot = total_power(partition, energy, r_sum)
    return MetricsRecord(
        t=state.t, r_sum=r_sum, rho=rho, rho_u=rho_u, rho_b=rho_b,
        c_max=c_max(partition), p_tot=p_tot,
        eta_ee=energy_efficiency(r_sum, p_tot), feasible=feasible,
    )
