"""Subnetwork partitions: anchor affiliation, balance, handovers and channel counts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .scenario import NetworkState


@dataclass(frozen=True, eq=False)
class AnchorSet:
    xy: np.ndarray  # (M, 2) meters
    w: np.ndarray | None = None  # (M,) activation ratios, energy cases only

    @property
    def M(self) -> int:
        return self.xy.shape[0]

    @property
    def has_weight(self) -> bool:
        return self.w is not None


@dataclass(frozen=True, eq=False)
class Partition:
    user_assign: np.ndarray  # (K,) in 0..M-1
    ap_assign: np.ndarray  # (L,) in 0..M-1
    ap_active: np.ndarray  # (L,) bool
    M: int
    user_ids: np.ndarray | None = field(default=None)

    def __post_init__(self):
        ua = np.asarray(self.user_assign, dtype=int)
        aa = np.asarray(self.ap_assign, dtype=int)
        act = np.asarray(self.ap_active, dtype=bool)
        if aa.shape != act.shape:
            raise ValueError("ap_assign and ap_active lengths differ")
        for a in (ua, aa):
            if a.size and (a.min() < 0 or a.max() >= self.M):
                raise ValueError(f"assignment outside 0..{self.M - 1}")
        object.__setattr__(self, "user_assign", ua)
        object.__setattr__(self, "ap_assign", aa)
        object.__setattr__(self, "ap_active", act)

    @property
    def K(self) -> int:
        return self.user_assign.shape[0]

    @property
    def L(self) -> int:
        return self.ap_assign.shape[0]

    def user_counts(self) -> np.ndarray:
        return np.bincount(self.user_assign, minlength=self.M)

    def ap_counts(self) -> np.ndarray:
        """Active APs per subnetwork."""
        return np.bincount(self.ap_assign[self.ap_active], minlength=self.M)

    def association(self) -> np.ndarray:
        """(K, L) indicator: user and active AP share a subnetwork."""
        return (self.user_assign[:, None] == self.ap_assign[None, :]) & self.ap_active[None, :]

    def to_json(self) -> str:
        return json.dumps({
            "user_assign": self.user_assign.tolist(),
            "ap_assign": self.ap_assign.tolist(),
            "ap_active": self.ap_active.tolist(),
        })


def nearest_anchor(points: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - anchors[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1)  # first minimum wins ties


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def affiliate(anchors: AnchorSet, state: NetworkState) -> Partition:
    """Attach every user and AP to its nearest anchor, then apply AP selection.

    With activation weights, each subnetwork keeps the max(1, round(w*L_raw))
    APs with the strongest fading to its own users. Subnetworks with no users
    or no APs are left untouched.
    """
    M = anchors.M
    user_assign = nearest_anchor(state.user_pos, anchors.xy)
    ap_assign = nearest_anchor(state.ap_pos, anchors.xy)
    ap_active = np.ones(state.L, dtype=bool)
    if anchors.has_weight:
        for m in range(M):
            aps = np.flatnonzero(ap_assign == m)
            users = np.flatnonzero(user_assign == m)
            if aps.size == 0 or users.size == 0:
                continue
            n_keep = max(1, _round_half_up(anchors.w[m] * aps.size))
            score = state.gamma[np.ix_(users, aps)].max(axis=0)
            order = np.argsort(-score, kind="stable")
            ap_active[aps[order[n_keep:]]] = False
    return Partition(user_assign, ap_assign, ap_active, M, state.user_ids)


def _minmax_ratio(counts: np.ndarray) -> float:
    hi = counts.max()
    if hi == 0 or counts.min() == 0:
        return 0.0
    return float(counts.min() / hi)


def balance(partition: Partition) -> tuple[float, float, float]:
    """Return (rho, rho_u, rho_b)."""
    rho_u = _minmax_ratio(partition.user_counts())
    rho_b = _minmax_ratio(partition.ap_counts())
    return rho_u * rho_b, rho_u, rho_b


def handover_count(prev: Partition, curr: Partition) -> int:
    """New user-AP associations in curr that were absent in prev.

    Users are matched by identity when both partitions carry user_ids, so
    arrivals and departures do not count.
    """
    if prev.L != curr.L:
        raise ValueError("partitions have different AP counts")
    psi_prev, psi_curr = prev.association(), curr.association()
    if prev.user_ids is not None and curr.user_ids is not None:
        common, i_prev, i_curr = np.intersect1d(prev.user_ids, curr.user_ids,
                                                return_indices=True)
        psi_prev, psi_curr = psi_prev[i_prev], psi_curr[i_curr]
    elif prev.K != curr.K:
        raise ValueError("user counts differ and no user identities given")
    return int((psi_curr & ~psi_prev).sum())


def c_max(partition: Partition) -> int:
    """Largest per-subnetwork channel count K_m * L_m."""
    return int((partition.user_counts() * partition.ap_counts()).max())
