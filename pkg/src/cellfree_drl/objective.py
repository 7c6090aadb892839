"""Case-study objectives, constraint sets and the penalized reward."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .partition import Partition
from .phy import MetricsRecord


class Case(str, Enum):
    RATE_BALANCE = "RATE_BALANCE"
    BALANCE_RATECONSTRAINED = "BALANCE_RATECONSTRAINED"
    EE_BALANCE = "EE_BALANCE"
    EE_BALANCE_RATECONSTRAINED = "EE_BALANCE_RATECONSTRAINED"

    @property
    def rate_constrained(self) -> bool:
        return self in (Case.BALANCE_RATECONSTRAINED, Case.EE_BALANCE_RATECONSTRAINED)

    @property
    def energy(self) -> bool:
        return self in (Case.EE_BALANCE, Case.EE_BALANCE_RATECONSTRAINED)


# objectives carrying a raw sum rate are O(100) bits/s/Hz
_DEFAULT_SCALE = {
    Case.RATE_BALANCE: 100.0,
    Case.BALANCE_RATECONSTRAINED: 1.0,
    Case.EE_BALANCE: 1.0,
    Case.EE_BALANCE_RATECONSTRAINED: 1.0,
}


@dataclass(frozen=True)
class ObjectiveConfig:
    case: Case = Case.RATE_BALANCE
    r_th: float | None = None
    reward_scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))
        if self.case.rate_constrained:
            if self.r_th is None:
                raise ValueError(f"{self.case.value} needs r_th")
            if self.r_th < 0:
                raise ValueError("r_th must be >= 0")
        elif self.r_th is not None:
            raise ValueError(f"r_th is only valid for rate-constrained cases, not {self.case.value}")
        if self.reward_scale is not None and self.reward_scale <= 0:
            raise ValueError("reward_scale must be positive")

    @property
    def scale(self) -> float:
        return self.reward_scale if self.reward_scale is not None else _DEFAULT_SCALE[self.case]


def objective_value(cfg: ObjectiveConfig, metrics: MetricsRecord) -> float:
    if cfg.case is Case.RATE_BALANCE:
        return metrics.r_sum * metrics.rho
    if cfg.case is Case.BALANCE_RATECONSTRAINED:
        return metrics.rho
    return metrics.eta_ee * metrics.rho


def zf_precondition(partition: Partition) -> bool:
    """Every subnetwork has a user and an active AP, and no fewer APs than users."""
    users, aps = partition.user_counts(), partition.ap_counts()
    return bool((users >= 1).all() and (aps >= 1).all() and (aps >= users).all())


def constraints_satisfied(cfg: ObjectiveConfig, partition: Partition,
                          metrics: MetricsRecord) -> bool:
    if not metrics.feasible or not zf_precondition(partition):
        return False
    if cfg.case.rate_constrained:
        return metrics.r_sum >= cfg.r_th
    return True


def reward(cfg: ObjectiveConfig, partition: Partition, metrics: MetricsRecord) -> float:
    if not constraints_satisfied(cfg, partition, metrics):
        return 0.0
    return objective_value(cfg, metrics)
