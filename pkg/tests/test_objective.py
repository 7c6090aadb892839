import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cellfree_drl.objective import (Case, ObjectiveConfig, constraints_satisfied,
                                    objective_value, reward, zf_precondition)
from cellfree_drl.partition import Partition
from cellfree_drl.phy import MetricsRecord


def metrics(r_sum=300.0, rho=1.0, eta=0.4536, feasible=True):
    return MetricsRecord(t=1, r_sum=r_sum, rho=rho, rho_u=rho, rho_b=1.0, c_max=0,
                         p_tot=661.32, eta_ee=eta, feasible=feasible)


def counts(K_m, L_m):
    M = len(K_m)
    return Partition(np.repeat(np.arange(M), K_m), np.repeat(np.arange(M), L_m),
                     np.ones(sum(L_m), bool), M)


ALL = list(Case)


@pytest.mark.parametrize("case", ALL)
def test_zero_balance_zero_objective(case):
    cfg = ObjectiveConfig(case, r_th=0.0 if case.rate_constrained else None)
    assert objective_value(cfg, metrics(rho=0.0)) == 0.0


def test_rate_balance_arithmetic():
    v = objective_value(ObjectiveConfig(Case.RATE_BALANCE), metrics(300.0, 1 / 9))
    assert v == pytest.approx(33.3333333, rel=1e-8)


def test_ee_balance_arithmetic():
    v = objective_value(ObjectiveConfig(Case.EE_BALANCE), metrics(eta=0.4536, rho=0.5))
    assert v == pytest.approx(0.2268, abs=1e-12)


def test_ee_uses_eta_in_both_energy_cases():
    a = objective_value(ObjectiveConfig(Case.EE_BALANCE), metrics(eta=0.3, rho=0.5))
    b = objective_value(ObjectiveConfig(Case.EE_BALANCE_RATECONSTRAINED, r_th=1.0),
                        metrics(eta=0.3, rho=0.5))
    assert a == b == pytest.approx(0.15)


@pytest.mark.parametrize("K_m, L_m, ok", [
    ((2, 3), (2, 3), True),
    ((4, 1), (3, 2), False),
    ((0, 3), (2, 3), False),
    ((2, 3), (0, 5), False),
])
def test_precondition_examples(K_m, L_m, ok):
    p = counts(K_m, L_m)
    assert zf_precondition(p) is ok
    assert constraints_satisfied(ObjectiveConfig(), p, metrics()) is ok


def test_rate_threshold_boundary():
    cfg = ObjectiveConfig(Case.BALANCE_RATECONSTRAINED, r_th=250.0)
    p = counts((2, 3), (4, 4))
    assert not constraints_satisfied(cfg, p, metrics(r_sum=249.9))
    assert constraints_satisfied(cfg, p, metrics(r_sum=250.0))


def test_reward_passthrough_and_penalty():
    p = counts((2, 3), (4, 4))
    assert reward(ObjectiveConfig(), p, metrics(300.0, 1 / 9)) == pytest.approx(33.333333, rel=1e-6)
    cfg = ObjectiveConfig(Case.BALANCE_RATECONSTRAINED, r_th=100.0)
    assert reward(cfg, p, metrics(r_sum=150.0, rho=0.8)) == 0.8
    assert reward(ObjectiveConfig(), p, metrics(feasible=False)) == 0.0
    assert reward(ObjectiveConfig(), counts((5, 1), (3, 4)), metrics()) == 0.0


def test_zero_threshold_reduces_to_precondition():
    cfg = ObjectiveConfig(Case.BALANCE_RATECONSTRAINED, r_th=0.0)
    rng = np.random.default_rng(0)
    for _ in range(200):
        M = 2
        p = Partition(rng.integers(0, M, 5), rng.integers(0, M, 7), rng.random(7) > 0.3, M)
        assert constraints_satisfied(cfg, p, metrics(r_sum=rng.uniform(0, 10))) == zf_precondition(p)


def test_config_validation():
    with pytest.raises(ValueError):
        ObjectiveConfig(Case.BALANCE_RATECONSTRAINED)
    with pytest.raises(ValueError):
        ObjectiveConfig(Case.RATE_BALANCE, r_th=10.0)
    with pytest.raises(ValueError):
        ObjectiveConfig(Case.EE_BALANCE_RATECONSTRAINED, r_th=-1.0)
    assert ObjectiveConfig("EE_BALANCE").case is Case.EE_BALANCE


def test_reward_scale_defaults():
    assert ObjectiveConfig(Case.RATE_BALANCE).scale == 100.0
    assert ObjectiveConfig(Case.EE_BALANCE).scale == 1.0
    assert ObjectiveConfig(Case.RATE_BALANCE, reward_scale=7.0).scale == 7.0


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ALL), st.floats(0, 1000), st.floats(0, 1), st.floats(0, 5),
       st.booleans(), st.integers(0, 2**31))
def test_reward_non_negative(case, r_sum, rho, eta, feasible, seed):
    rng = np.random.default_rng(seed)
    cfg = ObjectiveConfig(case, r_th=100.0 if case.rate_constrained else None)
    p = Partition(rng.integers(0, 3, 6), rng.integers(0, 3, 9), rng.random(9) > 0.2, 3)
    assert reward(cfg, p, metrics(r_sum, rho, eta, feasible)) >= 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1), st.floats(0, 500), st.floats(0.001, 100))
def test_rate_reward_strictly_increasing(rho, r_sum, bump):
    cfg, p = ObjectiveConfig(), counts((2, 2), (3, 3))
    assert reward(cfg, p, metrics(r_sum + bump, rho)) > reward(cfg, p, metrics(r_sum, rho))
