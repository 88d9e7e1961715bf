import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import oracle_estimate
from skillcheck.estimation import TAU_CAP, estimate_params

finite = st.floats(-100, 100, allow_nan=False)


def test_worked_example():
    truth = {1: 50.0, 2: 60.0, 3: 70.0, 4: 80.0}
    reps = {1: 52.0, 2: 63.0, 3: 71.0, 4: 82.0}
    p = estimate_params(reps, truth)
    # deviations 2,3,1,2 -> mean 2, residuals 0,1,-1,0 -> RSS 2
    assert p.b_hat == 2.0
    assert p.tau_hat == pytest.approx(1.5, abs=1e-12)
    assert p.probe_count == 4


def test_constant_shift_hits_cap():
    truth = {1: 40.0, 2: 55.5, 3: 71.0}
    p = estimate_params({j: v + 5 for j, v in truth.items()}, truth)
    assert p.b_hat == pytest.approx(5.0, abs=1e-12) and p.tau_hat == TAU_CAP


def test_perfect_evaluator():
    truth = {1: 40.0, 2: 55.5}
    p = estimate_params(dict(truth), truth)
    assert p.b_hat == 0 and p.tau_hat == TAU_CAP


def test_key_mismatch_and_too_few():
    with pytest.raises(KeyError):
        estimate_params({1: 1.0, 2: 2.0}, {1: 1.0, 3: 2.0})
    with pytest.raises(ValueError):
        estimate_params({1: 1.0}, {1: 1.0})


def test_uses_x_minus_one():
    truth = {0: 0.0, 1: 0.0}
    p = estimate_params({0: 1.0, 1: -1.0}, truth)
    # RSS = 2, x - 1 = 1
    assert p.tau_hat == pytest.approx(0.5)


@given(st.lists(finite, min_size=2, max_size=12), st.floats(-50, 50))
@settings(max_examples=200)
def test_shift_equivariance(devs, c):
    truth = {j: 50.0 + j for j in range(len(devs))}
    reps = {j: truth[j] + d for j, d in enumerate(devs)}
    a = estimate_params(reps, truth)
    b = estimate_params({j: v + c for j, v in reps.items()}, truth)
    assert b.b_hat - a.b_hat == pytest.approx(c, abs=1e-9)
    if a.tau_hat < 1e3:
        assert b.tau_hat == pytest.approx(a.tau_hat, rel=1e-6)


@given(st.lists(finite, min_size=2, max_size=12))
@settings(max_examples=100)
def test_matches_oracle(devs):
    truth = {j: 10.0 * j for j in range(len(devs))}
    p = estimate_params({j: truth[j] + d for j, d in enumerate(devs)}, truth)
    b, tau = oracle_estimate([(truth[j] + d) - truth[j] for j, d in enumerate(devs)])
    assert p.b_hat == pytest.approx(b, abs=1e-9)
    assert p.tau_hat == pytest.approx(tau, rel=1e-9)


def test_consistency_large_x():
    rng = np.random.default_rng(0)
    x, b, tau = 10_000, 1.7, 0.4
    sigma = 1 / math.sqrt(tau)
    truth = dict(enumerate(rng.normal(50, 10, x)))
    reps = {j: y + b + sigma * rng.standard_normal() for j, y in truth.items()}
    p = estimate_params(reps, truth)
    assert abs(p.b_hat - b) < 5 * sigma / math.sqrt(x)
    assert 0.9 < p.tau_hat / tau < 1.1
