"""Random exam instances shared by several test modules."""
from __future__ import annotations

import numpy as np

from skillcheck.assignment import build_assignment
from skillcheck.pg1_model import Prior, RngStream


def random_exam(seed: int, n_max: int = 50, m_max: int = 10, max_cov: int = 3):
    """A feasible plan plus true scores and every evaluator's reports.

    Returns ``(plan, prior, y, reports)`` with ``reports[i][j]`` for every
    paper in evaluator ``i``'s bundle.
    """
    g = RngStream(seed, 0)
    while True:
        K = 2 * int(g.integers(2, 4))
        half = K // 2
        ell = int(g.integers(half, half + 5))
        n = int(g.integers(ell + half, n_max + 1))
        m = int(g.integers(1, m_max + 1))
        cov = int(g.integers(1, max_cov + 1))
        if cov <= m and m * half >= cov * (n - ell) and n - ell >= half:
            break
    plan = build_assignment(n, m, ell, K, cov, RngStream(seed, 1))
    prior = Prior(50.0, float(g.uniform(0.005, 1.0)))
    y = prior.mu + prior.stddev * g.standard_normal(n)
    b = g.normal(0, 3, m)
    sig = np.exp(g.uniform(np.log(0.2), np.log(6), m))
    reports = {
        i: {j: float(y[j] + b[i] + sig[i] * g.standard_normal()) for j in plan.per_evaluator[i].bundle}
        for i in plan.evaluators
    }
    return plan, prior, y, reports
