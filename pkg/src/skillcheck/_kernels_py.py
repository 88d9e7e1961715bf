"""Pure numpy implementation of the batched scoring kernels.

Shapes: ``R`` replicas, ``m`` evaluators, ``x`` probes and ``h`` non-probes per
evaluator, ``P`` non-probe papers, ``c`` maximum graders per paper. A "slot" is
one (evaluator, non-probe position) pair, flattened as ``i * h + k``.
"""
from __future__ import annotations

import numpy as np


def estimate_batch(dev, tau_cap, eps):
    """Bias and reliability estimates from probe deviations ``dev`` (R, m, x)."""
    dev = np.asarray(dev, dtype=np.float64)
    x = dev.shape[2]
    acc = np.zeros(dev.shape[:2])
    for k in range(x):
        acc += dev[:, :, k]
    b_hat = acc / x
    rss = np.zeros(dev.shape[:2])
    for k in range(x):
        d = dev[:, :, k] - b_hat
        rss += d * d
    with np.errstate(divide="ignore"):
        tau = np.where(rss < eps, tau_cap, np.minimum(tau_cap, (x - 1) / np.where(rss < eps, 1.0, rss)))
    return b_hat, tau


def score_batch(b_hat, tau_hat, np_reports, graders, y_np, mu, sqrt_gamma, true_reference, alpha):
    """Aggregate non-probe papers and compute per-slot transfers.

    ``graders`` (P, c) lists the slots grading each paper in evaluator order,
    padded with -1. Returns ``r_star`` (R, P) and ``t`` (R, m, h).
    """
    R, m, h = np_reports.shape
    P, c = graders.shape
    w = np.repeat(np.sqrt(tau_hat), h, axis=1)
    d = (np_reports - b_hat[:, :, None]).reshape(R, m * h)
    valid = graders >= 0
    g = np.where(valid, graders, 0)
    wg = np.where(valid, w[:, g], 0.0)
    wdg = np.where(valid, w[:, g] * d[:, g], 0.0)

    prior_num = sqrt_gamma * mu
    num = np.full((R, P), prior_num)
    den = np.full((R, P), sqrt_gamma)
    for q in range(c):
        num = num + wdg[:, :, q]
        den = den + wg[:, :, q]
    r_star = num / den

    if true_reference:
        ref = y_np
    else:
        ref = np.where(y_np > r_star, y_np, r_star)
    w_all = -((r_star - ref) ** 2)

    t = np.zeros((R, m * h))
    for q in range(c):
        num_q = np.full((R, P), prior_num)
        den_q = np.full((R, P), sqrt_gamma)
        for q2 in range(c):
            if q2 != q:
                num_q = num_q + wdg[:, :, q2]
                den_q = den_q + wg[:, :, q2]
        r_loo = num_q / den_q
        contrib = alpha * (w_all + (r_loo - ref) ** 2)
        papers = np.nonzero(valid[:, q])[0]
        t[:, graders[papers, q]] = contrib[:, papers]
    return r_star, t.reshape(R, m, h)
