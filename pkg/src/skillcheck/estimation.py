"""Per-evaluator bias and reliability estimates from probe papers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

__all__ = ["TAU_CAP", "EPSILON_VAR", "EstimatedParams", "estimate_params"]

TAU_CAP = 1e6
EPSILON_VAR = 1e-12


@dataclass(frozen=True)
class EstimatedParams:
    b_hat: float
    tau_hat: float
    probe_count: int

    def __post_init__(self) -> None:
        if self.probe_count < 2:
            raise ValueError(f"need at least 2 probes, got {self.probe_count}")
        if not (math.isfinite(self.tau_hat) and self.tau_hat >= 0):
            raise ValueError(f"tau_hat must be finite and >= 0, got {self.tau_hat}")


def estimate_params(
    reports_on_probes: Mapping[int, float],
    true_probe_scores: Mapping[int, float],
    *,
    tau_cap: float = TAU_CAP,
    epsilon_var: float = EPSILON_VAR,
) -> EstimatedParams:
    """Estimate ``(b_hat, tau_hat)`` by comparing reports with probe truth.

    ``b_hat`` is the mean deviation and ``tau_hat = (x - 1) / RSS`` where RSS
    sums squared deviations about ``b_hat``. RSS below ``epsilon_var`` gives
    ``tau_cap``, and so does any larger estimate.
    """
    keys = set(reports_on_probes)
    if keys != set(true_probe_scores):
        missing = sorted(keys ^ set(true_probe_scores))
        raise KeyError(f"probe report and truth key sets differ on papers {missing}")
    x = len(keys)
    if x < 2:
        raise ValueError(f"need at least 2 probes to estimate reliability, got {x}")
    devs = [reports_on_probes[j] - true_probe_scores[j] for j in sorted(keys)]
    b_hat = math.fsum(devs) / x
    rss = math.fsum((d - b_hat) ** 2 for d in devs)
    if rss < epsilon_var:
        tau_hat = tau_cap
    else:
        tau_hat = min(tau_cap, (x - 1) / rss)
    return EstimatedParams(b_hat, tau_hat, x)
