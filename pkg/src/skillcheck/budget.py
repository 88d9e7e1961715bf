"""Expected payout estimation and calibration of the payment scale ``alpha``.

Payouts are linear in ``alpha``, so everything is simulated at ``alpha = 1``
and scaled. The expectation runs over prior true scores, evaluator strategies
drawn from a :class:`StrategyPrior`, and report noise.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .assignment import build_assignment
from .config import ExamConfig
from .kernels import BatchLayout, estimate_batch, score_batch
from .pg1_model import RngStream

__all__ = [
    "BudgetError",
    "StrategyPrior",
    "BudgetConfig",
    "CalibrationReport",
    "simulate_payouts",
    "estimate_expected_payout",
    "calibrate_alpha",
    "validate_calibration",
]

Z95 = 1.959963984540054


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyPrior:
    """Operator-supplied stand-in for historical evaluator behaviour.

    Bias ~ Normal(0, bias_sd^2); reliability log-uniform on [tau_min, tau_max].
    """

    bias_sd: float = 2.0
    tau_min: float = 0.05
    tau_max: float = 5.0

    def sample(self, size, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
        b = rng.normal(0.0, self.bias_sd, size) if self.bias_sd > 0 else np.zeros(size)
        tau = np.exp(rng.uniform(math.log(self.tau_min), math.log(self.tau_max), size))
        return b, tau


@dataclass(frozen=True)
class BudgetConfig:
    k_net: float
    safety_margin: float = 0.2
    mc_samples: int = 2000
    strategy_prior: StrategyPrior = field(default_factory=StrategyPrior)

    def __post_init__(self) -> None:
        if self.k_net < 0:
            raise ValueError(f"k_net must be >= 0, got {self.k_net}")
        if not 0 <= self.safety_margin < 1:
            raise ValueError(f"safety_margin must lie in [0, 1), got {self.safety_margin}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")


@dataclass
class CalibrationReport:
    alpha: float
    estimate: float  # expected payout at alpha = 1
    ci_halfwidth: float
    target: float
    samples: int
    seed: int
    stream_id: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def simulate_payouts(
    config: ExamConfig,
    strategy_prior: StrategyPrior,
    samples: int,
    rng: RngStream,
    alpha: float = 1.0,
    backend: str | None = None,
) -> np.ndarray:
    """Total evaluator payout of ``samples`` independent exams.

    One plan is drawn per call; plans differ only by relabelling papers and
    evaluators, which leaves the payout distribution unchanged.
    """
    plan = build_assignment(config.n, config.m, config.ell, config.K, config.coverage, rng.child(0))
    lay = BatchLayout.from_plan(plan)
    g = rng.child(1)
    m, x = lay.probe_papers.shape
    h = lay.slot_papers.shape[1]
    prior = config.prior
    y = prior.mu + prior.stddev * g.standard_normal((samples, config.n))
    b, tau = strategy_prior.sample((samples, m), g)
    sigma = 1.0 / np.sqrt(tau)
    z_probe = g.standard_normal((samples, m, x))
    z_np = g.standard_normal((samples, m, h))
    dev = b[:, :, None] + sigma[:, :, None] * z_probe
    np_reports = y[:, lay.slot_papers] + b[:, :, None] + sigma[:, :, None] * z_np
    y_np = y[:, list(lay.nonprobe_ids)]
    b_hat, tau_hat = estimate_batch(dev, config.tau_cap, config.epsilon_var, backend)
    _, t = score_batch(
        b_hat, tau_hat, np_reports, lay.graders, y_np, prior.mu, math.sqrt(prior.gamma),
        False, 1.0, backend,
    )
    # scale the totals so payout(alpha) == alpha * payout(1) bit for bit
    return alpha * t.reshape(samples, -1).sum(axis=1)


def estimate_expected_payout(
    config: ExamConfig, budget: BudgetConfig, alpha: float, rng: RngStream, backend: str | None = None
) -> tuple[float, float]:
    """Monte Carlo ``E[sum_i t_i]`` and its 95% normal-approximation half-width."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    mean1, hw1 = _estimate_unit(config, budget, rng, backend)
    return alpha * mean1, alpha * hw1


def _estimate_unit(config, budget, rng, backend=None) -> tuple[float, float]:
    totals = simulate_payouts(config, budget.strategy_prior, budget.mc_samples, rng, 1.0, backend)
    mean = math.fsum(totals) / len(totals)
    if len(totals) < 2:
        return mean, math.inf
    sd = float(np.std(totals, ddof=1))
    return mean, Z95 * sd / math.sqrt(len(totals))


def calibrate_alpha(
    config: ExamConfig, budget: BudgetConfig, rng: RngStream, backend: str | None = None
) -> CalibrationReport:
    """Pick ``alpha`` so the expected payout equals ``k_net * (1 - safety_margin)``."""
    est, hw = _estimate_unit(config, budget, rng, backend)
    if not est > 0:
        raise BudgetError(f"expected payout at alpha=1 is {est:.6g}; payments are degenerate")
    target = budget.k_net * (1.0 - budget.safety_margin)
    return CalibrationReport(target / est, est, hw, target, budget.mc_samples, rng.seed, rng.stream_id)


def validate_calibration(
    config: ExamConfig,
    budget: BudgetConfig,
    alpha: float,
    replays: int,
    seed: int,
    backend: str | None = None,
) -> np.ndarray:
    """Realized total payouts of ``replays`` fresh-seed exams at ``alpha``.

    Replay ``r`` uses stream ``r`` of ``seed``.
    """
    out = np.empty(replays)
    for r in range(replays):
        out[r] = simulate_payouts(config, budget.strategy_prior, 1, RngStream(seed, r), alpha, backend)[0]
    return out
