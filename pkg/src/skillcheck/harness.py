"""Experiments checking the incentive properties of the mechanism.

* bias insensitivity: a target evaluator's expected utility does not depend
  on its bias;
* reliability monotonicity: it does not decrease as its reliability grows;
* pointwise monotonicity: for frozen standardized noise, ``|r* - y|`` on a
  paper grows with the target's noise scale along ``s|A| / (s B + 1)``.

Expectations are taken over the target's own reporting noise with everything
else frozen ("own-noise"), or additionally over fresh true scores with the
other evaluators' standardized noise frozen ("own-noise-y").
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .assignment import AssignmentPlan, build_assignment
from .budget import StrategyPrior
from .config import RunConfig
from .estimation import EPSILON_VAR, TAU_CAP, EstimatedParams, estimate_params
from .kernels import BatchLayout, estimate_batch, score_batch
from .pg1_model import Prior, RngStream
from .scoring import iswdm

__all__ = [
    "Z95",
    "MODES",
    "Environment",
    "StrategySweep",
    "PropertyReport",
    "make_environment",
    "target_utilities",
    "check_epbi",
    "check_eprm",
    "PointwiseInstance",
    "random_pointwise_instance",
    "pointwise_pipeline",
    "pointwise_closed_form",
    "check_pointwise_monotonicity",
    "run_experiment",
]

Z95 = 1.959963984540054
MODES = ("own-noise", "own-noise-y")
# deterministic identities are checked at this absolute tolerance
IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class Environment:
    """Frozen realization of everything except the target's own noise."""

    plan: AssignmentPlan
    layout: BatchLayout
    prior: Prior
    target: int
    y: np.ndarray  # (n,) true scores
    biases: np.ndarray  # (m,) in layout order; target entry unused
    reliabilities: np.ndarray  # (m,)
    noise: np.ndarray  # (m, n) standardized draws; target row unused
    tau_cap: float = TAU_CAP
    epsilon_var: float = EPSILON_VAR

    @property
    def target_index(self) -> int:
        return self.layout.evaluators.index(self.target)


def make_environment(
    n: int,
    m: int,
    ell: int,
    K: int,
    prior: Prior,
    rng: RngStream,
    coverage: int = 1,
    target: int = 0,
    strategy_prior: StrategyPrior | None = None,
    tau_cap: float = TAU_CAP,
    epsilon_var: float = EPSILON_VAR,
) -> Environment:
    plan = build_assignment(n, m, ell, K, coverage, rng.child(0))
    lay = BatchLayout.from_plan(plan)
    g = rng.child(1)
    y = prior.mu + prior.stddev * g.standard_normal(n)
    b, tau = (strategy_prior or StrategyPrior()).sample(m, g)
    noise = g.standard_normal((m, n))
    return Environment(plan, lay, prior, target, y, b, tau, noise, tau_cap, epsilon_var)


def target_utilities(
    env: Environment,
    bias: float,
    reliability: float,
    z_target: np.ndarray,
    y_batch: np.ndarray | None = None,
    true_reference: bool = False,
    backend: str | None = None,
) -> np.ndarray:
    """Target's total transfer (alpha = 1) for each row of standardized draws.

    ``z_target`` is (R, n); ``y_batch`` (R, n) replaces the frozen true
    scores per replica when given.
    """
    lay = env.layout
    R = z_target.shape[0]
    ti = env.target_index
    sig = 1.0 / np.sqrt(env.reliabilities)
    sig_t = 1.0 / math.sqrt(reliability)
    rows = np.arange(len(lay.evaluators))[:, None]

    dev1 = env.biases[:, None] + sig[:, None] * env.noise[rows, lay.probe_papers]
    dev = np.broadcast_to(dev1, (R,) + dev1.shape).copy()
    dev[:, ti, :] = bias + sig_t * z_target[:, lay.probe_papers[ti]]

    if y_batch is None:
        y_batch = np.broadcast_to(env.y, (R, env.y.size))
    off = env.biases[:, None] + sig[:, None] * env.noise[rows, lay.slot_papers]
    np_reports = y_batch[:, lay.slot_papers] + off[None, :, :]
    np_reports[:, ti, :] = y_batch[:, lay.slot_papers[ti]] + bias + sig_t * z_target[:, lay.slot_papers[ti]]
    y_np = y_batch[:, list(lay.nonprobe_ids)]

    b_hat, tau_hat = estimate_batch(dev, env.tau_cap, env.epsilon_var, backend)
    _, t = score_batch(
        b_hat, tau_hat, np_reports, lay.graders, y_np, env.prior.mu,
        math.sqrt(env.prior.gamma), true_reference, 1.0, backend,
    )
    out = np.zeros(R)
    for k in range(t.shape[2]):
        out += t[:, ti, k]
    return out


@dataclass(frozen=True)
class StrategySweep:
    target: int
    grid: tuple[tuple[float, float], ...]  # (bias, reliability) points
    replicas: int
    common_random_numbers: bool = True
    environment: Environment | None = None

    def __post_init__(self) -> None:
        if not self.grid:
            raise ValueError("strategy sweep needs at least one grid point")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")


@dataclass
class PropertyReport:
    check: str
    mode: str
    grid: list[tuple[float, float]]
    utilities: np.ndarray  # (grid points, replicas)
    verdicts: dict[str, bool] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def means(self) -> np.ndarray:
        return self.utilities.mean(axis=1)

    @property
    def ci_halfwidths(self) -> np.ndarray:
        R = self.utilities.shape[1]
        if R < 2:
            return np.zeros(len(self.grid))
        return Z95 * self.utilities.std(axis=1, ddof=1) / math.sqrt(R)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    def summary(self) -> dict:
        return {
            "check": self.check,
            "mode": self.mode,
            "passed": self.passed,
            "grid": [[_num(v) for v in p] for p in self.grid],
            "means": [float(v) for v in self.means],
            "ci_halfwidths": [float(v) for v in self.ci_halfwidths],
            "verdicts": dict(self.verdicts),
            "tolerances": dict(self.tolerances),
            "notes": list(self.notes),
            **self.extra,
        }

    def csv_rows(self):
        for g, point in enumerate(self.grid):
            label = f"b={point[0]!r};tau={point[1]!r}"
            for r, u in enumerate(self.utilities[g]):
                yield (f"{self.check}:{self.mode}", label, r, repr(float(u)))


def _failed_precondition(check: str, mode: str, grid, msg: str) -> PropertyReport:
    return PropertyReport(check, mode, list(grid), np.zeros((len(grid), 0)), {"precondition": False}, notes=[msg])


def _y_batch(env: Environment, mode: str, R: int, rng: RngStream) -> np.ndarray | None:
    if mode == "own-noise":
        return None
    if mode == "own-noise-y":
        return env.prior.mu + env.prior.stddev * rng.standard_normal((R, env.y.size))
    raise ValueError(f"unknown conditioning mode {mode!r}")


def check_epbi(
    sweep: StrategySweep,
    rng: RngStream,
    mode: str = "own-noise",
    true_reference: bool = False,
    backend: str | None = None,
) -> PropertyReport:
    """Bias insensitivity over a sweep of biases at one reliability.

    Deterministic branch: with common draws every replica's utility must be
    identical across biases. Statistical branch: with independent draws per
    bias the 95% intervals of the means must pairwise overlap.
    """
    env = sweep.environment
    taus = {tau for _, tau in sweep.grid}
    if len(taus) > 1:
        return _failed_precondition("epbi", mode, sweep.grid, f"reliability varies across bias sweep: {sorted(taus)}")
    if not sweep.common_random_numbers:
        return _failed_precondition("epbi", mode, sweep.grid, "deterministic branch requires common random numbers")
    R, n = sweep.replicas, env.y.size
    crn = rng.child(0)
    z = crn.standard_normal((R, n))
    yb = _y_batch(env, mode, R, crn)
    ref = true_reference
    util = np.stack([target_utilities(env, b, tau, z, yb, ref, backend) for b, tau in sweep.grid])
    spread = float(np.max(util.max(axis=0) - util.min(axis=0))) if R else 0.0

    ind = []
    for g, (b, tau) in enumerate(sweep.grid):
        s = rng.child(1 + g)
        ind.append(target_utilities(env, b, tau, s.standard_normal((R, n)), _y_batch(env, mode, R, s), ref, backend))
    ind = np.stack(ind)
    means = ind.mean(axis=1)
    hw = Z95 * ind.std(axis=1, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(len(means))
    overlap = all(
        abs(means[a] - means[c]) <= hw[a] + hw[c]
        for a in range(len(means))
        for c in range(a + 1, len(means))
    )
    rep = PropertyReport(
        "epbi",
        mode,
        list(sweep.grid),
        util,
        {"deterministic_identity": spread <= IDENTITY_TOL, "independent_ci_overlap": bool(overlap)},
        {"deterministic_identity": IDENTITY_TOL, "ci_level": 0.95},
    )
    rep.extra = {
        "max_abs_spread": spread,
        "independent_means": [float(v) for v in means],
        "independent_ci_halfwidths": [float(v) for v in hw],
    }
    return rep


def eprm_verdict(means: Sequence[float], halfwidths: Sequence[float], se: Sequence[float] | None = None) -> tuple[bool, list[float]]:
    """Adjacent decreases must stay within the pooled 95% half-width.

    Points are assumed sorted by increasing reliability. Returns the verdict
    and the per-step slack (tolerance minus decrease).
    """
    slack = []
    for k in range(len(means) - 1):
        pooled = math.hypot(halfwidths[k], halfwidths[k + 1])
        slack.append(pooled - (means[k] - means[k + 1]))
    return all(s >= 0 for s in slack), slack


def check_eprm(
    sweep: StrategySweep,
    rng: RngStream,
    mode: str = "own-noise",
    true_reference: bool = False,
    min_replicas: int = 1000,
    backend: str | None = None,
) -> PropertyReport:
    """Reliability monotonicity over a sweep of reliabilities at one bias."""
    env = sweep.environment
    biases = {b for b, _ in sweep.grid}
    if len(biases) > 1:
        return _failed_precondition("eprm", mode, sweep.grid, f"bias varies across reliability sweep: {sorted(biases)}")
    if sweep.replicas < min_replicas:
        raise ValueError(f"statistical reliability check needs >= {min_replicas} replicas, got {sweep.replicas}")
    grid = sorted(sweep.grid, key=lambda p: p[1])
    R, n = sweep.replicas, env.y.size
    util = []
    for g, (b, tau) in enumerate(grid):
        s = rng.child(0 if sweep.common_random_numbers else 1 + g)
        util.append(target_utilities(env, b, tau, s.standard_normal((R, n)), _y_batch(env, mode, R, s), true_reference, backend))
    rep = PropertyReport("eprm", mode, grid, np.stack(util), tolerances={"ci_level": 0.95})
    ok, slack = eprm_verdict(rep.means, rep.ci_halfwidths)
    rep.verdicts["non_decreasing"] = ok
    rep.extra = {"slack": [float(s) for s in slack], "reference": "true" if true_reference else "regrade"}
    return rep


@dataclass(frozen=True)
class PointwiseInstance:
    """One non-probe paper with the target and a frozen set of co-graders.

    ``others`` holds ``(params, report)`` for each other grader of the paper.
    """

    prior: Prior
    y: float
    bias: float
    probe_truth: tuple[float, ...]
    probe_std: tuple[float, ...]  # target's standardized draws on its probes
    paper_std: float  # target's standardized draw on the paper
    others: tuple[tuple[EstimatedParams, float], ...] = ()
    tau_cap: float = TAU_CAP


def random_pointwise_instance(rng: RngStream, x: int = 2, max_others: int = 2, prior: Prior | None = None) -> PointwiseInstance:
    prior = prior or Prior(50.0, rng.uniform(0.005, 1.0))
    y = float(prior.mu + prior.stddev * rng.standard_normal())
    k = int(rng.integers(0, max_others + 1))
    others = []
    for _ in range(k):
        b = float(rng.normal(0, 2))
        tau = float(np.exp(rng.uniform(math.log(0.05), math.log(5))))
        p = EstimatedParams(float(b + rng.normal(0, 0.5)), tau, x)
        others.append((p, float(y + b + rng.standard_normal() / math.sqrt(tau))))
    return PointwiseInstance(
        prior,
        y,
        float(rng.normal(0, 3)),
        tuple(float(v) for v in prior.mu + prior.stddev * rng.standard_normal(x)),
        tuple(float(v) for v in rng.standard_normal(x)),
        float(rng.standard_normal()),
        tuple(others),
    )


def pointwise_pipeline(inst: PointwiseInstance, sigma: float) -> tuple[float, EstimatedParams]:
    """``|r* - y|`` produced by estimation and aggregation at noise scale ``sigma``."""
    probes = range(len(inst.probe_truth))
    reports = {k: inst.probe_truth[k] + inst.bias + sigma * inst.probe_std[k] for k in probes}
    p = estimate_params(reports, dict(enumerate(inst.probe_truth)), tau_cap=inst.tau_cap)
    TARGET = -1
    on_paper = {TARGET: inst.y + inst.bias + sigma * inst.paper_std}
    params = {TARGET: p}
    for idx, (op, rep) in enumerate(inst.others):
        on_paper[idx] = rep
        params[idx] = op
    return abs(iswdm(on_paper, params, inst.prior) - inst.y), p


def pointwise_closed_form(inst: PointwiseInstance, sigma: float) -> float:
    """``sigma |A| / (sigma B + 1)`` with the target's noise scale factored out.

    ``Z`` and ``X`` are the numerator and denominator contributed by the prior
    and the other graders relative to ``y``; ``s`` is the target's
    standardized residual spread with the ``x - 1`` normalization used by the
    reliability estimator, so that ``sqrt(tau_hat) = 1 / (sigma s)``.
    """
    sg = math.sqrt(inst.prior.gamma)
    Z = sg * (inst.prior.mu - inst.y) + sum(math.sqrt(p.tau_hat) * (r - p.b_hat - inst.y) for p, r in inst.others)
    X = sg + sum(math.sqrt(p.tau_hat) for p, _ in inst.others)
    x = len(inst.probe_std)
    mbar = math.fsum(inst.probe_std) / x
    s = math.sqrt(math.fsum((v - mbar) ** 2 for v in inst.probe_std) / (x - 1))
    A = Z * s + (inst.paper_std - mbar)
    B = X * s
    return sigma * abs(A) / (sigma * B + 1)


def check_pointwise_monotonicity(inst: PointwiseInstance, sigma_grid: Sequence[float]) -> PropertyReport:
    """Pipeline vs closed form, and monotonicity of ``|r* - y|`` in the noise scale.

    The closed form assumes the reliability estimate is not capped; grid
    points where the cap binds (including ``sigma = 0``) are only checked for
    monotonicity.
    """
    sigmas = sorted(sigma_grid)
    vals, forms, capped = [], [], []
    for s in sigmas:
        v, p = pointwise_pipeline(inst, s)
        vals.append(v)
        forms.append(pointwise_closed_form(inst, s))
        capped.append(p.tau_hat >= inst.tau_cap)
    err = max((abs(v - f) for v, f, c in zip(vals, forms, capped) if not c), default=0.0)
    mono = all(vals[k + 1] >= vals[k] - IDENTITY_TOL for k in range(len(vals) - 1))
    grid = [(inst.bias, math.inf if s == 0 else 1.0 / (s * s)) for s in sigmas]
    rep = PropertyReport(
        "pointwise",
        "frozen",
        grid,
        np.array(vals)[:, None],
        {"matches_closed_form": err <= IDENTITY_TOL, "non_decreasing": mono},
        {"closed_form": IDENTITY_TOL, "monotone": IDENTITY_TOL},
    )
    rep.extra = {
        "sigmas": sigmas,
        "pipeline": vals,
        "closed_form": forms,
        "capped": capped,
        "max_abs_error": err,
    }
    return rep


def run_experiment(cfg: RunConfig, checks: Sequence[str] | None = None, modes: Sequence[str] | None = None,
                   out_dir: str | Path | None = None, backend: str | None = None) -> list[PropertyReport]:
    """Run the configured checks and write ``properties.csv`` and ``verdicts.json``."""
    h = cfg.harness
    checks = list(checks or h.checks)
    modes = list(modes or h.modes)
    exam = cfg.exam
    root = RngStream(cfg.seed)
    sp = StrategyPrior(cfg.budget.bias_sd, cfg.budget.tau_min, cfg.budget.tau_max)
    env = make_environment(
        exam.n, exam.m, exam.ell, exam.K, exam.prior, root.child(1), exam.coverage, h.target, sp,
        exam.tau_cap, exam.epsilon_var,
    )
    true_ref = h.reference == "true"
    reports: list[PropertyReport] = []
    for mode in modes:
        if "epbi" in checks:
            sweep = StrategySweep(h.target, tuple((b, h.fixed_tau) for b in h.bias_grid), h.replicas, True, env)
            reports.append(check_epbi(sweep, root.child(2), mode, true_ref, backend))
        if "eprm" in checks:
            sweep = StrategySweep(h.target, tuple((h.fixed_bias, t) for t in h.tau_grid), h.replicas, True, env)
            reports.append(check_eprm(sweep, root.child(3), mode, true_ref, backend=backend))
    if "pointwise" in checks:
        prng = root.child(4)
        x = exam.K // 2
        for k in range(h.instances):
            inst = random_pointwise_instance(prng.child(k), x=x, prior=exam.prior)
            reports.append(check_pointwise_monotonicity(inst, h.sigma_grid))
    if out_dir is not None:
        write_reports(reports, out_dir, cfg)
    return reports


def write_reports(reports: Sequence[PropertyReport], out_dir: str | Path, cfg: RunConfig | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("check", "grid_point", "replica", "utility"))
    for rep in reports:
        w.writerows(rep.csv_rows())
    (out / "properties.csv").write_text(buf.getvalue())
    doc = {
        "seed": None if cfg is None else cfg.seed,
        "passed": all(r.passed for r in reports),
        "reports": [r.summary() for r in reports],
    }
    (out / "verdicts.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _num(v):
    v = float(v)
    return "inf" if math.isinf(v) else v


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(v)}")
