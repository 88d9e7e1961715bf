"""Acceptance criteria, one PASS/FAIL line each.

The lines are echoed in pytest's terminal summary. Run this file directly to
see them as they are produced.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import random_exam
from oracles import oracle_paper, validate_plan_dict
from skillcheck.assignment import InfeasibleAssignment, build_assignment, check_feasibility
from skillcheck.budget import BudgetConfig, StrategyPrior, calibrate_alpha, simulate_payouts, validate_calibration
from skillcheck.config import load_config
from skillcheck.estimation import estimate_params
from skillcheck.eventlog import verify_bytes
from skillcheck.harness import (
    StrategySweep,
    check_eprm,
    check_pointwise_monotonicity,
    make_environment,
    random_pointwise_instance,
)
from skillcheck.ledger import Phase, replay
from skillcheck.pg1_model import Prior, RngStream
from skillcheck.runner import run_exam
from skillcheck.scoring import ReferenceMode, resolve_regrades, score_exam, transfers

ROOT = Path(__file__).parent.parent


def report(number, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pipeline(plan, prior, y, reports):
    truth = {j: float(v) for j, v in enumerate(y)}
    params, recs = score_exam(plan, reports, {j: truth[j] for j in plan.probe_ids}, prior)
    recs = resolve_regrades(recs, truth)
    return params, recs, transfers(plan, recs, params, prior, 1.0, ReferenceMode.REGRADE)


def test_c1_bias_shift_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(100):
        plan, prior, y, reports = random_exam(1000 + seed, n_max=50, m_max=10)
        _, recs, sheet = pipeline(plan, prior, y, reports)
        target = plan.evaluators[seed % len(plan.evaluators)]
        for c in (-10.0, -1.0, 0.5, 7.0):
            shifted = dict(reports)
            shifted[target] = {j: v + c for j, v in reports[target].items()}
            _, recs2, sheet2 = pipeline(plan, prior, y, shifted)
            for a, b in zip(recs, recs2):
                worst = max(worst, abs(a.aggregated - b.aggregated), abs(a.final_grade - b.final_grade))
            for k in sheet.per_paper:
                worst = max(worst, abs(sheet.per_paper[k] - sheet2.per_paper[k]))
    dt = time.perf_counter() - t0
    ok = report(1, worst < 1e-9 and dt < 10, f"bias shift max change {worst:.2e} (< 1e-9), {dt:.2f}s (< 10s)")
    assert ok


def test_c2_pointwise_sigma_monotonicity():
    t0 = time.perf_counter()
    root = RngStream(2024, 2)
    bad, err = 0, 0.0
    for k in range(100):
        inst = random_pointwise_instance(root.child(k), x=2 + k % 4)
        rep = check_pointwise_monotonicity(inst, [0.25, 0.5, 1, 2, 4])
        bad += not rep.passed
        err = max(err, rep.extra["max_abs_error"])
    dt = time.perf_counter() - t0
    ok = report(2, bad == 0 and dt < 5, f"{100 - bad}/100 instances, closed-form error {err:.2e} (< 1e-9), {dt:.2f}s (< 5s)")
    assert ok


def test_c3_statistical_eprm():
    # the literal m=5 desk scale cannot cover 40 non-probes with K/2 = 2 each
    with pytest.raises(InfeasibleAssignment, match=r"m\*K/2"):
        check_feasibility(50, 5, 10, 4, 1)
    cfg = load_config(ROOT / "configs/properties.cfg")
    ex, h = cfg.exam, cfg.harness
    t0 = time.perf_counter()
    sp = StrategyPrior(cfg.budget.bias_sd, cfg.budget.tau_min, cfg.budget.tau_max)
    root = RngStream(cfg.seed)
    env = make_environment(ex.n, ex.m, ex.ell, ex.K, ex.prior, root.child(1), ex.coverage, h.target, sp)
    grid = tuple((h.fixed_bias, t) for t in (0.25, 1.0, 4.0, 16.0))
    parts, all_ok = [], True
    for mode in ("own-noise", "own-noise-y"):
        rep = check_eprm(StrategySweep(h.target, grid, 10_000, True, env), root.child(3), mode)
        all_ok &= rep.passed
        parts.append(f"{mode} means {np.round(rep.means, 3).tolist()} min slack {min(rep.extra['slack']):.3f}")
    dt = time.perf_counter() - t0
    ok = report(3, all_ok and dt < 120, f"n=50 m={ex.m} K=4 ell=10; " + "; ".join(parts) + f"; {dt:.1f}s (< 120s)")

    # context: the same check across 20 independent environments
    tally = {}
    for mode in ("own-noise", "own-noise-y"):
        tally[mode] = sum(
            check_eprm(
                StrategySweep(0, grid, 10_000, True, make_environment(ex.n, ex.m, ex.ell, ex.K, ex.prior, RngStream(s, 1), 1, 0, sp)),
                RngStream(s, 3),
                mode,
            ).passed
            for s in range(20)
        )
    line = f"INFO criterion 3: holds in {tally['own-noise']}/20 environments (own-noise), {tally['own-noise-y']}/20 (own-noise-y)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok


def test_c4_estimator_consistency():
    t0 = time.perf_counter()
    g = RngStream(404)
    x, good = 10_000, 0
    for trial in range(200):
        b = float(g.normal(0, 3))
        tau = float(np.exp(g.uniform(math.log(0.05), math.log(20))))
        sigma = 1 / math.sqrt(tau)
        truth = g.normal(50, 10, x)
        reports = truth + b + sigma * g.standard_normal(x)
        p = estimate_params(dict(enumerate(reports.tolist())), dict(enumerate(truth.tolist())))
        good += abs(p.b_hat - b) < 5 * sigma / math.sqrt(x) and 0.9 <= p.tau_hat / tau <= 1.1
    dt = time.perf_counter() - t0
    ok = report(4, good >= 190 and dt < 30, f"{good}/200 trials within bounds (>= 190), {dt:.1f}s (< 30s)")
    assert ok


def test_c5_budget_balance():
    with pytest.raises(InfeasibleAssignment, match=r"m\*K/2"):
        check_feasibility(50, 10, 10, 4, 1)
    cfg = load_config(ROOT / "configs/calibrate.cfg")
    b = cfg.budget
    t0 = time.perf_counter()
    bc = BudgetConfig(b.k_net, 0.2, b.mc_samples, StrategyPrior(b.bias_sd, b.tau_min, b.tau_max))
    cal = calibrate_alpha(cfg.exam, bc, RngStream(cfg.seed))

    one = simulate_payouts(cfg.exam, bc.strategy_prior, 200, RngStream(cfg.seed, 9))
    scaled = simulate_payouts(cfg.exam, bc.strategy_prior, 200, RngStream(cfg.seed, 9), alpha=cal.alpha)
    linear = bool(np.array_equal(scaled, cal.alpha * one))

    paid = validate_calibration(cfg.exam, bc, cal.alpha, 200, cfg.seed + 1)
    frac = float(np.mean(paid <= b.k_net))
    unit = paid / cal.alpha
    needed = 1 - cal.estimate / float(np.quantile(unit, 0.95))
    dt = time.perf_counter() - t0
    ok = report(
        5,
        frac >= 0.95 and linear and dt < 60,
        f"alpha={cal.alpha:.4g}; mean payout {paid.mean():.1f} vs K_net {b.k_net:g}; "
        f"within K_net in {frac:.1%} of 200 replays (>= 95%); linearity exact: {linear}; "
        f"payout CV {unit.std(ddof=1) / unit.mean():.3f}, margin needed for 95% about {needed:.2f}; {dt:.1f}s (< 60s)",
    )
    assert ok


def test_c6_scoring_oracle_equivalence():
    worst, papers, neg = 0.0, 0, 0
    for seed in range(1000):
        plan, prior, y, reports = random_exam(5000 + seed, n_max=30, m_max=8, max_cov=3)
        params, recs, sheet = pipeline(plan, prior, y, reports)
        for rec in recs:
            if rec.is_probe or len(rec.reports) > 3:
                continue
            papers += 1
            gs = sorted(rec.reports)
            entries = [(reports[i][rec.paper_id], params[i].b_hat, params[i].tau_hat) for i in gs]
            r, ts = oracle_paper(prior.mu, prior.gamma, entries, y[rec.paper_id], 1.0)
            worst = max(worst, abs(rec.aggregated - r))
            for i, t in zip(gs, ts):
                got = sheet.per_paper[(i, rec.paper_id)]
                worst = max(worst, abs(got - t))
                neg += (not rec.regraded) and got < 0
    ok = report(6, worst < 1e-9 and neg == 0, f"{papers} papers, max deviation {worst:.2e} (< 1e-9), negative no-regrade transfers {neg}")
    assert ok


def test_c7_ledger_soundness():
    with pytest.raises(InfeasibleAssignment):
        check_feasibility(6, 2, 2, 2, 1)
    t0 = time.perf_counter()
    run = run_exam(load_config(ROOT / "configs/demo_exam.cfg"))
    led = run.ledger
    finalized = led.phase(run.exam_id) is Phase.FINALIZED
    conserved = led.total_tokens() == led.minted
    same = replay(led.log).state_bytes() == led.state_bytes()
    data = led.log.to_bytes()
    missed = 0
    for k in range(len(data)):
        bad = bytearray(data)
        bad[k] ^= 0xFF
        missed += verify_bytes(bytes(bad))
    dt = time.perf_counter() - t0
    ok = report(
        7,
        finalized and conserved and same and missed == 0 and dt < 5,
        f"finalized {finalized}, conservation {conserved}, replay identical {same}, "
        f"undetected tampers {missed}/{len(data)}, {dt:.2f}s (< 5s)",
    )
    assert ok


def _violations(n, m, ell, K, cov):
    """Every inequality the tuple breaks, evaluated independently."""
    out = set()
    if K % 2 or K < 2:
        out.add("K even and K >= 2")
        return out
    h = K // 2
    if m < 1:
        out.add("m >= 1")
    if cov < 1:
        out.add("coverage >= 1")
    if not ell < n:
        out.add("ell < n")
    if not ell >= h:
        out.add("ell >= K/2")
    if not n - ell >= h:
        out.add("n - ell >= K/2")
    if not m * h >= cov * (n - ell):
        out.add("m*K/2 >= coverage*(n - ell)")
    if not cov <= m:
        out.add("coverage <= m")
    return out


def test_c8_assignment_validity():
    g = RngStream(8, 8)
    feasible = infeasible = bad = 0
    while feasible < 1000:
        n = int(g.integers(2, 60))
        m = int(g.integers(0, 25))
        K = int(g.integers(1, 9))
        ell = int(g.integers(0, n + 1))
        cov = int(g.integers(0, 4))
        viol = _violations(n, m, ell, K, cov)
        try:
            plan = build_assignment(n, m, ell, K, cov, g.child(feasible + infeasible))
        except InfeasibleAssignment as e:
            infeasible += 1
            bad += e.inequality not in viol
            continue
        feasible += 1
        bad += bool(viol) or bool(validate_plan_dict(plan.to_dict(), n, m, ell, K, cov))
    ok = report(8, bad == 0, f"{feasible} feasible plans valid, {infeasible} infeasible tuples rejected, {bad} errors")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
