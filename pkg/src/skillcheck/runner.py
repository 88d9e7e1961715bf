"""Drive a simulated exam through the ledger, end to end.

True scores and evaluator reports come from the generative model; the
instructor grades probes and regrade requests with the true score, and
candidates contest exactly when their released score is below it. Scores
cross into the ledger clipped to the score interval.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .budget import BudgetConfig, StrategyPrior, calibrate_alpha
from .config import RunConfig
from .ledger import ExamParams, Ledger, Role
from .pg1_model import EvaluatorStrategy, RngStream, clip_scores, report_from_standardized
from .scoring import write_score_csv

__all__ = ["ExamRun", "run_exam", "write_outputs"]


@dataclass
class ExamRun:
    ledger: Ledger
    exam_id: str
    payout: dict
    alpha: float
    true_scores: dict[int, float]


def run_exam(cfg: RunConfig) -> ExamRun:
    exam = cfg.exam
    rng = RngStream(cfg.seed)
    led = Ledger(seed=cfg.seed, reserve=cfg.reserve)
    instructor = "instructor"
    candidates = [f"cand{k:02d}" for k in range(exam.n)]
    evaluators = [f"eval{k:02d}" for k in range(exam.m)]
    viewer = "recruiter"
    for u in [instructor, *candidates, *evaluators, viewer]:
        led.mint(u, cfg.initial_balance)

    params = ExamParams(
        ell=exam.ell,
        K=exam.K,
        coverage=exam.coverage,
        mu=exam.prior.mu,
        gamma=exam.prior.gamma,
        score_min=exam.interval[0],
        score_max=exam.interval[1],
        max_attempts=exam.max_attempts,
        tau_cap=exam.tau_cap,
        epsilon_var=exam.epsilon_var,
    )
    xid = led.create_exam(instructor, exam.fees, params)
    for c in candidates:
        led.enrol(xid, c, Role.CANDIDATE)
    for e in evaluators:
        led.enrol(xid, e, Role.EVALUATOR)
    led.open_submission(xid, instructor)
    for c in candidates:
        led.submit_answers(xid, c, f"answers of {c}")
    plan = led.close_submission(xid, instructor)

    g = rng.child(10)
    y = exam.prior.mu + exam.prior.stddev * g.standard_normal(exam.n)
    if cfg.evaluator_biases is not None:
        biases = np.array(cfg.evaluator_biases)
    else:
        biases = g.normal(0.0, cfg.budget.bias_sd, exam.m)
    if cfg.evaluator_reliabilities is not None:
        rels = np.array(cfg.evaluator_reliabilities)
    else:
        rels = np.exp(g.uniform(np.log(cfg.budget.tau_min), np.log(cfg.budget.tau_max), exam.m))
    noise = g.standard_normal((exam.m, exam.n))
    shown = clip_scores(y, exam.interval)

    led.record_probe_grades(xid, instructor, {j: float(shown[j]) for j in sorted(plan.probe_ids)})
    for i, e in enumerate(evaluators):
        s = EvaluatorStrategy(float(biases[i]), float(rels[i]))
        bundle = plan.per_evaluator[i].bundle
        rep = {j: float(report_from_standardized(y[j], s, noise[i, j])) for j in bundle}
        led.record_evaluations(xid, e, {j: float(clip_scores(v, exam.interval)) for j, v in rep.items()})

    released = led.compute_and_release(xid)
    paper_owner = {j: c for j, c in enumerate(candidates)}
    for j in sorted(released):
        if j in plan.probe_ids:
            continue
        if shown[j] > released[j]:
            led.file_regrade(xid, paper_owner[j])
            led.decide_regrade(xid, instructor, j, float(shown[j]))

    alpha = exam.alpha
    if cfg.calibrate_alpha:
        sp = StrategyPrior(cfg.budget.bias_sd, cfg.budget.tau_min, cfg.budget.tau_max)
        bc = BudgetConfig(cfg.budget.k_net, cfg.budget.safety_margin, cfg.budget.mc_samples, sp)
        alpha = calibrate_alpha(exam, bc, rng.child(20)).alpha
    payout = led.finalize(xid, instructor, alpha)
    led.view_certificate(xid, viewer, candidates[0])
    return ExamRun(led, xid, payout, alpha, {j: float(v) for j, v in enumerate(y)})


def write_outputs(run: ExamRun, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, sheet = run.ledger.score_records(run.exam_id)
    paths = {
        "scores": out / "scores.csv",
        "payout": out / "payout.json",
        "events": out / "events.log",
        "state": out / "state.json",
    }
    paths["scores"].write_text(write_score_csv(records, sheet))
    paths["payout"].write_text(json.dumps(run.payout, indent=2, sort_keys=True) + "\n")
    run.ledger.log.write(paths["events"])
    paths["state"].write_text(json.dumps(run.ledger.state_dict(), indent=2, sort_keys=True) + "\n")
    return paths
