"""Score aggregation, regrade resolution, welfare and evaluator transfers.

Non-probe papers are scored by the inverse standard-deviation weighted
de-biased mean (ISWDM) of their graders' reports, shrunk toward the prior
mean. Each grader is paid ``alpha`` times its marginal contribution to the
paper's welfare, i.e. welfare with its report minus welfare without it.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

from .assignment import AssignmentPlan
from .estimation import EstimatedParams, estimate_params
from .pg1_model import Prior

__all__ = [
    "RegradePolicy",
    "ReferenceMode",
    "PaperScoreRecord",
    "WelfareRecord",
    "TransferSheet",
    "iswdm",
    "welfare",
    "score_papers",
    "score_exam",
    "resolve_regrades",
    "apply_regrade",
    "reference_score",
    "paper_welfare",
    "transfers",
    "write_score_csv",
]


class RegradePolicy(enum.Enum):
    # candidate contests exactly when the released score is below the truth
    RATIONAL = "rational"
    NONE = "none"


class ReferenceMode(enum.Enum):
    # uncontested papers are judged against r*, contested ones against y
    REGRADE = "regrade"
    # ablation: always judge against the true score
    TRUE = "true"


@dataclass(frozen=True)
class PaperScoreRecord:
    paper_id: int
    reports: Mapping[int, float]
    aggregated: float
    true_score: float | None = None
    regraded: bool = False
    is_probe: bool = False
    final_grade: float = float("nan")

    def __post_init__(self) -> None:
        if math.isnan(self.final_grade):
            object.__setattr__(self, "final_grade", self._expected_final())
        if self.regraded and self.true_score is None:
            raise ValueError(f"paper {self.paper_id}: regraded without a true score")

    def _expected_final(self) -> float:
        if (self.regraded or self.is_probe) and self.true_score is not None:
            return self.true_score
        return self.aggregated


@dataclass(frozen=True)
class WelfareRecord:
    with_all: float
    without: Mapping[int, float]


@dataclass
class TransferSheet:
    alpha: float
    per_paper: dict[tuple[int, int], float] = field(default_factory=dict)
    totals: dict[int, float] = field(default_factory=dict)
    welfare: dict[int, WelfareRecord] = field(default_factory=dict)

    def total(self) -> float:
        return math.fsum(self.totals[i] for i in sorted(self.totals))


def iswdm(
    reports: Mapping[int, float],
    params: Mapping[int, EstimatedParams],
    prior: Prior,
    *,
    allow_empty: bool = False,
) -> float:
    """De-biased reports weighted by ``sqrt(tau_hat)``, plus ``sqrt(gamma)`` on the prior mean.

    An empty report set is an error unless ``allow_empty`` is set, in which
    case the prior mean is returned (the leave-one-out fallback).
    """
    if not reports:
        if allow_empty:
            return prior.mu
        raise ValueError("ISWDM needs at least one report")
    sg = math.sqrt(prior.gamma)
    num = sg * prior.mu
    den = sg
    for i in sorted(reports):
        p = params[i]
        w = math.sqrt(p.tau_hat)
        num += w * (reports[i] - p.b_hat)
        den += w
    return num / den


def welfare(aggregate: float, reference: float) -> float:
    """Negative squared error."""
    d = aggregate - reference
    return -(d * d)


def score_papers(
    plan: AssignmentPlan,
    reports: Mapping[int, Mapping[int, float]],
    params: Mapping[int, EstimatedParams],
    prior: Prior,
    probe_truth: Mapping[int, float],
) -> list[PaperScoreRecord]:
    """One record per paper; probes take their instructor grade.

    ``reports[i][j]`` is evaluator ``i``'s score for paper ``j``.
    """
    graders = plan.graders_by_paper()
    out = []
    for j in range(plan.n):
        if j in plan.probe_ids:
            on_j = {i: reports[i][j] for i in plan.evaluators if j in plan.probes_of(i)}
            y = probe_truth[j]
            out.append(PaperScoreRecord(j, on_j, y, true_score=y, is_probe=True))
        else:
            on_j = {i: reports[i][j] for i in graders[j]}
            out.append(PaperScoreRecord(j, on_j, iswdm(on_j, params, prior)))
    return out


def score_exam(
    plan: AssignmentPlan,
    reports: Mapping[int, Mapping[int, float]],
    probe_truth: Mapping[int, float],
    prior: Prior,
    **estimate_kw,
) -> tuple[dict[int, EstimatedParams], list[PaperScoreRecord]]:
    """Estimate every evaluator from its probes, then aggregate all papers."""
    params = {}
    for i in plan.evaluators:
        ps = plan.probes_of(i)
        params[i] = estimate_params(
            {j: reports[i][j] for j in ps}, {j: probe_truth[j] for j in ps}, **estimate_kw
        )
    return params, score_papers(plan, reports, params, prior, probe_truth)


def apply_regrade(record: PaperScoreRecord, instructor_score: float) -> PaperScoreRecord:
    """Instructor re-examination: the final grade never drops below the released one."""
    regraded = instructor_score > record.aggregated
    return replace(
        record,
        true_score=instructor_score,
        regraded=regraded,
        final_grade=max(record.aggregated, instructor_score),
    )


def resolve_regrades(
    records: Iterable[PaperScoreRecord],
    true_scores: Mapping[int, float],
    policy: RegradePolicy = RegradePolicy.RATIONAL,
) -> list[PaperScoreRecord]:
    """Apply the candidates' regrade decisions.

    Under the rational policy a paper is regraded iff ``y > r*``; ties are
    not contested. True scores of non-regraded papers are still attached
    (simulation knows them) but do not change the final grade.
    """
    out = []
    for rec in records:
        if rec.is_probe:
            out.append(rec)
            continue
        if policy is RegradePolicy.NONE:
            y = true_scores.get(rec.paper_id)
            out.append(replace(rec, true_score=y, regraded=False, final_grade=rec.aggregated))
            continue
        if rec.paper_id not in true_scores:
            raise KeyError(f"missing true score for non-probe paper {rec.paper_id}")
        y = true_scores[rec.paper_id]
        regraded = y > rec.aggregated
        out.append(
            replace(
                rec,
                true_score=y,
                regraded=regraded,
                final_grade=y if regraded else rec.aggregated,
            )
        )
    return out


def reference_score(rec: PaperScoreRecord, mode: ReferenceMode = ReferenceMode.REGRADE) -> float:
    """Score the welfare of ``rec`` is measured against."""
    if mode is ReferenceMode.TRUE:
        if rec.true_score is None:
            raise ValueError(f"paper {rec.paper_id}: true-reference mode needs a true score")
        return rec.true_score
    if rec.regraded or rec.is_probe:
        return rec.true_score
    return rec.aggregated


def paper_welfare(
    rec: PaperScoreRecord,
    params: Mapping[int, EstimatedParams],
    prior: Prior,
    mode: ReferenceMode = ReferenceMode.REGRADE,
    R: Callable[[float, float], float] = welfare,
) -> WelfareRecord:
    ref = reference_score(rec, mode)
    without = {}
    for i in sorted(rec.reports):
        rest = {k: v for k, v in rec.reports.items() if k != i}
        without[i] = R(iswdm(rest, params, prior, allow_empty=True), ref)
    return WelfareRecord(R(rec.aggregated, ref), without)


def transfers(
    plan: AssignmentPlan,
    records: Iterable[PaperScoreRecord],
    params: Mapping[int, EstimatedParams],
    prior: Prior,
    alpha: float,
    mode: ReferenceMode = ReferenceMode.REGRADE,
    R: Callable[[float, float], float] = welfare,
) -> TransferSheet:
    """Evaluation scores ``alpha * (W* - W^(-i)*)`` on every non-probe assignment."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    by_id = {r.paper_id: r for r in records}
    sheet = TransferSheet(alpha)
    for j in plan.nonprobe_ids:
        rec = by_id[j]
        if rec.is_probe:
            raise ValueError(f"paper {j} is a non-probe in the plan but flagged as probe")
        sheet.welfare[j] = paper_welfare(rec, params, prior, mode, R)
    for i in plan.evaluators:
        parts = []
        for j in sorted(plan.nonprobes_of(i)):
            w = sheet.welfare[j]
            t = alpha * (w.with_all - w.without[i])
            sheet.per_paper[(i, j)] = t
            parts.append(t)
        sheet.totals[i] = math.fsum(parts)
    return sheet


SCORE_CSV_COLUMNS = ("paper_id", "evaluator_id", "report", "r_star", "final", "t")


def write_score_csv(records: Iterable[PaperScoreRecord], sheet: TransferSheet | None, fh=None) -> str:
    """One row per (paper, evaluator) report; probes carry an empty ``t``.

    Returns the CSV text and also writes it to ``fh`` when given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCORE_CSV_COLUMNS)
    for rec in sorted(records, key=lambda r: r.paper_id):
        for i in sorted(rec.reports):
            t = "" if sheet is None or rec.is_probe else _fmt(sheet.per_paper[(i, rec.paper_id)])
            w.writerow(
                [rec.paper_id, i, _fmt(rec.reports[i]), _fmt(rec.aggregated), _fmt(rec.final_grade), t]
            )
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def _fmt(v: float) -> str:
    return repr(float(v))
