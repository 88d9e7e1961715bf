"""Paper-to-evaluator assignment.

Every evaluator receives ``K/2`` probe papers (instructor-graded) and ``K/2``
distinct non-probe papers, shuffled together so that the two kinds cannot be
told apart by position. Probes are shared between evaluators; both probe and
non-probe loads are spread as evenly as possible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .pg1_model import RngStream

__all__ = [
    "InfeasibleAssignment",
    "EvaluatorBundle",
    "AssignmentPlan",
    "check_feasibility",
    "build_assignment",
    "co_evaluators",
]


class InfeasibleAssignment(ValueError):
    """Raised when no plan can satisfy the requested sizes.

    ``inequality`` holds the violated condition in readable form.
    """

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        msg = f"infeasible assignment: requires {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class EvaluatorBundle:
    probes: frozenset[int]
    nonprobes: frozenset[int]
    # presentation order handed to the evaluator
    bundle: tuple[int, ...]


@dataclass(frozen=True)
class AssignmentPlan:
    n: int
    K: int
    probe_ids: frozenset[int]
    per_evaluator: Mapping[int, EvaluatorBundle]

    @property
    def evaluators(self) -> list[int]:
        return sorted(self.per_evaluator)

    @property
    def nonprobe_ids(self) -> list[int]:
        return [j for j in range(self.n) if j not in self.probe_ids]

    def probes_of(self, i: int) -> frozenset[int]:
        return self.per_evaluator[i].probes

    def nonprobes_of(self, i: int) -> frozenset[int]:
        return self.per_evaluator[i].nonprobes

    def graders_of(self, paper: int) -> list[int]:
        """Sorted evaluators holding ``paper`` as a non-probe."""
        return [i for i in self.evaluators if paper in self.per_evaluator[i].nonprobes]

    def graders_by_paper(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {j: [] for j in self.nonprobe_ids}
        for i in self.evaluators:
            for j in self.per_evaluator[i].nonprobes:
                out[j].append(i)
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "probe_ids": sorted(self.probe_ids),
            "evaluators": [
                {
                    "id": i,
                    "probes": sorted(b.probes),
                    "nonprobes": sorted(b.nonprobes),
                    "bundle": list(b.bundle),
                }
                for i, b in sorted(self.per_evaluator.items())
            ],
        }

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, no whitespace."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "AssignmentPlan":
        per = {
            int(e["id"]): EvaluatorBundle(
                frozenset(e["probes"]), frozenset(e["nonprobes"]), tuple(e["bundle"])
            )
            for e in d["evaluators"]
        }
        return cls(int(d["n"]), int(d["K"]), frozenset(d["probe_ids"]), per)


def check_feasibility(n: int, m: int, ell: int, K: int, coverage: int = 1) -> None:
    """Raise :class:`InfeasibleAssignment` naming the first violated inequality."""
    if K < 2 or K % 2:
        raise InfeasibleAssignment("K even and K >= 2", f"K={K}")
    half = K // 2
    if m < 1:
        raise InfeasibleAssignment("m >= 1", f"m={m}")
    if coverage < 1:
        raise InfeasibleAssignment("coverage >= 1", f"coverage={coverage}")
    if not ell < n:
        raise InfeasibleAssignment("ell < n", f"ell={ell}, n={n}")
    if ell < half:
        raise InfeasibleAssignment("ell >= K/2", f"ell={ell}, K/2={half}")
    if n - ell < half:
        raise InfeasibleAssignment(
            "n - ell >= K/2", f"{n - ell} non-probe papers for {half} distinct non-probe slots"
        )
    if m * half < coverage * (n - ell):
        raise InfeasibleAssignment(
            "m*K/2 >= coverage*(n - ell)", f"{m * half} < {coverage * (n - ell)}"
        )
    if coverage > m:
        raise InfeasibleAssignment("coverage <= m", f"coverage={coverage}, m={m}")


def build_assignment(
    n: int,
    m: int,
    ell: int,
    K: int,
    coverage: int = 1,
    rng: RngStream | None = None,
    evaluator_ids: Sequence[int] | None = None,
) -> AssignmentPlan:
    """Draw a plan for ``n`` papers and ``m`` evaluators.

    Probe papers are chosen uniformly at random. Each evaluator then takes a
    window of ``K/2`` consecutive positions on a randomly ordered and rotated
    cycle of the probes, and likewise on the non-probes. Windows laid end to
    end around a cycle hit every position either ``floor`` or ``ceil`` times,
    which gives the balanced loads; a window never wraps onto itself because
    ``K/2`` does not exceed the cycle length.

    ``evaluator_ids`` relabels the evaluators: the k-th label receives the
    k-th window, so permuting labels permutes the plan.
    """
    check_feasibility(n, m, ell, K, coverage)
    if rng is None:
        rng = RngStream(0)
    ids = list(range(m)) if evaluator_ids is None else list(evaluator_ids)
    if len(ids) != m or len(set(ids)) != m:
        raise ValueError("evaluator_ids must hold m distinct labels")
    half = K // 2

    order = [int(v) for v in rng.permutation(n)]
    probes = sorted(order[:ell])
    nonprobes = sorted(order[ell:])

    probe_cycle = [probes[k] for k in rng.permutation(ell)]
    probe_offset = int(rng.integers(ell))
    np_cycle = [nonprobes[k] for k in rng.permutation(len(nonprobes))]
    np_offset = int(rng.integers(len(nonprobes)))

    per: dict[int, EvaluatorBundle] = {}
    for slot, label in enumerate(ids):
        p = [probe_cycle[(probe_offset + slot * half + k) % ell] for k in range(half)]
        q = [np_cycle[(np_offset + slot * half + k) % len(np_cycle)] for k in range(half)]
        bundle = p + q
        bundle = [bundle[k] for k in rng.permutation(K)]
        per[label] = EvaluatorBundle(frozenset(p), frozenset(q), tuple(bundle))
    return AssignmentPlan(n, K, frozenset(probes), per)


def co_evaluators(plan: AssignmentPlan) -> dict[int, set[int]]:
    """Evaluators sharing at least one non-probe paper with each evaluator."""
    out: dict[int, set[int]] = {i: set() for i in plan.evaluators}
    for graders in plan.graders_by_paper().values():
        for i in graders:
            out[i].update(k for k in graders if k != i)
    return out
