"""Single-node exam ledger: wallets, escrow, roles and the exam lifecycle.

Every successful command is appended to a hash-chained :class:`EventLog` as
``{"op", "args", "effects"}``. Replaying the ops from the log on a fresh
ledger reproduces the state exactly; replay also checks the recorded effects.
A rejected command raises and leaves the state untouched.

Token amounts are integers in units of 1e-6 token. Timestamps are the event
index.
"""
from __future__ import annotations

import copy
import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .assignment import AssignmentPlan, InfeasibleAssignment, build_assignment
from .config import TOKEN_UNIT, FeeSchedule
from .estimation import EPSILON_VAR, TAU_CAP, EstimatedParams, estimate_params
from .eventlog import EventLog, canonical_json
from .pg1_model import Prior, RngStream
from .scoring import (
    PaperScoreRecord,
    ReferenceMode,
    TransferSheet,
    apply_regrade,
    score_papers,
    transfers,
)

__all__ = [
    "Phase",
    "Role",
    "LedgerError",
    "PhaseError",
    "AuthorizationError",
    "InsufficientFunds",
    "ExamParams",
    "Wallet",
    "ExamContract",
    "Ledger",
    "replay",
    "tokens_from_real",
]


class Phase(enum.IntEnum):
    CREATED = 0
    ENROLMENT = 1
    SUBMISSION = 2
    PROBE_GRADING = 3
    EVALUATION = 4
    SCORES_RELEASED = 5
    REGRADE_WINDOW = 6
    FINALIZED = 7


class Role(str, enum.Enum):
    INSTRUCTOR = "instructor"
    EVALUATOR = "evaluator"
    CANDIDATE = "candidate"
    VIEWER = "viewer"


class LedgerError(Exception):
    pass


class PhaseError(LedgerError):
    pass


class AuthorizationError(LedgerError):
    pass


class InsufficientFunds(LedgerError):
    pass


def tokens_from_real(amount: float) -> int:
    """Real token amount to smallest units, rounding half to even."""
    return round(amount * TOKEN_UNIT)


@dataclass(frozen=True)
class ExamParams:
    ell: int
    K: int
    coverage: int = 1
    mu: float = 50.0
    gamma: float = 0.01
    score_min: float = 0.0
    score_max: float = 100.0
    max_attempts: int = 1
    tau_cap: float = TAU_CAP
    epsilon_var: float = EPSILON_VAR

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Wallet:
    owner: str
    balance: int = 0
    skill_scores: dict[str, float] = field(default_factory=dict)
    evaluation_scores: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "balance": self.balance,
            "skill_scores": dict(sorted(self.skill_scores.items())),
            "evaluation_scores": dict(sorted(self.evaluation_scores.items())),
        }


@dataclass
class ExamContract:
    exam_id: str
    instructor: str
    fees: FeeSchedule
    params: ExamParams
    ordinal: int
    phase: Phase = Phase.CREATED
    admin: str | None = None
    escrow: int = 0
    deposits: int = 0
    payouts: int = 0
    roles: dict[str, Role] = field(default_factory=dict)
    candidates: list[str] = field(default_factory=list)
    evaluators: list[str] = field(default_factory=list)
    attempts: dict[str, int] = field(default_factory=dict)
    submissions: dict[str, str] = field(default_factory=dict)
    paper_of: dict[str, int] = field(default_factory=dict)
    plan: AssignmentPlan | None = None
    probe_grades: dict[int, float] = field(default_factory=dict)
    evaluations: dict[str, dict[int, float]] = field(default_factory=dict)
    gas_held: dict[str, int] = field(default_factory=dict)
    released: dict[int, float] = field(default_factory=dict)
    regrade_requests: dict[int, str] = field(default_factory=dict)  # paper -> "pending" | "upheld" | "rejected"
    penalty_held: dict[int, int] = field(default_factory=dict)
    final_grades: dict[int, float] = field(default_factory=dict)
    alerts: list[str] = field(default_factory=list)
    # derived at release; not serialized beyond their JSON forms
    _params: dict[int, EstimatedParams] = field(default_factory=dict, repr=False)
    _records: dict[int, PaperScoreRecord] = field(default_factory=dict, repr=False)
    _sheet: TransferSheet | None = field(default=None, repr=False)

    @property
    def prior(self) -> Prior:
        return Prior(self.params.mu, self.params.gamma)

    def evaluator_index(self, user: str) -> int:
        return self.evaluators.index(user)

    def to_dict(self) -> dict:
        return {
            "exam_id": self.exam_id,
            "instructor": self.instructor,
            "ordinal": self.ordinal,
            "fees": self.fees.to_dict(),
            "params": self.params.to_dict(),
            "phase": self.phase.name,
            "admin": self.admin,
            "escrow": self.escrow,
            "deposits": self.deposits,
            "payouts": self.payouts,
            "roles": {u: r.value for u, r in sorted(self.roles.items())},
            "candidates": list(self.candidates),
            "evaluators": list(self.evaluators),
            "attempts": dict(sorted(self.attempts.items())),
            "submissions": dict(sorted(self.submissions.items())),
            "paper_of": dict(sorted(self.paper_of.items())),
            "plan": None if self.plan is None else self.plan.to_dict(),
            "probe_grades": _keyed(self.probe_grades),
            "evaluations": {u: _keyed(s) for u, s in sorted(self.evaluations.items())},
            "gas_held": dict(sorted(self.gas_held.items())),
            "released": _keyed(self.released),
            "estimates": {
                str(i): [p.b_hat, p.tau_hat, p.probe_count] for i, p in sorted(self._params.items())
            },
            "regrade_requests": _keyed(self.regrade_requests),
            "penalty_held": _keyed(self.penalty_held),
            "final_grades": _keyed(self.final_grades),
            "alerts": list(self.alerts),
        }


def _keyed(d: Mapping[int, Any]) -> dict[str, Any]:
    return {str(k): v for k, v in sorted(d.items())}


def _pairs(scores) -> list[list]:
    items = scores.items() if isinstance(scores, Mapping) else scores
    return sorted([int(k), float(v)] for k, v in items)


def _finite(v: float, what: str) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise LedgerError(f"{what} must be finite, got {v}")
    return v


class Ledger:
    """In-process exam ledger.

    ``seed`` drives the paper assignment of every exam (stream = exam ordinal).
    """

    def __init__(self, seed: int = 0, reserve: int = 0) -> None:
        self.seed = seed
        self.wallets: dict[str, Wallet] = {}
        self.exams: dict[str, ExamContract] = {}
        self.reserve = 0
        self.minted = 0
        self.log = EventLog()
        self._execute("genesis", {"seed": seed, "reserve": reserve})

    # ------------------------------------------------------------------ plumbing

    def _execute(self, op: str, args: dict, expected_effects: Any = None):
        handler = getattr(self, f"_op_{op}", None)
        if handler is None:
            raise LedgerError(f"unknown operation {op!r}")
        args = _json_roundtrip(args)
        snapshot = self._snapshot()
        try:
            result, effects = handler(**args)
        except Exception:
            self._restore(snapshot)
            raise
        effects = _json_roundtrip(effects)
        if expected_effects is not None and effects != expected_effects:
            self._restore(snapshot)
            raise LedgerError(f"replay divergence in {op}: effects differ from log")
        self.log.append({"op": op, "args": args, "effects": effects})
        return result

    def _snapshot(self):
        return copy.deepcopy((self.wallets, self.exams, self.reserve, self.minted))

    def _restore(self, snap) -> None:
        self.wallets, self.exams, self.reserve, self.minted = snap

    def _wallet(self, user: str) -> Wallet:
        if user not in self.wallets:
            raise LedgerError(f"unknown user {user!r}")
        return self.wallets[user]

    def _exam(self, exam_id: str) -> ExamContract:
        if exam_id not in self.exams:
            raise LedgerError(f"unknown exam {exam_id!r}")
        return self.exams[exam_id]

    @staticmethod
    def _require_phase(exam: ExamContract, *phases: Phase) -> None:
        if exam.phase not in phases:
            want = "/".join(p.name for p in phases)
            raise PhaseError(f"{exam.exam_id}: operation needs phase {want}, exam is in {exam.phase.name}")

    @staticmethod
    def _require_admin(exam: ExamContract, caller: str) -> None:
        if exam.admin is None or caller != exam.admin:
            raise AuthorizationError(f"{caller!r} is not the admin of {exam.exam_id}")

    def _charge(self, user: str, exam: ExamContract, amount: int, what: str) -> None:
        w = self._wallet(user)
        if w.balance < amount:
            raise InsufficientFunds(f"{user!r} holds {w.balance} units, {what} costs {amount}")
        w.balance -= amount
        exam.escrow += amount
        exam.deposits += amount

    def _pay(self, exam: ExamContract, user: str, amount: int, effects: dict) -> None:
        """Pay from escrow, drawing any shortfall from the platform reserve."""
        if amount <= 0:
            return
        from_escrow = min(amount, exam.escrow)
        draw = amount - from_escrow
        exam.escrow -= from_escrow
        exam.payouts += from_escrow
        if draw:
            self.reserve -= draw
            msg = f"escrow shortfall of {draw} units paying {user}; drawn from reserve"
            exam.alerts.append(msg)
            effects.setdefault("alerts", []).append(msg)
            effects["reserve_draw"] = effects.get("reserve_draw", 0) + draw
        self._wallet(user).balance += amount

    # ------------------------------------------------------------------ queries

    def total_tokens(self) -> int:
        return sum(w.balance for w in self.wallets.values()) + sum(e.escrow for e in self.exams.values()) + self.reserve

    def conservation_holds(self) -> bool:
        return self.total_tokens() == self.minted

    def balance(self, user: str) -> int:
        return self._wallet(user).balance

    def portfolio(self, user: str) -> dict:
        return self._wallet(user).to_dict()

    def phase(self, exam_id: str) -> Phase:
        return self._exam(exam_id).phase

    def verify_chain(self) -> bool:
        return self.log.verify()

    def score_records(self, exam_id: str) -> tuple[list[PaperScoreRecord], TransferSheet | None]:
        e = self._exam(exam_id)
        return [e._records[j] for j in sorted(e._records)], e._sheet

    def state_dict(self) -> dict:
        return {
            "seed": self.seed,
            "reserve": self.reserve,
            "minted": self.minted,
            "wallets": {u: w.to_dict() for u, w in sorted(self.wallets.items())},
            "exams": {x: e.to_dict() for x, e in sorted(self.exams.items())},
        }

    def state_bytes(self) -> bytes:
        return canonical_json(self.state_dict())

    # ------------------------------------------------------------------ commands

    def mint(self, user: str, amount: int) -> None:
        """Top up a wallet (creating it if new). The only way tokens enter."""
        self._execute("mint", {"user": user, "amount": int(amount)})

    def create_exam(self, instructor: str, fees: FeeSchedule, params: ExamParams) -> str:
        return self._execute("create_exam", {"instructor": instructor, "fees": fees.to_dict(), "params": params.to_dict()})

    def enrol(self, exam_id: str, user: str, role: Role) -> None:
        self._execute("enrol", {"exam": exam_id, "user": user, "role": Role(role).value})

    def open_submission(self, exam_id: str, caller: str) -> None:
        self._execute("open_submission", {"exam": exam_id, "caller": caller})

    def submit_answers(self, exam_id: str, candidate: str, blob: bytes | str) -> str:
        data = blob.encode() if isinstance(blob, str) else bytes(blob)
        digest = hashlib.sha256(data).hexdigest()
        self._execute("submit_answers", {"exam": exam_id, "candidate": candidate, "digest": digest})
        return digest

    def close_submission(self, exam_id: str, caller: str) -> AssignmentPlan:
        return self._execute("close_submission", {"exam": exam_id, "caller": caller})

    def record_probe_grades(self, exam_id: str, caller: str, scores: Mapping[int, float]) -> None:
        self._execute("record_probe_grades", {"exam": exam_id, "caller": caller, "scores": _pairs(scores)})

    def record_evaluations(self, exam_id: str, evaluator: str, scores: Mapping[int, float]) -> None:
        self._execute("record_evaluations", {"exam": exam_id, "evaluator": evaluator, "scores": _pairs(scores)})

    def compute_and_release(self, exam_id: str) -> dict[int, float]:
        return self._execute("compute_and_release", {"exam": exam_id})

    def file_regrade(self, exam_id: str, candidate: str) -> None:
        self._execute("file_regrade", {"exam": exam_id, "candidate": candidate})

    def decide_regrade(self, exam_id: str, caller: str, paper: int, score: float) -> dict:
        return self._execute("decide_regrade", {"exam": exam_id, "caller": caller, "paper": int(paper), "score": float(score)})

    def finalize(self, exam_id: str, caller: str, alpha: float) -> dict:
        return self._execute("finalize", {"exam": exam_id, "caller": caller, "alpha": float(alpha)})

    def view_certificate(self, exam_id: str, viewer: str, user: str) -> dict:
        return self._execute("view_certificate", {"exam": exam_id, "viewer": viewer, "user": user})

    # ------------------------------------------------------------------ handlers

    def _op_genesis(self, seed: int, reserve: int):
        if len(self.log):
            raise LedgerError("genesis must be the first entry")
        if reserve < 0:
            raise LedgerError("initial reserve must be non-negative")
        self.seed = seed
        self.reserve = reserve
        self.minted = reserve
        return None, {}

    def _op_mint(self, user: str, amount: int):
        if amount <= 0:
            raise LedgerError(f"mint amount must be positive, got {amount}")
        self.wallets.setdefault(user, Wallet(user)).balance += amount
        self.minted += amount
        return None, {"balance": self.wallets[user].balance}

    def _op_create_exam(self, instructor: str, fees: dict, params: dict):
        fees_ = FeeSchedule(**fees)
        params_ = ExamParams(**params)
        if min(v for k, v in fees.items() if k != "penalty_enabled") < 0:
            raise LedgerError("fees must be non-negative")
        if params_.K % 2 or params_.K < 4:
            raise LedgerError(f"K must be even and >= 4 (two probes per evaluator), got {params_.K}")
        Prior(params_.mu, params_.gamma).check_interval((params_.score_min, params_.score_max))
        ordinal = len(self.exams) + 1
        exam_id = f"exam-{ordinal}"
        exam = ExamContract(exam_id, instructor, fees_, params_, ordinal)
        self._charge(instructor, exam, fees_.instructor_fee, "instructor fee")
        exam.roles[instructor] = Role.INSTRUCTOR
        exam.admin = instructor
        exam.phase = Phase.ENROLMENT
        self.exams[exam_id] = exam
        return exam_id, {"exam": exam_id, "escrow": exam.escrow, "phase": exam.phase.name}

    def _op_enrol(self, exam: str, user: str, role: str):
        e = self._exam(exam)
        self._require_phase(e, Phase.ENROLMENT)
        role_ = Role(role)
        if role_ not in (Role.CANDIDATE, Role.EVALUATOR):
            raise LedgerError(f"cannot enrol as {role_.value}")
        if user in e.roles:
            raise LedgerError(f"{user!r} already holds role {e.roles[user].value} in {exam}")
        if role_ is Role.CANDIDATE:
            self._charge(user, e, e.fees.candidate_fee, "candidate fee")
            e.candidates.append(user)
            e.attempts[user] = 0
        else:
            self._charge(user, e, e.fees.evaluator_stake, "evaluator stake")
            e.evaluators.append(user)
        e.roles[user] = role_
        return None, {"escrow": e.escrow}

    def _op_open_submission(self, exam: str, caller: str):
        e = self._exam(exam)
        self._require_phase(e, Phase.ENROLMENT)
        self._require_admin(e, caller)
        e.phase = Phase.SUBMISSION
        return None, {"phase": e.phase.name}

    def _op_submit_answers(self, exam: str, candidate: str, digest: str):
        e = self._exam(exam)
        self._require_phase(e, Phase.SUBMISSION)
        if e.roles.get(candidate) is not Role.CANDIDATE:
            raise AuthorizationError(f"{candidate!r} is not a candidate of {exam}")
        if e.attempts[candidate] >= e.params.max_attempts:
            raise LedgerError(f"{candidate!r} has used all {e.params.max_attempts} attempts")
        e.attempts[candidate] += 1
        e.submissions[candidate] = digest
        return None, {"attempt": e.attempts[candidate]}

    def _op_close_submission(self, exam: str, caller: str):
        e = self._exam(exam)
        self._require_phase(e, Phase.SUBMISSION)
        self._require_admin(e, caller)
        subs = [c for c in e.candidates if c in e.submissions]
        p = e.params
        try:
            plan = build_assignment(len(subs), len(e.evaluators), p.ell, p.K, p.coverage, RngStream(self.seed, e.ordinal))
        except InfeasibleAssignment as exc:
            raise LedgerError(f"{exam}: {exc}") from None
        # plan evaluator i is e.evaluators[i]
        e.paper_of = {c: j for j, c in enumerate(subs)}
        e.plan = plan
        e.phase = Phase.PROBE_GRADING
        return plan, {"plan_sha256": hashlib.sha256(plan.to_json().encode()).hexdigest(), "probes": sorted(plan.probe_ids)}

    def _op_record_probe_grades(self, exam: str, caller: str, scores: list):
        e = self._exam(exam)
        self._require_phase(e, Phase.PROBE_GRADING)
        self._require_admin(e, caller)
        got = {int(j): _finite(v, "probe grade") for j, v in scores}
        if set(got) != set(e.plan.probe_ids):
            raise LedgerError(f"probe grades must cover exactly papers {sorted(e.plan.probe_ids)}")
        e.probe_grades = got
        e.phase = Phase.EVALUATION
        return None, {"phase": e.phase.name}

    def _op_record_evaluations(self, exam: str, evaluator: str, scores: list):
        e = self._exam(exam)
        self._require_phase(e, Phase.EVALUATION)
        if e.roles.get(evaluator) is not Role.EVALUATOR:
            raise AuthorizationError(f"{evaluator!r} is not an evaluator of {exam}")
        if evaluator in e.evaluations:
            raise LedgerError(f"{evaluator!r} already submitted evaluations")
        bundle = e.plan.per_evaluator[e.evaluator_index(evaluator)].bundle
        got = {int(j): _finite(v, "evaluation") for j, v in scores}
        if set(got) != set(bundle) or len(scores) != len(bundle):
            raise LedgerError(f"evaluations must cover exactly the assigned bundle {sorted(bundle)}")
        self._charge(evaluator, e, e.fees.gas_fee, "evaluation gas fee")
        e.gas_held[evaluator] = e.fees.gas_fee
        e.evaluations[evaluator] = got
        return None, {"escrow": e.escrow}

    def _score(self, e: ExamContract) -> None:
        """(Re)derive estimates and score records from stored grades."""
        plan = e.plan
        reports = {i: e.evaluations[u] for i, u in enumerate(e.evaluators)}
        params = {}
        for i in plan.evaluators:
            ps = plan.probes_of(i)
            params[i] = estimate_params(
                {j: reports[i][j] for j in ps},
                {j: e.probe_grades[j] for j in ps},
                tau_cap=e.params.tau_cap,
                epsilon_var=e.params.epsilon_var,
            )
        e._params = params
        e._records = {r.paper_id: r for r in score_papers(plan, reports, params, e.prior, e.probe_grades)}

    def _op_compute_and_release(self, exam: str):
        e = self._exam(exam)
        self._require_phase(e, Phase.EVALUATION)
        missing = [u for u in e.evaluators if u not in e.evaluations]
        if missing:
            raise LedgerError(f"evaluations outstanding from {missing}")
        self._score(e)
        e.released = {j: r.aggregated for j, r in sorted(e._records.items())}
        e.phase = Phase.SCORES_RELEASED
        transitions = [Phase.SCORES_RELEASED.name]
        e.phase = Phase.REGRADE_WINDOW
        transitions.append(e.phase.name)
        return dict(e.released), {"released": _keyed(e.released), "transitions": transitions}

    def _op_file_regrade(self, exam: str, candidate: str):
        e = self._exam(exam)
        self._require_phase(e, Phase.REGRADE_WINDOW)
        if e.roles.get(candidate) is not Role.CANDIDATE or candidate not in e.paper_of:
            raise AuthorizationError(f"{candidate!r} has no graded paper in {exam}")
        j = e.paper_of[candidate]
        if j in e.plan.probe_ids:
            raise LedgerError(f"paper {j} was graded by the instructor and cannot be regraded")
        if j in e.regrade_requests:
            raise LedgerError(f"paper {j} already has a regrade request")
        if e.fees.penalty_enabled and e.fees.regrade_penalty:
            self._charge(candidate, e, e.fees.regrade_penalty, "regrade penalty deposit")
            e.penalty_held[j] = e.fees.regrade_penalty
        e.regrade_requests[j] = "pending"
        return None, {"paper": j}

    def _op_decide_regrade(self, exam: str, caller: str, paper: int, score: float):
        e = self._exam(exam)
        self._require_phase(e, Phase.REGRADE_WINDOW)
        self._require_admin(e, caller)
        if e.regrade_requests.get(paper) != "pending":
            raise LedgerError(f"no pending regrade request for paper {paper}")
        rec = apply_regrade(e._records[paper], _finite(score, "regrade score"))
        e._records[paper] = rec
        effects = {"paper": paper, "regraded": rec.regraded, "final": rec.final_grade}
        held = e.penalty_held.pop(paper, 0)
        if rec.regraded:
            e.regrade_requests[paper] = "upheld"
            if held:
                cand = next(c for c, j in e.paper_of.items() if j == paper)
                self._pay(e, cand, held, effects)
                effects["penalty_refunded"] = held
        else:
            e.regrade_requests[paper] = "rejected"
            if held:
                effects["penalty_kept"] = held
        return dict(effects), effects

    def _op_finalize(self, exam: str, caller: str, alpha: float):
        e = self._exam(exam)
        self._require_phase(e, Phase.REGRADE_WINDOW)
        self._require_admin(e, caller)
        pending = sorted(j for j, s in e.regrade_requests.items() if s == "pending")
        if pending:
            raise LedgerError(f"regrade requests pending for papers {pending}")
        if not alpha > 0:
            raise LedgerError(f"alpha must be > 0, got {alpha}")
        plan = e.plan
        records = [e._records[j] for j in sorted(e._records)]
        sheet: TransferSheet = transfers(plan, records, e._params, e.prior, alpha, ReferenceMode.REGRADE)
        e._sheet = sheet
        effects: dict[str, Any] = {"alpha": alpha, "payouts": {}, "shortfalls": {}}
        lo, hi = e.params.score_min, e.params.score_max
        for i, user in enumerate(e.evaluators):
            t_units = tokens_from_real(sheet.totals[i])
            stake = e.fees.evaluator_stake
            gas = e.gas_held.pop(user, 0)
            settle = stake + t_units
            if settle < 0:
                msg = f"{user}: negative evaluation score exceeds stake by {-settle} units; floored at zero"
                e.alerts.append(msg)
                effects["shortfalls"][user] = -settle
                settle = 0
            self._pay(e, user, settle + gas, effects)
            effects["payouts"][user] = settle + gas
            w = self._wallet(user)
            w.evaluation_scores[e.exam_id] = sheet.totals[i]
        for cand, j in sorted(e.paper_of.items()):
            g = e._records[j].final_grade
            e.final_grades[j] = g
            self._wallet(cand).skill_scores[e.exam_id] = min(hi, max(lo, g))
        residual = e.escrow
        e.escrow = 0
        self.reserve += residual
        effects["residual_to_reserve"] = residual
        e.admin = None
        e.phase = Phase.FINALIZED
        report = {
            "exam": e.exam_id,
            "alpha": alpha,
            "transfers": {u: sheet.totals[i] for i, u in enumerate(e.evaluators)},
            "payouts": dict(effects["payouts"]),
            "shortfalls": dict(effects["shortfalls"]),
            "residual_to_reserve": residual,
            "reserve_draw": effects.get("reserve_draw", 0),
            "final_grades": dict(e.final_grades),
            "alerts": list(e.alerts),
        }
        return report, effects

    def _op_view_certificate(self, exam: str, viewer: str, user: str):
        e = self._exam(exam)
        role = e.roles.get(viewer)
        if role not in (None, Role.VIEWER):
            raise LedgerError(f"{viewer!r} holds role {role.value} in {exam}")
        target = self._wallet(user)
        fee = e.fees.viewer_fee
        w = self._wallet(viewer)
        if w.balance < fee:
            raise InsufficientFunds(f"{viewer!r} cannot pay viewer fee {fee}")
        w.balance -= fee
        if e.phase is Phase.FINALIZED:
            self.reserve += fee
        else:
            e.escrow += fee
            e.deposits += fee
        e.roles[viewer] = Role.VIEWER
        view = target.to_dict()
        del view["balance"]
        return view, {"fee": fee}


def _json_roundtrip(obj):
    import json

    return json.loads(canonical_json(obj))


def replay(log: EventLog) -> Ledger:
    """Rebuild a ledger by re-executing every logged op, checking effects match."""
    if not log.verify():
        raise LedgerError("event log hash chain is broken")
    if len(log) == 0 or log[0].payload.get("op") != "genesis":
        raise LedgerError("event log does not start with genesis")
    g = log[0].payload["args"]
    led = Ledger(seed=g["seed"], reserve=g["reserve"])
    for entry in list(log)[1:]:
        p = entry.payload
        led._execute(p["op"], p["args"], expected_effects=p["effects"])
    return led
