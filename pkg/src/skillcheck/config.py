"""Run configuration: a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored. Lists are comma separated. Every
key is checked against :data:`SCHEMA`; problems are reported with the line
they came from.

Example::

    # demo exam
    exam.n = 6
    exam.m = 2
    prior.mu = 50
    harness.tau_grid = 0.25, 1, 4, 16
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Callable

from .assignment import InfeasibleAssignment, check_feasibility
from .estimation import EPSILON_VAR, TAU_CAP
from .pg1_model import Prior

__all__ = [
    "ConfigError",
    "TOKEN_UNIT",
    "FeeSchedule",
    "ExamConfig",
    "BudgetSettings",
    "HarnessSettings",
    "RunConfig",
    "parse_config_text",
    "load_config",
    "to_units",
]

# smallest token unit: 1e-6 token
TOKEN_UNIT = 10**6


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + msg)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _tokens(s: str) -> int:
    try:
        d = Decimal(s.strip())
    except InvalidOperation:
        raise ValueError(f"expected a token amount, got {s!r}") from None
    units = d * TOKEN_UNIT
    if units != units.to_integral_value():
        raise ValueError(f"token amount {s} is finer than the smallest unit 1e-6")
    if units < 0:
        raise ValueError(f"token amount must be non-negative, got {s}")
    return int(units)


def _list(conv: Callable[[str], Any]) -> Callable[[str], list]:
    def parse(s: str) -> list:
        parts = [p.strip() for p in s.split(",")]
        if any(not p for p in parts):
            raise ValueError(f"empty list element in {s!r}")
        return [conv(p) for p in parts]

    return parse


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {s!r}")
    return v


SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "exam.n": (int, None),
    "exam.m": (int, None),
    "exam.ell": (int, None),
    "exam.K": (int, None),
    "exam.coverage": (int, 1),
    "exam.score_min": (_float, 0.0),
    "exam.score_max": (_float, 100.0),
    "exam.alpha": (_float, 1.0),
    "exam.tau_cap": (_float, TAU_CAP),
    "exam.epsilon_var": (_float, EPSILON_VAR),
    "exam.max_attempts": (int, 1),
    "exam.evaluator_biases": (_list(_float), None),
    "exam.evaluator_reliabilities": (_list(_float), None),
    "exam.calibrate_alpha": (_bool, False),
    "prior.mu": (_float, 50.0),
    "prior.gamma": (_float, 0.01),
    "fees.instructor_fee": (_tokens, 0),
    "fees.candidate_fee": (_tokens, 0),
    "fees.evaluator_stake": (_tokens, 0),
    "fees.viewer_fee": (_tokens, 0),
    "fees.gas_fee": (_tokens, 0),
    "fees.regrade_penalty": (_tokens, 0),
    "fees.penalty_enabled": (_bool, False),
    "ledger.initial_balance": (_tokens, 0),
    "ledger.reserve": (_tokens, 0),
    "budget.k_net": (_float, 1000.0),
    "budget.safety_margin": (_float, 0.2),
    "budget.mc_samples": (int, 2000),
    "budget.bias_sd": (_float, 2.0),
    "budget.tau_min": (_float, 0.05),
    "budget.tau_max": (_float, 5.0),
    "budget.validation_replays": (int, 200),
    "harness.checks": (_list(str), ["epbi", "eprm", "pointwise"]),
    "harness.modes": (_list(str), ["own-noise", "own-noise-y"]),
    "harness.target": (int, 0),
    "harness.replicas": (int, 10000),
    "harness.bias_grid": (_list(_float), [-5.0, 0.0, 5.0]),
    "harness.fixed_tau": (_float, 1.0),
    "harness.tau_grid": (_list(_float), [0.25, 1.0, 4.0, 16.0]),
    "harness.fixed_bias": (_float, 0.0),
    "harness.sigma_grid": (_list(_float), [0.25, 0.5, 1.0, 2.0, 4.0]),
    "harness.instances": (int, 100),
    "harness.reference": (str, "regrade"),
    "run.seed": (int, 0),
    "run.out": (str, "out"),
}


def parse_config_text(text: str, source: str = "<config>") -> tuple[dict[str, Any], dict[str, int]]:
    """Parse into ``(values, lines)``; ``lines`` maps each key to its line number."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, source)
        conv = SCHEMA[key][0]
        try:
            values[key] = conv(value)
        except ValueError as e:
            raise ConfigError(f"{key}: {e}", lineno, source) from None
        lines[key] = lineno
    return values, lines


def to_units(tokens: float | str) -> int:
    return _tokens(str(tokens))


@dataclass(frozen=True)
class FeeSchedule:
    """Fees in smallest token units."""

    instructor_fee: int = 0
    candidate_fee: int = 0
    evaluator_stake: int = 0
    viewer_fee: int = 0
    gas_fee: int = 0
    regrade_penalty: int = 0
    penalty_enabled: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ExamConfig:
    n: int
    m: int
    ell: int
    K: int
    coverage: int = 1
    prior: Prior = Prior(50.0, 0.01)
    interval: tuple[float, float] = (0.0, 100.0)
    alpha: float = 1.0
    tau_cap: float = TAU_CAP
    epsilon_var: float = EPSILON_VAR
    max_attempts: int = 1
    fees: FeeSchedule = FeeSchedule()

    def validate(self) -> None:
        check_feasibility(self.n, self.m, self.ell, self.K, self.coverage)
        if self.K // 2 < 2:
            raise InfeasibleAssignment("K/2 >= 2", "reliability estimation needs two probes per evaluator")
        self.prior.check_interval(self.interval)
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    @property
    def probes_per_evaluator(self) -> int:
        return self.K // 2


@dataclass(frozen=True)
class BudgetSettings:
    k_net: float = 1000.0
    safety_margin: float = 0.2
    mc_samples: int = 2000
    bias_sd: float = 2.0
    tau_min: float = 0.05
    tau_max: float = 5.0
    validation_replays: int = 200


@dataclass(frozen=True)
class HarnessSettings:
    checks: tuple[str, ...] = ("epbi", "eprm", "pointwise")
    modes: tuple[str, ...] = ("own-noise", "own-noise-y")
    target: int = 0
    replicas: int = 10000
    bias_grid: tuple[float, ...] = (-5.0, 0.0, 5.0)
    fixed_tau: float = 1.0
    tau_grid: tuple[float, ...] = (0.25, 1.0, 4.0, 16.0)
    fixed_bias: float = 0.0
    sigma_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    instances: int = 100
    reference: str = "regrade"


@dataclass(frozen=True)
class RunConfig:
    exam: ExamConfig
    budget: BudgetSettings = BudgetSettings()
    harness: HarnessSettings = HarnessSettings()
    seed: int = 0
    out: str = "out"
    initial_balance: int = 0
    reserve: int = 0
    calibrate_alpha: bool = False
    evaluator_biases: tuple[float, ...] | None = None
    evaluator_reliabilities: tuple[float, ...] | None = None
    source: str = "<config>"


_CHECKS = {"epbi", "eprm", "pointwise"}
_MODES = {"own-noise", "own-noise-y"}


def build_run_config(values: dict[str, Any], lines: dict[str, int], source: str = "<config>") -> RunConfig:
    def get(key):
        v = values.get(key, SCHEMA[key][1])
        if v is None:
            raise ConfigError(f"missing required key {key!r}", None, source)
        return v

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", lines.get(key), source)

    for key in ("exam.n", "exam.m", "exam.ell", "exam.K"):
        get(key)
    try:
        prior = Prior(get("prior.mu"), get("prior.gamma"))
    except ValueError as e:
        fail("prior.gamma", str(e))
    fees = FeeSchedule(
        **{k.split(".", 1)[1]: get(k) for k in SCHEMA if k.startswith("fees.")}
    )
    exam = ExamConfig(
        n=get("exam.n"),
        m=get("exam.m"),
        ell=get("exam.ell"),
        K=get("exam.K"),
        coverage=get("exam.coverage"),
        prior=prior,
        interval=(get("exam.score_min"), get("exam.score_max")),
        alpha=get("exam.alpha"),
        tau_cap=get("exam.tau_cap"),
        epsilon_var=get("exam.epsilon_var"),
        max_attempts=get("exam.max_attempts"),
        fees=fees,
    )
    try:
        exam.validate()
    except InfeasibleAssignment as e:
        key = next((k for k in ("exam.K", "exam.m", "exam.ell", "exam.n") if k in lines), None)
        fail(key or "exam", str(e))
    except ValueError as e:
        fail("prior.mu" if "interval" in str(e) else "exam.alpha", str(e))
    if exam.max_attempts < 1:
        fail("exam.max_attempts", "must be >= 1")

    biases = values.get("exam.evaluator_biases")
    rels = values.get("exam.evaluator_reliabilities")
    for key, vs in (("exam.evaluator_biases", biases), ("exam.evaluator_reliabilities", rels)):
        if vs is not None and len(vs) != exam.m:
            fail(key, f"expected {exam.m} values (one per evaluator), got {len(vs)}")
    if rels is not None and any(r <= 0 for r in rels):
        fail("exam.evaluator_reliabilities", "reliabilities must be > 0")

    budget = BudgetSettings(**{k.split(".", 1)[1]: get(k) for k in SCHEMA if k.startswith("budget.")})
    if budget.k_net < 0:
        fail("budget.k_net", "must be >= 0")
    if not 0 <= budget.safety_margin < 1:
        fail("budget.safety_margin", "must lie in [0, 1)")
    if budget.mc_samples < 2:
        fail("budget.mc_samples", "must be >= 2")
    if not 0 < budget.tau_min <= budget.tau_max:
        fail("budget.tau_min", "need 0 < tau_min <= tau_max")

    h = {k.split(".", 1)[1]: get(k) for k in SCHEMA if k.startswith("harness.")}
    for k, v in h.items():
        if isinstance(v, list):
            h[k] = tuple(v)
    harness = HarnessSettings(**h)
    if bad := set(harness.checks) - _CHECKS:
        fail("harness.checks", f"unknown checks {sorted(bad)}; choose from {sorted(_CHECKS)}")
    if bad := set(harness.modes) - _MODES:
        fail("harness.modes", f"unknown modes {sorted(bad)}; choose from {sorted(_MODES)}")
    if harness.reference not in ("regrade", "true"):
        fail("harness.reference", "must be 'regrade' or 'true'")
    if not 0 <= harness.target < exam.m:
        fail("harness.target", f"must index an evaluator in [0, {exam.m})")
    if harness.replicas < 2:
        fail("harness.replicas", "must be >= 2")
    if any(t <= 0 for t in harness.tau_grid) or harness.fixed_tau <= 0:
        fail("harness.tau_grid", "reliabilities must be > 0")
    if any(s < 0 for s in harness.sigma_grid):
        fail("harness.sigma_grid", "noise scales must be >= 0")

    seed = get("run.seed")
    if not 0 <= seed < 2**64:
        fail("run.seed", "must be a 64-bit unsigned integer")
    return RunConfig(
        exam=exam,
        budget=budget,
        harness=harness,
        seed=seed,
        out=get("run.out"),
        initial_balance=get("ledger.initial_balance"),
        reserve=get("ledger.reserve"),
        calibrate_alpha=get("exam.calibrate_alpha"),
        evaluator_biases=tuple(biases) if biases is not None else None,
        evaluator_reliabilities=tuple(rels) if rels is not None else None,
        source=source,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", None, str(path)) from None
    values, lines = parse_config_text(text, str(path))
    return build_run_config(values, lines, str(path))
