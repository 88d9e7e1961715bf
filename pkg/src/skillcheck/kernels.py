"""Batched scoring kernels used by the Monte Carlo code paths.

The compiled extension is used when it imports; set ``SKILLCHECK_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active implementation.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from .assignment import AssignmentPlan

__all__ = ["BACKEND", "BatchLayout", "estimate_batch", "score_batch", "get_backend"]


def _load():
    if os.environ.get("SKILLCHECK_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _ckernels
    except ImportError:
        return _kernels_py, "python"
    return _ckernels, "cython"


_impl, BACKEND = _load()


def get_backend(name: str | None = None):
    """Kernel module by name (``"python"``/``"cython"``); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


@dataclass(frozen=True)
class BatchLayout:
    """Dense index layout of a plan, shared by every replica of a batch.

    Evaluators are numbered by sorted label; non-probe papers by sorted id.
    """

    evaluators: tuple[int, ...]
    probe_papers: np.ndarray  # (m, x) paper ids, sorted per evaluator
    slot_papers: np.ndarray  # (m, h) paper ids, sorted per evaluator
    nonprobe_ids: tuple[int, ...]
    graders: np.ndarray  # (P, c) slot indices i*h+k, -1 padded

    @classmethod
    def from_plan(cls, plan: AssignmentPlan) -> "BatchLayout":
        ev = tuple(plan.evaluators)
        probes = np.array([sorted(plan.probes_of(i)) for i in ev], dtype=np.int64)
        slots = np.array([sorted(plan.nonprobes_of(i)) for i in ev], dtype=np.int64)
        nps = tuple(plan.nonprobe_ids)
        col = {j: p for p, j in enumerate(nps)}
        h = slots.shape[1]
        per_paper: list[list[int]] = [[] for _ in nps]
        for a in range(len(ev)):
            for k in range(h):
                per_paper[col[int(slots[a, k])]].append(a * h + k)
        c = max(len(g) for g in per_paper)
        graders = np.full((len(nps), c), -1, dtype=np.int64)
        for p, g in enumerate(per_paper):
            graders[p, : len(g)] = g
        return cls(ev, probes, slots, nps, graders)

    @property
    def slot_columns(self) -> np.ndarray:
        """(m, h) column of each slot's paper in the ``nonprobe_ids`` order."""
        col = {j: p for p, j in enumerate(self.nonprobe_ids)}
        return np.vectorize(col.__getitem__, otypes=[np.int64])(self.slot_papers)


def estimate_batch(dev, tau_cap: float, eps: float, backend=None):
    impl = get_backend(backend)
    return impl.estimate_batch(np.ascontiguousarray(dev, dtype=np.float64), float(tau_cap), float(eps))


def score_batch(b_hat, tau_hat, np_reports, graders, y_np, mu, sqrt_gamma, true_reference=False, alpha=1.0, backend=None):
    impl = get_backend(backend)
    f = lambda a: np.ascontiguousarray(a, dtype=np.float64)  # noqa: E731
    return impl.score_batch(
        f(b_hat),
        f(tau_hat),
        f(np_reports),
        np.ascontiguousarray(graders, dtype=np.int64),
        f(y_np),
        float(mu),
        float(sqrt_gamma),
        bool(true_reference),
        float(alpha),
    )
