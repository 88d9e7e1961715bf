import os

import numpy as np
import pytest

from helpers import random_exam
from skillcheck import kernels
from skillcheck.kernels import BatchLayout, estimate_batch, score_batch
from skillcheck.scoring import ReferenceMode, resolve_regrades, score_exam, transfers

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.mark.skipif(os.environ.get("SKILLCHECK_PURE_PYTHON") == "1", reason="fallback forced")
def test_compiled_backend_available():
    # the build ships the extension; the fallback is for environments without a compiler
    assert kernels.BACKEND == "cython"


def _batch_inputs(plan, y, reports):
    lay = BatchLayout.from_plan(plan)
    dev = np.array([[reports[i][j] - y[j] for j in lay.probe_papers[a]] for a, i in enumerate(lay.evaluators)])
    rep = np.array([[reports[i][j] for j in lay.slot_papers[a]] for a, i in enumerate(lay.evaluators)])
    y_np = y[list(lay.nonprobe_ids)]
    return lay, dev[None], rep[None], y_np[None]


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("mode", [ReferenceMode.REGRADE, ReferenceMode.TRUE])
@pytest.mark.parametrize("seed", range(25))
def test_kernel_matches_scalar_pipeline(backend, mode, seed):
    plan, prior, y, reports = random_exam(seed)
    truth = {j: float(v) for j, v in enumerate(y)}
    params, recs = score_exam(plan, reports, {j: truth[j] for j in plan.probe_ids}, prior)
    recs = resolve_regrades(recs, truth)
    sheet = transfers(plan, recs, params, prior, 1.3, mode)

    lay, dev, rep, y_np = _batch_inputs(plan, y, reports)
    b_hat, tau_hat = estimate_batch(dev, 1e6, 1e-12, backend)
    for a, i in enumerate(lay.evaluators):
        assert b_hat[0, a] == pytest.approx(params[i].b_hat, abs=1e-9)
        assert tau_hat[0, a] == pytest.approx(params[i].tau_hat, rel=1e-9)
    r_star, t = score_batch(
        b_hat, tau_hat, rep, lay.graders, y_np, prior.mu, prior.gamma**0.5, mode is ReferenceMode.TRUE, 1.3, backend
    )
    by = {r.paper_id: r for r in recs}
    for p, j in enumerate(lay.nonprobe_ids):
        assert r_star[0, p] == pytest.approx(by[j].aggregated, abs=1e-9)
    for a, i in enumerate(lay.evaluators):
        for k, j in enumerate(lay.slot_papers[a]):
            assert t[0, a, k] == pytest.approx(sheet.per_paper[(i, int(j))], abs=1e-9)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
@pytest.mark.parametrize("true_ref", [False, True])
def test_backends_agree_on_batches(true_ref):
    plan, prior, y, reports = random_exam(11, n_max=40, max_cov=3)
    lay = BatchLayout.from_plan(plan)
    g = np.random.default_rng(0)
    R = 300
    m, x = lay.probe_papers.shape
    h = lay.slot_papers.shape[1]
    dev = g.normal(0, 2, (R, m, x))
    dev[:5, 0, :] = 1.25  # zero residuals hit the cap
    rep = g.normal(50, 10, (R, m, h))
    y_np = g.normal(50, 10, (R, len(lay.nonprobe_ids)))
    out = {}
    for be in BACKENDS:
        b, tau = estimate_batch(dev, 1e6, 1e-12, be)
        out[be] = (b, tau) + score_batch(b, tau, rep, lay.graders, y_np, 50.0, 0.3, true_ref, 1.0, be)
    for a, c in zip(out["python"], out["cython"]):
        np.testing.assert_allclose(a, c, rtol=0, atol=1e-9)
    assert np.all(out["python"][1][:5, 0] == 1e6)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
