"""Tests for the two data-driven cut-off selection rules: the Lepskii scan
over a smoothness grid and the penalized-bias minimization over a dyadic
cut-off grid. Selection traces are replayed as an independent check that
the recorded decision data actually produces the recorded decision.
"""

import json
import math

import numpy as np
import pytest

from privdens.adaptive import (
    BetaGrid,
    PenaltyConfig,
    build_beta_grid,
    dyadic_cutoff_grid,
    lepskii_select,
    penalized_bias_select,
    penalty_lambda1,
    penalty_lambda2,
    risk_series_bound,
    risk_series_sum,
)
from privdens.estimator import fit, optimal_cutoff_adaptive_form
from privdens.fourier import CoefficientGrid
from privdens.densities import TrigDensity, rejection_sample


# ---------------------------------------------------------------------------
# beta grid
# ---------------------------------------------------------------------------


def test_beta_grid_e_squared():
    # n = e^2 so log n = 2 exactly: k_n = 4, betas 2, 1.5, 1, 0.5
    grid = build_beta_grid(math.e**2, 1.0)
    assert grid.k_n == 4
    assert grid.betas == pytest.approx((2.0, 1.5, 1.0, 0.5), abs=1e-12)


def test_beta_grid_e_fourth():
    grid = build_beta_grid(math.e**4, 0.5)
    assert grid.k_n == 32
    assert grid.betas[0] == pytest.approx(4.0, abs=1e-12)
    steps = np.diff(grid.betas)
    assert np.allclose(steps, -0.125, atol=1e-12)


def test_beta_grid_structure():
    for n, eps in ((100, 0.5), (10**4, 0.25), (77, 0.1)):
        grid = build_beta_grid(n, eps)
        betas = np.asarray(grid.betas)
        assert len(betas) == grid.k_n
        gaps = np.diff(betas)
        assert np.allclose(gaps, gaps[0], atol=1e-12)  # constant spacing
        assert betas[-1] >= 0.0
        assert betas[0] == pytest.approx(grid.k_n * eps / math.log(n), rel=1e-12)


def test_beta_grid_validation():
    with pytest.raises(ValueError):
        build_beta_grid(2, 0.5)
    with pytest.raises(ValueError):
        build_beta_grid(100, 0.0)


# ---------------------------------------------------------------------------
# penalty configuration
# ---------------------------------------------------------------------------


def test_penalty_config_defaults():
    cfg = PenaltyConfig()
    assert cfg.mode == "practical"
    assert cfg.resolved_C(1) == 1.0
    theory = PenaltyConfig(mode="theory")
    # max(8 L^2, 2^(2d+9)) with L=2: max(32, 2048) = 2048
    assert theory.theory_floor(1) == 2048.0
    assert theory.resolved_C(1) == 2048.0


def test_penalty_config_validation():
    with pytest.raises(ValueError):
        PenaltyConfig(mode="loose")
    with pytest.raises(ValueError):
        PenaltyConfig(a=0.0)
    with pytest.raises(ValueError):
        PenaltyConfig(eps=-0.5)
    with pytest.raises(ValueError):
        PenaltyConfig(C=0.5)  # C is a real >= 1 by contract


def test_theory_mode_rejects_weak_constants():
    data = np.random.default_rng(0).random((100, 1))
    with pytest.raises(ValueError):
        lepskii_select(data, 1.0, PenaltyConfig(mode="theory", a=0.5),
                       np.random.default_rng(1))
    with pytest.raises(ValueError):
        lepskii_select(data, 1.0, PenaltyConfig(mode="theory", C=100.0),
                       np.random.default_rng(1))


def test_theory_mode_large_eps_warns():
    data = np.random.default_rng(0).random((100, 1))
    with pytest.warns(UserWarning):
        lepskii_select(data, 1.0, PenaltyConfig(mode="theory", eps=0.75),
                       np.random.default_rng(1))


# ---------------------------------------------------------------------------
# penalties
# ---------------------------------------------------------------------------


def test_penalty_lambda_examples():
    lam1 = penalty_lambda1(3, 1000, 0.1, 1)
    assert lam1 == pytest.approx(0.71904, rel=1e-12)
    lam2 = penalty_lambda2(3, 1000, 0.1, 1)
    assert lam2 == pytest.approx(0.72688, rel=1e-12)


def test_penalty_positivity_and_order():
    for M in range(0, 12):
        for n in (50, 1000):
            for rp in (0.01, 1.0):
                l1 = penalty_lambda1(M, n, rp, 1)
                l2 = penalty_lambda2(M, n, rp, 1)
                assert 0.0 < l1 < l2


# ---------------------------------------------------------------------------
# dyadic grid
# ---------------------------------------------------------------------------


def test_dyadic_grid_examples():
    assert dyadic_cutoff_grid(1024, 1) == [1, 2, 4, 8, 16, 32, 64, 128, 256]
    assert dyadic_cutoff_grid(1024, 2) == [1, 2, 4, 8]


def test_dyadic_grid_invariant():
    for n in (10, 31, 64, 100, 1000, 4096, 10**5):
        for d in (1, 2, 3):
            grid = dyadic_cutoff_grid(n, d)
            assert grid[0] >= 1
            if (n ** (1.0 / d) - 1.0) / 2.0 >= 1.0:
                assert (2 * max(grid) + 1) ** d <= n


def test_dyadic_grid_tiny_n():
    assert dyadic_cutoff_grid(3, 1) == [1]
    assert dyadic_cutoff_grid(4, 2) == [1]


# ---------------------------------------------------------------------------
# Lepskii selection
# ---------------------------------------------------------------------------


def test_lepskii_all_candidates_identical_selects_first():
    # Noise disabled and all cut-offs clamped to the same M: every pairwise
    # distance is 0, so m_hat = 0 (the largest beta).
    rng = np.random.default_rng(21)
    data = rng.random((10, 1))
    est, trace = lepskii_select(data, 1e-8, PenaltyConfig(), disable_noise=True)
    assert len(set(trace.cutoffs)) == 1
    assert trace.selected_index == 0
    assert est.cutoff == trace.cutoffs[0]


def test_lepskii_singleton_grid():
    # eps large enough that floor((log n)^2 / eps) clamps to a single entry
    data = np.random.default_rng(22).random((3, 1))
    cfg = PenaltyConfig(eps=1.21)
    est, trace = lepskii_select(data, 1.0, cfg, np.random.default_rng(23))
    assert len(trace.cutoffs) == 1
    assert trace.selected_index == 0


def test_lepskii_budget_identity():
    n, rho, eps = 500, 0.8, 0.5
    data = np.random.default_rng(24).random((n, 1))
    cfg = PenaltyConfig(eps=eps)
    est, trace = lepskii_select(data, rho, cfg, np.random.default_rng(25))
    ln = math.log(n)
    k_n = len(trace.cutoffs)
    rho_prime = rho * eps / ln**2
    assert trace.rho_per_candidate == pytest.approx(rho_prime, rel=1e-12)
    assert trace.rho_spent == pytest.approx(k_n * rho_prime, rel=1e-12)
    assert trace.rho_spent <= rho + 1e-12
    assert est.rho_spent == trace.rho_spent
    # the ledger records one charge per candidate and sums to the total
    assert len(trace.ledger) == k_n
    assert trace.ledger.spent == pytest.approx(trace.rho_spent, rel=1e-9)


def test_lepskii_replay_matches():
    for seed in (1, 2, 3, 4):
        data = np.random.default_rng(seed).random((400, 1))
        cfg = PenaltyConfig(C=4.0)
        est, trace = lepskii_select(data, 1.0, cfg, np.random.default_rng(seed + 100))
        assert trace.replay() == trace.selected_index


def test_lepskii_deterministic():
    data = np.random.default_rng(30).random((300, 1))
    cfg = PenaltyConfig(C=2.0)
    e1, t1 = lepskii_select(data, 1.0, cfg, np.random.default_rng(31))
    e2, t2 = lepskii_select(data, 1.0, cfg, np.random.default_rng(31))
    assert t1.selected_index == t2.selected_index
    assert np.array_equal(e1.coefficients.values, e2.coefficients.values)


def test_lepskii_theory_mode_selects_index_zero():
    # The theory constants make every threshold larger than any achievable
    # distance at this scale, so the scan accepts m = 0 immediately.
    data = np.random.default_rng(32).random((200, 1))
    cfg = PenaltyConfig(mode="theory")
    est, trace = lepskii_select(data, 1.0, cfg, np.random.default_rng(33))
    assert trace.constants["mode"] == "theory"
    assert trace.selected_index == 0


def test_lepskii_discriminates_visible_bias():
    # A truth with substantial energy out to |k| = 6 forces the m = 0
    # candidate (cut-off 1) to be rejected once the threshold constant is
    # large enough to clear the noise floor but small enough to see bias.
    vals = np.zeros(13, dtype=complex)
    center = 6
    vals[center] = 1.0
    for k, amp in ((1, 0.30), (2, 0.25), (3, 0.20), (4, 0.12), (5, 0.08), (6, 0.05)):
        vals[center + k] = amp
        vals[center - k] = amp
    truth = TrigDensity(CoefficientGrid(1, 6, vals), beta=1.0, L=2.0, min_value=0.01)
    rng = np.random.default_rng(40)
    data = rejection_sample(truth, 16384, rng)
    est, trace = lepskii_select(data, 1.0, PenaltyConfig(C=4.0), rng)
    assert trace.selected_index > 0
    assert est.cutoff >= 2


def test_lepskii_trace_json_serializable():
    data = np.random.default_rng(50).random((100, 1))
    est, trace = lepskii_select(data, 1.0, PenaltyConfig(), np.random.default_rng(51))
    text = json.dumps(trace.to_json_dict())
    doc = json.loads(text)
    assert doc["method"] == "lepskii"
    assert doc["selected_index"] == trace.selected_index
    assert len(doc["cutoffs"]) == len(trace.cutoffs)
    assert "candidates" not in doc


# ---------------------------------------------------------------------------
# penalized-bias selection
# ---------------------------------------------------------------------------


def test_penalized_singleton_grid():
    data = np.random.default_rng(60).random((200, 1))
    est, trace = penalized_bias_select(data, 1.0, [5], np.random.default_rng(61))
    assert trace.cutoffs == [5]
    assert est.cutoff == 5
    assert est.rho_spent == 1.0


def test_penalized_tie_break_smallest():
    # Data on the lattice j/N has empirical coefficients exactly delta_{k0}
    # for all |k| < N, so with noise disabled every candidate projects to
    # the same function; the criterion then decreases with Lambda2 and the
    # smallest M wins.
    N = 64
    data = (np.arange(N) / N).reshape(-1, 1)
    est, trace = penalized_bias_select(data, 1.0, [1, 2, 4, 8], disable_noise=True)
    assert np.allclose(trace.bias_sq, trace.bias_sq[0], atol=1e-12)
    assert trace.selected_index == 0
    assert est.cutoff == 1


def test_penalized_budget_is_exactly_rho():
    for rho in (1.0, 0.3, 2.5):
        data = np.random.default_rng(62).random((300, 1))
        est, trace = penalized_bias_select(data, rho, None, np.random.default_rng(63))
        assert est.rho_spent == rho  # exact composition of |grid| equal shares
        g = len(trace.cutoffs)
        assert trace.rho_per_candidate == pytest.approx(rho / g, rel=1e-15)
        assert len(trace.ledger) == g


def test_penalized_default_grid_is_dyadic():
    data = np.random.default_rng(64).random((1024, 1))
    est, trace = penalized_bias_select(data, 1.0, None, np.random.default_rng(65))
    assert trace.cutoffs == dyadic_cutoff_grid(1024, 1)


def test_penalized_bias_lower_bound_and_replay():
    for seed in (5, 6, 7):
        data = np.random.default_rng(seed).random((500, 1))
        est, trace = penalized_bias_select(data, 1.0, None, np.random.default_rng(seed))
        lam1 = trace.lambda1
        assert np.all(trace.bias_sq >= -lam1.min() - 1e-12)
        assert np.all(np.isfinite(trace.bias_sq))
        assert trace.replay() == trace.selected_index


def test_penalized_deterministic():
    data = np.random.default_rng(70).random((256, 1))
    e1, t1 = penalized_bias_select(data, 1.0, None, np.random.default_rng(71))
    e2, t2 = penalized_bias_select(data, 1.0, None, np.random.default_rng(71))
    assert t1.selected_index == t2.selected_index
    assert np.array_equal(e1.coefficients.values, e2.coefficients.values)


def test_penalized_validation():
    data = np.random.default_rng(72).random((50, 1))
    with pytest.raises(ValueError):
        penalized_bias_select(data, 1.0, [], np.random.default_rng(73))
    with pytest.raises(ValueError):
        penalized_bias_select(data, 1.0, [-1, 2], np.random.default_rng(73))
    with pytest.raises(ValueError):
        penalized_bias_select(data, 1.0, None)  # rng required when noised


# ---------------------------------------------------------------------------
# grid-risk series
# ---------------------------------------------------------------------------


def test_risk_series_includes_flat_endpoint():
    # the series ends at beta = 0 where the rate is 1, so the sum is >= 1
    assert risk_series_sum(100, 1.0, 0.5, 1) >= 1.0


def test_risk_series_bound_over_grid():
    for n in (100, 10**4):
        for rho in (0.01, 1.0):
            for d in (1, 2, 3):
                for eps in (0.1, 0.25, 0.5):
                    s = risk_series_sum(n, rho, eps, d)
                    b = risk_series_bound(n, rho, eps, d)
                    assert s <= b
                    assert s > 0


def test_risk_series_real_n():
    # the bound's derivation only needs log n, so real n >= 3 is accepted
    s = risk_series_sum(math.e**2, 1.0, 1.0, 1)
    assert s >= 1.0
