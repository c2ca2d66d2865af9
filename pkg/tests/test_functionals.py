import math

import numpy as np
import pytest

from strausslab.errors import DomainError
from strausslab.exponents import ModelParams, characteristic_roots
from strausslab.functionals import (FunctionalSeries, check_fundamental_identity, check_g_dynamics,
                                    check_jbeta_lemma, check_key_inequality, check_priori_bound, cumtrapz,
                                    derivatives, evaluate, fundamental_identity_residual, gbeta_band, h_and_j,
                                    priori_exponent, radial_weights, report_json)
from strausslab.numerics import ball_volume
from strausslab.solver import RadialGrid, SolverConfig, SolveTrace, solve_until_blowup
from strausslab.testfuncs import CriticalTestFn, SubcriticalTestFn

SUB = ModelParams(n=1, mu1=2.0, mu2sq=0.0, p=2.0, eps=0.5, R=1.0)
CRIT = ModelParams(n=3, mu1=2.0, mu2sq=0.0, p=2.0, eps=1.0, R=0.5)


def run(params, dr, T_max, threshold=1e3, nonlinear=True):
    cfg = SolverConfig(T_max=T_max, nonlinear=nonlinear)
    return solve_until_blowup(params, RadialGrid.covering(params.R, T_max, dr), threshold, cfg)


@pytest.fixture(scope="module")
def sub_runs():
    return {dr: run(SUB, dr, 13.0) for dr in (0.01, 0.005)}


@pytest.fixture(scope="module")
def crit_runs():
    return {dr: run(CRIT, dr, 6.0) for dr in (0.02, 0.01)}


def fake_trace(params, grid, times, snaps, nonlinear=True):
    snaps = np.asarray(snaps, dtype=float)
    return SolveTrace(params=params, grid=grid, config=SolverConfig(nonlinear=nonlinear), times=np.asarray(times),
                      snapshots=snaps, sup_series=np.max(np.abs(snaps), axis=1), crossings=[],
                      t_end=float(times[-1]), blew_up=False, timed_out=True, steps=len(times), dt_base=0.01)


def test_zero_trace_gives_zero_series():
    grid = RadialGrid(5.0, 100)
    times = np.linspace(0, 2, 11)
    tr = fake_trace(SUB, grid, times, np.zeros((11, 101)))
    s = evaluate(tr, SubcriticalTestFn(1, 2.0, 0.0))
    assert not s.G.any() and not s.Lp.any() and not s.F.any()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_patch_volumes(n):
    a, c, p = 1.5, -0.7, 3.0
    grid = RadialGrid(4.0, 4000)
    u = np.where(grid.r < a, c, 0.0)
    w = radial_weights(grid, n)
    vol = ball_volume(n, a)
    assert np.sum(w * u) == pytest.approx(c * vol, rel=5e-3)
    assert np.sum(w * np.abs(u) ** p) == pytest.approx(abs(c) ** p * vol, rel=5e-3)


def test_radial_weights_exact_for_polynomials():
    grid = RadialGrid(2.0, 200)
    w = radial_weights(grid, 3)
    assert np.sum(w) == pytest.approx(ball_volume(3, 2.0), rel=1e-4)


def test_cumtrapz_and_derivatives():
    t = np.sort(np.concatenate([np.linspace(0, 1, 30), [0.515, 0.7333]]))
    assert cumtrapz(2 * t, t)[-1] == pytest.approx(1.0, abs=1e-14)
    d1, d2 = derivatives(t**2, t)
    assert np.allclose(d1, 2 * t, atol=1e-12)
    assert np.allclose(d2[1:-1], 2.0, atol=1e-9)


def test_h_second_derivative():
    t = np.linspace(0, 5, 2001)
    Gb = np.exp(-t) * (2 + np.sin(3 * t))
    H, J = h_and_j(Gb, t)
    _, H2 = derivatives(H, t)
    assert np.max(np.abs(H2[1:-1] - (1 + t[1:-1]) * Gb[1:-1])) < 1e-4
    assert H[0] == 0 and J[0] == 0


def test_g_dynamics_linear(sub_runs):
    tr = run(SUB, 0.02, 10.0, nonlinear=False)
    g = check_g_dynamics(evaluate(tr), SUB, nonlinear=False)
    assert g.ok and g.residual_max < 5e-3


def test_g_dynamics_nonlinear_and_refinement(sub_runs):
    res = {dr: check_g_dynamics(evaluate(tr), SUB).residual_max for dr, tr in sub_runs.items()}
    assert res[0.01] < 5e-3
    assert 3.0 <= res[0.01] / res[0.005] <= 5.0


def test_g_dynamics_detects_missing_source(sub_runs):
    g = check_g_dynamics(evaluate(sub_runs[0.01]), SUB, nonlinear=False)
    assert not g.ok


def test_key_inequality_on_compliant_run(sub_runs):
    k = check_key_inequality(evaluate(sub_runs[0.01]), SUB)
    assert k.ok and not k.degenerate and k.samples > 100
    assert k.extra["margin_min"] > 0


def test_key_inequality_degenerate_on_zero():
    grid = RadialGrid(5.0, 100)
    times = np.linspace(0, 2, 11)
    s = evaluate(fake_trace(SUB, grid, times, np.zeros((11, 101))))
    k = check_key_inequality(s, SUB)
    assert not k.ok and k.degenerate


def test_r1_definition():
    for mu1, mu2sq in [(2, 0), (3, 0.5), (0.5, 0.05)]:
        d = (mu1 - 1) ** 2 - 4 * mu2sq
        assert characteristic_roots(mu1, mu2sq)[0] == pytest.approx((mu1 - 1 - math.sqrt(d)) / 2)


def test_priori_bound_stable_under_refinement(sub_runs):
    sub = SubcriticalTestFn(1, 2.0, 0.0)
    c = {}
    for dr, tr in sub_runs.items():
        r = check_priori_bound(evaluate(tr, sub), tr, sub)
        assert r.ok and r.extra["F_nonneg"] and r.extra["holder"]
        c[dr] = r.extra["C1_fit"]
    assert c[0.005] == pytest.approx(c[0.01], rel=0.2)
    assert priori_exponent(SUB) == -2.0


def test_priori_bound_zero_data_degenerate():
    grid = RadialGrid(5.0, 100)
    times = np.linspace(0, 8, 41)
    tr = fake_trace(SUB, grid, times, np.zeros((41, 101)))
    sub = SubcriticalTestFn(1, 2.0, 0.0)
    r = check_priori_bound(evaluate(tr, sub), tr, sub)
    assert r.degenerate and not r.ok


def test_priori_needs_F():
    tr = run(SUB, 0.05, 2.0)
    with pytest.raises(DomainError):
        check_priori_bound(evaluate(tr), tr, SubcriticalTestFn(1, 2.0, 0.0), T0=1.0)


@pytest.mark.parametrize("seed", range(5))
def test_jbeta_lemma_random_nonnegative(seed):
    rng = np.random.default_rng(seed)
    t = np.sort(np.concatenate([[0.0], rng.uniform(0, 10, 300)]))
    Gb = rng.exponential(size=t.size) * np.exp(rng.normal() * t / 10)
    assert check_jbeta_lemma(Gb, t).ok


def test_jbeta_lemma_constant_closed_form():
    c = 2.5
    t = np.linspace(0, 4, 4001)
    r = check_jbeta_lemma(np.full_like(t, c), t)
    assert r.ok
    H, J = h_and_j(np.full_like(t, c), t)
    # H = c (t^2/2 + t^3/6); the right side is c t^3 / 6.
    assert H[-1] == pytest.approx(c * (8 + 64 / 6), rel=1e-6)
    lhs = (1 + t) ** 2 * J
    assert np.all(lhs[1:] < c * t[1:] ** 3 / 6)


def test_jbeta_lemma_zero_series():
    t = np.linspace(0, 1, 11)
    r = check_jbeta_lemma(np.zeros_like(t), t)
    assert r.ok and r.degenerate


def test_fundamental_identity_linear():
    tr = run(CRIT, 0.02, 6.0, nonlinear=False)
    crit = CriticalTestFn(3, 2.0, 0.0, 0.5)
    assert check_fundamental_identity(tr, crit).ok


def test_fundamental_identity_nonlinear_converges(crit_runs):
    crit = CriticalTestFn(3, 2.0, 0.0, 0.5)
    res = {dr: check_fundamental_identity(tr, crit).residual_max for dr, tr in crit_runs.items()}
    assert res[0.02] < 1e-2
    assert res[0.01] < 0.5 * res[0.02]


def test_fundamental_identity_at_zero(crit_runs):
    crit = CriticalTestFn(3, 2.0, 0.0, 0.5)
    _, res, terms = fundamental_identity_residual(crit_runs[0.02], crit)
    assert abs(res[0]) < 1e-3
    assert terms["E0"][0] > 0


def test_fundamental_identity_requires_small_support():
    tr = run(SUB.replace(n=3), 0.05, 1.0)
    with pytest.raises(DomainError):
        fundamental_identity_residual(tr, CriticalTestFn(3, 2.0, 0.0, 0.5))


def test_beta_functionals(crit_runs):
    s = evaluate(crit_runs[0.02], betas=(0.5, 0.8))
    for beta in (0.5, 0.8):
        assert np.all(s.Gb[beta] >= 0)
        assert np.all(np.diff(s.Hb[beta]) >= 0) and np.all(np.diff(s.Jb[beta]) >= 0)
        assert np.min(np.diff(s.Hb[beta], 2)) >= -1e-12
        band = gbeta_band(s, beta, 1e2)
        assert band.min() >= 1 - 1e-12 and band.max() < 3.7
        assert check_jbeta_lemma(s.Gb[beta], s.times).ok


def test_evaluation_is_deterministic(crit_runs):
    a = evaluate(crit_runs[0.02], betas=(0.5,))
    b = evaluate(crit_runs[0.02], betas=(0.5,))
    assert np.array_equal(a.G, b.G) and np.array_equal(a.Gb[0.5], b.Gb[0.5])


def test_report_json(sub_runs):
    s = evaluate(sub_runs[0.01])
    out = report_json([check_g_dynamics(s, SUB), check_key_inequality(s, SUB)])
    assert '"g_dynamics"' in out and '"key_inequality"' in out


def test_series_needs_snapshots():
    tr = solve_until_blowup(SUB, RadialGrid.covering(1.0, 1.0, 0.05), 1e3, SolverConfig(T_max=1.0, record=False))
    with pytest.raises(DomainError):
        evaluate(tr)
    assert isinstance(FunctionalSeries(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1)), FunctionalSeries)
