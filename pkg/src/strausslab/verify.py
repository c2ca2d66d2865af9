"""Named verification suites run by ``strausslab verify``.

Each suite takes an ExperimentConfig and returns ``{"pass", "metric", ...}``.
Library errors are caught and reported as a failed suite with the error
text, so one broken suite never hides the others.
"""

from __future__ import annotations

import math

import numpy as np

from . import exponents as ex
from . import iteration as it
from .errors import StraussLabError
from .specfun import bessel_k, bessel_k_prime, hyp2f1
from .testfuncs import CriticalTestFn, SubcriticalTestFn, phi_radial_laplace_residual


def _result(ok, metric, **extra):
    d = {"pass": bool(ok), "metric": float(metric)}
    d.update(extra)
    return d


def check_exponents(cfg):
    report = ex.classify(cfg.model)
    res = [abs(ex.gamma(ex.strauss(r), r)) for r in np.arange(1.5, 10.01, 0.5)]
    res += [abs(ex.fujita(n) - ex.strauss(n + ex.mu_star(n))) for n in range(1, 7)]
    m = max(res)
    return _result(m < 1e-12, m, regime=report.regime)


def check_specfun(cfg):
    t = np.linspace(0.5, 20.0, 40)
    k_err = max(abs(bessel_k(0.5, x) / (math.sqrt(math.pi / (2 * x)) * math.exp(-x)) - 1) for x in t)
    h = 1e-5
    d_err = max(abs(bessel_k_prime(nu, x) - (bessel_k(nu, x + h) - bessel_k(nu, x - h)) / (2 * h))
                / abs(bessel_k_prime(nu, x)) for nu in (0.0, 0.5, 1.3) for x in (0.7, 2.0, 8.0))
    f_err = abs(hyp2f1(1, 1, 2, 0.5) - 2 * math.log(2.0))
    ok = k_err < 1e-8 and d_err < 1e-6 and f_err < 1e-10
    return _result(ok, max(k_err, d_err, f_err), K_half=k_err, K_prime=d_err, F_half=f_err)


def check_testfuncs(cfg):
    m = cfg.model
    sub = SubcriticalTestFn(m.n, m.mu1, m.mu2sq)
    lam = max(sub.ode_residual(t) for t in (0.0, 1.0, 5.0, 10.0))
    phi = max(phi_radial_laplace_residual(r, m.n) for r in (0.3, 1.0, 3.0))
    out = {"lambda": lam, "phi": phi}
    lo, hi = CriticalTestFn.beta_range(m.n, m.mu1, m.mu2sq)
    if lo < hi:
        crit = CriticalTestFn(m.n, m.mu1, m.mu2sq, (lo + hi) / 2)
        out["adjoint"] = max(crit.adjoint_residual(t, r) for t, r in ((1.0, 0.8), (3.0, 2.0)))
    ok = lam < 1e-6 and phi < 1e-6 and out.get("adjoint", 0.0) < 1e-5
    return _result(ok, max(out.values()), **out)


def check_ledger(cfg):
    L = it.build_ledger(cfg.model, cfg.ledger_C1, cfg.ledger_j_max, cfg.ledger_T0)
    cr = it.comparison_recursion(L)
    errs = []
    for j in range(1, L.j_max + 1):
        a_j, b_j, _ = it.closed_forms(L, j)
        errs.append(abs(a_j - L.a[j - 1]) / abs(L.a[j - 1]))
        errs.append(abs(b_j - L.b[j - 1]) / abs(L.b[j - 1]))
        errs.append(abs(it.comparison_log_D(L, j) - cr[j - 1]) / max(1.0, abs(cr[j - 1])))
    m = max(errs)
    ok = m < 1e-10 and bool(it.chain_holds(L).all()) and all(it.sign_conditions(L).values())
    out = {"closed_form": m}
    g = ex.gamma(cfg.model.p, cfg.model.n + cfg.model.mu1)
    if g > 0:
        sb = it.subcritical_blowup_time(L)
        out["beta_minus_alpha"] = abs(sb.beta_minus_alpha - sb.gamma_ratio)
        ok = ok and out["beta_minus_alpha"] < 1e-12 and sb.J_at_bound >= 1 - 1e-9
    if cfg.model.n + cfg.model.mu1 > 1:
        lhs, rhs = it.p_prime_identity(cfg.model.n, cfg.model.mu1)
        out["p_prime"] = abs(lhs - rhs)
        ok = ok and out["p_prime"] < 1e-12
    return _result(ok, max(out.values()), **out)


def check_critical_ode(cfg):
    p = cfg.model.p
    runs = [it.critical_ode_integrate(p, cfg.ode_C, cfg.ode_c0, e)
            for e in (2 * cfg.model.eps, cfg.model.eps)]
    ok = runs[0].tau_star < runs[1].tau_star and all(r.lower_bounds_hold() for r in runs)
    ok = ok and all(np.all(np.diff(r.J) > 0) for r in runs)
    return _result(ok, runs[1].tau_star, tau_star=[r.tau_star for r in runs])


def check_functionals(cfg):
    from .functionals import check_g_dynamics, check_key_inequality, evaluate
    from .solver import solve_until_blowup

    trace = solve_until_blowup(cfg.model, cfg.grid(), cfg.threshold, cfg.solver)
    series = evaluate(trace)
    g = check_g_dynamics(series, cfg.model, cfg.solver.nonlinear)
    k = check_key_inequality(series, cfg.model)
    return _result(g.ok and (k.ok or k.degenerate), g.residual_max,
                   g_dynamics=g.residual_max, key_inequality=bool(k.ok), key_degenerate=bool(k.degenerate))


SUITES = {
    "exponents": check_exponents,
    "specfun": check_specfun,
    "testfuncs": check_testfuncs,
    "ledger": check_ledger,
    "critical-ode": check_critical_ode,
    "functionals": check_functionals,
}


def run_checks(cfg) -> dict:
    report = {}
    for name in cfg.checks:
        try:
            report[name] = SUITES[name](cfg)
        except (StraussLabError, ArithmeticError, ValueError) as exc:
            report[name] = {"pass": False, "metric": None, "error": f"{type(exc).__name__}: {exc}"}
    return report


def all_passed(report: dict) -> bool:
    return all(r["pass"] or r.get("degenerate", False) for r in report.values())
