"""Command-line harness: ``strausslab <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 2 configuration error, 3 check failure,
4 runtime or accuracy error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import exponents as ex
from . import iteration as it
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DomainError, NoBlowUp, StraussLabError
from .solver import THRESHOLD_LADDER, estimate_lifespan, extrapolate_blowup, solve_until_blowup
from .verify import all_passed, run_checks

log = logging.getLogger("strausslab")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RUNTIME = 0, 2, 3, 4

SUBCRITICAL_TOL = 0.30
CRITICAL_TOL = 0.15

LIFESPAN_COLUMNS = ["eps", "T_est", "converged", "dt"] + [f"T_1e{int(math.log10(M))}" for M in THRESHOLD_LADDER] + ["status"]
ODE_COLUMNS = ["eps", "tau_star", "t_star", "log10_t_star", "status"]


class CheckFailed(Exception):
    pass


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return _jsonable(x.item())
    return x


def _write_json(out: Path | None, name: str, obj) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(out: Path | None, name: str, columns, rows) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row[k]) for k in columns})


def _emit(args, obj, table_lines) -> None:
    if args.json:
        print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))
    else:
        for line in table_lines:
            print(line)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def _fit_summary(points, theory: float, tol: float, mode: str = "subcritical") -> dict:
    if len(points) < 3:
        return {"fit": None, "theoretical_slope": theory,
                "message": f"fit needs at least 3 blow-up points, got {len(points)}"}
    fit = it.fit_scaling(points, mode)
    rel = abs(fit.slope - theory) / abs(theory)
    return {"fit": {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared},
            "theoretical_slope": theory, "relative_deviation": rel, "tolerance": tol,
            "consistent": rel <= tol}


# ---------------------------------------------------------------------------
# subcommands

def cmd_exponents(cfg: ExperimentConfig, args) -> int:
    rep = ex.classify(cfg.model)
    m = cfg.model
    obj = {"params": {"n": m.n, "mu1": m.mu1, "mu2sq": m.mu2sq, "p": m.p}, **rep.to_dict()}
    lines = [f"{k:>12}  {v}" for k, v in obj.items() if k != "hypothesis_flags"]
    lines += [f"{k:>20}  {v}" for k, v in rep.hypothesis_flags.items()]
    _emit(args, obj, lines)
    _write_json(args.out, "exponents.json", obj)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    report = run_checks(cfg)
    _emit(args, report, [f"{'PASS' if r['pass'] else 'FAIL'}  {name:<14} metric={r['metric']}"
                         + (f"  ({r['error']})" if "error" in r else "")
                         for name, r in report.items()])
    _write_json(args.out, "verify.json", report)
    if not all_passed(report):
        raise CheckFailed("some checks failed")
    return EXIT_OK


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    trace = solve_until_blowup(cfg.model, cfg.grid(), cfg.threshold, cfg.solver)
    meta = trace.metadata()
    if trace.blew_up:
        meta["T_est"] = extrapolate_blowup(trace.crossings, cfg.model.p)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        trace.to_csv(args.out / "solve.csv")
    _write_json(args.out, "solve.json", meta)
    _emit(args, meta, [f"blew_up={trace.blew_up} t_end={trace.t_end:.6g} steps={trace.steps}"]
          + [f"  sup|u| >= {M:g} at t = {t:.6g}" for M, t in trace.crossings]
          + ([f"  T_est = {meta['T_est']:.6g}"] if trace.blew_up else []))
    return EXIT_OK


def _lifespan_row(job):
    cfg, eps = job
    params = cfg.model.replace(eps=eps)
    row = {"eps": eps}
    try:
        est = estimate_lifespan(params, cfg.grid(), replace(cfg.solver, record=False),
                                rtol=cfg.rtol, max_refinements=cfg.max_refinements)
    except NoBlowUp as exc:
        row["status"] = "no-blowup"
        log.warning("eps=%g: %s", eps, exc)
        return row
    row.update(T_est=est.T_est, converged=est.converged, dt=est.dt_used, status="ok")
    for M, t in est.T_at_threshold:
        row[f"T_1e{int(round(math.log10(M)))}"] = t
    return row


def cmd_lifespan_sweep(cfg: ExperimentConfig, args) -> int:
    if cfg.case != "subcritical":
        raise ConfigError(f"lifespan-sweep needs case = subcritical, got {cfg.case!r}")
    rep = ex.classify(cfg.model)
    if not rep.hypothesis_flags["thm1_ok"]:
        log.warning("parameters are outside the sub-critical range 1 < p < p_S(n+mu1)")
    eps_list = list(cfg.sweep) or [cfg.model.eps]
    rows = _map(_lifespan_row, [(cfg, e) for e in eps_list], args.workers)
    p = cfg.model.p
    theory = -2.0 * p * (p - 1.0) / rep.gamma if rep.gamma > 0 else math.nan
    ok_rows = [r for r in rows if r["status"] == "ok"]
    summary = _fit_summary([(r["eps"], r["T_est"]) for r in ok_rows], theory, SUBCRITICAL_TOL)
    by_eps = sorted(ok_rows, key=lambda r: r["eps"])
    summary["monotone"] = all(a["T_est"] >= b["T_est"] for a, b in zip(by_eps, by_eps[1:]))
    summary["all_converged"] = all(r["converged"] for r in ok_rows)
    summary["rows"] = rows
    _write_csv(args.out, "lifespan_sweep.csv", LIFESPAN_COLUMNS, rows)
    _write_json(args.out, "lifespan_fit.json", summary)
    lines = [f"eps={r['eps']:<8g} T_est={r.get('T_est', float('nan')):<12.6g} "
             f"converged={r.get('converged')} status={r['status']}" for r in rows]
    lines.append(_fit_line(summary))
    _emit(args, summary, lines)
    if summary.get("consistent") is False:
        raise CheckFailed("fitted slope outside tolerance")
    return EXIT_OK


def _fit_line(summary) -> str:
    if summary["fit"] is None:
        return f"fit refused: {summary['message']}"
    return (f"slope={summary['fit']['slope']:.4f} theory={summary['theoretical_slope']:.4f} "
            f"rel.dev={summary['relative_deviation']:.3f} consistent={summary['consistent']}")


def _ode_row(job):
    p, C, c0, eps = job
    try:
        run = it.critical_ode_integrate(p, C, c0, eps)
    except NoBlowUp:
        return {"eps": eps, "status": "no-blowup"}
    return {"eps": eps, "tau_star": run.tau_star, "t_star": run.t_star,
            "log10_t_star": math.log10(run.t_star) if math.isfinite(run.t_star)
            else run.tau_star / math.log(10.0), "status": "ok"}


def cmd_critical_ode_sweep(cfg: ExperimentConfig, args) -> int:
    if cfg.case != "ode-critical":
        raise ConfigError(f"critical-ode-sweep needs case = ode-critical, got {cfg.case!r}")
    p = cfg.model.p
    eps_list = list(cfg.sweep) or [cfg.model.eps]
    rows = _map(_ode_row, [(p, cfg.ode_C, cfg.ode_c0, e) for e in eps_list], args.workers)
    ok_rows = [r for r in rows if r["status"] == "ok"]
    summary = _fit_summary([(r["eps"], r["tau_star"]) for r in ok_rows], -p * (p - 1.0), CRITICAL_TOL)
    summary["p"] = p
    summary["rows"] = rows
    _write_csv(args.out, "critical_ode_sweep.csv", ODE_COLUMNS, rows)
    _write_json(args.out, "critical_ode_fit.json", summary)
    lines = [f"eps={r['eps']:<8g} tau*={r.get('tau_star', float('nan')):<12.6g} "
             f"log10 t*={r.get('log10_t_star', float('nan')):.4g} status={r['status']}" for r in rows]
    lines.append(_fit_line(summary))
    _emit(args, summary, lines)
    if summary.get("consistent") is False:
        raise CheckFailed("fitted slope outside tolerance")
    return EXIT_OK


def cmd_ledger(cfg: ExperimentConfig, args) -> int:
    L = it.build_ledger(cfg.model, cfg.ledger_C1, cfg.ledger_j_max, cfg.ledger_T0)
    obj = L.to_dict()
    obj["sign_conditions"] = it.sign_conditions(L)
    obj["chain_holds"] = bool(it.chain_holds(L).all())
    if ex.gamma(cfg.model.p, cfg.model.n + cfg.model.mu1) > 0:
        sb = it.subcritical_blowup_time(L)
        obj["blowup"] = {"t_bound": sb.t_bound, "power_bound": sb.power_bound,
                         "beta_minus_alpha": sb.beta_minus_alpha, "gamma_ratio": sb.gamma_ratio,
                         "J_at_bound": sb.J_at_bound}
    lines = [f"{k:>10}  {obj[k]}" for k in ("r2", "C0", "C2", "C3", "C4", "alpha", "beta_led", "Sp_inf")]
    if "blowup" in obj:
        lines.append(f"{'t_bound':>10}  {obj['blowup']['t_bound']}")
    _emit(args, obj, lines)
    _write_json(args.out, "ledger.json", obj)
    return EXIT_OK


COMMANDS = {
    "exponents": cmd_exponents,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "lifespan-sweep": cmd_lifespan_sweep,
    "critical-ode-sweep": cmd_critical_ode_sweep,
    "ledger": cmd_ledger,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--out", type=Path, help="directory for CSV/JSON outputs")
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--pS", action="store_true", help="set p to the Strauss exponent p_S(n+mu1)")
    common.add_argument("--json", action="store_true", help="print JSON instead of a table")
    parser = argparse.ArgumentParser(prog="strausslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("STRAUSSLAB_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.pS:
            cfg = cfg.with_strauss_p()
        if args.out is None and cfg.output_dir:
            args.out = Path(cfg.output_dir)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (StraussLabError, ArithmeticError, DomainError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
