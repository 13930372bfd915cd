"""Command-line front end.

Exit codes: 0 success, 1 domain error (message carries a stable error code),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import experiments as ex
from . import scenario as scn
from .errors import GridPriceError
from .formulations import (
    DEFAULT_GRID_STEP,
    Formulation,
    RetailEnv,
    Weights,
    eta_star,
    eta_star_net_metering,
    evaluate_net_metering,
    evaluate_normal,
    fairness_violations,
    oracle_f0,
    solve_period,
)
from .qp import kkt_residuals

SEED_ENV = "GRIDPRICE_SEED"


def _weights(text):
    try:
        return Weights.parse(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _eta(text):
    if text.lower() in ("inf", "unbounded", "none"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"eta must be a number or 'inf', got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("eta must be nonnegative")
    return v


def _grid(text):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("grid must not be empty")
    return vals


def _formulation(text):
    try:
        return Formulation.parse(text)
    except GridPriceError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise GridPriceError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return scn.REFERENCE_SEED


def _scenario(args, solar=False):
    if args.scenario:
        sc = scn.load(args.scenario)
    else:
        sc = scn.generate_reference(_seed(args), args.users)
    if solar and not any(any(c.s) for c in sc.consumers):
        sc = scn.attach_solar(sc)
    return sc


def _emit(text, path):
    if path:
        ex.write_text(path, text)
    else:
        sys.stdout.write(text)


def _env(args, sc, **kw):
    return RetailEnv.for_scenario(sc, args.eta, **kw)


def cmd_generate(args):
    sc = scn.generate_reference(_seed(args), args.users, p_b=args.p_b, P_cap=args.cap)
    if args.solar:
        sc = scn.attach_solar(sc, scale=args.solar_scale, jitter=0.0 if args.no_jitter else scn.DEFAULT_SOLAR_JITTER)
    scn.save(sc, args.out)
    print(f"wrote {args.out}: {sc.n_users} users, {sc.n_periods} periods, seed {sc.seed}")
    return 0


def _summary(outcome, sc):
    data = sc.period(outcome.period)
    lines = [
        f"formulation {outcome.formulation}  period {outcome.period}  weights {outcome.weights}  "
        f"eta {'inf' if math.isinf(outcome.eta) else f'{outcome.eta:g}'}",
        f"{'user':>4} {'omega':>9} {'price':>9} {'demand':>9}",
    ]
    for i, (w, p, x) in enumerate(zip(data.omega, outcome.total_prices, outcome.demands), 1):
        lines.append(f"{i:>4} {w:>9.4f} {p:>9.4f} {x:>9.4f}")
    lines.append(
        f"revenue {outcome.revenue:.6g}  cost {outcome.cost_term:.6g}  welfare {outcome.welfare_penalty:.6g}  "
        f"objective {outcome.objective:.10g}"
    )
    return "\n".join(lines) + "\n"


def _outcome_doc(outcome, sc):
    doc = outcome.to_dict()
    doc["scenario_label"] = sc.label
    return json.dumps(doc, indent=2) + "\n"


def _write_outcome(args, outcome, sc):
    doc = _outcome_doc(outcome, sc)
    if args.out:
        ex.write_text(args.out, doc)
        sys.stdout.write(_summary(outcome, sc))
    else:
        sys.stdout.write(doc)
        sys.stderr.write(_summary(outcome, sc))


def cmd_solve(args):
    sc = _scenario(args)
    kw = {}
    if args.p_b is not None:
        kw["p_b"] = args.p_b
    if args.cap is not None:
        kw["P"] = args.cap
    outcome = solve_period(sc, args.period, args.formulation, args.weights, _env(args, sc, **kw), tol=args.tol, max_iter=args.max_iter)
    _write_outcome(args, outcome, sc)
    return 0


def cmd_oracle(args):
    sc = _scenario(args)
    kw = {}
    if args.cap is not None:
        kw["P"] = args.cap
    outcome = oracle_f0(sc, args.period, args.weights, _env(args, sc, **kw), args.grid, net_metering=args.net_metering)
    _write_outcome(args, outcome, sc)
    return 0


def cmd_sweep_eta(args):
    sc = _scenario(args)
    result, redistribution = ex.sweep_eta(sc, args.formulation, args.weights, args.grid)
    _emit(ex.sweep_csv(result), args.out)
    if args.redistribution:
        ex.write_text(args.redistribution, ex.rows_csv(redistribution))
    return 0


def cmd_sweep_e1(args):
    sc = _scenario(args)
    results = ex.sweep_e1(sc, args.formulations, args.weights, args.grid, eta=args.eta)
    _emit(ex.sweep_csv(results.values()), args.out)
    return 0


def cmd_compare_nm(args):
    sc = _scenario(args, solar=True)
    rows = ex.compare_net_metering(sc, args.weights, args.eta, p_b=args.p_b)
    _emit(ex.rows_csv(rows), args.out)
    return 0


def cmd_sweep_e2(args):
    sc = _scenario(args, solar=True)
    result = ex.sweep_e2_sellback(sc, args.weights, args.grid, eta=args.eta)
    _emit(ex.sweep_csv(result), args.out)
    return 0


def cmd_sweep_eta_nm(args):
    sc = _scenario(args, solar=True)
    result = ex.sweep_eta_net_metering(sc, args.weights, args.grid)
    _emit(ex.sweep_csv(result), args.out)
    return 0


def cmd_eta_star(args):
    sc = _scenario(args)
    alphas = {c.alpha for c in sc.consumers}
    if len(alphas) != 1:
        raise GridPriceError("closed-form eta* needs a common alpha across users")
    alpha = alphas.pop()
    lines = ["period,eta_star,eta_star_net_metering"]
    for k in sc.periods:
        d = sc.period(k)
        lines.append(
            f"{k},{eta_star(d.omega, args.weights, alpha)!r},{eta_star_net_metering(d.omega, d.s, args.weights, alpha)!r}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_validate(args):
    try:
        with open(args.outcome, encoding="utf-8") as fh:
            doc = json.load(fh)
        sc = scn.load(args.scenario)
        form = Formulation.parse(doc["formulation"])
        w = doc["weights"]
        weights = Weights(w["e1"], w["e2"], w["e3"], gamma=w["gamma"])
        eta = math.inf if doc["eta"] is None else float(doc["eta"])
        env = RetailEnv(p_b=doc["p_b"], P=doc["price_cap"], eta=eta)
        period = int(doc["period"])
        prices = np.asarray(doc["prices"], dtype=float)
        demands = np.asarray(doc["demands"], dtype=float)
        reported = float(doc["objective"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise GridPriceError(f"unreadable outcome file: {exc}") from exc

    data = sc.period(period)
    failures, notes = [], []
    if prices.size != data.n_users or demands.size != data.n_users:
        raise GridPriceError("outcome does not match the scenario's user count")
    if np.any(prices < -1e-9) or np.any(prices > env.P + 1e-9):
        failures.append("prices outside [0, P]")
    if math.isfinite(eta) and prices.max() - prices.min() > eta + 1e-6:
        failures.append(f"price spread {prices.max() - prices.min():.3g} exceeds eta {eta:g}")
    bad = fairness_violations(data.omega, prices)
    if bad:
        msg = f"{len(bad)} willingness-monotonicity violations, first {bad[0]}"
        (failures if form in (Formulation.F1, Formulation.F2) else notes).append(msg)

    if form.net_metering:
        recomputed = evaluate_net_metering(prices, demands, data, weights)[3]
    else:
        recomputed = evaluate_normal(prices, demands, data, weights, env.p_b)[3]
    if abs(recomputed - reported) > 1e-8 * max(1.0, abs(reported)):
        failures.append(f"objective mismatch: reported {reported!r}, recomputed {recomputed!r}")

    if form not in (Formulation.ORACLE0, Formulation.ORACLE4):
        fresh = solve_period(sc, period, form, weights, env)
        res = kkt_residuals(fresh.extras["problem"], fresh.extras["qp_solution"])
        if res.max() > 1e-7:
            failures.append(f"KKT residuals too large: {res}")
        gap = abs(fresh.objective - reported)
        if gap > 1e-6 * max(1.0, abs(reported)):
            failures.append(f"re-solve objective differs by {gap:.3g}")
        notes.append(
            f"KKT stationarity {res.stationarity:.2e} primal {res.primal:.2e} complementarity {res.complementarity:.2e}"
        )

    for n in notes:
        print(f"note: {n}")
    for f in failures:
        print(f"FAIL: {f}")
    if failures:
        raise GridPriceError(f"{len(failures)} check(s) failed")
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridprice",
        description="Discriminatory retail electricity pricing: solve, sweep, and validate.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--scenario", help="scenario JSON (default: generate the reference scenario)")
        sp.add_argument("--seed", type=int, default=None, help=f"reference seed (default ${SEED_ENV} or {scn.REFERENCE_SEED})")
        sp.add_argument("--users", type=int, default=scn.REFERENCE_USERS)

    def weights_arg(sp, default):
        sp.add_argument(
            "--weights",
            type=_weights,
            default=default,
            help=f"e1,e2,e3[:gamma] (default {default.e1:g},{default.e2:g},{default.e3:g}; gamma defaults to 10*max)",
        )

    g = sub.add_parser("generate", help="write a reference scenario")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--users", type=int, default=scn.REFERENCE_USERS)
    g.add_argument("--p-b", type=float, default=scn.REFERENCE_P_B)
    g.add_argument("--cap", type=float, default=scn.REFERENCE_PRICE_CAP)
    g.add_argument("--solar", action="store_true", help="attach the default rooftop solar profile")
    g.add_argument("--solar-scale", type=float, default=1.0)
    g.add_argument("--no-jitter", action="store_true")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one period")
    scenario_args(s)
    s.add_argument("--period", type=int, required=True)
    s.add_argument("--formulation", type=_formulation, default=Formulation.F1)
    weights_arg(s, Weights())
    s.add_argument("--eta", type=_eta, default=math.inf)
    s.add_argument("--p-b", type=float, default=None)
    s.add_argument("--cap", type=float, default=None)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=20000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="exhaustive grid search on the exact model (N <= 4)")
    scenario_args(o)
    o.add_argument("--period", type=int, required=True)
    weights_arg(o, Weights())
    o.add_argument("--eta", type=_eta, default=math.inf)
    o.add_argument("--grid", type=float, default=DEFAULT_GRID_STEP, help="grid spacing")
    o.add_argument("--cap", type=float, default=None)
    o.add_argument("--net-metering", action="store_true")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    se = sub.add_parser("sweep-eta", help="metrics versus the discrimination bound")
    scenario_args(se)
    se.add_argument("--formulation", type=_formulation, default=Formulation.F1)
    weights_arg(se, ex.ETA_SWEEP_WEIGHTS)
    se.add_argument("--grid", type=_grid, default=ex.DEFAULT_ETA_GRID)
    se.add_argument("--out")
    se.add_argument("--redistribution", help="also write the per-user price/demand table here")
    se.set_defaults(func=cmd_sweep_eta)

    s1 = sub.add_parser("sweep-e1", help="metrics versus the revenue weight for several formulations")
    scenario_args(s1)
    s1.add_argument("--formulations", type=lambda t: [_formulation(x) for x in t.split(",")], default=["f1", "f2", "f3"])
    weights_arg(s1, ex.E1_SWEEP_BASE)
    s1.add_argument("--grid", type=_grid, default=ex.DEFAULT_E1_GRID)
    s1.add_argument("--eta", type=_eta, default=0.0)
    s1.add_argument("--out")
    s1.set_defaults(func=cmd_sweep_e1)

    nm = sub.add_parser("compare-nm", help="per-period normal versus net-metering prices, loads and revenue")
    scenario_args(nm)
    weights_arg(nm, ex.NET_METERING_WEIGHTS)
    nm.add_argument("--eta", type=_eta, default=math.inf)
    nm.add_argument("--p-b", type=float, default=scn.NET_METERING_P_B, help="base price on the normal side")
    nm.add_argument("--out")
    nm.set_defaults(func=cmd_compare_nm)

    e2 = sub.add_parser("sweep-e2-sellback", help="sell-back versus the supply-cost weight")
    scenario_args(e2)
    weights_arg(e2, ex.NET_METERING_WEIGHTS)
    e2.add_argument("--grid", type=_grid, default=ex.DEFAULT_E2_GRID)
    e2.add_argument("--eta", type=_eta, default=math.inf)
    e2.add_argument("--out")
    e2.set_defaults(func=cmd_sweep_e2)

    en = sub.add_parser("sweep-eta-nm", help="net-metering metrics versus the discrimination bound")
    scenario_args(en)
    weights_arg(en, ex.NET_METERING_WEIGHTS)
    en.add_argument("--grid", type=_grid, default=ex.DEFAULT_ETA_GRID)
    en.add_argument("--out")
    en.set_defaults(func=cmd_sweep_eta_nm)

    es = sub.add_parser("eta-star", help="closed-form optimal discrimination level per period")
    scenario_args(es)
    weights_arg(es, Weights())
    es.add_argument("--out")
    es.set_defaults(func=cmd_eta_star)

    v = sub.add_parser("validate", help="check a stored outcome (fairness, bounds, objective, KKT)")
    v.add_argument("--outcome", required=True)
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except GridPriceError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except IndexError as exc:
        print(f"error [BAD_PERIOD]: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error [INVALID_INPUT]: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
