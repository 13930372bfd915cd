"""Parameter sweeps over the reference scenarios, emitted as CSV tables.

Every sweep is a pure function of its arguments; grid points are solved in
order and written with full float precision, so reruns give identical bytes.
Quantities summed over periods (revenue, loads, sell-back, objective terms,
utility per consumer) are totals over the day; prices and demand spread are
averaged over periods.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import consumer
from .formulations import (
    Formulation,
    PricingOutcome,
    RetailEnv,
    Weights,
    solve_period,
)
from .scenario import NET_METERING_P_B, PeriodData, Scenario

DEFAULT_ETA_GRID = tuple(round(0.1 * i, 10) for i in range(16))
DEFAULT_E1_GRID = tuple(0.5 * i for i in range(1, 11))
DEFAULT_E2_GRID = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
ETA_SWEEP_WEIGHTS = Weights(1.0, 0.1, 1.0)
E1_SWEEP_BASE = Weights(1.0, 1.0, 1.0)
NET_METERING_WEIGHTS = ETA_SWEEP_WEIGHTS
SOLAR_PERIODS = (2, 3, 4, 5)


@dataclass(frozen=True)
class MetricRecord:
    avg_price: float
    revenue: float
    total_load: float
    total_elastic_load: float
    avg_consumer_utility: float
    demand_stddev: float
    sellback_total: float
    objective: float
    solver_objective: float
    cost_term: float
    welfare_penalty: float


_SUMMED = {
    "revenue",
    "total_load",
    "total_elastic_load",
    "avg_consumer_utility",
    "sellback_total",
    "objective",
    "solver_objective",
    "cost_term",
    "welfare_penalty",
}
METRIC_NAMES = tuple(f.name for f in fields(MetricRecord))


def metrics(outcome: PricingOutcome, data: PeriodData) -> MetricRecord:
    """Reporting metrics for one solved period."""
    if outcome.net_metering:
        util = consumer.prosumer_utility(
            outcome.demands, data.s, data.m, data.omega, outcome.total_prices, data.alpha
        )
        sellback = float(np.maximum(-outcome.demands, 0.0).sum())
    else:
        util = consumer.utility(outcome.demands, data.omega, outcome.total_prices, data.alpha)
        sellback = 0.0
    return MetricRecord(
        avg_price=float(np.mean(outcome.total_prices)),
        revenue=outcome.revenue,
        total_load=float(outcome.demands.sum()),
        total_elastic_load=float(outcome.elastic_demands.sum()),
        avg_consumer_utility=float(np.mean(util)),
        demand_stddev=float(np.std(outcome.elastic_demands)),
        sellback_total=sellback,
        objective=outcome.objective,
        solver_objective=outcome.solver_objective,
        cost_term=outcome.cost_term,
        welfare_penalty=outcome.welfare_penalty,
    )


def aggregate(records) -> MetricRecord:
    records = list(records)
    out = {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in records]
        out[name] = float(math.fsum(vals)) if name in _SUMMED else float(math.fsum(vals) / len(vals))
    return MetricRecord(**out)


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple
    rows: tuple
    scenario_label: str
    formulation: str
    weights: Weights
    periods: tuple

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _periods(scenario: Scenario, periods):
    return tuple(scenario.periods) if periods is None else tuple(periods)


def _solve_day(scenario, periods, formulation, weights, env):
    outcomes = [solve_period(scenario, k, formulation, weights, env) for k in periods]
    record = aggregate(metrics(o, scenario.period(k)) for o, k in zip(outcomes, periods))
    return record, outcomes


@dataclass(frozen=True)
class RedistributionRow:
    user_id: int
    omega: float
    price_at_eta_min: float
    price_at_eta_max: float
    demand_at_eta_min: float
    demand_at_eta_max: float


def sweep_eta(
    scenario: Scenario,
    formulation="f1",
    weights: Weights = ETA_SWEEP_WEIGHTS,
    eta_grid=DEFAULT_ETA_GRID,
    *,
    periods=None,
    report_period: int | None = None,
):
    """Metrics as the allowed price spread grows.

    Returns ``(SweepResult, redistribution)`` where ``redistribution`` lists
    each user's total price and elastic demand in ``report_period`` (default:
    the period with the largest mean inelastic demand) at the smallest and
    largest grid value.
    """
    grid = _ascending(eta_grid)
    periods = _periods(scenario, periods)
    form = Formulation.parse(formulation)
    rows, first, last = [], None, None
    for eta in grid:
        env = RetailEnv.for_scenario(scenario, eta)
        record, outcomes = _solve_day(scenario, periods, form, weights, env)
        rows.append(record)
        first = outcomes if first is None else first
        last = outcomes
    if report_period is None:
        report_period = max(periods, key=lambda k: (scenario.period(k).m.mean(), -k))
    idx = periods.index(report_period)
    lo, hi = first[idx], last[idx]
    data = scenario.period(report_period)
    redistribution = [
        RedistributionRow(
            i + 1,
            float(data.omega[i]),
            float(lo.total_prices[i]),
            float(hi.total_prices[i]),
            float(lo.elastic_demands[i]),
            float(hi.elastic_demands[i]),
        )
        for i in range(scenario.n_users)
    ]
    result = SweepResult("eta", grid, tuple(rows), scenario.label, form.value, weights, periods)
    return result, redistribution


def sweep_e1(
    scenario: Scenario,
    formulations=("f1", "f2", "f3"),
    base: Weights = E1_SWEEP_BASE,
    e1_grid=DEFAULT_E1_GRID,
    *,
    eta: float = 0.0,
    periods=None,
):
    """One SweepResult per formulation over the same revenue-weight grid."""
    grid = _ascending(e1_grid)
    periods = _periods(scenario, periods)
    env = RetailEnv.for_scenario(scenario, eta)
    out = {}
    for tag in formulations:
        form = Formulation.parse(tag)
        rows = []
        for e1 in grid:
            w = replace(base, e1=e1)
            rows.append(_solve_day(scenario, periods, form, w, env)[0])
        out[form.value] = SweepResult("e1", grid, tuple(rows), scenario.label, form.value, base, periods)
    return out


@dataclass(frozen=True)
class NetMeteringRow:
    period: int
    model: str
    normal_price: float
    nm_price: float
    normal_load: float
    nm_load: float
    normal_revenue: float
    nm_revenue: float
    nm_sellback: float


def compare_net_metering(
    scenario: Scenario,
    weights: Weights = NET_METERING_WEIGHTS,
    eta: float = math.inf,
    *,
    normal_formulation="f1",
    nm_formulation="f4r1",
    p_b: float = NET_METERING_P_B,
):
    """Per-period comparison of ordinary pricing against net metering.

    Both sides are reported as billed quantities so they are comparable:
    the normal side's load is ``sum(m + x)`` and its revenue includes the
    base price on inelastic demand; the net-metering side reports ``sum(Z)``
    and ``sum(P * Z)``. Periods without generation use the normal model on
    both sides.
    """
    normal_sc = scenario.with_base_price(p_b)
    env_normal = RetailEnv.for_scenario(normal_sc, eta)
    env_nm = RetailEnv(p_b=0.0, P=scenario.P_cap, eta=eta)
    rows = []
    for k in scenario.periods:
        data = scenario.period(k)
        normal = solve_period(normal_sc, k, normal_formulation, weights, env_normal)
        n_price, n_load, n_rev = _billed(normal, data, p_b)
        if data.has_solar:
            nm = solve_period(scenario, k, nm_formulation, weights, env_nm)
            nm_price, nm_load, nm_rev = _billed(nm, data, p_b)
            sell = float(np.maximum(-nm.demands, 0.0).sum())
            model = "net-metering"
        else:
            nm_price, nm_load, nm_rev, sell = n_price, n_load, n_rev, 0.0
            model = "normal"
        rows.append(NetMeteringRow(k, model, n_price, nm_price, n_load, nm_load, n_rev, nm_rev, sell))
    return rows


def _billed(outcome: PricingOutcome, data: PeriodData, p_b: float):
    price = float(np.mean(outcome.total_prices))
    if outcome.net_metering:
        return price, float(outcome.demands.sum()), outcome.revenue
    load = float(np.sum(data.m) + outcome.demands.sum())
    return price, load, outcome.revenue + p_b * float(np.sum(data.m))


def sweep_e2_sellback(
    scenario: Scenario,
    base: Weights = NET_METERING_WEIGHTS,
    e2_grid=DEFAULT_E2_GRID,
    *,
    eta: float = math.inf,
    formulation="f4r1",
    periods=SOLAR_PERIODS,
):
    """Energy sold back, summed over the solar periods, as the supply-cost weight grows."""
    grid = _ascending(e2_grid)
    periods = tuple(periods)
    form = Formulation.parse(formulation)
    env = RetailEnv(p_b=0.0, P=scenario.P_cap, eta=eta)
    rows = []
    for e2 in grid:
        w = replace(base, e2=e2)
        rows.append(_solve_day(scenario, periods, form, w, env)[0])
    return SweepResult("e2", grid, tuple(rows), scenario.label, form.value, base, periods)


def sweep_eta_net_metering(
    scenario: Scenario,
    weights: Weights = NET_METERING_WEIGHTS,
    eta_grid=DEFAULT_ETA_GRID,
    *,
    formulation="f4r1",
    periods=SOLAR_PERIODS,
):
    grid = _ascending(eta_grid)
    periods = tuple(periods)
    form = Formulation.parse(formulation)
    rows = []
    for eta in grid:
        env = RetailEnv(p_b=0.0, P=scenario.P_cap, eta=eta)
        rows.append(_solve_day(scenario, periods, form, weights, env)[0])
    return SweepResult("eta", grid, tuple(rows), scenario.label, form.value, weights, periods)


def _ascending(grid):
    grid = tuple(float(v) for v in grid)
    if not grid:
        raise ValueError("grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly ascending")
    return grid


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def sweep_csv(results) -> str:
    """CSV text for one or more SweepResults (same axis), one row per grid point."""
    if isinstance(results, SweepResult):
        results = [results]
    results = list(results)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["formulation", results[0].axis, *METRIC_NAMES])
    for res in results:
        for v, row in zip(res.values, res.rows):
            w.writerow([res.formulation, _fmt(v), *(_fmt(getattr(row, n)) for n in METRIC_NAMES)])
    return buf.getvalue()


def rows_csv(rows) -> str:
    """CSV text for a list of flat dataclass rows (redistribution, net-metering tables)."""
    rows = list(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        names = [f.name for f in fields(rows[0])]
        w.writerow(names)
        for r in rows:
            d = asdict(r)
            w.writerow([_fmt(d[n]) for n in names])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


__all__ = [
    "MetricRecord",
    "SweepResult",
    "RedistributionRow",
    "NetMeteringRow",
    "metrics",
    "aggregate",
    "sweep_eta",
    "sweep_e1",
    "compare_net_metering",
    "sweep_e2_sellback",
    "sweep_eta_net_metering",
    "sweep_csv",
    "rows_csv",
]
