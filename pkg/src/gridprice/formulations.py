"""Retailer pricing problems lowered onto the QP core.

Every formulation is solved one period at a time. Variable layout of the
lowered QPs (``N`` users):

* ``f1``, ``f4r1``: ``[prices(N)]``
* ``f2``, ``f4r2``: ``[prices(N), slack(N)]``
* ``f3``:          ``[prices(N), demands(N)]``

followed by the discrimination-band auxiliaries ``[upper, lower]`` whenever
the band is finite (or ``[upper, lower, eta]`` when eta is a decision
variable). The band ``max(p) - min(p) <= eta`` is equivalent to all pairwise
constraints ``|p_i - p_j| <= eta`` and needs only ``2N + 1`` rows.

For the normal model the decision variable is the surcharge ``p_i`` above the
base price, so users pay ``p_i + p_b``. Under net metering the decision
variable is the full price ``P_i`` applied to net purchases and sell-back.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import consumer
from .errors import (
    DegenerateWeights,
    InfeasibleEnv,
    SolverFailure,
    TooManyUsers,
    UnknownFormulation,
)
from .qp import QpProblem, QpSolution, solve_qp
from .scenario import PeriodData, Scenario

UNBOUNDED = math.inf
ORACLE_MAX_USERS = 4
DEFAULT_GRID_STEP = 0.01
_CLIP_TOL = 1e-9


class Formulation(str, enum.Enum):
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    F4R1 = "f4r1"
    F4R2 = "f4r2"
    ORACLE0 = "oracle0"
    ORACLE4 = "oracle4"

    @classmethod
    def parse(cls, tag) -> "Formulation":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise UnknownFormulation(
                f"unknown formulation {tag!r}; expected one of {[f.value for f in cls]}"
            ) from None

    @property
    def net_metering(self) -> bool:
        return self in (Formulation.F4R1, Formulation.F4R2, Formulation.ORACLE4)


@dataclass(frozen=True)
class Weights:
    """Objective weights: revenue ``e1``, supply cost ``e2``, welfare ``e3``.

    ``gamma`` is the demand-consistency penalty used only by ``f3``; it
    defaults to ten times the largest of the other weights.
    """

    e1: float = 1.0
    e2: float = 1.0
    e3: float = 1.0
    gamma: float | None = None

    def __post_init__(self):
        for name in ("e1", "e2", "e3"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.gamma is not None:
            object.__setattr__(self, "gamma", float(self.gamma))
        if min(self.e1, self.e2, self.e3, self.penalty) < 0:
            raise ValueError("weights must be nonnegative")
        if self.e1 == self.e2 == self.e3 == 0:
            raise ValueError("at least one of e1, e2, e3 must be positive")

    @property
    def penalty(self) -> float:
        """Effective f3 consistency penalty."""
        return 10.0 * max(self.e1, self.e2, self.e3) if self.gamma is None else self.gamma

    @classmethod
    def parse(cls, text: str) -> "Weights":
        """Parse ``"e1,e2,e3"`` with an optional ``":gamma"`` suffix."""
        head, _, gamma = str(text).partition(":")
        parts = [p.strip() for p in head.split(",")]
        if len(parts) != 3:
            raise ValueError(f"weights must look like e1,e2,e3[:gamma], got {text!r}")
        return cls(*map(float, parts), gamma=float(gamma) if gamma.strip() else None)

    def __str__(self):
        return f"{self.e1:g},{self.e2:g},{self.e3:g}:{self.penalty:g}"


@dataclass(frozen=True)
class RetailEnv:
    """Retailer-side constants for one solve.

    ``eta`` bounds the price spread (``math.inf`` for no bound). With
    ``eta_free`` the spread becomes a decision variable charged at
    ``eta_cost`` per unit in the objective.
    """

    p_b: float
    P: float
    eta: float = UNBOUNDED
    eta_free: bool = False
    eta_cost: float = 0.0

    def __post_init__(self):
        if self.p_b < 0:
            raise ValueError("base price must be nonnegative")
        if not self.P > 0:
            raise ValueError("price cap must be positive")
        if not self.eta >= 0:
            raise ValueError("eta must be nonnegative")
        if self.eta_cost < 0:
            raise ValueError("eta_cost must be nonnegative")

    @classmethod
    def for_scenario(cls, scenario: Scenario, eta: float = UNBOUNDED, **kw) -> "RetailEnv":
        kw.setdefault("p_b", scenario.p_b)
        kw.setdefault("P", scenario.P_cap)
        return cls(eta=eta, **kw)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.eta) or self.eta_free


@dataclass(frozen=True)
class PricingOutcome:
    """Prices, demands and the decomposed retailer objective for one period.

    ``objective`` is the exact (unrelaxed) retailer objective at the reported
    prices and demands::

        e1 * revenue - e2 * cost_term - e3 * welfare_penalty

    ``solver_objective`` is the value the relaxed formulation itself reached;
    the two agree for f1 and f4r1.
    """

    formulation: str
    period: int
    prices: np.ndarray
    total_prices: np.ndarray
    demands: np.ndarray
    elastic_demands: np.ndarray
    revenue: float
    cost_term: float
    welfare_penalty: float
    objective: float
    solver_objective: float
    weights: Weights
    eta: float
    p_b: float
    price_cap: float
    iterations: int = 0
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def net_metering(self) -> bool:
        return Formulation.parse(self.formulation).net_metering

    @property
    def spread(self) -> float:
        return float(self.prices.max() - self.prices.min())

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation,
            "period": self.period,
            "prices": self.prices.tolist(),
            "total_prices": self.total_prices.tolist(),
            "demands": self.demands.tolist(),
            "elastic_demands": self.elastic_demands.tolist(),
            "revenue": self.revenue,
            "cost_term": self.cost_term,
            "welfare_penalty": self.welfare_penalty,
            "objective": self.objective,
            "solver_objective": self.solver_objective,
            "weights": {"e1": self.weights.e1, "e2": self.weights.e2, "e3": self.weights.e3, "gamma": self.weights.penalty},
            "eta": None if math.isinf(self.eta) else self.eta,
            "p_b": self.p_b,
            "price_cap": self.price_cap,
            "iterations": self.iterations,
        }


class _Quadratic:
    """Accumulates ``1/2 v'Qv + c'v + k`` from products of affine forms."""

    def __init__(self, n):
        self.Q = np.zeros((n, n))
        self.c = np.zeros(n)
        self.k = 0.0

    def product(self, coef, u, u0, w, w0):
        """Add ``coef * (u'v + u0) * (w'v + w0)``."""
        self.Q += coef * (np.outer(u, w) + np.outer(w, u))
        self.c += coef * (u * w0 + w * u0)
        self.k += coef * u0 * w0

    def square(self, coef, u, u0):
        self.product(coef, u, u0, u, u0)

    def linear(self, u, u0=0.0):
        self.c += u
        self.k += u0


@dataclass
class _Layout:
    n_users: int
    core: int
    band: int

    @property
    def n(self):
        return self.core + self.band


def _unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _band(layout: _Layout, env: RetailEnv, G, h, lower, upper, c):
    """Append the discrimination band rows over the first N variables."""
    N, n = layout.n_users, layout.n
    if not layout.band:
        return
    u_idx, l_idx = layout.core, layout.core + 1
    for i in range(N):
        G.append(_unit(n, i) - _unit(n, u_idx))
        h.append(0.0)
        G.append(_unit(n, l_idx) - _unit(n, i))
        h.append(0.0)
    row = _unit(n, u_idx) - _unit(n, l_idx)
    if env.eta_free:
        e_idx = layout.core + 2
        row = row - _unit(n, e_idx)
        h.append(0.0)
        lower[e_idx] = 0.0
        c[e_idx] += env.eta_cost
    else:
        h.append(env.eta)
    G.append(row)


def _layout(N, core, env):
    band = 0
    if N > 1 and env.bounded:
        band = 3 if env.eta_free else 2
    return _Layout(N, core, band)


def _linear_demand(data: PeriodData, env: RetailEnv, net_metering: bool):
    """Intercept ``beta`` and slope ``a`` of demand ``beta - a * price_var``,
    plus the offset ``sigma`` between decision variable and price paid."""
    a = 1.0 / data.alpha
    if net_metering:
        return data.m - data.s + a * data.omega, a, 0.0
    return a * (data.omega - env.p_b), a, env.p_b


def _substituted(data, weights, env, net_metering, slack):
    """Shared lowering for f1, f2, f4r1 and f4r2."""
    N = data.n_users
    beta, a, sigma = _linear_demand(data, env, net_metering)
    if not net_metering and np.any(data.omega < env.p_b):
        if not slack:
            raise InfeasibleEnv(
                f"base price {env.p_b:g} exceeds the willingness {data.omega.min():g} of some user; "
                "no price keeps every elastic demand nonnegative"
            )
    if net_metering and beta.sum() < 0:
        raise InfeasibleEnv("generation exceeds total demand at zero price; net purchases cannot be nonnegative")

    lay = _layout(N, 2 * N if slack else N, env)
    n = lay.n
    quad = _Quadratic(n)
    e1, e2, e3 = weights.e1, weights.e2, weights.e3
    for i in range(N):
        r = _unit(n, i)
        # -e1 * (r_i + sigma) * (beta_i - a_i r_i)
        quad.product(-e1, r, sigma, -a[i] * r, beta[i])
        # e3 * (a_i (r_i + sigma))^2: welfare deviation equals -a_i * price paid
        quad.square(e3, a[i] * r, a[i] * sigma)
    agg = np.zeros(n)
    agg[:N] = -a
    quad.square(e2, agg, beta.sum())

    G, h = [], []
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[:N] = 0.0
    upper[:N] = env.P
    if slack:
        # maximize sum(t) with t_i <= 0 and t_i <= a_i (omega_i - sigma - r_i)
        quad.linear(np.concatenate([np.zeros(N), -np.ones(N), np.zeros(n - 2 * N)]))
        upper[N : 2 * N] = 0.0
        for i in range(N):
            G.append(_unit(n, N + i) + a[i] * _unit(n, i))
            h.append(a[i] * (data.omega[i] - sigma))
    else:
        for i in range(N):
            G.append(_unit(n, i))
            h.append(data.omega[i] - sigma)
    if net_metering:
        G.append(agg.copy() * -1.0)  # sum_i a_i r_i <= sum_i beta_i
        h.append(beta.sum())
    _band(lay, env, G, h, lower, upper, quad.c)
    return QpProblem(quad.Q, quad.c, np.array(G), np.array(h), lower=lower, upper=upper, offset=quad.k)


def build_f1(data: PeriodData, weights: Weights, env: RetailEnv) -> QpProblem:
    """Hard nonnegativity on every elastic demand; prices are the only variables."""
    return _substituted(data, weights, env, net_metering=False, slack=False)


def build_f2(data: PeriodData, weights: Weights, env: RetailEnv) -> QpProblem:
    """Negative demand allowed but penalized through slack variables."""
    return _substituted(data, weights, env, net_metering=False, slack=True)


def build_f3(data: PeriodData, weights: Weights, env: RetailEnv) -> QpProblem:
    """Joint prices and demands with a quadratic consistency penalty."""
    N = data.n_users
    a = 1.0 / data.alpha
    pb = env.p_b
    lay = _layout(N, 2 * N, env)
    n = lay.n
    quad = _Quadratic(n)
    e1, e2, e3, gamma = weights.e1, weights.e2, weights.e3, weights.penalty
    agg = np.zeros(n)
    for i in range(N):
        p, x = _unit(n, i), _unit(n, N + i)
        quad.product(-e1, p, pb, x, 0.0)
        quad.square(e3, p, pb)
        # x_i - a_i (omega_i - p_b - p_i)
        quad.square(gamma, x + a[i] * p, -a[i] * (data.omega[i] - pb))
        agg += x
    quad.square(e2, agg, 0.0)

    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[:N], upper[:N] = 0.0, env.P
    lower[N : 2 * N], upper[N : 2 * N] = 0.0, data.omega * a
    G, h = [], []
    _band(lay, env, G, h, lower, upper, quad.c)
    G = np.array(G) if G else None
    return QpProblem(quad.Q, quad.c, G, np.array(h) if G is not None else None, lower=lower, upper=upper, offset=quad.k)


def build_f4(data: PeriodData, weights: Weights, env: RetailEnv, variant: str = "relaxed1") -> QpProblem:
    """Net-metering retailer problem, relaxed like f1 (``relaxed1``) or f2 (``relaxed2``)."""
    variant = str(variant).lower()
    if variant not in ("relaxed1", "relaxed2"):
        raise ValueError("variant must be 'relaxed1' or 'relaxed2'")
    return _substituted(data, weights, env, net_metering=True, slack=variant == "relaxed2")


_BUILDERS = {
    Formulation.F1: build_f1,
    Formulation.F2: build_f2,
    Formulation.F3: build_f3,
    Formulation.F4R1: lambda d, w, e: build_f4(d, w, e, "relaxed1"),
    Formulation.F4R2: lambda d, w, e: build_f4(d, w, e, "relaxed2"),
}


def evaluate_normal(prices, demands, data: PeriodData, weights: Weights, p_b: float):
    """Revenue, cost and welfare terms of the no-generation retailer objective."""
    prices = np.asarray(prices, dtype=float)
    x = np.asarray(demands, dtype=float)
    revenue = float(np.sum((prices + p_b) * x))
    cost = float(np.sum(x) ** 2)
    welfare = float(np.sum((x - data.omega / data.alpha) ** 2))
    return revenue, cost, welfare, weights.e1 * revenue - weights.e2 * cost - weights.e3 * welfare


def evaluate_net_metering(prices, net, data: PeriodData, weights: Weights):
    prices = np.asarray(prices, dtype=float)
    Z = np.asarray(net, dtype=float)
    revenue = float(np.sum(prices * Z))
    cost = float(np.sum(Z) ** 2)
    welfare = float(np.sum((Z + data.s - data.m - data.omega / data.alpha) ** 2))
    return revenue, cost, welfare, weights.e1 * revenue - weights.e2 * cost - weights.e3 * welfare


def _assemble(form, period, data, weights, env, prices, demands, solver_objective, eta, iterations=0, extras=None):
    if form.net_metering:
        rev, cost, welf, obj = evaluate_net_metering(prices, demands, data, weights)
        total = prices.copy()
        elastic = demands + data.s - data.m
    else:
        rev, cost, welf, obj = evaluate_normal(prices, demands, data, weights, env.p_b)
        total = prices + env.p_b
        elastic = demands.copy()
    for arr in (prices, total, demands, elastic):
        arr.setflags(write=False)
    return PricingOutcome(
        formulation=form.value,
        period=period,
        prices=prices,
        total_prices=total,
        demands=demands,
        elastic_demands=elastic,
        revenue=rev,
        cost_term=cost,
        welfare_penalty=welf,
        objective=obj,
        solver_objective=float(solver_objective),
        weights=weights,
        eta=float(eta),
        p_b=env.p_b,
        price_cap=env.P,
        iterations=iterations,
        extras=extras or {},
    )


def _clip(v, lo, hi):
    if np.any(v < lo - _CLIP_TOL) or np.any(v > hi + _CLIP_TOL):
        return v
    return np.clip(v, lo, hi)


def solve_data(
    data: PeriodData,
    formulation,
    weights: Weights,
    env: RetailEnv,
    *,
    period: int = 0,
    tol: float = 1e-8,
    max_iter: int = 20000,
    grid_step: float = DEFAULT_GRID_STEP,
) -> PricingOutcome:
    """Solve one period given its data directly (see ``solve_period``)."""
    form = Formulation.parse(formulation)
    if form in (Formulation.ORACLE0, Formulation.ORACLE4):
        return oracle_data(data, weights, env, grid_step=grid_step, net_metering=form.net_metering, period=period)

    problem = _BUILDERS[form](data, weights, env)
    sol = solve_qp(problem, tol=tol, max_iter=max_iter)
    if not sol.optimal:
        raise SolverFailure(f"{form.value} period {period}: solver returned {sol.status.value}", status=sol.status)
    N = data.n_users
    prices = _clip(np.array(sol.x[:N]), 0.0, env.P)
    beta, a, _ = _linear_demand(data, env, form.net_metering)
    if form is Formulation.F1:
        demands = _clip(beta - a * prices, 0.0, np.inf)
    elif form is Formulation.F2:
        demands = np.asarray(consumer.best_response(data.omega, prices + env.p_b, data.alpha), dtype=float)
    elif form is Formulation.F3:
        demands = _clip(np.array(sol.x[N : 2 * N]), 0.0, data.omega * a)
    elif form is Formulation.F4R1:
        demands = beta - a * prices
    else:
        demands = np.asarray(consumer.prosumer_best_response(data.omega, prices, data.alpha, data.m, data.s).Z, dtype=float)
    demands = np.atleast_1d(demands).astype(float)

    eta = env.eta
    if env.eta_free:
        # with a zero charge the band variable is only bounded below; report
        # the tightest bound the chosen prices actually need
        eta = float(prices.max() - prices.min()) if env.eta_cost == 0 else (float(sol.x[-1]) if N > 1 else 0.0)
    extras = {"qp_solution": sol, "problem": problem}
    return _assemble(form, period, data, weights, env, prices, demands, -sol.objective, eta, sol.iterations, extras)


def solve_period(
    scenario: Scenario,
    period: int,
    formulation,
    weights: Weights,
    env: RetailEnv | None = None,
    **kw,
) -> PricingOutcome:
    """Build, solve and decode one period of a scenario (periods are 1-based)."""
    env = env if env is not None else RetailEnv.for_scenario(scenario)
    return solve_data(scenario.period(period), formulation, weights, env, period=period, **kw)


def _grid(P, step):
    if not step > 0:
        raise ValueError("grid_step must be positive")
    count = int(math.floor(P / step + 1e-9))
    return np.arange(count + 1) * step


def oracle_data(
    data: PeriodData,
    weights: Weights,
    env: RetailEnv,
    *,
    grid_step: float = DEFAULT_GRID_STEP,
    net_metering: bool = False,
    period: int = 0,
) -> PricingOutcome:
    """Exhaustive price-grid search with exact best responses.

    Checks every point of ``[0, P]^N`` (spacing ``grid_step``) that satisfies
    the discrimination band, and under net metering ``sum(Z) >= 0``. Ties go
    to the lexicographically first grid point.
    """
    N = data.n_users
    if N > ORACLE_MAX_USERS:
        raise TooManyUsers(f"grid oracle handles at most {ORACLE_MAX_USERS} users, got {N}")
    grid = _grid(env.P, grid_step)
    L = grid.size
    e1, e2, e3 = weights.e1, weights.e2, weights.e3
    a = 1.0 / data.alpha

    # per-user separable value and demand on the grid, shape (N, L)
    if net_metering:
        resp = consumer.prosumer_best_response(
            data.omega[:, None], grid[None, :], data.alpha[:, None], data.m[:, None], data.s[:, None]
        )
        dem = np.asarray(resp.Z)
        dev = dem + (data.s - data.m - data.omega * a)[:, None]
        val = e1 * grid[None, :] * dem - e3 * dev**2
    else:
        dem = np.asarray(consumer.best_response(data.omega[:, None], grid[None, :] + env.p_b, data.alpha[:, None]))
        val = e1 * (grid[None, :] + env.p_b) * dem - e3 * (dem - (data.omega * a)[:, None]) ** 2

    eta = env.eta if math.isfinite(env.eta) and not env.eta_free else math.inf
    band_tol = 1e-9 * max(1.0, env.P)
    best = (-math.inf, None)
    tail = min(N, 2)
    head = N - tail
    for combo in itertools.product(range(L), repeat=head):
        head_p = grid[list(combo)]
        if head and head_p.max() - head_p.min() > eta + band_tol:
            continue
        base_val = sum(val[i, j] for i, j in enumerate(combo))
        base_dem = sum(dem[i, j] for i, j in enumerate(combo))
        if tail == 1:
            V = base_val + val[head]
            D = base_dem + dem[head]
            hi = np.maximum.reduce([grid, np.full(L, head_p.max() if head else -np.inf)])
            lo = np.minimum.reduce([grid, np.full(L, head_p.min() if head else np.inf)])
        else:
            V = base_val + val[head][:, None] + val[head + 1][None, :]
            D = base_dem + dem[head][:, None] + dem[head + 1][None, :]
            g1, g2 = grid[:, None], grid[None, :]
            hi = np.maximum(g1, g2)
            lo = np.minimum(g1, g2)
            if head:
                hi = np.maximum(hi, head_p.max())
                lo = np.minimum(lo, head_p.min())
        obj = V - e2 * D**2
        mask = hi - lo <= eta + band_tol
        if net_metering:
            mask &= D >= -1e-12
        if not mask.any():
            continue
        obj = np.where(mask, obj, -np.inf)
        flat = int(np.argmax(obj))
        if obj.flat[flat] > best[0]:
            idx = np.unravel_index(flat, obj.shape)
            best = (float(obj.flat[flat]), tuple(combo) + tuple(int(i) for i in idx))
    if best[1] is None:
        raise InfeasibleEnv("no grid point satisfies the constraints")

    prices = grid[list(best[1])].astype(float)
    if net_metering:
        demands = np.atleast_1d(np.asarray(consumer.prosumer_best_response(data.omega, prices, data.alpha, data.m, data.s).Z, dtype=float))
        form = Formulation.ORACLE4
    else:
        demands = np.atleast_1d(np.asarray(consumer.best_response(data.omega, prices + env.p_b, data.alpha), dtype=float))
        form = Formulation.ORACLE0
    outcome = _assemble(form, period, data, weights, env, prices, demands, best[0], eta if math.isfinite(eta) else math.inf)
    return outcome


def oracle_f0(scenario: Scenario, period: int, weights: Weights, env: RetailEnv | None = None, grid_step: float = DEFAULT_GRID_STEP, *, net_metering: bool = False) -> PricingOutcome:
    env = env if env is not None else RetailEnv.for_scenario(scenario)
    return oracle_data(scenario.period(period), weights, env, grid_step=grid_step, net_metering=net_metering, period=period)


def _check_degenerate(weights: Weights, alpha: float):
    if not weights.e1 * alpha + weights.e3 > 0:
        raise DegenerateWeights("closed form needs e1 * alpha + e3 > 0")


def closed_form_prices(omega, weights: Weights, alpha: float, beta: float = 1.0) -> np.ndarray:
    """Interior stationary prices of f1 with zero base price and no active bounds.

    Solves the stationarity system in two steps: the aggregate price first,
    then each individual price given the aggregate.
    """
    omega = np.asarray(omega, dtype=float)
    _check_degenerate(weights, alpha)
    e1, e2, e3 = weights.e1, weights.e2, weights.e3
    N = omega.size
    w_sum = omega.sum()
    p_sum = (e1 + 2 * N * beta * e2 / alpha) * w_sum / (2 * (e1 + e3 / alpha + N * beta * e2 / alpha))
    coupling = 2 * beta * e2 / alpha**2 * (w_sum - p_sum)
    return (e1 * omega / alpha + coupling) / (2 * (e1 / alpha + e3 / alpha**2))


def eta_star(omega, weights: Weights, alpha: float) -> float:
    """Price spread of the interior optimum; discrimination bounds above it never bind."""
    omega = np.asarray(omega, dtype=float)
    _check_degenerate(weights, alpha)
    e1, e3 = weights.e1, weights.e3
    return float(e1 * alpha * (omega.max() - omega.min()) / (2 * (alpha * e1 + e3)))


def eta_star_net_metering(omega, s, weights: Weights, alpha: float) -> float:
    omega = np.asarray(omega, dtype=float)
    s = np.asarray(s, dtype=float)
    _check_degenerate(weights, alpha)
    e1, e3 = weights.e1, weights.e3
    spread = omega.max() - omega.min() - alpha * (s.min() - s.max())
    return float(e1 * alpha * spread / (2 * (e3 + alpha * e1)))


def fairness_violations(omega, prices, tol: float = 1e-6, equal_tol: float = 1e-9):
    """Pairs ``(i, j)`` that break willingness-monotone pricing.

    A pair violates when ``omega_i >= omega_j`` but ``p_i < p_j - tol``, or
    when the willingness values coincide but the prices differ by more than
    ``tol``.
    """
    omega = np.asarray(omega, dtype=float)
    prices = np.asarray(prices, dtype=float)
    bad = []
    order = np.argsort(omega, kind="stable")
    for ii, i in enumerate(order):
        for j in order[:ii]:
            # omega[i] >= omega[j]
            if prices[i] < prices[j] - tol:
                bad.append((int(i), int(j)))
            elif abs(omega[i] - omega[j]) <= equal_tol and abs(prices[i] - prices[j]) > tol:
                bad.append((int(i), int(j)))
    return bad
