"""Dense convex QP solver (ADMM with an active-set polish) and KKT diagnostics.

Problems are posed in minimization form::

    minimize    1/2 x'Qx + c'x + offset
    subject to  Gx <= h,  Ax = b,  lower <= x <= upper

Internally every constraint is stacked into ``l <= Cx <= u`` and solved with
an operator-splitting iteration on an equilibrated copy of the data. Once the
iterates settle, the active set is guessed from the multipliers and the
reduced KKT system is solved directly, which gives solutions accurate to
machine precision rather than to the ADMM tolerance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionMismatch, NonConvex

__all__ = [
    "QpProblem",
    "QpSolution",
    "Status",
    "KktResiduals",
    "solve_qp",
    "kkt_residuals",
]

SIGMA = 1e-6
RELAX = 1.6
RHO_INIT = 0.1
RHO_MIN, RHO_MAX = 1e-6, 1e6
EQ_RHO_FACTOR = 1e3
RUIZ_ITERS = 25
CHECK_EVERY = 5
ADAPT_EVERY = 25
INF_TOL = 1e-7
POLISH_PASSES = 8


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QpProblem:
    """Standard-form convex QP. Missing blocks default to empty / unbounded."""

    Q: np.ndarray
    c: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    offset: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float)).ravel()
        n = c.size
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q has shape {Q.shape}, expected {(n, n)}")
        scale = max(1.0, np.abs(Q).max(initial=0.0))
        if np.abs(Q - Q.T).max(initial=0.0) > 1e-12 * scale:
            raise NonConvex("Q is not symmetric")
        Q = 0.5 * (Q + Q.T)

        def block(M, v, name):
            if M is None:
                if v is not None and np.size(v):
                    raise DimensionMismatch(f"{name} vector given without its matrix")
                return np.zeros((0, n)), np.zeros(0)
            M = np.asarray(M, dtype=float)
            if not np.size(M):
                M = np.zeros((0, n))
            elif M.ndim == 1 and M.size == n:
                M = M.reshape(1, n)
            v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
            if M.ndim != 2 or M.shape[1] != n or v.size != M.shape[0]:
                raise DimensionMismatch(
                    f"{name} block has matrix {M.shape} and vector {v.shape} for n={n}"
                )
            return M, v

        G, h = block(self.G, self.h, "inequality")
        A, b = block(self.A, self.b, "equality")
        lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float).ravel()
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float).ravel()
        if lower.size != n or upper.size != n:
            raise DimensionMismatch("bound vectors must have length n")

        for name, val in dict(Q=Q, c=c, G=G, h=h, A=A, b=b, lower=lower, upper=upper).items():
            object.__setattr__(self, name, _frozen(val))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.c.size

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.offset)

    def min_eigenvalue(self) -> float:
        if self.n == 0:
            return 0.0
        return float(np.linalg.eigvalsh(self.Q)[0])

    def check_convex(self):
        lam = self.min_eigenvalue()
        norm = np.linalg.norm(self.Q, 2) if self.n else 0.0
        if lam < -1e-9 * max(norm, 1e-300):
            raise NonConvex(f"Q is indefinite (smallest eigenvalue {lam:.6g})", eigenvalue=lam)


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    ineq_duals: np.ndarray
    eq_duals: np.ndarray
    lower_duals: np.ndarray
    upper_duals: np.ndarray
    objective: float
    status: Status
    iterations: int
    primal_residual: float
    dual_residual: float
    polished: bool = False
    rho: float = field(default=RHO_INIT, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    primal: float
    complementarity: float

    def max(self) -> float:
        return max(self.stationarity, self.primal, self.complementarity)


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> KktResiduals:
    """Max-norm residuals of stationarity, feasibility and complementarity.

    Sign convention: ``Qx + c + G'lam + A'nu - mu_lower + mu_upper = 0``.
    """
    p = problem
    x = np.asarray(solution.x, dtype=float)
    lam = np.asarray(solution.ineq_duals, dtype=float)
    nu = np.asarray(solution.eq_duals, dtype=float)
    mu_l = np.asarray(solution.lower_duals, dtype=float)
    mu_u = np.asarray(solution.upper_duals, dtype=float)
    if (
        x.size != p.n
        or lam.size != p.G.shape[0]
        or nu.size != p.A.shape[0]
        or mu_l.size != p.n
        or mu_u.size != p.n
    ):
        raise DimensionMismatch("solution does not match problem dimensions")

    grad = p.Q @ x + p.c + p.G.T @ lam + p.A.T @ nu - mu_l + mu_u
    stat = np.abs(grad).max(initial=0.0)

    slack_g = p.h - p.G @ x
    lo_fin = np.isfinite(p.lower)
    up_fin = np.isfinite(p.upper)
    viol = [
        np.maximum(-slack_g, 0.0),
        np.abs(p.A @ x - p.b),
        np.maximum(p.lower[lo_fin] - x[lo_fin], 0.0),
        np.maximum(x[up_fin] - p.upper[up_fin], 0.0),
        # wrong-signed multipliers count as dual infeasibility of the stationarity system
    ]
    primal = max((v.max(initial=0.0) for v in viol), default=0.0)

    comp = [
        np.abs(lam * slack_g),
        np.abs(mu_l[lo_fin] * (x[lo_fin] - p.lower[lo_fin])),
        np.abs(mu_u[up_fin] * (p.upper[up_fin] - x[up_fin])),
        np.abs(mu_l[~lo_fin]),
        np.abs(mu_u[~up_fin]),
    ]
    compl = max((v.max(initial=0.0) for v in comp), default=0.0)
    return KktResiduals(float(stat), float(primal), float(compl))


class _Stacked:
    """``l <= C x <= u`` view of a QpProblem, with the row bookkeeping needed
    to split the stacked multiplier back into its blocks."""

    def __init__(self, p: QpProblem):
        n = p.n
        bounded = np.flatnonzero(np.isfinite(p.lower) | np.isfinite(p.upper))
        eye = np.eye(n)[bounded]
        self.n_eq = p.A.shape[0]
        self.n_ineq = p.G.shape[0]
        self.bounded = bounded
        self.C = np.vstack([p.A, p.G, eye])
        self.l = np.concatenate([p.b, np.full(self.n_ineq, -np.inf), p.lower[bounded]])
        self.u = np.concatenate([p.b, p.h, p.upper[bounded]])

    def split(self, y, n):
        ne, ni = self.n_eq, self.n_ineq
        eq = y[:ne].copy()
        ineq = np.maximum(y[ne : ne + ni], 0.0)
        yb = y[ne + ni :]
        lo = np.zeros(n)
        up = np.zeros(n)
        lo[self.bounded] = np.maximum(-yb, 0.0)
        up[self.bounded] = np.maximum(yb, 0.0)
        return ineq, eq, lo, up


def _ruiz(P, q, C):
    n, m = P.shape[0], C.shape[0]
    D = np.ones(n)
    E = np.ones(m)
    Ps, qs, Cs = P.copy(), q.copy(), C.copy()
    for _ in range(RUIZ_ITERS):
        col = np.maximum(np.abs(Ps).max(axis=0, initial=0.0), np.abs(Cs).max(axis=0, initial=0.0))
        row = np.abs(Cs).max(axis=1, initial=0.0)
        d = 1.0 / np.sqrt(np.clip(np.where(col == 0, 1.0, col), 1e-4, 1e4))
        e = 1.0 / np.sqrt(np.clip(np.where(row == 0, 1.0, row), 1e-4, 1e4))
        Ps = d[:, None] * Ps * d[None, :]
        qs = d * qs
        Cs = e[:, None] * Cs * d[None, :]
        D *= d
        E *= e
    pcol = np.abs(Ps).max(axis=0, initial=0.0).mean() if n else 0.0
    cost = 1.0 / np.clip(max(pcol, np.abs(qs).max(initial=0.0)), 1e-4, 1e4)
    return D, E, cost, cost * Ps, cost * qs, Cs


def _inf_norm(*vs):
    return max((np.abs(v).max(initial=0.0) for v in vs), default=0.0)


class _Admm:
    def __init__(self, p: QpProblem, stacked: _Stacked, tol: float):
        self.p = p
        self.s = stacked
        self.tol = tol
        self.D, self.E, self.cost, self.P, self.q, self.C = _ruiz(p.Q, p.c, stacked.C)
        self.l = self.E * stacked.l
        self.u = self.E * stacked.u
        self.is_eq = stacked.l == stacked.u
        self.free = ~np.isfinite(stacked.l) & ~np.isfinite(stacked.u)
        self.rho = RHO_INIT
        self._factor()

    def _rho_vec(self):
        r = np.full(self.C.shape[0], self.rho)
        r[self.is_eq] *= EQ_RHO_FACTOR
        r[self.free] = RHO_MIN
        return r

    def _factor(self):
        self.rv = self._rho_vec()
        n = self.P.shape[0]
        M = self.P + SIGMA * np.eye(n) + self.C.T @ (self.rv[:, None] * self.C)
        self.chol = cho_factor(M, lower=False, check_finite=False)

    def unscale(self, x, z, y):
        return self.D * x, z / self.E, self.E * y / self.cost

    def residuals(self, xs, zs, ys):
        """Unscaled residuals and their relative-tolerance thresholds."""
        p = self.p
        x, z, y = self.unscale(xs, zs, ys)
        Cx = self.s.C @ x
        Px = p.Q @ x
        Cty = self.s.C.T @ y
        rp = _inf_norm(Cx - z)
        rd = _inf_norm(Px + p.c + Cty)
        ep = self.tol * (1.0 + _inf_norm(Cx, z))
        ed = self.tol * (1.0 + _inf_norm(Px, Cty, p.c))
        return rp, rd, ep, ed

    def adapt_rho(self, xs, zs, ys):
        Cx = self.C @ xs
        Px = self.P @ xs
        Cty = self.C.T @ ys
        rp = _inf_norm(Cx - zs) / max(_inf_norm(Cx, zs), 1e-30)
        rd = _inf_norm(Px + self.q + Cty) / max(_inf_norm(Px, Cty, self.q), 1e-30)
        new = float(np.clip(self.rho * np.sqrt(rp / max(rd, 1e-30)), RHO_MIN, RHO_MAX))
        if new > 5 * self.rho or new < 0.2 * self.rho:
            self.rho = new
            self._factor()

    def primal_infeasible(self, dy):
        """Farkas certificate test on the (unscaled) multiplier increment."""
        dy = self.E * dy / self.cost
        norm = _inf_norm(dy)
        if norm < 1e-12:
            return False
        if _inf_norm(self.s.C.T @ dy) > INF_TOL * norm:
            return False
        pos, neg = np.maximum(dy, 0.0), np.minimum(dy, 0.0)
        l, u = self.s.l, self.s.u
        if np.any((pos > INF_TOL * norm) & ~np.isfinite(u)) or np.any(
            (neg < -INF_TOL * norm) & ~np.isfinite(l)
        ):
            return False
        support = np.sum(np.where(pos > 0, pos * np.where(np.isfinite(u), u, 0.0), 0.0)) + np.sum(
            np.where(neg < 0, neg * np.where(np.isfinite(l), l, 0.0), 0.0)
        )
        return support < -INF_TOL * norm

    def unbounded(self, dx):
        dx = self.D * dx
        norm = _inf_norm(dx)
        if norm < 1e-12:
            return False
        p = self.p
        if _inf_norm(p.Q @ dx) > INF_TOL * norm or p.c @ dx > -INF_TOL * norm:
            return False
        Cd = self.s.C @ dx
        l, u = self.s.l, self.s.u
        eps = INF_TOL * norm
        ok_hi = np.where(np.isfinite(u), Cd <= eps, True)
        ok_lo = np.where(np.isfinite(l), Cd >= -eps, True)
        return bool(np.all(ok_hi & ok_lo))

    def polish(self, xs, zs, ys):
        """Solve the reduced KKT system on the guessed active set.

        Works in the scaled space. The guess is then corrected
        a few times, primal-dual active-set style: rows whose multiplier has
        the wrong sign are released and violated rows are added.
        """
        l, u = self.l, self.u
        lo_act = np.isfinite(l) & (zs - l < -ys)
        up_act = np.isfinite(u) & (u - zs < ys)
        lo_act &= ~self.is_eq
        up_act &= ~self.is_eq | ~lo_act
        seen = set()
        out = None
        for _ in range(POLISH_PASSES):
            key = (lo_act.tobytes(), up_act.tobytes())
            if key in seen:
                break
            seen.add(key)
            res = self._reduced_solve(xs, ys, lo_act, up_act)
            if res is None:
                break
            x, y = res
            Cx = self.C @ x
            scale = max(1.0, _inf_norm(Cx))
            feas_tol = 1e-12 * scale
            ytol = 1e-12 * max(1.0, _inf_norm(y))
            bad_lo = lo_act & (y > ytol)
            bad_up = up_act & (y < -ytol)
            viol_lo = ~lo_act & ~self.is_eq & np.isfinite(l) & (Cx < l - feas_tol)
            viol_up = ~up_act & ~self.is_eq & np.isfinite(u) & (Cx > u + feas_tol)
            out = res
            if not (bad_lo.any() or bad_up.any() or viol_lo.any() or viol_up.any()):
                break
            lo_act = (lo_act & ~bad_lo) | viol_lo
            up_act = (up_act & ~bad_up) | viol_up
        if out is None:
            return None
        x, y = out
        y = y.copy()
        free_lo = ~self.is_eq & (y < 0)
        free_up = ~self.is_eq & (y > 0)
        # tiny wrong-signed multipliers are noise; clip them to the feasible cone
        y[free_lo & ~np.isfinite(l)] = 0.0
        y[free_up & ~np.isfinite(u)] = 0.0
        z = np.clip(self.C @ x, l, u)
        return x, z, y

    def _reduced_solve(self, xs, ys, lo_act, up_act):
        """Minimum-norm correction of the anchor ``(xs, ys)`` that satisfies the
        equality-constrained KKT system on the active rows exactly. Directions
        with no curvature and no active constraint keep their anchor value."""
        l, u = self.l, self.u
        act = self.is_eq | lo_act | up_act
        idx = np.flatnonzero(act)
        target = np.where(self.is_eq[idx] | up_act[idx], u[idx], l[idx])
        Ca = self.C[idx]
        n, k = self.P.shape[0], idx.size
        K = np.block([[self.P, Ca.T], [Ca, np.zeros((k, k))]])
        w0 = np.concatenate([xs, ys[idx]])
        rhs = np.concatenate([-self.q, target])
        w = w0
        for _ in range(3):
            r = rhs - K @ w
            try:
                dw = np.linalg.lstsq(K, r, rcond=None)[0]
            except np.linalg.LinAlgError:
                return None
            w = w + dw
        if not np.all(np.isfinite(w)):
            return None
        y = np.zeros_like(ys)
        y[idx] = w[n:]
        return w[:n], y


def _finish(problem, stacked, x, y, status, iters, rp, rd, polished, rho):
    ineq, eq, lo, up = stacked.split(y, problem.n)
    return QpSolution(
        x=_frozen(x),
        ineq_duals=_frozen(ineq),
        eq_duals=_frozen(eq),
        lower_duals=_frozen(lo),
        upper_duals=_frozen(up),
        objective=problem.objective(x),
        status=status,
        iterations=iters,
        primal_residual=float(rp),
        dual_residual=float(rd),
        polished=polished,
        rho=rho,
    )


def _polish_ok(problem, stacked, admm, cand, tol):
    x, z, y = admm.unscale(*cand)
    sol = _finish(problem, stacked, x, y, Status.OPTIMAL, 0, 0.0, 0.0, True, admm.rho)
    res = kkt_residuals(problem, sol)
    scale = 1.0 + _inf_norm(problem.c, problem.Q @ x, stacked.C @ x)
    if res.max() <= tol * scale:
        return sol, res
    return None, res


def solve_qp(problem: QpProblem, tol: float = 1e-8, max_iter: int = 20000) -> QpSolution:
    """Solve a convex QP. Deterministic: identical inputs give identical output.

    Raises NonConvex when Q fails the PSD check. Infeasible and unbounded
    problems are reported through ``status`` rather than raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    problem.check_convex()
    n = problem.n
    stacked = _Stacked(problem)
    m = stacked.C.shape[0]

    if np.any(stacked.l > stacked.u):
        zero = np.zeros(n)
        return _finish(problem, stacked, zero, np.zeros(m), Status.INFEASIBLE, 0, np.inf, np.inf, False, RHO_INIT)

    admm = _Admm(problem, stacked, tol)
    x = np.zeros(n)
    z = np.clip(np.zeros(m), admm.l, admm.u)
    y = np.zeros(m)
    polish_gate = max(np.sqrt(tol), 1e-4)
    last_polish = -1
    rp = rd = np.inf

    for it in range(1, max_iter + 1):
        x_prev, y_prev = x, y
        rhs = SIGMA * x - admm.q + admm.C.T @ (admm.rv * z - y)
        xt = cho_solve(admm.chol, rhs, check_finite=False)
        zt = admm.C @ xt
        x = RELAX * xt + (1 - RELAX) * x
        zr = RELAX * zt + (1 - RELAX) * z
        z_new = np.clip(zr + y / admm.rv, admm.l, admm.u)
        y = y + admm.rv * (zr - z_new)
        z = z_new

        if it % CHECK_EVERY and it != max_iter:
            continue
        rp, rd, ep, ed = admm.residuals(x, z, y)
        converged = rp <= ep and rd <= ed
        loose = rp <= polish_gate * ep / tol and rd <= polish_gate * ed / tol
        if converged or ((loose or it % ADAPT_EVERY == 0) and it - last_polish >= ADAPT_EVERY):
            last_polish = it
            cand = admm.polish(x, z, y)
            if cand is not None:
                sol, res = _polish_ok(problem, stacked, admm, cand, tol)
                if sol is not None:
                    return _finish(
                        problem, stacked, sol.x, admm.unscale(*cand)[2], Status.OPTIMAL,
                        it, res.primal, res.stationarity, True, admm.rho,
                    )
        if converged:
            xu, _, yu = admm.unscale(x, z, y)
            return _finish(problem, stacked, xu, yu, Status.OPTIMAL, it, rp, rd, False, admm.rho)
        if it % ADAPT_EVERY == 0:
            if m and admm.primal_infeasible(y - y_prev):
                xu = admm.unscale(x, z, y)[0]
                return _finish(problem, stacked, xu, np.zeros(m), Status.INFEASIBLE, it, rp, rd, False, admm.rho)
            if admm.unbounded(x - x_prev):
                xu = admm.unscale(x, z, y)[0]
                return _finish(problem, stacked, xu, np.zeros(m), Status.UNBOUNDED, it, rp, rd, False, admm.rho)
            admm.adapt_rho(x, z, y)

    xu, _, yu = admm.unscale(x, z, y)
    return _finish(problem, stacked, xu, yu, Status.MAX_ITERATIONS, max_iter, rp, rd, False, admm.rho)
