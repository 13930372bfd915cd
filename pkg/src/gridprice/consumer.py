"""Consumer-side economics: convenience, utility and closed-form best responses.

All functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleConsumption, NegativeDemand

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class ConsumerProfile:
    """One household. ``omega``, ``m`` and ``s`` are per-period vectors."""

    omega: tuple[float, ...]
    alpha: float
    m: tuple[float, ...]
    s: tuple[float, ...]

    def __post_init__(self):
        for name in ("omega", "m", "s"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (len(self.omega) == len(self.m) == len(self.s)):
            raise ValueError("omega, m and s must have one entry per period")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if min(self.omega + self.m + self.s, default=0.0) < 0:
            raise ValueError("omega, m and s must be nonnegative")

    @property
    def n_periods(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class ProsumerResponse:
    Z: np.ndarray | float
    X: np.ndarray | float
    Y: np.ndarray | float


def _check_demand(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NegativeDemand(f"elastic demand must be nonnegative, got min {x.min():g}")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def convenience(x, omega, alpha):
    """Concave quadratic comfort value, flat beyond the satiation point omega/alpha."""
    x = _check_demand(x)
    omega = np.asarray(omega, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    knee = omega / alpha
    rising = omega * x - 0.5 * alpha * x**2
    return _out(np.where(x <= knee, rising, omega**2 / (2 * alpha)))


def utility(x, omega, price_total, alpha):
    return _out(convenience(x, omega, alpha) - np.asarray(price_total, dtype=float) * np.asarray(x, dtype=float))


def best_response(omega, price_total, alpha):
    """Utility-maximizing elastic demand at a posted total price."""
    omega = np.asarray(omega, dtype=float)
    return _out(np.maximum(0.0, (omega - np.asarray(price_total, dtype=float)) / np.asarray(alpha, dtype=float)))


def prosumer_best_response(omega, price, alpha, m, s) -> ProsumerResponse:
    """Net grid transaction of a household with on-site generation under net metering.

    The inelastic demand ``m`` is always served; elastic demand follows the
    ordinary best response at the net-metering price.
    """
    base = np.asarray(m, dtype=float) - np.asarray(s, dtype=float)
    Z = base + np.asarray(best_response(omega, price, alpha))
    return ProsumerResponse(Z=_out(Z), X=_out(np.maximum(Z, 0.0)), Y=_out(np.maximum(-Z, 0.0)))


def prosumer_utility(Z, s, m, omega, price, alpha):
    elastic = np.asarray(Z, dtype=float) + np.asarray(s, dtype=float) - np.asarray(m, dtype=float)
    if np.any(elastic < -_FEAS_TOL):
        raise InfeasibleConsumption("net purchase plus generation does not cover inelastic demand")
    elastic = np.maximum(elastic, 0.0)
    return _out(convenience(elastic, omega, alpha) - np.asarray(price, dtype=float) * np.asarray(Z, dtype=float))
