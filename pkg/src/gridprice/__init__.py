"""Discriminatory retail electricity pricing as a leader-follower game.

The retailer posts per-user prices, households best-respond in closed form,
and the retailer's problem is lowered to a dense convex QP.
"""

from .consumer import (
    ConsumerProfile,
    ProsumerResponse,
    best_response,
    convenience,
    prosumer_best_response,
    prosumer_utility,
    utility,
)
from .errors import GridPriceError
from .formulations import (
    Formulation,
    PricingOutcome,
    RetailEnv,
    Weights,
    closed_form_prices,
    eta_star,
    eta_star_net_metering,
    fairness_violations,
    oracle_f0,
    solve_period,
)
from .qp import QpProblem, QpSolution, Status, kkt_residuals, solve_qp
from .scenario import Scenario, attach_solar, generate_reference, load, save

__version__ = "0.1.0"
