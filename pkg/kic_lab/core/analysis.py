"""
Closed-form bounds on the residual interference-plus-noise power, the
sufficient decoding conditions derived from them, and the chain-length limit
for equally spaced nodes.

All functions take magnitudes from the channel model only, so channel
phases do not change any result here.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from ..errors import FeasibilityError
from .channel_model import ChannelModel, linear_to_db

logger = logging.getLogger(__name__)

RHO_UNITY_TOL = 1e-12
CEIL_SLACK = 1e-12
DEFAULT_EPSILON = 1e-9


@dataclass
class BoundReport:
    node: int
    rounds: int
    rho: float
    pi_upper_bound: float
    sinr_lower_bound_db: float
    feasible: bool
    min_rounds: Optional[int]

    def to_row(self) -> Dict[str, object]:
        return {
            'i': self.node,
            'm': self.rounds,
            'rho': self.rho,
            'pi_bound': self.pi_upper_bound,
            'sinr_lb_db': self.sinr_lower_bound_db,
            'feasible': int(self.feasible),
            'min_rounds': '-' if self.min_rounds is None else self.min_rounds,
        }


def _gains(model: ChannelModel, i: int) -> Tuple[float, float]:
    if i < 3 or i > model.n_nodes:
        raise ValueError(f"Bounds are defined for 3 <= i <= {model.n_nodes} (got {i})")
    return model.power_gain(i - 1, i), model.power_gain(i - 2, i)


def rho(model: ChannelModel, i: int) -> float:
    """Per-round contraction |h_{(i-2),i}|^2 (i-2) / |h_{(i-1),i}|^2."""
    relay, two_hop = _gains(model, i)
    return two_hop * (i - 2) / relay


def interference_bound(model: ChannelModel, i: int, m: int) -> float:
    """Upper bound on the interference-plus-noise power P_{I,m} in g_{i,m}(t).

    Every unknown interferer is replaced by the strongest one, node i-2,
    which turns the noise terms into a geometric series in rho.
    """
    if m < 0:
        raise ValueError(f"Round count must be >= 0 (got {m})")
    _, two_hop = _gains(model, i)
    r = rho(model, i)
    if abs(r - 1.0) < RHO_UNITY_TOL:
        series = m + 1.0
    else:
        series = (1.0 - r ** (m + 1)) / (1.0 - r)
    return two_hop * (i - 2) * r ** m * model.p_t + model.sigma2 * series


def sinr_lower_bound(model: ChannelModel, i: int, m: int) -> float:
    """SINR lower bound in dB at node i after m rounds."""
    relay, _ = _gains(model, i)
    bound = interference_bound(model, i, m)
    if bound == 0.0:
        return math.inf
    return linear_to_db(relay * model.p_t / bound)


def unmerged_sinr(model: ChannelModel, i: int, m: int) -> float:
    """SINR in dB at node i when every cancellation path counts as a separate signal.

    Paths that land on the same symbol are not combined, so the (m+1)-fold
    interference sum has power (sum_j |h_ji|^2)^(m+1) / |h_{(i-1),i}|^(2m).
    It never falls below sinr_lower_bound, since no unknown interferer is
    stronger than node i-2.
    """
    if m < 0:
        raise ValueError(f"Round count must be >= 0 (got {m})")
    relay, _ = _gains(model, i)
    r = sum(model.power_gain(j, i) for j in range(1, i - 1)) / relay
    interference = relay * r ** (m + 1) * model.p_t
    noise = model.sigma2 * sum(r ** k for k in range(m + 1))
    residual = interference + noise
    if residual == 0.0:
        return math.inf
    return linear_to_db(relay * model.p_t / residual)


def feasibility_condition(model: ChannelModel, i: int, gamma: float) -> bool:
    """Convergence condition: a finite number of rounds is guaranteed to reach gamma at node i."""
    relay, two_hop = _gains(model, i)
    if two_hop == 0.0:
        return relay * model.p_t >= gamma * model.sigma2
    limit = relay / two_hop - gamma * model.sigma2 / (two_hop * model.p_t) + 2.0
    return i < limit


def min_rounds(model: ChannelModel, i: int, gamma: float) -> int:
    """Smallest m for which the SINR lower bound at node i reaches gamma.

    Raises:
        FeasibilityError: If the convergence condition fails at node i
    """
    if not feasibility_condition(model, i, gamma):
        raise FeasibilityError(i)
    r = rho(model, i)
    if r == 0.0:
        return 0

    relay, two_hop = _gains(model, i)
    noise_term = model.sigma2 / (relay - two_hop * (i - 2))
    ratio = (model.p_t / gamma - noise_term) / (model.p_t - noise_term)
    required = math.log(ratio) / math.log(r) - 1.0
    return max(0, math.ceil(required - CEIL_SLACK))


def placement_b(model: ChannelModel, i: int, gamma: float) -> float:
    """B = gamma sigma^2 / (|h_{(i-2),i}|^2 P_T) of the two-hop link into node i."""
    _, two_hop = _gains(model, i)
    return gamma * model.sigma2 / (two_hop * model.p_t)


def max_chain_length(alpha: float, b: Optional[float] = None,
                     epsilon: Optional[float] = None) -> int:
    """Largest node index satisfying the convergence condition on an equally spaced chain.

    With |h_{(i-1),i}|^2 / |h_{(i-2),i}|^2 = 2^alpha the condition reads
    i < 2^alpha - B + 2; the default B = 2 - epsilon gives i < 2^alpha + epsilon.
    Other values of B follow from the same substitution.
    """
    epsilon = DEFAULT_EPSILON if epsilon is None else epsilon
    if b is None:
        b = 2.0 - epsilon
    if b <= 0:
        raise ValueError(f"B must be > 0 (got {b})")
    if b <= 1:
        logger.warning(f"B={b:.4g} <= 1: nodes two hops apart could decode each other directly")
    limit = 2.0 ** alpha - b + 2.0
    return max(math.ceil(limit) - 1, 2)


def bound_report(model: ChannelModel, i: int, m: int, gamma: float) -> BoundReport:
    feasible = feasibility_condition(model, i, gamma)
    return BoundReport(
        node=i,
        rounds=m,
        rho=rho(model, i),
        pi_upper_bound=interference_bound(model, i, m),
        sinr_lower_bound_db=sinr_lower_bound(model, i, m),
        feasible=feasible,
        min_rounds=min_rounds(model, i, gamma) if feasible else None
    )
