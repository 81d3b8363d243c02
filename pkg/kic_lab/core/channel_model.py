"""
Chain topology, path-loss channel coefficients and scenario parameters.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum, auto
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        return -math.inf
    if math.isinf(value):
        return math.inf
    return 10.0 * math.log10(value)


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Fixed channel of an N-node chain.

    ``h`` is an (N+1) x (N+1) complex matrix indexed from 1 so that
    ``h[j, i]`` is the coefficient from node j to node i (j < i). Row and
    column 0 are unused.
    """
    n_nodes: int
    alpha: float
    spacing: float
    h: np.ndarray
    p_t: float
    sigma2: float
    positions: np.ndarray = field(default=None)

    def __post_init__(self):
        violations = []
        if self.n_nodes < 2:
            violations.append(f"N must be >= 2 (got {self.n_nodes})")
        if not self.alpha > 0:
            violations.append(f"alpha must be > 0 (got {self.alpha})")
        if not self.p_t > 0:
            violations.append(f"P_T must be > 0 (got {self.p_t})")
        if not self.sigma2 >= 0:
            violations.append(f"sigma2 must be >= 0 (got {self.sigma2})")
        if self.h.shape != (self.n_nodes + 1, self.n_nodes + 1):
            violations.append(f"h must have shape {(self.n_nodes + 1,) * 2} (got {self.h.shape})")
        if violations:
            raise ConfigError("Invalid channel model", violations)
        self.h.setflags(write=False)

    def _check_link(self, j: int, i: int) -> None:
        if not 1 <= j < i <= self.n_nodes:
            raise ConfigError(f"No link from node {j} to node {i} in a {self.n_nodes}-node chain")

    def gain(self, j: int, i: int) -> complex:
        """Channel coefficient h_{ji}."""
        self._check_link(j, i)
        return complex(self.h[j, i])

    def power_gain(self, j: int, i: int) -> float:
        """|h_{ji}|^2."""
        self._check_link(j, i)
        return float(abs(self.h[j, i]) ** 2)

    def with_noise_power(self, sigma2: float) -> 'ChannelModel':
        """Same channel with a different noise power (e.g. 0 for noiseless runs)."""
        return replace(self, h=self.h.copy(), sigma2=sigma2)


class PolicyKind(Enum):
    UNIFORM = auto()
    ADAPTIVE_MIN = auto()


@dataclass(frozen=True)
class RoundsPolicy:
    """How many cancellation rounds each node performs."""
    kind: PolicyKind
    m: int = 0

    @classmethod
    def uniform(cls, m: int) -> 'RoundsPolicy':
        return cls(PolicyKind.UNIFORM, m)

    @classmethod
    def adaptive_min(cls) -> 'RoundsPolicy':
        return cls(PolicyKind.ADAPTIVE_MIN)

    def __str__(self) -> str:
        if self.kind is PolicyKind.UNIFORM:
            return f"uniform(m={self.m})"
        return "adaptive_min"


@dataclass(frozen=True)
class ScenarioConfig:
    """Decoding threshold, SNR and rounds policy of a scenario."""
    gamma: float
    single_hop_snr_db: float = 20.0
    m_policy: RoundsPolicy = field(default_factory=lambda: RoundsPolicy.uniform(0))
    b: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        violations = []
        if not self.gamma >= 1:
            violations.append(f"gamma must be >= 1 (got {self.gamma})")
        if self.m_policy.kind is PolicyKind.UNIFORM and self.m_policy.m < 0:
            violations.append(f"m must be >= 0 (got {self.m_policy.m})")
        if self.b is not None and not self.b > 0:
            violations.append(f"B must be > 0 (got {self.b})")
        if self.epsilon is not None and not self.epsilon > 0:
            violations.append(f"epsilon must be > 0 (got {self.epsilon})")
        if violations:
            raise ConfigError("Invalid scenario", violations)

    @classmethod
    def from_db(cls, gamma_db: float, **kwargs) -> 'ScenarioConfig':
        return cls(gamma=db_to_linear(gamma_db), **kwargs)


def build_channel_matrix(
    n_nodes: int,
    alpha: float,
    spacing: float = 1.0,
    p_t: float = 1.0,
    single_hop_snr_db: float = 20.0,
    positions: Optional[Sequence[float]] = None,
    random_phase: bool = False,
    phase_seed: Optional[int] = None
) -> ChannelModel:
    """Build the path-loss channel of a chain.

    Gains follow |h_{ji}|^2 = (d_{ji} / spacing)^(-alpha), so equally spaced
    nodes have unit adjacent-hop gain. The noise power is chosen so that the
    first hop (1 -> 2) has the requested SNR; with equal spacing every hop does.

    Args:
        n_nodes: Number of nodes N
        alpha: Path-loss exponent
        spacing: Reference inter-node distance
        p_t: Transmit power
        single_hop_snr_db: Single-hop SNR without interference (inf for noiseless)
        positions: Optional increasing node positions, overriding equal spacing
        random_phase: Draw uniform channel phases instead of zero phases
        phase_seed: Seed for the phase draw

    Returns:
        ChannelModel

    Raises:
        ConfigError: If any parameter is out of range
    """
    violations = []
    if n_nodes < 2:
        violations.append(f"N must be >= 2 (got {n_nodes})")
    if not alpha > 0:
        violations.append(f"alpha must be > 0 (got {alpha})")
    if not spacing > 0:
        violations.append(f"spacing must be > 0 (got {spacing})")
    if not p_t > 0:
        violations.append(f"P_T must be > 0 (got {p_t})")
    if positions is not None:
        if len(positions) != n_nodes:
            violations.append(f"positions must list {n_nodes} nodes (got {len(positions)})")
        elif any(b <= a for a, b in zip(positions, positions[1:])):
            violations.append("positions must be strictly increasing")
    if violations:
        raise ConfigError("Invalid channel parameters", violations)

    if positions is None:
        pos = spacing * np.arange(n_nodes, dtype=float)
    else:
        pos = np.asarray(positions, dtype=float)

    h = np.zeros((n_nodes + 1, n_nodes + 1), dtype=complex)
    rng = np.random.default_rng(phase_seed) if random_phase else None
    for i in range(2, n_nodes + 1):
        for j in range(1, i):
            distance = pos[i - 1] - pos[j - 1]
            magnitude = (distance / spacing) ** (-alpha / 2.0)
            phase = rng.uniform(0.0, 2.0 * np.pi) if rng is not None else 0.0
            h[j, i] = magnitude * np.exp(1j * phase)

    reference_gain = abs(h[1, 2]) ** 2
    sigma2 = reference_gain * p_t / db_to_linear(single_hop_snr_db)

    logger.debug(f"Built {n_nodes}-node chain: alpha={alpha}, sigma2={sigma2:.6g}")
    return ChannelModel(
        n_nodes=n_nodes,
        alpha=alpha,
        spacing=spacing,
        h=h,
        p_t=p_t,
        sigma2=sigma2,
        positions=pos
    )


def snr_single_hop(model: ChannelModel, i: int) -> float:
    """SNR in dB of the hop (i-1) -> i without interference."""
    if not 2 <= i <= model.n_nodes:
        raise ConfigError(f"Node {i} has no incoming hop in a {model.n_nodes}-node chain")
    signal = model.power_gain(i - 1, i) * model.p_t
    if model.sigma2 == 0.0:
        return math.inf
    return linear_to_db(signal / model.sigma2)
