"""
Sample-level check of the symbolic cancellation.

Random symbols and noise are drawn for every slot a cancellation touches.
g_{i,m}(t) is then evaluated twice: by substituting the samples into the
symbolic expression, and by running the round recursion on the sampled
received signals. Both must agree; their power is compared with the
symbolic prediction.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ConfigError, ConsistencyError
from .analysis import interference_bound
from .channel_model import ChannelModel
from .kic_engine import Schedule, cancel_rounds_recursive

logger = logging.getLogger(__name__)

AGREEMENT_TOL = 1e-9

# complex samples per array in one chunk (128 MiB)
MAX_CHUNK_ELEMENTS = 2 ** 23


class SymbolModel(Enum):
    GAUSSIAN = "gaussian"
    QPSK = "qpsk"


@dataclass(frozen=True)
class McConfig:
    trials: int = 100000
    seed: int = 1
    symbol_model: SymbolModel = SymbolModel.GAUSSIAN
    chunk_size: int = 10000

    def __post_init__(self):
        violations = []
        if self.trials < 1:
            violations.append(f"trials must be >= 1 (got {self.trials})")
        if self.chunk_size < 1:
            violations.append(f"chunk_size must be >= 1 (got {self.chunk_size})")
        if not 0 <= self.seed < 2 ** 64:
            violations.append(f"seed must be an unsigned 64-bit integer (got {self.seed})")
        if violations:
            raise ConfigError("Invalid Monte Carlo configuration", violations)


@dataclass
class McReport:
    node: int
    rounds: int
    trials: int
    seed: int
    empirical_useful_power: float
    empirical_residual_power: float
    predicted_useful_power: float
    predicted_residual_power: float
    predicted_noise_power: float
    bound_residual_power: float
    rel_error: float

    def to_row(self) -> Dict[str, object]:
        return {
            'i': self.node,
            'm': self.rounds,
            'trials': self.trials,
            'seed': self.seed,
            'pred_residual': self.predicted_residual_power,
            'emp_residual': self.empirical_residual_power,
            'rel_err': self.rel_error,
            'pred_noise': self.predicted_noise_power,
        }


def _draw_symbols(rng: np.random.Generator, shape: Tuple[int, int], p_t: float,
                  symbol_model: SymbolModel) -> np.ndarray:
    if symbol_model is SymbolModel.QPSK:
        re = 2 * rng.integers(0, 2, size=shape) - 1
        im = 2 * rng.integers(0, 2, size=shape) - 1
        return np.sqrt(p_t / 2.0) * (re + 1j * im)
    return np.sqrt(p_t / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _draw_noise(rng: np.random.Generator, shape: Tuple[int, int], sigma2: float) -> np.ndarray:
    return np.sqrt(sigma2 / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _round_weights(model: ChannelModel, schedule: Schedule, i: int) -> np.ndarray:
    """Weight of y_i(t + s) in one round, indexed by the shift s."""
    h_relay = model.gain(i - 1, i)
    weights = np.zeros(schedule.delay(i - 1) + 1, dtype=complex)
    for j, offset in schedule.offsets(i).items():
        weights[offset] += model.gain(j, i) / h_relay
    return weights


def _chunk_rows(chunk_size: int, n_columns: int) -> int:
    """Trials per chunk, capped so no sample array exceeds MAX_CHUNK_ELEMENTS."""
    return max(1, min(chunk_size, MAX_CHUNK_ELEMENTS // n_columns))


def _chunks(trials: int, chunk_size: int) -> List[int]:
    sizes = [chunk_size] * (trials // chunk_size)
    if trials % chunk_size:
        sizes.append(trials % chunk_size)
    return sizes


def run_monte_carlo(
    model: ChannelModel,
    schedule: Schedule,
    i: int,
    m: int,
    cfg: McConfig,
    t: Optional[int] = None
) -> McReport:
    """Estimate useful and residual power of g_{i,m}(t) from random samples.

    Trials run in fixed-size chunks, each with its own child seed spawned
    from ``cfg.seed``, so results depend only on the configuration. Chunks
    shrink below ``cfg.chunk_size`` when a trial spans many slots.

    Raises:
        ConsistencyError: If the symbolic and the slot-by-slot evaluation disagree
    """
    result = cancel_rounds_recursive(model, schedule, i, m, t=t)
    t = schedule.steady_state_slot(i) if t is None else t
    relay_delay = schedule.delay(i - 1)
    h_relay = model.gain(i - 1, i)

    n_slots = m * relay_delay + 1                 # y_i(t) .. y_i(t + m Delta_{i-1})
    first_symbol = t - relay_delay
    n_symbols = n_slots + relay_delay             # x(t - Delta_{i-1}) .. x(t + m Delta_{i-1})
    data_cols = [(term.slot - first_symbol, coef) for term, coef in result.expr.items() if term.is_data]
    noise_cols = [(term.slot - t, coef) for term, coef in result.expr.items() if not term.is_data]
    useful_col = result.useful.slot - first_symbol
    one_round = _round_weights(model, schedule, i)

    useful_sum = 0.0
    residual_sum = 0.0
    rows = _chunk_rows(cfg.chunk_size, n_symbols)
    if rows < cfg.chunk_size:
        logger.debug(f"Node {i}, m={m}: chunk size reduced to {rows} for {n_symbols} symbols per trial")
    sizes = _chunks(cfg.trials, rows)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    for chunk, (size, seed) in enumerate(zip(sizes, seeds)):
        rng = np.random.default_rng(seed)
        x = _draw_symbols(rng, (size, n_symbols), model.p_t, cfg.symbol_model)
        z = _draw_noise(rng, (size, n_slots), model.sigma2)

        symbolic = np.zeros(size, dtype=complex)
        for col, coef in data_cols:
            symbolic += coef * x[:, col]
        for col, coef in noise_cols:
            symbolic += coef * z[:, col]

        y = z.copy()
        for j in range(1, i):
            start = t - schedule.delay(j) - first_symbol
            y += model.gain(j, i) * x[:, start:start + n_slots]
        recursive = y[:, 0].copy()
        weights = np.ones(1, dtype=complex)
        for k in range(1, m + 1):
            weights = np.convolve(weights, one_round)
            recursive += (-1) ** k * (y[:, :len(weights)] @ weights)

        scale = max(1.0, float(np.max(np.abs(symbolic))))
        mismatch = float(np.max(np.abs(symbolic - recursive)))
        if mismatch > AGREEMENT_TOL * scale:
            raise ConsistencyError(
                f"Node {i}, m={m}: symbolic and recursive samples differ by {mismatch:.3e} (chunk {chunk})"
            )

        useful = h_relay * x[:, useful_col]
        useful_sum += float(np.sum(np.abs(useful) ** 2))
        residual_sum += float(np.sum(np.abs(symbolic - useful) ** 2))
        logger.debug(f"Node {i}, m={m}: chunk {chunk + 1}/{len(sizes)} done")

    empirical_residual = residual_sum / cfg.trials
    predicted_residual = result.power.residual
    if predicted_residual > 0.0:
        rel_error = abs(empirical_residual - predicted_residual) / predicted_residual
    else:
        rel_error = 0.0 if empirical_residual == 0.0 else math.inf

    return McReport(
        node=i,
        rounds=m,
        trials=cfg.trials,
        seed=cfg.seed,
        empirical_useful_power=useful_sum / cfg.trials,
        empirical_residual_power=empirical_residual,
        predicted_useful_power=result.power.useful,
        predicted_residual_power=predicted_residual,
        predicted_noise_power=result.power.noise,
        bound_residual_power=interference_bound(model, i, m),
        rel_error=rel_error
    )
