"""
Scheduling and iterative cancellation of unknown multi-hop interference.

Node i receives y_i(t) = sum_{j<i} h_ji x(t - Delta_j) + z_i(t) once its
known signals are removed. Each cancellation round removes the current
unknown-interference symbols using later slots in which node i-1 carries
them on the strong link, leaving weaker interference behind.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx

from ..errors import FeasibilityError, ScheduleError, TermBudgetExceeded
from .analysis import min_rounds
from .channel_model import (
    ChannelModel,
    PolicyKind,
    RoundsPolicy,
    ScenarioConfig,
    db_to_linear,
    snr_single_hop,
)
from .signal_algebra import PowerSplit, SignalExpr, Term, power_split

logger = logging.getLogger(__name__)

DEFAULT_TERM_BUDGET = 10 ** 6


@dataclass(frozen=True)
class Schedule:
    """Rounds and first-transmission delays of every node.

    ``rounds`` and ``delta`` are indexed by node - 1.
    """
    rounds: Tuple[int, ...]
    delta: Tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.delta)

    def _check_node(self, i: int) -> None:
        if not 1 <= i <= self.n_nodes:
            raise ScheduleError(f"Node {i} outside a {self.n_nodes}-node schedule")

    def rounds_at(self, i: int) -> int:
        self._check_node(i)
        return self.rounds[i - 1]

    def delay(self, i: int) -> int:
        """Delta_i: slots between node 1 and node i sending the same packet."""
        self._check_node(i)
        return self.delta[i - 1]

    def offsets(self, i: int) -> Dict[int, int]:
        """delta_j = Delta_{i-1} - Delta_j for the unknown interferers j = 1..i-2 of node i."""
        self._check_node(i)
        last = self.delay(i - 1)
        return {j: last - self.delay(j) for j in range(1, i - 1)}

    def steady_state_slot(self, i: int) -> int:
        """First slot t in which every upstream node of i is already transmitting."""
        self._check_node(i)
        return self.delay(i - 1) + 1 if i > 1 else 1

    def relay_graph(self) -> nx.DiGraph:
        """Relay path 1 -> 2 -> ... -> N weighted by the per-hop delay increments."""
        graph = nx.DiGraph()
        graph.add_node(1)
        for i in range(2, self.n_nodes + 1):
            graph.add_edge(i - 1, i, weight=self.delay(i) - self.delay(i - 1))
        return graph


@dataclass
class CancellationResult:
    node: int
    rounds: int
    expr: SignalExpr
    useful: Term
    power: PowerSplit
    sinr_actual_db: float
    slots_waited: int


@dataclass(frozen=True)
class TraceEntry:
    slot: int
    node: int
    packet: Optional[int]  # None while idle


@dataclass
class TransmissionTrace:
    """Packet sent by every node in every slot of a run."""
    n_nodes: int
    slots: int
    delta: Tuple[int, ...]
    entries: List[TraceEntry] = field(default_factory=list)

    def packet(self, slot: int, node: int) -> Optional[int]:
        return self.entries[(slot - 1) * self.n_nodes + (node - 1)].packet

    def first_active_slot(self, node: int) -> Optional[int]:
        for slot in range(1, self.slots + 1):
            if self.packet(slot, node) is not None:
                return slot
        return None

    def packets_sent(self, node: int) -> int:
        return sum(1 for e in self.entries if e.node == node and e.packet is not None)

    def to_rows(self) -> List[Dict[str, object]]:
        return [
            {'slot': e.slot, 'node': e.node, 'packet_index': '-' if e.packet is None else e.packet}
            for e in self.entries
        ]


def delay_closed_form(i: int, m: int) -> int:
    """End-to-end delay Delta_i in slots for a uniform round count m."""
    if i < 1 or m < 0:
        raise ValueError(f"Need i >= 1 and m >= 0 (got i={i}, m={m})")
    if m == 0:
        return i - 1
    return ((m + 1) ** (i - 1) - 1) // m


def build_schedule(model: ChannelModel, config: ScenarioConfig) -> Schedule:
    """Rounds per node and the delays Delta_i = (m_i + 1) Delta_{i-1} + 1.

    Nodes 1 and 2 never cancel. Under the adaptive policy node i >= 3 uses
    the smallest m that the interference-plus-noise bound guarantees.

    Raises:
        FeasibilityError: If a node violates the convergence condition under the adaptive policy
    """
    policy = config.m_policy
    rounds = [0, 0]
    for i in range(3, model.n_nodes + 1):
        if policy.kind is PolicyKind.UNIFORM:
            rounds.append(policy.m)
        else:
            try:
                rounds.append(min_rounds(model, i, config.gamma))
            except FeasibilityError:
                logger.error(f"Adaptive schedule: node {i} cannot reach gamma={config.gamma:.4g}")
                raise

    delta = [0]
    for i in range(2, model.n_nodes + 1):
        delta.append((rounds[i - 1] + 1) * delta[-1] + 1)

    schedule = Schedule(rounds=tuple(rounds), delta=tuple(delta))
    logger.debug(f"Schedule for {policy}: rounds={schedule.rounds}, delta={schedule.delta}")
    return schedule


def received_signal(model: ChannelModel, schedule: Schedule, i: int, t: int) -> SignalExpr:
    """y_i(t) after known signals are removed, in steady state.

    Raises:
        ScheduleError: If i is not a receiving node or t is a start-up slot
    """
    if not 2 <= i <= min(model.n_nodes, schedule.n_nodes):
        raise ScheduleError(f"Node {i} does not receive in a {model.n_nodes}-node chain")
    if t < schedule.steady_state_slot(i):
        raise ScheduleError(
            f"Slot {t} precedes steady state at node {i} (first steady slot {schedule.steady_state_slot(i)})"
        )
    items = [(Term.data(t - schedule.delay(j)), model.gain(j, i)) for j in range(1, i)]
    items.append((Term.noise(i, t), 1.0))
    return SignalExpr.from_terms(items)


def _check_cancelling_node(model: ChannelModel, i: int, m: int) -> None:
    if i < 3 or i > model.n_nodes:
        raise ValueError(f"Cancellation needs 3 <= i <= {model.n_nodes} (got {i})")
    if m < 0:
        raise ValueError(f"Round count must be >= 0 (got {m})")


def cancel_rounds_recursive(
    model: ChannelModel,
    schedule: Schedule,
    i: int,
    m: int,
    t: Optional[int] = None,
    term_budget: Optional[int] = None
) -> CancellationResult:
    """Run m cancellation rounds at node i, one round at a time.

    Round k takes every unknown-interference symbol x(tau) left in g_{i,k-1}
    and subtracts c_tau / h_{(i-1),i} * y_i(tau + Delta_{i-1}), the received
    signal in which node i-1 transmits x(tau). All subtractions of a round use
    the coefficients of g_{i,k-1}.

    Args:
        model: Channel of the chain
        schedule: Delays of the upstream nodes
        i: Receiving node (>= 3)
        m: Number of rounds
        t: Reference slot of y_i(t); defaults to the first steady-state slot
        term_budget: Maximum number of terms in any intermediate expression

    Returns:
        CancellationResult holding g_{i,m}(t) and its SINR

    Raises:
        TermBudgetExceeded: If an intermediate expression outgrows term_budget
    """
    _check_cancelling_node(model, i, m)
    t = schedule.steady_state_slot(i) if t is None else t
    relay_delay = schedule.delay(i - 1)
    h_relay = model.gain(i - 1, i)
    useful = Term.data(t - relay_delay)

    base = received_signal(model, schedule, i, t)
    g = base
    for k in range(1, m + 1):
        interferers = [(term, coef) for term, coef in g.items() if term.is_data and term != useful]
        updates: Dict[Term, complex] = {}
        for term, coef in interferers:
            shift = term.slot - useful.slot
            factor = -coef / h_relay
            for base_term, base_coef in base.items():
                target = base_term.shifted(shift)
                # the relay-link copy of x(tau) removes the interferer exactly
                contribution = -coef if base_term == useful else base_coef * factor
                updates[target] = updates.get(target, 0j) + contribution
        g = g + SignalExpr(updates)
        if term_budget is not None and len(g) > term_budget:
            raise TermBudgetExceeded(
                f"g_{{{i},{k}}} has {len(g)} terms, budget is {term_budget}"
            )
        logger.debug(f"Node {i}, round {k}: {len(interferers)} interferers cancelled, {len(g)} terms")

    power = power_split(g, useful, model.p_t, model.sigma2)
    return CancellationResult(
        node=i,
        rounds=m,
        expr=g,
        useful=useful,
        power=power,
        sinr_actual_db=power.sinr_db,
        slots_waited=m * relay_delay
    )


def cancel_rounds_expanded(
    model: ChannelModel,
    schedule: Schedule,
    i: int,
    m: int,
    t: Optional[int] = None,
    term_budget: int = DEFAULT_TERM_BUDGET
) -> SignalExpr:
    """Build g_{i,m}(t) directly from its multi-index expansion.

    The result keeps the useful term h_{(i-1),i} x(t_{i-1}), the (m+1)-fold
    interference sum with sign (-1)^m and the alternating noise ladder
    z_i(t), -sum h/h z_i(t + delta), ...

    Raises:
        TermBudgetExceeded: If (i-2)^(m+1) exceeds term_budget
    """
    _check_cancelling_node(model, i, m)
    n_interferers = i - 2
    if n_interferers ** (m + 1) > term_budget:
        raise TermBudgetExceeded(
            f"Expansion of g_{{{i},{m}}} needs {n_interferers ** (m + 1)} multi-indices, budget is {term_budget}"
        )
    t = schedule.steady_state_slot(i) if t is None else t
    h_relay = model.gain(i - 1, i)
    t_useful = t - schedule.delay(i - 1)
    interferers = [(model.gain(j, i), offset) for j, offset in schedule.offsets(i).items()]

    items: List[Tuple[Term, complex]] = [(Term.data(t_useful), h_relay)]
    for combo in itertools.product(interferers, repeat=m + 1):
        coef = (-1) ** m / h_relay ** m
        for gain, _ in combo:
            coef *= gain
        items.append((Term.data(t_useful + sum(offset for _, offset in combo)), coef))

    for level in range(m + 1):
        for combo in itertools.product(interferers, repeat=level):
            coef = (-1) ** level / h_relay ** level
            for gain, _ in combo:
                coef *= gain
            items.append((Term.noise(i, t + sum(offset for _, offset in combo)), coef))

    return SignalExpr.from_terms(items)


def decode(sinr_db: float, gamma: float) -> bool:
    """True when the SINR reaches the threshold gamma (linear)."""
    return db_to_linear(sinr_db) >= gamma


def node_sinr_db(model: ChannelModel, schedule: Schedule, i: int, m: int,
                 term_budget: Optional[int] = None) -> float:
    """Actual SINR at node i after m rounds; node 2 sees no unknown interference."""
    if i == 2:
        return snr_single_hop(model, 2)
    return cancel_rounds_recursive(model, schedule, i, m, term_budget=term_budget).sinr_actual_db


def min_rounds_actual(model: ChannelModel, i: int, gamma: float, max_rounds: int = 16) -> Optional[int]:
    """Smallest m such that every node using m rounds lets node i reach gamma.

    The upstream delays change with m as well, so every candidate gets its
    own uniform schedule.
    """
    for m in range(max_rounds + 1):
        schedule = build_schedule(model, ScenarioConfig(gamma=gamma, m_policy=RoundsPolicy.uniform(m)))
        if decode(node_sinr_db(model, schedule, i, m), gamma):
            return m
    return None


def conventional_packets_sent(n_nodes: int, node: int, slots: int) -> int:
    """Packets sent by a node under plain multi-hop relaying with spatial reuse.

    Node i forwards packet 1 in slot i and then one packet every
    min(3, N - 1) slots, since nodes closer than three hops must not send
    together.
    """
    period = min(3, n_nodes - 1)
    if slots < node:
        return 0
    return (slots - node) // period + 1


def trace_schedule(model: ChannelModel, schedule: Schedule, n_nodes: int, slots: int) -> TransmissionTrace:
    """Packet transmitted by every node in slots 1..slots.

    Node i sends x(t - Delta_i) once t - Delta_i >= 1 and is idle before.
    Each node's first active slot is Delta_i + 1, the length of the relay
    path from node 1 plus one.
    """
    if slots < 1:
        raise ValueError(f"slots must be >= 1 (got {slots})")
    if not 1 <= n_nodes <= min(model.n_nodes, schedule.n_nodes):
        raise ScheduleError(f"Cannot trace {n_nodes} nodes of a {schedule.n_nodes}-node schedule")

    graph = schedule.relay_graph()
    start = {i: nx.shortest_path_length(graph, 1, i, weight='weight') + 1 for i in range(1, n_nodes + 1)}

    trace = TransmissionTrace(n_nodes=n_nodes, slots=slots, delta=schedule.delta[:n_nodes])
    for slot in range(1, slots + 1):
        for node in range(1, n_nodes + 1):
            packet = slot - start[node] + 1 if slot >= start[node] else None
            trace.entries.append(TraceEntry(slot=slot, node=node, packet=packet))
    return trace
