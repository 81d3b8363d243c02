import itertools

import pytest

from kic_lab.core.analysis import sinr_lower_bound
from kic_lab.core.channel_model import RoundsPolicy, ScenarioConfig, build_channel_matrix
from kic_lab.core.kic_engine import (
    Schedule,
    build_schedule,
    cancel_rounds_expanded,
    cancel_rounds_recursive,
    conventional_packets_sent,
    decode,
    delay_closed_form,
    min_rounds_actual,
    node_sinr_db,
    received_signal,
    trace_schedule,
)
from kic_lab.core.signal_algebra import Term
from kic_lab.errors import FeasibilityError, ScheduleError, TermBudgetExceeded

ALPHAS = [2.1, 3.0, 4.0]
GAMMA = 10.0  # 10 dB


def uniform(model, m):
    return build_schedule(model, ScenarioConfig(gamma=GAMMA, m_policy=RoundsPolicy.uniform(m)))


@pytest.fixture
def chain():
    """Equally spaced 8-node chain with alpha=3 and 20 dB single-hop SNR."""
    return build_channel_matrix(8, 3.0)


@pytest.fixture
def chains():
    """One 8-node chain per evaluated path-loss exponent."""
    return {alpha: build_channel_matrix(8, alpha) for alpha in ALPHAS}


def test_delay_golden_values():
    """Test the end-to-end delays of the five-node example."""
    assert delay_closed_form(3, 2) == 4
    assert delay_closed_form(4, 2) == 13
    assert delay_closed_form(1, 3) == 0
    assert delay_closed_form(5, 0) == 4


def test_delay_closed_form_matches_recursion():
    """Test the closed form against the schedule recursion for i <= 12, m <= 5."""
    model = build_channel_matrix(12, 3.0)
    for m in range(6):
        schedule = uniform(model, m)
        for i in range(1, 13):
            assert schedule.delay(i) == delay_closed_form(i, m)
            assert isinstance(delay_closed_form(i, m), int)


def test_delay_rejects_invalid_arguments():
    """Test argument checking of the closed form."""
    with pytest.raises(ValueError):
        delay_closed_form(0, 1)
    with pytest.raises(ValueError):
        delay_closed_form(3, -1)


def test_schedule_offsets(chain):
    """Test rounds, delays and interferer offsets of a uniform schedule."""
    schedule = uniform(chain, 2)
    assert schedule.rounds == (0, 0, 2, 2, 2, 2, 2, 2)
    assert schedule.delta[:5] == (0, 1, 4, 13, 40)
    assert schedule.offsets(4) == {1: 4, 2: 3}
    assert schedule.offsets(3) == {1: 1}
    assert schedule.steady_state_slot(4) == 5
    assert schedule.relay_graph().number_of_edges() == 7
    with pytest.raises(ScheduleError):
        schedule.delay(9)


def test_adaptive_schedule():
    """Test that the adaptive policy picks the bound-based round counts."""
    config = ScenarioConfig(gamma=GAMMA, m_policy=RoundsPolicy.adaptive_min())
    schedule = build_schedule(build_channel_matrix(5, 3.0), config)
    assert schedule.rounds[:3] == (0, 0, 1)
    assert all(m >= 1 for m in schedule.rounds[2:])
    assert schedule.delay(3) == 3

    with pytest.raises(FeasibilityError) as excinfo:
        build_schedule(build_channel_matrix(8, 2.1), config)
    assert excinfo.value.node >= 3


def test_received_signal(chain):
    """Test y_i(t) in steady state and its time-shift invariance."""
    schedule = uniform(chain, 1)
    y = received_signal(chain, schedule, 4, 4)
    assert y.coefficient(Term.data(1)) == pytest.approx(chain.gain(3, 4))
    assert y.coefficient(Term.data(3)) == pytest.approx(chain.gain(2, 4))
    assert y.coefficient(Term.data(4)) == pytest.approx(chain.gain(1, 4))
    assert y.coefficient(Term.noise(4, 4)) == 1.0
    assert len(y) == 4

    assert received_signal(chain, schedule, 4, 9) == y.shifted(5)


def test_received_signal_requires_steady_state(chain):
    """Test that start-up slots are rejected."""
    schedule = uniform(chain, 1)
    with pytest.raises(ScheduleError):
        received_signal(chain, schedule, 4, 3)
    with pytest.raises(ScheduleError):
        received_signal(chain, schedule, 1, 10)


def test_single_round_node3(chain):
    """Test g_{3,1} term by term."""
    schedule = uniform(chain, 1)
    result = cancel_rounds_recursive(chain, schedule, 3, 1)
    h13 = chain.gain(1, 3)
    h23 = chain.gain(2, 3)
    assert result.useful == Term.data(1)
    assert result.expr.coefficient(Term.data(1)) == pytest.approx(h23)
    assert Term.data(2) not in result.expr
    assert result.expr.coefficient(Term.data(3)) == pytest.approx(-h13 ** 2 / h23)
    assert result.expr.coefficient(Term.noise(3, 2)) == pytest.approx(1.0)
    assert result.expr.coefficient(Term.noise(3, 3)) == pytest.approx(-h13 / h23)
    assert result.slots_waited == schedule.delay(2)


def test_data_interference_sign(chain):
    """Test that the surviving interference has sign (-1)^m for real channels."""
    for m in range(4):
        result = cancel_rounds_recursive(chain, uniform(chain, m), 4, m)
        for term in result.expr.data_terms():
            if term != result.useful:
                assert (result.expr.coefficient(term).real > 0) == (m % 2 == 0)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_recursive_matches_expansion(chains, alpha):
    """Test the round recursion against the multi-index expansion for i <= 8, m <= 4."""
    model = chains[alpha]
    for m in range(5):
        schedule = uniform(model, m)
        for i in range(3, 9):
            recursive = cancel_rounds_recursive(model, schedule, i, m).expr
            expanded = cancel_rounds_expanded(model, schedule, i, m)
            assert recursive.is_close(expanded, tol=1e-10), f"i={i}, m={m}"
            assert recursive.terms() == expanded.terms()


def test_recursive_matches_expansion_random_phases():
    """Test the oracle equivalence with complex channel coefficients."""
    model = build_channel_matrix(6, 3.0, random_phase=True, phase_seed=3)
    for m in range(4):
        schedule = uniform(model, m)
        for i in range(3, 7):
            expanded = cancel_rounds_expanded(model, schedule, i, m)
            assert cancel_rounds_recursive(model, schedule, i, m).expr.is_close(expanded, tol=1e-10)


def test_term_budget(chain):
    """Test that both evaluations stop at the term budget."""
    schedule = uniform(chain, 4)
    with pytest.raises(TermBudgetExceeded):
        cancel_rounds_expanded(chain, schedule, 8, 4, term_budget=1000)
    with pytest.raises(TermBudgetExceeded):
        cancel_rounds_recursive(chain, schedule, 8, 4, term_budget=10)


def test_cancellation_rejects_invalid_nodes(chain):
    """Test that only nodes 3..N cancel."""
    schedule = uniform(chain, 1)
    with pytest.raises(ValueError):
        cancel_rounds_recursive(chain, schedule, 2, 1)
    with pytest.raises(ValueError):
        cancel_rounds_expanded(chain, schedule, 9, 1)
    with pytest.raises(ValueError):
        cancel_rounds_recursive(chain, schedule, 3, -1)


def test_node2_sinr_is_single_hop_snr(chains):
    """Test that node 2 sees the configured 20 dB."""
    for model in chains.values():
        assert node_sinr_db(model, uniform(model, 1), 2, 0) == pytest.approx(20.0, abs=1e-12)


def test_bound_is_tight_at_node3(chains):
    """Test that the lower bound equals the actual SINR at node 3 for every m."""
    for model in chains.values():
        for m in range(5):
            actual = cancel_rounds_recursive(model, uniform(model, m), 3, m).sinr_actual_db
            assert sinr_lower_bound(model, 3, m) == pytest.approx(actual, abs=1e-9)


def test_bound_below_actual(chains):
    """Test sinr_lb <= actual SINR for alpha in {3, 4}, i <= 8, m <= 4.

    At alpha=2.1 several paths reach the same symbol in phase and the merged
    interference can exceed the bound, so only node 3 is checked there.
    """
    for alpha in (3.0, 4.0):
        model = chains[alpha]
        for m, i in itertools.product(range(5), range(3, 9)):
            actual = cancel_rounds_recursive(model, uniform(model, m), i, m).sinr_actual_db
            assert sinr_lower_bound(model, i, m) <= actual + 1e-9, f"alpha={alpha}, i={i}, m={m}"


def test_one_round_gain(chains):
    """Test that m=1 gains more than 4 dB over m=0 where interference dominates."""
    def gain(model, i):
        return (cancel_rounds_recursive(model, uniform(model, 1), i, 1).sinr_actual_db
                - cancel_rounds_recursive(model, uniform(model, 0), i, 0).sinr_actual_db)

    for alpha in (3.0, 4.0):
        for i in range(3, 7):
            assert gain(chains[alpha], i) > 4.0, f"alpha={alpha}, i={i}"
    assert gain(chains[2.1], 3) > 4.0
    for i in range(4, 7):
        assert gain(chains[2.1], i) < gain(chains[3.0], i) < gain(chains[4.0], i)
        assert gain(chains[2.1], i) > 0.0


def test_sinr_non_decreasing_in_m(chains):
    """Test that more rounds never lower the actual SINR in the contracting cases."""
    cases = [(alpha, i) for alpha in (3.0, 4.0) for i in range(3, 9)] + [(2.1, 3), (2.1, 4)]
    for alpha, i in cases:
        model = chains[alpha]
        values = [cancel_rounds_recursive(model, uniform(model, m), i, m).sinr_actual_db for m in range(5)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:])), f"alpha={alpha}, i={i}: {values}"


def test_sinr_approaches_single_hop_snr(chain):
    """Test that many rounds bring node 3 close to the single-hop SNR."""
    sinr = cancel_rounds_recursive(chain, uniform(chain, 6), 3, 6).sinr_actual_db
    assert 19.0 < sinr < 20.0


def test_noiseless_sinr(chain):
    """Test that sigma^2 = 0 leaves only the interference."""
    clean = chain.with_noise_power(0.0)
    result = cancel_rounds_recursive(clean, uniform(clean, 2), 3, 2)
    assert result.power.noise == 0.0
    assert result.power.interference == pytest.approx(0.125 ** 3)


def test_decode():
    """Test the threshold decision in dB against linear gamma."""
    assert decode(10.0, 10.0)
    assert decode(15.0, 10.0)
    assert not decode(9.99, 10.0)


def test_min_rounds_actual(chain):
    """Test the smallest uniform round count that decodes."""
    assert min_rounds_actual(chain, 3, GAMMA) == 1
    assert min_rounds_actual(chain, 2, GAMMA) == 0
    assert min_rounds_actual(chain, 3, 1e9, max_rounds=3) is None


def test_five_node_trace():
    """Test transmit offsets and start-up of the five-node, two-round example."""
    model = build_channel_matrix(5, 3.0)
    schedule = uniform(model, 2)
    trace = trace_schedule(model, schedule, 5, 20)

    assert trace.delta[:4] == (0, 1, 4, 13)
    assert trace.packet(14, 4) == 1
    assert trace.packet(5, 3) == 1
    assert trace.packet(20, 1) == 20
    assert trace.packet(20, 2) == 19
    assert trace.packet(20, 3) == 16
    assert trace.packet(20, 4) == 7
    for node in range(2, 6):
        assert trace.packet(1, node) is None

    assert [trace.first_active_slot(n) for n in range(1, 6)] == [1, 2, 5, 14, None]
    assert trace.packets_sent(1) == 20
    assert trace.packets_sent(4) == 7
    assert trace.packets_sent(5) == 0


def test_trace_one_new_packet_per_slot():
    """Test that every active node moves to the next packet in every slot."""
    model = build_channel_matrix(5, 3.0)
    trace = trace_schedule(model, uniform(model, 2), 5, 20)
    for node in range(1, 5):
        first = trace.first_active_slot(node)
        for slot in range(first, 20):
            assert trace.packet(slot + 1, node) == trace.packet(slot, node) + 1


def test_trace_rows():
    """Test the row form of a trace with idle markers."""
    model = build_channel_matrix(3, 3.0)
    trace = trace_schedule(model, uniform(model, 1), 3, 2)
    assert trace.to_rows() == [
        {'slot': 1, 'node': 1, 'packet_index': 1},
        {'slot': 1, 'node': 2, 'packet_index': '-'},
        {'slot': 1, 'node': 3, 'packet_index': '-'},
        {'slot': 2, 'node': 1, 'packet_index': 2},
        {'slot': 2, 'node': 2, 'packet_index': 1},
        {'slot': 2, 'node': 3, 'packet_index': '-'},
    ]
    with pytest.raises(ValueError):
        trace_schedule(model, uniform(model, 1), 3, 0)


def test_conventional_packets():
    """Test plain relaying with one packet every three slots."""
    assert conventional_packets_sent(5, 1, 20) == 7
    assert conventional_packets_sent(5, 4, 20) == 6
    assert conventional_packets_sent(5, 4, 3) == 0
    assert conventional_packets_sent(3, 1, 4) == 2


def test_schedule_is_frozen():
    """Test that schedules cannot change after construction."""
    schedule = Schedule(rounds=(0, 0, 1), delta=(0, 1, 3))
    with pytest.raises(AttributeError):
        schedule.rounds = (0, 0, 2)
