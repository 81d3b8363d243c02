import json

import pytest

from kic_lab.core.channel_model import PolicyKind
from kic_lab.core.experiments import (
    SKIPPED,
    execute,
    run_bounds_report,
    run_delay_table,
    run_example_n5,
    run_sinr_sweep,
)
from kic_lab.errors import ConfigError
from kic_lab.main import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, OUTPUT_DIR_ENV, main
from kic_lab.parsers.config_parser import ExperimentConfig
from kic_lab.writers.csv_writer import read_csv


@pytest.fixture
def small(tmp_path):
    """Five-node alpha=3 configuration writing into a temporary directory."""
    return ExperimentConfig(n_nodes=5, alpha_list=[3.0], m_list=[0, 1, 2], output_dir=str(tmp_path / 'out'))


@pytest.fixture
def config_file(tmp_path):
    """Write a configuration document and return its path."""
    def _write(document):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps(document), encoding='utf-8')
        return str(path)
    return _write


def by_name(datasets):
    return {d.name: d for d in datasets}


def test_delay_table(small):
    """Test the delay table against the closed form."""
    (table,) = run_delay_table(small)
    delays = {(row['i'], row['m']): row['delay_slots'] for row in table.rows}
    assert [delays[(i, 0)] for i in range(1, 6)] == [0, 1, 2, 3, 4]
    assert [delays[(i, 1)] for i in range(1, 6)] == [0, 1, 3, 7, 15]
    assert [delays[(i, 2)] for i in range(1, 6)] == [0, 1, 4, 13, 40]
    assert [(row['i'], row['m']) for row in table.rows] == sorted(delays, key=lambda k: (k[1], k[0]))


def test_sinr_sweep(small):
    """Test the SINR sweep rows and the bound ordering."""
    (sweep,) = run_sinr_sweep(small)
    assert len(sweep.rows) == 3 * 4
    for row in sweep.rows:
        if row['i'] == 2:
            assert row['sinr_actual_db'] == pytest.approx(20.0)
            assert row['sinr_lb_db'] == row['sinr_actual_db']
            continue
        assert row['sinr_lb_db'] <= row['sinr_actual_db'] + 1e-9
        assert row['sinr_lb_db'] <= row['sinr_unmerged_db'] + 1e-9
        if row['i'] == 3:
            assert row['sinr_actual_db'] == pytest.approx(row['sinr_lb_db'])
    keys = [(row['alpha'], row['m'], row['i']) for row in sweep.rows]
    assert keys == sorted(keys)

    node3 = {row['m']: row['sinr_actual_db'] for row in sweep.rows if row['i'] == 3}
    assert node3[0] == pytest.approx(8.697, abs=0.01)
    assert node3[1] == pytest.approx(15.707, abs=0.01)


def test_sinr_sweep_term_budget(small):
    """Test that cells over the term budget are marked skipped."""
    small.term_budget = 1
    (sweep,) = run_sinr_sweep(small)
    skipped = [row for row in sweep.rows if row['sinr_actual_db'] == SKIPPED]
    assert skipped
    assert all(row['i'] >= 3 for row in skipped)
    assert all(row['sinr_lb_db'] == SKIPPED for row in skipped)


def test_bounds_report(tmp_path):
    """Test the bound, round count and chain-length tables."""
    cfg = ExperimentConfig(alpha_list=[3.0], m_list=[0, 1, 2], b=3.5, output_dir=str(tmp_path))
    datasets = by_name(run_bounds_report(cfg))
    assert set(datasets) == {'bounds_report', 'min_rounds', 'chain_length'}
    assert len(datasets['bounds_report'].rows) == 6 * 3

    node3 = datasets['min_rounds'].rows[0]
    assert node3['i'] == 3
    assert node3['feasible'] == 1
    assert node3['min_rounds_bound'] == 1
    assert node3['min_rounds_actual'] == 1

    chain = {row['b_source']: row for row in datasets['chain_length'].rows}
    assert chain['limit']['max_chain_length'] == 8
    assert chain['config']['b'] == 3.5
    assert chain['scenario']['b'] == pytest.approx(0.8)


def test_adaptive_schedule_dataset(tmp_path):
    """Test the schedule reported under the adaptive policy."""
    cfg = ExperimentConfig(n_nodes=5, alpha_list=[3.0], m_list=[0, 1], policy=PolicyKind.ADAPTIVE_MIN,
                           output_dir=str(tmp_path))
    schedule = by_name(run_bounds_report(cfg))['adaptive_schedule']
    rows = schedule.rows
    assert [row['i'] for row in rows] == [1, 2, 3, 4, 5]
    assert [row['m_i'] for row in rows[:3]] == [0, 0, 1]
    for prev, row in zip(rows, rows[1:]):
        assert row['delta_i'] == (row['m_i'] + 1) * prev['delta_i'] + 1
    assert rows[0]['sinr_actual_db'] == '-'
    for row in rows[2:]:
        assert row['sinr_actual_db'] >= 10.0


def test_example_n5(small):
    """Test the five-node trace and its summary."""
    packets, summary = run_example_n5(small)
    assert len(packets.rows) == 5 * 20
    assert packets.rows[0] == {'slot': 1, 'node': 1, 'packet_index': 1}
    assert {'slot': 14, 'node': 4, 'packet_index': 1} in packets.rows
    assert summary.rows == [
        {'node': 1, 'delta': 0, 'first_active_slot': 1, 'packets_sent': 20, 'conventional_packets': 7},
        {'node': 2, 'delta': 1, 'first_active_slot': 2, 'packets_sent': 19, 'conventional_packets': 7},
        {'node': 3, 'delta': 4, 'first_active_slot': 5, 'packets_sent': 16, 'conventional_packets': 6},
        {'node': 4, 'delta': 13, 'first_active_slot': 14, 'packets_sent': 7, 'conventional_packets': 6},
        {'node': 5, 'delta': 40, 'first_active_slot': '-', 'packets_sent': 0, 'conventional_packets': 6},
    ]


def test_execute_writes_files(small):
    """Test the files written by one command."""
    paths = execute('example-n5', small)
    assert [p.rsplit('/', 1)[-1] for p in paths] == ['example_n5.csv', 'example_n5_summary.csv', 'README.md']
    header, rows = read_csv(paths[1])
    assert header == ['node', 'delta', 'first_active_slot', 'packets_sent', 'conventional_packets']
    assert rows[4]['first_active_slot'] == '-'

    readme = open(paths[2], encoding='utf-8').read()
    assert readme.startswith('# KIC Lab Results')
    assert 'Command: `example-n5`' in readme
    assert '### example_n5.csv' in readme


def test_execute_gnuplot_without_readme(small):
    """Test the gnuplot option and disabled documentation."""
    small.gnuplot = True
    small.doc_format = None
    paths = execute('delay-table', small)
    assert [p.rsplit('/', 1)[-1] for p in paths] == ['delay_table.csv', 'delay_table.dat']


def test_execute_unknown_command(small):
    with pytest.raises(ConfigError):
        execute('plot', small)


def test_reruns_are_byte_identical(small, tmp_path):
    """Test that two runs of the same configuration write identical files."""
    first = execute('sinr-sweep', small)
    small.output_dir = str(tmp_path / 'again')
    second = execute('sinr-sweep', small)
    for a, b in zip(first, second):
        assert open(a, 'rb').read() == open(b, 'rb').read()


def test_main_ok(tmp_path, config_file):
    """Test a successful run through the command line."""
    path = config_file({"scenario": {"n_nodes": 4, "alpha": 3}, "rounds": {"m": [0, 1]}})
    out = tmp_path / 'cli'
    assert main(['delay-table', '-c', path, '-o', str(out)]) == EXIT_OK
    header, rows = read_csv(str(out / 'delay_table.csv'))
    assert header == ['i', 'm', 'delay_slots']
    assert len(rows) == 8
    assert (out / 'README.md').exists()


def test_main_config_errors(tmp_path, config_file):
    """Test exit code 2 for invalid configurations."""
    out = str(tmp_path / 'cli')
    assert main(['delay-table', '-c', str(tmp_path / 'missing.json'), '-o', out]) == EXIT_CONFIG
    assert main(['delay-table', '-c', config_file({"scenario": {"n_nodes": 0}}), '-o', out]) == EXIT_CONFIG
    assert main(['monte-carlo', '-o', out]) == EXIT_CONFIG
    assert main(['delay-table', '-o', out, '-l', 'LOUD']) == EXIT_CONFIG


def test_main_unknown_command():
    with pytest.raises(SystemExit):
        main(['plot'])


def test_main_infeasible(tmp_path, config_file):
    """Test exit code 3 when the adaptive policy meets an infeasible node."""
    path = config_file({
        "scenario": {"n_nodes": 8, "alpha": 2.1},
        "rounds": {"policy": "adaptive_min", "m": [0, 1]}
    })
    assert main(['bounds-report', '-c', path, '-o', str(tmp_path / 'cli')]) == EXIT_INFEASIBLE


def test_main_monte_carlo(tmp_path, config_file):
    """Test the Monte Carlo command with a seed override."""
    path = config_file({
        "scenario": {"n_nodes": 4, "alpha": 3},
        "rounds": {"m": [0, 1]},
        "monte_carlo": {"trials": 2000, "seed": 3, "chunk_size": 1000}
    })
    out = tmp_path / 'cli'
    assert main(['monte-carlo', '-c', path, '-o', str(out), '--seed', '11']) == EXIT_OK
    header, rows = read_csv(str(out / 'monte_carlo.csv'))
    assert header[:3] == ['alpha', 'i', 'm']
    assert [(r['i'], r['m']) for r in rows] == [('3', '0'), ('4', '0'), ('3', '1'), ('4', '1')]
    assert all(r['seed'] == '11' for r in rows)
    assert 'seed 11' in (out / 'README.md').read_text(encoding='utf-8')


def test_output_dir_precedence(tmp_path, config_file, monkeypatch):
    """Test that --out beats the environment, which beats the config."""
    path = config_file({"scenario": {"n_nodes": 3}, "rounds": {"m": [1]},
                        "output": {"directory": str(tmp_path / 'from_config')}})
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / 'from_env'))
    assert main(['delay-table', '-c', path]) == EXIT_OK
    assert (tmp_path / 'from_env' / 'delay_table.csv').exists()

    assert main(['delay-table', '-c', path, '-o', str(tmp_path / 'from_flag')]) == EXIT_OK
    assert (tmp_path / 'from_flag' / 'delay_table.csv').exists()

    monkeypatch.delenv(OUTPUT_DIR_ENV)
    assert main(['delay-table', '-c', path]) == EXIT_OK
    assert (tmp_path / 'from_config' / 'delay_table.csv').exists()


def test_main_rejects_bad_phase_seed(tmp_path, config_file):
    """Test exit code 2 for a phase seed that is not a non-negative integer."""
    out = str(tmp_path / 'cli')
    for seed in ("abc", -1):
        path = config_file({"scenario": {"n_nodes": 4, "random_phase": True, "phase_seed": seed}})
        assert main(['sinr-sweep', '-c', path, '-o', out]) == EXIT_CONFIG
