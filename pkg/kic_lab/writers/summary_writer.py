import os
from typing import TYPE_CHECKING, List

from .csv_writer import Dataset, format_value

if TYPE_CHECKING:
    from ..parsers.config_parser import ExperimentConfig


def write_run_summary(output_dir: str, command: str, config: 'ExperimentConfig',
                      datasets: List[Dataset]) -> str:
    """Write a markdown README describing one run into the output directory.

    Returns:
        Path of the written README.md
    """
    doc_path = os.path.join(output_dir, 'README.md')
    with open(doc_path, 'w', encoding='utf-8') as f:
        f.write('# KIC Lab Results\n\n')
        f.write(f"Command: `{command}`\n\n")

        # Configuration summary
        f.write('## Configuration\n\n')
        f.write(f"- Nodes: {config.n_nodes}\n")
        f.write(f"- Path-loss exponents: {', '.join(format_value(a) for a in config.alpha_list)}\n")
        f.write(f"- Single-hop SNR: {format_value(config.single_hop_snr_db)} dB\n")
        f.write(f"- Decoding threshold: {format_value(config.gamma_db)} dB\n")
        f.write(f"- Rounds: {', '.join(str(m) for m in config.m_list)} ({config.policy.name.lower()})\n")
        if config.positions is not None:
            f.write(f"- Positions: {', '.join(format_value(p) for p in config.positions)}\n")
        if config.random_phase:
            f.write(f"- Random channel phases (seed {config.phase_seed})\n")
        if command == 'monte-carlo' and config.mc_config is not None:
            mc = config.mc_config
            f.write(f"- Monte Carlo: {mc.trials} trials, seed {mc.seed}, {mc.symbol_model.value} symbols"
                    f"{', noiseless' if config.mc_noiseless else ''}\n")
        f.write('\n')

        # Result files
        f.write('## Results\n\n')
        for dataset in datasets:
            f.write(f"### {dataset.name}.csv\n\n")
            f.write(f"Rows: {len(dataset.rows)}\n")
            f.write(f"Columns: {', '.join(dataset.columns)}\n")
            skipped = sum(1 for row in dataset.rows if 'skipped' in row.values())
            if skipped:
                f.write(f"Skipped cells: {skipped}\n")
            f.write('\n')
    return doc_path
