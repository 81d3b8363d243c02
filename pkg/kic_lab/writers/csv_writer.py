import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

FLOAT_FORMAT = '.10g'


@dataclass
class Dataset:
    """One result table: a file name, its column order and its rows."""
    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    group_by: Tuple[str, ...] = ()  # gnuplot blocks, one per distinct key

    def sort(self, *keys: str) -> 'Dataset':
        """Sort rows in place by the given columns; returns self."""
        self.rows.sort(key=lambda row: tuple(_sort_value(row[k]) for k in keys))
        return self


def _sort_value(value: Any) -> Tuple[int, Any]:
    # numbers before markers such as '-' or 'skipped'
    if isinstance(value, (int, float)):
        return (0, value)
    return (1, str(value))


def format_value(value: Any) -> str:
    """Deterministic text form of a cell."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if math.isnan(value):
            return 'nan'
        return format(value, FLOAT_FORMAT)
    return str(value)


class CsvWriter:
    """Writer for CSV and gnuplot data files from result datasets."""

    def __init__(self, dataset: Dataset):
        """Initialize the writer.

        Args:
            dataset: Dataset to render
        """
        self.dataset = dataset
        missing = [
            (index, column)
            for index, row in enumerate(dataset.rows)
            for column in dataset.columns if column not in row
        ]
        if missing:
            index, column = missing[0]
            raise ValueError(f"Row {index} of {dataset.name} has no value for column '{column}'")

    def generate_csv(self) -> str:
        """Render the dataset as CSV with a header row and '\\n' line endings."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(self.dataset.columns)
        for row in self.dataset.rows:
            writer.writerow([format_value(row[c]) for c in self.dataset.columns])
        return buffer.getvalue()

    def generate_gnuplot(self) -> str:
        """Render the dataset as whitespace-separated gnuplot data.

        Rows sharing the values of ``group_by`` form one block; blocks are
        separated by two blank lines so that ``index`` selects them.
        """
        lines = ['# ' + ' '.join(self.dataset.columns)]
        for key, rows in self._blocks():
            if key:
                label = ', '.join(f"{k}={format_value(v)}" for k, v in zip(self.dataset.group_by, key))
                lines.append(f"# {label}")
            for row in rows:
                lines.append(' '.join(format_value(row[c]) for c in self.dataset.columns))
            lines.append('')
            lines.append('')
        if self.dataset.rows:
            lines = lines[:-2]
        return '\n'.join(lines) + '\n'

    def _blocks(self) -> List[Tuple[Tuple[Any, ...], List[Dict[str, Any]]]]:
        blocks: Dict[Tuple[Any, ...], List[Dict[str, Any]]] = {}
        for row in self.dataset.rows:
            key = tuple(row[k] for k in self.dataset.group_by)
            blocks.setdefault(key, []).append(row)
        return list(blocks.items())


def write_csv(dataset: Dataset, output_dir: str, gnuplot: bool = False) -> List[str]:
    """Write a dataset to ``<output_dir>/<name>.csv`` and optionally ``<name>.dat``.

    Args:
        dataset: Dataset to write
        output_dir: Existing output directory
        gnuplot: Also write the gnuplot data file

    Returns:
        Paths of the written files

    Raises:
        ValueError: If a row lacks one of the dataset's columns
    """
    writer = CsvWriter(dataset)
    paths = [os.path.join(output_dir, f"{dataset.name}.csv")]
    with open(paths[0], 'w', encoding='utf-8', newline='') as f:
        f.write(writer.generate_csv())
    if gnuplot:
        paths.append(os.path.join(output_dir, f"{dataset.name}.dat"))
        with open(paths[1], 'w', encoding='utf-8', newline='') as f:
            f.write(writer.generate_gnuplot())
    return paths


def read_csv(path: str) -> Tuple[List[str], List[Dict[str, str]]]:
    """Read back a written CSV file as its header and string rows."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        return list(reader.fieldnames or []), rows
