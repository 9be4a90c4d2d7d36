import numpy as np

from ..utils import require_extension

__all__ = ['BENCHMARK_COLUMNS', 'benchmark_row', 'tabulate_benchmarks',
           'create_table_string']

BENCHMARK_COLUMNS = ['Cost', 'MC cost', '1-Delta', 'MC 1-Delta', 'Time (s)']


def benchmark_row(result, report, Delta):
    """
    Table entries of a solved and validated benchmark.

    Args:
        result: SynthesisResult.
        report: McReport, or None if no validation was run.
        Delta: Joint risk bound of the problem.

    Returns:
        List of values ordered as BENCHMARK_COLUMNS. Missing values are NaN.
    """
    mc_cost = np.nan if report is None else report.empirical_cost
    mc_sat = np.nan if report is None else report.satisfaction
    objective = np.nan if result.objective is None else result.objective
    return [objective, mc_cost, 1.0 - Delta, mc_sat,
            result.timings.get('total', np.nan)]


def tabulate_benchmarks(rows, path=None, digits=5):
    """
    Create a table of benchmark rows.

    The path to which the table is written determines the formatting: paths
    ending with `.csv` give a comma separated table, paths ending with `.tex`
    a LaTeX table.

    Args:
        rows: Dictionary mapping row labels (e.g. 'Chance - Open') to lists
            ordered as BENCHMARK_COLUMNS.
        path: Path to which the table should be written, or None.
        digits: Number of decimals the entries are rounded to.

    Returns:
        The table formatted as csv string (or tex if path ends with `.tex`).
    """
    labels = list(rows)
    content = np.round(np.array([rows[k] for k in labels], dtype=float),
                       digits).tolist()
    fmt = 'csv'
    if path is not None:
        fmt = require_extension(path, ['csv', 'tex'])
    table = create_table_string(content, labels, BENCHMARK_COLUMNS, fmt,
                                "Computed and Monte Carlo cost and "
                                "constraint satisfaction")
    if path is not None:
        with open(path, 'w') as handle:
            handle.write(table)
    return table


def create_table_string(content, row_labels, col_labels, format, caption):
    """
    Create a table following a specific formatting based on provided
    rows, columns and table entries.

    Args:
        content: Nested list of shape `(rows, columns)`.
        row_labels: List containing the labels that should be at the start of
            each row.
        col_labels: List containing the labels that should be at the top most
            row of the table, or None.
        format: `csv` or `tex`.
        caption: Caption of the table. Only used for `tex` tables.

    Returns:
        A string containing the formatted table.

    Raises:
        ValueError: Format '?' unknown for table creation.
    """
    if format == 'csv':
        lines = []
        if col_labels is not None:
            lines.append(','.join([''] + list(col_labels)))
        for label, values in zip(row_labels, content):
            lines.append(','.join([str(label)] + list(map(str, values))))
        return '\n'.join(lines) + '\n'
    if format == 'tex':
        n_cols = len(col_labels) if col_labels is not None else \
            len(content[0])
        output = '\\begin{table}\n\\centering\n\\begin{tabular}'
        output += "{" + ("l|" + "c" * n_cols) + "}\n"
        if col_labels is not None:
            output += ' & '.join([''] + list(col_labels)) + '\\\\' + "\n"
            output += '\\hline \n'
        for label, values in zip(row_labels, content):
            line = [str(label)] + list(map(str, values))
            output += ' & '.join(line) + '\\\\' + "\n"
        output += "\\end{tabular}\n"
        output += "\\caption{" + caption + "}\n"
        output += "\\end{table}"
        return output
    raise ValueError(
        "Format '{}' unknown for table creation. Currently supported are "
        "'csv' and 'tex'.".format(format))
