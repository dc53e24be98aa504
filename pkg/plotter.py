from collections import defaultdict
from typing import Sequence

import numpy as np

from common import ExperimentRecord
from utils import setup_logging

logger = setup_logging(__name__)


def plot_records(records: Sequence[ExperimentRecord], x_column: str, y_column: str, path: str,
                 title: str = '') -> None:
    """
    Write an SVG plot of y_column against x_column.

    Every record is drawn as a point; when several records share an x
    value their mean is joined by a line.

    Args:
        records: Experiment records
        x_column: Parameter or statistic on the x axis
        y_column: Statistic on the y axis
        path: Output SVG path
        title: Plot title
    """
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    # Stable element ids, so repeated runs write the same file
    matplotlib.rcParams['svg.hashsalt'] = 'avgcase'

    points = defaultdict(list)
    for record in records:
        row = record.to_row()
        x, y = row.get(x_column), row.get(y_column)
        if isinstance(x, (int, float)) and isinstance(y, (int, float)) and not np.isnan(y):
            points[x].append(y)
    if not points:
        raise ValueError(f"No numeric ({x_column}, {y_column}) pairs to plot")

    xs = sorted(points)
    fig = plt.figure(figsize=(7.2, 4.4))
    ax = fig.add_subplot(1, 1, 1)
    ax.scatter([x for x in xs for _ in points[x]], [y for x in xs for y in points[x]], s=12, alpha=0.6)
    ax.plot(xs, [float(np.mean(points[x])) for x in xs], marker='o')
    ax.set_xlabel(x_column)
    ax.set_ylabel(y_column)
    ax.set_title(title or f"{y_column} vs {x_column}")
    ax.grid(True, ls=':')

    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote plot to {path}")
