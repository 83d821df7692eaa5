"""
Curve Emission - Per-algorithm learning curves as CSV, SVG or XLSX

PURPOSE: Render the aggregate rows of a RunRecord:
         - CSV: one file per algorithm (t, mean, ci_low, ci_high, ci_half_width, n_reps)
         - SVG: one file per algorithm, mean line with a shaded 95% CI band
         - XLSX: one styled workbook (Summary + one sheet per algorithm)
         - plot_comparison: every algorithm overlaid in a single SVG

R EQUIVALENT: ggplot(aes(t, mean)) + geom_line() + geom_ribbon(aes(ymin, ymax))
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

import matplotlib

matplotlib.use('Agg')
# stable SVG element ids, so identical curves give identical files
matplotlib.rcParams['svg.hashsalt'] = 'zspo-toolkit'
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from formatters.excel_formatter import ResultsExcelFormatter  # noqa: E402

logger = logging.getLogger(__name__)

CURVE_FORMATS = ('csv', 'svg', 'xlsx')
CURVE_COLUMNS = ['t', 'mean', 'ci_low', 'ci_high', 'ci_half_width', 'n_reps']

# Stable colours so the same algorithm looks the same in every figure
ALGORITHM_COLORS = {
    'zspo': '#2F5496',
    'zpg': '#C55A11',
    'rm-ppo': '#548235',
    'dpo': '#7030A0',
    'online-dpo': '#BF8F00',
}

PathLike = Union[str, Path]


def curve_table(aggregate: pd.DataFrame, algo: str) -> pd.DataFrame:
    """Aggregate rows of one algorithm in the curve layout."""
    rows = aggregate[aggregate['algo'] == algo].sort_values('t')
    if rows.empty:
        raise ValueError(f"No aggregate rows for algorithm '{algo}'")
    return pd.DataFrame({
        't': rows['t'].astype(int).to_numpy(),
        'mean': rows['exact_value'].to_numpy(),
        'ci_low': rows['ci_low'].to_numpy(),
        'ci_high': rows['ci_high'].to_numpy(),
        'ci_half_width': rows['ci_half_width'].to_numpy(),
        'n_reps': rows['n_reps'].astype(int).to_numpy(),
    })[CURVE_COLUMNS]


def _draw_curve(ax, curve: pd.DataFrame, label: str) -> None:
    color = ALGORITHM_COLORS.get(label)
    ax.plot(curve['t'], curve['mean'], label=label, color=color, linewidth=1.5,
            marker='o' if len(curve) == 1 else None)
    ax.fill_between(curve['t'], curve['ci_low'], curve['ci_high'], color=color, alpha=0.2, linewidth=0)


def _save_svg(fig, path: Path) -> str:
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return str(path)


def emit_curves(record, output_dir: PathLike, formats: Sequence[str] = ('csv', 'svg')) -> Dict[str, List[str]]:
    """
    Write curve files for every algorithm in a RunRecord.

    RETURNS:
        {format: [paths]}

    RAISES:
        ValueError for an empty record or an unknown format
    """
    if record.is_empty():
        raise ValueError("Cannot emit curves for an empty record")
    for fmt in formats:
        if fmt not in CURVE_FORMATS:
            raise ValueError(f"Unknown format '{fmt}'. Valid: {', '.join(CURVE_FORMATS)}")

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written: Dict[str, List[str]] = {fmt: [] for fmt in formats}

    for algo in record.algorithms:
        curve = curve_table(record.aggregate, algo)
        if 'csv' in formats:
            path = output_dir / f"curve_{algo}.csv"
            curve.to_csv(path, index=False)
            written['csv'].append(str(path))
        if 'svg' in formats:
            fig, ax = plt.subplots(figsize=(6, 4))
            _draw_curve(ax, curve, algo)
            ax.set_xlabel('iteration t')
            ax.set_ylabel('exact value V(pi_t)')
            ax.set_title(algo)
            ax.grid(alpha=0.3)
            written['svg'].append(_save_svg(fig, output_dir / f"curve_{algo}.svg"))

    if 'xlsx' in formats:
        path = ResultsExcelFormatter().export_record(record, output_dir / 'results.xlsx')
        written['xlsx'].append(path)

    logger.info("Wrote curves for %d algorithm(s) to %s", len(record.algorithms), output_dir)
    return written


def plot_comparison(aggregate: pd.DataFrame, path: PathLike, title: str = 'Exact value by iteration') -> str:
    """Overlay every algorithm's mean curve and CI band in one SVG."""
    if aggregate.empty:
        raise ValueError("Cannot plot an empty aggregate table")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for algo in dict.fromkeys(aggregate['algo']):
        _draw_curve(ax, curve_table(aggregate, algo), algo)
    ax.set_xlabel('iteration t')
    ax.set_ylabel('exact value V(pi_t)')
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc='best', frameon=False)
    return _save_svg(fig, path)
