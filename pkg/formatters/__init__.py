"""
Formatters package for the ZSPO Toolkit

Output formatters for experiment results:
- emit_curves / plot_comparison: per-algorithm CSV and SVG learning curves
- ResultsExcelFormatter: styled XLSX workbook of a run
"""

from .excel_formatter import ResultsExcelFormatter
from .curves import CURVE_COLUMNS, CURVE_FORMATS, curve_table, emit_curves, plot_comparison

__all__ = ['ResultsExcelFormatter', 'CURVE_COLUMNS', 'CURVE_FORMATS', 'curve_table',
           'emit_curves', 'plot_comparison']
