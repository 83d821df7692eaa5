"""
Results Excel Formatter - Export experiment results to a styled workbook

PURPOSE: Give reviewers one file they can open without Python: the final
         value of every algorithm, its curve with confidence bounds, and
         the per-repetition outputs.

R EQUIVALENT: Like openxlsx::createWorkbook + writeData + addStyle

WORKBOOK LAYOUT:
    Tab 1: Summary - experiment metadata and final mean value per algorithm
    Tab 2..: one sheet per algorithm (t, mean, ci_low, ci_high, ci_half_width, n_reps)
    Last:  Outputs - theta_R pick, final value and sample counts per cell

USAGE:
    ResultsExcelFormatter().export_record(record, "results/bradley_terry_desk/results.xlsx")
"""

from pathlib import Path
from typing import List, Union

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter


class ResultsExcelFormatter:
    """
    PURPOSE: Write RunRecords and distinguishability sweeps to .xlsx

    FORMATTING FEATURES:
    - Dark-blue header row, alternating row fills, thin borders
    - Freeze panes and auto-filter on every data sheet
    - Final-value cells highlighted green for the best algorithm
    - Excluded cells (diverged runs) highlighted red in the Outputs sheet
    """

    # =========================================================================
    # STYLE DEFINITIONS
    # =========================================================================

    HEADER_FILL = PatternFill(start_color="2F5496", end_color="2F5496", fill_type="solid")
    HEADER_FONT = Font(color="FFFFFF", bold=True, size=11)
    HEADER_ALIGNMENT = Alignment(horizontal='center', vertical='center', wrap_text=True)

    ALT_ROW_FILL = PatternFill(start_color="F2F2F2", end_color="F2F2F2", fill_type="solid")
    WHITE_FILL = PatternFill(start_color="FFFFFF", end_color="FFFFFF", fill_type="solid")

    BEST_FILL = PatternFill(start_color="C6EFCE", end_color="C6EFCE", fill_type="solid")
    BEST_FONT = Font(color="006100", bold=True)
    FAIL_FILL = PatternFill(start_color="FFC7CE", end_color="FFC7CE", fill_type="solid")
    FAIL_FONT = Font(color="9C0006", bold=True)

    SECTION_FILL = PatternFill(start_color="BDD7EE", end_color="BDD7EE", fill_type="solid")
    SECTION_FONT = Font(bold=True, size=11)
    TITLE_FONT = Font(size=18, bold=True, color="2F5496")

    THIN_BORDER = Border(
        left=Side(style='thin', color='B4B4B4'),
        right=Side(style='thin', color='B4B4B4'),
        top=Side(style='thin', color='B4B4B4'),
        bottom=Side(style='thin', color='B4B4B4')
    )

    NUMBER_FORMAT = '0.0000'

    # =========================================================================
    # PUBLIC EXPORTS
    # =========================================================================

    def export_record(self, record, output_path: Union[str, Path]) -> str:
        """
        Export a RunRecord.

        RAISES:
            ValueError: If the record has no aggregate rows
        """
        if record.is_empty():
            raise ValueError("Cannot export an empty record")
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        wb = Workbook()
        wb.remove(wb.active)
        self._create_summary_sheet(wb, record)
        for algo in record.algorithms:
            curve = record.curve(algo)
            frame = pd.DataFrame({
                't': curve['t'], 'mean': curve['exact_value'], 'ci_low': curve['ci_low'],
                'ci_high': curve['ci_high'], 'ci_half_width': curve['ci_half_width'],
                'n_reps': curve['n_reps'],
            })
            self._create_data_sheet(wb, algo[:31], frame)
        outputs = self._create_data_sheet(wb, 'Outputs', record.outputs)
        self._highlight_failures(outputs, record.outputs)

        wb.save(output_path)
        return str(output_path)

    def export_table(self, frame: pd.DataFrame, output_path: Union[str, Path],
                     sheet_name: str = 'Data') -> str:
        """Export any table (e.g. a distinguish sweep) to a single styled sheet."""
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        wb = Workbook()
        wb.remove(wb.active)
        self._create_data_sheet(wb, sheet_name, frame)
        wb.save(output_path)
        return str(output_path)

    # =========================================================================
    # SHEETS
    # =========================================================================

    def _create_summary_sheet(self, wb: Workbook, record) -> None:
        ws = wb.create_sheet("Summary")
        ws['A1'] = "Experiment Summary"
        ws['A1'].font = self.TITLE_FONT

        manifest = record.manifest or {}
        config = manifest.get('config', {})
        metadata = [
            ("Experiment:", config.get('name', '')),
            ("Environment:", manifest.get('environment', {}).get('name', '')),
            ("Repetitions:", config.get('repetitions', '')),
            ("Master Seed:", config.get('master_seed', '')),
            ("Toolkit Version:", manifest.get('toolkit_version', '')),
        ]
        row = 3
        for label, value in metadata:
            ws[f'A{row}'] = label
            ws[f'B{row}'] = value
            row += 1

        row += 1
        ws[f'A{row}'] = "Final Mean Exact Value"
        ws[f'A{row}'].font = self.SECTION_FONT
        ws[f'A{row}'].fill = self.SECTION_FILL

        headers = ['Algorithm', 'Final t', 'Mean', 'CI Low', 'CI High']
        row += 1
        self._apply_header_style(ws, headers, row)
        summary = record.final_summary()
        best = summary['exact_value'].idxmax()
        for i, item in summary.iterrows():
            row += 1
            values = [item['algo'], int(item['t']), item['exact_value'], item['ci_low'], item['ci_high']]
            for col, value in enumerate(values, 1):
                cell = ws.cell(row=row, column=col, value=value)
                cell.border = self.THIN_BORDER
                if col >= 3:
                    cell.number_format = self.NUMBER_FORMAT
            if i == best:
                ws.cell(row=row, column=3).fill = self.BEST_FILL
                ws.cell(row=row, column=3).font = self.BEST_FONT

        ws.column_dimensions['A'].width = 22
        for col in range(2, len(headers) + 1):
            ws.column_dimensions[get_column_letter(col)].width = 14

    def _create_data_sheet(self, wb: Workbook, title: str, frame: pd.DataFrame):
        ws = wb.create_sheet(title)
        headers = [str(c) for c in frame.columns]
        for r, values in enumerate(frame.itertuples(index=False), 2):
            for c, value in enumerate(values, 1):
                if pd.isna(value):
                    value = None
                elif hasattr(value, 'item'):
                    value = value.item()
                cell = ws.cell(row=r, column=c, value=value)
                if isinstance(value, float):
                    cell.number_format = self.NUMBER_FORMAT
        self._format_data_sheet(ws, headers)
        return ws

    def _highlight_failures(self, ws, outputs: pd.DataFrame) -> None:
        if 'status' not in outputs.columns:
            return
        status_col = list(outputs.columns).index('status') + 1
        for r in range(2, ws.max_row + 1):
            cell = ws.cell(row=r, column=status_col)
            if cell.value not in (None, 'ok'):
                cell.fill = self.FAIL_FILL
                cell.font = self.FAIL_FONT

    # =========================================================================
    # FORMATTING HELPERS
    # =========================================================================

    def _apply_header_style(self, ws, headers: List[str], row: int = 1) -> None:
        for col, header in enumerate(headers, 1):
            cell = ws.cell(row=row, column=col, value=header)
            cell.fill = self.HEADER_FILL
            cell.font = self.HEADER_FONT
            cell.alignment = self.HEADER_ALIGNMENT
            cell.border = self.THIN_BORDER
        ws.row_dimensions[row].height = 22

    def _apply_alternating_rows(self, ws, num_cols: int, start_row: int = 2) -> None:
        for row in range(start_row, ws.max_row + 1):
            fill = self.ALT_ROW_FILL if row % 2 == 0 else self.WHITE_FILL
            for col in range(1, num_cols + 1):
                cell = ws.cell(row=row, column=col)
                cell.fill = fill
                cell.border = self.THIN_BORDER

    def _auto_size_columns(self, ws, headers: List[str], min_width: int = 10, max_width: int = 40) -> None:
        """Width from the header and the first 100 values of each column."""
        for i, header in enumerate(headers, 1):
            longest = len(header)
            for row in range(2, min(ws.max_row + 1, 102)):
                value = ws.cell(row=row, column=i).value
                if value is not None:
                    text = f"{value:.4f}" if isinstance(value, float) else str(value)
                    longest = max(longest, len(text))
            ws.column_dimensions[get_column_letter(i)].width = max(min_width, min(longest + 2, max_width))

    def _format_data_sheet(self, ws, headers: List[str]) -> None:
        self._apply_header_style(ws, headers)
        ws.freeze_panes = 'A2'
        self._auto_size_columns(ws, headers)
        self._apply_alternating_rows(ws, len(headers))
        if ws.max_row > 1:
            ws.auto_filter.ref = f"A1:{get_column_letter(len(headers))}{ws.max_row}"
