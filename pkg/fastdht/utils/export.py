import csv
import io
import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Font, PatternFill
from reportlab.lib import colors
from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.platypus import (Paragraph, SimpleDocTemplate, Spacer, Table,
                                TableStyle)

from models import SignalFileError, as_signal

logger = logging.getLogger(__name__)

SIGNAL_FORMATS = ("csv", "json")
REPORT_FORMATS = {".csv": "csv", ".xlsx": "excel", ".pdf": "pdf"}


def format_number(value: float) -> str:
    """Shortest decimal that reads back to the same double (6.0 -> '6')"""
    return np.format_float_positional(float(value), unique=True, trim="-")


def detect_format(filename: str, fmt: Optional[str] = None) -> str:
    if fmt:
        if fmt not in SIGNAL_FORMATS:
            raise SignalFileError(f"Unknown signal format {fmt!r}; expected one of {SIGNAL_FORMATS}")
        return fmt
    return "json" if filename.lower().endswith(".json") else "csv"


class ExportManager:
    def __init__(self):
        self.styles = getSampleStyleSheet()
        self.setup_custom_styles()

    def setup_custom_styles(self):
        """Setup custom paragraph styles for PDF reports"""
        self.title_style = ParagraphStyle(
            "CustomTitle",
            parent=self.styles["Heading1"],
            fontSize=16,
            spaceAfter=30,
            alignment=1,  # Center alignment
            textColor=colors.darkblue,
        )

        self.normal_style = ParagraphStyle(
            "CustomNormal", parent=self.styles["Normal"], fontSize=10, spaceAfter=6
        )

    # =========================================================================
    # SIGNAL FILES
    # =========================================================================

    def read_signals(self, filename: str, fmt: Optional[str] = None) -> List[np.ndarray]:
        """Read one or more equal-length real vectors from a CSV or JSON file"""
        fmt = detect_format(filename, fmt)
        if not os.path.exists(filename):
            raise SignalFileError(f"Signal file {filename} does not exist")

        if fmt == "json":
            vectors = self._read_json(filename)
        else:
            vectors = self._read_csv(filename)

        if not vectors:
            raise SignalFileError(f"Signal file {filename} contains no signals")
        lengths = sorted({len(v) for v in vectors})
        if len(lengths) > 1:
            raise SignalFileError(f"Signal file {filename} mixes signal lengths {lengths}")

        logger.debug(f"Read {len(vectors)} signals of length {lengths[0]} from {filename}")
        return vectors

    def _read_csv(self, filename: str) -> List[np.ndarray]:
        try:
            frame = pd.read_csv(
                filename, header=None, skip_blank_lines=True, dtype=float, float_precision="round_trip"
            )
        except pd.errors.EmptyDataError:
            raise SignalFileError(f"Signal file {filename} is empty")
        except (pd.errors.ParserError, ValueError) as e:
            raise SignalFileError(f"Could not parse {filename}: {e}")

        vectors = []
        for index, row in enumerate(frame.to_numpy(dtype=float)):
            present = ~np.isnan(row)
            if not present.all():
                raise SignalFileError(
                    f"Line {index + 1} of {filename} has {int(present.sum())} values, "
                    f"expected {row.size}"
                )
            vectors.append(self._to_signal(row, filename, index))
        return vectors

    def _read_json(self, filename: str) -> List[np.ndarray]:
        try:
            with open(filename, "r", encoding="utf-8") as handle:
                payload = json.load(handle)
        except json.JSONDecodeError as e:
            raise SignalFileError(f"Could not parse {filename}: {e}")

        if not isinstance(payload, list) or not all(isinstance(row, list) for row in payload):
            raise SignalFileError(f"{filename} must hold an array of arrays of numbers")
        for index, row in enumerate(payload):
            for value in row:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise SignalFileError(
                        f"Signal {index + 1} of {filename}: {value!r} is not a number"
                    )
        return [self._to_signal(row, filename, index) for index, row in enumerate(payload)]

    @staticmethod
    def _to_signal(row: Any, filename: str, index: int) -> np.ndarray:
        try:
            return as_signal(row)
        except ValueError as e:
            raise SignalFileError(f"Signal {index + 1} of {filename}: {e}")

    def write_signals(self, vectors: Sequence[Any], filename: str, fmt: Optional[str] = None) -> str:
        fmt = detect_format(filename, fmt)
        rows = [[float(x) for x in vector] for vector in vectors]

        if fmt == "json":
            content = json.dumps(rows)
        else:
            output = io.StringIO()
            writer = csv.writer(output, lineterminator="\n")
            for row in rows:
                writer.writerow([format_number(x) for x in row])
            content = output.getvalue()
            output.close()

        with open(filename, "w", newline="", encoding="utf-8") as f:
            f.write(content)
        logger.info(f"{len(rows)} signals written to {filename}")
        return content

    # =========================================================================
    # REPORTS
    # =========================================================================

    def export_csv(self, data: List[Dict], filename: str = None) -> str:
        """Export report rows to CSV format"""
        if not data:
            return ""

        csv_content = pd.DataFrame(data).to_csv(index=False, lineterminator="\n")

        if filename:
            with open(filename, "w", newline="", encoding="utf-8") as f:
                f.write(csv_content)
            logger.info(f"CSV exported to {filename}")

        return csv_content

    def export_excel(self, data: List[Dict], filename: str = None, sheet_name: str = "Audit") -> bytes:
        """Export report rows to Excel format"""
        if not data:
            return b""

        wb = Workbook()
        ws = wb.active
        ws.title = sheet_name

        headers = list(data[0].keys())
        for col, header in enumerate(headers, 1):
            cell = ws.cell(row=1, column=col, value=header)
            cell.font = Font(bold=True)
            cell.fill = PatternFill(start_color="CCCCCC", end_color="CCCCCC", fill_type="solid")

        for row_idx, row_data in enumerate(data, 2):
            for col_idx, header in enumerate(headers, 1):
                ws.cell(row=row_idx, column=col_idx, value=row_data.get(header))

        # Auto-adjust column widths
        for column in ws.columns:
            max_length = max(len(str(cell.value)) for cell in column if cell.value is not None)
            ws.column_dimensions[column[0].column_letter].width = min(max_length + 2, 50)

        output = io.BytesIO()
        wb.save(output)
        excel_content = output.getvalue()
        output.close()

        if filename:
            with open(filename, "wb") as f:
                f.write(excel_content)
            logger.info(f"Excel exported to {filename}")

        return excel_content

    def export_pdf(self, title: str, data: List[Dict], filename: str = None) -> bytes:
        """Export report rows as a single-table PDF"""
        buffer = io.BytesIO()
        doc = SimpleDocTemplate(buffer, pagesize=landscape(A4))
        story = [Paragraph(title, self.title_style), Spacer(1, 12)]

        timestamp = f"Generated on: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}"
        story.append(Paragraph(timestamp, self.normal_style))
        story.append(Spacer(1, 20))

        if data:
            headers = list(data[0].keys())
            table_data = [headers] + [[str(row.get(header, "")) for header in headers] for row in data]
            table = Table(table_data)
            table.setStyle(
                TableStyle(
                    [
                        ("BACKGROUND", (0, 0), (-1, 0), colors.grey),
                        ("TEXTCOLOR", (0, 0), (-1, 0), colors.whitesmoke),
                        ("ALIGN", (0, 0), (-1, -1), "CENTER"),
                        ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
                        ("FONTSIZE", (0, 0), (-1, -1), 8),
                        ("BOTTOMPADDING", (0, 0), (-1, 0), 12),
                        ("GRID", (0, 0), (-1, -1), 1, colors.black),
                    ]
                )
            )
            story.append(table)
        else:
            story.append(Paragraph("No records", self.normal_style))

        doc.build(story)
        pdf_content = buffer.getvalue()
        buffer.close()

        if filename:
            with open(filename, "wb") as f:
                f.write(pdf_content)
            logger.info(f"PDF exported to {filename}")

        return pdf_content

    def export_report(self, data: List[Dict], filename: str, title: str = "Fast DHT Audit Report") -> str:
        """Write report rows to filename; the format follows the extension"""
        extension = os.path.splitext(filename)[1].lower()
        if extension not in REPORT_FORMATS:
            raise ValueError(
                f"Unsupported report extension {extension or '<none>'}; "
                f"expected one of {sorted(REPORT_FORMATS)}"
            )

        kind = REPORT_FORMATS[extension]
        if kind == "csv":
            self.export_csv(data, filename)
        elif kind == "excel":
            self.export_excel(data, filename)
        else:
            self.export_pdf(title, data, filename)
        return kind


# Global export manager instance
export_manager = ExportManager()


def read_signals(filename: str, fmt: Optional[str] = None) -> List[np.ndarray]:
    return export_manager.read_signals(filename, fmt)


def write_signals(vectors: Sequence[Any], filename: str, fmt: Optional[str] = None) -> str:
    return export_manager.write_signals(vectors, filename, fmt)


def export_report(data: List[Dict], filename: str, title: str = "Fast DHT Audit Report") -> str:
    return export_manager.export_report(data, filename, title)
