"""
OpenDocument spreadsheet export of profiles, (V*) sequences and report tables.
"""

import logging
import math
import os
from typing import Any, List, Sequence

import numpy as np
from odf import teletype
from odf.opendocument import OpenDocumentSpreadsheet, load
from odf.table import Table, TableCell, TableRow
from odf.text import P

from .errors import ConfigError
from .reporting import format_cell

logger = logging.getLogger(__name__)

DEFAULT_TABLE_NAME = "Morrey"


def create_text_cell(value: str) -> TableCell:
    cell = TableCell(valuetype="string")
    cell.addElement(P(text=value))
    return cell


def create_number_cell(value: float) -> TableCell:
    cell = TableCell(valuetype="float", value=repr(float(value)))
    cell.addElement(P(text=repr(float(value))))
    return cell


def _make_cell(value: Any) -> TableCell:
    if isinstance(value, (bool, np.bool_)) or value is None:
        return create_text_cell("" if value is None else str(bool(value)).lower())
    if isinstance(value, (int, float, np.integer, np.floating)):
        if math.isfinite(float(value)):
            return create_number_cell(float(value))
    return create_text_cell(format_cell(value))


def write_table_ods(header: Sequence[str], rows, path: str,
                    table_name: str = DEFAULT_TABLE_NAME) -> int:
    """Write one table; numbers become float cells, everything else text."""
    doc = OpenDocumentSpreadsheet()
    table = Table(name=table_name)
    header_row = TableRow()
    for heading in header:
        header_row.addElement(create_text_cell(str(heading)))
    table.addElement(header_row)

    count = 0
    for row in rows:
        table_row = TableRow()
        for value in row:
            table_row.addElement(_make_cell(value))
        table.addElement(table_row)
        count += 1
    doc.spreadsheet.addElement(table)

    directory = os.path.dirname(str(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    doc.save(str(path))
    logger.debug("wrote %d rows to %s", count, path)
    return count


def _read_cell(cell: TableCell) -> Any:
    if cell.getAttribute("valuetype") == "float":
        return float(cell.getAttribute("value"))
    return teletype.extractText(cell)


def read_table_ods(path: str, table_name: str = DEFAULT_TABLE_NAME) -> List[List[Any]]:
    """Rows of the named table, header row included."""
    doc = load(str(path))
    for table in doc.spreadsheet.getElementsByType(Table):
        if table.getAttribute("name") == table_name:
            return [[_read_cell(c) for c in row.getElementsByType(TableCell)]
                    for row in table.getElementsByType(TableRow)]
    raise ConfigError(f"table {table_name!r} not found in {path}")
