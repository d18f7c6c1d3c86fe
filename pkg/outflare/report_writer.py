from gi.repository import GLib

import csv
import io
import logging
import os
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable, Sequence

FLOAT_FORMAT = ".12g"


def format_value(value: Any) -> str:
    """Format one CSV cell.

    Floats carry 12 significant digits, Fractions are written exactly, booleans as
    ``true``/``false`` and None as an empty cell.

    :param value: Cell value
    :return: Text
    :rtype: str
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(x) for x in value)
    return str(value)


def format_rows(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render a header row and data rows as CSV text.

    :param header: Column names
    :param rows: Rows of cell values
    :return: CSV text with ``\\n`` line endings
    :rtype: str
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"Row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_value(x) for x in row])
    return buffer.getvalue()


def write_text(path: str, contents: str) -> None:
    """Atomically replace a file with the given text.

    :param str path: Destination
    :param str contents: Text
    """
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        try:
            os.makedirs(directory)
        except OSError as e:
            logging.warning(f"Failed to create output directory {directory}: %s", e)
            raise
    try:
        GLib.file_set_contents(path, contents.encode("utf-8"))
    except GLib.Error as e:
        logging.warning(f"Failed to write {path}: %s", e.message)
        raise
    logging.info(f"Wrote {path}")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    write_text(path, format_rows(header, rows))
