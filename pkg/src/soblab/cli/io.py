"""Deterministic text I/O: float formatting, CSV read/write, atomic files.

Every float is serialized with 17 significant digits so that
parse(write(x)) == x exactly, and all writes go through an atomic
replace so partially written outputs never appear on disk.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile


def format_float(x) -> str:
    """Shortest 17-significant-digit form that round-trips float64."""
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file + rename in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    """Write a CSV with floats in round-trip form; ints stay ints."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(c) for c in row])
    atomic_write_text(path, buf.getvalue())


def _cell(c):
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, (int,)):
        return c
    if isinstance(c, str):
        return c
    import numpy as np

    if isinstance(c, (np.integer,)):
        return int(c)
    return format_float(c)


def read_csv(path):
    """Read a CSV written by write_csv: (header, list of row lists).

    Numeric-looking cells come back as float or int, everything else as
    string, so writing the parsed rows again is byte identical.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader if row]
    return header, rows


def _parse_cell(c: str):
    try:
        return int(c)
    except ValueError:
        pass
    try:
        return float(c)
    except ValueError:
        return c
