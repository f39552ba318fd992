"""CSV and config-file I/O used by the command-line front end.

Floats are serialized with 17 significant digits so that every value
round-trips exactly; decimal separator is always '.', headers are
mandatory, and no timestamps ever appear in data files (wall times go to
separate timing files so that outputs are byte-reproducible).
"""

import csv
import math

import numpy as np

from .data import Dataset
from .errors import CliInputError


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def read_table(path):
    """Parse a numeric CSV with a header row; errors carry line numbers."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CliInputError("empty file", line=1) from None
        header = [c.strip() for c in header]
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise CliInputError(f"expected {width} columns, got {len(row)}", line=lineno)
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise CliInputError("could not parse a numeric value", line=lineno) from None
    if not rows:
        raise CliInputError("no data rows", line=2)
    return header, np.asarray(rows, dtype=float)


def _column_split(header):
    x_cols = [c for c in header if c.startswith("x")]
    y_cols = [c for c in header if c.startswith("y")]
    if len(x_cols) + len(y_cols) != len(header):
        raise CliInputError("header must contain only x1..xp and y/y1..yq columns", line=1)
    if header[: len(x_cols)] != x_cols:
        raise CliInputError("x columns must come first", line=1)
    return len(x_cols), len(y_cols)


def dataset_from_csv(path, kind):
    header, table = read_table(path)
    n_x, n_y = _column_split(header)
    if n_x == 0:
        raise CliInputError("no covariate columns found", line=1)
    x = table[:, :n_x]
    if kind == "ggm":
        if n_y:
            raise CliInputError("raw-sample data must not contain response columns", line=1)
        return Dataset.ggm(x)
    if n_y == 0:
        raise CliInputError("expected at least one response column", line=1)
    if kind == "regression":
        if n_y != 1:
            raise CliInputError("regression data needs exactly one y column", line=1)
        return Dataset.regression(x, table[:, n_x])
    return Dataset.multiresponse(x, table[:, n_x:])


def write_vector_csv(path, vec):
    write_csv(path, ["coef"], [[v] for v in vec])


def write_matrix_csv(path, mat):
    header = [f"c{j + 1}" for j in range(mat.shape[1])]
    write_csv(path, header, [list(row) for row in mat])


def read_matrix_csv(path):
    _, table = read_table(path)
    return table


def write_keyvalues(path, mapping):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(mapping):
            fh.write(f"{key}={mapping[key]}\n")


def read_config(path):
    """Flat key=value config file; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliInputError("expected key=value", line=lineno)
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
