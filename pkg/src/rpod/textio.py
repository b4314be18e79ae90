"""Plain-text matrix format used by every on-disk artifact.

The first line holds ``rows cols``; each following line holds one row of
whitespace-separated values.  Real entries are written as the
shortest string that round-trips exactly; complex entries as ``re+imj``.
"""

from pathlib import Path

import numpy as np

from .numerics import as_matrix


def format_real(x):
    """Shortest decimal string that reads back to the same double."""
    return repr(float(x))


def format_scalar(z):
    if isinstance(z, (complex, np.complexfloating)):
        imag = format_real(z.imag)
        sign = "" if imag.startswith("-") else "+"
        return f"{format_real(z.real)}{sign}{imag}j"
    return format_real(z)


def write_matrix(path, m):
    m = as_matrix(m)
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    if np.iscomplexobj(m):
        lines.extend(" ".join(format_scalar(complex(z)) for z in row) for row in m)
    else:
        lines.extend(" ".join(format_real(x) for x in row) for row in m)
    Path(path).write_text("\n".join(lines) + "\n")


def _parse(token):
    if token.endswith("j"):
        return complex(token)
    return float(token)


def read_matrix(path):
    text = Path(path).read_text().split("\n")
    header = text[0].split()
    if len(header) != 2:
        raise ValueError(f"{path}: header must be 'rows cols'")
    rows, cols = int(header[0]), int(header[1])
    body = [ln.split() for ln in text[1:] if ln.strip()]
    if len(body) != rows:
        raise ValueError(f"{path}: expected {rows} rows, found {len(body)}")
    values = [[_parse(t) for t in row] for row in body]
    for i, row in enumerate(values):
        if len(row) != cols:
            raise ValueError(f"{path}: row {i} has {len(row)} entries, expected {cols}")
    is_complex = any(isinstance(v, complex) for row in values for v in row)
    dtype = np.complex128 if is_complex else np.float64
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), dtype=dtype)
    return as_matrix(np.array(values, dtype=dtype))
