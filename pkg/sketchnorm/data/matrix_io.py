"""Read and write matrices: Matrix Market exchange files and dense CSV.

Matrix Market support covers `coordinate` and `array` layouts with `real` or
`integer` fields and `general`, `symmetric` or `skew-symmetric` symmetry.
Symmetric storage is expanded to the full matrix on read. Coordinate files
become sparse matrices, array files and CSV become dense ones.
"""
import io
import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from sketchnorm.errors import MatrixParseError, UnsupportedFormatError
from sketchnorm.linalg.matrix import Matrix

logger = logging.getLogger(__name__)

FORMATS = ("matrix-market", "dense-csv")
_EXTENSION_FORMATS = {".mtx": "matrix-market", ".mm": "matrix-market", ".csv": "dense-csv"}

_MM_LAYOUTS = {"coordinate", "array"}
_MM_FIELDS = {"real", "integer"}
_MM_UNSUPPORTED_FIELDS = {"complex", "pattern"}
_MM_SYMMETRIES = {"general", "symmetric", "skew-symmetric"}


def infer_format(path: str | Path) -> str:
    """Pick a format from the file extension."""
    suffix = Path(path).suffix.lower()
    if suffix not in _EXTENSION_FORMATS:
        raise UnsupportedFormatError(
            f"cannot infer matrix format from extension {suffix!r}; pass one of {FORMATS}"
        )
    return _EXTENSION_FORMATS[suffix]


def read_matrix(path: str | Path, format: str | None = None) -> Matrix:
    """Load a matrix file.

    Args:
        path: File to read.
        format: "matrix-market" or "dense-csv"; None infers from extension.

    Raises:
        MatrixParseError: malformed header or entries (message carries the line).
        UnsupportedFormatError: complex/pattern fields, hermitian, unknown format.
    """
    format = format or infer_format(path)
    if format == "matrix-market":
        m = parse_matrix_market(read_lines(path))
    elif format == "dense-csv":
        m = read_dense_csv(path)
    else:
        raise UnsupportedFormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    logger.info("Read %r from %s", m, path)
    return m


def read_lines(path: str | Path) -> list[str]:
    """Decode a file as UTF-8, line by line, keeping line endings."""
    with open(path, "rb") as f:
        raw_lines = f.readlines()
    lines = []
    for line_number, raw in enumerate(raw_lines, start=1):
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError as e:
            raise MatrixParseError(f"invalid UTF-8 at byte {e.start}", line_number) from None
    return lines


def _parse_number(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MatrixParseError(f"not a number: {token!r}", line_number) from None
    if not np.isfinite(value):
        raise MatrixParseError(f"non-finite value {token!r}", line_number)
    return value


def _parse_int(token: str, line_number: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MatrixParseError(f"{what} must be an integer, got {token!r}", line_number) from None


def _parse_header(line: str) -> tuple[str, str, str]:
    tokens = line.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
        raise MatrixParseError("expected '%%MatrixMarket matrix <layout> <field> <symmetry>'", 1)
    _, obj, layout, field, symmetry = tokens
    if obj != "matrix":
        raise UnsupportedFormatError(f"unsupported object {obj!r}", 1)
    if layout not in _MM_LAYOUTS:
        raise MatrixParseError(f"unknown layout {layout!r}", 1)
    if field in _MM_UNSUPPORTED_FIELDS:
        raise UnsupportedFormatError(f"unsupported field {field!r}: only real matrices are read", 1)
    if field not in _MM_FIELDS:
        raise MatrixParseError(f"unknown field {field!r}", 1)
    if symmetry == "hermitian":
        raise UnsupportedFormatError("unsupported symmetry 'hermitian'", 1)
    if symmetry not in _MM_SYMMETRIES:
        raise MatrixParseError(f"unknown symmetry {symmetry!r}", 1)
    return layout, field, symmetry


def parse_matrix_market(lines) -> Matrix:
    """Parse Matrix Market text from any iterable of lines."""
    numbered = enumerate(lines, start=1)
    try:
        _, header = next(numbered)
    except StopIteration:
        raise MatrixParseError("empty file", 1) from None
    layout, _, symmetry = _parse_header(header)

    # Remaining non-comment, non-blank lines: the size line then the entries.
    body = ((no, line.split()) for no, line in numbered if line.strip() and not line.lstrip().startswith("%"))
    try:
        size_no, size = next(body)
    except StopIteration:
        raise MatrixParseError("missing size line", None) from None

    expected_size_tokens = 3 if layout == "coordinate" else 2
    if len(size) != expected_size_tokens:
        raise MatrixParseError(
            f"size line needs {expected_size_tokens} integers, got {len(size)} tokens", size_no
        )
    n_rows = _parse_int(size[0], size_no, "row count")
    n_cols = _parse_int(size[1], size_no, "column count")
    if n_rows < 1 or n_cols < 1:
        raise MatrixParseError(f"matrix must be at least 1x1, got {n_rows}x{n_cols}", size_no)
    if symmetry != "general" and n_rows != n_cols:
        raise MatrixParseError(f"{symmetry} matrix must be square, got {n_rows}x{n_cols}", size_no)

    if layout == "coordinate":
        declared = _parse_int(size[2], size_no, "entry count")
        return _parse_coordinate(body, n_rows, n_cols, declared, symmetry, size_no)
    return _parse_array(body, n_rows, n_cols, symmetry, size_no)


def _parse_coordinate(body, n_rows, n_cols, declared, symmetry, size_no) -> Matrix:
    rows, cols, values = [], [], []
    count = 0
    for line_number, tokens in body:
        count += 1
        if count > declared:
            raise MatrixParseError(f"more entries than the declared {declared}", line_number)
        if len(tokens) != 3:
            raise MatrixParseError(f"expected 'row col value', got {len(tokens)} tokens", line_number)
        i = _parse_int(tokens[0], line_number, "row index")
        j = _parse_int(tokens[1], line_number, "column index")
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixParseError(f"index ({i}, {j}) outside {n_rows}x{n_cols}", line_number)
        value = _parse_number(tokens[2], line_number)
        rows.append(i - 1)
        cols.append(j - 1)
        values.append(value)
        if symmetry != "general" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            values.append(-value if symmetry == "skew-symmetric" else value)
    if count < declared:
        raise MatrixParseError(f"declared {declared} entries but found {count}", size_no)
    return Matrix.from_coo(rows, cols, values, (n_rows, n_cols))


def _parse_array(body, n_rows, n_cols, symmetry, size_no) -> Matrix:
    # Column-major; symmetric kinds store only the lower triangle
    # (strictly lower for skew-symmetric).
    if symmetry == "general":
        positions = [(i, j) for j in range(n_cols) for i in range(n_rows)]
    elif symmetry == "symmetric":
        positions = [(i, j) for j in range(n_cols) for i in range(j, n_rows)]
    else:
        positions = [(i, j) for j in range(n_cols) for i in range(j + 1, n_rows)]

    dense = np.zeros((n_rows, n_cols))
    k = 0
    for line_number, tokens in body:
        for token in tokens:
            if k >= len(positions):
                raise MatrixParseError(f"more values than the {len(positions)} expected", line_number)
            i, j = positions[k]
            value = _parse_number(token, line_number)
            dense[i, j] = value
            if symmetry == "symmetric":
                dense[j, i] = value
            elif symmetry == "skew-symmetric":
                dense[j, i] = -value
            k += 1
    if k < len(positions):
        raise MatrixParseError(f"expected {len(positions)} values but found {k}", size_no)
    return Matrix.from_dense(dense)


_PANDAS_LINE = re.compile(r"line (\d+)")


def read_dense_csv(path: str | Path) -> Matrix:
    """Parse a headerless comma-separated numeric table."""
    text = "".join(read_lines(path))
    try:
        df = pd.read_csv(
            io.StringIO(text), header=None, dtype=str,
            skip_blank_lines=False, keep_default_na=False,
        )
    except pd.errors.EmptyDataError:
        raise MatrixParseError("empty file", 1) from None
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise MatrixParseError(
            f"ragged CSV row: {e}", int(match.group(1)) if match else None
        ) from None

    # Trailing blank lines are fine; anything else must be a number.
    raw = df.apply(lambda col: col.str.strip()).fillna("")
    while len(raw) and (raw.iloc[-1] == "").all():
        raw = raw.iloc[:-1]
    if raw.empty:
        raise MatrixParseError("no data rows", 1)

    values = raw.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise MatrixParseError(
            f"column {col + 1}: not a finite number: {raw.iat[row, col]!r}", int(row) + 1
        )
    return Matrix.from_dense(values)


def write_matrix_market(m: Matrix, path: str | Path, comment: str | None = None) -> None:
    """Write m as `coordinate real general`, one stored nonzero per line.

    Values are written with repr(), the shortest decimal that reads back to
    the same double, so read_matrix(write(m)) reproduces m exactly.
    """
    if m.is_sparse:
        coo = m.storage.tocoo()
        rows, cols, vals = coo.row, coo.col, coo.data
    else:
        rows, cols = np.nonzero(m.storage)
        vals = m.storage[rows, cols]
    order = np.lexsort((cols, rows))

    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                f.write(f"% {line}\n")
        f.write(f"{m.n_rows} {m.n_cols} {len(vals)}\n")
        for k in order:
            f.write(f"{rows[k] + 1} {cols[k] + 1} {float(vals[k])!r}\n")
    logger.info("Wrote %r to %s", m, path)
