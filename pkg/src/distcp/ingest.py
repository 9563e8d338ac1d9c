"""CSV loading and the price-to-returns pipeline."""

import csv
from dataclasses import dataclass
import io
import sys

import numpy as np

MISSING = ("", "NA", "na", "NaN", "nan")
# header names that mark the first column as period labels even when numeric
LABEL_HEADERS = ("", "date", "time", "period", "week", "month", "day", "t", "index")


class IngestError(ValueError):
    pass


def _open(path):
    if path == "-":
        return io.StringIO(sys.stdin.read())
    return open(path, newline="", encoding="utf-8")


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _rows(path):
    with _open(path) as fh:
        return [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                if row and any(c.strip() for c in row)]


def load_matrix_csv(path):
    """Read a rectangular numeric CSV into an ``(n, d)`` float array.

    A first row containing any non-numeric cell is treated as a header.
    ``path`` may be ``"-"`` for standard input.
    """
    rows = _rows(path)
    if not rows:
        raise IngestError(f"{path}: empty file")
    if not all(_is_number(c.strip()) for c in rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise IngestError(f"{path}: header but no data rows")
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for k, (line, row) in enumerate(rows):
        if len(row) != width:
            raise IngestError(f"{path}: line {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[k, j] = float(cell)
            except ValueError:
                raise IngestError(f"{path}: line {line}, column {j + 1}: non-numeric value {cell!r}") from None
    return out


def write_matrix_csv(matrix, path_or_file):
    """Write a matrix as headerless CSV using shortest round-trip floats."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if isinstance(path_or_file, str) else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        for row in matrix:
            w.writerow([repr(float(v)) for v in row])
    finally:
        if isinstance(path_or_file, str):
            fh.close()


@dataclass
class PriceTable:
    """Closing prices, one row per period and one column per asset.

    Missing prices are stored as NaN.
    """

    assets: list
    prices: np.ndarray
    periods: list = None

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        if self.prices.ndim != 2 or self.prices.shape[1] != len(self.assets):
            raise IngestError("price matrix shape does not match the asset list")


def load_price_csv(path):
    """Read a price table.

    The first row names the assets. If the first column holds non-numeric
    labels, or its header is a label name such as ``date`` or ``week``, it is
    kept as period labels. Empty cells and ``NA``
    mark missing prices.
    """
    rows = _rows(path)
    if len(rows) < 2:
        raise IngestError(f"{path}: need a header row and at least one price row")
    header = [c.strip() for c in rows[0][1]]
    body = rows[1:]
    labelled = header[0].lower() in LABEL_HEADERS or any(not _is_number(r[0].strip()) and r[0].strip() not in MISSING for _, r in body)
    assets = header[1:] if labelled else header
    periods = [] if labelled else None
    prices = np.empty((len(body), len(assets)))
    for k, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise IngestError(f"{path}: line {line} has {len(row)} fields, expected {len(header)}")
        if labelled:
            periods.append(row[0].strip())
            row = row[1:]
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell in MISSING:
                prices[k, j] = np.nan
            elif _is_number(cell):
                prices[k, j] = float(cell)
            else:
                raise IngestError(f"{path}: line {line}: non-numeric price {cell!r}")
    return PriceTable(assets, prices, periods)


def prices_to_returns(table, drop_incomplete=True):
    """Period-to-period returns ``P_t / P_{t-1} - 1``.

    Returns ``(returns, kept_assets, dropped_assets)``. With
    ``drop_incomplete`` every asset with a missing price is excluded;
    otherwise a missing price is an error.
    """
    prices = table.prices
    if prices.shape[0] < 2:
        raise IngestError("need at least 2 price rows to form returns")
    missing = ~np.isfinite(prices)
    bad_cols = missing.any(axis=0)
    if bad_cols.any() and not drop_incomplete:
        j = int(np.argmax(bad_cols))
        raise IngestError(f"asset {table.assets[j]!r} has missing prices")
    keep = ~bad_cols
    kept = prices[:, keep]
    if kept.shape[1] == 0:
        raise IngestError("no asset has a complete price history")
    if np.any(kept <= 0):
        raise IngestError("prices must be strictly positive")
    # difference form avoids the cancellation in P_t / P_{t-1} - 1
    returns = (kept[1:] - kept[:-1]) / kept[:-1]
    assets = [a for a, k in zip(table.assets, keep) if k]
    dropped = [a for a, k in zip(table.assets, keep) if not k]
    return returns, assets, dropped

