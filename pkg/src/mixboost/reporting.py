"""Correlation analysis between the proxy and safety metrics; CSV tables."""

import csv
import io
import math

import numpy as np

from .interactions import ProxyParams, proxy_m
from .metrics import REPORT_FIELDS


def pearson(x, y):
    """Two-pass Pearson correlation; None when either side has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return None
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_table(variants, params=ProxyParams(), metrics=REPORT_FIELDS):
    """``variants``: list of ``(name, profile, report)``.

    Returns ``(rows, pearson_by_metric)`` where each row holds the variant
    name, its proxy value and every metric.
    """
    if len(variants) < 3:
        raise ValueError(f"correlation needs at least 3 variants, got {len(variants)}")
    rows = []
    for name, prof, report in variants:
        row = {"variant": name, "M": proxy_m(prof, params)}
        for m in metrics:
            row[m] = getattr(report, m)
        rows.append(row)
    corr = {}
    for m in metrics:
        vals = [r[m] for r in rows]
        if any(v is None for v in vals):
            corr[m] = None
            continue
        corr[m] = pearson([r["M"] for r in rows], vals)
    return rows, corr


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows, columns=None):
    columns = columns or list(rows[0])
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return out.getvalue()


def csv_to_rows(text):
    """Inverse of :func:`rows_to_csv`: numbers back to float/int, blanks to None."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in rec.items():
            if v == "":
                row[k] = None
                continue
            try:
                row[k] = int(v) if v.lstrip("-").isdigit() else float(v)
            except ValueError:
                row[k] = v
        rows.append(row)
    return rows
