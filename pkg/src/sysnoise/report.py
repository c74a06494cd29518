"""Pixel-divergence measurements and mean +/- sample-std robustness summaries."""

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class DiffStats:
    linf: int
    mean_l1: float
    pct_nonzero: float  # fraction in [0, 1]
    count: int
    histogram: list  # 256 bins of |a - b|

    def to_dict(self):
        return asdict(self)

    @classmethod
    def merge(cls, parts):
        """Combine stats over disjoint sample sets."""
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to merge")
        hist = np.sum([p.histogram for p in parts], axis=0).astype(np.int64)
        count = int(hist.sum())
        return cls(
            linf=max(p.linf for p in parts),
            mean_l1=float((hist * np.arange(256)).sum() / count),
            pct_nonzero=float(1.0 - hist[0] / count),
            count=count,
            histogram=hist.tolist(),
        )


def pixel_diff_stats(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = np.abs(a.astype(np.int16) - b.astype(np.int16)).ravel()
    hist = np.bincount(d, minlength=256)
    return DiffStats(
        linf=int(d.max()) if d.size else 0,
        mean_l1=float(d.mean()) if d.size else 0.0,
        pct_nonzero=float(np.count_nonzero(d) / d.size) if d.size else 0.0,
        count=int(d.size),
        histogram=hist.tolist(),
    )


def flip_rate(preds_a, preds_b):
    a = np.asarray(preds_a)
    b = np.asarray(preds_b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.mean(a != b))


def summarize(values, exclude=None):
    """Mean and n-1 standard deviation of ``values``, skipping positions flagged in ``exclude``."""
    values = list(values)
    if exclude is not None:
        values = [v for v, x in zip(values, exclude) if not x]
    if len(values) < 2:
        raise ConfigError("need at least two included values for a sample std")
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


@dataclass
class AccuracyTable:
    rows: list
    columns: list
    values: list  # rows x columns, percentages
    excluded: list = field(default_factory=list)  # column labels left out of mean/std

    def __post_init__(self):
        self.values = [[float(v) for v in row] for row in self.values]
        if len(self.values) != len(self.rows) or any(len(r) != len(self.columns) for r in self.values):
            raise ValueError("accuracy table is not rectangular")
        unknown = set(self.excluded) - set(self.columns)
        if unknown:
            raise ConfigError(f"excluded columns not in table: {sorted(unknown)}")
        if len(self.columns) - len(set(self.excluded)) < 2:
            raise ConfigError("exclusions leave fewer than two columns")

    @property
    def exclude_mask(self):
        return [c in self.excluded for c in self.columns]

    def cell(self, row, column):
        return self.values[self.rows.index(row)][self.columns.index(column)]


@dataclass
class RowSummary:
    label: str
    mean: float
    std: float
    included: list


def robustness_report(table):
    mask = table.exclude_mask
    included = [c for c, x in zip(table.columns, mask) if not x]
    out = []
    for label, row in zip(table.rows, table.values):
        mean, std = summarize(row, mask)
        out.append(RowSummary(label, mean, std, included))
    return out


def table_to_csv(table, row_header="model"):
    """Lossless CSV: header row, then one row per label with repr() floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([row_header] + list(table.columns))
    for label, row in zip(table.rows, table.values):
        w.writerow([label] + [repr(v) for v in row])
    return buf.getvalue()


def table_from_csv(text, excluded=()):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("empty CSV table") from None
    rows, values = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise ConfigError(f"CSV line {lineno} has {len(rec)} fields, expected {len(header)}")
        rows.append(rec[0])
        try:
            values.append([float(v) for v in rec[1:]])
        except ValueError:
            raise ConfigError(f"CSV line {lineno} holds a non-numeric accuracy") from None
    return AccuracyTable(rows, header[1:], values, list(excluded))


def format_std(std):
    """Std in two-decimal scientific notation, e.g. ``2.00E-03``."""
    return f"{std:.2E}"


def render_report(table):
    """Return (text, csv) with mean and std appended to each row.

    Accuracies and means are printed with 3 decimals; excluded columns are
    marked with ``*``.
    """
    summary = robustness_report(table)
    cols = [c + ("*" if c in table.excluded else "") for c in table.columns]
    header = ["Train \\ Test"] + cols + ["Mean", "Std."]
    body = []
    for s, row in zip(summary, table.values):
        body.append([s.label] + [f"{v:.3f}" for v in row] + [f"{s.mean:.3f}", format_std(s.std)])
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip() for r in [header] + body]
    if table.excluded:
        lines.append("* excluded from mean and std")
    text = "\n".join(lines) + "\n"

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model"] + list(table.columns) + ["mean", "std"])
    for s, row in zip(summary, table.values):
        w.writerow([s.label] + [repr(v) for v in row] + [repr(s.mean), repr(s.std)])
    return text, buf.getvalue()
