"""Reading and writing the CSV files exchanged by the command line tools."""
from __future__ import annotations

import csv
from pathlib import Path

from .convergence import ConvergenceTrace, trace_rows
from .model import MarkDistribution

HIST_HEADER = ["mark_count", "packets"]


class HistogramFormatError(ValueError):
    """Malformed histogram CSV; ``line`` is 1-based."""

    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = str(path)
        self.line = line
        self.reason = reason


def parse_histogram(text: str, path="<histogram>") -> MarkDistribution:
    """Parse ``mark_count,packets`` rows; mark counts must run 0, 1, 2, ... in order."""
    lines = text.splitlines()
    if not lines:
        raise HistogramFormatError(path, 1, "empty file, expected header 'mark_count,packets'")
    if [c.strip() for c in lines[0].split(",")] != HIST_HEADER:
        raise HistogramFormatError(path, 1, "expected header 'mark_count,packets'")
    counts = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            if any(rest.strip() for rest in lines[lineno - 1:]):
                raise HistogramFormatError(path, lineno, "blank line inside the table")
            break
        cells = raw.split(",")
        if len(cells) != 2:
            raise HistogramFormatError(path, lineno, f"expected 2 fields, got {len(cells)} (truncated?)")
        try:
            k, c = int(cells[0]), int(cells[1])
        except ValueError:
            raise HistogramFormatError(path, lineno, f"non-integer field in {raw.strip()!r}") from None
        if k != len(counts):
            raise HistogramFormatError(path, lineno, f"expected mark_count {len(counts)}, got {k}")
        if c < 0:
            raise HistogramFormatError(path, lineno, "negative packet count")
        counts.append(c)
    if not counts:
        raise HistogramFormatError(path, len(lines) + 1, "no data rows")
    return MarkDistribution.from_array(counts)


def read_histogram(path) -> MarkDistribution:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    return parse_histogram(text, path)


def write_trace(trace: ConvergenceTrace, fh) -> None:
    header, rows = trace_rows(trace)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def save_trace(trace: ConvergenceTrace, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_trace(trace, fh)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
