"""Optimization history as CSV."""
from __future__ import annotations

import csv
from pathlib import Path

from vemtopo.topopt.optimize import HistoryRecord

COLUMNS = ["iter", "objective", "volume", "change", "seconds"]


def write_history(history, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in history:
            w.writerow([r.iter, repr(float(r.objective)), repr(float(r.volume)),
                        repr(float(r.change)), repr(float(r.seconds))])


def read_history(path) -> list:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [HistoryRecord(int(r["iter"]), float(r["objective"]), float(r["volume"]),
                          float(r["change"]), float(r["seconds"])) for r in rows]
