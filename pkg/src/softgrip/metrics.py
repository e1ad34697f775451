"""Tracking-error metrics with the transient window excluded."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rmse(t, signal, reference, t_skip: float = 3.0) -> float:
    """Root-mean-square error over samples with t >= t_skip."""
    t = np.asarray(t, dtype=float)
    signal = np.asarray(signal, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if signal.shape != reference.shape or signal.shape != t.shape:
        raise ValueError("signal, reference and t must have equal lengths")
    if t_skip >= t[-1]:
        raise ValueError(f"t_skip={t_skip} leaves no samples (duration {t[-1]})")
    mask = t >= t_skip
    err = signal[mask] - reference[mask]
    return float(np.sqrt(np.mean(err * err)))


@dataclass
class MetricsReport:
    """Per-channel RMSE (post-transient), max and final absolute errors."""

    t_skip: float
    rows: list  # (channel, rmse, max_abs_error, final_abs_error)

    def as_dict(self) -> dict:
        return {row[0]: row[1] for row in self.rows}

    def csv_text(self) -> str:
        # full precision so the report can be reproduced exactly from the
        # trajectory file
        lines = ["channel,rmse,max_abs_error,final_abs_error,t_skip"]
        for name, r, mx, fin in self.rows:
            lines.append(f"{name},{r:.17g},{mx:.17g},{fin:.17g},{self.t_skip:.17g}")
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())


def error_metrics(t, signal, reference, channel: str, t_skip: float):
    err = np.asarray(signal, dtype=float) - np.asarray(reference, dtype=float)
    return (channel, rmse(t, signal, reference, t_skip),
            float(np.max(np.abs(err))), float(abs(err[-1])))


def report_from_columns(columns: dict, pairs, t_skip: float) -> MetricsReport:
    """Build a report from named columns; pairs = [(signal, reference), ...]."""
    rows = [error_metrics(columns["t"], columns[sig], columns[ref], sig, t_skip)
            for sig, ref in pairs]
    return MetricsReport(t_skip=t_skip, rows=rows)


def read_csv_columns(path) -> dict:
    """Load a trajectory CSV back into named float arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}
