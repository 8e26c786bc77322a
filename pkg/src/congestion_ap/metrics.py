"""Error measures against a reference solution, Courant bookkeeping and reports."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, List, Tuple

import numpy as np


def solution_vector(rho, q) -> np.ndarray:
    """Stack density and momentum into one field ``W = (rho, q)``."""
    return np.stack([np.asarray(rho, dtype=float), np.asarray(q, dtype=float)])


def _pair(W, w):
    W = np.asarray(W, dtype=float)
    w = np.asarray(w, dtype=float)
    if W.shape != w.shape:
        raise ValueError(f"shape mismatch {W.shape} vs {w.shape}")
    return W, w


def l1_relative_error(W, w) -> float:
    """``sum |W - w| / sum |w|`` over all entries (the node-count weights cancel)."""
    W, w = _pair(W, w)
    ref = float(np.sum(np.abs(w)))
    if ref == 0.0:
        raise ValueError("reference field has zero L1 norm")
    return float(np.sum(np.abs(W - w))) / ref


def total_variation(w) -> float:
    """``sum_j |w_{j+1} - w_j|`` along the last axis, summed over components."""
    w = np.asarray(w, dtype=float)
    return float(np.sum(np.abs(np.diff(w, axis=-1))))


def tv_relative_error(W, w) -> float:
    """``|TV(W) - TV(w)| / TV(w)``."""
    W, w = _pair(W, w)
    ref = total_variation(w)
    if ref == 0.0:
        raise ValueError("reference field has zero total variation")
    return abs(total_variation(W) - ref) / ref


@dataclass
class RunLog:
    """Per-step record of the explicit-part speed and the step size."""

    dx: float
    max_lambda: List[float] = field(default_factory=list)
    dt: List[float] = field(default_factory=list)
    mass: List[float] = field(default_factory=list)
    max_rho: List[float] = field(default_factory=list)

    def record(self, max_lambda: float, dt: float) -> None:
        self.max_lambda.append(float(max_lambda))
        self.dt.append(float(dt))


def courant_number(log: RunLog) -> Tuple[float, float]:
    """Return ``(max lambda, max lambda_n dt_n / dx)`` over the recorded steps."""
    if not log.max_lambda:
        raise ValueError("run log is empty")
    lam = np.asarray(log.max_lambda)
    dt = np.asarray(log.dt)
    return float(lam.max()), float(np.max(lam * dt) / log.dx)


@dataclass
class ErrorReport:
    case: str
    scheme: str
    epsilon: float
    dx: float
    dt: float
    t: float
    e_l1: float = float("nan")
    g_tv: float = float("nan")
    max_lambda: float = float("nan")
    courant: float = float("nan")
    mass_drift: float = float("nan")
    max_rho: float = float("nan")

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> List[str]:
        return [v if isinstance(v, str) else f"{v:.17g}" for v in asdict(self).values()]


def write_reports(reports: Iterable[ErrorReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ErrorReport.columns())
        for r in reports:
            w.writerow(r.row())
