"""Deterministic scoring of point and probabilistic voltage estimates.

All scores are computed per monitored bus in pu and are plain time means,
so they are permutation-consistent in t.  The probabilistic scores follow
the usual conventions: pinball averaged over the 99-quantile grid, Winkler
as the time-averaged interval score at level 1 - alpha.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import EmptySeries, GridMismatch, InvalidInterval

#: The quantile grid every probabilistic model reports on: 0.01 .. 0.99.
QUANTILE_GRID = np.arange(1, 100) / 100.0

#: Winkler / prediction-interval level used throughout (90 % PI).
DEFAULT_ALPHA = 0.1


def _as_2d(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def rmse(y, y_point):
    """Root-mean-square error per bus: sqrt(sum((y - yhat)^2) / n)."""
    y, y_point = _as_2d(y), _as_2d(y_point)
    if y.shape != y_point.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {y_point.shape}")
    if y.shape[0] == 0:
        raise EmptySeries("rmse of an empty series")
    return np.sqrt(np.mean((y - y_point) ** 2, axis=0))


def pinball(y, quantile_preds, grid=None):
    """Pinball loss per bus, averaged over time and the 99-quantile grid.

    ``quantile_preds`` has shape (n, 99, n_bus) ordered along the grid
    0.01 .. 0.99.
    """
    grid = QUANTILE_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.shape != (99,) or np.abs(grid - QUANTILE_GRID).max() > 1e-12:
        raise GridMismatch("quantile grid must be exactly 0.01..0.99 step 0.01")
    y = _as_2d(y)
    q = np.asarray(quantile_preds, dtype=float)
    if q.ndim != 3 or q.shape[0] != y.shape[0] or q.shape[1] != 99 or q.shape[2] != y.shape[1]:
        raise GridMismatch(f"quantile predictions shape {q.shape} does not match (n, 99, n_bus)")
    if y.shape[0] == 0:
        raise EmptySeries("pinball of an empty series")
    yy = y[:, None, :]
    qg = grid[None, :, None]
    loss = np.where(yy >= q, (yy - q) * qg, (q - yy) * (1.0 - qg))
    return loss.mean(axis=(0, 1))


def winkler(y, lower, upper, alpha=DEFAULT_ALPHA):
    """Time-averaged Winkler score per bus for the 1 - alpha interval."""
    y, lower, upper = _as_2d(y), _as_2d(lower), _as_2d(upper)
    if not (y.shape == lower.shape == upper.shape):
        raise ValueError("y/lower/upper shape mismatch")
    if y.shape[0] == 0:
        raise EmptySeries("winkler of an empty series")
    if np.any(lower > upper):
        raise InvalidInterval("lower bound exceeds upper bound")
    delta = upper - lower
    below = np.where(y < lower, 2.0 * (lower - y) / alpha, 0.0)
    above = np.where(y > upper, 2.0 * (y - upper) / alpha, 0.0)
    return (delta + below + above).mean(axis=0)


@dataclass(frozen=True)
class CoverageWidth:
    coverage: np.ndarray        # fraction inside PI, per bus
    mean_width: np.ndarray      # per bus
    width_on: float             # mean width where flag set (nan if never)
    width_off: float            # mean width where flag clear (nan if never)


def coverage_and_width(y, lower, upper, flags=None):
    """Empirical PI coverage and width, optionally split by activation flags.

    ``flags`` may be per-timestep (n,) or per-timestep-and-bus (n, n_bus);
    the conditional widths pool all flagged / unflagged entries.
    """
    y, lower, upper = _as_2d(y), _as_2d(lower), _as_2d(upper)
    if y.shape[0] == 0:
        raise EmptySeries("coverage of an empty series")
    if np.any(lower > upper):
        raise InvalidInterval("lower bound exceeds upper bound")
    inside = (y >= lower) & (y <= upper)
    width = upper - lower
    cov = inside.mean(axis=0)
    mean_width = width.mean(axis=0)
    width_on = width_off = float("nan")
    if flags is not None:
        f = np.asarray(flags, dtype=bool)
        if f.ndim == 1:
            f = np.broadcast_to(f[:, None], y.shape)
        if f.shape != y.shape:
            raise ValueError("flags shape does not match y")
        if f.any():
            width_on = float(width[f].mean())
        if (~f).any():
            width_off = float(width[~f].mean())
    return CoverageWidth(cov, mean_width, width_on, width_off)


@dataclass(frozen=True)
class MetricsReport:
    """Per-bus scores for one (scenario, feature set, model) cell."""

    bus_labels: tuple
    rmse: np.ndarray
    pinball: np.ndarray
    winkler: np.ndarray
    coverage: np.ndarray
    mean_width: np.ndarray
    width_on: float
    width_off: float
    alpha: float = DEFAULT_ALPHA

    def aggregates(self):
        out = {}
        for name in ("rmse", "pinball", "winkler", "coverage", "mean_width"):
            vals = getattr(self, name)
            out[name] = {
                "avg": float(np.mean(vals)),
                "min": float(np.min(vals)),
                "max": float(np.max(vals)),
            }
        return out

    def to_frame(self):
        rows = []
        per_bus = {
            "rmse": self.rmse,
            "pinball": self.pinball,
            "winkler": self.winkler,
            "coverage": self.coverage,
            "mean_width": self.mean_width,
        }
        for i, label in enumerate(self.bus_labels):
            rows.append(
                {"bus": label, **{m: float(v[i]) for m, v in per_bus.items()}}
            )
        for agg, fn in (("avg", np.mean), ("min", np.min), ("max", np.max)):
            rows.append({"bus": agg, **{m: float(fn(v)) for m, v in per_bus.items()}})
        return pd.DataFrame(rows)

    def to_dict(self):
        return {
            "bus_labels": list(self.bus_labels),
            "alpha": self.alpha,
            "per_bus": {
                "rmse": self.rmse.tolist(),
                "pinball": self.pinball.tolist(),
                "winkler": self.winkler.tolist(),
                "coverage": self.coverage.tolist(),
                "mean_width": self.mean_width.tolist(),
            },
            "width_on_activation": self.width_on,
            "width_off_activation": self.width_off,
            "aggregates": self.aggregates(),
        }


def build_report(y, point, lower, upper, quantile_preds, bus_labels,
                 flags=None, alpha=DEFAULT_ALPHA):
    """Score one cell end to end and bundle the result."""
    cw = coverage_and_width(y, lower, upper, flags=flags)
    return MetricsReport(
        bus_labels=tuple(bus_labels),
        rmse=rmse(y, point),
        pinball=pinball(y, quantile_preds),
        winkler=winkler(y, lower, upper, alpha=alpha),
        coverage=cw.coverage,
        mean_width=cw.mean_width,
        width_on=cw.width_on,
        width_off=cw.width_off,
        alpha=alpha,
    )
