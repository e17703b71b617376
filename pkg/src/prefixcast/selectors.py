"""Predictive prefix selection from sliding-window history.

Each selector scores every candidate prefix for the coming hour using
only the last L hours of data, then keeps the top K by score (ties broken
by canonical prefix text).  Three window metrics are provided -- mean
volume, core presence intensity, and core-masked mean volume -- plus a
classic GM(1,1) grey-model forecast as a comparison baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamism import CoreProfile, core_presence_intensity
from .trace import HourlyTraceMatrix, Prefix

__all__ = [
    "METHODS",
    "WINDOW_GRID",
    "SelectorConfig",
    "SelectionRun",
    "mean_volume_score",
    "core_presence_score",
    "core_volume_score",
    "gm11_fit",
    "gm11_forecast",
    "run_selection",
    "max_core_size",
]

METHODS = ("mean_volume", "core_presence", "core_volume", "gm11")

# Canonical history windows (hours) used by the evaluation grids.
WINDOW_GRID = (1, 12, 24, 168)

# GM(1,1) needs a handful of points for a meaningful exponential fit;
# shorter windows fall back to the window mean.
GM11_MIN_POINTS = 4


@dataclass(frozen=True)
class SelectorConfig:
    """One selector configuration: method, history window L, set size K."""

    method: str
    window: int
    size: int

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.size < 1:
            raise ValueError("size must be >= 1")


def mean_volume_score(volumes: Sequence[float] | np.ndarray) -> float:
    """Mean hourly volume over the history window."""
    arr = np.asarray(volumes, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("window must be 1-D and non-empty")
    return float(arr.mean())


def core_presence_score(cp_window: Sequence[int] | np.ndarray) -> float:
    """Core presence intensity over the history window."""
    return core_presence_intensity(cp_window)


def core_volume_score(
    cp_window: Sequence[int] | np.ndarray, volumes: Sequence[float] | np.ndarray
) -> float:
    """Mean core-masked hourly volume over the history window.

    Combines volume and presence: hours where the prefix sat outside the
    core contribute zero.  Callers restrict candidates to prefixes with
    at least one core appearance in the window; everything else scores 0
    here and is never selected.
    """
    cp = np.asarray(cp_window)
    arr = np.asarray(volumes, dtype=np.float64)
    if cp.shape != arr.shape or cp.ndim != 1 or cp.size < 1:
        raise ValueError("cp and volume windows must be 1-D, non-empty, aligned")
    if not np.isin(cp, (0, 1)).all():
        raise ValueError("cp window entries must be 0 or 1")
    return float((cp * arr).mean())


def gm11_fit(series: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Least-squares development coefficients (a, b) of a GM(1,1) model.

    The cumulated series x1 is formed, the background values
    ``z1(k) = 0.5*(x1(k) + x1(k-1))`` are paired with the raw values, and
    ``x0(k) + a*z1(k) = b`` is solved for (a, b) by least squares.

    Raises
    ------
    ValueError
        If the series is shorter than ``GM11_MIN_POINTS`` or the design
        matrix is rank-deficient (all background values equal).
    """
    x0 = np.asarray(series, dtype=np.float64)
    if x0.ndim != 1 or x0.size < GM11_MIN_POINTS:
        raise ValueError(f"GM(1,1) needs at least {GM11_MIN_POINTS} points")
    x1 = np.cumsum(x0)
    z1 = 0.5 * (x1[1:] + x1[:-1])
    design = np.column_stack([-z1, np.ones_like(z1)])
    sol, _, rank, _ = np.linalg.lstsq(design, x0[1:], rcond=None)
    if rank < 2:
        raise ValueError("degenerate GM(1,1) fit: constant background series")
    return float(sol[0]), float(sol[1])


def _gm11_forecast_impl(x0: np.ndarray) -> tuple[float, bool]:
    """One-step GM(1,1) forecast; returns (value, used_fallback)."""
    if x0.size < GM11_MIN_POINTS:
        return float(x0.mean()) if x0.size else 0.0, True
    try:
        a, b = gm11_fit(x0)
    except ValueError:
        return float(x0.mean()), True
    length = x0.size
    if abs(a) < 1e-12:
        # a -> 0 limit of the forecast formula
        return max(float(b), 0.0), False
    with np.errstate(over="ignore"):
        value = (x0[0] - b / a) * (1.0 - math.exp(a)) * math.exp(-a * length)
    if not math.isfinite(value):
        return float(x0.mean()), True
    return max(float(value), 0.0), False


def gm11_forecast(series: Sequence[float] | np.ndarray) -> float:
    """Forecast the next value of a non-negative series with GM(1,1).

    Follows the standard construction: fit (a, b) on the cumulated
    series, then extrapolate one step and difference back, clamping the
    result at zero.  Series shorter than ``GM11_MIN_POINTS`` and
    degenerate fits fall back to the window mean.
    """
    x0 = np.asarray(series, dtype=np.float64)
    if x0.ndim != 1:
        raise ValueError("series must be 1-D")
    value, _ = _gm11_forecast_impl(x0)
    return value


@dataclass(frozen=True, eq=False)
class SelectionRun:
    """Selections of one configuration, one entry per predicted hour.

    ``hours[i]`` is the 1-based hour whose set was predicted from data in
    hours ``< hours[i]`` only.  ``picks[i]`` holds row indices into
    ``prefixes`` ordered by rank; ``scores[i]`` the matching scores.
    """

    config: SelectorConfig
    threshold: float
    prefixes: tuple[Prefix, ...]
    hours: np.ndarray            # (T,) predicted 1-based hours
    picks: list[np.ndarray]      # per hour: ranked row indices
    scores: list[np.ndarray]     # per hour: scores aligned with picks
    warmup: np.ndarray           # (T,) True where the window was shorter than L
    shortfall: np.ndarray        # (T,) True where fewer than K candidates scored > 0
    gm11_fallbacks: int = 0

    def __post_init__(self) -> None:
        self.hours.setflags(write=False)
        self.warmup.setflags(write=False)
        self.shortfall.setflags(write=False)

    def _pos(self, hour: int) -> int:
        pos = int(hour) - int(self.hours[0])
        if not 0 <= pos < len(self.hours):
            raise ValueError(f"hour {hour} not in selection range")
        return pos

    def selected_indices(self, hour: int) -> np.ndarray:
        return self.picks[self._pos(hour)]

    def selected(self, hour: int) -> list[tuple[Prefix, float]]:
        """Ranked (prefix, score) pairs predicted for one hour."""
        pos = self._pos(hour)
        return [
            (self.prefixes[i], float(s))
            for i, s in zip(self.picks[pos], self.scores[pos])
        ]

    def selected_set(self, hour: int) -> set[Prefix]:
        return {self.prefixes[i] for i in self.picks[self._pos(hour)]}


def run_selection(
    m: HourlyTraceMatrix, profile: CoreProfile, config: SelectorConfig
) -> SelectionRun:
    """Score and select prefixes for every predictable hour of a trace.

    For target hour t the window is hours ``max(1, t-L) .. t-1``; the
    first hour has no history and is skipped.  Short early windows shrink
    to the available history and are flagged as warm-up.  Candidates are
    prefixes active in the window (mean_volume, gm11) or present in at
    least one window core (core_presence, core_volume); only candidates
    with positive score are selectable.

    Returns
    -------
    SelectionRun
    """
    if profile.prefixes != m.prefixes:
        raise ValueError("profile and matrix cover different prefix sets")
    hours_total = m.bin_count
    if hours_total < 2:
        raise ValueError("need at least 2 bins to select predictively")

    n = len(m.prefixes)
    values = m.values.astype(np.float64)
    cp = profile.cp.astype(np.float64)
    zeros = np.zeros((n, 1))
    cum_v = np.hstack([zeros, np.cumsum(values, axis=1)])
    cum_cp = np.hstack([zeros, np.cumsum(cp, axis=1)])
    cum_cpv = np.hstack([zeros, np.cumsum(cp * values, axis=1)])

    L, K = config.window, config.size
    target_hours = np.arange(2, hours_total + 1, dtype=np.int64)
    picks: list[np.ndarray] = []
    scores: list[np.ndarray] = []
    warmup = np.zeros(target_hours.size, dtype=bool)
    shortfall = np.zeros(target_hours.size, dtype=bool)
    fallbacks = 0

    for pos, t in enumerate(target_hours):
        hi = int(t) - 1
        lo = max(0, hi - L)
        span = hi - lo
        warmup[pos] = span < L

        win_v = cum_v[:, hi] - cum_v[:, lo]
        if config.method in ("mean_volume", "gm11"):
            candidates = np.flatnonzero(win_v > 0)
        else:
            candidates = np.flatnonzero((cum_cp[:, hi] - cum_cp[:, lo]) > 0)

        if config.method == "mean_volume":
            cand_scores = win_v[candidates] / span
        elif config.method == "core_presence":
            cand_scores = (cum_cp[candidates, hi] - cum_cp[candidates, lo]) / span
        elif config.method == "core_volume":
            cand_scores = (cum_cpv[candidates, hi] - cum_cpv[candidates, lo]) / span
        else:
            cand_scores = np.empty(candidates.size, dtype=np.float64)
            for k, i in enumerate(candidates):
                cand_scores[k], fb = _gm11_forecast_impl(values[i, lo:hi])
                fallbacks += fb

        positive = cand_scores > 0
        candidates = candidates[positive]
        cand_scores = cand_scores[positive]
        # candidates are in text order, so a stable sort on -score applies
        # the (score desc, text asc) tie-break
        order = np.argsort(-cand_scores, kind="stable")[:K]
        picks.append(candidates[order])
        scores.append(cand_scores[order])
        shortfall[pos] = order.size < K

    return SelectionRun(
        config=config,
        threshold=profile.threshold,
        prefixes=m.prefixes,
        hours=target_hours,
        picks=picks,
        scores=scores,
        warmup=warmup,
        shortfall=shortfall,
        gm11_fallbacks=fallbacks,
    )


def max_core_size(profile: CoreProfile) -> int:
    """Largest hourly core size over the window; the default selection size."""
    if profile.core_sizes.size == 0:
        raise ValueError("profile covers no hours")
    largest = int(profile.core_sizes.max())
    if largest < 1:
        raise ValueError("degenerate trace: every hourly core is empty")
    return largest
