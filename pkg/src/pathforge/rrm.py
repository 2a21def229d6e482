"""Repeated running median filtering and arrest detection.

A running median resists outliers and, unlike averaging smoothers, maps
locally constant input to exactly constant output.  Applying it a few times
with shrinking half-windows flattens recording noise on the measurement grid
into runs of identical values; an arrest is declared wherever both coordinate
series stay exactly constant for long enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SCHEDULE = (3, 2, 1, 1)


def min_arrest_frames(min_duration_s: float, fps: float) -> int:
    """Smallest run length (frames) that counts as an arrest.

    ``ceil(min_duration_s * fps)`` with a 1e-9 guard so that exact products
    such as 0.2 * 25 are not pushed up by float rounding.
    """
    if min_duration_s < 0 or fps <= 0:
        raise ValueError("min_duration_s must be >= 0 and fps > 0")
    return max(1, math.ceil(min_duration_s * fps - 1e-9))


def running_median(series, half_window: int):
    """Centered running median with truncated windows at the edges.

    out[i] is the median of series[max(0, i-h) .. min(n-1, i+h)].  Windows of
    even size use the mean of the two central order statistics, which keeps
    grid and half-grid values exactly representable.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a nonempty 1-D array")
    h = int(half_window)
    if h < 1:
        raise ValueError("half_window must be >= 1")
    n = x.size
    out = np.empty(n)
    w = 2 * h + 1
    if n >= w:
        windows = np.lib.stride_tricks.sliding_window_view(x, w)
        out[h:n - h] = np.median(windows, axis=1)
    bound = min(h, n)
    for i in range(bound):
        out[i] = np.median(x[: i + h + 1])
    for i in range(max(n - h, bound), n):
        out[i] = np.median(x[i - h:])
    return out


def repeated_running_median(series, schedule=DEFAULT_SCHEDULE):
    """Apply ``running_median`` once per half-window in schedule order.

    Each pass consumes the previous pass's output.
    """
    schedule = tuple(int(h) for h in schedule)
    if not schedule:
        raise ValueError("schedule must be nonempty")
    if any(h < 1 for h in schedule):
        raise ValueError("schedule entries must be >= 1")
    out = np.asarray(series, dtype=float)
    for h in schedule:
        out = running_median(out, h)
    return out


@dataclass(frozen=True)
class ArrestMask:
    """Per-frame arrest flags with the duration rule already applied."""

    mask: np.ndarray
    fps: float
    min_duration_s: float = 0.2
    runs: tuple = field(init=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", mask)
        runs = tuple(_true_runs(mask))
        min_frames = min_arrest_frames(self.min_duration_s, self.fps)
        for start, end in runs:
            if end - start + 1 < min_frames:
                raise ValueError(
                    f"arrest run {start}..{end} shorter than {min_frames} frames"
                )
        object.__setattr__(self, "runs", runs)

    def __len__(self):
        return self.mask.size

    @property
    def proportion(self) -> float:
        return float(np.mean(self.mask)) if self.mask.size else 0.0


def _true_runs(mask):
    """Maximal runs of True as (start, end) inclusive frame pairs."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    yield from zip(starts.tolist(), ends.tolist())


def detect_arrests(x_rrm, y_rrm, fps: float, min_duration_s: float = 0.2) -> ArrestMask:
    """Mark frames where both filtered coordinates are exactly constant.

    A frame run counts only if both series show no change at all for at
    least ``min_duration_s`` (at least ``ceil(min_duration_s * fps)``
    frames).  Exact equality is intentional: the filtered values derive from
    grid-valued recordings, and medians / half-sums of grid values stay
    exactly representable in binary floating point.
    """
    x = np.asarray(x_rrm, dtype=float)
    y = np.asarray(y_rrm, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x_rrm and y_rrm must be 1-D arrays of equal length")
    n = x.size
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return ArrestMask(mask, fps, min_duration_s)
    still = (np.diff(x) == 0.0) & (np.diff(y) == 0.0)
    min_frames = min_arrest_frames(min_duration_s, fps)
    for start, end in _true_runs(still):
        # a run of k constant steps spans k+1 frames
        if end - start + 2 >= min_frames:
            mask[start:end + 2] = True
    return ArrestMask(mask, fps, min_duration_s)
