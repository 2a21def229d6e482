"""Fusion of the quadratic smoother with median-detected arrests.

The combined smoother keeps the locally fitted kinematics during movement,
forces velocities to exactly zero inside detected arrests, and replaces the
fitted positions there by the straight line between the fit values at the
first and last arrest frames.  Sessions are then segmented into arrest,
lingering and progression intervals and summarized into scalar endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lowess import KinematicSeries
from .rrm import ArrestMask

KINDS = ("arrest", "lingering", "progression")


def combine(kin: KinematicSeries, arrests: ArrestMask) -> KinematicSeries:
    """Overlay arrest intervals onto the fitted kinematics.

    Inside each maximal arrest run the velocities and speed are set to
    exactly 0 and the positions are linearly interpolated between the fitted
    positions at the run's first and last frames.  Everything else is left
    untouched.
    """
    if len(kin) != len(arrests):
        raise ValueError("kinematics and arrest mask must have equal length")
    xhat = kin.xhat.copy()
    yhat = kin.yhat.copy()
    vx = kin.vx.copy()
    vy = kin.vy.copy()
    speed = kin.speed.copy()
    for start, end in arrests.runs:
        m = end - start + 1
        xhat[start:end + 1] = np.linspace(kin.xhat[start], kin.xhat[end], m)
        yhat[start:end + 1] = np.linspace(kin.yhat[start], kin.yhat[end], m)
        vx[start:end + 1] = 0.0
        vy[start:end + 1] = 0.0
        speed[start:end + 1] = 0.0
    return KinematicSeries(
        xhat=xhat, yhat=yhat, vx=vx, vy=vy, ax=kin.ax, ay=kin.ay, speed=speed,
        outlier_x=kin.outlier_x, outlier_y=kin.outlier_y,
    )


@dataclass(frozen=True)
class Segment:
    """One classified interval, frames ``start`` to ``end`` inclusive."""

    start: int
    end: int
    kind: str
    max_speed: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.end < self.start:
            raise ValueError("segment end before start")

    @property
    def n_frames(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class SegmentList:
    """Segments partitioning a session, plus merged lingering episodes.

    ``segments`` carries the frame-exact classification.  ``episodes`` is a
    coarser grouping in which runs of adjacent arrest and lingering segments
    merge into single lingering episodes, since brief arrests and small local
    movements belong to the same behavioral mode.
    """

    segments: tuple
    episodes: tuple = field(default=())

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    def counts(self) -> dict:
        out = {kind: 0 for kind in KINDS}
        for seg in self.segments:
            out[seg.kind] += 1
        return out

    def episode_counts(self) -> dict:
        out = {"lingering": 0, "progression": 0}
        for ep in self.episodes:
            out[ep.kind] += 1
        return out


def classify_segments(combined: KinematicSeries, arrests: ArrestMask,
                      lingering_speed_threshold: float = 5.0) -> SegmentList:
    """Partition the session into arrest / lingering / progression segments.

    Arrest segments are the mask's maximal runs.  A maximal non-arrest run
    becomes lingering when its maximal speed stays below the threshold
    (cm/s), progression otherwise.
    """
    if lingering_speed_threshold < 0:
        raise ValueError("lingering_speed_threshold must be >= 0")
    n = len(combined)
    if n != len(arrests):
        raise ValueError("kinematics and arrest mask must have equal length")
    mask = arrests.mask
    boundaries = [0] + (np.flatnonzero(np.diff(mask)) + 1).tolist() + [n]

    segments = []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        if mask[lo]:
            segments.append(Segment(lo, hi - 1, "arrest", 0.0))
        else:
            top = float(np.max(combined.speed[lo:hi]))
            kind = "lingering" if top < lingering_speed_threshold else "progression"
            segments.append(Segment(lo, hi - 1, kind, top))

    episodes = []
    for seg in segments:
        grouped = "progression" if seg.kind == "progression" else "lingering"
        if episodes and episodes[-1].kind == grouped:
            prev = episodes.pop()
            episodes.append(Segment(prev.start, seg.end, grouped,
                                    max(prev.max_speed, seg.max_speed)))
        else:
            episodes.append(Segment(seg.start, seg.end, grouped, seg.max_speed))
    return SegmentList(segments=tuple(segments), episodes=tuple(episodes))


@dataclass(frozen=True)
class EndpointSummary:
    """Scalar per-session summaries computed from the combined smoother."""

    total_distance_m: float
    proportion_arrest: float
    mean_speed_cm_s: float
    n_arrest: int
    n_lingering: int
    n_progression: int
    n_lingering_episodes: int
    n_progression_episodes: int

    def __post_init__(self):
        if not 0.0 <= self.proportion_arrest <= 1.0:
            raise ValueError("proportion_arrest outside [0, 1]")
        if self.total_distance_m < 0:
            raise ValueError("negative distance")


def path_distance_m(x, y) -> float:
    """Polyline length of a position series, converted from cm to meters."""
    dx = np.diff(np.asarray(x, dtype=float))
    dy = np.diff(np.asarray(y, dtype=float))
    return float(np.sum(np.sqrt(dx * dx + dy * dy))) / 100.0


def endpoints(combined: KinematicSeries, segments: SegmentList, fps: float) -> EndpointSummary:
    """Endpoint summary of one session.

    Distance comes from the combined (smoothed) positions only; the arrest
    proportion counts frames with speed exactly 0, which the combined
    smoother assigns rather than computes.
    """
    if fps <= 0 or not math.isfinite(fps):
        raise ValueError("fps must be positive and finite")
    counts = segments.counts()
    ep_counts = segments.episode_counts()
    n = len(combined)
    return EndpointSummary(
        total_distance_m=path_distance_m(combined.xhat, combined.yhat),
        proportion_arrest=float(np.count_nonzero(combined.speed == 0.0)) / n,
        mean_speed_cm_s=float(np.mean(combined.speed)),
        n_arrest=counts["arrest"],
        n_lingering=counts["lingering"],
        n_progression=counts["progression"],
        n_lingering_episodes=ep_counts["lingering"],
        n_progression_episodes=ep_counts["progression"],
    )
