"""Arena boundary and center estimation from within-arena locations.

Animals progressing along the wall touch it, so the wall can be read off the
extreme radial excursions of the tracked path.  The estimator divides the
circle into many overlapping angular sectors, takes a high empirical quantile
of the radial distances in each sector, and smooths the per-sector quantiles
against angle with a locally linear fit (wrapping the series around 0/2pi so
the curve comes out periodic).  A high quantile rather than the maximum keeps
wall jumps, which land outside the arena, from inflating the boundary.

The arena center need not coincide with the tracking origin.  For a nearly
circular wall the boundary curve seen from a point offset by (r0, phi0) is
close to R0 + r0*cos(phi0)*cos(theta) + r0*sin(phi0)*sin(theta), so ordinary
least squares on the smoothed curve recovers the offset.  Estimation runs in
two passes: estimate, re-center, estimate again, so the second pass operates
in the small-offset regime where that first-order expansion is accurate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageGapError, IllConditionedError, PathforgeError

TWO_PI = 2.0 * math.pi

DEFAULT_SECTORS = 720
DEFAULT_WIDTH = TWO_PI / 360.0
DEFAULT_QUANTILE = 0.95
DEFAULT_BANDWIDTH = 0.15
DEFAULT_MIN_COUNT = 10

# wrap-around margin duplicated on each side before smoothing; must exceed
# the smoother's angular span
WRAP_FRACTION = 0.25


class CoverageWarning(UserWarning):
    """Parts of the boundary have too little behavioral data to estimate."""


def to_polar(x, y, origin=(0.0, 0.0)):
    """Polar representation about ``origin``: radii and angles in [0, 2pi)."""
    x = np.asarray(x, dtype=float) - origin[0]
    y = np.asarray(y, dtype=float) - origin[1]
    r = np.hypot(x, y)
    theta = np.mod(np.arctan2(y, x), TWO_PI)
    return r, theta


@dataclass(frozen=True)
class SectorQuantiles:
    """Per-sector radius quantiles on an equally spaced angle grid.

    Sectors may overlap: centers are spaced ``2pi / sectors`` apart while each
    sector spans ``width`` radians.  Sectors with fewer than the minimum
    sample count hold NaN.
    """

    alphas: np.ndarray
    r_p: np.ndarray
    counts: np.ndarray
    width: float
    quantile: float

    @property
    def sectors(self) -> int:
        return self.alphas.size

    @property
    def nonempty(self) -> np.ndarray:
        return np.isfinite(self.r_p)


def sector_quantiles(r, theta, sectors: int = DEFAULT_SECTORS,
                     width: float = DEFAULT_WIDTH,
                     quantile: float = DEFAULT_QUANTILE,
                     min_count: int = DEFAULT_MIN_COUNT) -> SectorQuantiles:
    """Empirical radius quantile per angular sector, with wrap-around.

    A sample belongs to sector ``s`` when its angle lies within
    ``width / 2`` of the sector mid-angle (inclusive on both ends, modulo
    2pi).  Quantiles interpolate linearly between order statistics.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if r.size == 0 or r.shape != theta.shape:
        raise ValueError("need matching nonempty radius and angle arrays")
    if np.any(r < 0):
        raise ValueError("radii must be nonnegative")
    if sectors < 8:
        raise ValueError("need at least 8 sectors")
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must lie in (0, 1]")
    if not 0.0 < width < TWO_PI:
        raise ValueError("sector width must lie in (0, 2pi)")

    theta = np.mod(theta, TWO_PI)
    order = np.argsort(theta, kind="stable")
    th = theta[order]
    rv = r[order]
    n = th.size

    alphas = np.arange(sectors) * (TWO_PI / sectors)
    r_p = np.full(sectors, np.nan)
    counts = np.zeros(sectors, dtype=np.int64)
    half = width / 2.0
    for s in range(sectors):
        lo = alphas[s] - half
        hi = alphas[s] + half
        if lo < 0.0:
            pieces = (slice(np.searchsorted(th, lo + TWO_PI, "left"), n),
                      slice(0, np.searchsorted(th, hi, "right")))
        elif hi >= TWO_PI:
            pieces = (slice(np.searchsorted(th, lo, "left"), n),
                      slice(0, np.searchsorted(th, hi - TWO_PI, "right")))
        else:
            pieces = (slice(np.searchsorted(th, lo, "left"),
                            np.searchsorted(th, hi, "right")),)
        vals = np.concatenate([rv[p] for p in pieces]) if len(pieces) > 1 else rv[pieces[0]]
        counts[s] = vals.size
        if vals.size >= min_count:
            r_p[s] = np.quantile(vals, quantile)
    if not np.any(np.isfinite(r_p)):
        raise PathforgeError(
            f"no sector reached the minimum of {min_count} samples")
    return SectorQuantiles(alphas=alphas, r_p=r_p, counts=counts,
                           width=width, quantile=quantile)


def _linear_lowess_periodic(alphas, values, eval_angles, bandwidth):
    """Locally linear fit of a periodic series, evaluated on a grid.

    The series is wrapped by duplicating a quarter turn of data on each side;
    each evaluation point uses its k nearest points with tricube weights,
    k being the bandwidth fraction of the original series length.
    """
    n = alphas.size
    if n < 2:
        raise PathforgeError("need at least 2 sectors with data to smooth")
    k = max(3, math.ceil(bandwidth * n))

    margin = WRAP_FRACTION * TWO_PI
    head = alphas >= TWO_PI - margin
    tail = alphas <= margin
    xs = np.concatenate([alphas[head] - TWO_PI, alphas, alphas[tail] + TWO_PI])
    ys = np.concatenate([values[head], values, values[tail]])
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    ys = ys[order]
    k = min(k, xs.size)

    out = np.empty(eval_angles.size)
    pos = np.searchsorted(xs, eval_angles)
    for i, a in enumerate(eval_angles):
        lo = max(0, pos[i] - k)
        hi = min(xs.size, pos[i] + k)
        d = np.abs(xs[lo:hi] - a)
        sel = np.argpartition(d, k - 1)[:k] if d.size > k else np.arange(d.size)
        dx = xs[lo:hi][sel] - a
        dmax = np.max(np.abs(dx))
        if dmax == 0.0:
            out[i] = np.mean(ys[lo:hi][sel])
            continue
        u = np.abs(dx) / dmax
        w = (1.0 - u ** 3) ** 3
        sw = np.sum(w)
        xb = np.sum(w * dx) / sw
        yb = np.sum(w * ys[lo:hi][sel]) / sw
        sxx = np.sum(w * (dx - xb) ** 2)
        if sxx <= 1e-12 * dmax ** 2:
            out[i] = yb
        else:
            slope = np.sum(w * (dx - xb) * (ys[lo:hi][sel] - yb)) / sxx
            out[i] = yb - slope * xb
    return out


def smooth_boundary(sq: SectorQuantiles, bandwidth: float = DEFAULT_BANDWIDTH) -> np.ndarray:
    """Smooth sector quantiles into a periodic radius-vs-angle curve.

    Returns one radius per sector mid-angle; sectors without data are filled
    by the smooth.  The fit is locally linear: over a one-degree sector the
    wall cannot change roughly, and a linear fit does not round off the
    gentle dents a quadratic would chase.
    """
    if not 0.0 < bandwidth <= 1.0:
        raise ValueError("bandwidth must lie in (0, 1]")
    good = sq.nonempty
    if np.count_nonzero(good) < 2:
        raise PathforgeError("fewer than 2 sectors have enough samples")
    return _linear_lowess_periodic(sq.alphas[good], sq.r_p[good],
                                   sq.alphas, bandwidth)


@dataclass(frozen=True)
class CenterEstimate:
    """Least-squares center offset recovered from a boundary curve."""

    R0: float
    beta1: float
    beta2: float

    @property
    def r0(self) -> float:
        return math.hypot(self.beta1, self.beta2)

    @property
    def phi0(self) -> float:
        # two-argument arctangent keeps the offset direction for beta2 < 0;
        # (0, 0) maps to angle 0 by convention
        return math.atan2(self.beta2, self.beta1)

    @property
    def x0(self) -> float:
        return self.r0 * math.cos(self.phi0)

    @property
    def y0(self) -> float:
        return self.r0 * math.sin(self.phi0)


def _largest_gap(angles) -> float:
    """Widest circular gap between consecutive sample angles, in radians."""
    a = np.sort(np.mod(angles, TWO_PI))
    if a.size < 2:
        return TWO_PI
    gaps = np.diff(a)
    return float(max(np.max(gaps), TWO_PI - (a[-1] - a[0])))


def estimate_center(radii, angles) -> CenterEstimate:
    """Fit R0 + beta1*cos(theta) + beta2*sin(theta) to boundary samples.

    Requires at least 3 samples spanning more than half the circle,
    otherwise the design is too ill conditioned to separate the offset from
    the radius.
    """
    r = np.asarray(radii, dtype=float)
    th = np.asarray(angles, dtype=float)
    if r.shape != th.shape or r.ndim != 1:
        raise ValueError("radii and angles must be 1-D arrays of equal length")
    keep = np.isfinite(r)
    r = r[keep]
    th = th[keep]
    if r.size < 3:
        raise IllConditionedError("need at least 3 boundary samples")
    gap = _largest_gap(th)
    if gap >= math.pi:
        raise IllConditionedError(
            f"boundary samples span only {math.degrees(TWO_PI - gap):.1f} degrees; "
            "more than half the circle is required")
    design = np.stack([np.ones_like(th), np.cos(th), np.sin(th)], axis=1)
    cond = np.linalg.cond(design)
    if not np.isfinite(cond) or cond > 1e8:
        raise IllConditionedError(f"center design condition number {cond:.3e}")
    beta, *_ = np.linalg.lstsq(design, r, rcond=None)
    est = CenterEstimate(R0=float(beta[0]), beta1=float(beta[1]), beta2=float(beta[2]))
    if est.R0 <= 0:
        raise PathforgeError(f"nonpositive mean radius {est.R0:.3g}")
    return est


@dataclass(frozen=True)
class BoundaryEstimate:
    """Periodic boundary curve with its estimated center.

    ``radii`` samples the curve at ``alphas`` (equally spaced on [0, 2pi));
    queries interpolate linearly with wrap-around.  ``covered`` marks grid
    angles whose sector had enough behavioral data; values elsewhere are
    fill-ins from the smoother.
    """

    alphas: np.ndarray
    radii: np.ndarray
    center: tuple
    covered: np.ndarray
    uncovered_arcs: tuple = field(init=False)

    def __post_init__(self):
        if np.any(~np.isfinite(self.radii)) or np.any(self.radii <= 0):
            raise PathforgeError("boundary curve must be finite and positive")
        object.__setattr__(self, "uncovered_arcs",
                           _uncovered_arcs(self.alphas, self.covered))

    @property
    def spacing(self) -> float:
        return TWO_PI / self.alphas.size

    def radius_at(self, theta):
        """Curve radius at angles ``theta`` (periodic linear interpolation)."""
        th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        xs = np.concatenate([self.alphas, [TWO_PI]])
        ys = np.concatenate([self.radii, [self.radii[0]]])
        out = np.interp(th, xs, ys)
        return float(out) if np.isscalar(theta) else out

    def covered_at(self, theta):
        """True where both grid angles bracketing ``theta`` carry data."""
        th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        i0 = (th // self.spacing).astype(int) % self.alphas.size
        i1 = (i0 + 1) % self.alphas.size
        out = self.covered[i0] & self.covered[i1]
        return bool(out) if np.isscalar(theta) else out


def _uncovered_arcs(alphas, covered):
    """Circular runs of uncovered grid angles as (start, end) radian pairs."""
    if covered.all():
        return ()
    if not covered.any():
        return ((0.0, TWO_PI),)
    n = covered.size
    spacing = TWO_PI / n
    arcs = []
    idx = np.flatnonzero(~covered)
    start = idx[0]
    prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            arcs.append((start, prev))
            start = i
        prev = i
    arcs.append((start, prev))
    # merge a run touching 2pi with one touching 0
    if len(arcs) > 1 and arcs[0][0] == 0 and arcs[-1][1] == n - 1:
        first = arcs.pop(0)
        last = arcs.pop()
        arcs.append((last[0], first[1] + n))
    return tuple((alphas[a % n], alphas[b % n] + spacing) for a, b in arcs)


def estimate_boundary(x, y, sectors: int = DEFAULT_SECTORS,
                      width: float = DEFAULT_WIDTH,
                      quantile: float = DEFAULT_QUANTILE,
                      bandwidth: float = DEFAULT_BANDWIDTH,
                      min_count: int = DEFAULT_MIN_COUNT,
                      origin=(0.0, 0.0)) -> BoundaryEstimate:
    """Estimate the arena boundary and center from progression locations.

    Two full passes: sector quantiles and smoothing about the working
    origin, center estimation from the smoothed curve, then the same
    estimation repeated about the corrected center.  The returned center
    accumulates both corrections; the residual mismatch between the two is
    second order in the offset.  Uncovered angular arcs are reported through
    a ``CoverageWarning`` and recorded on the estimate.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cx, cy = float(origin[0]), float(origin[1])

    sq = radii = None
    for _ in range(2):
        r, theta = to_polar(x, y, (cx, cy))
        sq = sector_quantiles(r, theta, sectors, width, quantile, min_count)
        radii = smooth_boundary(sq, bandwidth)
        good = sq.nonempty
        if np.count_nonzero(good) >= 3 and _largest_gap(sq.alphas[good]) < math.pi:
            center = estimate_center(radii[good], sq.alphas[good])
            cx += center.x0
            cy += center.y0
        else:
            warnings.warn(
                "angular coverage spans half the circle or less; "
                "center left at the working origin", CoverageWarning)
            break

    covered = sq.nonempty
    est = BoundaryEstimate(alphas=sq.alphas, radii=radii, center=(cx, cy),
                           covered=covered)
    if est.uncovered_arcs:
        spans = ", ".join(f"[{a:.3f}, {b:.3f}] rad" for a, b in est.uncovered_arcs)
        warnings.warn(f"boundary has no data on {spans}", CoverageWarning)
    return est


def distance_from_wall(point, boundary: BoundaryEstimate):
    """Radial distance from a location to the boundary curve, in cm.

    Negative values mean the location lies outside the estimated boundary
    (wall jumps do that) and are returned as-is.  Accepts a single (x, y)
    pair or a pair of coordinate arrays.
    """
    px = np.asarray(point[0], dtype=float)
    py = np.asarray(point[1], dtype=float)
    r, theta = to_polar(px, py, boundary.center)
    ok = boundary.covered_at(theta)
    if not np.all(ok):
        bad = theta if np.isscalar(ok) else np.asarray(theta)[~np.asarray(ok)]
        first = float(np.atleast_1d(bad)[0])
        for lo, hi in boundary.uncovered_arcs:
            if lo <= first <= hi or lo <= first + TWO_PI <= hi:
                raise CoverageGapError(
                    f"angle {first:.3f} rad falls in uncovered arc "
                    f"[{lo:.3f}, {hi:.3f}] rad")
        raise CoverageGapError(f"angle {first:.3f} rad is not covered")
    out = boundary.radius_at(theta) - r
    return float(out) if np.isscalar(point[0]) else out
