"""Session ingestion, result serialization and the end-to-end driver.

All outputs are CSV so humans can audit them.  Floats print with 9
significant digits, widening to an exact representation whenever 9 digits
would not round-trip, so rereading a file reproduces the values bit for
bit.  Run manifests record config, seed, versions and input hash, and
deliberately no timestamps: rerunning a manifest must reproduce every
output byte-identically.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .arena import CoverageWarning, estimate_boundary, to_polar
from .config import SessionConfig, config_to_dict
from .errors import PathforgeError, SessionParseError
from .lowess import KinematicSeries, RawPath, kinematics
from .pipeline import classify_segments, combine, endpoints
from .rrm import detect_arrests, repeated_running_median
from .simulate import SimulatedPath

SESSION_HEADER = ["frame", "t", "x", "y"]
SMOOTHED_HEADER = ["frame", "xhat", "yhat", "vx", "vy", "ax", "ay", "speed", "arrest"]


def fmt(value) -> str:
    """9-significant-digit decimal, widened when that would lose bits."""
    value = float(value)
    text = "%.9g" % value
    return text if float(text) == value else repr(value)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def parse_session(path, grid_cm: float = 1.0) -> RawPath:
    """Read and validate a ``frame,t,x,y`` session CSV.

    Units are seconds and cm, UTF-8, comma separators, decimal points.
    Rows with missing or non-numeric coordinates, nonmonotone frame indices
    or irregular time spacing (beyond 1e-6 s) are rejected with the 1-based
    line number of the first offending line.
    """
    frames, ts, xs, ys = [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SessionParseError("empty file", line=1)
        if [h.strip() for h in header] != SESSION_HEADER:
            raise SessionParseError(
                f"expected header {','.join(SESSION_HEADER)!r}, got {','.join(header)!r}",
                line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise SessionParseError(f"expected 4 fields, got {len(row)}", line=lineno)
            if any(not field.strip() for field in row):
                raise SessionParseError("missing value", line=lineno)
            try:
                frame = int(row[0])
                t, x, y = (float(v) for v in row[1:])
            except ValueError as err:
                raise SessionParseError(str(err), line=lineno)
            if not (np.isfinite(t) and np.isfinite(x) and np.isfinite(y)):
                raise SessionParseError("non-finite value", line=lineno)
            if frames and frame <= frames[-1]:
                raise SessionParseError(
                    f"frame index {frame} not increasing", line=lineno)
            frames.append(frame)
            ts.append(t)
            xs.append(x)
            ys.append(y)
    if not frames:
        raise SessionParseError("no data rows", line=2)
    t_arr = np.array(ts)
    if len(ts) > 1:
        dt = np.diff(t_arr)
        step = float(np.median(dt))
        if step <= 0:
            raise SessionParseError("timestamps not increasing", line=3)
        bad = np.flatnonzero(np.abs(dt - step) > 1e-6)
        if bad.size:
            raise SessionParseError(
                f"irregular time spacing ({dt[bad[0]]:.9g} s vs {step:.9g} s)",
                line=int(bad[0]) + 3)
        fps = 1.0 / step
        if abs(fps - round(fps)) < 1e-6:
            fps = float(round(fps))
    else:
        fps = 25.0
    return RawPath(frames=np.array(frames, dtype=np.int64), t=t_arr,
                   x=np.array(xs), y=np.array(ys), fps=fps, grid_cm=grid_cm)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_session(path, raw: RawPath):
    rows = ((int(f), fmt(t), fmt(x), fmt(y))
            for f, t, x, y in zip(raw.frames, raw.t, raw.x, raw.y))
    _write_csv(path, SESSION_HEADER, rows)


def write_smoothed(path, frames, kin: KinematicSeries, arrest_mask):
    rows = ((int(frames[i]), fmt(kin.xhat[i]), fmt(kin.yhat[i]), fmt(kin.vx[i]),
             fmt(kin.vy[i]), fmt(kin.ax[i]), fmt(kin.ay[i]), fmt(kin.speed[i]),
             int(arrest_mask[i])) for i in range(len(kin)))
    _write_csv(path, SMOOTHED_HEADER, rows)


def write_segments(path, segments):
    rows = ((seg.start, seg.end + 1, seg.kind, fmt(seg.max_speed))
            for seg in segments)
    _write_csv(path, ["start", "end", "kind", "max_speed"], rows)


def write_endpoints(path, summary):
    _write_csv(path, ["total_distance_m", "proportion_arrest", "mean_speed_cm_s",
                      "n_arrest", "n_lingering", "n_progression",
                      "n_lingering_episodes", "n_progression_episodes"],
               [(fmt(summary.total_distance_m), fmt(summary.proportion_arrest),
                 fmt(summary.mean_speed_cm_s), summary.n_arrest,
                 summary.n_lingering, summary.n_progression,
                 summary.n_lingering_episodes, summary.n_progression_episodes)])


def write_boundary(path, boundary):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# center {fmt(boundary.center[0])} {fmt(boundary.center[1])}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["angle_rad", "radius_cm"])
        for a, r in zip(boundary.alphas, boundary.radii):
            writer.writerow([fmt(a), fmt(r)])


def read_boundary(path):
    from .arena import BoundaryEstimate
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# center"):
            raise SessionParseError("missing '# center x y' line", line=1)
        parts = first.split()
        center = (float(parts[2]), float(parts[3]))
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["angle_rad", "radius_cm"]:
            raise SessionParseError("bad boundary header", line=2)
        data = [(float(a), float(r)) for a, r in reader]
    alphas = np.array([a for a, _ in data])
    radii = np.array([r for _, r in data])
    return BoundaryEstimate(alphas=alphas, radii=radii, center=center,
                            covered=np.ones(alphas.size, dtype=bool))


def write_wall_distances(path, frames, distances, angles, covered):
    rows = ((int(frames[i]), fmt(angles[i]),
             fmt(distances[i]) if covered[i] else "")
            for i in range(len(frames)))
    _write_csv(path, ["frame", "angle_rad", "wall_distance_cm"], rows)


def write_simulated(path, sim: SimulatedPath):
    outlier = np.zeros(len(sim), dtype=int)
    outlier[sim.outlier_idx] = 1
    fps = sim.params.fps
    rows = ((i, fmt(i / fps), fmt(sim.truth.x[i]), fmt(sim.truth.y[i]),
             fmt(sim.obs_x[i]), fmt(sim.obs_y[i]),
             int(sim.truth.arrest_mask[i]), int(outlier[i]))
            for i in range(len(sim)))
    _write_csv(path, ["frame", "t", "truth_x", "truth_y", "obs_x", "obs_y",
                      "arrest", "outlier"], rows)


def write_metrics(path, metrics_list):
    rows = []
    for metrics in metrics_list:
        label = "stationary" if metrics.params.stationary else "protocol"
        for method in metrics.methods:
            rows.append((label, fmt(metrics.params.sigma),
                         fmt(metrics.params.target_p), method, metrics.reps,
                         fmt(metrics.mean_theta(method)),
                         fmt(metrics.sd_theta(method)),
                         fmt(metrics.mse_theta(method)),
                         fmt(metrics.mean_p(method)),
                         fmt(metrics.mse_p(method))))
    _write_csv(path, ["scenario", "sigma", "target_p", "method", "reps",
                      "theta_mean_m", "theta_sd_m", "theta_mse",
                      "p_mean", "p_mse"], rows)


def write_replications(path, metrics_list):
    rows = []
    for metrics in metrics_list:
        for i in range(metrics.reps):
            for method in metrics.methods:
                rows.append((fmt(metrics.params.sigma),
                             fmt(metrics.params.target_p), i, method,
                             fmt(metrics.theta_true[i]),
                             fmt(metrics.p_true[i]),
                             fmt(metrics.theta_hat[method][i]),
                             fmt(metrics.p_hat[method][i])))
    _write_csv(path, ["sigma", "target_p", "rep", "method", "theta_true_m",
                      "p_true", "theta_hat_m", "p_hat"], rows)


@dataclass(frozen=True)
class ResultBundle:
    out_dir: str
    files: dict
    manifest_path: str
    warnings: tuple = ()


def write_manifest(out_dir, subcommand, config: SessionConfig, outputs,
                   input_path=None, seed=None, warning_list=()):
    manifest = {
        "tool": "pathforge",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "subcommand": subcommand,
        "seed": config.seed if seed is None else seed,
        "config": config_to_dict(config),
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "warnings": list(warning_list),
    }
    if input_path is not None:
        manifest["input"] = os.path.basename(str(input_path))
        manifest["input_sha256"] = sha256_file(input_path)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


PIPELINE_OUTPUTS = ("smoothed", "arrests", "segments", "episodes", "endpoints",
                    "boundary", "walldist")


def run_pipeline(config: SessionConfig, session: RawPath, out_dir,
                 outputs=PIPELINE_OUTPUTS, subcommand="run",
                 input_path=None) -> ResultBundle:
    """Smooth, detect arrests, fuse, segment, summarize and serialize.

    Boundary estimation is best-effort: a session without usable wall
    coverage still produces all kinematic outputs, and the problem is
    recorded as a warning in the manifest.  Any other failure removes the
    partial outputs and re-raises with the failing stage named.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    warning_list = []

    def target(name):
        path = os.path.join(out_dir, f"{name}.csv")
        written.append(path)
        return path

    stage = "smooth"
    try:
        kin = kinematics(session, config.lowess_half_window,
                         config.lowess_robustness_iters)
        stage = "arrests"
        rx = repeated_running_median(session.x, config.rrm_schedule)
        ry = repeated_running_median(session.y, config.rrm_schedule)
        arrests = detect_arrests(rx, ry, session.fps, config.arrest_min_duration_s)
        stage = "combine"
        fused = combine(kin, arrests)
        stage = "segments"
        segments = classify_segments(fused, arrests, config.lingering_threshold_cm_s)
        stage = "endpoints"
        summary = endpoints(fused, segments, session.fps)

        files = {}
        if "smoothed" in outputs:
            files["smoothed"] = target("smoothed")
            write_smoothed(files["smoothed"], session.frames, fused, arrests.mask)
        if "arrests" in outputs:
            files["arrests"] = target("arrests")
            _write_csv(files["arrests"], ["start", "end"],
                       ((s, e + 1) for s, e in arrests.runs))
        if "segments" in outputs:
            files["segments"] = target("segments")
            write_segments(files["segments"], segments.segments)
        if "episodes" in outputs:
            files["episodes"] = target("episodes")
            write_segments(files["episodes"], segments.episodes)
        if "endpoints" in outputs:
            files["endpoints"] = target("endpoints")
            write_endpoints(files["endpoints"], summary)

        if "boundary" in outputs or "walldist" in outputs:
            stage = "boundary"
            prog = np.zeros(len(fused), dtype=bool)
            for seg in segments.segments:
                if seg.kind == "progression":
                    prog[seg.start:seg.end + 1] = True
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", CoverageWarning)
                    boundary = estimate_boundary(fused.xhat[prog], fused.yhat[prog],
                                                 **config.boundary_kwargs())
                warning_list.extend(str(w.message) for w in caught
                                    if issubclass(w.category, CoverageWarning))
                if "boundary" in outputs:
                    files["boundary"] = target("boundary")
                    write_boundary(files["boundary"], boundary)
                if "walldist" in outputs:
                    r, theta = to_polar(fused.xhat, fused.yhat, boundary.center)
                    covered = boundary.covered_at(theta)
                    dist = boundary.radius_at(theta) - r
                    files["walldist"] = target("walldist")
                    write_wall_distances(files["walldist"], session.frames,
                                         dist, theta, covered)
            except (PathforgeError, ValueError) as err:
                warning_list.append(f"boundary step skipped: {err}")

        stage = "manifest"
        manifest = write_manifest(out_dir, subcommand, config, written,
                                  input_path=input_path,
                                  warning_list=warning_list)
        return ResultBundle(out_dir=str(out_dir), files=files,
                            manifest_path=manifest, warnings=tuple(warning_list))
    except Exception as err:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        if isinstance(err, PathforgeError):
            raise PathforgeError(f"{stage}: {err}") from err
        raise PathforgeError(f"{stage}: {err.__class__.__name__}: {err}") from err
