import numpy as np
import pytest

from pathforge.lowess import KinematicSeries, RawPath, kinematics
from pathforge.pipeline import (
    EndpointSummary,
    Segment,
    classify_segments,
    combine,
    endpoints,
    path_distance_m,
)
from pathforge.rrm import ArrestMask, detect_arrests

FPS = 25.0


def make_kin(x, y, vx=None, vy=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if vx is None:
        vx = np.gradient(x) * FPS
    if vy is None:
        vy = np.gradient(y) * FPS
    vx = np.asarray(vx, dtype=float)
    vy = np.asarray(vy, dtype=float)
    z = np.zeros_like(x)
    return KinematicSeries(xhat=x, yhat=y, vx=vx, vy=vy, ax=z, ay=z,
                           speed=np.sqrt(vx * vx + vy * vy),
                           outlier_x=z.astype(bool), outlier_y=z.astype(bool))


def mask_from_bool(mask):
    return ArrestMask(np.asarray(mask, dtype=bool), fps=FPS)


class TestCombine:
    def test_empty_mask_is_identity(self):
        rng = np.random.default_rng(0)
        kin = make_kin(rng.normal(size=50), rng.normal(size=50))
        out = combine(kin, mask_from_bool(np.zeros(50)))
        assert np.array_equal(out.xhat, kin.xhat)
        assert np.array_equal(out.speed, kin.speed)

    def test_full_session_arrest(self):
        rng = np.random.default_rng(1)
        kin = make_kin(rng.normal(size=40), rng.normal(size=40))
        out = combine(kin, mask_from_bool(np.ones(40)))
        assert np.array_equal(out.vx, np.zeros(40))
        assert np.array_equal(out.speed, np.zeros(40))
        np.testing.assert_allclose(
            out.xhat, np.linspace(kin.xhat[0], kin.xhat[-1], 40), atol=1e-12)
        np.testing.assert_allclose(
            out.yhat, np.linspace(kin.yhat[0], kin.yhat[-1], 40), atol=1e-12)

    def test_arrest_distance_is_anchor_chord(self):
        rng = np.random.default_rng(2)
        x = np.cumsum(rng.normal(size=300))
        y = np.cumsum(rng.normal(size=300))
        kin = make_kin(x, y)
        mask = np.zeros(300, dtype=bool)
        mask[100:151] = True
        out = combine(kin, mask_from_bool(mask))
        dx = np.diff(out.xhat[100:151])
        dy = np.diff(out.yhat[100:151])
        run_len = float(np.sum(np.sqrt(dx * dx + dy * dy)))
        chord = float(np.hypot(x[150] - x[100], y[150] - y[100]))
        assert run_len == pytest.approx(chord, rel=1e-12)

    def test_never_longer_than_unmasked_path(self):
        rng = np.random.default_rng(3)
        kin = make_kin(np.cumsum(rng.normal(size=200)), np.cumsum(rng.normal(size=200)))
        mask = np.zeros(200, dtype=bool)
        mask[20:40] = True
        mask[90:120] = True
        out = combine(kin, mask_from_bool(mask))
        assert path_distance_m(out.xhat, out.yhat) <= path_distance_m(kin.xhat, kin.yhat)

    def test_length_mismatch_rejected(self):
        kin = make_kin(np.zeros(10), np.zeros(10))
        with pytest.raises(ValueError):
            combine(kin, mask_from_bool(np.zeros(11)))


class TestClassifySegments:
    @staticmethod
    def session_with_two_bouts():
        # arrest 0..9, slow bout 10..29 (3 cm/s), arrest 30..39,
        # fast bout 40..59 (12 cm/s), arrest 60..69
        speed = np.zeros(70)
        speed[10:30] = 3.0
        speed[40:60] = 12.0
        vx = speed.copy()
        kin = KinematicSeries(
            xhat=np.cumsum(vx) / FPS, yhat=np.zeros(70), vx=vx, vy=np.zeros(70),
            ax=np.zeros(70), ay=np.zeros(70), speed=speed,
            outlier_x=np.zeros(70, bool), outlier_y=np.zeros(70, bool))
        mask = speed == 0.0
        return kin, mask_from_bool(mask)

    def test_designed_speeds_split_kinds(self):
        kin, mask = self.session_with_two_bouts()
        segs = classify_segments(kin, mask, lingering_speed_threshold=5.0)
        kinds = [s.kind for s in segs]
        assert kinds == ["arrest", "lingering", "arrest", "progression", "arrest"]
        assert segs.segments[1].max_speed == pytest.approx(3.0)
        assert segs.segments[3].max_speed == pytest.approx(12.0)

    def test_zero_threshold_all_progression(self):
        kin, mask = self.session_with_two_bouts()
        segs = classify_segments(kin, mask, lingering_speed_threshold=0.0)
        assert [s.kind for s in segs if s.kind != "arrest"] == ["progression"] * 2

    def test_huge_threshold_all_lingering(self):
        kin, mask = self.session_with_two_bouts()
        segs = classify_segments(kin, mask, lingering_speed_threshold=np.inf)
        assert [s.kind for s in segs if s.kind != "arrest"] == ["lingering"] * 2

    def test_segments_partition_session(self):
        kin, mask = self.session_with_two_bouts()
        segs = classify_segments(kin, mask, 5.0)
        cursor = 0
        for seg in segs:
            assert seg.start == cursor
            cursor = seg.end + 1
        assert cursor == len(kin)

    def test_arrest_segments_match_mask_exactly(self):
        kin, mask = self.session_with_two_bouts()
        segs = classify_segments(kin, mask, 5.0)
        rebuilt = np.zeros(len(kin), dtype=bool)
        for seg in segs:
            if seg.kind == "arrest":
                rebuilt[seg.start:seg.end + 1] = True
        assert np.array_equal(rebuilt, mask.mask)

    def test_adjacent_arrest_lingering_merge_into_episode(self):
        kin, mask = self.session_with_two_bouts()
        segs = classify_segments(kin, mask, 5.0)
        kinds = [e.kind for e in segs.episodes]
        # arrest+lingering+arrest collapse around the slow bout
        assert kinds == ["lingering", "progression", "lingering"]
        assert segs.episodes[0].start == 0 and segs.episodes[0].end == 39

    def test_negative_threshold_rejected(self):
        kin, mask = self.session_with_two_bouts()
        with pytest.raises(ValueError):
            classify_segments(kin, mask, -1.0)


class TestEndpoints:
    def test_stationary_session(self):
        kin = make_kin(np.full(100, 2.0), np.full(100, 3.0),
                       vx=np.zeros(100), vy=np.zeros(100))
        segs = classify_segments(kin, mask_from_bool(np.ones(100)), 5.0)
        summary = endpoints(kin, segs, FPS)
        assert summary.total_distance_m == 0.0
        assert summary.proportion_arrest == 1.0
        assert summary.mean_speed_cm_s == 0.0
        assert summary.n_arrest == 1

    def test_uniform_motion_arithmetic(self):
        n = int(60 * FPS)  # 60 s
        t = np.arange(n) / FPS
        kin = make_kin(10.0 * t, np.zeros(n), vx=np.full(n, 10.0), vy=np.zeros(n))
        segs = classify_segments(kin, mask_from_bool(np.zeros(n)), 5.0)
        summary = endpoints(kin, segs, FPS)
        # 10 cm/s for 60 s covers 6 m of ground; the sampled polyline is one
        # frame short of the full minute
        assert summary.total_distance_m == pytest.approx(6.0 * (n - 1) / n, rel=1e-12)
        assert summary.proportion_arrest == 0.0
        assert summary.mean_speed_cm_s == pytest.approx(10.0)
        assert summary.n_progression == 1

    def test_invalid_fps_rejected(self):
        kin = make_kin(np.zeros(10), np.zeros(10))
        segs = classify_segments(kin, mask_from_bool(np.ones(10)), 5.0)
        with pytest.raises(ValueError):
            endpoints(kin, segs, 0.0)


class TestSegmentValidation:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            Segment(0, 1, "strolling", 1.0)

    def test_summary_validation(self):
        with pytest.raises(ValueError):
            EndpointSummary(1.0, 1.5, 0.0, 0, 0, 0, 0, 0)


def test_lowess_only_never_reports_arrest_on_noisy_data():
    rng = np.random.default_rng(9)
    x = np.round(np.cumsum(rng.normal(0, 0.3, 600)) + rng.normal(0, 0.6, 600))
    y = np.round(np.cumsum(rng.normal(0, 0.3, 600)) + rng.normal(0, 0.6, 600))
    kin = kinematics(RawPath.from_xy(x, y, FPS))
    assert np.count_nonzero((kin.vx == 0.0) & (kin.vy == 0.0)) == 0


def test_combined_pipeline_detects_planted_arrest():
    rng = np.random.default_rng(10)
    n = 500
    x = np.zeros(n)
    x[:200] = np.cumsum(rng.normal(0.4, 0.1, 200))
    x[200:350] = x[199]
    x[350:] = x[199] + np.cumsum(rng.normal(0.4, 0.1, 150))
    yc = np.zeros(n)
    obs_x = np.round(x + rng.normal(0, 0.6, n))
    obs_y = np.round(yc + rng.normal(0, 0.6, n))
    path = RawPath.from_xy(obs_x, obs_y, FPS)
    kin = kinematics(path)
    from pathforge.rrm import repeated_running_median
    arrests = detect_arrests(repeated_running_median(obs_x),
                             repeated_running_median(obs_y), FPS)
    out = combine(kin, arrests)
    # most of the planted stop is recovered as exact zeros
    assert np.count_nonzero(out.speed[210:340] == 0.0) > 100
