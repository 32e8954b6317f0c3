"""Motion pipeline tests. The calibration and orientation cases are checked
against independent oracles (a float reimplementation of the integer map and
a plain floating-point angle computation) rather than against the code."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safewatch.motion import (
    AxisCalibration,
    FallDetectorState,
    FallEvent,
    FallPhase,
    GVector,
    OrientationAngles,
    RawAccelSample,
    SleepPosition,
    X_CAL,
    Y_CAL,
    Z_CAL,
    calibrate_axis,
    calibrate_sample,
    fall_step,
    orientation,
    rms_accel,
    sleep_position,
)


def oracle_map(raw: int, cal: AxisCalibration) -> float:
    """Float-based oracle for the integer map: compute the exact rational
    quotient, truncate toward zero, then apply the divisor."""
    quotient = (raw - cal.in_lo) * 200 / (cal.in_hi - cal.in_lo)
    truncated = math.trunc(quotient)
    return (truncated - 100) / cal.divisor


class TestCalibration:
    def test_extremes_x_axis(self):
        assert calibrate_axis(269, X_CAL) == 1.0
        assert calibrate_axis(404, X_CAL) == -1.0

    def test_extremes_z_axis(self):
        assert calibrate_axis(268, Z_CAL) == -1.0
        assert calibrate_axis(403, Z_CAL) == 1.0

    def test_truncation_near_midpoint(self):
        # 67*200/135 = 99.26 truncates to 99 -> -1 -> +0.01 g
        assert calibrate_axis(336, X_CAL) == 0.01

    def test_full_sweep_matches_oracle(self):
        for cal in (X_CAL, Y_CAL, Z_CAL):
            for raw in range(0, 1024):
                assert calibrate_axis(raw, cal) == oracle_map(raw, cal), (raw, cal)

    def test_extrapolates_without_clamp(self):
        assert abs(calibrate_axis(0, X_CAL)) > 1.0
        assert abs(calibrate_axis(1023, X_CAL)) > 1.0

    @given(
        st.integers(0, 1023),
        st.integers(0, 1023),
        st.sampled_from([X_CAL, Y_CAL, Z_CAL]),
    )
    def test_monotone_per_divisor_sign(self, a, b, cal):
        lo, hi = min(a, b), max(a, b)
        if cal.divisor < 0:
            assert calibrate_axis(lo, cal) >= calibrate_axis(hi, cal)
        else:
            assert calibrate_axis(lo, cal) <= calibrate_axis(hi, cal)

    @given(
        st.integers(100, 500),
        st.integers(1, 400),
        st.sampled_from([-100, 100]),
    )
    def test_endpoints_exact_for_any_calibration(self, lo, span, divisor):
        cal = AxisCalibration(lo, lo + span, divisor)
        assert calibrate_axis(cal.in_lo, cal) * divisor == -100
        assert calibrate_axis(cal.in_hi, cal) * divisor == 100

    def test_rejects_bad_calibration(self):
        with pytest.raises(ValueError):
            AxisCalibration(404, 269, -100)
        with pytest.raises(ValueError):
            AxisCalibration(269, 404, 50)

    def test_calibrate_sample_combines_axes(self):
        g = calibrate_sample(RawAccelSample(0, 336, 334, 335))
        assert g.xg == 0.01


def oracle_angles(xg, yg, zg):
    """Independent float orientation: same formula, no int truncation.

    atan2 is used directly; C and CPython agree on every zero-sign edge, so
    the only difference under test is the integer truncation."""

    def one(num, den):
        return min(360.0, max(0.0, math.atan2(num, den) * 180.0 / 3.14 + 180.0))

    return one(yg, zg), one(zg, xg), one(xg, yg)


class TestOrientation:
    def test_flat_on_back(self):
        assert orientation(GVector(0, 0, 1)) == OrientationAngles(180, 270, 180)

    def test_all_zero_input(self):
        assert orientation(GVector(0, 0, 0)) == OrientationAngles(180, 180, 180)

    def test_watch_vertical(self):
        assert orientation(GVector(1, 0, 0)) == OrientationAngles(180, 180, 270)

    def test_face_down_hits_clamp(self):
        # atan2(0,-1) = pi scales to 180.57, truncates to 180, shifts to 360
        o = orientation(GVector(0, 0, -1))
        assert o.roll == 360

    @settings(max_examples=2000)
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
    def test_matches_float_oracle_within_one_degree(self, x, y, z):
        norm = math.sqrt(x * x + y * y + z * z)
        if norm < 1e-6:
            return
        g = GVector(x / norm, y / norm, z / norm)
        o = orientation(g)
        expect = oracle_angles(g.xg, g.yg, g.zg)
        for got, want in zip((o.roll, o.pitch, o.yaw), expect):
            assert abs(got - want) <= 1.0

    @settings(max_examples=1000)
    @given(st.floats(-16, 16), st.floats(-16, 16), st.floats(-16, 16))
    def test_angles_always_in_range(self, x, y, z):
        o = orientation(GVector(x, y, z))
        for v in (o.roll, o.pitch, o.yaw):
            assert 0 <= v <= 360


class TestRms:
    def test_zero(self):
        assert rms_accel(GVector(0, 0, 0)) == 0.0

    def test_symmetric_unit(self):
        assert rms_accel(GVector(1, 1, 1)) == pytest.approx(1.0)

    def test_single_axis(self):
        assert rms_accel(GVector(0, 0, 1)) == pytest.approx(math.sqrt(1 / 3), abs=1e-5)

    @given(st.floats(-16, 16), st.floats(-16, 16), st.floats(-16, 16))
    def test_sign_and_permutation_invariant(self, x, y, z):
        base = rms_accel(GVector(x, y, z))
        assert rms_accel(GVector(-x, -y, -z)) == base
        assert rms_accel(GVector(z, x, y)) == pytest.approx(base)

    @given(st.floats(-16, 16), st.floats(-16, 16), st.floats(-16, 16))
    def test_bounded_by_max_component(self, x, y, z):
        r = rms_accel(GVector(x, y, z))
        peak = max(abs(x), abs(y), abs(z))
        assert r <= peak + 1e-12
        assert peak <= r * math.sqrt(3) + 1e-9


class TestSleepPosition:
    def test_supine_from_flat_on_back(self):
        assert sleep_position(OrientationAngles(180, 270, 180)) is SleepPosition.SUPINE

    def test_left_side(self):
        assert sleep_position(orientation(GVector(0, 1, 0))) is SleepPosition.LEFT_SIDE

    def test_upright(self):
        assert sleep_position(orientation(GVector(1, 0, 0))) is SleepPosition.UPRIGHT

    @pytest.mark.parametrize(
        "g,expected",
        [
            (GVector(0, 0, 1), SleepPosition.SUPINE),
            (GVector(0, 0, -1), SleepPosition.PRONE),
            (GVector(0, 1, 0), SleepPosition.LEFT_SIDE),
            (GVector(0, -1, 0), SleepPosition.RIGHT_SIDE),
            (GVector(1, 0, 0), SleepPosition.UPRIGHT),
            (GVector(-1, 0, 0), SleepPosition.UPRIGHT),
        ],
    )
    def test_axis_aligned_postures(self, g, expected):
        assert sleep_position(orientation(g)) is expected

    @pytest.mark.parametrize(
        "g,expected",
        [
            # dominant axis wins even with off-axis leakage
            (GVector(0.0, 0.9, 0.3), SleepPosition.LEFT_SIDE),
            (GVector(0.0, 0.3, 0.9), SleepPosition.SUPINE),
            (GVector(0.9, 0.3, 0.0), SleepPosition.UPRIGHT),
            (GVector(0.3, 0.0, 0.9), SleepPosition.SUPINE),
            (GVector(0.3, 0.0, -0.9), SleepPosition.PRONE),
            (GVector(0.0, -0.9, -0.3), SleepPosition.RIGHT_SIDE),
        ],
    )
    def test_tilted_postures(self, g, expected):
        assert sleep_position(orientation(g)) is expected

    def test_dominant_axis_recovered_for_clear_tilts(self):
        # any vector with one component at 0.9 and others below 0.35 must
        # classify by that component
        by_axis = {
            0: (SleepPosition.UPRIGHT, SleepPosition.UPRIGHT),
            1: (SleepPosition.LEFT_SIDE, SleepPosition.RIGHT_SIDE),
            2: (SleepPosition.SUPINE, SleepPosition.PRONE),
        }
        steps = [-0.3, -0.15, 0.0, 0.15, 0.3]
        for axis, (pos_label, neg_label) in by_axis.items():
            for a in steps:
                for b in steps:
                    rest = [a, b]
                    for sign, label in ((1.0, pos_label), (-1.0, neg_label)):
                        comps = [0.0, 0.0, 0.0]
                        comps[axis] = 0.9 * sign
                        others = [i for i in range(3) if i != axis]
                        comps[others[0]], comps[others[1]] = rest
                        got = sleep_position(orientation(GVector(*comps)))
                        assert got is label, (comps, got)


THR = 1.4


def cand(now=0):
    state = FallDetectorState()
    state, events = fall_step(state, GVector(2.0, 2.0, 2.0), now)
    assert events == [FallEvent.PROMPT_USER]
    assert state.phase is FallPhase.CANDIDATE
    return state


class TestFallMachine:
    def test_impact_prompts_user(self):
        state = cand()
        assert state.deadline_ms == 15000

    def test_candidate_arms_on_next_step(self):
        state = cand()
        state, events = fall_step(state, GVector(0, 0, 1), 20)
        assert state.phase is FallPhase.AWAITING_CONFIRMATION
        assert events == []

    def test_ok_at_deadline_dismisses(self):
        state = cand()
        state, _ = fall_step(state, GVector(0, 0, 1), 20)
        state, events = fall_step(state, GVector(0, 0, 1), 14999, ok_pressed=True)
        assert events == [FallEvent.FALL_DISMISSED]
        assert state.phase is FallPhase.CLEARED

    def test_silence_past_deadline_confirms(self):
        state = cand()
        state, _ = fall_step(state, GVector(0, 0, 1), 20)
        state, events = fall_step(state, GVector(0, 0, 1), 15001)
        assert events == [FallEvent.FALL_CONFIRMED]
        assert state.phase is FallPhase.CONFIRMED

    def test_quiet_stream_never_leaves_monitoring(self):
        state = FallDetectorState()
        for t in range(0, 10000, 20):
            state, events = fall_step(state, GVector(0.8, 0.8, 0.8), t)
            assert state.phase is FallPhase.MONITORING
            assert events == []

    def test_cooldown_blocks_retrigger_then_releases(self):
        state = cand()
        state, _ = fall_step(state, GVector(0, 0, 1), 20)
        state, _ = fall_step(state, GVector(0, 0, 1), 15001)  # confirmed
        state, events = fall_step(state, GVector(3, 3, 3), 20000)
        assert events == []  # still cooling down
        state, events = fall_step(state, GVector(3, 3, 3), 15001 + 120000)
        assert events == [FallEvent.PROMPT_USER]

    def test_ok_after_deadline_does_not_dismiss(self):
        state = cand()
        state, _ = fall_step(state, GVector(0, 0, 1), 20)
        state, events = fall_step(state, GVector(0, 0, 1), 16000, ok_pressed=True)
        assert events == [FallEvent.FALL_CONFIRMED]

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_confirm_always_preceded_by_prompt(self, data):
        state = FallDetectorState()
        t = 0
        prompted_incidents = 0
        confirmed_incidents = 0
        for _ in range(60):
            t += data.draw(st.integers(1, 9000))
            mag = data.draw(st.floats(0, 3))
            ok = data.draw(st.booleans())
            state, events = fall_step(state, GVector(mag, mag, mag), t, ok_pressed=ok)
            for ev in events:
                if ev is FallEvent.PROMPT_USER:
                    prompted_incidents += 1
                if ev is FallEvent.FALL_CONFIRMED:
                    confirmed_incidents += 1
                assert confirmed_incidents <= prompted_incidents
