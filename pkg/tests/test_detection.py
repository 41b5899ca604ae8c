"""Tests for the binary detection model: detection probability versus
range, its derivatives, the vectorized evaluation used in simulation, and
the decision log-likelihood."""

from __future__ import annotations

import math

import numpy as np
import pytest

from binloc import specfun
from binloc.detection import (
    DecisionRecord,
    DetectorConfig,
    TargetParams,
    detection_probability,
    detection_probability_array,
    detection_probability_derivatives,
    log_likelihood,
    signal_coordinate,
)

# Reference operating point used throughout: tau = 0.5, sigma2 = 0.25,
# T = 1, alpha = 2, P = 2.
_CFG = DetectorConfig(tau=0.5, sigma2=0.25)
_P = 2.0

# Frozen value of P_D(r = 1) at the reference point (40-digit evaluation
# of Q1(sqrt(8), 2)).
_PD_AT_UNIT_RANGE = 0.8519363569424107

_FD_STEP = 1e-6


def test_threshold_coordinate_and_floor():
    assert _CFG.threshold_coordinate == pytest.approx(2.0, rel=1e-15)
    assert _CFG.false_alarm_probability == pytest.approx(math.exp(-2.0), rel=1e-15)
    other = DetectorConfig(tau=1.2, sigma2=0.3)
    assert other.threshold_coordinate == pytest.approx(math.sqrt(8.0), rel=1e-15)
    assert other.false_alarm_probability == pytest.approx(math.exp(-4.0), rel=1e-15)


def test_config_validation():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            DetectorConfig(tau=bad, sigma2=0.25)
        with pytest.raises(ValueError):
            DetectorConfig(tau=0.5, sigma2=bad)
        with pytest.raises(ValueError):
            DetectorConfig(tau=0.5, sigma2=0.25, T=bad)
    with pytest.raises(ValueError):
        DetectorConfig(tau=0.5, sigma2=0.25, alpha=0.8)
    with pytest.raises(ValueError):
        DetectorConfig(tau=0.5, sigma2=0.25, alpha=math.inf)
    # alpha = 1 is the allowed lower edge
    DetectorConfig(tau=0.5, sigma2=0.25, alpha=1.0)


def test_target_params_validation():
    TargetParams(P=2.0, x=0.0, y=-3.5)
    with pytest.raises(ValueError):
        TargetParams(P=0.0, x=0.0, y=0.0)
    with pytest.raises(ValueError):
        TargetParams(P=2.0, x=math.inf, y=0.0)
    with pytest.raises(ValueError):
        TargetParams(P=2.0, x=0.0, y=math.nan)


def test_signal_coordinate_values():
    # x = sqrt(T P / (sigma2 r^alpha))
    assert signal_coordinate(_CFG, _P, 1.0) == pytest.approx(
        math.sqrt(8.0), rel=1e-15
    )
    assert signal_coordinate(_CFG, _P, 2.0) == pytest.approx(
        math.sqrt(2.0), rel=1e-15
    )
    quartic = DetectorConfig(tau=0.5, sigma2=0.25, alpha=4.0)
    assert signal_coordinate(quartic, _P, 2.0) == pytest.approx(
        math.sqrt(0.5), rel=1e-15
    )
    with pytest.raises(ValueError):
        signal_coordinate(_CFG, _P, 0.0)
    with pytest.raises(ValueError):
        signal_coordinate(_CFG, _P, -1.0)
    with pytest.raises(ValueError):
        signal_coordinate(_CFG, 0.0, 1.0)


def test_detection_probability_reference_value():
    assert detection_probability(_CFG, _P, 1.0) == pytest.approx(
        _PD_AT_UNIT_RANGE, rel=1e-12
    )


def test_detection_probability_limits():
    # short range -> certain detection; long range -> false-alarm floor
    assert detection_probability(_CFG, _P, 1e-12) == pytest.approx(1.0, abs=1e-12)
    floor = _CFG.false_alarm_probability
    assert detection_probability(_CFG, _P, 1e9) == pytest.approx(floor, rel=1e-9)
    # the floor is approached from above
    assert detection_probability(_CFG, _P, 500.0) > floor


def test_detection_probability_monotone_in_range_and_power():
    rs = np.linspace(0.2, 30.0, 40)
    pd = [detection_probability(_CFG, _P, float(r)) for r in rs]
    assert all(a > b for a, b in zip(pd, pd[1:]))
    powers = np.linspace(0.5, 8.0, 20)
    pp = [detection_probability(_CFG, float(p), 2.0) for p in powers]
    assert all(a < b for a, b in zip(pp, pp[1:]))


def test_detection_probability_array_matches_scalar():
    rs = np.array([0.05, 0.31, 1.0, 2.7, 10.0, 400.0])
    vec = detection_probability_array(_CFG, _P, rs)
    ref = np.array([detection_probability(_CFG, _P, float(r)) for r in rs])
    np.testing.assert_allclose(vec, ref, rtol=1e-11)
    assert detection_probability_array(_CFG, _P, np.array([])).shape == (0,)


def test_detection_probability_array_handles_very_close_sensors():
    # entries beyond the vectorized noncentrality cap defer to the scalar
    # log-domain path and must still agree with it
    rs = np.array([1e-4, 5e-4, 1.0])
    vec = detection_probability_array(_CFG, _P, rs)
    ref = np.array([detection_probability(_CFG, _P, float(r)) for r in rs])
    np.testing.assert_allclose(vec, ref, rtol=1e-11)
    assert vec[0] == 1.0


def test_detection_probability_array_rejects_bad_ranges():
    for bad in ([0.0], [-1.0], [math.inf], [math.nan]):
        with pytest.raises(ValueError):
            detection_probability_array(_CFG, _P, np.array(bad))


@pytest.mark.parametrize("alpha", [2.0, 4.0])
@pytest.mark.parametrize("r", [0.5, 1.0, 2.5, 8.0])
def test_derivatives_match_finite_differences(alpha, r):
    cfg = DetectorConfig(tau=0.5, sigma2=0.25, alpha=alpha)
    dr, dp = detection_probability_derivatives(cfg, _P, r)
    if 1.0 - detection_probability(cfg, _P, r) < 1e-9:
        # detection is saturated: P_D is 1 to double precision, a finite
        # difference reads only rounding noise; the true slopes are tiny
        assert abs(dr) < 1e-9 and abs(dp) < 1e-9
        return
    h = _FD_STEP
    fd_r = (
        detection_probability(cfg, _P, r + h)
        - detection_probability(cfg, _P, r - h)
    ) / (2.0 * h)
    fd_p = (
        detection_probability(cfg, _P + h, r)
        - detection_probability(cfg, _P - h, r)
    ) / (2.0 * h)
    assert dr == pytest.approx(fd_r, rel=1e-6, abs=1e-10)
    assert dp == pytest.approx(fd_p, rel=1e-6, abs=1e-10)


@pytest.mark.parametrize("alpha", [2.0, 3.0, 4.0])
def test_radial_and_power_slopes_locked_by_scaling(alpha):
    # r dP_D/dr = -alpha P dP_D/dP exactly, for any alpha
    cfg = DetectorConfig(tau=0.7, sigma2=0.3, alpha=alpha)
    for r in (0.4, 1.3, 6.0):
        dr, dp = detection_probability_derivatives(cfg, _P, r)
        assert r * dr == pytest.approx(-alpha * _P * dp, rel=1e-13)
        assert dr < 0.0 < dp


def test_power_slope_consistent_with_marcum_derivative():
    # dP_D/dP = dQ1/da (x, t) * x / (2 P)
    x = signal_coordinate(_CFG, _P, 1.7)
    t = _CFG.threshold_coordinate
    _, dp = detection_probability_derivatives(_CFG, _P, 1.7)
    assert dp == pytest.approx(
        specfun.marcum_q_da(x, t) * x / (2.0 * _P), rel=1e-12
    )


# ----------------------------------------------------------------------
# decision log-likelihood
# ----------------------------------------------------------------------

def _manual_log_likelihood(cfg, theta, records):
    total = 0.0
    for rec in records:
        r = math.hypot(rec.x - theta.x, rec.y - theta.y)
        q = detection_probability(cfg, theta.P, r)
        total += math.log(q) if rec.detected else math.log1p(-q)
    return total


def test_log_likelihood_matches_scalar_sum():
    theta = TargetParams(P=2.0, x=0.5, y=-1.0)
    records = [
        DecisionRecord(x=1.0, y=0.0, detected=True),
        DecisionRecord(x=-2.0, y=3.0, detected=False),
        DecisionRecord(x=4.0, y=4.0, detected=False),
        DecisionRecord(x=0.0, y=-1.5, detected=True),
    ]
    got = log_likelihood(_CFG, theta, records)
    assert got == pytest.approx(_manual_log_likelihood(_CFG, theta, records), rel=1e-10)
    assert got <= 0.0


def test_log_likelihood_empty_is_zero():
    assert log_likelihood(_CFG, TargetParams(P=2.0, x=0.0, y=0.0), []) == 0.0


def test_log_likelihood_accepts_iterables():
    theta = TargetParams(P=2.0, x=0.0, y=0.0)
    records = (DecisionRecord(x=1.0, y=1.0, detected=True) for _ in range(1))
    assert log_likelihood(_CFG, theta, records) < 0.0


def test_log_likelihood_far_miss_stays_finite():
    # a non-detection right next to the hypothesized emitter is extremely
    # unlikely but must stay finite (P_D < 1 at any positive range)
    theta = TargetParams(P=2.0, x=0.0, y=0.0)
    rec = [DecisionRecord(x=1e-3, y=0.0, detected=False)]
    val = log_likelihood(_CFG, theta, rec)
    assert math.isfinite(val)
    assert val < -1e4


def test_log_likelihood_sensor_at_hypothesis_point():
    # a sensor exactly at the hypothesized position sees an infinite
    # signal coordinate: certain detection
    theta = TargetParams(P=2.0, x=1.0, y=-2.0)
    hit = [DecisionRecord(x=1.0, y=-2.0, detected=True)]
    miss = [DecisionRecord(x=1.0, y=-2.0, detected=False)]
    assert log_likelihood(_CFG, theta, hit) == 0.0
    assert log_likelihood(_CFG, theta, miss) == -math.inf


def test_log_likelihood_peaks_near_truth():
    # decisions generated noiselessly from the truth should prefer the
    # truth over a displaced hypothesis
    truth = TargetParams(P=2.0, x=0.0, y=0.0)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-6.0, 6.0, size=(40, 2))
    records = []
    for px, py in pts:
        r = math.hypot(px, py)
        q = detection_probability(_CFG, truth.P, r)
        records.append(DecisionRecord(x=px, y=py, detected=bool(q > 0.5)))
    ll_truth = log_likelihood(_CFG, truth, records)
    ll_off = log_likelihood(_CFG, TargetParams(P=2.0, x=3.0, y=3.0), records)
    assert ll_truth > ll_off
