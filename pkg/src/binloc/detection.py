"""Non-coherent binary detection of an RF emitter.

Each sensor integrates received energy over T seconds and compares it with
a threshold tau.  With free-space-like path loss r^(-alpha), noise power
sigma2 per complex dimension and emitter power P at unit distance, the
detection probability at range r is

    P_D(r) = Q1(x, t),   x = sqrt(T P / (sigma2 r^alpha)),
                         t = sqrt(2 tau / sigma2),

where Q1 is the first-order Marcum Q function.  As r -> inf this decays to
the false-alarm floor exp(-tau/sigma2) = exp(-t^2/2); x is the effective
signal coordinate and t the threshold coordinate used throughout.

The partial derivatives follow from dQ1/dx = t I1(x t) exp(-(x^2+t^2)/2):

    dP_D/dr = -(alpha t x / 2 r) exp(-(t^2+x^2)/2) I1(t x)
    dP_D/dP = +(t x / 2 P)       exp(-(t^2+x^2)/2) I1(t x)

so r dP_D/dr = -alpha P dP_D/dP identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import specfun
from .specfun import Accuracy, DEFAULT_ACCURACY

__all__ = [
    "DetectorConfig",
    "TargetParams",
    "DecisionRecord",
    "signal_coordinate",
    "detection_probability",
    "detection_probability_array",
    "detection_probability_derivatives",
    "log_likelihood",
]

# Entries whose noncentrality (x^2/2) exceeds this take the scalar
# log-domain path inside the vectorized Marcum evaluation.
_VEC_LAMBDA_MAX = 512.0

# Detection probabilities this close to 0 or 1 get their logarithms from
# the dedicated tail routines instead of log(q) / log1p(-q).
_EDGE_LO = 1e-250
_EDGE_HI = 1e-11


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")
    return value


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class DetectorConfig:
    """Sensor-side constants: threshold tau, noise power sigma2,
    integration time T and path-loss exponent alpha (>= 1)."""

    tau: float
    sigma2: float
    T: float = 1.0
    alpha: float = 2.0

    def __post_init__(self) -> None:
        _positive("tau", self.tau)
        _positive("sigma2", self.sigma2)
        _positive("T", self.T)
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and alpha >= 1.0):
            raise ValueError(f"alpha must be finite and >= 1, got {alpha!r}")

    @property
    def threshold_coordinate(self) -> float:
        """t = sqrt(2 tau / sigma2)."""
        return math.sqrt(2.0 * self.tau / self.sigma2)

    @property
    def false_alarm_probability(self) -> float:
        """Large-range detection floor exp(-tau/sigma2)."""
        return math.exp(-self.tau / self.sigma2)


@dataclass(frozen=True)
class TargetParams:
    """Emitter parameters: power P at unit distance and plane position."""

    P: float
    x: float
    y: float

    def __post_init__(self) -> None:
        _positive("P", self.P)
        _finite("x", self.x)
        _finite("y", self.y)


@dataclass(frozen=True)
class DecisionRecord:
    """One sensor's position and its binary decision."""

    x: float
    y: float
    detected: bool


def signal_coordinate(cfg: DetectorConfig, P: float, r: float) -> float:
    """x = sqrt(T P / (sigma2 r^alpha)) for r > 0."""
    P = _positive("P", P)
    r = float(r)
    if not (math.isfinite(r) and r > 0.0):
        raise ValueError(f"r must be finite and > 0, got {r!r}")
    return math.sqrt(cfg.T * P / (cfg.sigma2 * r ** cfg.alpha))


def detection_probability(cfg: DetectorConfig, P: float, r: float,
                          acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """P_D at range r; strictly within (0, 1] for finite arguments."""
    x = signal_coordinate(cfg, P, r)
    return specfun.marcum_q(x, cfg.threshold_coordinate, acc)


def detection_probability_derivatives(cfg: DetectorConfig, P: float,
                                      r: float,
                                      acc: Accuracy = DEFAULT_ACCURACY
                                      ) -> tuple[float, float]:
    """(dP_D/dr, dP_D/dP) at range r.

    Shares the single Bessel evaluation: with core =
    (t x / 2) exp(-(x - t)^2 / 2) * [exp(-xt) I1(xt)], the radial slope is
    -alpha/r * core and the power slope is core / P.
    """
    P = _positive("P", P)
    x = signal_coordinate(cfg, P, r)
    t = cfg.threshold_coordinate
    core = 0.5 * t * x * specfun.bessel_i_scaled(1, x * t, acc) \
        * math.exp(-0.5 * (x - t) ** 2)
    return (-cfg.alpha / r * core, core / P)


# ----------------------------------------------------------------------
# vectorized evaluation (hot path for simulation and field-level checks)
# ----------------------------------------------------------------------

def _marcum_q_vec(x: np.ndarray, t: float) -> np.ndarray:
    """Q1(x_i, t) for an array of signal coordinates, one shared series
    sweep in linear space; very noncentral entries defer to the scalar
    log-domain evaluation."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=float)
    lam = 0.5 * x * x
    y = 0.5 * t * t
    big = lam > _VEC_LAMBDA_MAX
    if big.any():
        out[big] = [specfun.marcum_q(float(v), t) for v in x[big]]
    rest = ~big
    if rest.any():
        lam_r = lam[rest]
        lam_max = float(lam_r.max())
        pois = np.exp(-lam_r)
        cum = pois.copy()               # Poisson mass accumulated so far
        gterm = math.exp(-y)
        gupper = gterm
        q = pois * gupper
        k_min = int(max(lam_max, math.sqrt(lam_max * y))) + 2
        k_stop = k_min + int(10.0 * math.sqrt(lam_max + 1.0)) + 60
        for k in range(1, k_stop + 1):
            pois *= lam_r / k
            cum += pois
            gterm *= y / k
            gupper += gterm
            q += pois * gupper
            if k >= k_min and float(cum.min()) > 1.0 - 1e-16:
                break
        out[rest] = np.minimum(q, 1.0)
    return out


def _log_q_pair_vec(x: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(log P_D, log(1 - P_D)) element-wise, safe at both edges."""
    q = _marcum_q_vec(x, t)
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
        log_1mq = np.log1p(-q)
    lo = q < _EDGE_LO
    hi = (1.0 - q) < _EDGE_HI
    for idx in np.flatnonzero(lo):
        log_q[idx] = specfun.log_marcum_q(float(x.flat[idx]), t)
    for idx in np.flatnonzero(hi):
        log_1mq[idx] = specfun.log1m_marcum_q(float(x.flat[idx]), t)
    return log_q, log_1mq


def detection_probability_array(cfg: DetectorConfig, P: float,
                                r: np.ndarray) -> np.ndarray:
    """Vectorized P_D over an array of ranges (all > 0)."""
    P = _positive("P", P)
    r = np.asarray(r, dtype=float)
    if r.size and (not np.all(np.isfinite(r)) or np.any(r <= 0.0)):
        raise ValueError("all ranges must be finite and > 0")
    x = np.sqrt(cfg.T * P / (cfg.sigma2 * r ** cfg.alpha))
    return _marcum_q_vec(x, cfg.threshold_coordinate)


def _signal_coordinate_vec(cfg: DetectorConfig, P: float,
                           r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.sqrt(cfg.T * P / (cfg.sigma2 * r ** cfg.alpha))


def _log_likelihood_arrays(cfg: DetectorConfig, P: float, x0: float, y0: float,
                           sx: np.ndarray, sy: np.ndarray,
                           detected: np.ndarray) -> float:
    """Log-likelihood of binary decisions at sensor positions (sx, sy)
    for emitter hypothesis (P, x0, y0).  Total in the hypothesis: a
    sensor coinciding with it sees an infinite signal coordinate, hence
    certain detection (contribution 0 if it detected, -inf otherwise)."""
    r = np.hypot(sx - x0, sy - y0)
    x = _signal_coordinate_vec(cfg, P, r)
    log_q, log_1mq = _log_q_pair_vec(x, cfg.threshold_coordinate)
    return float(np.where(detected, log_q, log_1mq).sum())


def log_likelihood(cfg: DetectorConfig, theta: TargetParams,
                   records: Sequence[DecisionRecord] | Iterable[DecisionRecord]
                   ) -> float:
    """Sum of log P_D over detecting records plus log(1 - P_D) over the
    rest, under emitter hypothesis theta.  Always <= 0."""
    recs = list(records)
    if not recs:
        return 0.0
    sx = np.array([rec.x for rec in recs], dtype=float)
    sy = np.array([rec.y for rec in recs], dtype=float)
    det = np.array([bool(rec.detected) for rec in recs], dtype=bool)
    return _log_likelihood_arrays(cfg, theta.P, theta.x, theta.y, sx, sy, det)
