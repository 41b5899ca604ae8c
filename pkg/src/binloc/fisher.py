"""Fisher information and Cramer-Rao bounds for a Poisson field of
binary detectors.

Sensors form a homogeneous planar Poisson process of density rho around
the emitter; each reports only its one-bit decision.  The parameter
vector is theta = (P, x_T, y_T).  A single sensor at range r and bearing
psi contributes the rank-one information matrix

    F_i = v v^T / (P_D (1 - P_D)),
    v = (dP_D/dP, -cos(psi) dP_D/dr, -sin(psi) dP_D/dr),

the bearing entering through dr/dx_T = -cos(psi), dr/dy_T = -sin(psi).
Averaging over the field (and over the bearing, which kills every
off-diagonal term) gives a diagonal expected information whose entries
reduce to one-dimensional integrals over the signal coordinate
x = sqrt(T P / (sigma2 r^alpha)):

    F11 = c11 * int_0^xb x^(1-4/alpha) e^(-x^2-t^2) I1(xt)^2 / (Q(1-Q)) dx
    F22 = F33
        = c22 * int_0^xb x          e^(-x^2-t^2) I1(xt)^2 / (Q(1-Q)) dx

with c11 = 2 pi^2 t^2 rho T^(2/alpha) P^(2/alpha - 2) / (alpha sigma2^(2/alpha)),
c22 = pi^2 rho alpha t^2, Q = Q1(x, t), and xb the signal coordinate at
the expected nearest-sensor distance rb = 1/sqrt(4 rho) (the integration
is truncated there: closer sensors are present in less than half the
fields, and including them would claim information a typical realization
does not carry).  The integrand is assembled in log space so that the
1/(1-Q) factor stays usable far past the point where 1 - Q underflows.

The bounds are CRB_P = 1/F11 and CRB_x = CRB_y = 1/F22.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import specfun
from .detection import (DetectorConfig, TargetParams, detection_probability,
                        detection_probability_derivatives)

__all__ = [
    "FieldConfig",
    "QuadratureSpec",
    "FisherResult",
    "QuadratureError",
    "rmin_expected",
    "x_breve",
    "per_sensor_fim",
    "expected_fim_quadrature",
    "expected_f22_r_domain",
    "offdiag_quadrature_estimate",
]

# exp() underflow threshold for assembling integrands from log values
_LOG_TINY = -745.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed its own error target; the best estimate
    is carried in the ``estimate`` attribute."""

    def __init__(self, message: str, estimate: float = math.nan):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class FieldConfig:
    """Sensor field: Poisson density rho (sensors per unit area).

    r_breve_override substitutes the inner truncation radius of the
    expected-information integrals for sensitivity studies; by default
    the expected nearest-sensor distance 1/sqrt(4 rho) is used.
    """

    rho: float
    r_breve_override: float | None = None

    def __post_init__(self) -> None:
        rho = float(self.rho)
        if not (math.isfinite(rho) and rho > 0.0):
            raise ValueError(f"rho must be finite and > 0, got {rho!r}")
        if self.r_breve_override is not None:
            rb = float(self.r_breve_override)
            if not (math.isfinite(rb) and rb > 0.0):
                raise ValueError(
                    f"r_breve_override must be finite and > 0, got {rb!r}")

    @property
    def r_breve(self) -> float:
        if self.r_breve_override is not None:
            return float(self.r_breve_override)
        return 1.0 / math.sqrt(4.0 * self.rho)


def rmin_expected(field: FieldConfig) -> float:
    """Mean distance from any fixed point to the nearest sensor of the
    Poisson field: the nearest-distance law is Rayleigh with CDF
    1 - exp(-rho pi r^2), whose mean is 1/sqrt(4 rho)."""
    return 1.0 / math.sqrt(4.0 * float(field.rho))


@dataclass(frozen=True)
class QuadratureSpec:
    """Error control for the adaptive quadratures."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be > 0")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be >= 10")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class FisherResult:
    """Expected Fisher information and the implied Cramer-Rao bounds.

    F22 == F33 by the circular symmetry of the field; off-diagonals are
    exact zeros (the bearing integrals vanish), so offdiag_max_abs is 0
    unless filled in by an explicit 2-D cross-check.  method records how
    the numbers were produced ("quadrature" or "closed-form"); m is the
    series order for the closed form; quality flags suspect closed-form
    output ("ok" otherwise).
    """

    F11: float
    F22: float
    F33: float
    offdiag_max_abs: float
    method: str
    m: int | None = None
    quality: str = "ok"

    @property
    def crb_P(self) -> float:
        return 1.0 / self.F11 if self.F11 > 0.0 else math.inf

    @property
    def crb_x(self) -> float:
        return 1.0 / self.F22 if self.F22 > 0.0 else math.inf

    @property
    def crb_y(self) -> float:
        return 1.0 / self.F33 if self.F33 > 0.0 else math.inf


def x_breve(cfg: DetectorConfig, P: float, field: FieldConfig) -> float:
    """Signal coordinate at the inner truncation radius r_breve."""
    rb = field.r_breve
    return math.sqrt(cfg.T * float(P) / (cfg.sigma2 * rb ** cfg.alpha))


# ----------------------------------------------------------------------
# single-sensor information
# ----------------------------------------------------------------------

def per_sensor_fim(cfg: DetectorConfig, theta: TargetParams,
                   sensor_x: float, sensor_y: float) -> np.ndarray:
    """3x3 information matrix contributed by one sensor (rank one, PSD).

    Ordering (P, x_T, y_T).  Raises if the sensor sits exactly at the
    hypothesized emitter position.
    """
    dx = float(sensor_x) - theta.x
    dy = float(sensor_y) - theta.y
    r = math.hypot(dx, dy)
    if r == 0.0:
        raise ValueError("sensor coincides with the emitter position")
    d_dr, d_dP = detection_probability_derivatives(cfg, theta.P, r)
    xcoord = math.sqrt(cfg.T * theta.P / (cfg.sigma2 * r ** cfg.alpha))
    t = cfg.threshold_coordinate
    # 1 / (P_D (1 - P_D)) assembled from log tails; the weight alone can
    # overflow for very close sensors even though the full product
    # w * v v^T decays there, so fold the scale of v into the exponent
    log_w = -(specfun.log_marcum_q(xcoord, t) + specfun.log1m_marcum_q(xcoord, t))
    cos_psi = dx / r
    sin_psi = dy / r
    v = np.array([d_dP, -cos_psi * d_dr, -sin_psi * d_dr])
    scale = float(np.max(np.abs(v)))
    if scale == 0.0:
        return np.zeros((3, 3))
    unit = v / scale
    return math.exp(log_w + 2.0 * math.log(scale)) * np.outer(unit, unit)


# ----------------------------------------------------------------------
# expected information over the field
# ----------------------------------------------------------------------

def _log_kernel(x: float, t: float, power: float) -> float:
    """log of x^power * e^(-x^2-t^2) I1(xt)^2 / (Q (1-Q)) at signal
    coordinate x."""
    if x <= 0.0:
        return -math.inf
    z = x * t
    i1e = specfun.bessel_i_scaled(1, z)
    if i1e <= 0.0:
        return -math.inf
    return (power * math.log(x) + 2.0 * math.log(i1e) - (x - t) ** 2
            - specfun.log_marcum_q(x, t)
            - specfun.log1m_marcum_q(x, t))


def _integrate_log(log_f: Callable[[float], float], lo: float, hi: float,
                   spec: QuadratureSpec,
                   breakpoints: Sequence[float] = ()) -> float:
    def f(u: float) -> float:
        lg = log_f(u)
        return math.exp(lg) if lg > _LOG_TINY else 0.0

    pts = sorted(p for p in breakpoints if lo < p < hi)
    value, err = integrate.quad(f, lo, hi,
                                epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                limit=spec.max_subdivisions,
                                points=pts or None)
    if not math.isfinite(value) or err > 1e3 * max(spec.abs_tol,
                                                   spec.rel_tol * abs(value)):
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} too large for value "
            f"{value:.6e} on [{lo:g}, {hi:g}]", estimate=value)
    return value


def _x_breakpoints(t: float, xb: float) -> list[float]:
    # integrand peaks where Q(1-Q) is largest (x near t) and dies off a
    # few units past it; guide the subdivision on wide intervals
    return [t, t + 8.0, t + 20.0, 0.5 * xb]


def expected_fim_quadrature(cfg: DetectorConfig, P: float, field: FieldConfig,
                            quad: QuadratureSpec = DEFAULT_QUADRATURE
                            ) -> FisherResult:
    """Expected Fisher information by adaptive quadrature over the signal
    coordinate on (0, x_breve]."""
    P = float(P)
    if not (math.isfinite(P) and P > 0.0):
        raise ValueError(f"P must be finite and > 0, got {P!r}")
    t = cfg.threshold_coordinate
    xb = x_breve(cfg, P, field)
    alpha = cfg.alpha
    pts = _x_breakpoints(t, xb)

    i11 = _integrate_log(lambda x: _log_kernel(x, t, 1.0 - 4.0 / alpha),
                         0.0, xb, quad, pts)
    i22 = _integrate_log(lambda x: _log_kernel(x, t, 1.0),
                         0.0, xb, quad, pts)

    c11 = (2.0 * math.pi ** 2 * t * t * field.rho
           * cfg.T ** (2.0 / alpha) * P ** (2.0 / alpha - 2.0)
           / (alpha * cfg.sigma2 ** (2.0 / alpha)))
    c22 = math.pi ** 2 * field.rho * alpha * t * t
    f11 = c11 * i11
    f22 = c22 * i22
    return FisherResult(F11=f11, F22=f22, F33=f22, offdiag_max_abs=0.0,
                        method="quadrature")


def expected_f22_r_domain(cfg: DetectorConfig, P: float, field: FieldConfig,
                          quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """F22 evaluated directly in the range domain,

        F22 = 2 pi^2 rho int_rb^inf (dP_D/dr)^2 r / (Q(1-Q)) dr,

    as an independent cross-check of the x-domain route."""
    P = float(P)
    if not (math.isfinite(P) and P > 0.0):
        raise ValueError(f"P must be finite and > 0, got {P!r}")
    t = cfg.threshold_coordinate
    rb = field.r_breve
    alpha = cfg.alpha
    scale = cfg.T * P / cfg.sigma2

    def log_f(r: float) -> float:
        if r <= 0.0:
            return -math.inf
        x = math.sqrt(scale / r ** alpha)
        z = x * t
        i1e = specfun.bessel_i_scaled(1, z)
        if i1e <= 0.0:
            return -math.inf
        # (alpha t x / 2r)^2 I1^2 e^{-(x^2+t^2)} * r / (Q(1-Q))
        return (2.0 * math.log(alpha * t * x / 2.0) - math.log(r)
                + 2.0 * math.log(i1e) - (x - t) ** 2
                - specfun.log_marcum_q(x, t)
                - specfun.log1m_marcum_q(x, t))

    # the kernel peaks near the range where x(r) = t; split there, and
    # push the outer limit far enough that the power-law tail is dust
    r_peak = (scale / (t * t)) ** (1.0 / alpha)
    r_hi = max(1e4 * rb, 1e3 * r_peak)
    pts = [r_peak, 4.0 * r_peak, 20.0 * r_peak]
    value = _integrate_log(log_f, rb, r_hi, quad, pts)
    # analytic bound on the discarded tail: for x << 1 the kernel is
    # ~ alpha^2 t^4 x^4 / (16 r) / floor(1-floor); x^4 = scale^2 r^(-2 alpha)
    floor = cfg.false_alarm_probability
    tail = (2.0 * math.pi ** 2 * field.rho * alpha * t ** 4 * scale ** 2
            / (16.0 * floor * (1.0 - floor) * 2.0 * alpha * r_hi ** (2.0 * alpha)))
    if tail > 1e-6 * abs(value):
        raise QuadratureError(
            f"outer truncation too aggressive: tail bound {tail:.3e} vs "
            f"value {value:.6e}", estimate=value)
    return 2.0 * math.pi ** 2 * field.rho * value


def offdiag_quadrature_estimate(cfg: DetectorConfig, P: float,
                                field: FieldConfig,
                                n_r: int = 192, n_psi: int = 64,
                                r_outer: float | None = None) -> float:
    """Largest |entry| among 2-D tensor-product Gauss-Legendre estimates
    of the three off-diagonal expected-information integrals

        F12 = -2 pi rho int int (dP_D/dP)(dP_D/dr) cos(psi) / (Q(1-Q)) r dr dpsi
        F13 = (same with sin), F23 = 2 pi rho int int (dP_D/dr)^2 sin cos ... ,

    which all vanish analytically.  Returned for use as a numerical
    cross-check against F22."""
    P = float(P)
    rb = field.r_breve
    if r_outer is None:
        r_outer = 200.0 * rb
    # radial factors, evaluated once per node
    nodes_r, weights_r = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (r_outer - rb) * (nodes_r + 1.0) + rb
    wr = 0.5 * (r_outer - rb) * weights_r
    a = np.empty_like(r)   # dP_D/dr
    b = np.empty_like(r)   # dP_D/dP
    w = np.empty_like(r)   # 1 / (Q (1 - Q))
    t = cfg.threshold_coordinate
    for i, ri in enumerate(r):
        a[i], b[i] = detection_probability_derivatives(cfg, P, float(ri))
        x = math.sqrt(cfg.T * P / (cfg.sigma2 * float(ri) ** cfg.alpha))
        lw = -(specfun.log_marcum_q(x, t) + specfun.log1m_marcum_q(x, t))
        w[i] = math.exp(lw)
    nodes_p, weights_p = np.polynomial.legendre.leggauss(n_psi)
    psi = math.pi * (nodes_p + 1.0)
    wp = math.pi * weights_p

    rho = field.rho
    # tensor-product sums; the angular factor integrates to ~0
    f12 = 2.0 * math.pi * rho * np.sum(
        (wr * r * a * b * w)[:, None] * (wp * (-np.cos(psi)))[None, :])
    f13 = 2.0 * math.pi * rho * np.sum(
        (wr * r * a * b * w)[:, None] * (wp * (-np.sin(psi)))[None, :])
    f23 = 2.0 * math.pi * rho * np.sum(
        (wr * r * a * a * w)[:, None] * (wp * np.sin(psi) * np.cos(psi))[None, :])
    return float(max(abs(f12), abs(f13), abs(f23)))
