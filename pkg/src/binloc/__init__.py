"""Localization bounds for an RF emitter observed by binary energy
detectors.

A fusion center collects one-bit decisions (received energy above or
below a threshold) from sensors scattered as a spatial Poisson process
and estimates the emitter's transmit power and plane position.  This
package computes the exact expected Fisher information and Cramer-Rao
bounds for that problem by adaptive quadrature, an analytic closed-form
approximation built from a quadratic surrogate of the log-likelihood
weight, and validates both against a reproducible Monte-Carlo
maximum-likelihood campaign.

Modules
-------
specfun     scalar special functions (Marcum Q, Bessel I, incomplete gamma)
detection   single-sensor detection model and decision likelihoods
fisher      expected Fisher information by quadrature; CRBs
closedform  analytic approximation of the information integrals
montecarlo  field sampling, ML estimation, MSE-vs-CRB campaigns
cli         command-line front end (``binloc crb | simulate | check``)
"""

from __future__ import annotations

from .closedform import (ModelInvalid, TaylorModel, UnsupportedAlpha,
                         build_taylor_model, closed_form_fisher,
                         default_series_order, f11_closed_form,
                         f22_closed_form)
from .detection import (DecisionRecord, DetectorConfig, TargetParams,
                        detection_probability, detection_probability_array,
                        detection_probability_derivatives, log_likelihood,
                        signal_coordinate)
from .fisher import (FieldConfig, FisherResult, QuadratureError,
                     QuadratureSpec, expected_f22_r_domain,
                     expected_fim_quadrature, offdiag_quadrature_estimate,
                     per_sensor_fim, rmin_expected, x_breve)
from .montecarlo import (AllTrialsFailed, MseReport, NoDetections,
                         OptimizerDiverged, SimConfig, TrialResult,
                         default_region_radius, far_field_excess,
                         initial_guess, ml_estimate, mse_report,
                         nearest_distance_samples, run_campaign,
                         sample_decisions, sample_field)
from .specfun import (Accuracy, bessel_i, bessel_i_scaled, log1m_marcum_q,
                      log_marcum_q, lower_gamma, marcum_q, marcum_q_da,
                      marcum_q_daa, upper_gamma)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # special functions
    "Accuracy", "bessel_i", "bessel_i_scaled", "marcum_q", "log_marcum_q",
    "log1m_marcum_q", "marcum_q_da", "marcum_q_daa", "upper_gamma",
    "lower_gamma",
    # detection model
    "DetectorConfig", "TargetParams", "DecisionRecord", "signal_coordinate",
    "detection_probability", "detection_probability_array",
    "detection_probability_derivatives", "log_likelihood",
    # Fisher information / CRB
    "FieldConfig", "FisherResult", "QuadratureError", "QuadratureSpec",
    "expected_fim_quadrature", "expected_f22_r_domain",
    "offdiag_quadrature_estimate", "per_sensor_fim", "rmin_expected",
    "x_breve",
    # closed form
    "TaylorModel", "ModelInvalid", "UnsupportedAlpha", "build_taylor_model",
    "closed_form_fisher", "default_series_order", "f11_closed_form",
    "f22_closed_form",
    # simulation
    "SimConfig", "TrialResult", "MseReport", "NoDetections",
    "OptimizerDiverged", "AllTrialsFailed", "default_region_radius",
    "far_field_excess", "sample_field", "sample_decisions",
    "nearest_distance_samples", "initial_guess", "ml_estimate",
    "run_campaign", "mse_report",
]
