"""Cramer-Rao bounds versus detection threshold.

Sweeps tau at the reference operating point (P=2, T=1, sigma2=0.25,
rho=0.05, alpha=2) and prints the power bound crb_P = 1/F11 and the
coordinate bound crb_x = 1/F22 from both routes: adaptive quadrature of
the exact information integrals and the analytic closed form built on a
quadratic surrogate.  Both bounds blow up at small tau (every sensor
fires, bits carry no range information) and at large tau (no sensor
fires), with an interior optimum near tau = 0.4.

Run:  python3 demos/threshold_sweep.py

The same table is available from the command line:
    binloc crb --set sweep.step=0.05 --out sweep.csv
"""

from __future__ import annotations

from binloc import (DetectorConfig, FieldConfig, closed_form_fisher,
                    expected_fim_quadrature)

FIELD = FieldConfig(rho=0.05)
P = 2.0
TAUS = [round(0.1 + 0.05 * k, 10) for k in range(39)]


def main() -> None:
    print(f"{'tau':>5} {'crb_P quad':>12} {'crb_P cf':>12} "
          f"{'crb_x quad':>12} {'crb_x cf':>12}")
    best_tau, best_crb_x = None, float("inf")
    for tau in TAUS:
        det = DetectorConfig(tau=tau, sigma2=0.25, T=1.0, alpha=2.0)
        quad = expected_fim_quadrature(det, P, FIELD)
        cf = closed_form_fisher(det, P, FIELD, None)
        print(f"{tau:5.2f} {quad.crb_P:12.4f} {cf.crb_P:12.4f} "
              f"{quad.crb_x:12.4f} {cf.crb_x:12.4f}")
        if quad.crb_x < best_crb_x:
            best_tau, best_crb_x = tau, quad.crb_x
    print(f"\ncoordinate bound minimized at tau = {best_tau:.2f} "
          f"(crb_x = {best_crb_x:.4f})")
    print("Plot recipe: load the four columns against tau; log-scale the "
          "y axis to\nsee both the interior minimum and the blow-up at "
          "the sweep edges.")


if __name__ == "__main__":
    main()
