"""Momentum-integrated residual polarisation (defect density).

``Sigma_z = int dk/2pi <sz(inf)>_k`` over ``|k| <= k_max``, split at the PT
boundary ``|k| = |gamma|`` into the PT-symmetric tails and the PT-broken
window.  The integrand changes its analytic form at ``+-gamma``, so these are
always panel boundaries and are never evaluated themselves.
"""

from dataclasses import dataclass
import math

from scipy import integrate

from .errors import ConfigError, QuadratureNonConvergence
from .observables import ExpectationMethod, METRIC, adiabatic_value, asymptotic_value

QUAD_TOL = 1e-8


@dataclass(frozen=True)
class DefectSummary:
    method: ExpectationMethod
    gamma: float
    F: float  # None in the adiabatic limit
    sigma_pts: float
    sigma_ptb: float
    k_max: float
    quadrature_error_estimate: float

    @property
    def adiabatic(self):
        return self.F is None

    @property
    def sigma_total(self):
        return self.sigma_pts + self.sigma_ptb


def regions(gamma, k_max):
    """``(pts, ptb)`` lists of ``(a, b)`` intervals."""
    g = abs(gamma)
    if not k_max >= g:
        raise ConfigError(f"k_max = {k_max} must be at least |gamma| = {g}")
    pts = [(-k_max, -g), (g, k_max)]
    ptb = [(-g, g)] if g > 0 else []
    return ([iv for iv in pts if iv[1] > iv[0]], ptb)


def _quad(f, a, b, tol):
    res = integrate.quad(f, a, b, epsabs=0.1 * tol, epsrel=0.0, limit=1000, full_output=1)
    val, err = res[0], res[1]
    # a fourth element is scipy's convergence warning
    if len(res) > 3 or not err <= tol:
        raise QuadratureNonConvergence(
            f"quadrature on [{a:.6g}, {b:.6g}] stopped at error {err:.3e}"
        )
    return val, err


def _integrate_regions(f, intervals, tol):
    total = 0.0
    err = 0.0
    for a, b in intervals:
        # Gauss-Kronrod nodes are interior, so the end points are never used
        v, e = _quad(f, a, b, tol)
        total += v
        err += e
    return total / (2.0 * math.pi), err / (2.0 * math.pi)


def _summary(f_pts, f_ptb, method, gamma, F, k_max, tol):
    pts, ptb = regions(gamma, k_max)
    s_pts, e_pts = _integrate_regions(f_pts, pts, tol)
    s_ptb, e_ptb = _integrate_regions(f_ptb, ptb, tol)
    err = e_pts + e_ptb
    if not err <= tol:
        raise QuadratureNonConvergence(f"combined error estimate {err:.3e} exceeds {tol:g}")
    return DefectSummary(method, float(gamma), F, s_pts, s_ptb, float(k_max), err)


def defect_density(gamma, method=METRIC, k_max=math.pi, tol=QUAD_TOL):
    """Defect density in the adiabatic limit ``F -> 0``."""
    method = ExpectationMethod.parse(method)
    f = lambda k: adiabatic_value(k, gamma, method)
    return _summary(f, f, method, gamma, None, k_max, tol)


def defect_density_finite_F(gamma, F, method=METRIC, k_max=math.pi, tol=QUAD_TOL):
    """Defect density with the finite-``F`` asymptotic polarisation."""
    method = ExpectationMethod.parse(method)
    if not F > 0:
        raise ConfigError("F must be positive")
    f = lambda k: asymptotic_value(k, gamma, F, method)
    # the integrand varies on the scale F / |gamma| around the PT boundary
    return _summary(f, f, method, gamma, float(F), k_max, tol)

