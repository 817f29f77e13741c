"""Adaptive quadrature against the exact densities of N_R.

These are verification oracles for the closed forms in nr_distribution: they
only ever touch nr_pdf. Integration runs on u = sqrt(n_r + k), where
dn_r = 2u du cancels the 1/sqrt(n_r + k) singularity of the folded density,
over the window mu +/- 12 sigma of the study sum.
"""
import logging
import math
import warnings
from typing import Callable, Optional, Tuple

from scipy import integrate

from failsafe_nr.config_setup import Approach
from failsafe_nr.core.nr_distribution import NrDistribution, NrMoments, nr_cf, nr_pdf

logger = logging.getLogger(__name__)

WINDOW_SDS = 12.0
EPSABS = 1e-10
EPSREL = 1e-12
CF_TOLERANCE = 1e-4


def _u_window(d: NrDistribution, upper: Optional[float] = None) -> Tuple[float, float]:
    p = d.params
    lo = math.sqrt(p.k) if d.approach == Approach.TRUNCATED else 0.0
    lo = max(lo, (p.mu - WINDOW_SDS * p.sigma) / p.z_alpha)
    hi = (p.mu + WINDOW_SDS * p.sigma) / p.z_alpha
    if upper is not None:
        hi = min(hi, math.sqrt(max(upper + p.k, 0.0)))
    return lo, hi


def _pushforward(func: Callable[[float], float], d: NrDistribution) -> Callable[[float], float]:
    k = d.params.k

    def integrand(u: float) -> float:
        n = u * u - k
        if n <= -k:
            return 0.0
        return func(n) * nr_pdf(n, d) * 2.0 * u

    return integrand


def integrate_nr(
    func: Callable[[float], float],
    d: NrDistribution,
    upper: Optional[float] = None,
    limit: int = 400,
) -> float:
    """E[func(N_R)], or the integral of func * pdf up to `upper` when given."""
    lo, hi = _u_window(d, upper)
    if hi <= lo:
        return 0.0
    peak = d.params.mu / d.params.z_alpha
    points = [peak] if lo < peak < hi else None
    value, abserr = integrate.quad(
        _pushforward(func, d), lo, hi, points=points, epsabs=EPSABS, epsrel=EPSREL, limit=limit
    )
    logger.debug("quad over u in [%.6g, %.6g]: %.17g +/- %.3g", lo, hi, value, abserr)
    return float(value)


def nr_moments_numeric(d: NrDistribution) -> NrMoments:
    """Mean and central second moment of N_R by quadrature."""
    mean = integrate_nr(lambda n: n, d)
    variance = integrate_nr(lambda n: (n - mean) ** 2, d)
    return NrMoments(mean=mean, variance=variance)


def nr_cdf_numeric(n_r: float, d: NrDistribution) -> float:
    return integrate_nr(lambda n: 1.0, d, upper=n_r)


def nr_cf_numeric(t: float, d: NrDistribution) -> complex:
    """Fourier integral of the density, component by component."""
    re = integrate_nr(lambda n: math.cos(t * n), d, limit=4000)
    im = integrate_nr(lambda n: math.sin(t * n), d, limit=4000)
    return complex(re, im)


def check_cf(t: float, d: NrDistribution, tol: float = CF_TOLERANCE) -> float:
    """Largest per-component gap between the closed-form CF and its Fourier integral; warns above tol."""
    closed = nr_cf(t, d)
    numeric = nr_cf_numeric(t, d)
    residual = max(abs(closed.real - numeric.real), abs(closed.imag - numeric.imag))
    if residual > tol:
        msg = f"CF residual {residual:.3g} at t={t}, k={d.params.k}, approach={d.approach.value} exceeds {tol:g}"
        logger.warning(msg)
        warnings.warn(msg)
    return float(residual)
