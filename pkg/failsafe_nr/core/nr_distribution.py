"""Exact law of Rosenthal's estimator N_R = S^2 / Z_alpha^2 - k.

S, the sum of k half-normal study scores, is taken at its CLT limit
N(mu, sigma^2) with mu = k sqrt(2/pi) and sigma^2 = k (1 - 2/pi). Two readings of
the sign of S give two laws for N_R:

- TRUNCATED: S is conditioned on S >= Z_alpha sqrt(k), so that N_R >= 0.
  Its normaliser is Phi(lambda), lambda = (mu - Z_alpha sqrt(k)) / sigma.
- FOLDED: S = +/- Z_alpha sqrt(N_R + k), i.e. |S| is folded normal, and N_R
  lives on (-k, inf).

Both densities carry the change-of-variables factor Z_alpha / (2 sqrt(n_r + k)).
"""
import logging
import math
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, special

from failsafe_nr.config_setup import DEFAULT_ALPHA, Approach
from failsafe_nr.core.estimator import positive_z_alpha
from failsafe_nr.errors import DomainError, SupportError
from failsafe_nr.normal_kit import HALF_NORMAL_VARIANCE, SQRT_2_OVER_PI

logger = logging.getLogger(__name__)

ArrayLike = Union[float, npt.ArrayLike]

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class SumDistributionParams(BaseModel):
    """Shared parameterisation of the study-sum S and of both laws of N_R."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    k: int
    alpha: float
    z_alpha: float
    mu: float
    sigma_sq: float
    lam: float = Field(alias="lambda", description="(mu - z_alpha sqrt(k)) / sigma.")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @property
    def cutoff(self) -> float:
        """Smallest study sum that keeps N_R non-negative, Z_alpha sqrt(k)."""
        return self.z_alpha * math.sqrt(self.k)

    @property
    def log_phi_lambda(self) -> float:
        """log Phi(lambda), the log of the truncated normaliser."""
        return float(special.log_ndtr(self.lam))

    @property
    def mills_ratio(self) -> float:
        """phi(lambda) / Phi(lambda), evaluated in log space so it stays finite for very negative lambda."""
        return math.exp(-0.5 * self.lam**2 - LOG_SQRT_2PI - self.log_phi_lambda)


def sum_params(k: int, alpha: float = DEFAULT_ALPHA) -> SumDistributionParams:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k}")
    k = int(k)
    z_alpha = positive_z_alpha(alpha)
    mu = k * SQRT_2_OVER_PI
    sigma_sq = k * HALF_NORMAL_VARIANCE
    lam = (mu - z_alpha * math.sqrt(k)) / math.sqrt(sigma_sq)
    return SumDistributionParams(k=k, alpha=alpha, z_alpha=z_alpha, mu=mu, sigma_sq=sigma_sq, lam=lam)


class NrMoments(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float
    epsilon: float = Field(default=0.0, description="Mean correction from truncation; 0 for FOLDED.")
    delta: float = Field(default=0.0, description="Variance correction from truncation; 0 for FOLDED.")


class CfIntermediates(BaseModel):
    """Complex quantities entering the truncated characteristic function at frequency t."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    mu1: complex
    sigma1_sq: complex


class NrDistribution(BaseModel):
    """One exact law of N_R: an approach tag plus the sum parameters."""
    model_config = ConfigDict(frozen=True)

    approach: Approach
    params: SumDistributionParams

    @classmethod
    def create(cls, k: int, alpha: float = DEFAULT_ALPHA, approach: Approach = Approach.FOLDED) -> "NrDistribution":
        return cls(approach=Approach(approach), params=sum_params(k, alpha))

    @property
    def support(self) -> Tuple[float, bool]:
        """(lower bound, whether the bound itself belongs to the support)."""
        if self.approach == Approach.TRUNCATED:
            return 0.0, True
        return -float(self.params.k), False

    def pdf(self, n_r: ArrayLike):
        return nr_pdf(n_r, self)

    def cdf(self, n_r: ArrayLike):
        return nr_cdf(n_r, self)

    def quantile(self, p: float) -> float:
        return nr_quantile(p, self)

    def moments(self) -> NrMoments:
        return nr_moments(self)

    def cf(self, t: ArrayLike):
        return nr_cf(t, self)


def _as_array(x: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def _log_main_kernel(n_r: np.ndarray, p: SumDistributionParams) -> Tuple[np.ndarray, np.ndarray]:
    """log of Z/(2 sqrt(2 pi sigma^2) sqrt(n+k)), and s = Z sqrt(n+k), for n > -k."""
    u = np.sqrt(n_r + p.k)
    log_jac = math.log(p.z_alpha / 2.0) - LOG_SQRT_2PI - 0.5 * math.log(p.sigma_sq) - np.log(u)
    return log_jac, p.z_alpha * u


def nr_pdf(n_r: ArrayLike, d: NrDistribution):
    arr, scalar = _as_array(n_r)
    p = d.params
    if d.approach == Approach.TRUNCATED:
        inside = arr >= 0
        safe = np.where(inside, arr, 0.0)
        log_jac, s = _log_main_kernel(safe, p)
        dens = np.exp(log_jac - (s - p.mu) ** 2 / (2 * p.sigma_sq) - p.log_phi_lambda)
    else:
        if np.any(arr == -p.k):
            raise SupportError(f"the folded density is singular at n_r = -k = {-p.k}; the point is excluded")
        inside = arr > -p.k
        safe = np.where(inside, arr, 0.0)
        log_jac, s = _log_main_kernel(safe, p)
        dens = np.exp(log_jac) * (
            np.exp(-((s - p.mu) ** 2) / (2 * p.sigma_sq)) + np.exp(-((s + p.mu) ** 2) / (2 * p.sigma_sq))
        )
    return _out(np.where(inside, dens, 0.0), scalar)


def nr_pdf_asymptotic(n_r: ArrayLike, p: SumDistributionParams):
    """Truncated density with Phi(lambda) dropped, the large-k form. Zero below n_r = 0."""
    arr, scalar = _as_array(n_r)
    inside = arr >= 0
    safe = np.where(inside, arr, 0.0)
    log_jac, s = _log_main_kernel(safe, p)
    dens = np.exp(log_jac - (s - p.mu) ** 2 / (2 * p.sigma_sq))
    return _out(np.where(inside, dens, 0.0), scalar)


def nr_cdf(n_r: ArrayLike, d: NrDistribution):
    arr, scalar = _as_array(n_r)
    p = d.params
    if d.approach == Approach.TRUNCATED:
        inside = arr >= 0
        safe = np.where(inside, arr, 0.0)
        x = (p.z_alpha * np.sqrt(safe + p.k) - p.mu) / p.sigma
        # 1 - P(S > s) / P(S > cutoff), with P(S > cutoff) = Phi(lambda)
        cdf = -np.expm1(special.log_ndtr(-x) - p.log_phi_lambda)
    else:
        inside = arr > -p.k
        safe = np.where(inside, arr, 0.0)
        s = p.z_alpha * np.sqrt(safe + p.k)
        cdf = special.ndtr((s - p.mu) / p.sigma) - special.ndtr((-s - p.mu) / p.sigma)
    return _out(np.where(inside, np.clip(cdf, 0.0, 1.0), 0.0), scalar)


def nr_quantile(p: float, d: NrDistribution) -> float:
    """Inverse of nr_cdf by bracketed Brent root search."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in the open interval (0, 1), got {p}")
    lo, _ = d.support
    m = nr_moments(d)
    span = max(10.0 * math.sqrt(m.variance), 1.0)
    hi = max(m.mean, lo) + span
    while nr_cdf(hi, d) < p:
        span *= 2.0
        hi = max(m.mean, lo) + span
        if not math.isfinite(hi):
            raise DomainError(f"could not bracket quantile p={p}")
    return float(optimize.brentq(lambda x: nr_cdf(x, d) - p, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500))


def _folded_moments(p: SumDistributionParams) -> Tuple[float, float]:
    z2 = p.z_alpha**2
    mean = (p.mu**2 + p.sigma_sq) / z2 - p.k
    variance = 2 * p.sigma_sq * (2 * p.mu**2 + p.sigma_sq) / z2**2
    return mean, variance


def truncation_corrections(p: SumDistributionParams) -> Tuple[float, float]:
    """(epsilon, delta): shifts of the mean and variance of N_R caused by conditioning S >= Z_alpha sqrt(k).

    With r = phi(lambda)/Phi(lambda) and a = Z_alpha sqrt(k):
        epsilon = r sigma (mu + a) / Z^2
        delta   = r [sigma^3 (3 mu + a) - (r + lambda) sigma^2 (mu + a)^2] / Z^4
    which are the exact second and fourth moment shifts of a left-truncated normal.
    """
    r = p.mills_ratio
    a = p.cutoff
    z2 = p.z_alpha**2
    epsilon = r * p.sigma * (p.mu + a) / z2
    delta = r * (p.sigma**3 * (3 * p.mu + a) - (r + p.lam) * p.sigma_sq * (p.mu + a) ** 2) / z2**2
    return epsilon, delta


def printed_delta(p: SumDistributionParams) -> float:
    """Variance correction in the form it was originally published, kept for comparison only.

    The squared (5 mu + a) term does not match quadrature of the truncated density.
    """
    r = p.mills_ratio
    a = p.cutoff
    z4 = p.z_alpha**4
    return r * (p.sigma**3 * (5 * p.mu + a) ** 2 / z4 - (r + p.lam) * p.sigma_sq * (p.mu + a) ** 2 / z4)


def nr_moments(d: NrDistribution) -> NrMoments:
    p = d.params
    mean, variance = _folded_moments(p)
    if d.approach == Approach.FOLDED:
        return NrMoments(mean=mean, variance=variance)

    epsilon, delta = truncation_corrections(p)
    logger.debug("k=%d: delta=%.6g, published form gives %.6g", p.k, delta, printed_delta(p))
    return NrMoments(mean=mean + epsilon, variance=variance + delta, epsilon=epsilon, delta=delta)


def cf_intermediates(t: float, p: SumDistributionParams) -> CfIntermediates:
    denom = complex(p.z_alpha**2, -2.0 * p.sigma_sq * t)
    return CfIntermediates(
        t=t,
        mu1=2.0 * p.mu * p.sigma * 1j * t / denom,
        sigma1_sq=p.z_alpha**2 / denom,
    )


def complex_ndtr(w: complex) -> complex:
    """Phi at a complex argument, 0.5 erfc(-w / sqrt 2), scaled on the left half-plane."""
    z = -w / math.sqrt(2.0)
    if z.real > 0:
        return 0.5 * special.erfcx(z) * np.exp(-z * z)
    return 0.5 * special.erfc(z)


def _phi_ratio(w: complex, lam: float) -> complex:
    """Phi(w) / Phi(lam), computed from scaled erfc when both are deep in the lower tail."""
    z, z0 = -w / math.sqrt(2.0), -lam / math.sqrt(2.0)
    if z.real > 0 and z0 > 0:
        return special.erfcx(z) / special.erfcx(z0) * np.exp(z0 * z0 - z * z)
    return complex_ndtr(w) / special.ndtr(lam)


def _cf_scalar(t: float, d: NrDistribution) -> complex:
    if t == 0.0:
        return complex(1.0, 0.0)
    p = d.params
    denom = complex(p.z_alpha**2, -2.0 * p.sigma_sq * t)
    # Principal branch: denom has positive real part, so the root is continuous through t = 0.
    core = p.z_alpha * np.exp(p.mu**2 * 1j * t / denom - p.k * 1j * t) / np.sqrt(denom)
    if d.approach == Approach.FOLDED:
        return complex(core)
    inter = cf_intermediates(t, p)
    w = (inter.mu1 + p.lam) / np.sqrt(inter.sigma1_sq)
    return complex(_phi_ratio(w, p.lam) * core)


def nr_cf(t: ArrayLike, d: NrDistribution):
    """Characteristic function E[exp(i t N_R)]."""
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("t must be finite")
    if arr.ndim == 0:
        return _cf_scalar(float(arr), d)
    return np.array([_cf_scalar(float(x), d) for x in arr.ravel()], dtype=complex).reshape(arr.shape)


def nr_support(d: NrDistribution) -> Tuple[float, bool]:
    """Lower end of the support of N_R and whether it is attained. The upper end is always +inf."""
    return d.support


class PdfGap(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    sup_gap: float = Field(description="max |truncated pdf - folded pdf| over the grid.")
    pdf_max: float = Field(description="max of the truncated pdf over the same grid.")
    grid_hi: float


def pdf_gap(k: int, alpha: float = DEFAULT_ALPHA, n_grid: int = 4001, tail_mass: float = 1e-6) -> PdfGap:
    """Largest gap between the two exact densities on [0, upper truncated quantile].

    The grid starts at 0: below it the truncated density vanishes while the
    folded one diverges towards -k, so the gap is only compared where both live.
    """
    trunc = NrDistribution.create(k, alpha, Approach.TRUNCATED)
    folded = NrDistribution.create(k, alpha, Approach.FOLDED)
    hi = trunc.quantile(1.0 - tail_mass)
    grid = np.linspace(0.0, hi, n_grid)
    p_trunc = trunc.pdf(grid)
    gap = np.abs(p_trunc - folded.pdf(grid))
    return PdfGap(k=k, sup_gap=float(gap.max()), pdf_max=float(p_trunc.max()), grid_hi=hi)
