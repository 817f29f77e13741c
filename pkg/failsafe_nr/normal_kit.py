"""Normal-family primitives: standard normal, half-normal, folded normal and
left-truncated normal densities, distribution functions, moments and samplers.

Densities return 0 outside their support instead of raising, so quadrature and
grid evaluation never need to special-case the boundary. Every function accepts
a scalar or an array; scalars come back as plain floats.
"""
import math
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import special

from failsafe_nr.errors import DomainError, TailOverflowError

ArrayLike = Union[float, npt.ArrayLike]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
HALF_NORMAL_VARIANCE = 1.0 - 2.0 / math.pi

MIN_SURVIVAL_MASS = 1e-300


class FoldedNormalParams(BaseModel):
    """Law of |X| for X ~ N(xi, omega^2)."""
    model_config = ConfigDict(frozen=True)

    xi: float = Field(default=0.0, description="Location of the underlying normal.")
    omega: float = Field(default=1.0, description="Scale of the underlying normal.")

    @field_validator("omega")
    @classmethod
    def check_omega(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"omega must be finite and > 0, got {v}")
        return v


class HalfNormalParams(BaseModel):
    """Folded normal with xi = 0."""
    model_config = ConfigDict(frozen=True)

    omega: float = Field(default=1.0)

    @field_validator("omega")
    @classmethod
    def check_omega(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"omega must be finite and > 0, got {v}")
        return v

    def as_folded(self) -> FoldedNormalParams:
        return FoldedNormalParams(xi=0.0, omega=self.omega)


class LeftTruncatedNormalParams(BaseModel):
    """N(mean, sd^2) restricted to [lower, inf) and renormalised."""
    model_config = ConfigDict(frozen=True)

    mean: float = 0.0
    sd: float = 1.0
    lower: float = 0.0

    @field_validator("sd")
    @classmethod
    def check_sd(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"sd must be finite and > 0, got {v}")
        return v


def _as_array(x: ArrayLike, name: str = "x", finite: bool = True) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if finite and not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr, arr.ndim == 0


def _out(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def std_normal_pdf(x: ArrayLike):
    arr, scalar = _as_array(x)
    return _out(INV_SQRT_2PI * np.exp(-0.5 * arr * arr), scalar)


def std_normal_cdf(x: ArrayLike):
    """Phi(x) through scipy's ndtr, accurate to a few ulps over the whole line."""
    arr, scalar = _as_array(x)
    return _out(special.ndtr(arr), scalar)


def std_normal_quantile(p: ArrayLike):
    arr, scalar = _as_array(p, "p")
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise DomainError("p must lie in the open interval (0, 1)")
    return _out(special.ndtri(arr), scalar)


def folded_normal_pdf(y: ArrayLike, p: FoldedNormalParams):
    arr, scalar = _as_array(y, "y", finite=False)
    inside = arr >= 0
    y0 = np.where(inside, arr, 0.0)
    dens = (
        INV_SQRT_2PI * np.exp(-0.5 * ((-y0 - p.xi) / p.omega) ** 2)
        + INV_SQRT_2PI * np.exp(-0.5 * ((y0 - p.xi) / p.omega) ** 2)
    ) / p.omega
    return _out(np.where(inside, dens, 0.0), scalar)


def folded_normal_cdf(y: ArrayLike, p: FoldedNormalParams):
    arr, scalar = _as_array(y, "y", finite=False)
    y0 = np.maximum(arr, 0.0)
    cdf = special.ndtr((y0 - p.xi) / p.omega) - special.ndtr((-y0 - p.xi) / p.omega)
    return _out(np.clip(cdf, 0.0, 1.0), scalar)


def folded_normal_moments(p: FoldedNormalParams) -> Tuple[float, float]:
    """Mean and variance of |X|, X ~ N(xi, omega^2)."""
    xi, omega = p.xi, p.omega
    mean = omega * SQRT_2_OVER_PI * math.exp(-(xi**2) / (2 * omega**2)) + xi * (1 - 2 * special.ndtr(-xi / omega))
    variance = xi**2 + omega**2 - mean**2
    return float(mean), float(variance)


def half_normal_pdf(y: ArrayLike, p: HalfNormalParams):
    return folded_normal_pdf(y, p.as_folded())


def half_normal_cdf(y: ArrayLike, p: HalfNormalParams):
    arr, scalar = _as_array(y, "y", finite=False)
    return _out(special.erf(np.maximum(arr, 0.0) / (p.omega * math.sqrt(2.0))), scalar)


def half_normal_moments(p: HalfNormalParams) -> Tuple[float, float]:
    return p.omega * SQRT_2_OVER_PI, p.omega**2 * HALF_NORMAL_VARIANCE


def normal_sum_params(k: int, omega: float = 1.0) -> Tuple[float, float]:
    """Mean and variance of the sum of k iid half-normals, i.e. its CLT limit."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    return k * omega * SQRT_2_OVER_PI, k * omega**2 * HALF_NORMAL_VARIANCE


def sample_half_normal(p: HalfNormalParams, rng: np.random.Generator, size: Optional[Union[int, Tuple[int, ...]]] = None):
    """|omega * Z| with Z drawn from rng; the stream is fixed by the generator's seed."""
    draws = np.abs(p.omega * rng.standard_normal(size))
    return float(draws) if size is None else draws


def sample_folded_normal(p: FoldedNormalParams, rng: np.random.Generator, size: Optional[Union[int, Tuple[int, ...]]] = None):
    draws = np.abs(p.xi + p.omega * rng.standard_normal(size))
    return float(draws) if size is None else draws


def left_truncated_normal_pdf(x: ArrayLike, p: LeftTruncatedNormalParams):
    arr, scalar = _as_array(x, finite=False)
    mass = special.ndtr(-(p.lower - p.mean) / p.sd)
    if mass < MIN_SURVIVAL_MASS:
        raise TailOverflowError(
            f"survival mass {mass:.3g} above lower={p.lower} is below {MIN_SURVIVAL_MASS:g}"
        )
    z = (arr - p.mean) / p.sd
    dens = INV_SQRT_2PI * np.exp(-0.5 * z * z) / (p.sd * mass)
    return _out(np.where(arr >= p.lower, dens, 0.0), scalar)
