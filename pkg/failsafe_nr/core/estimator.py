"""Rosenthal's fail-safe number and the Stouffer statistic it is built on."""
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from failsafe_nr.config_setup import DEFAULT_ALPHA
from failsafe_nr.errors import DomainError
from failsafe_nr.normal_kit import std_normal_cdf, std_normal_quantile


class StudySet(BaseModel):
    """Per-study Z scores, optionally with the effect / standard-error pairs they came from."""
    model_config = ConfigDict(frozen=True)

    z_scores: Tuple[float, ...]
    effects: Optional[Tuple[float, ...]] = Field(default=None)
    standard_errors: Optional[Tuple[float, ...]] = Field(default=None)
    labels: Optional[Tuple[str, ...]] = Field(default=None)

    @field_validator("z_scores")
    @classmethod
    def check_z_scores(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 1:
            raise ValueError("a study set needs at least one study")
        if not all(math.isfinite(z) for z in v):
            raise ValueError("z_scores must be finite")
        return v

    @model_validator(mode="after")
    def check_sources(self) -> "StudySet":
        if (self.effects is None) != (self.standard_errors is None):
            raise ValueError("effects and standard_errors must be given together")
        if self.standard_errors is not None:
            if len(self.standard_errors) != self.k or len(self.effects) != self.k:
                raise ValueError("effects and standard_errors must match z_scores in length")
            if any(not s > 0 for s in self.standard_errors):
                raise ValueError("every standard error must be > 0")
        if self.labels is not None and len(self.labels) != self.k:
            raise ValueError("labels must match z_scores in length")
        return self

    @classmethod
    def from_effects(cls, effects: Sequence[float], standard_errors: Sequence[float], labels: Optional[Sequence[str]] = None) -> "StudySet":
        """Z_i = effect_i / se_i."""
        if len(effects) != len(standard_errors):
            raise DomainError("effects and standard_errors must have the same length")
        for i, se in enumerate(standard_errors):
            if not se > 0:
                raise DomainError(f"standard error of study {i + 1} must be > 0, got {se}")
        z = tuple(float(e) / float(s) for e, s in zip(effects, standard_errors))
        return cls(
            z_scores=z,
            effects=tuple(float(e) for e in effects),
            standard_errors=tuple(float(s) for s in standard_errors),
            labels=tuple(labels) if labels is not None else None,
        )

    @property
    def k(self) -> int:
        return len(self.z_scores)

    @property
    def z_sum(self) -> float:
        return math.fsum(self.z_scores)


StudyLike = Union[StudySet, Sequence[float]]


def as_study_set(s: StudyLike) -> StudySet:
    if isinstance(s, StudySet):
        return s
    z = tuple(float(x) for x in s)
    if not z:
        raise DomainError("a study set needs at least one study")
    return StudySet(z_scores=z)


class FailSafeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    alpha: float
    z_alpha: float
    stouffer_z: float
    stouffer_p: float = Field(description="One-tailed p-value of the Stouffer statistic.")
    n_r_raw: float = Field(description="Rosenthal's N_R as computed; negative when the studies barely reach significance.")
    n_r_reported: float = Field(description="n_r_raw clamped at zero.")
    threshold: float = Field(description="Rosenthal's tolerance level 5k + 10.")
    minimal_bias: bool = Field(description="True when n_r_raw exceeds the tolerance level.")


def check_alpha(alpha: float) -> float:
    if not (math.isfinite(alpha) and 0.0 < alpha <= 0.5):
        raise DomainError(f"alpha must lie in (0, 0.5] for a one-tailed test, got {alpha}")
    return alpha


def z_alpha_for(alpha: float) -> float:
    """One-tailed critical value Z_alpha = Phi^{-1}(1 - alpha)."""
    return std_normal_quantile(1.0 - check_alpha(alpha))


def positive_z_alpha(alpha: float) -> float:
    """Z_alpha for a level where N_R is defined. alpha = 0.5 puts the critical value at 0."""
    z_alpha = z_alpha_for(alpha)
    if not z_alpha > 0:
        raise DomainError(f"alpha={alpha} gives Z_alpha = 0, so N_R = S^2 / Z_alpha^2 - k is undefined")
    return z_alpha


def tolerance_level(k: int) -> float:
    return 5.0 * k + 10.0


def minimal_bias_rule(n_r_raw: float, k: int) -> bool:
    """Rosenthal's rule of thumb: publication bias is unlikely once N_R > 5k + 10."""
    return n_r_raw > tolerance_level(k)


def stouffer_z(s: StudyLike) -> Tuple[float, float]:
    """Z_S = sum(Z_i) / sqrt(k) with its one-tailed p-value 1 - Phi(Z_S)."""
    s = as_study_set(s)
    z = s.z_sum / math.sqrt(s.k)
    return z, std_normal_cdf(-z)


def fail_safe_n(s: StudyLike, alpha: float = DEFAULT_ALPHA) -> FailSafeReport:
    """Number of null studies needed to pull the combined Stouffer test down to level alpha."""
    s = as_study_set(s)
    z_alpha = positive_z_alpha(alpha)
    z, p = stouffer_z(s)
    n_r_raw = s.z_sum**2 / z_alpha**2 - s.k
    return FailSafeReport(
        k=s.k,
        alpha=alpha,
        z_alpha=z_alpha,
        stouffer_z=z,
        stouffer_p=p,
        n_r_raw=n_r_raw,
        n_r_reported=max(n_r_raw, 0.0),
        threshold=tolerance_level(s.k),
        minimal_bias=minimal_bias_rule(n_r_raw, s.k),
    )


def nr_from_sums(sums: np.ndarray, k: int, z_alpha: float) -> np.ndarray:
    """Vectorised N_R = S^2 / Z_alpha^2 - k for an array of study sums."""
    return np.square(sums) / z_alpha**2 - k
