"""Histograms, Kolmogorov-Smirnov distances and overlay curves for simulated batches."""
import logging
import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from failsafe_nr.errors import DomainError, EmptyBatchError
from failsafe_nr.montecarlo.simulate import SimulationBatch

logger = logging.getLogger(__name__)

KS_CRITICAL_1PCT = 1.63
"""Asymptotic 1% critical value of sqrt(n) * D."""

Values = Union[SimulationBatch, np.ndarray]


class HistogramData(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bin_edges: np.ndarray
    counts: np.ndarray
    density_scale: bool = Field(default=True, description="Whether `density` is the quantity to plot.")

    @model_validator(mode="after")
    def check_shape(self) -> "HistogramData":
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ValueError("counts must have exactly one entry fewer than bin_edges")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        return self

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def density(self) -> np.ndarray:
        """counts / (total * width), integrating to one."""
        return self.counts / (self.counts.sum() * self.widths)


class KsReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    statistic: float
    pvalue: float
    n: int
    critical_1pct: float
    passes_1pct: bool


def _values(batch: Values) -> np.ndarray:
    values = batch.values if isinstance(batch, SimulationBatch) else np.asarray(batch, dtype=float)
    if values.size == 0:
        raise EmptyBatchError("batch is empty")
    return values


def histogram(batch: Values, bins: Optional[int] = None, max_bins: int = 1000, density_scale: bool = True) -> HistogramData:
    """Histogram of a batch. bins=None uses the Freedman-Diaconis width, capped at max_bins bins."""
    values = _values(batch)
    if bins is None:
        edges = np.histogram_bin_edges(values, bins="fd")
        if len(edges) - 1 > max_bins:
            logger.info("Freedman-Diaconis asked for %d bins, capping at %d", len(edges) - 1, max_bins)
            edges = np.histogram_bin_edges(values, bins=max_bins)
    else:
        if bins < 1:
            raise DomainError(f"bins must be >= 1, got {bins}")
        edges = np.histogram_bin_edges(values, bins=bins)
    counts, edges = np.histogram(values, bins=edges)
    return HistogramData(bin_edges=edges, counts=counts, density_scale=density_scale)


def ks_statistic(batch: Values, cdf: Callable) -> float:
    """sup |F_n - F| over the sample.

    Follows scipy's convention of checking both sides of every jump, so a
    constant batch against its own point-mass CDF scores 1, the largest value
    D can take, rather than 0.
    """
    return float(stats.kstest(_values(batch), cdf).statistic)


def ks_critical_value(n: int, coefficient: float = KS_CRITICAL_1PCT) -> float:
    return coefficient / math.sqrt(n)


def ks_report(batch: Values, cdf: Callable) -> KsReport:
    values = _values(batch)
    result = stats.kstest(values, cdf)
    critical = ks_critical_value(values.size)
    return KsReport(
        statistic=float(result.statistic),
        pvalue=float(result.pvalue),
        n=int(values.size),
        critical_1pct=critical,
        passes_1pct=bool(result.statistic < critical),
    )


def overlay_curve(func: Callable, lo: float, hi: float, n: int = 400) -> Tuple[np.ndarray, np.ndarray]:
    """n evenly spaced samples of func on [lo, hi] for drawing over a histogram."""
    if n < 2 or not hi > lo:
        raise DomainError(f"need n >= 2 and hi > lo, got n={n}, lo={lo}, hi={hi}")
    x = np.linspace(lo, hi, n)
    return x, np.asarray(func(x), dtype=float)
