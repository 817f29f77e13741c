"""Convergence of the simulated mean of N_R to its closed-form expectation as k grows.

For each k on a grid the study simulates reps_per_k folded N_R values,
compares their mean with the closed-form E[N_R] and regresses
log(absolute relative error) on log(k).
"""
import logging
import math
import warnings
from multiprocessing import get_context
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats
from tqdm import tqdm

from failsafe_nr.config_setup import DEFAULT_ALPHA, DEFAULT_SEED, Approach, ConvergenceConfig, Regime, SumLaw, Truth
from failsafe_nr.core.estimator import check_alpha
from failsafe_nr.core.nr_distribution import NrDistribution, nr_moments
from failsafe_nr.errors import DomainError
from failsafe_nr.loggers import LoggerBase, NullLogger
from failsafe_nr.montecarlo.simulate import simulate_nr

logger = logging.getLogger(__name__)


class ConvergenceRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    mean_estimate: float = Field(description="Mean of the simulated N_R values at this k.")
    true_value: float = Field(description="Closed-form E[N_R] of the chosen truth.")
    abs_rel_error: float
    ratio: float = Field(description="mean_estimate / true_value.")
    sd_estimate: float = Field(description="Sample standard deviation of the simulated values.")
    reps: int


class ConvergenceFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    slope_ci_95: Tuple[float, float]
    slope_stderr: float
    n_points: int
    n_excluded: int = Field(default=0, description="Records dropped because their error was exactly 0.")


def true_value(k: int, alpha: float = DEFAULT_ALPHA, truth: Truth = Truth.FOLDED) -> float:
    approach = Approach.TRUNCATED if Truth(truth) == Truth.TRUNCATED else Approach.FOLDED
    return nr_moments(NrDistribution.create(k, alpha, approach)).mean


def make_record(k: int, values: np.ndarray, truth_value: float) -> ConvergenceRecord:
    mean = float(np.mean(values))
    return ConvergenceRecord(
        k=k,
        mean_estimate=mean,
        true_value=truth_value,
        abs_rel_error=abs(mean - truth_value) / abs(truth_value),
        ratio=mean / truth_value,
        sd_estimate=float(np.std(values, ddof=1)),
        reps=len(values),
    )


def study_point(k: int, reps: int, alpha: float, seed: int, truth: Truth, sum_law: SumLaw) -> Optional[ConvergenceRecord]:
    """One grid point, or None when the truth is not positive."""
    truth_value = true_value(k, alpha, truth)
    if truth_value <= 0:
        return None
    batch = simulate_nr(k, alpha, reps, seed, regime=Regime.NR_FOLDED, sum_law=sum_law)
    return make_record(k, batch.values, truth_value)


def _study_point(kwargs: Dict[str, Any]) -> Optional[ConvergenceRecord]:
    return study_point(**kwargs)


def convergence_study(
    k_grid: Sequence[int],
    reps_per_k: int,
    alpha: float = DEFAULT_ALPHA,
    seed: int = DEFAULT_SEED,
    truth: Truth = Truth.FOLDED,
    sum_law: SumLaw = SumLaw.HALF_NORMAL,
    workers: int = 1,
    verbose: bool = False,
    metric_logger: Optional[LoggerBase] = None,
) -> List[ConvergenceRecord]:
    """Per-k records for the grid. k with a non-positive truth are skipped with a warning."""
    if any(k < 1 for k in k_grid):
        raise DomainError("every k in the grid must be >= 1")
    if reps_per_k < 2:
        raise DomainError(f"reps_per_k must be >= 2, got {reps_per_k}")
    check_alpha(alpha)
    metric_logger = metric_logger or NullLogger()

    tasks = [dict(k=int(k), reps=reps_per_k, alpha=alpha, seed=seed, truth=Truth(truth), sum_law=SumLaw(sum_law)) for k in k_grid]
    if workers > 1 and len(tasks) > 1:
        ctx = get_context("spawn")
        with ctx.Pool(min(workers, len(tasks))) as pool:
            results = list(tqdm(pool.imap(_study_point, tasks), total=len(tasks), disable=not verbose))
    else:
        results = [_study_point(t) for t in tqdm(tasks, disable=not verbose)]

    records = []
    for task, record in zip(tasks, results):
        if record is None:
            msg = f"k={task['k']}: E[N_R] <= 0 at alpha={alpha}, no relative error defined; skipping"
            logger.warning(msg)
            warnings.warn(msg)
            continue
        metric_logger.log_dictionary(
            {"mean_estimate": record.mean_estimate, "abs_rel_error": record.abs_rel_error, "ratio": record.ratio},
            step=record.k,
        )
        records.append(record)
    metric_logger.finalize()
    logger.info("convergence study: %d of %d grid points kept", len(records), len(tasks))
    return records


def ols_loglog(records: Sequence[ConvergenceRecord]) -> ConvergenceFit:
    """OLS of log(abs_rel_error) on log(k) with a t-based 95% interval for the slope."""
    usable = [r for r in records if r.abs_rel_error > 0]
    excluded = len(records) - len(usable)
    if excluded:
        logger.info("excluding %d zero-error records from the log-log fit", excluded)
    if len(usable) < 3:
        raise DomainError(f"need at least 3 records with positive error, got {len(usable)}")

    log_k = np.log([r.k for r in usable])
    log_err = np.log([r.abs_rel_error for r in usable])
    fit = stats.linregress(log_k, log_err)
    t_q = stats.t.ppf(0.975, len(usable) - 2)
    half_width = t_q * fit.stderr
    return ConvergenceFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        slope_ci_95=(float(fit.slope - half_width), float(fit.slope + half_width)),
        slope_stderr=float(fit.stderr),
        n_points=len(usable),
        n_excluded=excluded,
    )


def summarize_ratio(records: Sequence[ConvergenceRecord]) -> float:
    """Mean of mean_estimate / true_value over the records."""
    if not records:
        raise DomainError("no records to summarise")
    return math.fsum(r.ratio for r in records) / len(records)


def run_convergence(config: ConvergenceConfig, metric_logger: Optional[LoggerBase] = None) -> Tuple[List[ConvergenceRecord], ConvergenceFit]:
    records = convergence_study(
        config.k_grid,
        config.reps_per_k,
        alpha=config.alpha,
        seed=config.seed,
        truth=config.truth,
        workers=config.workers,
        verbose=config.verbose,
        metric_logger=metric_logger,
    )
    fit = ols_loglog(records)
    logger.info(
        "slope %.4f, 95%% CI (%.4f, %.4f), mean ratio %.5f",
        fit.slope, *fit.slope_ci_95, summarize_ratio(records),
    )
    return records, fit
