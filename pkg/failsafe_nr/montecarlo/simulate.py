"""Seeded Monte Carlo draws of the study sum S and of N_R.

Reps are cut into fixed-size blocks (see utils.seed.block_size). Each block has
its own generator, so the concatenated output is identical for any number of
workers. With workers > 1 blocks are evaluated in a spawn-context process pool.
"""
import logging
import math
import warnings
from multiprocessing import get_context
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from failsafe_nr.config_setup import DEFAULT_ALPHA, DEFAULT_SEED, Regime, SimulationConfig, SumLaw
from failsafe_nr.core.estimator import nr_from_sums, positive_z_alpha
from failsafe_nr.errors import DomainError, EmptyBatchError
from failsafe_nr.normal_kit import HalfNormalParams, normal_sum_params, sample_half_normal
from failsafe_nr.utils.seed import block_generator, block_size, check_seed

logger = logging.getLogger(__name__)


class SimulationBatch(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    k: int
    reps_requested: int
    reps_kept: int
    regime: Regime
    master_seed: int
    alpha: Optional[float] = Field(default=None, description="Absent for SUMS_ONLY.")
    sum_law: SumLaw = Field(default=SumLaw.HALF_NORMAL)

    @model_validator(mode="after")
    def check_counts(self) -> "SimulationBatch":
        if self.reps_kept > self.reps_requested:
            raise ValueError(f"reps_kept={self.reps_kept} exceeds reps_requested={self.reps_requested}")
        if len(self.values) != self.reps_kept:
            raise ValueError(f"{len(self.values)} values recorded but reps_kept={self.reps_kept}")
        return self

    @property
    def rejection_rate(self) -> float:
        return 1.0 - self.reps_kept / self.reps_requested

    def __len__(self) -> int:
        return self.reps_kept


def _check_counts(k: int, reps: int) -> None:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"k must be an integer >= 1, got {k}")
    if isinstance(reps, bool) or int(reps) != reps or reps < 1:
        raise DomainError(f"reps must be an integer >= 1, got {reps}")


def draw_block_sums(master_seed: int, k: int, block: int, n: int, sum_law: SumLaw) -> np.ndarray:
    """n draws of S for one block."""
    rng = block_generator(master_seed, k, block, sum_law)
    if sum_law == SumLaw.NORMAL:
        mean, variance = normal_sum_params(k)
        return mean + math.sqrt(variance) * rng.standard_normal(n)
    return sample_half_normal(HalfNormalParams(), rng, size=(n, k)).sum(axis=1)


def _draw_block_sums(kwargs: Dict[str, Any]) -> np.ndarray:
    return draw_block_sums(**kwargs)


def _block_tasks(master_seed: int, k: int, reps: int, sum_law: SumLaw) -> List[Dict[str, Any]]:
    size = block_size(k, sum_law)
    n_blocks = -(-reps // size)
    return [
        dict(master_seed=master_seed, k=k, block=b, n=min(size, reps - b * size), sum_law=sum_law)
        for b in range(n_blocks)
    ]


def draw_sums(
    k: int,
    reps: int,
    seed: int,
    sum_law: SumLaw = SumLaw.HALF_NORMAL,
    workers: int = 1,
    verbose: bool = False,
) -> np.ndarray:
    """reps draws of S in block order."""
    _check_counts(k, reps)
    seed = check_seed(seed)
    tasks = _block_tasks(seed, int(k), int(reps), SumLaw(sum_law))
    if workers > 1 and len(tasks) > 1:
        ctx = get_context("spawn")
        with ctx.Pool(min(workers, len(tasks))) as pool:
            blocks = list(tqdm(pool.imap(_draw_block_sums, tasks), total=len(tasks), disable=not verbose))
    else:
        blocks = [_draw_block_sums(t) for t in tqdm(tasks, disable=not verbose)]
    return np.concatenate(blocks)


def simulate_half_normal_sums(
    k: int,
    reps: int,
    seed: int,
    sum_law: SumLaw = SumLaw.HALF_NORMAL,
    workers: int = 1,
    verbose: bool = False,
) -> SimulationBatch:
    """reps draws of S = sum of k |N(0, 1)|."""
    values = draw_sums(k, reps, seed, sum_law=sum_law, workers=workers, verbose=verbose)
    return SimulationBatch(
        values=values,
        k=k,
        reps_requested=reps,
        reps_kept=len(values),
        regime=Regime.SUMS_ONLY,
        master_seed=seed,
        sum_law=sum_law,
    )


def simulate_nr(
    k: int,
    alpha: float = DEFAULT_ALPHA,
    reps: int = 100_000,
    seed: int = DEFAULT_SEED,
    regime: Regime = Regime.NR_FOLDED,
    sum_law: SumLaw = SumLaw.HALF_NORMAL,
    workers: int = 1,
    verbose: bool = False,
) -> SimulationBatch:
    """Simulated N_R = S^2 / Z_alpha^2 - k.

    NR_FOLDED keeps every rep. NR_TRUNCATED keeps the reps with N_R >= 0, that is S >= Z_alpha sqrt(k).
    Both regimes read the same stream of sums for a given seed.
    """
    regime = Regime(regime)
    if regime == Regime.SUMS_ONLY:
        raise DomainError("simulate_nr needs regime nr_truncated or nr_folded; use simulate_half_normal_sums for sums")
    z_alpha = positive_z_alpha(alpha)
    sums = draw_sums(k, reps, seed, sum_law=sum_law, workers=workers, verbose=verbose)
    values = nr_from_sums(sums, k, z_alpha)

    if regime == Regime.NR_TRUNCATED:
        values = values[values >= 0]
        if len(values) == 0:
            raise EmptyBatchError(f"no simulated sum reached the cutoff at k={k}, alpha={alpha} over {reps} reps")
        kept = len(values) / reps
        logger.info("k=%d: kept %d of %d reps (%.4f)", k, len(values), reps, kept)
        if kept < 0.5:
            warnings.warn(f"only {len(values)} of {reps} simulated sums survived truncation at k={k}, alpha={alpha}")

    return SimulationBatch(
        values=values,
        k=k,
        reps_requested=reps,
        reps_kept=len(values),
        regime=regime,
        master_seed=seed,
        alpha=alpha,
        sum_law=sum_law,
    )


def rejection_rate(batch: SimulationBatch) -> float:
    """Share of requested reps discarded by truncation."""
    return batch.rejection_rate


def simulate(config: SimulationConfig, verbose: bool = False) -> SimulationBatch:
    if config.regime == Regime.SUMS_ONLY:
        return simulate_half_normal_sums(
            config.k, config.reps, config.seed, sum_law=config.sum_law, workers=config.workers, verbose=verbose
        )
    return simulate_nr(
        config.k,
        config.alpha,
        config.reps,
        config.seed,
        regime=config.regime,
        sum_law=config.sum_law,
        workers=config.workers,
        verbose=verbose,
    )
