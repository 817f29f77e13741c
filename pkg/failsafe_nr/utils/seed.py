"""Seed resolution and per-block random streams.

Every simulation block draws from its own generator, keyed by
(master seed, stream, k, block index) through numpy's SeedSequence spawn keys.
The values a block produces therefore never depend on which worker runs it
or how many workers there are.
"""
import logging
import os
from typing import Optional

from dotenv import load_dotenv
from numpy.random import Generator, SeedSequence, default_rng

from failsafe_nr.config_setup import DEFAULT_SEED, SumLaw
from failsafe_nr.errors import DomainError

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "FAILSAFE_SEED"

# Target number of scalar draws per block; the rep count of a block depends only on k.
BLOCK_DRAWS = 2**20

STREAMS = {SumLaw.HALF_NORMAL: 0, SumLaw.NORMAL: 1}


def resolve_seed(flag: Optional[int] = None) -> int:
    """--seed flag, else FAILSAFE_SEED (environment or .env), else DEFAULT_SEED."""
    if flag is not None:
        return check_seed(flag)
    load_dotenv()
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        seed = int(raw.strip())
    except ValueError as e:
        raise DomainError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e
    logger.info("Using seed %d from %s", seed, SEED_ENV_VAR)
    return check_seed(seed)


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be a non-negative 64-bit integer, got {seed}")
    return int(seed)


def block_size(k: int, sum_law: SumLaw = SumLaw.HALF_NORMAL) -> int:
    """Reps per block. Depends on k and the sum law only, never on the worker count."""
    if sum_law == SumLaw.NORMAL:
        return BLOCK_DRAWS
    return max(1, BLOCK_DRAWS // k)


def block_generator(master_seed: int, k: int, block: int, sum_law: SumLaw = SumLaw.HALF_NORMAL) -> Generator:
    seed_seq = SeedSequence(check_seed(master_seed), spawn_key=(STREAMS[SumLaw(sum_law)], k, block))
    return default_rng(seed_seq)
