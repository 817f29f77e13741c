from enum import Enum
from typing import Any, Optional, List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


DEFAULT_SEED = 1979
DEFAULT_ALPHA = 0.05

# Grid of the published convergence experiment.
PAPER_SCALE_K_MAX = 5000
PAPER_SCALE_K_STEP = 10
PAPER_SCALE_REPS = 10_000


class Approach(str, Enum):
    """Which derivation of the law of N_R to use."""
    TRUNCATED = "truncated"
    """S conditioned on S >= Z_alpha sqrt(k), support n_r >= 0."""
    FOLDED = "folded"
    """S folded at zero, support n_r > -k."""


class ApproachChoice(str, Enum):
    TRUNCATED = "truncated"
    FOLDED = "folded"
    BOTH = "both"

    def approaches(self) -> list[Approach]:
        if self == ApproachChoice.BOTH:
            return [Approach.TRUNCATED, Approach.FOLDED]
        return [Approach(self.value)]


class Regime(str, Enum):
    SUMS_ONLY = "sums_only"
    NR_TRUNCATED = "nr_truncated"
    NR_FOLDED = "nr_folded"


class SumLaw(str, Enum):
    """How the study-sum S is drawn in simulations."""
    HALF_NORMAL = "half_normal"
    """Sum of k independent |N(0, 1)| draws."""
    NORMAL = "normal"
    """Direct draw from the CLT limit N(k sqrt(2/pi), k(1 - 2/pi))."""


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class Truth(str, Enum):
    """Closed-form mean used as the true value in the convergence study."""
    FOLDED = "folded"
    TRUNCATED = "truncated"


def _check_alpha(v: float) -> float:
    if not 0.0 < v <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5] for a one-tailed test, got {v}")
    return v


class RunConfig(BaseModel):
    """Options shared by every CLI command. Validated before any computation runs."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=DEFAULT_ALPHA, description="One-tailed significance level.")
    approach: ApproachChoice = Field(default=ApproachChoice.BOTH)
    seed: int = Field(default=DEFAULT_SEED, description="Master seed. Flag beats FAILSAFE_SEED beats default.")
    reps: Optional[int] = Field(default=None, description="Monte Carlo repetitions.")
    k: Optional[int] = Field(default=None, description="Number of studies.")
    k_grid: Optional[List[int]] = Field(default=None)
    output_format: OutputFormat = Field(default=OutputFormat.JSON)
    output_path: Optional[str] = Field(default=None, description="None writes to stdout.")
    workers: int = Field(default=1, description="Worker processes for simulation blocks.")
    verbose: bool = Field(default=False)

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, v: float) -> float:
        return _check_alpha(v)

    @field_validator("k", "reps", "workers")
    @classmethod
    def check_positive(cls, v: Optional[int], info) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"{info.field_name} must be >= 1, got {v}")
        return v

    @field_validator("seed")
    @classmethod
    def check_seed(cls, v: int) -> int:
        if not 0 <= v < 2**64:
            raise ValueError(f"seed must be a non-negative 64-bit integer, got {v}")
        return v

    @field_validator("k_grid")
    @classmethod
    def check_k_grid(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and any(k < 1 for k in v):
            raise ValueError("every k in k_grid must be >= 1")
        return v


class SimulationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(default=15)
    alpha: float = Field(default=DEFAULT_ALPHA)
    reps: int = Field(default=100_000, description="Desk-scale default. Publication-quality histograms use 10^7.")
    seed: int = Field(default=DEFAULT_SEED)
    regime: Regime = Field(default=Regime.NR_FOLDED)
    sum_law: SumLaw = Field(default=SumLaw.HALF_NORMAL)
    bins: Optional[int] = Field(default=None, description="None selects Freedman-Diaconis bins.")
    max_bins: int = Field(default=1000, description="Upper bound on automatically chosen bins.")
    overlay_points: int = Field(default=400)
    workers: int = Field(default=1)

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, v: float) -> float:
        return _check_alpha(v)

    @field_validator("k", "reps", "workers", "max_bins", "overlay_points")
    @classmethod
    def check_positive(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be >= 1, got {v}")
        return v


class WandBConfig(BaseModel):
    log_to_wandb: bool = Field(default=False, description="Track long convergence runs in Weights & Biases.")
    wandb_project_name: str = Field(default="failsafe-nr")
    entity_name: Optional[str] = Field(default=None, description="Either WandB username or name of team.")
    run_name: Optional[str] = Field(default=None)


class ConvergenceConfig(BaseModel):
    k_min: int = Field(default=10)
    k_max: int = Field(default=1000, description="Desk-scale default. The published grid runs to 5000.")
    k_step: int = Field(default=10)
    reps_per_k: int = Field(default=2000)
    alpha: float = Field(default=DEFAULT_ALPHA)
    seed: int = Field(default=DEFAULT_SEED)
    truth: Truth = Field(default=Truth.FOLDED)
    paper_scale: bool = Field(default=False, description="Override grid and reps with the published 10..5000 step 10, 10^4 reps.")
    workers: int = Field(default=1)
    verbose: bool = Field(default=False)
    log_csv: Optional[str] = Field(default=None, description="Stream per-k metrics to this CSV while running.")
    wandb_config: WandBConfig = Field(default_factory=WandBConfig)

    # Set by validator
    k_grid: Optional[List[int]] = Field(default=None)

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, v: float) -> float:
        return _check_alpha(v)

    @model_validator(mode="before")
    @classmethod
    def _set_fields(cls, v: Any) -> Any:
        """Derive k_grid from the range fields, or from the published grid when paper_scale is set."""
        if not isinstance(v, dict):
            return v
        v = dict(v)
        if v.get("paper_scale"):
            v["k_min"], v["k_max"], v["k_step"] = PAPER_SCALE_K_STEP, PAPER_SCALE_K_MAX, PAPER_SCALE_K_STEP
            v["reps_per_k"] = PAPER_SCALE_REPS
        k_min = int(v.get("k_min", cls.model_fields["k_min"].default))
        k_max = int(v.get("k_max", cls.model_fields["k_max"].default))
        k_step = int(v.get("k_step", cls.model_fields["k_step"].default))
        if k_min < 1 or k_step < 1 or k_max < k_min:
            raise ValueError(f"invalid k range: min={k_min}, max={k_max}, step={k_step}")
        v["k_grid"] = list(range(k_min, k_max + 1, k_step))
        return v

    @field_validator("reps_per_k")
    @classmethod
    def check_reps(cls, v: int) -> int:
        if v < 2:
            raise ValueError(f"reps_per_k must be >= 2 to form a mean, got {v}")
        return v
