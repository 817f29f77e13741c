from pathlib import Path

import pytest
from omegaconf import OmegaConf
from pydantic import ValidationError

from failsafe_nr.config_setup import (
    PAPER_SCALE_REPS,
    Approach,
    ApproachChoice,
    ConvergenceConfig,
    Regime,
    RunConfig,
    SimulationConfig,
    SumLaw,
)

REPO = Path(__file__).resolve().parents[1]


def test_k_grid_is_set_by_validator():
    config = ConvergenceConfig(k_min=5, k_max=30, k_step=5)
    assert config.k_grid == [5, 10, 15, 20, 25, 30]
    assert len(ConvergenceConfig().k_grid) == 100


def test_paper_scale_overrides_grid_and_reps():
    config = ConvergenceConfig(k_max=50, reps_per_k=10, paper_scale=True)
    assert config.k_grid[0] == 10
    assert config.k_grid[-1] == 5000
    assert len(config.k_grid) == 500
    assert config.reps_per_k == PAPER_SCALE_REPS


@pytest.mark.parametrize(
    "kwargs",
    [dict(k_min=0), dict(k_step=0), dict(k_min=50, k_max=10), dict(reps_per_k=1), dict(alpha=0.0), dict(alpha=0.51)],
)
def test_convergence_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        ConvergenceConfig(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(k=0), dict(reps=0), dict(workers=0), dict(seed=-1), dict(seed=2**64), dict(k_grid=[3, 0])])
def test_run_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        RunConfig(**kwargs)


def test_run_config_accepts_alpha_half():
    assert RunConfig(alpha=0.5).alpha == 0.5


def test_enums_from_strings():
    config = SimulationConfig(regime="nr_truncated", sum_law="normal")
    assert config.regime == Regime.NR_TRUNCATED
    assert config.sum_law == SumLaw.NORMAL
    assert RunConfig(approach="folded").approach.approaches() == [Approach.FOLDED]
    assert ApproachChoice.BOTH.approaches() == [Approach.TRUNCATED, Approach.FOLDED]


def test_package_defaults_validate():
    defaults = OmegaConf.load(REPO / "failsafe_nr" / "configs" / "defaults.yaml")
    sim = SimulationConfig(**OmegaConf.to_container(defaults.simulate))
    assert sim.k == 15
    conv = ConvergenceConfig(**OmegaConf.to_container(defaults.converge))
    assert conv.k_grid == ConvergenceConfig().k_grid


def test_script_config_validates():
    config = OmegaConf.load(REPO / "scripts" / "configs" / "converge_config.yaml")
    OmegaConf.set_struct(config, False)
    config.pop("output_stem")
    conv = ConvergenceConfig(**OmegaConf.to_container(config))
    assert conv.log_csv == "convergence_metrics.csv"
    assert not conv.wandb_config.log_to_wandb
