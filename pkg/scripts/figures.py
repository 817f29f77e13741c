"""Plot-ready CSVs for the exact densities, the CLT check and simulated N_R in both regimes.

Writes `<output_stem>_<table>.csv` in the hydra run directory; any plotter can draw them.
"""
import logging

import hydra
import numpy as np
from omegaconf import DictConfig, OmegaConf

from failsafe_nr import __version__
from failsafe_nr.config_setup import Approach, OutputFormat, Regime, SimulationConfig
from failsafe_nr.core.nr_distribution import NrDistribution, pdf_gap
from failsafe_nr.io import emit
from failsafe_nr.montecarlo.goodness_of_fit import histogram, ks_report
from failsafe_nr.montecarlo.simulate import simulate
from failsafe_nr.normal_kit import normal_sum_params, std_normal_cdf

logger = logging.getLogger(__name__)


def clt_rows(config: DictConfig):
    for k in config.clt_k:
        sim = SimulationConfig(k=k, reps=config.reps, seed=config.seed, regime=Regime.SUMS_ONLY, sum_law=config.sum_law, workers=config.workers)
        batch = simulate(sim, verbose=True)
        mean, variance = normal_sum_params(k)
        sd = float(np.sqrt(variance))
        report = ks_report(batch, lambda v: std_normal_cdf((np.asarray(v) - mean) / sd))
        hist = histogram(batch, max_bins=sim.max_bins)
        logger.info("CLT k=%d: D=%.5f (1%% critical %.5f)", k, report.statistic, report.critical_1pct)
        yield {"k": k, **report.model_dump()}, [
            {"k": k, "left": float(l), "right": float(r), "density": float(dn)}
            for l, r, dn in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.density)
        ]


def nr_rows(config: DictConfig):
    for k in config.nr_k:
        exact = {a: NrDistribution.create(k, config.alpha, a) for a in Approach}
        for regime in (Regime.NR_TRUNCATED, Regime.NR_FOLDED):
            sim = SimulationConfig(
                k=k, alpha=config.alpha, reps=config.reps, seed=config.seed, regime=regime, sum_law=config.sum_law, workers=config.workers
            )
            batch = simulate(sim, verbose=True)
            for a in Approach:
                yield {"k": k, "regime": regime.value, "reference": a.value, **ks_report(batch, exact[a].cdf).model_dump()}


@hydra.main(config_path="configs/", config_name="figures_config", version_base=None)
def main(config: DictConfig) -> None:
    OmegaConf.resolve(config)
    meta = {"config": OmegaConf.to_container(config), "seed": config.seed, "version": __version__}

    gaps = [pdf_gap(k, config.alpha) for k in config.pdf_gap_k]
    clt = list(clt_rows(config))
    tables = {
        "pdf_gap": gaps,
        "clt_ks": [row for row, _ in clt],
        "clt_histogram": [bar for _, bars in clt for bar in bars],
        "nr_ks": list(nr_rows(config)),
    }
    emit(tables, OutputFormat.CSV, f"{config.output_stem}.csv", meta=meta)


if __name__ == "__main__":
    main()
