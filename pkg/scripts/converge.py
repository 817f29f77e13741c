import hydra
from omegaconf import DictConfig, OmegaConf

from failsafe_nr import __version__
from failsafe_nr.config_setup import ConvergenceConfig, OutputFormat
from failsafe_nr.convergence import run_convergence, summarize_ratio
from failsafe_nr.io import emit
from failsafe_nr.loggers import make_logger


@hydra.main(config_path="configs/", config_name="converge_config", version_base=None)
def main(config: DictConfig) -> None:
    """Run the convergence study from YAML and write `<output_stem>_records.csv` and `<output_stem>_fit.csv`.

    Any field can be overridden on the command line, e.g. `python converge.py paper_scale=true workers=16`.
    """
    OmegaConf.resolve(config)
    OmegaConf.set_struct(config, False)
    output_stem = config.pop("output_stem", "convergence")
    # Validate through pydantic before anything runs
    pydantic_config = ConvergenceConfig(**OmegaConf.to_container(config))

    records, fit = run_convergence(pydantic_config, make_logger(pydantic_config))
    meta = {"config": pydantic_config.model_dump(mode="json", exclude={"k_grid"}), "seed": pydantic_config.seed, "version": __version__}
    fit_row = {**fit.model_dump(), "mean_ratio": summarize_ratio(records)}
    emit({"records": records, "fit": [fit_row]}, OutputFormat.CSV, f"{output_stem}.csv", meta=meta)
    emit({"records": records, "fit": [fit_row]}, OutputFormat.JSON, f"{output_stem}.json", meta=meta)


if __name__ == "__main__":
    main()
