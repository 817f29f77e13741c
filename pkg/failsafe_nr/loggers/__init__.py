from failsafe_nr.config_setup import ConvergenceConfig
from failsafe_nr.loggers.csv_logger import CSVLogger
from failsafe_nr.loggers.logger import LoggerBase, NullLogger


def make_logger(config: ConvergenceConfig) -> LoggerBase:
    """CSV logger when `log_csv` is set, else Weights & Biases when enabled, else a NullLogger."""
    if config.log_csv:
        return CSVLogger(config.log_csv)
    if config.wandb_config.log_to_wandb:
        from failsafe_nr.loggers.wandb_logger import WandbLogger
        return WandbLogger(
            project=config.wandb_config.wandb_project_name,
            entity=config.wandb_config.entity_name,
            name=config.wandb_config.run_name,
            config=config.model_dump(mode="json"),
        )
    return NullLogger()


__all__ = ["LoggerBase", "NullLogger", "CSVLogger", "make_logger"]
