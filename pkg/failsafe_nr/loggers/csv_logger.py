import csv
import warnings
from typing import Dict, Iterable, Optional, Sequence

import pandas as pd

from failsafe_nr.loggers.logger import LoggerBase


class CSVLogger(LoggerBase):
    """Streams metrics to a CSV file, one row per step.

    Loggers do not self-increment: a row is written when a later step arrives,
    on `commit=True`, or on `finalize()`.
    """

    def __init__(self, out_file: str):
        super().__init__()
        self.out_file = out_file
        self.metrics = []
        self.buffer = {}
        # Nothing has been logged yet, so there is no row to commit.
        self._step = -1
        pd.DataFrame(columns=["step"]).to_csv(self.out_file, index=False)

    def add_metrics(self, new_metrics: Iterable[str]):
        """Append columns for newly seen metric names, rewriting the header."""
        new_metrics = sorted(new_metrics)
        self.metrics += new_metrics
        logs = pd.read_csv(self.out_file)
        logs = logs.reindex(columns=list(logs.columns) + new_metrics)
        logs.to_csv(self.out_file, index=False)

    def log_scalar(self, name: str, value: float, step: Optional[int] = None, commit: Optional[bool] = None):
        self._log({name: value}, step, commit)

    def log_scalars(self, name: str, values: Sequence[float], step: Optional[int] = None, commit: Optional[bool] = None):
        self._log({f"{name}_{i}": value for i, value in enumerate(values)}, step, commit)

    def log_dictionary(self, dictionary: Dict[str, float], step: Optional[int] = None, commit: Optional[bool] = None):
        self._log(dict(dictionary), step, commit)

    def _log(self, data: Dict[str, float], step: Optional[int] = None, commit: Optional[bool] = None):
        """Buffer data at a step. Steps may jump (k advances by the grid step) but never go backwards."""
        new_metrics = set(data.keys()) - set(self.metrics)
        if new_metrics:
            self.add_metrics(new_metrics)

        if step is not None:
            if step < self._step:
                warnings.warn(f"Step must be at least {self._step}, got {step}. Ignoring.")
                return
            elif step > self._step:
                self._commit()
                self._step = step

        self.buffer.update(data)

        if commit:
            self._commit()

    def _commit(self):
        """Write the buffered data to the CSV file."""
        if self._step < 0 or not self.buffer:
            return

        with open(self.out_file, "a", newline="") as file:
            writer = csv.writer(file)
            writer.writerow([self._step] + [self.buffer.get(metric, None) for metric in self.metrics])
        self.buffer.clear()

    def finalize(self):
        self._commit()
