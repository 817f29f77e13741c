import abc
from typing import Dict, Optional, Sequence


class LoggerBase(abc.ABC):
    """
    A general class for logging run metrics, one step per k-grid point in a convergence study.

    Subclasses write to a backend (CSV file, Weights & Biases). log_scalar and log_scalars are required;
    log_dictionary defaults to one log_scalar call per entry and finalize to doing nothing.
    """
    def __init__(self) -> None:
        super().__init__()
        self._step = 0

    @abc.abstractmethod
    def log_scalar(self, name: str, value: float, step: Optional[int] = None):
        pass

    @abc.abstractmethod
    def log_scalars(self, name: str, values: Sequence[float], step: Optional[int] = None):
        pass

    def log_dictionary(self, dictionary: Dict[str, float], step: Optional[int] = None):
        for name, value in dictionary.items():
            self.log_scalar(name, value, step)

    def finalize(self):
        """Flush anything still buffered."""
        pass


class NullLogger(LoggerBase):
    """
    A logger that does nothing. Useful for default arguments in functions.
    """
    def log_scalar(self, name: str, value: float, step: Optional[int] = None):
        pass

    def log_scalars(self, name: str, values: Sequence[float], step: Optional[int] = None):
        pass
