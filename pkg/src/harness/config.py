import os
from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import List, Optional

from ..iqa.errors import ParameterError
from ..utils.grid_builder import GridBuilder

THREADS_ENV = "IQA_THREADS"


class ExitCode(IntEnum):
    OK = 0
    IO = 2
    SHAPE = 3
    PARAMS = 4
    INTERNAL = 5


class PrecisionMode(Enum):
    REPORT = "report"   # argmax on full precision, SRCC rounded in reports only
    SELECT = "select"   # argmax on SRCC rounded to report_digits


@dataclass
class HarnessConfig:
    threads: int = 1
    skip_errors: bool = False
    verbose: bool = False
    log_dir: Optional[str] = None

    def __post_init__(self):
        if self.threads < 1:
            raise ParameterError(f"threads must be >= 1, got {self.threads}")

    @classmethod
    def from_env(cls, **overrides) -> "HarnessConfig":
        """Defaults, then IQA_THREADS, then explicit (non-None) overrides"""
        config = cls()
        env_threads = os.environ.get(THREADS_ENV)
        if env_threads:
            try:
                config = replace(config, threads=int(env_threads))
            except ValueError:
                raise ParameterError(f"{THREADS_ENV} must be a positive integer, got '{env_threads}'")
        explicit = {k: v for k, v in overrides.items() if v is not None}
        return replace(config, **explicit)


@dataclass
class GridConfig:
    c_spec: str = "5:100:1"
    alpha_spec: str = "2:8:0.1"
    precision_mode: PrecisionMode = PrecisionMode.REPORT
    report_digits: int = 4

    def c_values(self) -> List[float]:
        values = GridBuilder.parse(self.c_spec)
        GridBuilder.check_ascending(values, "C")
        if values[0] <= 0:
            raise ParameterError("C grid values must be positive")
        return values

    def alpha_values(self) -> List[float]:
        values = GridBuilder.parse(self.alpha_spec)
        GridBuilder.check_ascending(values, "alpha")
        if values[0] <= 0:
            raise ParameterError("alpha grid values must be positive")
        return values
