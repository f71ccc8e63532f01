import math
from typing import List

from ..iqa.errors import ParameterError

GRID_DECIMALS = 10


class GridBuilder:
    @staticmethod
    def linear(lo: float, hi: float, step: float) -> List[float]:
        """Inclusive arithmetic grid lo, lo+step, ..., hi"""
        if step <= 0:
            raise ParameterError(f"grid step must be positive, got {step}")
        if hi < lo:
            raise ParameterError(f"grid upper bound {hi} below lower bound {lo}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        values = [round(lo + i * step, GRID_DECIMALS) for i in range(count)]
        return values

    @staticmethod
    def parse(spec: str) -> List[float]:
        """'lo:hi:step', or a single value"""
        parts = spec.split(":")
        try:
            numbers = [float(p) for p in parts]
        except ValueError:
            raise ParameterError(f"grid must be lo:hi:step, got '{spec}'")
        if len(numbers) == 1:
            return [numbers[0]]
        if len(numbers) != 3:
            raise ParameterError(f"grid must be lo:hi:step, got '{spec}'")
        return GridBuilder.linear(*numbers)

    @staticmethod
    def check_ascending(values: List[float], name: str):
        if not values:
            raise ParameterError(f"{name} grid is empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ParameterError(f"{name} grid must be strictly ascending")

    @staticmethod
    def format_value(value: float) -> str:
        """Shortest form that reads back to the same float: 5, 4.9, 0.125"""
        short = f"{value:g}"
        return short if float(short) == value else repr(float(value))
