"""Grid and list parsing for command-line values"""
import re
from decimal import Decimal, InvalidOperation
from typing import List

from msjlab.core.exceptions import ConfigError


def normalize_grid(text: str) -> str:
    """Strip whitespace and surrounding brackets from a grid expression"""
    if not text:
        return ""
    text = re.sub(r'\s+', '', text)
    return text.strip('[]()')


def _number(token: str) -> Decimal:
    try:
        return Decimal(token)
    except InvalidOperation:
        raise ConfigError(f"not a number in grid: '{token}'")


def parse_float_grid(text: str) -> List[float]:
    """
    Expand a grid expression into floats

    Accepted forms:
        "0.2,0.5,1"          explicit list
        "0.2:3.0:0.2"        start:stop:step, stop included
        "1e2:1e8:log"        decade-spaced points, stop included
    """
    text = normalize_grid(text)
    if not text:
        return []
    if ':' not in text:
        return [float(_number(tok)) for tok in text.split(',') if tok]

    parts = text.split(':')
    if len(parts) != 3:
        raise ConfigError(f"grid must look like start:stop:step or start:stop:log, got '{text}'")
    start, stop = _number(parts[0]), _number(parts[1])
    if stop < start:
        raise ConfigError(f"grid stop {stop} is below start {start}")

    if parts[2].lower() == 'log':
        if start <= 0:
            raise ConfigError("log grid needs a positive start")
        points = []
        value = start
        while value <= stop:
            points.append(float(value))
            value *= 10
        return points

    step = _number(parts[2])
    if step <= 0:
        raise ConfigError(f"grid step must be positive, got {step}")
    count = int((stop - start) / step)
    # Decimal arithmetic keeps 0.2:3.0:0.2 at exactly 15 points
    return [float(start + k * step) for k in range(count + 1)]


def parse_n_grid(text: str) -> List[int]:
    """Expand a server-count grid; every point must be a positive integer"""
    values = parse_float_grid(text)
    grid = []
    for value in values:
        if value < 1 or value != int(value):
            raise ConfigError(f"server counts must be positive integers, got {value}")
        grid.append(int(value))
    if grid != sorted(grid):
        raise ConfigError("n grid must be ascending")
    return grid
