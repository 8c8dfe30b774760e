"""System configuration construction and validation"""
import json
import math
from pathlib import Path
from typing import List, Optional, Union

from pydantic import ValidationError

from msjlab.core.exceptions import ConfigError
from msjlab.schemas import JobClass, OneAndNParams, PowerLawFamily, SystemConfig
from msjlab.utils.logger import get_logger

logger = get_logger(__name__)

PROB_TOLERANCE = 1e-12

SETTINGS = ("original", "duration_scaled", "half_size", "three_class")


def validate_config(config: SystemConfig) -> SystemConfig:
    """
    Check every SystemConfig invariant and return the config unchanged

    Raises:
        ConfigError: naming the first violated invariant
    """
    if config.n < 1:
        raise ConfigError(f"server count must be at least 1, got {config.n}")
    if not config.classes:
        raise ConfigError("at least one job class is required")

    seen = set()
    for job_class in config.classes:
        if job_class.need < 1:
            raise ConfigError(f"need must be at least 1, got {job_class.need}")
        if job_class.need > config.n:
            raise ConfigError(f"need exceeds server count: need {job_class.need} with n={config.n}")
        if not job_class.rate > 0:
            raise ConfigError(f"service rate must be positive, got {job_class.rate} for need {job_class.need}")
        if not 0.0 <= job_class.prob <= 1.0:
            raise ConfigError(f"probability {job_class.prob} for need {job_class.need} is outside [0, 1]")
        if job_class.need in seen:
            raise ConfigError(f"duplicate need {job_class.need}")
        seen.add(job_class.need)

    total = math.fsum(config.probs)
    if abs(total - 1.0) > PROB_TOLERANCE:
        raise ConfigError(f"probabilities sum to {total:.12g}")
    return config


def _sorted_config(n: int, classes: List[JobClass], family: Optional[PowerLawFamily] = None) -> SystemConfig:
    classes = sorted((c for c in classes if c.prob > 0), key=lambda c: c.need)
    return validate_config(SystemConfig(n=n, classes=classes, family=family))


def two_class(n: int, p_n: float, mu1: float, mun: float,
              family: Optional[PowerLawFamily] = None) -> SystemConfig:
    """
    Build the canonical 1-and-n configuration

    Args:
        n: Server count
        p_n: Probability that a job needs all n servers
        mu1: Service rate of 1-server jobs
        mun: Service rate of n-server jobs

    Returns:
        Config with classes [(1, 1 - p_n, mu1), (n, p_n, mun)]; p_n in {0, 1}
        collapses to the single remaining class
    """
    if n < 1:
        raise ConfigError(f"server count must be at least 1, got {n}")
    if not 0.0 <= p_n <= 1.0:
        raise ConfigError(f"p_n must lie in [0, 1], got {p_n}")
    if not (mu1 > 0 and mun > 0):
        raise ConfigError(f"service rates must be positive, got mu1={mu1}, mun={mun}")

    if p_n == 1.0:
        return _sorted_config(n, [JobClass(need=n, prob=1.0, rate=mun)], family)
    if p_n == 0.0:
        return _sorted_config(n, [JobClass(need=1, prob=1.0, rate=mu1)], family)
    if n == 1:
        if mu1 != mun:
            raise ConfigError("with n=1 both classes need one server; rates must match to merge them")
        return _sorted_config(n, [JobClass(need=1, prob=1.0, rate=mu1)], family)

    return _sorted_config(n, [
        JobClass(need=1, prob=1.0 - p_n, rate=mu1),
        JobClass(need=n, prob=p_n, rate=mun),
    ], family)


def setting_config(setting: str, n: int, alpha: float, c: float = 1.0) -> SystemConfig:
    """
    Configuration of a named experiment setting at (n, alpha)

    Settings:
        original         needs {1, n}, mu1 = mun = 1, p_n = c n^-alpha
        duration_scaled  needs {1, n}, mu1 = n, mun = 1
        half_size        needs {1, n/2}, all rates 1, p_{n/2} = c n^-alpha
        three_class      needs {1, n/2, n}, all rates 1, p_{n/2} = p_n = c n^-alpha / 2
    """
    family = PowerLawFamily(c=c, alpha=alpha)
    p = family.p_n(n, clamp=True)

    if setting == "original":
        return two_class(n, p, 1.0, 1.0, family=family)
    if setting == "duration_scaled":
        return two_class(n, p, float(n), 1.0, family=family)
    if setting in ("half_size", "three_class"):
        if n < 4 or n % 2:
            raise ConfigError(f"setting '{setting}' needs an even server count of at least 4, got {n}")
        half = n // 2
        if setting == "half_size":
            classes = [JobClass(need=1, prob=1.0 - p, rate=1.0), JobClass(need=half, prob=p, rate=1.0)]
        else:
            classes = [
                JobClass(need=1, prob=1.0 - p, rate=1.0),
                JobClass(need=half, prob=p / 2, rate=1.0),
                JobClass(need=n, prob=p / 2, rate=1.0),
            ]
        return _sorted_config(n, classes, family)
    raise ConfigError(f"unknown setting '{setting}', expected one of {', '.join(SETTINGS)}")


def canonical_params(config: SystemConfig) -> OneAndNParams:
    """
    Extract (n, p_n, mu1, mun) from a canonical or single-class-need-n config

    Raises:
        ConfigError: if the config is not of the 1-and-n form
    """
    if config.is_canonical:
        small, large = sorted(config.classes, key=lambda c: c.need)
        return OneAndNParams(n=config.n, p_n=large.prob, mu1=small.rate, mun=large.rate)
    if len(config.classes) == 1 and config.classes[0].need == config.n:
        only = config.classes[0]
        return OneAndNParams(n=config.n, p_n=1.0, mu1=only.rate, mun=only.rate)
    raise ConfigError(f"exact 1-and-n evaluation needs classes with needs {{1, {config.n}}}, got {config.needs}")


def work_per_job(config: SystemConfig) -> float:
    """Expected server-time demanded by one job, E[need / rate]"""
    return math.fsum(c.prob * c.need / c.rate for c in config.classes)


def offered_load_fraction(arrival_rate: float, config: SystemConfig) -> float:
    """Demanded work rate over capacity: lambda * E[need / rate] / n"""
    if arrival_rate < 0:
        raise ConfigError(f"arrival rate must be non-negative, got {arrival_rate}")
    return arrival_rate * work_per_job(config) / config.n


def capacity_arrival_rate(fraction: float, config: SystemConfig) -> float:
    """Arrival rate at which offered_load_fraction equals fraction"""
    return fraction * config.n / work_per_job(config)


def parse_config(text: str) -> SystemConfig:
    """
    Parse a JSON config document

    Raises:
        ConfigError: malformed JSON (with byte offset) or schema violations
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode('utf-8'))
        raise ConfigError(f"malformed JSON config at byte offset {offset}: {e.msg}")

    try:
        config = SystemConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config document: {e}")
    validate_config(config)
    return _sorted_config(config.n, list(config.classes), config.family)


def load_config(path: Union[str, Path]) -> SystemConfig:
    """Read and validate a JSON config file"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    logger.info(f"Loading config from {path}")
    return parse_config(path.read_text(encoding='utf-8'))
