"""
Pydantic schemas for configurations and results
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse


# System description schemas
class JobClass(BaseModel):
    """One job class: servers needed, draw probability, exponential service rate"""
    model_config = ConfigDict(frozen=True)

    need: int
    prob: float
    rate: float


class PowerLawFamily(BaseModel):
    """p_n = c * n^(-alpha)"""
    model_config = ConfigDict(frozen=True)

    c: float = Field(1.0, gt=0)
    alpha: float = Field(..., ge=0)

    def p_n(self, n: int, clamp: bool = False) -> float:
        """
        Large-job probability at server count n

        Args:
            n: Server count
            clamp: Clamp into [0, 1] instead of rejecting values outside (0, 1)
        """
        from msjlab.core.exceptions import ConfigError

        value = self.c * float(n) ** (-self.alpha)
        if clamp:
            return min(max(value, 0.0), 1.0)
        if not 0.0 < value < 1.0:
            raise ConfigError(f"p_n = {value!r} at n={n} is outside (0, 1) for c={self.c}, alpha={self.alpha}")
        return value


class SystemConfig(BaseModel):
    """Server count plus the ordered list of job classes"""
    model_config = ConfigDict(frozen=True)

    n: int
    classes: List[JobClass]
    family: Optional[PowerLawFamily] = None

    @property
    def needs(self) -> List[int]:
        return [c.need for c in self.classes]

    @property
    def probs(self) -> List[float]:
        return [c.prob for c in self.classes]

    @property
    def rates(self) -> List[float]:
        return [c.rate for c in self.classes]

    @property
    def is_canonical(self) -> bool:
        """Exactly two classes with needs {1, n}"""
        return len(self.classes) == 2 and self.n >= 2 and sorted(self.needs) == [1, self.n]


class OneAndNParams(BaseModel):
    """Parameters of a canonical 1-and-n system"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    p_n: float = Field(..., ge=0, le=1)
    mu1: float = Field(..., gt=0)
    mun: float = Field(..., gt=0)

    @property
    def p1(self) -> float:
        return 1.0 - self.p_n


# Saturated-system schemas
class SatState(NamedTuple):
    """Per-class counts in service plus the blocked head-of-line class (or None)"""

    in_service: Tuple[int, ...]
    head: Optional[int]

    def label(self, config: SystemConfig) -> str:
        counts = ",".join(f"{count}x{need}" for count, need in zip(self.in_service, config.needs))
        head = "-" if self.head is None else str(config.needs[self.head])
        return f"[{counts}|head={head}]"


class SatChain(BaseModel):
    """Completion-state chain of a saturated system; every transition is a completion"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: SystemConfig
    states: List[SatState]
    index: Dict[SatState, int]
    nu: np.ndarray
    service_rate: np.ndarray
    kernel: sparse.csr_matrix

    @property
    def size(self) -> int:
        return len(self.states)


# Result schemas
class StateDistribution(BaseModel):
    """Probability vector over an ordered list of states"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    states: List[Any]
    mass: np.ndarray

    def as_dict(self) -> Dict[Any, float]:
        return {state: float(m) for state, m in zip(self.states, self.mass)}

    def __getitem__(self, state: Any) -> float:
        return float(self.mass[self.states.index(state)])

    def __len__(self) -> int:
        return len(self.states)


class ThroughputResult(BaseModel):
    mu: float
    c_prime: float


class ExactResult(BaseModel):
    """Closed-form quantities of a canonical 1-and-n system"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: float
    c_prime: float
    delta_tilde: Optional[np.ndarray] = None
    mean_delta_yd: float
    scaled_queue_limit: float


class OracleResult(BaseModel):
    """Stationary and Poisson solution of an enumerated saturated chain"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: float
    time_avg: StateDistribution
    completion_avg: StateDistribution
    delta: np.ndarray
    mean_delta_yd: float
    poisson_residual: float
    stationary_residual: float

    @property
    def scaled_queue_limit(self) -> float:
        return self.mean_delta_yd + 1.0


class Regime(str, Enum):
    N_SERVER_DOMINATED = "NServerDominated"
    BALANCED = "Balanced"
    ONE_SERVER_POLYNOMIAL = "OneServerDominatedPolynomial"
    ONE_SERVER_LOG_BOUNDARY = "OneServerDominatedLogBoundary"
    ONE_SERVER_GENERAL = "OneServerDominatedGeneral"


class ConvergenceRow(BaseModel):
    n: int
    p_n: float
    exact_mu: float
    asym_mu: float
    mu_ratio: float
    exact_delta: float
    asym_delta: float
    delta_ratio: float
    # the other regime's leading-order formulas, plotted for contrast
    alt_mu: float
    alt_delta: float


# Simulation schemas
class SimConfig(BaseModel):
    """One simulation run of the open MSJ FCFS queue"""

    system: SystemConfig
    arrival_rate: float = 0.0
    jobs: int = Field(1_000_000, gt=0)
    warmup_jobs: Optional[int] = None
    batches: int = 20
    seed: int = 0
    saturated: bool = False
    check_invariants: bool = False
    max_queue: Optional[int] = None

    @model_validator(mode="after")
    def check_budget(self) -> "SimConfig":
        if self.warmup_jobs is None:
            self.warmup_jobs = self.jobs // 10
        if not 0 <= self.warmup_jobs < self.jobs:
            raise ValueError(f"jobs ({self.jobs}) must exceed warmup_jobs ({self.warmup_jobs})")
        if self.batches < 2:
            raise ValueError(f"batches must be at least 2, got {self.batches}")
        if self.jobs - self.warmup_jobs < self.batches:
            raise ValueError("fewer measured jobs than batches")
        if not self.saturated and self.arrival_rate <= 0:
            raise ValueError(f"arrival rate must be positive, got {self.arrival_rate}")
        return self


class SimResult(BaseModel):
    """Time averages over the measured part of a run"""

    mean_q: float
    ci_halfwidth: float
    mean_n_sys: float
    n_sys_ci_halfwidth: float
    util: float
    throughput: float
    throughput_ci_halfwidth: float
    mean_response: float
    response_ci_halfwidth: float
    rho: Optional[float] = None
    arrival_rate: float
    completed_jobs: int
    measured_time: float
    seed: int
    rng: str


class HeavyTrafficRow(BaseModel):
    rho: float
    arrival_rate: float
    scaled_q: float
    scaled_q_ci: float
    scaled_n_sys: float
    scaled_n_sys_ci: float
    limit: float
    gap: float
    gap_ci: float
    gap_shrinking: bool
    result: SimResult


class SweepRow(BaseModel):
    setting: str
    n: int
    alpha: float
    p: float
    fraction: float
    mode: Literal["capacity", "stability"]
    arrival_rate: float
    rho: float
    capacity_fraction: float
    stability_mu: float
    stable: bool
    result: Optional[SimResult] = None
    note: str = ""


# CLI schemas
Subcommand = Literal["exact", "asymptotic", "saturated-solve", "simulate", "sweep", "compare"]


class RunSpec(BaseModel):
    """A fully described CLI invocation"""

    subcommand: Subcommand
    config_path: Optional[Path] = None
    output: str = "-"
    format: Literal["csv", "svg", "both"] = "csv"
    overrides: Dict[str, Any] = Field(default_factory=dict)
