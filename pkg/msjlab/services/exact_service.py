"""
Closed-form evaluation of the canonical 1-and-n saturated system

States use the (a, b) labels: a counts n-server jobs present (in service or
blocked at the head), b counts 1-server jobs in service. Completion states
are indexed one-dimensionally by b: index 0 is (1, 0), index b < n is (1, b)
and index n is (0, n).
"""
import math
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from msjlab.core.config import Settings
from msjlab.core.dependencies import get_settings
from msjlab.core.exceptions import CapacityExceededError, ConfigError, SolverError
from msjlab.schemas import ExactResult, OneAndNParams, PowerLawFamily, StateDistribution, ThroughputResult
from msjlab.utils.logger import get_logger
from msjlab.utils.summation import NeumaierSum

logger = get_logger(__name__)

# powers of p1 below this contribute nothing
FLUSH_BELOW = 1e-320
# terms per vectorized block of the streamed sums
CHUNK = 1 << 16
VERIFY_RTOL = 1e-9

State = Tuple[int, int]


def _check(params: OneAndNParams) -> None:
    if params.p_n <= 0.0:
        raise ConfigError("p_n = 0 has no 1-and-n closed form; use the oracle or the simulator for the M/M/n case")
    if params.n < 2 and params.p_n < 1.0:
        raise ConfigError(f"a 1-and-n system needs n >= 2, got n={params.n}")


def _p1_pow(p_n: float, b: int) -> float:
    """p1^b evaluated as exp(b log1p(-p_n)), which keeps accuracy when p_n is tiny"""
    if b == 0:
        return 1.0
    if p_n >= 1.0:
        return 0.0
    value = math.exp(b * math.log1p(-p_n))
    return value if value >= FLUSH_BELOW else 0.0


def harmonic(i: np.ndarray) -> np.ndarray:
    """H_i = psi(i + 1) + Euler's gamma, elementwise"""
    return special.digamma(np.asarray(i, dtype=float) + 1.0) + np.euler_gamma


def _p1_power_chunks(p_n: float, stop: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Yield (b, p1^b) blocks for b = 1 .. stop-1, ending once the powers underflow"""
    if p_n >= 1.0:
        return
    log_p1 = math.log1p(-p_n)
    for start in range(1, stop, CHUNK):
        b = np.arange(start, min(start + CHUNK, stop), dtype=float)
        powers = np.exp(b * log_p1)
        live = powers >= FLUSH_BELOW
        if not live.all():
            cut = int(np.argmin(live))
            if cut:
                yield b[:cut], powers[:cut]
            return
        yield b, powers


def _power_vector(p_n: float, n: int) -> np.ndarray:
    """p1^b for b = 0 .. n"""
    powers = np.zeros(n + 1)
    powers[0] = 1.0
    if p_n < 1.0:
        powers[1:] = np.exp(np.arange(1, n + 1) * math.log1p(-p_n))
        powers[powers < FLUSH_BELOW] = 0.0
    return powers


def _normalized(states: List[State], weights: np.ndarray) -> StateDistribution:
    total = math.fsum(weights)
    return StateDistribution(states=states, mass=weights / total)


def _boundary_delta(n: int, p_n: float, ratio: float, harmonic_prev: float) -> float:
    return math.fsum([n - 1, 1.0 / p_n, -ratio * harmonic_prev, -ratio / (n * p_n)])


def completion_states(params: OneAndNParams) -> List[State]:
    """Completion states in one-dimensional index order"""
    if params.p_n >= 1.0:
        return [(1, 0)]
    return [(1, b) for b in range(params.n)] + [(0, params.n)]


def state_rates(params: OneAndNParams) -> np.ndarray:
    """Completion rate of each completion state: mun, b mu1, n mu1"""
    if params.p_n >= 1.0:
        return np.array([params.mun])
    rates = np.arange(params.n + 1, dtype=float) * params.mu1
    rates[0] = params.mun
    return rates


class ExactService:
    """Closed forms for throughput, stationary laws and E[Delta(Y_d)] of the 1-and-n system"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def _check_cap(self, params: OneAndNParams) -> None:
        if params.n + 1 > self.settings.MATERIALIZE_CAP:
            raise CapacityExceededError(
                f"n={params.n} exceeds the materialization cap {self.settings.MATERIALIZE_CAP}; "
                f"use throughput_exact / mean_delta_yd, which stream their sums",
                estimate=params.n + 1,
            )

    def transition_dist(self, params: OneAndNParams) -> StateDistribution:
        """Stationary law of the embedded chain that moves on every arrival or completion"""
        _check(params)
        self._check_cap(params)
        n, p_n = params.n, params.p_n

        if p_n >= 1.0:
            return _normalized([(0, 0), (1, 0)], np.array([1.0, 1.0]))

        powers = _power_vector(p_n, n)
        arrival = powers[:n].copy()
        arrival[n - 1] /= p_n
        completing = np.append(powers[:n], powers[n] / p_n)

        states = [(0, b) for b in range(n)] + completion_states(params)
        return _normalized(states, np.concatenate([arrival, completing]))

    def time_avg_dist(self, params: OneAndNParams) -> StateDistribution:
        """Time-average stationary law P over completion states"""
        _check(params)
        self._check_cap(params)
        n, p_n, mu1, mun = params.n, params.p_n, params.mu1, params.mun

        if p_n >= 1.0:
            return _normalized([(1, 0)], np.array([1.0]))

        powers = _power_vector(p_n, n)
        weights = np.empty(n + 1)
        weights[0] = 1.0 / mun
        weights[1:n] = powers[1:n] / (np.arange(1, n) * mu1)
        weights[n] = powers[n] / (n * mu1 * p_n)
        return _normalized(completion_states(params), weights)

    def completion_dist(self, params: OneAndNParams) -> StateDistribution:
        """Completion-average stationary law: p1^b p_n for (1, b), p1^n for (0, n)"""
        _check(params)
        self._check_cap(params)
        n, p_n = params.n, params.p_n

        if p_n >= 1.0:
            return _normalized([(1, 0)], np.array([1.0]))

        powers = _power_vector(p_n, n)
        weights = np.append(powers[:n] * p_n, powers[n])
        return _normalized(completion_states(params), weights)

    def throughput_exact(self, params: OneAndNParams) -> ThroughputResult:
        """
        Saturated throughput mu and n-server completion rate C' = mu p_n

        1/C' sums the expected time in (1, 0), in (0, n) and in the states
        (1, b), 0 < b < n, per n-server job completion.
        """
        _check(params)
        n, p_n, mu1, mun = params.n, params.p_n, params.mu1, params.mun

        cycle = NeumaierSum(1.0 / mun)
        for b, powers in _p1_power_chunks(p_n, n):
            cycle.add(math.fsum(powers / (b * mu1)))
        cycle.add(_p1_pow(p_n, n) / (n * mu1 * p_n))

        mu = 1.0 / (p_n * cycle.value)
        return ThroughputResult(mu=mu, c_prime=mu * p_n)

    def delta_tilde(self, params: OneAndNParams, mu: float) -> np.ndarray:
        """
        Relative completions pinned so that the (1, 0) entry is zero

        Entry i is i - (mu/mu1) H_i for 0 < i < n; entry n adds the return
        time from (0, n).
        """
        _check(params)
        self._check_cap(params)
        n, p_n, mu1 = params.n, params.p_n, params.mu1

        if p_n >= 1.0:
            return np.zeros(1)

        ratio = mu / mu1
        i = np.arange(1, n, dtype=float)
        values = np.zeros(n + 1)
        values[1:n] = i - ratio * harmonic(i)
        values[n] = _boundary_delta(n, p_n, ratio, float(harmonic(n - 1)))
        return values

    def mean_delta_yd(self, params: OneAndNParams, materialize: bool = False) -> ExactResult:
        """
        E[Delta(Y_d)] and the heavy-traffic scaled queue length E[Delta(Y_d)] + 1

        Args:
            params: Canonical 1-and-n parameters
            materialize: Also return the delta_tilde vector (subject to the cap)

        Returns:
            ExactResult with mu, C', E[Delta(Y_d)] and the scaled queue limit
        """
        throughput = self.throughput_exact(params)
        mu, n, p_n, mu1 = throughput.mu, params.n, params.p_n, params.mu1

        if p_n >= 1.0:
            return ExactResult(
                mu=mu, c_prime=throughput.c_prime,
                delta_tilde=np.zeros(1) if materialize else None,
                mean_delta_yd=0.0, scaled_queue_limit=1.0,
            )

        ratio = mu / mu1
        total = NeumaierSum()
        for i, powers in _p1_power_chunks(p_n, n):
            terms = powers * p_n * (1.0 - ratio / i) * (i - ratio * harmonic(i))
            total.add(math.fsum(terms))

        # p1^n is zero whenever the chunks above ended early
        tail = _p1_pow(p_n, n)
        if tail > 0.0:
            boundary = _boundary_delta(n, p_n, ratio, float(harmonic(n - 1)))
            total.add(tail * (1.0 - ratio / n) * boundary)
        value = total.value

        if n <= self.settings.VERIFY_MAX_N and n + 1 <= self.settings.MATERIALIZE_CAP:
            self._verify_offset_identity(params, mu, value)

        delta = None
        if materialize:
            delta = self.delta_tilde(params, mu)

        logger.debug(f"Exact 1-and-n n={n} p_n={p_n}: mu={mu!r}, E[Delta(Y_d)]={value!r}")
        return ExactResult(
            mu=mu, c_prime=throughput.c_prime, delta_tilde=delta,
            mean_delta_yd=value, scaled_queue_limit=value + 1.0,
        )

    def _verify_offset_identity(self, params: OneAndNParams, mu: float, value: float) -> None:
        """Recompute E[Delta(Y_d)] as sum_y (pi^d_y - P_y) delta_tilde(y)"""
        pi_d = self.completion_dist(params).mass
        time_avg = self.time_avg_dist(params).mass
        terms = (pi_d - time_avg) * self.delta_tilde(params, mu)
        check = math.fsum(terms)
        scale = math.fsum(np.abs(terms))
        if abs(check - value) > VERIFY_RTOL * max(abs(value), 1e-6 * scale, 1e-300):
            logger.error(f"Offset identity failed for {params}: streamed {value!r}, distribution form {check!r}")
            raise SolverError("closed-form E[Delta(Y_d)] disagrees with the distribution identity",
                              residual=abs(check - value))

    def alpha_curve(self, n: int, alpha_grid: Sequence[float], mu1: float, mun: float,
                    c: float = 1.0) -> List[Dict[str, float]]:
        """
        Exact mu and E[Delta(Y_d)] along p_n = c n^-alpha for a fixed n

        Returns:
            One dict per alpha with keys alpha, p_n, mu, mean_delta_yd
        """
        rows = []
        for alpha in alpha_grid:
            p_n = PowerLawFamily(c=c, alpha=alpha).p_n(n, clamp=True)
            result = self.mean_delta_yd(OneAndNParams(n=n, p_n=p_n, mu1=mu1, mun=mun))
            rows.append({
                "alpha": alpha,
                "p_n": p_n,
                "mu": result.mu,
                "mean_delta_yd": result.mean_delta_yd,
            })
        logger.info(f"Exact alpha curve for n={n}: {len(rows)} points")
        return rows


# Global exact service instance
_exact_service: Optional[ExactService] = None


def get_exact_service() -> ExactService:
    """Get or create the exact service bound to the process settings"""
    global _exact_service
    if _exact_service is None:
        _exact_service = ExactService()
    return _exact_service
