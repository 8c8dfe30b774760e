"""
Brute-force saturated-system solver for arbitrary class mixes

The saturated system keeps an infinite i.i.d. backlog. After each completion
the blocked head (if any) is admitted when it fits, then fresh jobs are drawn
and admitted until the servers are full or a drawn job does not fit; that job
becomes the new blocked head. Only completion states are stored, so every
transition of the chain is a completion and mu_y equals nu_y.
"""
import math
from collections import defaultdict, deque
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from msjlab.core.config import Settings
from msjlab.core.dependencies import get_settings
from msjlab.core.exceptions import CapacityExceededError, ConfigError, SolverError
from msjlab.schemas import OracleResult, SatChain, SatState, StateDistribution, SystemConfig
from msjlab.services.config_service import setting_config, validate_config
from msjlab.utils.logger import get_logger

logger = get_logger(__name__)

KERNEL_TOLERANCE = 1e-12
STATIONARY_TOLERANCE = 1e-12
POISSON_TOLERANCE = 1e-10

Outcome = Tuple[Tuple[int, ...], Optional[int]]


class RefillTable:
    """
    Exact refill laws, memoized on (free servers, blocked head)

    An outcome is (admitted counts per class, new blocked head or None).
    """

    def __init__(self, config: SystemConfig):
        self.needs = config.needs
        self.probs = config.probs
        self.zero = (0,) * len(self.needs)
        # refill laws with no blocked head, indexed by free servers
        self._open: List[Dict[Outcome, float]] = [{(self.zero, None): 1.0}]

    def _extend(self, free: int) -> None:
        while len(self._open) <= free:
            f = len(self._open)
            law: Dict[Outcome, float] = defaultdict(float)
            for c, (need, prob) in enumerate(zip(self.needs, self.probs)):
                if prob == 0.0:
                    continue
                if need > f:
                    law[(self.zero, c)] += prob
                    continue
                for (admitted, head), q in self._open[f - need].items():
                    law[(_bump(admitted, c), head)] += prob * q
            self._open.append(dict(law))

    def get(self, free: int, head: Optional[int] = None) -> Dict[Outcome, float]:
        if head is not None:
            if self.needs[head] > free:
                return {(self.zero, head): 1.0}
            self._extend(free - self.needs[head])
            return {(_bump(admitted, head), h): q
                    for (admitted, h), q in self._open[free - self.needs[head]].items()}
        self._extend(free)
        return self._open[free]


def _bump(counts: Tuple[int, ...], c: int, by: int = 1) -> Tuple[int, ...]:
    return counts[:c] + (counts[c] + by,) + counts[c + 1:]


def refill_distribution(free: int, head: Optional[int], config: SystemConfig) -> Dict[Outcome, float]:
    """
    Law of (admitted multiset, new head) after servers free up

    Args:
        free: Free servers, 0 <= free <= n
        head: Index of the blocked head-of-line class, admitted first if it fits
        config: System configuration

    Returns:
        Mapping from (admitted counts per class, new head) to probability
    """
    if not 0 <= free <= config.n:
        raise ConfigError(f"free servers must lie in [0, {config.n}], got {free}")
    return RefillTable(config).get(free, head)


def estimate_states(config: SystemConfig) -> int:
    """Upper bound on stored states: feasible service vectors times head choices"""
    ways = [0] * (config.n + 1)
    ways[0] = 1
    for need in config.needs:
        for s in range(need, config.n + 1):
            ways[s] += ways[s - need]
    return sum(ways) * (len(config.needs) + 1)


def _start_state(config: SystemConfig) -> SatState:
    """Fill the servers with the smallest class that is ever drawn"""
    c = min((i for i, p in enumerate(config.probs) if p > 0), key=lambda i: config.needs[i])
    count, rest = divmod(config.n, config.needs[c])
    in_service = _bump((0,) * len(config.needs), c, count)
    return SatState(in_service, c if rest else None)


def stationary_residual(chain: SatChain, pi_d: np.ndarray) -> float:
    return float(np.max(np.abs(chain.kernel.T @ pi_d - pi_d)))


def poisson_residual(chain: SatChain, delta: np.ndarray, mu: float) -> float:
    """Largest |Delta(y) - (mu_y - mu)/nu_y - sum_y' K(y, y') Delta(y')|"""
    rhs = 1.0 - mu / chain.nu
    return float(np.max(np.abs(delta - chain.kernel @ delta - rhs)))


def one_and_n_label(state: SatState, config: SystemConfig) -> Tuple[int, int]:
    """(a, b) label of a completion state of a canonical 1-and-n chain"""
    if not config.is_canonical and not (len(config.classes) == 1 and config.needs[0] == config.n):
        raise ConfigError("(a, b) labels exist only for 1-and-n configurations")
    small = config.needs.index(1) if 1 in config.needs else None
    large = config.needs.index(config.n)
    b = state.in_service[small] if small is not None and small != large else 0
    a = 1 if (state.in_service[large] > 0 or state.head == large) else 0
    return (a, b)


class OracleService:
    """Enumerates the saturated chain of a class mix and solves its stationary and Poisson equations"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def enumerate_chain(self, config: SystemConfig) -> SatChain:
        """
        Enumerate the completion states reachable from the smallest-class-full state

        Raises:
            CapacityExceededError: when the state-space estimate exceeds the cap
        """
        validate_config(config)
        estimate = estimate_states(config)
        if estimate > self.settings.STATE_CAP:
            raise CapacityExceededError(
                f"estimated {estimate} saturated states exceeds the cap of {self.settings.STATE_CAP}",
                estimate=estimate,
            )

        needs, rates = config.needs, config.rates
        refill = RefillTable(config)
        start = _start_state(config)
        index: Dict[SatState, int] = {start: 0}
        states: List[SatState] = [start]
        rows: List[int] = []
        cols: List[int] = []
        vals: List[float] = []
        nu: List[float] = []
        service: List[List[float]] = []

        pending = deque([start])
        while pending:
            state = pending.popleft()
            i = index[state]
            per_class = [count * rate for count, rate in zip(state.in_service, rates)]
            total = math.fsum(per_class)
            nu.append(total)
            service.append(per_class)

            for c, rate_c in enumerate(per_class):
                if rate_c == 0.0:
                    continue
                after = _bump(state.in_service, c, -1)
                free = config.n - sum(k * need for k, need in zip(after, needs))
                for (admitted, head), q in refill.get(free, state.head).items():
                    target = SatState(tuple(a + b for a, b in zip(after, admitted)), head)
                    j = index.get(target)
                    if j is None:
                        j = index[target] = len(states)
                        states.append(target)
                        pending.append(target)
                    rows.append(i)
                    cols.append(j)
                    vals.append(rate_c / total * q)

        size = len(states)
        kernel = sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
        row_sums = np.asarray(kernel.sum(axis=1)).ravel()
        worst = float(np.max(np.abs(row_sums - 1.0)))
        if worst > KERNEL_TOLERANCE:
            raise SolverError("refill kernel is not stochastic", residual=worst)

        logger.info(f"Enumerated saturated chain: {size} states (estimate {estimate}), {kernel.nnz} transitions")
        return SatChain(
            config=config,
            states=states,
            index=index,
            nu=np.array(nu),
            service_rate=np.array(service),
            kernel=kernel,
        )

    def _solve(self, matrix: sparse.spmatrix, rhs: np.ndarray) -> np.ndarray:
        """Dense LU for small systems, sparse LU with GMRES refinement above the threshold"""
        if matrix.shape[0] <= self.settings.DENSE_MAX_STATES:
            try:
                return np.linalg.solve(matrix.toarray(), rhs)
            except np.linalg.LinAlgError as e:
                raise SolverError(f"dense solve failed: {e}")

        matrix = matrix.tocsc()
        solution = sparse_linalg.spsolve(matrix, rhs)
        if not np.all(np.isfinite(solution)):
            raise SolverError("sparse solve produced non-finite values")
        residual = float(np.max(np.abs(matrix @ solution - rhs)))
        if residual > STATIONARY_TOLERANCE:
            logger.debug(f"Refining sparse solution with GMRES (residual {residual:.3e})")
            solution, info = sparse_linalg.gmres(matrix, rhs, x0=solution, rtol=1e-15, atol=0.0)
            if info < 0:
                raise SolverError(f"GMRES breakdown (info={info})", residual=residual)
        return solution

    def solve_stationary(self, chain: SatChain) -> Tuple[StateDistribution, StateDistribution, float]:
        """
        Completion-average and time-average laws plus the throughput

        Returns:
            (P, pi_d, mu) with P_y proportional to pi_d_y / nu_y and
            mu = 1 / sum_y(pi_d_y / nu_y)
        """
        size = chain.size
        if size == 1:
            pi_d = np.ones(1)
        else:
            system = (chain.kernel.T - sparse.identity(size, format='csr')).tolil()
            system[size - 1, :] = np.ones(size)
            rhs = np.zeros(size)
            rhs[size - 1] = 1.0
            pi_d = self._solve(system.tocsr(), rhs)

        if np.any(pi_d <= 0.0):
            worst = chain.states[int(np.argmin(pi_d))]
            logger.error(f"Zero stationary mass on reachable state {worst.label(chain.config)}")
            raise SolverError("saturated chain is reducible: a reachable state has no stationary mass")
        pi_d = pi_d / math.fsum(pi_d)

        residual = stationary_residual(chain, pi_d)
        if residual > STATIONARY_TOLERANCE:
            raise SolverError("stationary solve did not converge", residual=residual)

        holding = pi_d / chain.nu
        mean_holding = math.fsum(holding)
        mu = 1.0 / mean_holding
        time_avg = holding / mean_holding

        states = list(chain.states)
        return (StateDistribution(states=states, mass=time_avg),
                StateDistribution(states=states, mass=pi_d),
                mu)

    def throughput(self, config: SystemConfig) -> float:
        """Saturated throughput from the stationary solve alone"""
        _, _, mu = self.solve_stationary(self.enumerate_chain(config))
        return mu

    def _bordered_poisson(self, chain: SatChain, weights: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Dense LU of I - K + 1 pi_d^T, which has the pi_d-centred solution, plus one refinement step"""
        size = chain.size
        matrix = np.identity(size) - chain.kernel.toarray() + np.outer(np.ones(size), weights)
        factors = linalg.lu_factor(matrix, check_finite=False)
        delta = linalg.lu_solve(factors, rhs)
        delta += linalg.lu_solve(factors, rhs - matrix @ delta)
        return delta

    def _pinned_poisson(self, chain: SatChain, weights: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Sparse LU of I - K with the heaviest state pinned to zero, plus one refinement step"""
        size = chain.size
        anchor = int(np.argmax(weights))
        system = (sparse.identity(size, format='csr') - chain.kernel).tolil()
        system[anchor, :] = np.zeros(size)
        system[anchor, anchor] = 1.0
        system = system.tocsc()
        pinned_rhs = rhs.copy()
        pinned_rhs[anchor] = 0.0
        try:
            factors = sparse_linalg.splu(system)
        except RuntimeError as e:
            raise SolverError(f"sparse factorization failed: {e}")
        delta = factors.solve(pinned_rhs)
        delta += factors.solve(pinned_rhs - system @ delta)
        return delta

    def solve_poisson(self, chain: SatChain, time_avg: StateDistribution, pi_d: StateDistribution,
                      mu: float) -> Tuple[np.ndarray, float]:
        """
        Relative completions Delta with E[Delta(Y)] = 0, and E[Delta(Y_d)]

        (I - K) Delta = 1 - mu / nu fixes Delta up to a constant; the
        solution is shifted so that the time average vanishes.

        Raises:
            SolverError: when the residual exceeds the tolerance scaled by max(1, |Delta|_inf)
        """
        size = chain.size
        rhs = 1.0 - mu / chain.nu
        if size == 1:
            delta = np.zeros(1)
        elif size <= self.settings.DENSE_MAX_STATES:
            delta = self._bordered_poisson(chain, pi_d.mass, rhs)
        else:
            delta = self._pinned_poisson(chain, pi_d.mass, rhs)
        if not np.all(np.isfinite(delta)):
            raise SolverError("Poisson solve produced non-finite values")

        residual = poisson_residual(chain, delta, mu)
        scale = max(1.0, float(np.max(np.abs(delta))))
        if residual > POISSON_TOLERANCE * scale:
            raise SolverError("Poisson equation residual too large", residual=residual)

        delta = delta - math.fsum(time_avg.mass * delta)
        mean = math.fsum(pi_d.mass * delta)
        return delta, mean

    def solve(self, config: SystemConfig) -> OracleResult:
        """Enumerate the chain and run both solves"""
        chain = self.enumerate_chain(config)
        time_avg, pi_d, mu = self.solve_stationary(chain)
        delta, mean = self.solve_poisson(chain, time_avg, pi_d, mu)
        logger.info(f"Oracle solve n={config.n} needs={config.needs}: mu={mu!r}, E[Delta(Y_d)]={mean!r}")
        return OracleResult(
            mu=mu,
            time_avg=time_avg,
            completion_avg=pi_d,
            delta=delta,
            mean_delta_yd=mean,
            poisson_residual=poisson_residual(chain, delta, mu),
            stationary_residual=stationary_residual(chain, pi_d.mass),
        )

    def alpha_curve(self, setting: str, n: int, alpha_grid: Sequence[float],
                    c: float = 1.0) -> List[Dict[str, float]]:
        """
        Oracle throughput and E[Delta(Y_d)] along alpha for a named setting

        Returns:
            One dict per alpha with keys alpha, p, mu, mean_delta_yd, states
        """
        rows = []
        for alpha in alpha_grid:
            config = setting_config(setting, n, alpha, c)
            result = self.solve(config)
            rows.append({
                "alpha": alpha,
                "p": config.family.p_n(n, clamp=True),
                "mu": result.mu,
                "mean_delta_yd": result.mean_delta_yd,
                "states": len(result.time_avg),
            })
        return rows


# Global oracle service instance
_oracle_service: Optional[OracleService] = None


def get_oracle_service() -> OracleService:
    """Get or create the oracle service bound to the process settings"""
    global _oracle_service
    if _oracle_service is None:
        _oracle_service = OracleService()
    return _oracle_service
