"""
Event-driven simulation of the open MSJ FCFS queue with head-of-line blocking

All durations are exponential, so the next event is drawn from one race at
total rate lambda + sum_c count_c * rate_c and the winner is picked in
proportion to its rate. A completing job is uniform among the in-service jobs
of its class.
"""
import bisect
import itertools
import math
from collections import deque
from typing import Iterator, List, Optional

import numpy as np
from scipy import stats

from msjlab.core.config import Settings
from msjlab.core.dependencies import get_settings
from msjlab.core.exceptions import InstabilityError
from msjlab.schemas import SimConfig, SimResult
from msjlab.services.config_service import validate_config
from msjlab.utils.logger import get_logger

logger = get_logger(__name__)

BLOCK = 1 << 16
CONFIDENCE = 0.95


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator for one (seed, stream) pair"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def _draws(rng: np.random.Generator, kind: str) -> Iterator[float]:
    """Endless stream of variates generated a block at a time"""
    while True:
        if kind == "exp":
            yield from rng.standard_exponential(BLOCK).tolist()
        else:
            yield from rng.random(BLOCK).tolist()


def _halfwidth(samples: List[float]) -> float:
    """Student-t half-width of a batch-means confidence interval"""
    values = np.asarray(samples, dtype=float)
    if len(values) < 2 or not np.all(np.isfinite(values)):
        return float('nan')
    quantile = stats.t.ppf(0.5 + CONFIDENCE / 2, len(values) - 1)
    return float(quantile * values.std(ddof=1) / math.sqrt(len(values)))


class Simulator:
    """One replication of the open (or saturated) queue"""

    def __init__(self, cfg: SimConfig, settings: Optional[Settings] = None):
        self.cfg = cfg
        self.settings = settings or get_settings()
        validate_config(cfg.system)

    def run(self, mu: Optional[float] = None) -> SimResult:
        """
        Simulate until the job budget is spent

        Args:
            mu: Saturated throughput, used only to report rho = lambda / mu

        Returns:
            Time averages over the post-warmup period with batch-means CIs
        """
        cfg = self.cfg
        system = cfg.system
        n, needs, rates = system.n, system.needs, system.rates
        k = len(needs)
        cum_probs = list(itertools.accumulate(system.probs))
        cum_probs[-1] = 1.0
        saturated = cfg.saturated
        lam = 0.0 if saturated else cfg.arrival_rate
        max_queue = cfg.max_queue or self.settings.MAX_QUEUE
        check = cfg.check_invariants

        warmup = cfg.warmup_jobs
        batches = cfg.batches
        per_batch = (cfg.jobs - warmup) // batches
        stop = warmup + per_batch * batches

        exp_rng, uni_rng = (make_generator(cfg.seed, s) for s in (0, 1))
        next_exp = _draws(exp_rng, "exp").__next__
        next_uni = _draws(uni_rng, "uni").__next__

        queue: deque = deque()                      # (class, arrival time, sequence)
        started: List[List[float]] = [[] for _ in range(k)]   # arrival times in service
        counts = [0] * k
        busy = 0
        in_service = 0
        service_rate = 0.0
        now = 0.0
        completed = 0
        arrivals = 0
        last_started = -1

        area_q = [0.0] * batches
        area_sys = [0.0] * batches
        area_busy = [0.0] * batches
        span = [0.0] * batches
        response = [0.0] * batches
        batch = 0 if warmup == 0 else -1

        def draw_class() -> int:
            return min(bisect.bisect_right(cum_probs, next_uni()), k - 1)

        head = -1
        if saturated:
            head = draw_class()
            while needs[head] <= n - busy:
                counts[head] += 1
                busy += needs[head]
                in_service += 1
                started[head].append(0.0)
                head = draw_class()
            service_rate = sum(counts[cls] * rates[cls] for cls in range(k))

        while completed < stop:
            total = lam + service_rate
            dt = next_exp() / total
            if batch >= 0:
                waiting = len(queue)
                area_q[batch] += waiting * dt
                area_sys[batch] += (waiting + in_service) * dt
                area_busy[batch] += busy * dt
                span[batch] += dt
            now += dt
            x = next_uni() * total

            if x < lam:
                c = min(bisect.bisect_right(cum_probs, x / lam), k - 1)
                if not queue and needs[c] <= n - busy:
                    counts[c] += 1
                    busy += needs[c]
                    in_service += 1
                    started[c].append(now)
                    if check:
                        assert arrivals > last_started, "FCFS start order violated"
                        last_started = arrivals
                else:
                    queue.append((c, now, arrivals))
                    if len(queue) > max_queue:
                        logger.error(f"Queue passed {max_queue} jobs at t={now:.1f} (lambda={lam})")
                        raise InstabilityError(f"apparent instability: queue exceeded {max_queue} jobs")
                arrivals += 1
            else:
                x -= lam
                c = -1
                for cls in range(k):
                    weight = counts[cls] * rates[cls]
                    if x < weight:
                        c = cls
                        break
                    x -= weight
                if c < 0:
                    c = max(cls for cls in range(k) if counts[cls] > 0)
                    position = counts[c] - 1
                else:
                    position = min(int(x / (counts[c] * rates[c]) * counts[c]), counts[c] - 1)

                jobs = started[c]
                arrived = jobs[position]
                jobs[position] = jobs[-1]
                jobs.pop()
                counts[c] -= 1
                busy -= needs[c]
                in_service -= 1
                completed += 1

                measured = completed - warmup
                if measured >= 1:
                    response[(measured - 1) // per_batch] += now - arrived
                if measured >= 0:
                    batch = min(measured // per_batch, batches - 1)

                free = n - busy
                if saturated:
                    while needs[head] <= free:
                        counts[head] += 1
                        busy += needs[head]
                        in_service += 1
                        started[head].append(now)
                        free -= needs[head]
                        head = draw_class()
                else:
                    while queue and needs[queue[0][0]] <= free:
                        c, arrived, order = queue.popleft()
                        counts[c] += 1
                        busy += needs[c]
                        in_service += 1
                        started[c].append(arrived)
                        free -= needs[c]
                        if check:
                            assert order > last_started, "FCFS start order violated"
                            last_started = order

            service_rate = sum(counts[cls] * rates[cls] for cls in range(k))
            if check:
                assert busy == sum(counts[cls] * needs[cls] for cls in range(k)) <= n, "server accounting broken"
                assert not queue or needs[queue[0][0]] > n - busy, "head of line fits but waits"

        return self._summarize(area_q, area_sys, area_busy, span, response, per_batch, mu)

    def _summarize(self, area_q, area_sys, area_busy, span, response, per_batch, mu) -> SimResult:
        cfg = self.cfg
        measured_time = math.fsum(span)
        measured_jobs = per_batch * cfg.batches
        lam = 0.0 if cfg.saturated else cfg.arrival_rate
        nan = float('nan')

        q_batches = [a / t for a, t in zip(area_q, span)]
        sys_batches = [a / t for a, t in zip(area_sys, span)]
        throughput_batches = [per_batch / t for t in span]
        response_batches = [r / per_batch for r in response]

        result = SimResult(
            mean_q=nan if cfg.saturated else math.fsum(area_q) / measured_time,
            ci_halfwidth=nan if cfg.saturated else _halfwidth(q_batches),
            mean_n_sys=nan if cfg.saturated else math.fsum(area_sys) / measured_time,
            n_sys_ci_halfwidth=nan if cfg.saturated else _halfwidth(sys_batches),
            util=math.fsum(area_busy) / (cfg.system.n * measured_time),
            throughput=measured_jobs / measured_time,
            throughput_ci_halfwidth=_halfwidth(throughput_batches),
            mean_response=nan if cfg.saturated else math.fsum(response) / measured_jobs,
            response_ci_halfwidth=nan if cfg.saturated else _halfwidth(response_batches),
            rho=lam / mu if (mu and not cfg.saturated) else None,
            arrival_rate=lam,
            completed_jobs=measured_jobs,
            measured_time=measured_time,
            seed=cfg.seed,
            rng=self.settings.RNG_ALGORITHM,
        )
        logger.debug(f"Simulated {measured_jobs} jobs at lambda={lam}: E[Q]={result.mean_q}, util={result.util:.4f}")
        return result


def simulate(cfg: SimConfig, mu: Optional[float] = None, settings: Optional[Settings] = None) -> SimResult:
    """Run one simulation; see Simulator.run"""
    return Simulator(cfg, settings).run(mu)
