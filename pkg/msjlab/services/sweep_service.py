"""
Simulation sweeps: heavy-traffic scaling check and alpha sweeps over settings

Every grid point is an independent task with its own seed derived from
(template seed, point index); results come back in grid order.
"""
from multiprocessing import get_context
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from msjlab.core.config import Settings
from msjlab.core.dependencies import get_settings
from msjlab.core.exceptions import ComputeError, ConfigError, InstabilityError
from msjlab.schemas import HeavyTrafficRow, OneAndNParams, SimConfig, SimResult, SweepRow, SystemConfig
from msjlab.services.config_service import (
    SETTINGS, canonical_params, capacity_arrival_rate, offered_load_fraction, setting_config, two_class,
)
from msjlab.services.exact_service import ExactService, get_exact_service
from msjlab.services.saturated_service import OracleService, get_oracle_service
from msjlab.services.simulation_service import simulate
from msjlab.utils.logger import get_logger

logger = get_logger(__name__)

Task = Tuple[SimConfig, Optional[float]]

# default capacity fraction relative to the stability boundary of the grid
BOUNDARY_MARGIN = 0.9
STABILITY_DEFAULT = 0.95


def point_seed(seed: int, index: int) -> int:
    """64-bit seed of grid point `index` under a template seed"""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _run_task(task: Task) -> Optional[SimResult]:
    cfg, mu = task
    try:
        return simulate(cfg, mu)
    except InstabilityError as e:
        logger.warning(f"Point with lambda={cfg.arrival_rate} flagged unstable: {e.detail}")
        return None


def run_tasks(tasks: List[Task], settings: Optional[Settings] = None,
              runner: Callable[[Task], Optional[SimResult]] = _run_task) -> List[Optional[SimResult]]:
    """
    Run simulation tasks, in parallel when more than one worker is allowed

    Returns:
        One result per task in task order; None marks an unstable point
    """
    settings = settings or get_settings()
    workers = min(settings.workers, len(tasks))
    if workers <= 1:
        return [runner(task) for task in tasks]

    logger.info(f"Running {len(tasks)} simulation points on {workers} processes")
    with get_context("spawn").Pool(processes=workers) as pool:
        return pool.map(runner, tasks, chunksize=1)


def _point(template: SimConfig, index: int, system: SystemConfig, arrival_rate: float) -> SimConfig:
    return template.model_copy(update={
        "system": system,
        "arrival_rate": arrival_rate,
        "seed": point_seed(template.seed, index),
        "saturated": False,
    })

def _run_strict(task: Task) -> SimResult:
    cfg, mu = task
    return simulate(cfg, mu)


def gap_trend_holds(rows: Sequence[HeavyTrafficRow]) -> bool:
    """True when no row's limit gap grew past the previous one by more than both CIs"""
    return all(row.gap_shrinking for row in rows)


class SweepService:
    """Heavy-traffic checks and alpha sweeps built on the closed form, the oracle and the simulator"""

    def __init__(self, settings: Optional[Settings] = None,
                 exact: Optional[ExactService] = None, oracle: Optional[OracleService] = None):
        self.settings = settings or get_settings()
        self.exact = exact or ExactService(self.settings)
        self.oracle = oracle or OracleService(self.settings)

    def heavy_traffic_check(self, params: OneAndNParams, rho_grid: Sequence[float],
                            template: SimConfig) -> List[HeavyTrafficRow]:
        """
        Simulated E[Q](1 - rho) against the limit E[Delta(Y_d)] + 1

        Args:
            params: Canonical 1-and-n parameters; mu comes from the closed form
            rho_grid: Load fractions in (0, 1)
            template: Job budget, batches and seed shared by all points

        Returns:
            One row per rho, in grid order; waiting and in-system measures both
            scaled. Each row carries |E[N](1 - rho) - limit| and whether that gap
            stayed within the CIs of the previous row's gap.
        """
        if not rho_grid:
            return []
        for rho in rho_grid:
            if not 0.0 < rho < 1.0:
                raise ConfigError(f"rho values must lie in (0, 1), got {rho}")

        exact = self.exact.mean_delta_yd(params)
        system = two_class(params.n, params.p_n, params.mu1, params.mun)
        tasks = [(_point(template, i, system, rho * exact.mu), exact.mu) for i, rho in enumerate(rho_grid)]
        results = run_tasks(tasks, self.settings, runner=_run_strict)

        rows: List[HeavyTrafficRow] = []
        for rho, (cfg, _), result in zip(rho_grid, tasks, results):
            scale = 1.0 - rho
            scaled_n_sys = result.mean_n_sys * scale
            scaled_n_sys_ci = result.n_sys_ci_halfwidth * scale
            gap = abs(scaled_n_sys - exact.scaled_queue_limit)
            shrinking = True
            if rows:
                shrinking = gap <= rows[-1].gap + rows[-1].gap_ci + scaled_n_sys_ci
            rows.append(HeavyTrafficRow(
                rho=rho,
                arrival_rate=cfg.arrival_rate,
                scaled_q=result.mean_q * scale,
                scaled_q_ci=result.ci_halfwidth * scale,
                scaled_n_sys=scaled_n_sys,
                scaled_n_sys_ci=scaled_n_sys_ci,
                limit=exact.scaled_queue_limit,
                gap=gap,
                gap_ci=scaled_n_sys_ci,
                gap_shrinking=shrinking,
                result=result,
            ))
            logger.info(f"rho={rho}: E[Q](1-rho)={rows[-1].scaled_q:.4f}, E[N](1-rho)={scaled_n_sys:.4f}, "
                        f"limit {exact.scaled_queue_limit:.4f}, gap {gap:.4f}")
        if not gap_trend_holds(rows):
            logger.warning(f"Heavy-traffic gap grew along the rho grid for {params}")
        return rows

    def stability_mu(self, system: SystemConfig) -> float:
        """Saturated throughput: closed form for 1-and-n configs, the oracle's stationary solve otherwise"""
        try:
            params = canonical_params(system)
        except ConfigError:
            return self.oracle.throughput(system)
        return self.exact.throughput_exact(params).mu

    def boundary_fraction(self, setting: str, n: int, alpha_grid: Sequence[float], c: float = 1.0) -> float:
        """
        Smallest capacity fraction at which some alpha of the grid is saturated

        Every capacity-mode fraction below this value is stable across the grid.
        """
        fractions = []
        for alpha in alpha_grid:
            system = setting_config(setting, n, alpha, c)
            try:
                fractions.append(offered_load_fraction(self.stability_mu(system), system))
            except ComputeError as e:
                logger.warning(f"No stability threshold for {setting} n={n} alpha={alpha}: {e.detail}")
        if not fractions:
            raise ConfigError(f"no alpha of the grid has a stability threshold for {setting} n={n}")
        return min(fractions)

    def default_fractions(self, setting: str, n: int, alpha_grid: Sequence[float], c: float = 1.0,
                          mode: str = "capacity") -> List[float]:
        """
        One load fraction per mode: in capacity mode just inside the stability
        boundary of the grid, in stability mode STABILITY_DEFAULT
        """
        if mode == "stability":
            return [STABILITY_DEFAULT]
        fraction = BOUNDARY_MARGIN * self.boundary_fraction(setting, n, alpha_grid, c)
        logger.info(f"Default capacity fraction for {setting} n={n}: {fraction:.4f}")
        return [fraction]

    def alpha_sweep(self, n: int, alpha_grid: Sequence[float], fractions: Optional[Sequence[float]],
                    setting: str, template: SimConfig, mode: str = "capacity", c: float = 1.0) -> List[SweepRow]:
        """
        Simulated mean queue length across alpha and load fractions for one setting

        Args:
            fractions: Load fractions in (0, 1); empty or None picks default_fractions
            mode: "capacity" sets the offered work rate to f n (see
                offered_load_fraction); "stability" sets lambda = f mu

        Returns:
            One row per (alpha, fraction) in grid order. Points at or past the
            stability threshold, whose threshold could not be computed, or that
            blow up in simulation, are flagged with stable=False and no result.
        """
        if setting not in SETTINGS:
            raise ConfigError(f"unknown setting '{setting}', expected one of {', '.join(SETTINGS)}")
        if mode not in ("stability", "capacity"):
            raise ConfigError(f"unknown load mode '{mode}', expected stability or capacity")
        if list(alpha_grid) != sorted(alpha_grid):
            raise ConfigError("alpha grid must be ascending")
        if not fractions:
            fractions = self.default_fractions(setting, n, alpha_grid, c, mode)
        for f in fractions:
            if not 0.0 < f < 1.0:
                raise ConfigError(f"load fractions must lie in (0, 1), got {f}")

        points = []
        failures: Dict[float, str] = {}
        for alpha in alpha_grid:
            system = setting_config(setting, n, alpha, c)
            try:
                mu = self.stability_mu(system)
            except ComputeError as e:
                logger.warning(f"Stability threshold failed for {setting} n={n} alpha={alpha}: {e.detail}")
                failures[alpha] = f"stability threshold unavailable: {e.detail}"
                mu = float('nan')
            for f in fractions:
                arrival_rate = f * mu if mode == "stability" else capacity_arrival_rate(f, system)
                points.append((alpha, f, system, mu, arrival_rate))

        runnable = [i for i, point in enumerate(points) if point[4] < point[3]]
        tasks = [(_point(template, i, points[i][2], points[i][4]), points[i][3]) for i in runnable]
        results = dict(zip(runnable, run_tasks(tasks, self.settings)))

        rows = []
        for i, (alpha, f, system, mu, arrival_rate) in enumerate(points):
            result = results.get(i)
            note = ""
            if alpha in failures:
                note = failures[alpha]
            elif i not in results:
                note = "offered rate at or above the stability threshold"
            elif result is None:
                note = "apparent instability"
            rows.append(SweepRow(
                setting=setting,
                n=n,
                alpha=alpha,
                p=system.family.p_n(n, clamp=True),
                fraction=f,
                mode=mode,
                arrival_rate=arrival_rate,
                rho=arrival_rate / mu,
                capacity_fraction=offered_load_fraction(arrival_rate, system),
                stability_mu=mu,
                stable=result is not None,
                result=result,
                note=note,
            ))
        logger.info(f"Sweep {setting} n={n}: {len(rows)} points, {sum(not r.stable for r in rows)} flagged")
        return rows


def get_sweep_service() -> SweepService:
    """Sweep service wired to the shared exact and oracle services"""
    return SweepService(get_settings(), get_exact_service(), get_oracle_service())
