"""Regime classification and leading-order asymptotics for the 1-and-n system"""
import math
from typing import List, Optional, Sequence, Tuple

from msjlab.core.exceptions import ConfigError, UnsupportedRegimeError
from msjlab.schemas import ConvergenceRow, OneAndNParams, PowerLawFamily, Regime
from msjlab.services.exact_service import ExactService, get_exact_service
from msjlab.utils.logger import get_logger

logger = get_logger(__name__)


def classify_regime(family: PowerLawFamily) -> Regime:
    """
    Regime of p_n = c n^-alpha

    alpha < 1 is n-server dominated, alpha = 1 balanced, alpha > 1 is
    1-server dominated with p_n = o(1/(n ln n)).
    """
    if family.alpha < 1.0:
        return Regime.N_SERVER_DOMINATED
    if family.alpha == 1.0:
        return Regime.BALANCED
    return Regime.ONE_SERVER_POLYNOMIAL


def _mu_n_server(p_n: float, mu1: float) -> float:
    return mu1 / (p_n * math.log(1.0 / p_n))


def _mu_one_server(n: int, alpha: float, mu1: float, mun: float) -> float:
    return mu1 * (n - n ** (2.0 - alpha) * (math.log(n) + mu1 / mun - 1.0))


def _delta_n_server(p_n: float) -> float:
    return 1.0 / (2.0 * p_n)


def _delta_one_server(n: int, alpha: float) -> float:
    return 0.5 * n ** (2.0 - alpha) * math.log(n) ** 2


def throughput_asym(n: int, family: PowerLawFamily, mu1: float, mun: float,
                    regime: Optional[Regime] = None) -> float:
    """
    Leading-order throughput with the o(1) terms dropped

    Regimes 1 and 2 give mu1 / (p_n ln(1/p_n)). The polynomial 1-server
    dominated regime keeps the lower-order terms
    mu1 (n - n^(2-alpha) (ln n + mu1/mun - 1)). A declared general 1-server
    dominated regime (p_n = o(1/(n ln n))) gives n mu1.

    Raises:
        UnsupportedRegimeError: for the log-boundary regime, which has two
            competing candidates (see throughput_candidates)
    """
    regime = regime or classify_regime(family)
    p_n = family.p_n(n)
    if regime in (Regime.N_SERVER_DOMINATED, Regime.BALANCED):
        return _mu_n_server(p_n, mu1)
    if regime == Regime.ONE_SERVER_POLYNOMIAL:
        return _mu_one_server(n, family.alpha, mu1, mun)
    if regime == Regime.ONE_SERVER_GENERAL:
        return n * mu1
    raise UnsupportedRegimeError(
        "p_n = theta(1/(n ln n)) has two contributing terms; use throughput_candidates"
    )


def throughput_candidates(n: int, family: PowerLawFamily, mu1: float) -> Tuple[float, float]:
    """Both 1-server-dominated candidates: n mu1 and mu1 / (p_n ln n)"""
    p_n = family.p_n(n)
    return n * mu1, mu1 / (p_n * math.log(n))


def delta_asym(n: int, family: PowerLawFamily, regime: Optional[Regime] = None) -> float:
    """
    Leading-order E[Delta(Y_d)]

    1/(2 p_n) in regimes 1 and 2 (so it depends on p_n only, not on c);
    n^(2-alpha) ln^2(n) / 2 in the polynomial 1-server dominated regime.
    """
    regime = regime or classify_regime(family)
    if regime in (Regime.N_SERVER_DOMINATED, Regime.BALANCED):
        return _delta_n_server(family.p_n(n))
    if regime == Regime.ONE_SERVER_POLYNOMIAL:
        return _delta_one_server(n, family.alpha)
    raise UnsupportedRegimeError(f"no leading-order E[Delta(Y_d)] formula for regime {regime.value}")


def convergence_table(family: PowerLawFamily, n_grid: Sequence[int], mu1: float, mun: float,
                      exact_service: Optional[ExactService] = None) -> List[ConvergenceRow]:
    """
    Exact against asymptotic values along an ascending n grid

    Each row also carries the other regime's formulas (alt_mu, alt_delta)
    for contrast in plots.
    """
    if list(n_grid) != sorted(n_grid):
        raise ConfigError("n grid must be ascending")

    exact_service = exact_service or get_exact_service()
    regime = classify_regime(family)
    rows = []
    for n in n_grid:
        p_n = family.p_n(n)
        exact = exact_service.mean_delta_yd(OneAndNParams(n=n, p_n=p_n, mu1=mu1, mun=mun))
        asym_mu = throughput_asym(n, family, mu1, mun, regime)
        asym_delta = delta_asym(n, family, regime)
        if regime == Regime.ONE_SERVER_POLYNOMIAL:
            alt_mu, alt_delta = _mu_n_server(p_n, mu1), _delta_n_server(p_n)
        else:
            alt_mu, alt_delta = n * mu1, _delta_one_server(n, family.alpha)
        rows.append(ConvergenceRow(
            n=n,
            p_n=p_n,
            exact_mu=exact.mu,
            asym_mu=asym_mu,
            mu_ratio=exact.mu / asym_mu,
            exact_delta=exact.mean_delta_yd,
            asym_delta=asym_delta,
            delta_ratio=exact.mean_delta_yd / asym_delta,
            alt_mu=alt_mu,
            alt_delta=alt_delta,
        ))
        logger.info(f"Convergence n={n}: mu ratio {rows[-1].mu_ratio:.6f}, delta ratio {rows[-1].delta_ratio:.6f}")
    return rows
