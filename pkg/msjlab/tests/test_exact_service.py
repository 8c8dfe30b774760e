import math

import numpy as np
import pytest

from msjlab.core.config import Settings
from msjlab.core.exceptions import CapacityExceededError, ConfigError
from msjlab.schemas import OneAndNParams
from msjlab.services.exact_service import CHUNK, ExactService, harmonic, state_rates
from msjlab.utils.grid_utils import parse_float_grid

exact = ExactService(Settings())


def test_throughput_n2(n2_params):
    result = exact.throughput_exact(n2_params)
    assert result.mu == pytest.approx(8 / 7, rel=1e-12, abs=0)
    assert result.c_prime == pytest.approx(4 / 7, rel=1e-12, abs=0)


def test_mean_delta_n2(n2_params):
    result = exact.mean_delta_yd(n2_params, materialize=True)
    assert result.mean_delta_yd == pytest.approx(4 / 49, rel=1e-12, abs=0)
    assert result.scaled_queue_limit == pytest.approx(53 / 49, rel=1e-12, abs=0)
    np.testing.assert_allclose(result.delta_tilde, [0.0, -1 / 7, 5 / 7], rtol=0, atol=1e-14)


def test_transition_dist_n2(n2_params):
    dist = exact.transition_dist(n2_params).as_dict()
    expected = {(0, 0): 0.25, (0, 1): 0.25, (0, 2): 0.125, (1, 0): 0.25, (1, 1): 0.125}
    assert dist.keys() == expected.keys()
    for state, mass in expected.items():
        assert dist[state] == pytest.approx(mass, abs=1e-15)


def test_time_avg_and_completion_dist_n2(n2_params):
    time_avg = exact.time_avg_dist(n2_params)
    assert time_avg.states == [(1, 0), (1, 1), (0, 2)]
    np.testing.assert_allclose(time_avg.mass, [4 / 7, 2 / 7, 1 / 7], rtol=1e-14)

    completion = exact.completion_dist(n2_params)
    np.testing.assert_allclose(completion.mass, [0.5, 0.25, 0.25], rtol=1e-14)


def test_all_jobs_large():
    params = OneAndNParams(n=7, p_n=1.0, mu1=1.0, mun=3.0)
    assert exact.throughput_exact(params).mu == pytest.approx(3.0, rel=1e-15)
    result = exact.mean_delta_yd(params, materialize=True)
    assert result.mean_delta_yd == 0.0
    assert list(result.delta_tilde) == [0.0]
    assert exact.time_avg_dist(params).as_dict() == {(1, 0): 1.0}
    assert exact.completion_dist(params).as_dict() == {(1, 0): 1.0}
    assert exact.transition_dist(OneAndNParams(n=2, p_n=1.0, mu1=1, mun=1)).as_dict() == \
        {(0, 0): 0.5, (1, 0): 0.5}


def test_zero_large_probability_is_rejected():
    with pytest.raises(ConfigError, match="p_n = 0"):
        exact.throughput_exact(OneAndNParams(n=4, p_n=0.0, mu1=1.0, mun=1.0))


@pytest.mark.parametrize("n", [2, 5, 50, 3000])
@pytest.mark.parametrize("p_n", [0.001, 0.3, 0.97])
def test_distributions_normalize(n, p_n):
    params = OneAndNParams(n=n, p_n=p_n, mu1=2.0, mun=0.5)
    for dist in (exact.transition_dist(params), exact.time_avg_dist(params),
                 exact.completion_dist(params)):
        assert math.fsum(dist.mass) == pytest.approx(1.0, abs=1e-12)
        assert np.all(dist.mass >= 0)


@pytest.mark.parametrize("n,p_n,mu1,mun", [(2, 0.5, 1, 1), (6, 0.2, 10, 1), (40, 0.05, 1, 10), (500, 0.01, 3, 2)])
def test_completion_rate_identity(n, p_n, mu1, mun):
    """pi_d_y mu = P_y mu_y for every completion state"""
    params = OneAndNParams(n=n, p_n=p_n, mu1=mu1, mun=mun)
    mu = exact.throughput_exact(params).mu
    pi_d = exact.completion_dist(params).mass
    time_avg = exact.time_avg_dist(params).mass
    rates = state_rates(params)
    np.testing.assert_allclose(pi_d * mu, time_avg * rates, rtol=1e-12)


@pytest.mark.parametrize("n,p_n,mu1,mun", [(2, 0.5, 1, 1), (9, 0.4, 1, 10), (300, 0.002, 5, 1)])
def test_cycle_decomposition(n, p_n, mu1, mun):
    """1/C' splits into time in (1,0), in (0,n) and in the intermediate states"""
    params = OneAndNParams(n=n, p_n=p_n, mu1=mu1, mun=mun)
    c_prime = exact.throughput_exact(params).c_prime
    p1 = 1.0 - p_n
    phases = [1.0 / mun, p1 ** n / (n * mu1 * p_n), math.fsum(p1 ** b / (b * mu1) for b in range(1, n))]
    assert 1.0 / c_prime == pytest.approx(math.fsum(phases), rel=1e-12)


def test_delta_tilde_pins_first_state():
    params = OneAndNParams(n=30, p_n=0.1, mu1=1.0, mun=2.0)
    mu = exact.throughput_exact(params).mu
    values = exact.delta_tilde(params, mu)
    assert values[0] == 0.0
    assert values[1] == pytest.approx(1 - mu, rel=1e-14)


def test_streamed_mean_matches_distribution_identity():
    params = OneAndNParams(n=1000, p_n=0.003, mu1=1.0, mun=1.0)
    result = exact.mean_delta_yd(params, materialize=True)
    pi_d = exact.completion_dist(params).mass
    time_avg = exact.time_avg_dist(params).mass
    assert math.fsum((pi_d - time_avg) * result.delta_tilde) == pytest.approx(result.mean_delta_yd, rel=1e-9)


def test_materialization_cap():
    settings = Settings()
    settings.MATERIALIZE_CAP = 100
    params = OneAndNParams(n=1000, p_n=0.01, mu1=1.0, mun=1.0)
    with pytest.raises(CapacityExceededError) as excinfo:
        ExactService(settings).time_avg_dist(params)
    assert excinfo.value.estimate == 1001
    # streamed quantities are not capped
    assert ExactService(settings).mean_delta_yd(params).mu > 0


def test_one_server_dominated_large_n():
    n = 10 ** 6
    params = OneAndNParams(n=n, p_n=n ** -2.0, mu1=1.0, mun=1.0)
    mu = exact.throughput_exact(params).mu
    assert mu / n == pytest.approx(1 - math.log(n) / n, abs=1e-4)


def test_balanced_large_n():
    n = 10 ** 6
    params = OneAndNParams(n=n, p_n=1.0 / n, mu1=1.0, mun=1.0)
    result = exact.mean_delta_yd(params)
    assert 0.8 < 2 * params.p_n * result.mean_delta_yd < 1.2


def test_tiny_p_n_underflow_is_flushed():
    params = OneAndNParams(n=10 ** 6, p_n=0.5, mu1=1.0, mun=1.0)
    result = exact.mean_delta_yd(params)
    assert math.isfinite(result.mu) and math.isfinite(result.mean_delta_yd)


def test_throughput_increases_with_alpha():
    grid = parse_float_grid("0.2:3.0:0.2")
    curve = exact.alpha_curve(10 ** 4, grid, 1.0, 1.0)
    mus = np.array([point["mu"] for point in curve])
    assert len(mus) == 15
    assert np.all(np.diff(mus) > 0)

    # concave after the inflection point
    second = np.diff(mus, 2)
    first_concave = grid[1 + int(np.argmax(second < 0))]
    assert 0.8 <= first_concave <= 1.6


def test_alpha_curve_rows():
    curve = exact.alpha_curve(10, [0.5, 1.0], 1.0, 1.0)
    assert [point["alpha"] for point in curve] == [0.5, 1.0]
    assert curve[1]["p_n"] == pytest.approx(0.1)


def test_harmonic_numbers():
    np.testing.assert_allclose(harmonic(np.arange(1, 6)), [1, 1.5, 11 / 6, 25 / 12, 137 / 60], rtol=1e-14)
    assert float(harmonic(10 ** 6)) == pytest.approx(math.log(10 ** 6) + np.euler_gamma + 0.5e-6, rel=1e-13)


@pytest.mark.parametrize("n", [CHUNK - 1, CHUNK, CHUNK + 1, 2 * CHUNK + 7])
def test_chunked_sums_match_termwise_sums(n):
    params = OneAndNParams(n=n, p_n=3.0 / n, mu1=1.5, mun=0.7)
    p1 = 1.0 - params.p_n
    powers = [p1 ** b for b in range(n + 1)]
    cycle = math.fsum([1 / params.mun, powers[n] / (n * params.mu1 * params.p_n)]
                      + [powers[b] / (b * params.mu1) for b in range(1, n)])
    mu = 1.0 / (params.p_n * cycle)
    assert exact.throughput_exact(params).mu == pytest.approx(mu, rel=1e-12)

    ratio = mu / params.mu1
    h = 0.0
    terms = []
    for i in range(1, n):
        h += 1.0 / i
        terms.append(powers[i] * params.p_n * (1 - ratio / i) * (i - ratio * h))
    boundary = n - 1 + 1 / params.p_n - ratio * h - ratio / (n * params.p_n)
    terms.append(powers[n] * (1 - ratio / n) * boundary)
    assert exact.mean_delta_yd(params).mean_delta_yd == pytest.approx(math.fsum(terms), rel=1e-9)
