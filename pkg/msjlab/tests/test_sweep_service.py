import math

import pytest

from msjlab.core.config import Settings
from msjlab.core.exceptions import ConfigError, SolverError
from msjlab.schemas import OneAndNParams, SimConfig
from msjlab.services import sweep_service
from msjlab.services.config_service import offered_load_fraction, setting_config, two_class
from msjlab.services.exact_service import ExactService
from msjlab.services.saturated_service import OracleService
from msjlab.services.sweep_service import SweepService


@pytest.fixture
def template(n2_config):
    return SimConfig(system=n2_config, arrival_rate=1.0, jobs=10_000, batches=10, seed=42)


@pytest.fixture
def sweeps(serial_settings):
    return SweepService(serial_settings)


class FailingOracle(OracleService):
    """Oracle whose stationary solve fails above a given alpha"""

    def __init__(self, settings, fail_above):
        super().__init__(settings)
        self.fail_above = fail_above

    def throughput(self, config):
        if config.family.alpha > self.fail_above:
            raise SolverError("stationary solve did not converge", residual=1e-3)
        return super().throughput(config)


def test_point_seeds_are_distinct_and_stable():
    seeds = [sweep_service.point_seed(7, i) for i in range(5)]
    assert len(set(seeds)) == 5
    assert seeds == [sweep_service.point_seed(7, i) for i in range(5)]


def test_heavy_traffic_empty_grid(n2_params, template, sweeps):
    assert sweeps.heavy_traffic_check(n2_params, [], template) == []


def test_heavy_traffic_rejects_bad_rho(n2_params, template, sweeps):
    with pytest.raises(ConfigError):
        sweeps.heavy_traffic_check(n2_params, [0.5, 1.0], template)


def test_heavy_traffic_rows(n2_params, template, sweeps):
    rows = sweeps.heavy_traffic_check(n2_params, [0.5, 0.7], template)
    assert [row.rho for row in rows] == [0.5, 0.7]
    assert rows[0].arrival_rate == pytest.approx(0.5 * 8 / 7)
    assert rows[0].limit == pytest.approx(53 / 49)
    assert rows[0].result.seed != rows[1].result.seed
    assert rows[1].scaled_q == pytest.approx(rows[1].result.mean_q * 0.3)


def test_heavy_traffic_rows_carry_gap_and_trend(n2_params, template, sweeps):
    rows = sweeps.heavy_traffic_check(n2_params, [0.5, 0.7, 0.8], template)
    for row in rows:
        assert row.gap == pytest.approx(abs(row.scaled_n_sys - 53 / 49))
        assert row.gap_ci == row.scaled_n_sys_ci
    assert rows[0].gap_shrinking
    for previous, row in zip(rows, rows[1:]):
        assert row.gap_shrinking == (row.gap <= previous.gap + previous.gap_ci + row.gap_ci)
    assert sweep_service.gap_trend_holds(rows) == all(row.gap_shrinking for row in rows)


def test_gap_trend_fails_when_any_gap_grows(n2_params, template, sweeps):
    rows = sweeps.heavy_traffic_check(n2_params, [0.5, 0.7], template)
    rows[1] = rows[1].model_copy(update={"gap_shrinking": False})
    assert not sweep_service.gap_trend_holds(rows)
    assert sweep_service.gap_trend_holds(rows[:1])


def test_stability_mu_uses_closed_form_and_oracle(sweeps):
    original = setting_config("original", 6, 0.5)
    expected = ExactService(Settings()).throughput_exact(OneAndNParams(n=6, p_n=6 ** -0.5, mu1=1, mun=1)).mu
    assert sweeps.stability_mu(original) == pytest.approx(expected)
    assert sweeps.stability_mu(setting_config("half_size", 6, 0.5)) > 0


def test_stability_mu_survives_small_start_state_mass(sweeps):
    # the start state of this chain carries stationary mass around 1e-7
    assert sweeps.stability_mu(setting_config("half_size", 10, 0.1)) > 0


def test_alpha_sweep_rows(template, sweeps):
    rows = sweeps.alpha_sweep(4, [0.5, 1.0], [0.3, 0.6], "original", template, mode="stability")
    assert [(row.alpha, row.fraction) for row in rows] == [(0.5, 0.3), (0.5, 0.6), (1.0, 0.3), (1.0, 0.6)]
    for row in rows:
        assert row.stable
        assert row.rho == pytest.approx(row.fraction)
        assert row.result.mean_q >= 0


def test_alpha_sweep_defaults_to_capacity_mode(template, sweeps):
    rows = sweeps.alpha_sweep(4, [0.5], [0.3], "original", template)
    assert rows[0].mode == "capacity"
    assert rows[0].capacity_fraction == pytest.approx(0.3)


def test_alpha_sweep_flags_points_past_stability(template, sweeps):
    rows = sweeps.alpha_sweep(10, [0.3], [0.9], "original", template)
    assert len(rows) == 1
    assert not rows[0].stable
    assert rows[0].result is None
    assert rows[0].capacity_fraction == pytest.approx(0.9)
    assert rows[0].rho > 1


def test_alpha_sweep_flags_failed_stability_threshold(template, serial_settings):
    sweeps = SweepService(serial_settings, oracle=FailingOracle(serial_settings, fail_above=0.7))
    rows = sweeps.alpha_sweep(4, [0.5, 1.0], [0.3], "half_size", template)
    assert rows[0].stable
    assert not rows[1].stable
    assert rows[1].result is None
    assert math.isnan(rows[1].stability_mu)
    assert rows[1].note.startswith("stability threshold unavailable")


def test_boundary_fraction_of_original_setting(sweeps):
    grid = [round(0.1 * k, 1) for k in range(0, 31)]
    boundary = sweeps.boundary_fraction("original", 10, grid)
    assert 0.5 < boundary < 0.56
    for alpha in grid:
        system = setting_config("original", 10, alpha)
        assert offered_load_fraction(sweeps.stability_mu(system), system) >= boundary
    assert sweeps.default_fractions("original", 10, grid) == [pytest.approx(0.9 * boundary)]


def test_default_fractions_are_stable_everywhere(template, sweeps):
    rows = sweeps.alpha_sweep(4, [0.0, 0.5, 1.0, 2.0], None, "original", template)
    assert len(rows) == 4
    assert all(row.rho < 1 for row in rows)
    assert len({row.fraction for row in rows}) == 1


def test_alpha_sweep_rejects_bad_input(template, sweeps):
    with pytest.raises(ConfigError, match="ascending"):
        sweeps.alpha_sweep(4, [1.0, 0.5], [0.5], "original", template)
    with pytest.raises(ConfigError, match="unknown setting"):
        sweeps.alpha_sweep(4, [0.5], [0.5], "tiny", template)
    with pytest.raises(ConfigError):
        sweeps.alpha_sweep(4, [0.5], [1.5], "original", template)
    assert sweeps.default_fractions("original", 4, [0.5], mode="stability") == [0.95]


@pytest.mark.slow
def test_heavy_traffic_limit(n2_params, sweeps):
    template = SimConfig(system=two_class(2, 0.5, 1.0, 1.0), arrival_rate=1.0, jobs=10_000_000, seed=2024)
    rows = sweeps.heavy_traffic_check(n2_params, [0.9, 0.95, 0.99], template)
    assert rows[-1].scaled_n_sys == pytest.approx(53 / 49, rel=0.15)
    assert sweep_service.gap_trend_holds(rows)


@pytest.mark.slow
def test_mm1_heavy_traffic_limit(sweeps):
    params = OneAndNParams(n=4, p_n=1.0, mu1=1.0, mun=1.0)
    template = SimConfig(system=two_class(4, 1.0, 1.0, 1.0), arrival_rate=1.0, jobs=5_000_000, seed=99)
    rows = sweeps.heavy_traffic_check(params, [0.9, 0.99], template)
    assert rows[-1].scaled_n_sys == pytest.approx(1.0, rel=0.15)


@pytest.mark.slow
@pytest.mark.parametrize("setting,low,high", [
    ("original", 0.5, 1.1),
    ("duration_scaled", 1.6, 2.2),
    ("half_size", 0.2, 0.7),
    ("three_class", 0.4, 1.0),
])
def test_queue_length_peaks_inside_alpha_range(setting, low, high):
    template = SimConfig(system=setting_config(setting, 10, 1.0), arrival_rate=1.0, jobs=1_000_000, seed=31)
    grid = [round(0.1 * k, 1) for k in range(0, 31)]
    rows = SweepService().alpha_sweep(10, grid, None, setting, template)
    peak = max((row for row in rows if row.stable), key=lambda row: row.result.mean_q)
    assert low <= peak.alpha <= high
