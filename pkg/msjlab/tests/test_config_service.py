import json

import pytest

from msjlab.core.exceptions import ConfigError
from msjlab.schemas import JobClass, PowerLawFamily, SystemConfig
from msjlab.services.config_service import (
    canonical_params, capacity_arrival_rate, load_config, offered_load_fraction, parse_config, setting_config,
    two_class, validate_config,
)


def test_two_class_builds_both_classes():
    config = two_class(2, 0.5, 1.0, 1.0)
    assert config.needs == [1, 2]
    assert config.probs == [0.5, 0.5]
    assert config.rates == [1.0, 1.0]
    assert config.is_canonical


def test_two_class_collapses_when_all_jobs_are_large():
    config = two_class(10, 1.0, 1.0, 1.0)
    assert len(config.classes) == 1
    assert config.classes[0] == JobClass(need=10, prob=1.0, rate=1.0)


def test_two_class_sweep_point():
    p = 10 ** -0.8
    config = two_class(10, p, 1.0, 1.0)
    assert config.probs == [1.0 - p, p]


@pytest.mark.parametrize("n", [2, 3, 10, 1000])
@pytest.mark.parametrize("p_n", [1e-9, 0.1, 0.5, 0.999])
def test_two_class_always_validates(n, p_n):
    validate_config(two_class(n, p_n, 2.0, 0.5))


@pytest.mark.parametrize("n,p_n,mu1,mun", [(0, 0.5, 1, 1), (2, 1.5, 1, 1), (2, 0.5, 0, 1), (2, 0.5, 1, -1)])
def test_two_class_rejects_bad_parameters(n, p_n, mu1, mun):
    with pytest.raises(ConfigError):
        two_class(n, p_n, mu1, mun)


def test_validate_reports_probability_sum():
    config = SystemConfig(n=2, classes=[JobClass(need=1, prob=0.5, rate=1), JobClass(need=2, prob=0.6, rate=1)])
    with pytest.raises(ConfigError, match="probabilities sum to 1.1"):
        validate_config(config)


def test_validate_reports_oversized_need():
    config = SystemConfig(n=10, classes=[JobClass(need=11, prob=1.0, rate=1)])
    with pytest.raises(ConfigError, match="need exceeds server count"):
        validate_config(config)


def test_validate_reports_duplicate_need():
    config = SystemConfig(n=4, classes=[JobClass(need=2, prob=0.5, rate=1), JobClass(need=2, prob=0.5, rate=2)])
    with pytest.raises(ConfigError, match="duplicate need 2"):
        validate_config(config)


def test_validate_reports_non_positive_rate():
    config = SystemConfig(n=4, classes=[JobClass(need=2, prob=1.0, rate=0)])
    with pytest.raises(ConfigError, match="service rate must be positive"):
        validate_config(config)


def test_validate_returns_config_unchanged(n2_config):
    assert validate_config(n2_config) is n2_config


def test_offered_load_single_large_class():
    config = SystemConfig(n=10, classes=[JobClass(need=10, prob=1.0, rate=1.0)])
    assert offered_load_fraction(0.5, config) == pytest.approx(0.5)


def test_offered_load_two_class():
    config = two_class(10, 0.1, 1.0, 1.0)
    assert offered_load_fraction(1.0, config) == pytest.approx(0.19, rel=1e-12)
    assert offered_load_fraction(0.0, config) == 0.0
    assert offered_load_fraction(3.0, config) == pytest.approx(3 * 0.19, rel=1e-12)


def test_capacity_arrival_rate_inverts_offered_load():
    config = two_class(10, 0.1, 2.0, 0.5)
    rate = capacity_arrival_rate(0.8, config)
    assert offered_load_fraction(rate, config) == pytest.approx(0.8, rel=1e-12)


def test_setting_configs():
    original = setting_config("original", 10, 0.8)
    assert original.probs[1] == pytest.approx(10 ** -0.8)
    assert original.family == PowerLawFamily(c=1.0, alpha=0.8)

    scaled = setting_config("duration_scaled", 10, 1.9)
    assert scaled.rates == [10.0, 1.0]

    half = setting_config("half_size", 10, 0.4)
    assert half.needs == [1, 5]

    three = setting_config("three_class", 10, 0.7)
    assert three.needs == [1, 5, 10]
    assert three.probs[1] == three.probs[2] == pytest.approx(10 ** -0.7 / 2)


def test_setting_config_needs_even_n():
    with pytest.raises(ConfigError, match="even server count"):
        setting_config("half_size", 9, 0.5)
    with pytest.raises(ConfigError, match="unknown setting"):
        setting_config("quarter_size", 8, 0.5)


def test_canonical_params():
    params = canonical_params(two_class(5, 0.3, 10.0, 1.0))
    assert (params.n, params.p_n, params.mu1, params.mun) == (5, 0.3, 10.0, 1.0)

    degenerate = canonical_params(two_class(10, 1.0, 1.0, 3.0))
    assert degenerate.p_n == 1.0 and degenerate.mun == 3.0

    with pytest.raises(ConfigError):
        canonical_params(setting_config("half_size", 10, 0.5))


def test_parse_config_sorts_classes():
    text = json.dumps({"n": 4, "classes": [{"need": 4, "prob": 0.25, "rate": 1}, {"need": 1, "prob": 0.75, "rate": 2}]})
    config = parse_config(text)
    assert config.needs == [1, 4]
    assert config.is_canonical


def test_parse_config_reports_byte_offset():
    with pytest.raises(ConfigError, match="byte offset 21"):
        parse_config('{"n": 2, "classes": [}')


def test_parse_config_counts_bytes_not_characters():
    with pytest.raises(ConfigError, match="byte offset 12"):
        parse_config('{"éé": 1, x}')


def test_parse_config_rejects_schema_violations():
    with pytest.raises(ConfigError, match="invalid config document"):
        parse_config('{"n": "many", "classes": []}')


def test_load_config(tmp_path):
    path = tmp_path / "system.json"
    path.write_text(json.dumps({"n": 2, "classes": [{"need": 1, "prob": 0.5, "rate": 1},
                                                    {"need": 2, "prob": 0.5, "rate": 1}]}))
    assert load_config(path).n == 2
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
