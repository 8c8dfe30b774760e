import logging
import math
import re

import pytest

from msjlab.core.exceptions import ConfigError
from msjlab.utils import logger as log_config
from msjlab.utils.grid_utils import normalize_grid, parse_float_grid, parse_n_grid
from msjlab.utils.summation import NeumaierSum
from msjlab.utils.svg_plot import LineChart, Series


def test_normalize_grid():
    assert normalize_grid(" [0.1, 0.2] ") == "0.1,0.2"
    assert normalize_grid("") == ""


def test_float_grid_forms():
    assert parse_float_grid("0.9,0.95,0.99") == [0.9, 0.95, 0.99]
    grid = parse_float_grid("0.2:3.0:0.2")
    assert len(grid) == 15
    assert grid[0] == 0.2 and grid[-1] == 3.0 and grid[5] == 1.2
    assert parse_float_grid("1e2:1e5:log") == [100.0, 1000.0, 10000.0, 100000.0]
    assert parse_float_grid("") == []


@pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "0:1", "a,b", "0:10:log"])
def test_float_grid_errors(text):
    with pytest.raises(ConfigError):
        parse_float_grid(text)


def test_n_grid():
    assert parse_n_grid("1e2:1e8:log") == [10 ** k for k in range(2, 9)]
    assert parse_n_grid("2,4,8") == [2, 4, 8]
    with pytest.raises(ConfigError):
        parse_n_grid("2.5")
    with pytest.raises(ConfigError, match="ascending"):
        parse_n_grid("8,4")


def test_neumaier_sum_recovers_cancelled_terms():
    total = NeumaierSum()
    for term in [1.0, 1e100, 1.0, -1e100]:
        total += term
    assert total.value == 2.0


def test_neumaier_sum_matches_fsum():
    terms = [(-1) ** k / (k + 1) for k in range(100_000)]
    total = NeumaierSum(0.5)
    for term in terms:
        total.add(term)
    assert float(total) == pytest.approx(math.fsum(terms) + 0.5, abs=1e-14)


def _points(line):
    return re.search(r'points="([^"]*)"', line).group(1).split()


def _chart(log):
    chart = LineChart(title="mu <exact>", x_label="n", y_label="mu", log_x=log, log_y=log)
    chart.add(Series(name="exact", xs=[10, 100, 1000], ys=[5.0, 60.0, 900.0]))
    chart.add(Series(name="asymptotic", xs=[10, 100, 1000], ys=[0.0, 50.0, float("nan")], dashed=True))
    return chart


def test_svg_is_deterministic_and_escaped():
    first = _chart(True).render(desc='{"seed": 1}')
    assert first == _chart(True).render(desc='{"seed": 1}')
    assert "<title>mu &lt;exact&gt;</title>" in first
    assert "<desc>{&quot;seed&quot;: 1}</desc>" in first
    assert first.count("<polyline") == 2
    assert "href" not in first


def test_svg_log_axes_skip_unplottable_points():
    svg = _chart(True).render()
    asymptotic = [line for line in svg.splitlines() if "stroke-dasharray" in line and "<polyline" in line][0]
    # only the (100, 50) point survives on log axes
    assert len(_points(asymptotic)) == 1
    assert "1e1" in svg and "1e3" in svg


def test_svg_linear_axes_keep_zero():
    svg = _chart(False).render()
    asymptotic = [line for line in svg.splitlines() if "stroke-dasharray" in line and "<polyline" in line][0]
    assert len(_points(asymptotic)) == 2


def test_set_level_changes_root_logger():
    root = logging.getLogger()
    before = root.level
    try:
        log_config.set_level("debug")
        assert root.level == logging.DEBUG
        assert log_config.get_logger("msjlab.services.exact_service").isEnabledFor(logging.DEBUG)
    finally:
        root.setLevel(before)
