"""
Result tables and figures

Every table uses one long format: one row per (point, metric). CSV files
open with a `# msjlab {...}` provenance line holding the resolved run
parameters as JSON; SVG files carry the same JSON in their <desc> element.
"""
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from msjlab.core.dependencies import get_settings
from msjlab.core.exceptions import ConfigError
from msjlab.schemas import (
    ConvergenceRow, ExactResult, HeavyTrafficRow, OneAndNParams, OracleResult, SimResult, SweepRow, SystemConfig,
)
from msjlab.services.sweep_service import gap_trend_holds
from msjlab.utils.logger import get_logger
from msjlab.utils.svg_plot import LineChart, Series

logger = get_logger(__name__)

COLUMNS = [
    "setting", "n", "alpha", "p_n", "mu1", "mun", "lambda", "rho",
    "metric", "value", "ci_low", "ci_high", "method", "seed",
]
FLOAT_FORMAT = "%.17g"


def record(metric: str, value: float, method: str, ci: Optional[float] = None, **fields: Any) -> Dict[str, Any]:
    """One output row; ci is a symmetric half-width around value"""
    row = {column: None for column in COLUMNS}
    row.update(fields)
    row["metric"] = metric
    row["value"] = value
    row["method"] = method
    if ci is not None and math.isfinite(ci):
        row["ci_low"] = value - ci
        row["ci_high"] = value + ci
    if row["seed"] is not None:
        row["seed"] = str(row["seed"])
    return row


def _params_fields(params: OneAndNParams) -> Dict[str, Any]:
    return {"n": params.n, "p_n": params.p_n, "mu1": params.mu1, "mun": params.mun}


def config_fields(config: SystemConfig) -> Dict[str, Any]:
    """n, p_n, mu1 and mun of a config, as far as they are defined"""
    fields: Dict[str, Any] = {"n": config.n}
    if config.family is not None:
        fields["alpha"] = config.family.alpha
    small = [c for c in config.classes if c.need == 1]
    large = [c for c in config.classes if c.need == config.n]
    if small:
        fields["mu1"] = small[0].rate
    if large:
        fields["mun"] = large[0].rate
        fields["p_n"] = large[0].prob
    return fields


# Row builders
def exact_rows(params: OneAndNParams, result: ExactResult, alpha: Optional[float] = None,
               setting: Optional[str] = None) -> List[Dict[str, Any]]:
    fields = dict(_params_fields(params), alpha=alpha, setting=setting)
    return [
        record("mu", result.mu, "exact", **fields),
        record("c_prime", result.c_prime, "exact", **fields),
        record("mean_delta_yd", result.mean_delta_yd, "exact", **fields),
        record("scaled_queue_limit", result.scaled_queue_limit, "exact", **fields),
    ]


def state_rows(params: OneAndNParams, labels: Sequence, distributions: Dict[str, Sequence[float]]
               ) -> List[Dict[str, Any]]:
    """Per-state rows: metric is e.g. time_avg(1,3)"""
    fields = _params_fields(params)
    rows = []
    for name, values in distributions.items():
        for label, value in zip(labels, values):
            rows.append(record(f"{name}({label[0]},{label[1]})", float(value), "exact", **fields))
    return rows


def exact_curve_rows(curve: List[Dict[str, float]], n: int, mu1: float, mun: float,
                     normalize: str = "none") -> List[Dict[str, Any]]:
    scale = {"none": 1.0, "n": float(n), "n2": float(n) ** 2}[normalize]
    rows = []
    for point in curve:
        fields = {"n": n, "alpha": point["alpha"], "p_n": point["p_n"], "mu1": mu1, "mun": mun}
        rows.append(record("mu", point["mu"], "exact", **fields))
        if normalize != "none":
            rows.append(record(f"mu_over_{normalize}", point["mu"] / scale, "exact", **fields))
        rows.append(record("mean_delta_yd", point["mean_delta_yd"], "exact", **fields))
    return rows


def asymptotic_rows(n: int, alpha: float, p_n: float, mu1: float, mun: float, regime: str,
                    values: Dict[str, float]) -> List[Dict[str, Any]]:
    fields = {"n": n, "alpha": alpha, "p_n": p_n, "mu1": mu1, "mun": mun}
    return [record(metric, value, f"asymptotic:{regime}", **fields) for metric, value in values.items()]


def convergence_rows(alpha: float, rows: List[ConvergenceRow], mu1: float, mun: float) -> List[Dict[str, Any]]:
    out = []
    for row in rows:
        fields = {"n": row.n, "alpha": alpha, "p_n": row.p_n, "mu1": mu1, "mun": mun}
        out.extend([
            record("mu", row.exact_mu, "exact", **fields),
            record("mu", row.asym_mu, "asymptotic", **fields),
            record("mu", row.alt_mu, "asymptotic_alt", **fields),
            record("mu_ratio", row.mu_ratio, "exact/asymptotic", **fields),
            record("mean_delta_yd", row.exact_delta, "exact", **fields),
            record("mean_delta_yd", row.asym_delta, "asymptotic", **fields),
            record("mean_delta_yd", row.alt_delta, "asymptotic_alt", **fields),
            record("delta_ratio", row.delta_ratio, "exact/asymptotic", **fields),
        ])
    return out


def oracle_rows(config: SystemConfig, result: OracleResult, setting: Optional[str] = None) -> List[Dict[str, Any]]:
    fields = dict(config_fields(config), setting=setting)
    return [
        record("mu", result.mu, "oracle", **fields),
        record("mean_delta_yd", result.mean_delta_yd, "oracle", **fields),
        record("scaled_queue_limit", result.scaled_queue_limit, "oracle", **fields),
        record("states", float(len(result.time_avg)), "oracle", **fields),
        record("stationary_residual", result.stationary_residual, "oracle", **fields),
        record("poisson_residual", result.poisson_residual, "oracle", **fields),
    ]


def oracle_curve_rows(curve: List[Dict[str, float]], setting: str, n: int) -> List[Dict[str, Any]]:
    rows = []
    for point in curve:
        fields = {"setting": setting, "n": n, "alpha": point["alpha"], "p_n": point["p"]}
        rows.append(record("mu", point["mu"], "oracle", **fields))
        rows.append(record("mean_delta_yd", point["mean_delta_yd"], "oracle", **fields))
        rows.append(record("states", float(point["states"]), "oracle", **fields))
    return rows


def _sim_metrics(result: SimResult) -> List[tuple]:
    return [
        ("mean_q", result.mean_q, result.ci_halfwidth),
        ("mean_n_sys", result.mean_n_sys, result.n_sys_ci_halfwidth),
        ("util", result.util, None),
        ("throughput", result.throughput, result.throughput_ci_halfwidth),
        ("mean_response", result.mean_response, result.response_ci_halfwidth),
    ]


def simulation_rows(config: SystemConfig, result: SimResult, setting: Optional[str] = None,
                    saturated: bool = False) -> List[Dict[str, Any]]:
    fields = dict(config_fields(config), setting=setting, seed=result.seed,
                  rho=result.rho, **{"lambda": result.arrival_rate})
    method = "simulation:saturated" if saturated else "simulation"
    return [
        record(metric, value, method, ci=ci, **fields)
        for metric, value, ci in _sim_metrics(result)
        if not (saturated and math.isnan(value))
    ]


def heavy_traffic_rows(params: OneAndNParams, rows: List[HeavyTrafficRow]) -> List[Dict[str, Any]]:
    out = []
    for row in rows:
        fields = dict(_params_fields(params), rho=row.rho, seed=row.result.seed, **{"lambda": row.arrival_rate})
        out.extend([
            record("scaled_mean_q", row.scaled_q, "simulation", ci=row.scaled_q_ci, **fields),
            record("scaled_mean_n_sys", row.scaled_n_sys, "simulation", ci=row.scaled_n_sys_ci, **fields),
            record("scaled_queue_limit", row.limit, "exact", **fields),
            record("limit_gap", row.gap, "simulation", ci=row.gap_ci, **fields),
            record("gap_shrinking", float(row.gap_shrinking), "simulation", **fields),
        ])
    if out:
        out.append(record("gap_trend", float(gap_trend_holds(rows)), "simulation", **fields))
    return out


def sweep_rows(rows: List[SweepRow]) -> List[Dict[str, Any]]:
    out = []
    for row in rows:
        fields = {"setting": row.setting, "n": row.n, "alpha": row.alpha, "p_n": row.p,
                  "lambda": row.arrival_rate, "rho": row.rho}
        if row.result is not None:
            fields["seed"] = row.result.seed
            for metric, value, ci in _sim_metrics(row.result):
                out.append(record(metric, value, f"simulation:{row.mode}", ci=ci, **fields))
        else:
            out.append(record("mean_q", float('nan'), f"simulation:{row.mode}:unstable", **fields))
        out.append(record("load_fraction", row.fraction, f"simulation:{row.mode}", **fields))
        out.append(record("capacity_fraction", row.capacity_fraction, f"simulation:{row.mode}", **fields))
        out.append(record("stability_mu", row.stability_mu, f"simulation:{row.mode}", **fields))
    return out


# Writers
def provenance(subcommand: str, resolved: Dict[str, Any]) -> str:
    """Deterministic JSON of everything that determines a run's output"""
    settings = get_settings()
    document = {
        "version": settings.APP_VERSION,
        "subcommand": subcommand,
        "rng": settings.RNG_ALGORITHM,
        "params": resolved,
    }
    return json.dumps(document, sort_keys=True, default=str)


def to_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=COLUMNS)
    frame["n"] = frame["n"].astype("Int64")
    return frame


def write_csv(rows: List[Dict[str, Any]], output: str, provenance_json: str) -> None:
    """Write rows to a CSV path, or to stdout when output is '-'"""
    frame = to_frame(rows)
    header = f"# msjlab {provenance_json}\n"
    if output == "-":
        sys.stdout.write(header)
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        sys.stdout.flush()
        return

    path = Path(output)
    if not path.parent.exists():
        raise ConfigError(f"output directory does not exist: {path.parent}")
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(header)
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")


def svg_paths(output: str, suffixes: Sequence[str]) -> List[Path]:
    """SVG file names derived from the CSV output path"""
    if output == "-":
        raise ConfigError("SVG output needs an --output file path")
    base = Path(output)
    return [base.with_name(f"{base.stem}{suffix}.svg") for suffix in suffixes]


def write_svgs(charts: Dict[str, LineChart], output: str, provenance_json: str) -> List[Path]:
    """Write each chart next to the CSV; keys are file-name suffixes"""
    if not charts:
        raise ConfigError("this command has no figure for the given options")
    paths = svg_paths(output, list(charts))
    for path, chart in zip(paths, charts.values()):
        path.write_text(chart.render(desc=provenance_json), encoding='utf-8')
        logger.info(f"Wrote figure {path}")
    return paths


# Figures
def exact_curve_chart(curve: List[Dict[str, float]], n: int, normalize: str = "none") -> Dict[str, LineChart]:
    scale = {"none": 1.0, "n": float(n), "n2": float(n) ** 2}[normalize]
    alphas = [p["alpha"] for p in curve]
    label = "mu" if normalize == "none" else f"mu / {'n' if normalize == 'n' else 'n^2'}"
    mu_chart = LineChart(title=f"Saturated throughput, n={n}", x_label="alpha", y_label=label)
    mu_chart.add(Series(name="exact", xs=alphas, ys=[p["mu"] / scale for p in curve]))
    delta_chart = LineChart(title=f"E[Delta(Y_d)], n={n}", x_label="alpha", y_label="E[Delta(Y_d)]", log_y=True)
    delta_chart.add(Series(name="exact", xs=alphas, ys=[p["mean_delta_yd"] for p in curve]))
    return {"": mu_chart, "_delta": delta_chart}


def distribution_chart(params: OneAndNParams, distributions: Dict[str, Sequence[float]]) -> Dict[str, LineChart]:
    chart = LineChart(title=f"Completion-state laws, n={params.n}, p_n={params.p_n:g}",
                      x_label="state index b", y_label="probability", log_y=True)
    for i, (name, values) in enumerate(distributions.items()):
        chart.add(Series(name=name, xs=list(range(len(values))), ys=list(values),
                         marker="circle" if i == 0 else "square"))
    return {"": chart}


def asymptotic_chart(rows: List[Dict[str, Any]], alpha: float) -> Dict[str, LineChart]:
    chart = LineChart(title=f"Leading-order throughput, alpha={alpha:g}", x_label="n", y_label="mu",
                      log_x=True, log_y=True)
    metrics = sorted({r["metric"] for r in rows if r["metric"].startswith("mu")})
    for metric in metrics:
        points = [r for r in rows if r["metric"] == metric]
        chart.add(Series(name=metric, xs=[r["n"] for r in points], ys=[r["value"] for r in points]))
    return {"": chart}


def convergence_charts(alpha: float, rows: List[ConvergenceRow]) -> Dict[str, LineChart]:
    ns = [r.n for r in rows]
    mu_chart = LineChart(title=f"Throughput, p_n = n^-{alpha:g}", x_label="n", y_label="mu",
                         log_x=True, log_y=True)
    mu_chart.add(Series(name="exact", xs=ns, ys=[r.exact_mu for r in rows]))
    mu_chart.add(Series(name="asymptotic", xs=ns, ys=[r.asym_mu for r in rows], marker="square", dashed=True))
    mu_chart.add(Series(name="other regime", xs=ns, ys=[r.alt_mu for r in rows], marker="none", dashed=True))

    delta_chart = LineChart(title=f"E[Delta(Y_d)], p_n = n^-{alpha:g}", x_label="n", y_label="E[Delta(Y_d)]",
                            log_x=True, log_y=True)
    delta_chart.add(Series(name="exact", xs=ns, ys=[r.exact_delta for r in rows]))
    delta_chart.add(Series(name="asymptotic", xs=ns, ys=[r.asym_delta for r in rows], marker="square", dashed=True))
    delta_chart.add(Series(name="other regime", xs=ns, ys=[r.alt_delta for r in rows], marker="none", dashed=True))
    return {"": mu_chart, "_delta": delta_chart}


def oracle_curve_chart(curve: List[Dict[str, float]], setting: str, n: int) -> Dict[str, LineChart]:
    chart = LineChart(title=f"Saturated throughput, {setting}, n={n}", x_label="alpha", y_label="mu")
    chart.add(Series(name="oracle", xs=[p["alpha"] for p in curve], ys=[p["mu"] for p in curve]))
    return {"": chart}


def heavy_traffic_chart(rows: List[HeavyTrafficRow]) -> Dict[str, LineChart]:
    chart = LineChart(title="Scaled mean queue length", x_label="rho", y_label="E[Q](1 - rho)")
    rhos = [r.rho for r in rows]
    chart.add(Series(name="waiting", xs=rhos, ys=[r.scaled_q for r in rows]))
    chart.add(Series(name="in system", xs=rhos, ys=[r.scaled_n_sys for r in rows], marker="square"))
    chart.add(Series(name="limit", xs=rhos, ys=[r.limit for r in rows], marker="none", dashed=True))
    return {"": chart}


def sweep_chart(rows: List[SweepRow]) -> Dict[str, LineChart]:
    if not rows:
        return {}
    first = rows[0]
    chart = LineChart(title=f"Mean queue length, {first.setting}, n={first.n}", x_label="alpha", y_label="E[Q]")
    for fraction in sorted({r.fraction for r in rows}):
        points = [r for r in rows if r.fraction == fraction]
        chart.add(Series(
            name=f"{first.mode} {fraction:g}",
            xs=[r.alpha for r in points],
            ys=[r.result.mean_q if r.result is not None else float('nan') for r in points],
        ))
    return {"": chart}
