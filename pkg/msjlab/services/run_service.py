"""
Command dispatch: resolve parameters, run the engine, write artifacts

Flags override config-file values. The resolved parameter set is echoed into
every output for provenance.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
from pydantic import ValidationError

from msjlab.core.dependencies import get_settings
from msjlab.core.exceptions import CapacityExceededError, ConfigError, MsjLabError
from msjlab.schemas import OneAndNParams, PowerLawFamily, Regime, RunSpec, SimConfig, SystemConfig
from msjlab.services import asymptotic_service, report_service, simulation_service
from msjlab.services.config_service import canonical_params, load_config, setting_config, two_class, validate_config
from msjlab.services.exact_service import completion_states, get_exact_service
from msjlab.services.saturated_service import get_oracle_service
from msjlab.services.sweep_service import get_sweep_service
from msjlab.utils.grid_utils import parse_float_grid, parse_n_grid
from msjlab.utils.logger import get_logger
from msjlab.utils.svg_plot import LineChart

logger = get_logger(__name__)

PARAM_KEYS = ("n", "p_n", "mu1", "mun", "alpha", "c")
SIM_KEYS = ("jobs", "warmup_jobs", "batches", "seed", "max_queue", "check_invariants")


@dataclass
class Outcome:
    rows: List[Dict[str, Any]]
    resolved: Dict[str, Any]
    charts: Dict[str, LineChart] = field(default_factory=dict)


# Parameter resolution
def _given(overrides: Dict[str, Any], key: str) -> bool:
    return overrides.get(key) is not None


def _pick(overrides: Dict[str, Any], key: str, default: Any = None) -> Any:
    """The flag value when given, zero included; otherwise the default"""
    return overrides[key] if _given(overrides, key) else default


def _require(value: Any, name: str) -> Any:
    if value is None:
        raise ConfigError(f"missing required parameter: {name}")
    return value


def _server_count(config: Optional[SystemConfig], overrides: Dict[str, Any]) -> int:
    n = _require(_pick(overrides, "n", config.n if config else None), "n")
    if n < 1:
        raise ConfigError(f"server count must be at least 1, got {n}")
    return n


def resolve_params(config: Optional[SystemConfig], overrides: Dict[str, Any]
                   ) -> Tuple[OneAndNParams, Optional[PowerLawFamily]]:
    """
    Canonical 1-and-n parameters from an optional config plus flags

    p_n comes from the flag when given; otherwise from the power-law family
    whenever alpha or n was overridden (or the config has no large class).
    """
    base: Dict[str, Any] = {}
    family = None
    if config is not None:
        base = canonical_params(validate_config(config)).model_dump()
        family = config.family

    for key in ("n", "mu1", "mun"):
        if _given(overrides, key):
            base[key] = overrides[key]

    if _given(overrides, "alpha"):
        c = _pick(overrides, "c", family.c if family else 1.0)
        family = PowerLawFamily(c=c, alpha=overrides["alpha"])

    n = _require(base.get("n"), "n")
    if _given(overrides, "p_n"):
        base["p_n"] = overrides["p_n"]
    elif family is not None and (_given(overrides, "alpha") or _given(overrides, "n") or "p_n" not in base):
        base["p_n"] = family.p_n(n)
    _require(base.get("p_n"), "p_n (or alpha)")

    base.setdefault("mu1", 1.0)
    base.setdefault("mun", 1.0)
    return OneAndNParams(**base), family


def resolve_system(config: Optional[SystemConfig], overrides: Dict[str, Any]) -> Tuple[SystemConfig, Optional[str]]:
    """A named setting, the config file as given, or a 1-and-n system from flags"""
    setting = overrides.get("setting")
    if setting:
        n = _server_count(config, overrides)
        alpha = overrides.get("alpha")
        if alpha is None and config is not None and config.family is not None:
            alpha = config.family.alpha
        return setting_config(setting, n, _require(alpha, "alpha"), _pick(overrides, "c", 1.0)), setting

    if config is not None and not any(_given(overrides, key) for key in PARAM_KEYS):
        return validate_config(config), None

    params, family = resolve_params(config, overrides)
    return two_class(params.n, params.p_n, params.mu1, params.mun, family), None


def _rates(config: Optional[SystemConfig], overrides: Dict[str, Any]) -> Tuple[float, float]:
    mu1 = mun = 1.0
    if config is not None:
        try:
            params = canonical_params(config)
            mu1, mun = params.mu1, params.mun
        except ConfigError:
            pass
    mu1, mun = _pick(overrides, "mu1", mu1), _pick(overrides, "mun", mun)
    if not (mu1 > 0 and mun > 0):
        raise ConfigError(f"service rates must be positive, got mu1={mu1}, mun={mun}")
    return mu1, mun


def _alpha(config: Optional[SystemConfig], overrides: Dict[str, Any]) -> PowerLawFamily:
    family = config.family if config is not None else None
    alpha = overrides.get("alpha")
    if alpha is None and family is not None:
        alpha = family.alpha
    c = _pick(overrides, "c", family.c if family else 1.0)
    return PowerLawFamily(c=c, alpha=_require(alpha, "alpha"))


def _sim_template(system: SystemConfig, overrides: Dict[str, Any], **extra: Any) -> SimConfig:
    fields = {key: overrides[key] for key in SIM_KEYS if _given(overrides, key)}
    settings = get_settings()
    fields.setdefault("batches", settings.BATCHES)
    if "warmup_jobs" not in fields:
        jobs = fields.get("jobs", SimConfig.model_fields["jobs"].default)
        fields["warmup_jobs"] = int(jobs * settings.WARMUP_FRACTION)
    fields.update(extra)
    return SimConfig(system=system, **fields)


# Subcommand handlers
def _exact(config: Optional[SystemConfig], o: Dict[str, Any]) -> Outcome:
    if o.get("alpha_grid"):
        grid = parse_float_grid(o["alpha_grid"])
        n = _server_count(config, o)
        mu1, mun = _rates(config, o)
        c = _pick(o, "c", 1.0)
        normalize = _pick(o, "normalize", "none")
        curve = get_exact_service().alpha_curve(n, grid, mu1, mun, c)
        return Outcome(
            rows=report_service.exact_curve_rows(curve, n, mu1, mun, normalize),
            resolved={"n": n, "alpha_grid": grid, "c": c, "mu1": mu1, "mun": mun, "normalize": normalize},
            charts=report_service.exact_curve_chart(curve, n, normalize),
        )

    params, family = resolve_params(config, o)
    with_states = bool(o.get("states"))
    exact = get_exact_service()
    result = exact.mean_delta_yd(params, materialize=with_states)
    rows = report_service.exact_rows(params, result, alpha=family.alpha if family else None)
    charts = {}
    if with_states:
        distributions = {
            "time_avg": exact.time_avg_dist(params).mass,
            "completion_avg": exact.completion_dist(params).mass,
        }
        rows += report_service.state_rows(params, completion_states(params),
                                          dict(distributions, delta_tilde=result.delta_tilde))
        charts = report_service.distribution_chart(params, distributions)
    resolved = dict(params.model_dump(), family=family.model_dump() if family else None, states=with_states)
    return Outcome(rows=rows, resolved=resolved, charts=charts)


def _asymptotic(config: Optional[SystemConfig], o: Dict[str, Any]) -> Outcome:
    family = _alpha(config, o)
    mu1, mun = _rates(config, o)
    regime = Regime(o["regime"]) if o.get("regime") else asymptotic_service.classify_regime(family)
    if o.get("n_grid"):
        n_list = parse_n_grid(o["n_grid"])
    else:
        n_list = [_server_count(config, o)]

    rows = []
    for n in n_list:
        p_n = family.p_n(n)
        if regime == Regime.ONE_SERVER_LOG_BOUNDARY:
            one_server, boundary = asymptotic_service.throughput_candidates(n, family, mu1)
            values = {"mu_candidate_one_server": one_server, "mu_candidate_boundary": boundary}
        else:
            values = {"mu": asymptotic_service.throughput_asym(n, family, mu1, mun, regime)}
            if regime != Regime.ONE_SERVER_GENERAL:
                values["mean_delta_yd"] = asymptotic_service.delta_asym(n, family, regime)
        rows += report_service.asymptotic_rows(n, family.alpha, p_n, mu1, mun, regime.value, values)

    charts = report_service.asymptotic_chart(rows, family.alpha) if len(n_list) > 1 else {}
    resolved = {"n": n_list, "family": family.model_dump(), "mu1": mu1, "mun": mun, "regime": regime.value}
    return Outcome(rows=rows, resolved=resolved, charts=charts)


def _saturated(config: Optional[SystemConfig], o: Dict[str, Any]) -> Outcome:
    if o.get("alpha_grid"):
        setting = _require(o.get("setting"), "setting")
        n = _server_count(config, o)
        grid = parse_float_grid(o["alpha_grid"])
        c = _pick(o, "c", 1.0)
        curve = get_oracle_service().alpha_curve(setting, n, grid, c)
        return Outcome(
            rows=report_service.oracle_curve_rows(curve, setting, n),
            resolved={"setting": setting, "n": n, "alpha_grid": grid, "c": c},
            charts=report_service.oracle_curve_chart(curve, setting, n),
        )

    system, setting = resolve_system(config, o)
    result = get_oracle_service().solve(system)
    return Outcome(
        rows=report_service.oracle_rows(system, result, setting),
        resolved={"system": system.model_dump(), "setting": setting},
    )


def _simulate(config: Optional[SystemConfig], o: Dict[str, Any]) -> Outcome:
    if o.get("rho_grid"):
        params, _ = resolve_params(config, o)
        grid = parse_float_grid(o["rho_grid"])
        template = _sim_template(two_class(params.n, params.p_n, params.mu1, params.mun), o, arrival_rate=1.0)
        table = get_sweep_service().heavy_traffic_check(params, grid, template)
        return Outcome(
            rows=report_service.heavy_traffic_rows(params, table),
            resolved=dict(params.model_dump(), rho_grid=grid,
                          template=template.model_dump(exclude={"system", "arrival_rate"})),
            charts=report_service.heavy_traffic_chart(table),
        )

    system, setting = resolve_system(config, o)
    saturated = bool(o.get("saturated"))
    mu = None
    try:
        mu = get_sweep_service().stability_mu(system)
    except CapacityExceededError as e:
        if _given(o, "rho"):
            raise
        logger.warning(f"Reporting without rho: {e.detail}")

    if _given(o, "arrival_rate"):
        arrival_rate = o["arrival_rate"]
    elif _given(o, "rho"):
        arrival_rate = o["rho"] * mu
    elif saturated:
        arrival_rate = 0.0
    else:
        raise ConfigError("simulate needs --lambda, --rho or --saturated")

    cfg = _sim_template(system, o, arrival_rate=arrival_rate, saturated=saturated)
    result = simulation_service.simulate(cfg, mu)
    rows = report_service.simulation_rows(system, result, setting, saturated)
    if saturated and mu is not None:
        rows.append(report_service.record("mu", mu, "exact" if system.is_canonical else "oracle",
                                          **report_service.config_fields(system)))
    return Outcome(rows=rows, resolved={"sim": cfg.model_dump(), "setting": setting, "mu": mu})


def _sweep(config: Optional[SystemConfig], o: Dict[str, Any]) -> Outcome:
    setting = _pick(o, "setting", "original")
    n = _server_count(config, o)
    grid = parse_float_grid(_require(o.get("alpha_grid"), "alpha_grid"))
    fractions = parse_float_grid(o["fractions"]) if _given(o, "fractions") else None
    mode = _pick(o, "mode", "capacity")
    c = _pick(o, "c", 1.0)
    if not grid:
        raise ConfigError("alpha grid is empty")

    template = _sim_template(setting_config(setting, n, grid[0], c), o, arrival_rate=1.0)
    sweeps = get_sweep_service()
    if not fractions:
        fractions = sweeps.default_fractions(setting, n, grid, c, mode)
    table = sweeps.alpha_sweep(n, grid, fractions, setting, template, mode, c)
    return Outcome(
        rows=report_service.sweep_rows(table),
        resolved={"setting": setting, "n": n, "alpha_grid": grid, "fractions": fractions, "mode": mode, "c": c,
                  "template": template.model_dump(exclude={"system", "arrival_rate"})},
        charts=report_service.sweep_chart(table),
    )


def _compare(config: Optional[SystemConfig], o: Dict[str, Any]) -> Outcome:
    family = _alpha(config, o)
    mu1, mun = _rates(config, o)
    n_list = parse_n_grid(_pick(o, "n_grid", "1e2:1e6:log"))
    table = asymptotic_service.convergence_table(family, n_list, mu1, mun)
    return Outcome(
        rows=report_service.convergence_rows(family.alpha, table, mu1, mun),
        resolved={"family": family.model_dump(), "n_grid": n_list, "mu1": mu1, "mun": mun},
        charts=report_service.convergence_charts(family.alpha, table),
    )


HANDLERS: Dict[str, Callable[[Optional[SystemConfig], Dict[str, Any]], Outcome]] = {
    "exact": _exact,
    "asymptotic": _asymptotic,
    "saturated-solve": _saturated,
    "simulate": _simulate,
    "sweep": _sweep,
    "compare": _compare,
}


def execute(spec: RunSpec) -> Outcome:
    """Run one invocation and write its artifacts; errors propagate"""
    config = load_config(spec.config_path) if spec.config_path else None
    outcome = HANDLERS[spec.subcommand](config, dict(spec.overrides))

    provenance_json = report_service.provenance(spec.subcommand, outcome.resolved)
    want_svg = spec.format in ("svg", "both")
    if want_svg:
        if not outcome.charts:
            raise ConfigError(f"{spec.subcommand} has no figure for these options")
        report_service.svg_paths(spec.output, list(outcome.charts))
    report_service.write_csv(outcome.rows, spec.output, provenance_json)
    if want_svg:
        report_service.write_svgs(outcome.charts, spec.output, provenance_json)
    return outcome


def run(spec: RunSpec) -> int:
    """
    Run a CLI invocation and map failures to exit codes

    Returns:
        0 on success, 1 on configuration errors, 2 on compute errors
    """
    logger.info(f"Running {spec.subcommand} (output {spec.output}, format {spec.format})")
    try:
        execute(spec)
    except MsjLabError as e:
        logger.error(f"{spec.subcommand} failed: {e.detail}")
        click.echo(f"error: {e.detail}", err=True)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"{spec.subcommand} rejected its parameters: {e}")
        click.echo(f"error: invalid parameters: {e}", err=True)
        return ConfigError.exit_code
    return 0
