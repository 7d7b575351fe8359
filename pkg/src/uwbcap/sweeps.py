"""Parameter sweeps and the CSV/JSON result files they produce.

A sweep evaluates a list of *selectors* (named bound or simulation outputs)
at every point of a one-parameter grid. Rows are buffered and written in
grid order. Each CSV gets a JSON sidecar holding everything needed to
rebuild its rows: the resolved parameters, the grid, the selectors, the
variant flags, the seed and the package version.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from uwbcap import bounds, ppm
from uwbcap.bounds import DEFAULT_VARIANTS, Variants
from uwbcap.config import ConfigError, SweepSpec, params_to_config
from uwbcap.optimize import optimize_theta
from uwbcap.system import ParameterError, SystemParams, derive_quantities

OUTPUT_DIR_ENV = "UWBCAP_OUTPUT_DIR"
FIGURE_IDS = ("fig3", "fig4", "fig5", "fig6")
DEFAULT_SIM_TRIALS = 10_000

SWEEP_COLUMN = {
    "num_paths_l": "num_paths_l",
    "duty_cycle_theta": "duty_cycle_theta",
    "bandwidth_w": "bandwidth_w_hz",
}


@dataclass(frozen=True)
class EvalContext:
    variants: Variants = DEFAULT_VARIANTS
    seed: int = 0
    trials: int = DEFAULT_SIM_TRIALS
    index: int = 0  # sweep point index, used to derive simulation seeds


@dataclass(frozen=True)
class ResultRow:
    swept_value: float
    values: dict = field(default_factory=dict)

    def columns(self):
        return tuple(self.values)


def _theta(p: SystemParams):
    return p.duty_cycle_theta


def _optimized(name, fn):
    def select(p, ctx):
        theta_star, result = optimize_theta(lambda t: fn(p, t, ctx), params=p)
        return {name: float(getattr(result, "total", result)), f"theta_star_{name.removesuffix('_opt')}": theta_star}

    return select


def _lower_unknown(p, t, ctx):
    return bounds.dsss_lower_unknown(p, t, variants=ctx.variants)


def _lower_known(p, t, ctx):
    return bounds.dsss_lower_known_delays(p, t, ctx.variants)


def _ppm_up(p, t, ctx):
    return bounds.ppm_upper(p, t)


def _penalty(p, ctx):
    return bounds.gain_penalty(p, _theta(p), ctx.variants) + bounds.delay_penalty(p, _theta(p), ctx.variants.delay_mode)


def _perfect(p, ctx):
    return bounds.awgn_capacity(p) - bounds.spectral_efficiency_penalty(p, _theta(p), ctx.variants)


def _simulate(p, ctx):
    stats = ppm.simulate_error_rate(p, None, ctx.trials, _point_seed(ctx))
    lo, hi = stats.wilson_interval
    return {"ppm_error_rate": stats.error_rate, "ppm_error_rate_ci_low": lo, "ppm_error_rate_ci_high": hi}


def _point_seed(ctx):
    return np.random.SeedSequence(entropy=int(ctx.seed), spawn_key=(int(ctx.index),))


def _scalar(name, fn):
    def select(p, ctx):
        return {name: float(fn(p, ctx))}

    return select


# selector name -> callable(params, ctx) returning {column: value}
SELECTORS: dict[str, Callable] = {
    "c_awgn": _scalar("c_awgn", lambda p, ctx: bounds.awgn_capacity(p)),
    "dsss_lower_known": _scalar("dsss_lower_known", lambda p, ctx: _lower_known(p, _theta(p), ctx).total),
    "dsss_lower_known_opt": _optimized("dsss_lower_known_opt", _lower_known),
    "dsss_lower_unknown": _scalar("dsss_lower_unknown", lambda p, ctx: _lower_unknown(p, _theta(p), ctx).total),
    "dsss_lower_unknown_opt": _optimized("dsss_lower_unknown_opt", _lower_unknown),
    "dsss_upper": _scalar("dsss_upper", lambda p, ctx: bounds.dsss_upper(p, _theta(p)).total),
    "dsss_upper_theta1": _scalar("dsss_upper_theta1", lambda p, ctx: bounds.dsss_upper(p, 1.0).total),
    "dsss_ub_paths_theta1": _scalar(
        "dsss_ub_paths_theta1", lambda p, ctx: bounds.dsss_upper(p, 1.0).components["ub_paths"]
    ),
    "dsss_upper_asymptote": _scalar("dsss_upper_asymptote", lambda p, ctx: bounds.dsss_upper_asymptote(p)),
    "ppm_upper": _scalar("ppm_upper", lambda p, ctx: bounds.ppm_upper(p, _theta(p)).total),
    "ppm_upper_opt": _optimized("ppm_upper_opt", _ppm_up),
    "gain_penalty": _scalar("gain_penalty", lambda p, ctx: bounds.gain_penalty(p, _theta(p), ctx.variants)),
    "spectral_efficiency_penalty": _scalar(
        "spectral_efficiency_penalty",
        lambda p, ctx: bounds.spectral_efficiency_penalty(p, _theta(p), ctx.variants),
    ),
    "delay_penalty": _scalar(
        "delay_penalty", lambda p, ctx: bounds.delay_penalty(p, _theta(p), ctx.variants.delay_mode)
    ),
    "perfect_knowledge_rate": _scalar("perfect_knowledge_rate", _perfect),
    "uncertainty_penalty": _scalar("uncertainty_penalty", _penalty),
    "throughput": _scalar("throughput", lambda p, ctx: _perfect(p, ctx) - _penalty(p, ctx)),
    "union_bound": _scalar("union_bound", lambda p, ctx: ppm.union_bound_error(p).total),
    "ppm_error_rate": _simulate,
}


def evaluate_point(spec: SweepSpec, index: int, ctx: EvalContext) -> ResultRow:
    value = spec.values[index]
    params = spec.point(value)
    ctx = EvalContext(ctx.variants, ctx.seed, ctx.trials, index)
    values = {SWEEP_COLUMN[spec.swept_parameter]: float(value)}
    for name in spec.outputs:
        values.update(SELECTORS[name](params, ctx))
    return ResultRow(float(value), values)


def run_sweep(spec: SweepSpec, ctx: EvalContext = EvalContext(), jobs: int = 1) -> list:
    """Evaluate every sweep point; rows come back in sweep order.

    Args:
        spec: grid, fixed parameters and selectors.
        ctx: variant flags, seed and simulation trial count.
        jobs: worker threads. Rows are identical for any value.
    """
    indices = range(len(spec.values))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda i: evaluate_point(spec, i, ctx), indices))
    else:
        rows = [evaluate_point(spec, i, ctx) for i in indices]
    columns = rows[0].columns()
    for row in rows:
        if row.columns() != columns:
            raise RuntimeError("column set changed across sweep rows")
    return rows


# ----------------------------------------------------------------------------
# figures


def _path_grid(params, points=30):
    l_m = derive_quantities(params).l_m
    return tuple(int(v) for v in np.unique(np.round(np.geomspace(1, l_m, points)).astype(int)))


def _theta_grid(params, lo=1e-5, per_decade=10):
    count = int(round(-math.log10(lo) * per_decade)) + 1
    grid = np.geomspace(lo, 1.0, count)
    grid[-1] = 1.0
    return tuple(float(v) for v in grid)


FIGURES = {
    "fig3": ("num_paths_l", _path_grid, ("dsss_upper_theta1", "dsss_ub_paths_theta1", "dsss_lower_unknown_opt", "c_awgn")),
    "fig4": (
        "duty_cycle_theta",
        _theta_grid,
        ("perfect_knowledge_rate", "uncertainty_penalty", "throughput", "dsss_lower_unknown", "c_awgn"),
    ),
    "fig5": ("num_paths_l", _path_grid, ("dsss_lower_unknown_opt", "ppm_upper_opt", "c_awgn")),
    "fig6": ("duty_cycle_theta", _theta_grid, ("dsss_lower_unknown", "ppm_upper", "c_awgn")),
}


def figure_spec(figure_id: str, params: SystemParams) -> SweepSpec:
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure {figure_id!r}; expected one of {FIGURE_IDS}")
    swept, grid, outputs = FIGURES[figure_id]
    return SweepSpec(swept, grid(params), params, outputs)


def figure_summary(figure_id, rows):
    """Derived facts reported in the sidecar (not part of the rows)."""
    if figure_id != "fig6":
        return {}
    thetas = [r.values["duty_cycle_theta"] for r in rows]
    dsss = [r.values["dsss_lower_unknown"] for r in rows]
    ppm_vals = [r.values["ppm_upper"] for r in rows]
    t_dsss = thetas[int(np.argmax(dsss))]
    t_ppm = thetas[int(np.argmax(ppm_vals))]
    return {
        "argmax_theta_dsss_lower_unknown": t_dsss,
        "argmax_theta_ppm_upper": t_ppm,
        "dsss_argmax_below_ppm_argmax": t_dsss < t_ppm,
    }


# ----------------------------------------------------------------------------
# output files


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    return f"{float(value):.9e}"


def render_csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        values = row.values if isinstance(row, ResultRow) else row
        lines.append(",".join(format_value(values[c]) for c in columns))
    return "\n".join(lines) + "\n"


def render_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".")


def resolve_out_path(out_path, stem) -> Path:
    if out_path is None:
        return default_output_dir() / f"{stem}.csv"
    return Path(out_path)


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_outputs(csv_path, csv_text, sidecar) -> tuple:
    """Write the CSV and its sidecar; raises ``OSError`` on unwritable paths."""
    csv_path = Path(csv_path)
    if csv_path.parent and not csv_path.parent.exists():
        csv_path.parent.mkdir(parents=True, exist_ok=True)
    json_path = sidecar_path(csv_path)
    csv_path.write_text(csv_text)
    json_path.write_text(render_json(sidecar))
    return csv_path, json_path


def sweep_sidecar(spec: SweepSpec, ctx: EvalContext, columns, command, figure_id=None, summary=None):
    from uwbcap import __version__

    return {
        "artifact_version": __version__,
        "command": command,
        "figure_id": figure_id,
        "seed": int(ctx.seed),
        "simulation_trials": int(ctx.trials),
        "variant_flags": ctx.variants.as_flags(),
        "resolved_params": spec.fixed.to_dict(),
        "config": params_to_config(spec.fixed),
        "sweep": {
            "swept_parameter": spec.swept_parameter,
            "values": list(spec.values),
            "outputs": list(spec.outputs),
        },
        "columns": list(columns),
        "units": {c: column_unit(c) for c in columns},
        "summary": summary or {},
    }


def column_unit(column):
    if column in ("num_paths_l", "duty_cycle_theta") or column.startswith("theta_star"):
        return "dimensionless"
    if column == "bandwidth_w_hz":
        return "Hz"
    if column.startswith("ppm_error_rate") or column == "union_bound":
        return "probability"
    return "bits/sec"


def spec_from_sidecar(doc) -> tuple:
    """Rebuild ``(SweepSpec, EvalContext)`` from a sidecar document."""
    params = SystemParams(**doc["resolved_params"])
    sweep = doc["sweep"]
    spec = SweepSpec(sweep["swept_parameter"], tuple(sweep["values"]), params, tuple(sweep["outputs"]))
    ctx = EvalContext(Variants(**doc["variant_flags"]), doc["seed"], doc["simulation_trials"])
    return spec, ctx


def recompute_csv(doc) -> str:
    """CSV text implied by a sweep sidecar alone."""
    spec, ctx = spec_from_sidecar(doc)
    rows = run_sweep(spec, ctx)
    return render_csv(doc["columns"], rows)


def run_figure(
    figure_id: str,
    overrides: Optional[dict] = None,
    out_path=None,
    jobs: int = 1,
    variants: Variants = DEFAULT_VARIANTS,
    seed: int = 0,
    base: Optional[SystemParams] = None,
):
    """Compute one figure's data and write ``<out>.csv`` plus ``<out>.json``.

    Args:
        figure_id: ``fig3``, ``fig4``, ``fig5`` or ``fig6``.
        overrides: ``SystemParams`` field values applied after the defaults.
        out_path: CSV destination; defaults to ``$UWBCAP_OUTPUT_DIR/<figure_id>.csv``.
        jobs: worker threads for the sweep points.

    Returns:
        ``(csv_path, json_path, rows)``.
    """
    base = base or SystemParams.reference_defaults()
    try:
        params = base.replace(**(overrides or {}))
    except ParameterError as exc:
        raise ConfigError(exc.field, str(exc)) from exc
    except TypeError as exc:
        raise ConfigError("<overrides>", str(exc)) from exc
    spec = figure_spec(figure_id, params)
    ctx = EvalContext(variants, seed)
    rows = run_sweep(spec, ctx, jobs)
    columns = rows[0].columns()
    doc = sweep_sidecar(spec, ctx, columns, "figure", figure_id, figure_summary(figure_id, rows))
    csv_path, json_path = write_outputs(resolve_out_path(out_path, figure_id), render_csv(columns, rows), doc)
    return csv_path, json_path, rows
