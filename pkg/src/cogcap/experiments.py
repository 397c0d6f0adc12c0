"""Experiment specifications and the recipes behind each CLI command.

An :class:`ExperimentSpec` is assembled from defaults, a JSON document, the
``COGCAP_SEED`` environment variable and command-line flags, in that order of
increasing precedence. Each ``run_*`` function writes its artifacts into
``spec.out_dir`` and returns an exit code.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (CROSS_POWER_MODES, c1, baseline_outage, crossover_delta,
                       fit_scaling_exponent, lambda_star_siso, scaling_bounds,
                       transmission_capacity)
from .errors import InfeasibleError, ParameterError
from .montecarlo import TrialPlan, intensity_vs_delta, max_intensity_search
from .results import emit_plot, emit_results
from .sir import Regime, ScenarioConfig

COMMANDS = ("capacity", "sweep", "validate", "scaling", "figures")
FIGURES = ("fig3", "fig4", "fig5", "fig6")
EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_VALIDATION, EXIT_IO = 0, 2, 3, 4, 5
SEED_ENV = "COGCAP_SEED"

# Figure presets: alpha 3, unit link lengths, P_p/P_s = 2, unit thresholds.
FIGURE_PRESET = dict(alpha=3.0, d_p=1.0, d_s=1.0, P_p=2.0, P_s=1.0, beta_p=1.0, beta_s=1.0,
                     eps_s=0.1, lambda_p=0.01)
FIG3_PRIMARY_EPS = 0.1
FIG5_THETAS = (1 / 2, 1 / 3, 1 / 4)
FIG_ANTENNAS = (2, 4, 8, 16)
FIG4_DELTAS = np.round(np.linspace(0.0005, 0.1, 200), 10)

_SPEC_KEYS = {"command", "regime", "mode", "sweep", "theta", "monte_carlo", "tolerance",
              "formats", "figures", "record_time", "out", "trials", "master_seed",
              "region_radius", "eta", "workers", "scenario"}


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    regime: str = "siso"
    mode: str = "corrected"
    axis: str | None = None
    values: tuple = ()
    theta: float | None = None
    plan: TrialPlan = field(default_factory=TrialPlan)
    monte_carlo: bool = False
    tolerance: float = 0.01
    formats: tuple = ("csv",)
    figures: tuple = FIGURES
    record_time: bool = False
    out_dir: Path = Path("cogcap-out")

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        Regime(self.regime)
        if self.mode not in CROSS_POWER_MODES:
            raise ParameterError(f"unknown mode {self.mode!r}; expected one of {CROSS_POWER_MODES}")
        if self.axis is not None and self.axis not in ScenarioConfig.field_names():
            raise ParameterError(f"sweep axis {self.axis!r} is not a scenario field")
        if self.command == "sweep" and (self.axis is None or not self.values):
            raise ParameterError("sweep needs an axis and a nonempty value list")
        if self.theta is not None and not (0 < self.theta <= 1):
            raise ParameterError("theta must lie in (0, 1]")
        if not (0 < self.tolerance < 1):
            raise ParameterError("tolerance must lie in (0, 1)")
        bad = set(self.formats) - {"csv", "json"}
        if bad or not self.formats:
            raise ParameterError(f"formats must be a nonempty subset of csv/json, got {self.formats}")
        bad = set(self.figures) - set(FIGURES)
        if bad:
            raise ParameterError(f"unknown figures {sorted(bad)}")

    def provenance(self) -> dict:
        """Everything that determines the results; worker count deliberately excluded."""
        return {
            "tool": f"cogcap {__version__}",
            "command": self.command,
            "regime": self.regime,
            "mode": self.mode,
            "config": self.config.as_dict(),
            "sweep": {"axis": self.axis, "values": list(self.values)} if self.axis else None,
            "theta": self.theta,
            "monte_carlo": self.monte_carlo,
            "trials": self.plan.trials,
            "master_seed": self.plan.master_seed,
            "region_radius": self.plan.region_radius,
            "eta": self.plan.eta,
            "tolerance": self.tolerance,
        }


def parse_assignment(text: str):
    """``key=value`` with the value parsed as JSON when possible."""
    if "=" not in text:
        raise ParameterError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_spec(command: str, document: dict | None = None, overrides: dict | None = None,
               environ=None) -> ExperimentSpec:
    """Merge defaults < JSON document < ``COGCAP_SEED`` < explicit overrides.

    ``document`` and ``overrides`` share one flat namespace: scenario fields
    (``lambda_p``, ``N``, ...) and spec keys (``trials``, ``regime``,
    ``sweep``, ...). A nested ``"scenario"`` object is also accepted.
    """
    environ = os.environ if environ is None else environ
    merged = dict(document or {})
    merged.update(merged.pop("scenario", None) or {})
    env_seed = environ.get(SEED_ENV)
    if env_seed not in (None, ""):
        try:
            merged["master_seed"] = int(env_seed)
        except ValueError as exc:
            raise ParameterError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from exc
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    cfg_names = set(ScenarioConfig.field_names())
    unknown = set(merged) - cfg_names - _SPEC_KEYS
    if unknown:
        raise ParameterError(f"unknown configuration keys {sorted(unknown)}")
    cfg = ScenarioConfig(**{k: merged[k] for k in cfg_names if k in merged})
    plan_kw = {k: merged[k] for k in ("trials", "master_seed", "region_radius", "eta", "workers")
               if k in merged}
    sweep = merged.get("sweep") or {}
    if sweep and not isinstance(sweep, dict):
        raise ParameterError("sweep must be an object with 'parameter' and 'values'")
    spec = ExperimentSpec(
        command=command or merged.get("command", ""),
        config=cfg,
        regime=merged.get("regime", "siso"),
        mode=merged.get("mode", "corrected"),
        axis=sweep.get("parameter"),
        values=tuple(sweep.get("values", ())),
        theta=merged.get("theta"),
        plan=TrialPlan(**plan_kw),
        monte_carlo=bool(merged.get("monte_carlo", "trials" in (overrides or {}))),
        tolerance=float(merged.get("tolerance", 0.01)),
        formats=tuple(merged.get("formats", ("csv",))),
        figures=tuple(merged.get("figures", FIGURES)),
        record_time=bool(merged.get("record_time", False)),
        out_dir=Path(merged.get("out", "cogcap-out")),
    )
    return spec


# -- rows ---------------------------------------------------------------------

def with_theta(cfg: ScenarioConfig, regime, theta) -> ScenarioConfig:
    """Apply ``k = ceil(theta * N)`` (capped at ``N - 1``) for the miso regime."""
    if theta is None or Regime(regime) is not Regime.MISO:
        return cfg
    return cfg.replace(k=nulling_count(cfg.N, theta))


def nulling_count(n: int, theta: float) -> int:
    """``ceil(theta * n)`` kept within ``[1, n - 1]``."""
    return min(n - 1, max(1, math.ceil(theta * n - 1e-9)))


def capacity_row(cfg: ScenarioConfig, regime, mode: str, plan: TrialPlan | None,
                 tolerance: float = 0.01, record_time: bool = False) -> dict:
    """One result row: analytic lambda* (siso only), optional MC bisection.

    ``capacity`` and ``binding_constraint`` come from the analytic result when
    there is one, otherwise from Monte Carlo.
    """
    regime = Regime(regime)
    if regime is Regime.BASELINE:
        raise ParameterError("the baseline regime has no secondary network to size")
    start = time.perf_counter()
    row = cfg.as_dict()
    row.update(lambda_star_analytic=float("nan"), lambda_star_mc=float("nan"))
    binding, lam = None, None
    if regime is Regime.SISO:
        res = lambda_star_siso(cfg, mode, check_consistency=False)
        row["lambda_star_analytic"] = res.lambda_star
        binding, lam = res.binding_constraint, res.lambda_star
    if plan is not None:
        mc = max_intensity_search(cfg, regime, plan, tolerance)
        row.update(lambda_star_mc=mc.lambda_star_mc, ci_low=mc.ci[0], ci_high=mc.ci[1],
                   trials=plan.trials, master_seed=plan.master_seed)
        if lam is None:
            binding, lam = mc.binding_constraint, mc.lambda_star_mc
    row["binding_constraint"] = binding
    row["capacity"] = transmission_capacity(lam, cfg.eps_s, cfg.beta_s)
    if record_time:
        row["wall_time_s"] = time.perf_counter() - start
    return row


def infeasible_row(cfg: ScenarioConfig) -> dict:
    row = cfg.as_dict()
    row.update(lambda_star_analytic=0.0, lambda_star_mc=float("nan"),
               binding_constraint="infeasible", capacity=0.0)
    return row


def _write_table(spec, stem, rows, extra=None):
    prov = spec.provenance()
    if extra:
        prov.update(extra)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    return [emit_results(rows, fmt, spec.out_dir / f"{stem}.{fmt}", prov) for fmt in spec.formats]


def _mc_plan(spec):
    return spec.plan if spec.monte_carlo else None


# -- commands -----------------------------------------------------------------

def run_capacity(spec: ExperimentSpec) -> int:
    cfg = with_theta(spec.config, spec.regime, spec.theta)
    if Regime(spec.regime) is not Regime.SISO and not spec.monte_carlo:
        raise ParameterError(f"regime {spec.regime!r} has no closed form; pass --trials for Monte Carlo")
    try:
        row = capacity_row(cfg, spec.regime, spec.mode, _mc_plan(spec), spec.tolerance,
                           spec.record_time)
    except InfeasibleError as exc:
        _write_table(spec, "capacity", [infeasible_row(cfg)], {"infeasible": str(exc)})
        print(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    _write_table(spec, "capacity", [row])
    analytic = row["lambda_star_analytic"]
    lam = analytic if math.isfinite(analytic) else row["lambda_star_mc"]
    print(f"lambda_star = {lam:.6g} ({row['binding_constraint']}), capacity = {row['capacity']:.6g}")
    if "ci_low" in row:
        print(f"monte carlo lambda_star = {row['lambda_star_mc']:.6g}, "
              f"95% interval [{row['ci_low']:.6g}, {row['ci_high']:.6g}]")
    return EXIT_INFEASIBLE if lam <= 0 else EXIT_OK


def sweep_rows(spec: ExperimentSpec, cfg: ScenarioConfig | None = None, axis=None, values=None):
    cfg = spec.config if cfg is None else cfg
    axis = spec.axis if axis is None else axis
    values = spec.values if values is None else values
    rows = []
    for v in values:
        point = with_theta(cfg.replace(**{axis: v}), spec.regime, spec.theta)
        try:
            rows.append(capacity_row(point, spec.regime, spec.mode, _mc_plan(spec),
                                     spec.tolerance, spec.record_time))
        except InfeasibleError:
            rows.append(infeasible_row(point))
    return rows


def _lambda_series(rows, axis):
    x = [r[axis] for r in rows]
    out = []
    for key, label in (("lambda_star_analytic", "analytic"), ("lambda_star_mc", "Monte Carlo")):
        y = [r.get(key, float("nan")) for r in rows]
        if sum(math.isfinite(v) for v in y) >= 2:
            out.append((label, x, y))
    return out


def run_sweep(spec: ExperimentSpec) -> int:
    if Regime(spec.regime) is not Regime.SISO and not spec.monte_carlo:
        raise ParameterError(f"regime {spec.regime!r} has no closed form; pass --trials for Monte Carlo")
    rows = sweep_rows(spec)
    _write_table(spec, "sweep", rows)
    series = _lambda_series(rows, spec.axis)
    if series and len(rows) >= 2:
        emit_plot(series, spec.out_dir / "sweep.svg", spec.axis, "secondary intensity lambda*",
                  provenance=spec.provenance())
    for r in rows:
        print(f"{spec.axis}={r[spec.axis]}: analytic {r['lambda_star_analytic']:.6g}, "
              f"mc {r['lambda_star_mc']:.6g}, {r['binding_constraint']}")
    return EXIT_OK


def scaling_table(spec: ExperimentSpec, axis: str, sizes) -> tuple[list, dict]:
    """Monte Carlo lambda* over antenna counts plus the fitted exponent."""
    regime = Regime(spec.regime)
    if regime not in (Regime.MISO, Regime.MIMO):
        raise ParameterError("scaling needs the miso or mimo regime")
    if axis not in ("N", "M"):
        raise ParameterError(f"scaling axis must be N or M, got {axis!r}")
    theta = 0.5 if spec.theta is None and regime is Regime.MISO else spec.theta
    rows = []
    for n in sizes:
        if regime is Regime.MISO:
            cfg = spec.config.replace(N=n, M=1, m=0, k=nulling_count(n, theta))
        elif axis == "N":
            # N = M with half the receive dimensions spent on cancelation
            cfg = spec.config.replace(N=n, M=n, m=n // 2)
        else:
            cfg = spec.config.replace(M=n, m=n // 2)
        rows.append(capacity_row(cfg, regime, spec.mode, spec.plan, spec.tolerance, spec.record_time))
    lam = [r["lambda_star_mc"] for r in rows]
    pts = [(n, v) for n, v in zip(sizes, lam) if v > 0]
    summary = {"axis": axis, "sizes": list(sizes), "lambda_star_mc": lam, "theta": theta}
    if len(pts) >= 3:
        slope, intercept, resid = fit_scaling_exponent(pts)
        summary.update(slope=slope, intercept=intercept, rms_residual=resid)
    else:
        summary.update(slope=None, intercept=None, rms_residual=None)
    b = scaling_bounds(regime.value, spec.config.alpha, rows[-1]["N"], rows[-1]["M"])
    summary.update(lower_exponent=b.lower_exponent, upper_exponent=b.upper_exponent,
                   bound_variable=b.variable)
    return rows, summary


def run_scaling(spec: ExperimentSpec) -> int:
    axis = spec.axis or "N"
    sizes = spec.values or FIG_ANTENNAS
    rows, summary = scaling_table(spec, axis, sizes)
    _write_table(spec, "scaling", rows, {"scaling": summary})
    with open(spec.out_dir / "scaling_summary.json", "w", encoding="utf-8") as fh:
        json.dump({"provenance": spec.provenance(), "summary": summary}, fh, indent=2)
        fh.write("\n")
    pos = [(n, v) for n, v in zip(sizes, summary["lambda_star_mc"]) if v > 0]
    if len(pos) >= 2:
        x, y = zip(*pos)
        emit_plot([("Monte Carlo lambda*", x, y)], spec.out_dir / "scaling.svg", axis,
                  "secondary intensity lambda*", loglog=True, provenance=spec.provenance())
    print(f"lambda*({axis}) = {summary['lambda_star_mc']}")
    print(f"fitted exponent {summary['slope']}, bounds [{summary['lower_exponent']:.4g}, "
          f"{summary['upper_exponent']:.4g}] in {summary['bound_variable']}")
    return EXIT_OK


def run_validate(spec: ExperimentSpec) -> int:
    from .results import OutputError
    from .validation import run_suite

    cfg = spec.config
    if cfg.lambda_s <= 0:
        cfg = cfg.replace(lambda_s=cfg.lambda_p)
    checks = run_suite(cfg, spec.plan)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    path = spec.out_dir / "validation.json"
    doc = {"provenance": spec.provenance(),
           "checks": [{"name": c.name, "statistic": float(f"{c.statistic:.12g}"),
                       "pvalue": None if math.isnan(c.pvalue) else float(f"{c.pvalue:.12g}"),
                       "passed": c.passed, "samples": c.samples, "expect": c.expect}
                      for c in checks]}
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    for c in checks:
        p = "" if math.isnan(c.pvalue) else f" p={c.pvalue:.4g}"
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: stat={c.statistic:.4g}{p}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


# -- figures ------------------------------------------------------------------

def _figure_spec(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    preset = {k: v for k, v in FIGURE_PRESET.items()}
    preset.update(changes.pop("config", {}))
    cfg = spec.config.replace(**preset)
    return replace(spec, config=cfg, **changes)


def fig3_rows(spec: ExperimentSpec, points: int = 40) -> list[dict]:
    """Secondary vs primary transmission capacity at a fixed total primary outage.

    The total primary outage target ``eps_p_nc + delta_p`` is held at the
    preset epsilon while ``lambda_p`` grows, so ``delta_p`` shrinks.
    """
    cfg = spec.config
    eps_total = FIG3_PRIMARY_EPS
    lam_max = -math.log1p(-eps_total) / (c1(cfg.alpha) * cfg.beta_p ** (2 / cfg.alpha) * cfg.d_p**2)
    grid = np.linspace(lam_max / points, lam_max * (1 - 1 / points), points)
    rows = []
    for lp in grid:
        enc = baseline_outage(lp, cfg.beta_p, cfg.d_p, cfg.alpha)
        point = cfg.replace(lambda_p=float(lp), delta_p=float(eps_total - enc))
        rows.append(capacity_row(point, "siso", spec.mode, _mc_plan(spec), spec.tolerance,
                                 spec.record_time))
    return rows


def primary_capacity(row) -> float:
    return transmission_capacity(row["lambda_p"], row["eps_p_nc"] + row["delta_p"], row["beta_p"])


def fig4_rows(spec: ExperimentSpec, mode: str, deltas=FIG4_DELTAS) -> list[dict]:
    """Analytic lambda*(delta_p); Monte Carlo values share one set of draws."""
    analytic = replace(spec, mode=mode, monte_carlo=False)
    rows = sweep_rows(analytic, spec.config, "delta_p", [float(d) for d in deltas])
    if spec.monte_carlo:
        curve = intensity_vs_delta(spec.config, "siso", spec.plan, deltas)
        for row, lam in zip(rows, curve.lambda_star):
            row.update(lambda_star_mc=float(lam), trials=spec.plan.trials,
                       master_seed=spec.plan.master_seed)
    return rows


def run_figures(spec: ExperimentSpec) -> int:
    out = spec.out_dir
    out.mkdir(parents=True, exist_ok=True)
    for name in spec.figures:
        if name == "fig3":
            fs = _figure_spec(spec, regime="siso")
            rows = fig3_rows(fs)
            _write_table(fs, "fig3", rows, {"figure": "secondary vs primary capacity"})
            x = [primary_capacity(r) for r in rows]
            series = [(f"{fs.mode} analytic", x, [r["capacity"] for r in rows])]
            if fs.monte_carlo:
                series.append(("Monte Carlo", x, [transmission_capacity(r["lambda_star_mc"], r["eps_s"], r["beta_s"])
                                                  for r in rows]))
            emit_plot(series, out / "fig3.svg", "primary transmission capacity",
                      "secondary transmission capacity", provenance=fs.provenance())
        elif name == "fig4":
            fs = _figure_spec(spec, regime="siso")
            series = []
            for mode in CROSS_POWER_MODES:
                rows = fig4_rows(replace(fs, monte_carlo=fs.monte_carlo and mode == fs.mode), mode)
                cross = crossover_delta(fs.config, mode)
                _write_table(replace(fs, mode=mode), f"fig4_{mode}", rows,
                             {"figure": "lambda* vs delta_p", "analytic_crossover_delta": cross})
                series.append((mode, [r["delta_p"] for r in rows],
                               [r["lambda_star_analytic"] for r in rows]))
                if fs.monte_carlo and mode == fs.mode:
                    series.append(("Monte Carlo", [r["delta_p"] for r in rows],
                                   [r["lambda_star_mc"] for r in rows]))
            emit_plot(series, out / "fig4.svg", "primary outage increment delta_p",
                      "secondary intensity lambda*", provenance=fs.provenance())
        elif name == "fig5":
            fs = _figure_spec(spec, regime="miso", config={"M": 1})
            series = []
            rows_all = []
            for theta in FIG5_THETAS:
                ts = replace(fs, theta=theta)
                rows, summary = scaling_table(ts, "N", FIG_ANTENNAS)
                rows_all.extend(rows)
                series.append((f"theta={theta:.3g}", FIG_ANTENNAS, [r["capacity"] for r in rows]))
            _write_table(fs, "fig5", rows_all, {"figure": "miso capacity vs N", "thetas": list(FIG5_THETAS)})
            emit_plot(series, out / "fig5.svg", "transmit antennas N",
                      "secondary transmission capacity", provenance=fs.provenance())
        elif name == "fig6":
            fs = _figure_spec(spec, regime="mimo")
            sizes = FIG_ANTENNAS[:3]
            rows_nm = [capacity_row(fs.config.replace(N=n, M=n, m=n // 2), "mimo", fs.mode,
                                    fs.plan, fs.tolerance, fs.record_time) for n in sizes]
            m_sizes = (1,) + tuple(sizes)
            rows_1m = [capacity_row(fs.config.replace(N=1, M=mm, m=mm // 2), "mimo", fs.mode,
                                    fs.plan, fs.tolerance, fs.record_time) for mm in m_sizes]
            _write_table(fs, "fig6", rows_nm + rows_1m, {"figure": "mimo capacity vs antennas"})
            emit_plot([("N = M", sizes, [r["capacity"] for r in rows_nm]),
                       ("N = 1, varying M", m_sizes, [r["capacity"] for r in rows_1m])],
                      out / "fig6.svg", "antennas", "secondary transmission capacity",
                      provenance=fs.provenance())
        print(f"wrote {name}")
    return EXIT_OK


RUNNERS = {"capacity": run_capacity, "sweep": run_sweep, "validate": run_validate,
           "scaling": run_scaling, "figures": run_figures}


def run(spec: ExperimentSpec) -> int:
    """Execute a spec; errors propagate to the caller (the CLI maps them to exit codes)."""
    return RUNNERS[spec.command](spec)
