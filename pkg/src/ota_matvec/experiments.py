"""Scenario catalogue, configuration files and CSV output.

Each scenario turns an :class:`ExperimentConfig` into a flat list of
:class:`ResultRow` objects, one per (sweep point, series, metric). A series
label such as ``fig8;snr_db=20;alpha=0.75`` goes in the ``scenario`` column
so that a single CSV can hold every curve of a figure.

Config files are flat ``key = value`` lines whose values are Python
literals::

    scenario = "fig4"
    trials = 10000
    seed = 1
    sweep.max_power_db = [0, 5, 10, 15, 20, 25, 30]
    N_k = 30
"""

from __future__ import annotations

import ast
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import closed_form as cf
from .channel import ChannelParams, compensate, mse_bound_theorem1
from .engine import RandomCode, estimate_nmse
from .numerics import make_rng
from .partition import (WorkerProfile, completion_outage_curve,
                        balance_columns, two_group_load_ratios, PartitionSpec,
                        uniform_partition)

__all__ = [
    "SCENARIOS",
    "VOCABULARY",
    "METRICS",
    "CSV_HEADER",
    "ExperimentConfig",
    "ResultRow",
    "ConfigError",
    "run_scenario",
    "emit_csv",
    "format_csv",
    "read_csv",
    "load_config",
    "parse_assignment",
    "db_to_linear",
]

SCENARIOS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig8", "custom")
NMSE_SCENARIOS = ("fig4", "fig5", "fig6", "fig8", "custom")
OUTAGE_SCENARIOS = ("fig2",)
METRICS = ("nmse_sim", "bound1", "bound2", "asymptote", "cm_nmse", "outage",
           "individual_mse", "theorem1_bound")
CSV_HEADER = ("scenario", "sweep_param", "sweep_value", "metric", "value", "std_error", "trials")

_INT_KEYS = ("K", "L", "M_k", "Q_l", "N_k", "M", "Q")
_FLOAT_KEYS = ("sigma_h_sq", "N0", "max_power", "max_power_db", "snr_db", "alpha",
               "p_err_target", "r", "deadline", "gain_sq", "psi", "energy",
               "setup_delay_mean", "tau")
VOCABULARY = _INT_KEYS + _FLOAT_KEYS

DEFAULT_TRIALS = {"fig2": 100_000, "fig3": 0}
DEFAULT_NMSE_TRIALS = 10_000
MIN_NMSE_TRIALS = 100

# fig2 worker pool: clock speeds, and rows per column group (1 x L_1, 1 x L_2, 3 x L_1, 3 x L_2).
FIG2_CLOCKS = (1.0, 10.0, 10.0, 40.0)
FIG2_ROWS = (1, 1, 3, 3)

_DEFAULTS = {
    "fig2": dict(fixed={"L": 100, "setup_delay_mean": 10.0, "tau": 1.0},
                 sweep=("deadline", tuple(float(d) for d in range(1, 101)))),
    "fig3": dict(fixed={"psi": 1.0, "max_power": 2.0, "energy": 5.0},
                 sweep=("gain_sq", tuple(np.unique(np.concatenate(
                     [np.logspace(-3, 0, 61), [0.02, 0.5]])).tolist()))),
    "fig4": dict(fixed={"K": 10, "L": 10, "M_k": 10, "Q_l": 10, "N_k": 30,
                        "sigma_h_sq": 1.0, "N0": 1.0},
                 sweep=("max_power_db", (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0))),
    "fig5": dict(fixed={"K": 10, "M_k": 10, "Q": 256, "N_k": 30, "snr_db": 30.0,
                        "sigma_h_sq": 1.0, "N0": 1.0},
                 sweep=("L", (4, 8, 16, 32, 64, 128, 256))),
    "fig6": dict(fixed={"L": 10, "Q_l": 10, "M": 256, "snr_db": 30.0,
                        "sigma_h_sq": 1.0, "N0": 1.0},
                 sweep=("K", (4, 8, 16, 32, 64, 128, 256))),
    "fig8": dict(fixed={"K": 10, "L": 10, "M_k": 10, "Q_l": 10, "sigma_h_sq": 1.0,
                        "N0": 1.0, "p_err_target": 1e-2},
                 sweep=("r", tuple(1.0 / n for n in range(1, 11)))),
    "custom": dict(fixed={"sigma_h_sq": 1.0, "N0": 1.0}, sweep=None),
}
FIG8_SNR_DB = (20.0, 30.0)
FIG8_ALPHA = (1.0, 0.75, 0.5)


class ConfigError(ValueError):
    pass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _coerce(key: str, value):
    if key in _INT_KEYS:
        if isinstance(value, bool) or not float(value).is_integer():
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if key in _FLOAT_KEYS:
        if isinstance(value, bool):
            raise ConfigError(f"{key} must be numeric, got {value!r}")
        return float(value)
    raise ConfigError(f"unknown parameter {key!r}; known: {', '.join(VOCABULARY)}")


@dataclass
class ExperimentConfig:
    scenario: str
    trials: int | None = None
    seed: int = 0
    sweep: tuple[str, tuple] | None = None
    fixed: dict = field(default_factory=dict)
    analytic_only: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        defaults = _DEFAULTS[self.scenario]
        self.fixed = {**defaults["fixed"],
                      **{k: _coerce(k, v) for k, v in self.fixed.items()}}
        if self.sweep is None:
            self.sweep = defaults["sweep"]
        if self.sweep is None:
            raise ConfigError(f"scenario {self.scenario!r} needs a sweep")
        name, values = self.sweep
        values = tuple(_coerce(name, v) for v in values)
        if not values:
            raise ConfigError("sweep grid is empty")
        self.sweep = (name, values)
        self.fixed.pop(name, None)
        if self.trials is None:
            self.trials = DEFAULT_TRIALS.get(self.scenario, DEFAULT_NMSE_TRIALS)
        self.trials = int(self.trials)
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be positive")
        if self.scenario in NMSE_SCENARIOS and not self.analytic_only \
                and self.trials < MIN_NMSE_TRIALS:
            raise ConfigError(f"NMSE scenarios need trials >= {MIN_NMSE_TRIALS}")
        if self.scenario in OUTAGE_SCENARIOS and self.trials < 1:
            raise ConfigError("outage scenarios need trials >= 1")
        for point in self.points():
            _resolve(point, self.scenario)

    def points(self) -> list[dict]:
        name, values = self.sweep
        return [{**self.fixed, name: v} for v in values]


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    sweep_param: str
    sweep_value: float
    metric: str
    value: float
    std_error: float = 0.0
    trials: int = 0


@dataclass(frozen=True)
class _Point:
    partition: PartitionSpec | None
    channel: ChannelParams | None
    max_power: float | None
    n_k: int | None
    params: dict


def _split(total, count, name):
    if total % count:
        raise ConfigError(f"{name}={total} is not divisible by {count}")
    return total // count


def _resolve(p: dict, scenario: str) -> _Point:
    """Derive the partition, channel and power cap of one sweep point."""
    if scenario in ("fig2", "fig3"):
        return _Point(None, None, p.get("max_power"), None, p)
    p = dict(p)
    for block, total, count in (("M_k", "M", "K"), ("Q_l", "Q", "L")):
        if count not in p:
            raise ConfigError(f"missing parameter {count}")
        if total in p:
            derived = _split(p[total], p[count], total)
            if block in p and p[block] != derived:
                raise ConfigError(f"{block}={p[block]} contradicts {total}/{count}={derived}")
            p[block] = derived
        if block not in p:
            raise ConfigError(f"missing parameter {block} (or {total})")
    if "r" in p:
        n = p["M_k"] / p["r"]
        if abs(n - round(n)) > 1e-9 or round(n) < p["M_k"]:
            raise ConfigError(f"code rate r={p['r']} gives invalid N_k={n} for M_k={p['M_k']}")
        p["N_k"] = int(round(n))
    if p.get("N_k", p["M_k"]) < p["M_k"]:
        raise ConfigError(f"N_k={p['N_k']} is smaller than M_k={p['M_k']}")
    sigma_h_sq, n0 = p.get("sigma_h_sq", 1.0), p.get("N0", 1.0)
    given = [k for k in ("max_power", "max_power_db", "snr_db") if k in p]
    if scenario == "fig8" and not given:
        given = ["snr_db"]
        p["snr_db"] = FIG8_SNR_DB[0]
    if len(given) != 1:
        raise ConfigError(f"set exactly one of max_power, max_power_db, snr_db (got {given})")
    key = given[0]
    if key == "max_power":
        power = p[key]
    elif key == "max_power_db":
        power = db_to_linear(p[key])
    else:
        power = db_to_linear(p[key]) * n0 / sigma_h_sq
    if power <= 0:
        raise ConfigError("max_power must be positive")
    try:
        part = uniform_partition(p["K"] * p["M_k"], p["L"] * p["Q_l"], p["K"], p["L"])
        channel = ChannelParams(sigma_h_sq, n0, power)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return _Point(part, channel, power, p.get("N_k"), p)


def _nmse_row(label, cfg, name, value, pt: _Point, coding) -> ResultRow:
    est = estimate_nmse(pt.partition, coding, pt.channel, pt.max_power, cfg.trials, cfg.seed,
                        n_jobs=cfg.n_jobs)
    return ResultRow(label, name, value, "nmse_sim", est.mean, est.std_error, est.trials)


def _code_series(pt: _Point):
    """``[(label suffix, coding)]`` for the uncoded and (if requested) coded runs."""
    series = [("code=uncoded", None)]
    if pt.n_k is not None and pt.n_k != pt.partition.row_sizes[0]:
        series.append((f"code=N_k={pt.n_k}", RandomCode(pt.n_k / pt.partition.row_sizes[0])))
    return series


def _run_fig2(cfg: ExperimentConfig) -> list[ResultRow]:
    name, deadlines = cfg.sweep
    f = cfg.fixed
    L, tau = f["L"], f["tau"]
    profiles = [WorkerProfile(c, f["setup_delay_mean"]) for c in FIG2_CLOCKS]
    L_1 = balance_columns(L, two_group_load_ratios(FIG2_CLOCKS, FIG2_ROWS, L, tau))
    widths = [L_1, L - L_1, L_1, L - L_1]
    cases = {
        "case=1": [tau * L] * 4,
        "case=2": [tau * m * w for m, w in zip(FIG2_ROWS, widths)],
    }
    cases["case=3"] = cases["case=2"]
    curves = {label: completion_outage_curve(loads, profiles, deadlines, cfg.trials,
                                             make_rng(cfg.seed, 0))
              for label, loads in cases.items()}
    rows = []
    for i, d in enumerate(deadlines):
        for label, curve in curves.items():
            p = float(curve[i])
            se = math.sqrt(p * (1.0 - p) / cfg.trials)
            rows.append(ResultRow(f"fig2;{label}", name, d, "outage", p, se, cfg.trials))
    return rows


def _run_fig3(cfg: ExperimentConfig) -> list[ResultRow]:
    name, gains = cfg.sweep
    f = cfg.fixed
    psi, power, energy = f["psi"], f["max_power"], f["energy"]
    rows = []
    for g in gains:
        res = compensate(math.sqrt(g), psi, energy, power)
        rows.append(ResultRow("fig3", name, g, "individual_mse", res.individual_mse / energy))
        rows.append(ResultRow("fig3", name, g, "theorem1_bound", mse_bound_theorem1(psi, g, power)))
    return rows


def _run_nmse(cfg: ExperimentConfig, with_bounds: bool) -> list[ResultRow]:
    name, values = cfg.sweep
    rows = []
    for value, point in zip(values, cfg.points()):
        pt = _resolve(point, cfg.scenario)
        for suffix, coding in _code_series(pt):
            label = f"{cfg.scenario};{suffix}"
            if not cfg.analytic_only:
                rows.append(_nmse_row(label, cfg, name, value, pt, coding))
            if with_bounds:
                lengths = None if coding is None else pt.n_k
                b1 = cf.mean_mse_bound1(pt.partition, None, pt.channel, pt.max_power,
                                        code_lengths=lengths, normalized=True)
                b2 = cf.mean_mse_bound2(pt.partition, None, pt.channel, pt.max_power,
                                        code_lengths=lengths, normalized=True)
                rows.append(ResultRow(label, name, value, "bound1", b1))
                rows.append(ResultRow(label, name, value, "bound2", b2))
    return rows


def _run_fig4(cfg: ExperimentConfig) -> list[ResultRow]:
    name, values = cfg.sweep
    rows = []
    for value, point in zip(values, cfg.points()):
        pt = _resolve(point, cfg.scenario)
        for suffix, coding in _code_series(pt):
            label = f"fig4;{suffix}"
            if not cfg.analytic_only:
                rows.append(_nmse_row(label, cfg, name, value, pt, coding))
            if coding is None:
                rows.append(ResultRow(label, name, value, "bound1", cf.mean_mse_bound1(
                    pt.partition, None, pt.channel, pt.max_power, normalized=True)))
                rows.append(ResultRow(label, name, value, "bound2", cf.mean_mse_bound2(
                    pt.partition, None, pt.channel, pt.max_power, normalized=True)))
    return rows


def _run_sim_only(cfg: ExperimentConfig) -> list[ResultRow]:
    name, values = cfg.sweep
    rows = []
    if cfg.analytic_only:
        return rows
    for value, point in zip(values, cfg.points()):
        pt = _resolve(point, cfg.scenario)
        for suffix, coding in _code_series(pt):
            rows.append(_nmse_row(f"{cfg.scenario};{suffix}", cfg, name, value, pt, coding))
    return rows


def _run_fig8(cfg: ExperimentConfig) -> list[ResultRow]:
    name, values = cfg.sweep
    f = cfg.fixed
    snrs = [f["snr_db"]] if "snr_db" in f else list(FIG8_SNR_DB)
    alphas = [f["alpha"]] if "alpha" in f else list(FIG8_ALPHA)
    rows = []
    for value, point in zip(values, cfg.points()):
        for snr_db in snrs:
            pt = _resolve({**point, "snr_db": snr_db}, cfg.scenario)
            part, n_k = pt.partition, pt.n_k
            m_k = part.row_sizes[0]
            label = f"fig8;snr_db={snr_db:g}"
            if not cfg.analytic_only:
                coding = None if n_k == m_k else RandomCode(n_k / m_k)
                rows.append(_nmse_row(label, cfg, name, value, pt, coding))
            rows.append(ResultRow(label, name, value, "asymptote",
                                  cf.asymptotic_nmse(part, n_k, pt.channel, pt.max_power)))
            for alpha in alphas:
                cm = cf.CmParams(snr=db_to_linear(snr_db), alpha=alpha, j_needed=part.J,
                                 p_err_target=f["p_err_target"])
                rows.append(ResultRow(f"{label};alpha={alpha:g}", name, value, "cm_nmse",
                                      cf.cm_nmse(part.row_sizes[0] / n_k, cm)))
    return rows


def run_scenario(config: ExperimentConfig) -> list[ResultRow]:
    """All result rows of ``config``, in sweep-major order."""
    s = config.scenario
    if s == "fig2":
        return _run_fig2(config)
    if s == "fig3":
        return _run_fig3(config)
    if s == "fig4":
        return _run_fig4(config)
    if s in ("fig5", "fig6"):
        return _run_sim_only(config)
    if s == "fig8":
        return _run_fig8(config)
    return _run_nmse(config, with_bounds=True)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def format_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.scenario, r.sweep_param, _fmt(r.sweep_value), r.metric,
                    _fmt(r.value), _fmt(r.std_error), str(int(r.trials))])
    return buf.getvalue()


def emit_csv(rows: Iterable[ResultRow], path) -> None:
    path = Path(path)
    text = format_csv(rows)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [ResultRow(s, p, float(v), m, float(val), float(se), int(t))
                for s, p, v, m, val, se, t in reader]


def parse_assignment(text: str) -> tuple[str, object]:
    """Split ``key = literal`` into ``(key, value)``."""
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key, raw = key.strip(), raw.strip()
    try:
        value = ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        # bare words such as scenario names
        if raw.isidentifier():
            value = raw
        else:
            raise ConfigError(f"cannot parse value for {key!r}: {raw!r}") from None
    return key, value


def _apply(settings: dict, key: str, value) -> None:
    if key.startswith("sweep."):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        settings["sweep"] = (key[len("sweep."):], tuple(value))
    elif key in ("scenario", "trials", "seed", "analytic_only", "n_jobs"):
        settings[key] = value
    else:
        settings.setdefault("fixed", {})[key] = _coerce(key, value)


def load_config(path=None, overrides: Iterable[str] = (), **explicit) -> ExperimentConfig:
    """Build a config from an optional file, ``key=value`` overrides and keyword values.

    Later sources win: file, then overrides, then non-``None`` keywords.
    """
    settings: dict = {}
    if path is not None:
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        for n, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                _apply(settings, *parse_assignment(line))
            except ConfigError as exc:
                raise ConfigError(f"{path}:{n}: {exc}") from None
    for item in overrides:
        _apply(settings, *parse_assignment(item))
    for key, value in explicit.items():
        if value is not None:
            _apply(settings, key, value)
    if "scenario" not in settings:
        raise ConfigError("no scenario given")
    return ExperimentConfig(**settings)
