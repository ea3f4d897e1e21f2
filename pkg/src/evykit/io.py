"""
Run configuration, CSV formats and text reports.

Configurations are INI files.  Every section is optional at load time; the
commands say which ones they need.  Example::

    [model]
    R = 2.25
    L = 0.945
    alpha = 1.22e-6
    beta = 4.845e-8
    K = 37285000

    [constraints]
    min_biomass = 7000000, 200000
    min_catch = 0, 0

    [state0]
    y = 12000000
    z = 300000

Unknown sections and keys are rejected, and values are checked against the
invariants of the objects they build.
"""
from __future__ import annotations

import configparser
import csv
import datetime
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ConstraintSet, InvalidArgumentError
from .estimation import FitConfig, ObservationSeries
from .lotka_volterra import LVParams
from .simulate import POLICY_KINDS, HarvestPolicy, Trajectory
from .viability import N_EFFORT_SAMPLES

__version__ = "0.1.0"

OBSERVATION_HEADER = ("year", "biomass_prey", "biomass_pred", "catch_prey", "catch_pred")
TRAJECTORY_HEADER = ("year", "y", "z", "v", "w", "catch_y", "catch_z", "in_kernel", "constraints_ok")

PARAM_KEYS = ("R", "L", "alpha", "beta", "K")
SECTIONS = {
    "model": set(PARAM_KEYS),
    "constraints": {"min_biomass", "min_catch"},
    "state0": {"y", "z"},
    "grid": {"bounds", "resolution", "max_iters", "n_samples"},
    "fit": set(PARAM_KEYS) | {"weight_prey", "weight_pred", "cg_max_iters", "grad_step_rel", "converge_tol"},
    "simulate": {"policy", "values", "horizon", "start_year", "n_samples"},
    "msy": {"search_bounds", "resolution", "refine_steps"},
    "output": {"dir"},
}


class ConfigError(Exception):
    """Malformed, incomplete or invalid run configuration."""


class DataError(Exception):
    """Unreadable or malformed input data file."""


@dataclass
class GridSection:
    bounds: Optional[np.ndarray] = None
    resolution: tuple = (200, 200)
    max_iters: int = 50
    n_samples: int = N_EFFORT_SAMPLES


@dataclass
class FitSection:
    initial_guess: Optional[LVParams] = None
    species_weights: Optional[tuple] = None
    cg_max_iters: int = 2000
    grad_step_rel: float = 1e-5
    converge_tol: float = 1e-12

    def fit_config(self, series: ObservationSeries, fallback: Optional[LVParams]) -> FitConfig:
        guess = self.initial_guess or fallback
        if guess is None:
            raise ConfigError("fitting needs an initial guess: keys R, L, alpha, beta, K in [fit] or [model]")
        weights = None
        if self.species_weights is not None:
            weights = np.broadcast_to(np.asarray(self.species_weights, float), series.biomass.shape).copy()
        return FitConfig(guess, weights, self.cg_max_iters, self.grad_step_rel, self.converge_tol)


@dataclass
class SimulateSection:
    policy: HarvestPolicy = field(default_factory=HarvestPolicy.viable_min)
    horizon: int = 100
    start_year: int = 0


@dataclass
class MsySection:
    search_bounds: Optional[np.ndarray] = None
    resolution: int = 201
    refine_steps: int = 40


@dataclass
class RunConfig:
    model: Optional[LVParams] = None
    constraints: Optional[ConstraintSet] = None
    state0: Optional[np.ndarray] = None
    grid: GridSection = field(default_factory=GridSection)
    fit: FitSection = field(default_factory=FitSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    msy: MsySection = field(default_factory=MsySection)
    output_dir: Optional[str] = None
    sha256: str = ""

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            label = {"model": "[model]", "constraints": "[constraints]", "state0": "[state0]"}
            raise ConfigError("missing section(s): " + ", ".join(label.get(n, n) for n in missing))


# --- parsing ------------------------------------------------------------------


def _float(section, key, value) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"[{section}] {key}: must be finite")
    return x


def _int(section, key, value, minimum=None) -> int:
    try:
        x = int(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {value!r}") from None
    if minimum is not None and x < minimum:
        raise ConfigError(f"[{section}] {key}: must be at least {minimum}")
    return x


def _floats(section, key, value, n=None) -> list:
    parts = [p.strip() for p in value.split(",") if p.strip()]
    out = [_float(section, key, p) for p in parts]
    if n is not None and len(out) != n:
        raise ConfigError(f"[{section}] {key}: expected {n} values, got {len(out)}")
    return out


def _params(section, sec) -> Optional[LVParams]:
    given = [k for k in PARAM_KEYS if k in sec]
    if not given:
        return None
    missing = [k for k in PARAM_KEYS if k not in sec]
    if missing:
        raise ConfigError(f"[{section}] missing key(s): {', '.join(missing)}")
    try:
        return LVParams(*(_float(section, k, sec[k]) for k in PARAM_KEYS))
    except InvalidArgumentError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _box(section, key, value):
    vals = _floats(section, key, value, 4)
    box = np.array(vals).reshape(2, 2)
    return box


def parse_config(text: str, source="<string>") -> RunConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        unknown = sorted(set(cp[name]) - SECTIONS[name])
        if unknown:
            raise ConfigError(f"[{name}] unknown key(s): {', '.join(unknown)}")

    cfg = RunConfig(sha256=hashlib.sha256(text.encode("utf-8")).hexdigest())

    if cp.has_section("model"):
        cfg.model = _params("model", cp["model"])
        if cfg.model is None:
            raise ConfigError("[model] is empty")

    if cp.has_section("constraints"):
        sec = cp["constraints"]
        if "min_biomass" not in sec:
            raise ConfigError("[constraints] missing key: min_biomass")
        b = _floats("constraints", "min_biomass", sec["min_biomass"], 2)
        c = _floats("constraints", "min_catch", sec["min_catch"], 2) if "min_catch" in sec else [0.0, 0.0]
        try:
            cfg.constraints = ConstraintSet(tuple(b), tuple(c))
        except InvalidArgumentError as exc:
            raise ConfigError(f"[constraints] {exc}") from None

    if cp.has_section("state0"):
        sec = cp["state0"]
        missing = [k for k in ("y", "z") if k not in sec]
        if missing:
            raise ConfigError(f"[state0] missing key(s): {', '.join(missing)}")
        x0 = np.array([_float("state0", k, sec[k]) for k in ("y", "z")])
        if np.any(x0 < 0):
            raise ConfigError("[state0] biomasses must be nonnegative")
        cfg.state0 = x0

    if cp.has_section("grid"):
        sec = cp["grid"]
        g = cfg.grid
        if "bounds" in sec:
            g.bounds = _box("grid", "bounds", sec["bounds"])
            if np.any(g.bounds[:, 1] <= g.bounds[:, 0]):
                raise ConfigError("[grid] bounds: need lo < hi for each species")
        if "resolution" in sec:
            res = [_int("grid", "resolution", p.strip(), 2) for p in sec["resolution"].split(",")]
            if len(res) == 1:
                res = res * 2
            if len(res) != 2:
                raise ConfigError("[grid] resolution: expected one or two integers")
            g.resolution = tuple(res)
        if "max_iters" in sec:
            g.max_iters = _int("grid", "max_iters", sec["max_iters"], 1)
        if "n_samples" in sec:
            g.n_samples = _int("grid", "n_samples", sec["n_samples"], 0)

    if cp.has_section("fit"):
        sec = cp["fit"]
        f = cfg.fit
        f.initial_guess = _params("fit", sec)
        wkeys = [k for k in ("weight_prey", "weight_pred") if k in sec]
        if wkeys:
            if len(wkeys) != 2:
                raise ConfigError("[fit] give both weight_prey and weight_pred, or neither")
            w = tuple(_float("fit", k, sec[k]) for k in ("weight_prey", "weight_pred"))
            if min(w) < 0:
                raise ConfigError("[fit] weights must be nonnegative")
            f.species_weights = w
        if "cg_max_iters" in sec:
            f.cg_max_iters = _int("fit", "cg_max_iters", sec["cg_max_iters"], 1)
        if "grad_step_rel" in sec:
            f.grad_step_rel = _float("fit", "grad_step_rel", sec["grad_step_rel"])
            if not 0 < f.grad_step_rel < 1:
                raise ConfigError("[fit] grad_step_rel must lie in (0, 1)")
        if "converge_tol" in sec:
            f.converge_tol = _float("fit", "converge_tol", sec["converge_tol"])
            if not f.converge_tol > 0:
                raise ConfigError("[fit] converge_tol must be positive")

    if cp.has_section("simulate"):
        sec = cp["simulate"]
        s = cfg.simulate
        kind = sec.get("policy", "viable_min").strip()
        if kind not in POLICY_KINDS:
            raise ConfigError(f"[simulate] policy must be one of {', '.join(POLICY_KINDS)}")
        n_samples = _int("simulate", "n_samples", sec["n_samples"], 0) if "n_samples" in sec else N_EFFORT_SAMPLES
        if kind.startswith("constant"):
            if "values" not in sec:
                raise ConfigError(f"[simulate] policy {kind} needs key: values")
            vals = _floats("simulate", "values", sec["values"], 2)
            if min(vals) < 0:
                raise ConfigError("[simulate] values must be nonnegative")
            s.policy = HarvestPolicy(kind, tuple(vals), n_samples)
        else:
            if "values" in sec:
                raise ConfigError(f"[simulate] policy {kind} takes no values")
            s.policy = HarvestPolicy(kind, None, n_samples)
        if "horizon" in sec:
            s.horizon = _int("simulate", "horizon", sec["horizon"], 1)
        if "start_year" in sec:
            s.start_year = _int("simulate", "start_year", sec["start_year"])

    if cp.has_section("msy"):
        sec = cp["msy"]
        m = cfg.msy
        if "search_bounds" in sec:
            m.search_bounds = _box("msy", "search_bounds", sec["search_bounds"])
            if np.any(m.search_bounds < 0) or np.any(m.search_bounds[:, 1] < m.search_bounds[:, 0]):
                raise ConfigError("[msy] search_bounds: need 0 <= lo <= hi for each species")
        if "resolution" in sec:
            m.resolution = _int("msy", "resolution", sec["resolution"], 2)
        if "refine_steps" in sec:
            m.refine_steps = _int("msy", "refine_steps", sec["refine_steps"], 0)

    if cp.has_section("output"):
        cfg.output_dir = cp["output"].get("dir")

    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


# --- formatting ---------------------------------------------------------------


def sig3(x) -> str:
    """Round to 3 significant figures, without thousands separators."""
    x = float(x)
    if not math.isfinite(x) or x == 0:
        return repr(x) if not math.isfinite(x) else "0"
    r = float(f"{x:.3g}")
    return f"{r:.0f}" if abs(r) >= 100 else f"{r:.3g}"


def full(x) -> str:
    """Full-precision number for CSV output."""
    return repr(float(x))


def provenance(config_sha256: str, timestamp: Optional[str] = None) -> list:
    """Comment lines heading every output file; only the last one varies between runs."""
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return [f"# evykit {__version__}", f"# config_sha256 {config_sha256}", f"# generated {timestamp}"]


def write_report(fh, header: list, rows) -> None:
    """Key-value text report; ``rows`` holds ``(key, value)`` pairs or ``(section,)`` titles."""
    for line in header:
        fh.write(line + "\n")
    for row in rows:
        if len(row) == 1:
            fh.write(f"\n[{row[0]}]\n")
        else:
            fh.write(f"{row[0]} = {row[1]}\n")


def _data_lines(fh):
    return (line for line in fh if line.strip() and not line.lstrip().startswith("#"))


# --- observation CSV ---------------------------------------------------------


def read_observations(path) -> ObservationSeries:
    """Read ``year,biomass_prey,biomass_pred,catch_prey,catch_pred`` rows."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(_data_lines(fh)))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if not rows or tuple(c.strip() for c in rows[0]) != OBSERVATION_HEADER:
        raise DataError(f"{path}: header must be {','.join(OBSERVATION_HEADER)}")
    body = rows[1:]
    try:
        years = [int(r[0]) for r in body]
        vals = np.array([[float(v) for v in r[1:]] for r in body])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: bad value ({exc})") from None
    if vals.ndim != 2 or vals.shape[1] != 4:
        raise DataError(f"{path}: every row needs {len(OBSERVATION_HEADER)} fields")
    try:
        return ObservationSeries(np.array(years), vals[:, :2], vals[:, 2:])
    except InvalidArgumentError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_observations(fh, series: ObservationSeries, header=()) -> None:
    for line in header:
        fh.write(line + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(OBSERVATION_HEADER)
    for t, year in enumerate(series.years):
        w.writerow([int(year), *map(full, series.biomass[t]), *map(full, series.catches[t])])


# --- trajectory CSV ----------------------------------------------------------


def _flag(v) -> str:
    return "" if v is None else str(int(bool(v)))


def write_trajectory(fh, traj: Trajectory, header=()) -> None:
    """One row per year; the final year has a state but no effort or catch."""
    for line in header:
        fh.write(line + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    catches = traj.catches
    for t, year in enumerate(traj.years):
        if t < traj.horizon:
            harvest = [*map(full, traj.efforts[t]), *map(full, catches[t])]
        else:
            harvest = ["", "", "", ""]
        k = None if traj.in_kernel is None else traj.in_kernel[t]
        ok = None if traj.constraints_ok is None else traj.constraints_ok[t]
        w.writerow([int(year), *map(full, traj.states[t]), *harvest, _flag(k), _flag(ok)])


def read_trajectory(path) -> Trajectory:
    """Read a trajectory CSV, or an observation CSV read as a trajectory.

    Observation rows give efforts as catch / biomass; the last row's catch
    is dropped since a trajectory ends on a state.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(_data_lines(fh)))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise DataError(f"{path}: empty file")
    head = tuple(c.strip() for c in rows[0])
    if head == OBSERVATION_HEADER:
        series = read_observations(path)
        b = series.biomass
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.where(b > 0, series.catches / np.where(b > 0, b, 1.0), 0.0)
        if np.any((b == 0) & (series.catches > 0)):
            raise DataError(f"{path}: positive catch from zero biomass")
        return Trajectory(b, e[:-1], int(series.years[0]))
    if head != TRAJECTORY_HEADER:
        raise DataError(f"{path}: unrecognised header {','.join(head)}")
    body = rows[1:]
    if len(body) < 2:
        raise DataError(f"{path}: need at least two years")
    try:
        years = [int(r[0]) for r in body]
        states = np.array([[float(r[1]), float(r[2])] for r in body])
        efforts = np.array([[float(r[3]), float(r[4])] for r in body[:-1]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: bad value ({exc})") from None
    if np.any(np.diff(years) != 1):
        raise DataError(f"{path}: years must be consecutive")
    if not (np.all(np.isfinite(states)) and np.all(np.isfinite(efforts))) or np.any(states < 0) or np.any(efforts < 0):
        raise DataError(f"{path}: biomasses and efforts must be finite and nonnegative")
    return Trajectory(states, efforts, years[0])
