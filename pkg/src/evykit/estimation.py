"""
Least-squares fitting of the Lotka-Volterra parameters to yearly biomass
and catch records.

Predicted biomasses are replayed from the first observed year by the LV
recursion with the observed catches subtracted.  The weighted residual sum
of squares is minimised by a Polak-Ribiere nonlinear conjugate gradient
with central-difference gradients, in unconstrained coordinates
``(log(R-1), logit(L), log(alpha), log(beta), log(K))`` so that every
iterate is a valid parameter set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import InvalidArgumentError
from .lotka_volterra import LVParams

log = logging.getLogger(__name__)

PARAM_NAMES = ("R", "L", "alpha", "beta", "K")


@dataclass(frozen=True)
class ObservationSeries:
    """Yearly observations; columns are (prey, predator), tonnes."""

    years: np.ndarray
    biomass: np.ndarray
    catches: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years)
        biomass = np.asarray(self.biomass, dtype=float)
        catches = np.asarray(self.catches, dtype=float)
        t = years.shape[0]
        if years.ndim != 1 or t < 2:
            raise InvalidArgumentError("need at least two years")
        if not np.issubdtype(years.dtype, np.integer):
            if not np.all(np.equal(np.mod(years, 1), 0)):
                raise InvalidArgumentError("years must be integers")
            years = years.astype(int)
        if np.any(np.diff(years) != 1):
            raise InvalidArgumentError("years must be strictly consecutive")
        for name, arr in (("biomass", biomass), ("catches", catches)):
            if arr.shape != (t, 2):
                raise InvalidArgumentError(f"{name} must have shape ({t}, 2), got {arr.shape}")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidArgumentError(f"{name} must be finite and nonnegative")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "biomass", biomass)
        object.__setattr__(self, "catches", catches)

    def __len__(self):
        return self.years.shape[0]


def default_weights(series: ObservationSeries) -> np.ndarray:
    """``1 / mean(obs)**2`` per species, uniform over years."""
    mean = series.biomass.mean(axis=0)
    if np.any(mean <= 0):
        raise InvalidArgumentError("a species has zero mean biomass; pass explicit weights")
    return np.broadcast_to(1.0 / mean**2, series.biomass.shape).copy()


@dataclass(frozen=True)
class FitConfig:
    initial_guess: LVParams
    weights: Optional[np.ndarray] = None
    cg_max_iters: int = 2000
    grad_step_rel: float = 1e-5
    converge_tol: float = 1e-12

    def __post_init__(self):
        if self.cg_max_iters < 1:
            raise InvalidArgumentError("cg_max_iters must be positive")
        if not 0 < self.grad_step_rel < 1:
            raise InvalidArgumentError("grad_step_rel must lie in (0, 1)")
        if not self.converge_tol > 0:
            raise InvalidArgumentError("converge_tol must be positive")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidArgumentError("weights must be finite and nonnegative")


@dataclass
class FitResult:
    params: LVParams
    objective: float
    trajectory_pred: np.ndarray
    converged: bool
    iterations: int
    history: list = field(default_factory=list, repr=False)


def replay(params: LVParams, series: ObservationSeries) -> np.ndarray:
    """Predicted biomasses, starting from the first observation and
    subtracting the observed catches each year (clamped at zero)."""
    R, L, a, b = params.R, params.L, params.alpha, params.beta
    s = params.density_slope
    obs_c = series.catches
    out = np.empty_like(series.biomass)
    y, z = series.biomass[0]
    out[0] = y, z
    for t in range(len(series) - 1):
        y, z = (
            max(R * y - s * y * y - a * y * z - obs_c[t, 0], 0.0),
            max(L * z + b * y * z - obs_c[t, 1], 0.0),
        )
        out[t + 1] = y, z
    return out


def wrss(params: LVParams, series: ObservationSeries, weights=None) -> float:
    """Weighted residual sum of squares between replayed and observed biomass."""
    w = default_weights(series) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != series.biomass.shape:
        raise InvalidArgumentError(f"weights must have shape {series.biomass.shape}")
    r = replay(params, series) - series.biomass
    return float(np.sum(w * r * r))


def to_free(params: LVParams) -> np.ndarray:
    if params.alpha <= 0 or params.beta <= 0:
        raise InvalidArgumentError("fitting needs alpha > 0 and beta > 0")
    return np.array([
        np.log(params.R - 1.0),
        np.log(params.L / (1.0 - params.L)),
        np.log(params.alpha),
        np.log(params.beta),
        np.log(params.K),
    ])


def from_free(theta) -> LVParams:
    r, l, a, b, k = theta
    return LVParams(
        R=1.0 + float(np.exp(r)),
        L=1.0 / (1.0 + float(np.exp(-l))),
        alpha=float(np.exp(a)),
        beta=float(np.exp(b)),
        K=float(np.exp(k)),
    )


def central_gradient(f, theta, rel_step):
    """Central differences with step ``rel_step * max(|theta_j|, 1)``."""
    theta = np.asarray(theta, dtype=float)
    g = np.empty_like(theta)
    for j in range(theta.size):
        h = rel_step * max(abs(theta[j]), 1.0)
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        g[j] = (f(up) - f(dn)) / (2.0 * h)
    return g


def _line_search(f, x, fx, gd, d, a0, c1=1e-4, max_halvings=60, max_doublings=30):
    """Backtracking with sufficient decrease, expanding while it keeps paying."""
    a = a0
    for _ in range(max_halvings):
        fa = f(x + a * d)
        if np.isfinite(fa) and fa <= fx + c1 * a * gd:
            break
        a *= 0.5
    else:
        return None
    for _ in range(max_doublings):
        a2 = 2.0 * a
        f2 = f(x + a2 * d)
        if not (np.isfinite(f2) and f2 < fa and f2 <= fx + c1 * a2 * gd):
            break
        a, fa = a2, f2
    return a, fa


def fit(series: ObservationSeries, config: FitConfig) -> FitResult:
    """Fit ``LVParams`` to ``series`` by nonlinear conjugate gradient.

    Stops when the gradient norm falls below ``converge_tol``, when the
    relative objective decrease stays below ``converge_tol`` for three
    accepted steps, when the objective is at rounding level (below
    ``converge_tol**2`` times the weighted sum of squared observations, i.e.
    relative residuals near ``converge_tol``), or after ``cg_max_iters``
    iterations.
    """
    weights = default_weights(series) if config.weights is None else np.asarray(config.weights, float)
    if weights.shape != series.biomass.shape:
        raise InvalidArgumentError(f"weights must have shape {series.biomass.shape}")

    def objective(theta):
        try:
            return wrss(from_free(theta), series, weights)
        except (InvalidArgumentError, FloatingPointError, OverflowError):
            return np.inf

    floor = config.converge_tol**2 * float(np.sum(weights * series.biomass**2))
    x = to_free(config.initial_guess)
    fx = objective(x)
    if not np.isfinite(fx):
        raise InvalidArgumentError("objective is not finite at the initial guess")

    def grad(theta):
        return central_gradient(objective, theta, config.grad_step_rel)

    g = grad(x) if fx > floor else np.zeros_like(x)
    d = -g
    history = [fx]
    a_prev, gd_prev = None, None
    converged = False
    small = 0
    it = 0
    for it in range(1, config.cg_max_iters + 1):
        if fx <= floor or np.linalg.norm(g) <= config.converge_tol:
            converged = True
            it -= 1
            break
        gd = float(g @ d)
        if gd >= 0:
            d, gd = -g, -float(g @ g)
        if a_prev is None:
            a0 = 0.1 / max(np.max(np.abs(d)), 1e-300)
        else:
            a0 = min(a_prev * gd_prev / gd, 10.0 * a_prev)
        step = _line_search(objective, x, fx, gd, d, a0)
        if step is None and not np.allclose(d, -g):
            d, gd = -g, -float(g @ g)
            step = _line_search(objective, x, fx, gd, d, 0.1 / max(np.max(np.abs(d)), 1e-300))
        if step is None:
            log.debug("line search failed at iteration %d", it)
            converged = bool(np.linalg.norm(g) <= 1e3 * config.converge_tol)
            break
        a, f_new = step
        x_new = x + a * d
        g_new = grad(x_new)
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        d = -g_new + beta * d
        small = small + 1 if fx - f_new <= config.converge_tol * fx else 0
        x, fx, g = x_new, f_new, g_new
        a_prev, gd_prev = a, gd
        history.append(fx)
        if small >= 3:
            converged = True
            break

    # without an accepted step, hand back the guess untouched by the coordinate round trip
    params = from_free(x) if len(history) > 1 else config.initial_guess
    objective_value = wrss(params, series, weights)
    return FitResult(
        params=params,
        objective=objective_value,
        trajectory_pred=replay(params, series),
        converged=converged,
        iterations=it,
        history=history,
    )


def synthetic_series(params: LVParams, state0, efforts, start_year=0) -> ObservationSeries:
    """Noiseless observations generated by harvesting at the given yearly efforts.

    ``efforts`` has shape ``(T, 2)``; the series has ``T`` years and the
    catch of the last year is taken at its effort too.
    """
    e = np.asarray(efforts, dtype=float)
    biomass = np.empty_like(e)
    y, z = np.asarray(state0, dtype=float)
    s = params.density_slope
    for t in range(e.shape[0]):
        biomass[t] = y, z
        y, z = (
            max(y * (params.R - s * y - params.alpha * z - e[t, 0]), 0.0),
            max(z * (params.L + params.beta * y - e[t, 1]), 0.0),
        )
    return ObservationSeries(start_year + np.arange(e.shape[0]), biomass, e * biomass)
