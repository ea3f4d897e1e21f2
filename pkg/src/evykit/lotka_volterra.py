"""
Discrete-time Lotka-Volterra with density dependence in the prey::

    y(t+1) = R y - (R/kappa) y**2 - alpha y z - v y
    z(t+1) = L z + beta y z - w z

with ``kappa = R K / (R - 1)``.  Species 0 is the prey ``y``, species 1 the
predator ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ConstraintSet,
    DomainError,
    GrowthModel,
    InvalidArgumentError,
    as_efforts,
    as_state,
    geq,
)
from .yields import Branch, EvyResult

PREY, PREDATOR = 0, 1


@dataclass(frozen=True)
class LVParams:
    """Lotka-Volterra parameters.

    R : prey growth factor (> 1, per year)
    L : predator survival factor (0 < L < 1, per year)
    alpha : predation rate (1/t)
    beta : conversion rate (1/t)
    K : prey carrying capacity (t)

    ``alpha = beta = 0`` is accepted and decouples the species; it is the
    single-species reduction used to compare against the Schaefer MSY.
    """

    R: float
    L: float
    alpha: float
    beta: float
    K: float

    def __post_init__(self):
        vals = (self.R, self.L, self.alpha, self.beta, self.K)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidArgumentError(f"non-finite LV parameter in {self}")
        if not self.R > 1:
            raise InvalidArgumentError(f"R must exceed 1, got {self.R}")
        if not 0 < self.L < 1:
            raise InvalidArgumentError(f"L must lie in (0, 1), got {self.L}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidArgumentError("alpha and beta must be nonnegative")
        if not self.K > 0:
            raise InvalidArgumentError(f"K must be positive, got {self.K}")

    @property
    def kappa(self) -> float:
        return self.R * self.K / (self.R - 1.0)

    @property
    def density_slope(self) -> float:
        """R / kappa, written as (R - 1) / K."""
        return (self.R - 1.0) / self.K

    def as_array(self) -> np.ndarray:
        return np.array([self.R, self.L, self.alpha, self.beta, self.K])

    @classmethod
    def from_array(cls, values) -> "LVParams":
        return cls(*(float(v) for v in values))


#: Anchovy (prey) and hake (predator) off Peru.
PERU_PARAMS = LVParams(R=2.25, L=0.945, alpha=1.220e-6, beta=4.845e-8, K=37_285e3)
PERU_MIN_BIOMASS = (7_000_000.0, 200_000.0)


class LotkaVolterra(GrowthModel):
    n_species = 2

    def __init__(self, params: LVParams):
        self.params = params

    def __repr__(self):
        return f"LotkaVolterra({self.params!r})"

    def growth_factor(self, i, state, effort):
        p = self.params
        y, z = state[PREY], state[PREDATOR]
        if i == PREY:
            return p.R - p.density_slope * y - p.alpha * z - effort
        if i == PREDATOR:
            return p.L + p.beta * y - effort
        raise IndexError(f"species index {i} out of range")

    def effort_for_successor(self, i, state, target):
        # factors are affine in own effort with slope -1
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.growth_factor(i, state, 0.0) - np.asarray(target) / state[i]

    def equilibrium_catches(self, min_biomass):
        b = np.asarray(min_biomass, dtype=float)
        return b * (np.array([self.growth_factor(i, b, 0.0) for i in (PREY, PREDATOR)]) - 1.0)

    def equilibria(self, efforts):
        """Nonnegative equilibria for a batch of effort pairs.

        ``efforts`` has shape ``(2, ...)``.  Returns a list of candidate
        states, each of shape ``(2, ...)``, with NaN where the candidate does
        not exist: the extinct state, the prey-only state and the
        coexistence state.  A predator-only state needs ``L - w = 1`` and is
        impossible since ``L < 1``.
        """
        p = self.params
        v, w = np.asarray(efforts[0], float), np.asarray(efforts[1], float)
        zero = np.zeros(np.broadcast(v, w).shape)
        extinct = np.stack([zero, zero])
        y_only = (p.R - 1.0 - v) / p.density_slope + zero
        prey_only = np.stack([np.where(y_only >= 0, y_only, np.nan), zero])
        if p.beta > 0 and p.alpha > 0:
            y_c = (1.0 - p.L + w) / p.beta + zero
            z_c = (p.R - 1.0 - v - p.density_slope * y_c) / p.alpha
            ok = z_c > 0
            coexist = np.stack([np.where(ok, y_c, np.nan), np.where(ok, z_c, np.nan)])
            return [extinct, prey_only, coexist]
        return [extinct, prey_only]

    def default_grid_bounds(self):
        p = self.params
        z_hi = 1.2 * (p.R - 1.0) / p.alpha if p.alpha > 0 else 1.2 * p.K
        return np.array([[0.0, 1.2 * p.kappa], [0.0, z_hi]])


def lv_growth_factors(params: LVParams, state, efforts):
    """(prey factor, predator factor) at the given state and efforts."""
    x = as_state(state, 2)
    u = as_efforts(efforts, 2)
    m = LotkaVolterra(params)
    return float(m.growth_factor(PREY, x, u[0])), float(m.growth_factor(PREDATOR, x, u[1]))


def _precondition_failures(params, constraints, state0):
    x = as_state(state0, 2)
    yb, zb = constraints.min_biomass
    y0, z0 = x
    r1 = params.R - params.density_slope * y0 - params.alpha * z0
    failed = []
    if not geq(y0, yb):
        failed.append(f"y0 >= y_min ({y0:g} < {yb:g})")
    if not geq(z0, zb):
        failed.append(f"z0 >= z_min ({z0:g} < {zb:g})")
    if not geq(y0 * r1, yb):
        failed.append(f"y0*(R - (R/kappa)*y0 - alpha*z0) >= y_min ({y0 * r1:g} < {yb:g})")
    return failed


def lv_viability_precondition(params: LVParams, constraints: ConstraintSet, state0) -> bool:
    """Whether ``state0`` satisfies the conditions under which the closed-form
    yields apply."""
    return not _precondition_failures(params, constraints, state0)


def lv_evy_closed_form(params: LVParams, constraints: ConstraintSet, state0=None) -> EvyResult:
    """Ecosystem viable yields of the LV model in closed form.

    prey:      min{ y_min*R_1(y_min, z_min, 0) - y_min,  y0*R_1(y0, z0, 0) - y_min }
    predator:  z_min*(L + beta*y_min - 1), independent of the initial state

    Without ``state0`` only the equilibrium bound applies.
    """
    failed = [] if state0 is None else _precondition_failures(params, constraints, state0)
    yb, zb = constraints.min_biomass
    r1_min = params.R - params.density_slope * yb - params.alpha * zb
    if r1_min < 1.0:
        failed.append(f"R - (R/kappa)*y_min - alpha*z_min >= 1 ({r1_min:g} < 1)")
    if params.L + params.beta * yb < 1.0:
        failed.append(f"L + beta*y_min >= 1 ({params.L + params.beta * yb:g} < 1)")
    if failed:
        raise DomainError("LV viability precondition violated: " + "; ".join(failed))
    cap_prey = yb * r1_min - yb
    evy_pred = zb * (params.L + params.beta * yb - 1.0)
    prey, branch = cap_prey, Branch.EQUILIBRIUM_CAPPED
    if state0 is not None:
        y0, z0 = as_state(state0, 2)
        from_state = y0 * (params.R - params.density_slope * y0 - params.alpha * z0) - yb
        if from_state < cap_prey:
            prey, branch = from_state, Branch.INITIAL_STATE_CAPPED
    return EvyResult(
        evy=np.array([max(prey, 0.0), evy_pred]),
        branch=(branch, Branch.EQUILIBRIUM_CAPPED),
        equilibrium=np.array([max(cap_prey, 0.0), evy_pred]),
    )
