"""
Ecosystem viable yields, equilibrium catches and maximum sustainable yields.

All routines work on any :class:`~evykit.core.GrowthModel`.  Models may
expose closed forms through optional hooks (``equilibrium_catches``,
``equilibria``); the generic bracket-and-bisect and fixed-point paths are
always available through ``method="bisect"`` / ``"iterate"``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    ConstraintSet,
    DomainError,
    GrowthModel,
    InvalidArgumentError,
    as_state,
    geq,
)
from .roots import CATCH_TOL, bracket_above, largest_feasible

# Relative width at which bisection on catches stops (absolute floor CATCH_TOL).
CATCH_RTOL = 1e-13


class Branch(str, enum.Enum):
    """Which bound determines a viable yield."""

    EQUILIBRIUM_CAPPED = "equilibrium-capped"
    INITIAL_STATE_CAPPED = "initial-state-capped"


@dataclass(frozen=True)
class EquilibriumCatches:
    """Largest catches keeping each growth factor at one at the minimal biomass."""

    catches: np.ndarray

    def __getitem__(self, i):
        return self.catches[i]

    def __len__(self):
        return len(self.catches)


@dataclass(frozen=True)
class EvyResult:
    evy: np.ndarray
    branch: tuple
    equilibrium: np.ndarray

    def __getitem__(self, i):
        return self.evy[i]


@dataclass(frozen=True)
class EquilibriumPoint:
    state: np.ndarray
    efforts: np.ndarray

    def residual(self, model: GrowthModel) -> np.ndarray:
        """``state * R(state, efforts) - state``; zero at an equilibrium."""
        return self.state * model.growth_factors(self.state, self.efforts) - self.state


@dataclass(frozen=True)
class MsyResult:
    species: int
    msy: float
    equilibrium: EquilibriumPoint
    viable: bool


@dataclass(frozen=True)
class SchaeferMsy:
    msy: float
    biomass: float


def _unharvested_factors(model, state):
    x = np.asarray(state, dtype=float)
    return np.array([model.growth_factor(i, x, 0.0) for i in range(model.n_species)])


def equilibrium_catches(model: GrowthModel, constraints: ConstraintSet, method="auto") -> EquilibriumCatches:
    """Largest nonnegative catches with ``R_i(B_min, C_i / B_min_i) = 1``.

    Requires every unharvested growth factor at the minimal biomass to be at
    least one.  ``method="bisect"`` skips a model's closed form.
    """
    b = constraints.biomass
    if b.size != model.n_species:
        raise InvalidArgumentError("constraint set does not match the model size")
    r0 = _unharvested_factors(model, b)
    bad = [i for i in range(model.n_species) if not r0[i] >= 1.0 - 1e-12]
    if bad:
        detail = ", ".join(f"species {i}: R={r0[i]:.6g}" for i in bad)
        raise DomainError(f"unharvested growth factor at minimal biomass below 1 ({detail})")

    if method == "auto" and hasattr(model, "equilibrium_catches"):
        return EquilibriumCatches(np.maximum(np.asarray(model.equilibrium_catches(b), float), 0.0))
    if method not in ("auto", "bisect"):
        raise InvalidArgumentError(f"unknown method {method!r}")

    out = np.zeros(model.n_species)
    for i in range(model.n_species):
        if b[i] == 0.0:
            continue  # nothing to catch from a zero biomass

        def ok(c, i=i):
            return model.growth_factor(i, b, np.asarray(c) / b[i]) >= 1.0

        hi = bracket_above(ok, 0.0, initial_step=b[i])
        out[i] = largest_feasible(ok, 0.0, hi, xtol=CATCH_TOL, rtol=CATCH_RTOL)
    return EquilibriumCatches(out)


def _evy_failures(model, constraints, x0):
    b = constraints.biomass
    r0 = _unharvested_factors(model, x0)
    failed = []
    for i in range(model.n_species):
        if not geq(x0[i], b[i]):
            failed.append(f"species {i}: initial biomass {x0[i]:g} < minimum {b[i]:g}")
        elif not geq(x0[i] * r0[i], b[i]):
            failed.append(
                f"species {i}: unharvested successor {x0[i] * r0[i]:g} < minimum {b[i]:g}"
            )
    return failed


def evy(model: GrowthModel, constraints: ConstraintSet, state0, method="bisect") -> EvyResult:
    """Ecosystem viable yields from the initial biomasses ``state0``.

    For each species, the largest catch ``C`` in ``[0, C_eq]`` such that
    ``state0_i * R_i(state0, C / state0_i) >= B_min_i``, where ``C_eq`` are
    the equilibrium catches.  Only ``constraints.min_biomass`` is used.

    Raises DomainError listing the violated inequalities when ``state0`` is
    below the minimal biomasses or cannot reach them without harvest.
    """
    n = model.n_species
    x0 = as_state(state0, n)
    failed = _evy_failures(model, constraints, x0)
    if failed:
        raise DomainError("initial state does not admit viable yields: " + "; ".join(failed))
    cap = equilibrium_catches(model, constraints, method="bisect" if method == "bisect" else "auto").catches
    b = constraints.biomass

    out = np.zeros(n)
    branches = []
    for i in range(n):
        if x0[i] == 0.0:
            out[i] = 0.0
            branches.append(Branch.INITIAL_STATE_CAPPED if cap[i] > 0 else Branch.EQUILIBRIUM_CAPPED)
            continue

        def ok(c, i=i):
            return x0[i] * model.growth_factor(i, x0, np.asarray(c) / x0[i]) >= b[i]

        if ok(cap[i]):
            out[i] = cap[i]
            branches.append(Branch.EQUILIBRIUM_CAPPED)
        else:
            out[i] = largest_feasible(ok, 0.0, cap[i], xtol=CATCH_TOL, rtol=CATCH_RTOL)
            branches.append(Branch.INITIAL_STATE_CAPPED)
    return EvyResult(evy=out, branch=tuple(branches), equilibrium=cap)


# --- maximum sustainable yields ---------------------------------------------


def _fixed_point_equilibria(model, efforts, start_state, damping=0.5, iters=5000, rtol=1e-12):
    """Damped fixed-point iteration ``x <- (1-d) x + d f(x, u)`` on a batch."""
    n = model.n_species
    u = np.asarray(efforts, float)
    x = np.broadcast_to(np.asarray(start_state, float).reshape((n,) + (1,) * (u.ndim - 1)), u.shape).copy()
    for _ in range(iters):
        nxt = np.maximum(x * np.stack([model.growth_factor(i, x, u[i]) for i in range(n)]), 0.0)
        new = (1 - damping) * x + damping * nxt
        done = np.all(np.abs(new - x) <= rtol * np.maximum(np.abs(x), 1.0))
        x = new
        if done:
            break
    resid = x * np.stack([model.growth_factor(i, x, u[i]) for i in range(n)]) - x
    good = np.all(np.abs(resid) <= 1e-6 * np.maximum(np.abs(x), 1.0), axis=0)
    return [np.where(good, x, np.nan)]


def _equilibria(model, efforts, start_state):
    if hasattr(model, "equilibria"):
        return model.equilibria(efforts)
    if start_state is None:
        raise InvalidArgumentError("start_state is required for models without closed-form equilibria")
    return _fixed_point_equilibria(model, efforts, start_state)


def _best_on_grid(model, axes, species, start_state):
    efforts = np.stack(np.meshgrid(*axes, indexing="ij"))
    best = np.full(efforts.shape[1:], -np.inf)
    best_state = np.full(efforts.shape, np.nan)
    for cand in _equilibria(model, efforts, start_state):
        valid = np.all(np.isfinite(cand), axis=0) & np.all(cand >= 0, axis=0) & (cand[species] > 0)
        catch = np.where(valid, efforts[species] * cand[species], -np.inf)
        better = catch > best
        best = np.where(better, catch, best)
        best_state = np.where(better, cand, best_state)
    k = np.unravel_index(np.argmax(best), best.shape)
    if not np.isfinite(best[k]):
        return None
    idx = (slice(None),) + k
    return best[k], best_state[idx], efforts[idx]


def msy_multispecies(
    model: GrowthModel,
    constraints: ConstraintSet,
    search_bounds,
    resolution=201,
    refine_steps=40,
    start_state=None,
):
    """Maximum sustainable yield of each species at ecosystem equilibrium.

    Equilibria are searched over the effort box ``search_bounds`` (shape
    ``(N, 2)``): a dense grid followed by repeated zoomed grids around the
    incumbent.  An equilibrium counts for species ``i`` when all biomasses
    are nonnegative and species ``i`` is present.  When several equilibria
    coexist at one effort vector the one with the largest catch wins;
    stability is not checked.

    Returns a list with one :class:`MsyResult` per species, or ``None`` for
    species without any admissible equilibrium in the box.
    """
    n = model.n_species
    bounds = np.asarray(search_bounds, dtype=float)
    if bounds.shape != (n, 2) or np.any(bounds[:, 1] < bounds[:, 0]) or np.any(bounds < 0):
        raise InvalidArgumentError(f"search_bounds must be a nonnegative ({n}, 2) box")
    b = constraints.biomass

    results = []
    for sp in range(n):
        axes = [np.linspace(lo, hi, resolution) for lo, hi in bounds]
        found = _best_on_grid(model, axes, sp, start_state)
        if found is None:
            results.append(None)
            continue
        spacing = (bounds[:, 1] - bounds[:, 0]) / max(resolution - 1, 1)
        for _ in range(refine_steps):
            centre = found[2]
            lo = np.maximum(centre - spacing, bounds[:, 0])
            hi = np.minimum(centre + spacing, bounds[:, 1])
            axes = [np.linspace(l, h, 21) for l, h in zip(lo, hi)]
            cand = _best_on_grid(model, axes, sp, start_state)
            if cand is not None and cand[0] >= found[0]:
                found = cand
            spacing = spacing / 10.0
            if np.all(spacing <= 1e-14):
                break
        catch, state, efforts = found
        point = EquilibriumPoint(state=np.asarray(state, float), efforts=np.asarray(efforts, float))
        results.append(MsyResult(sp, float(catch), point, bool(np.all(geq(point.state, b)))))
    return results


def schaefer_surplus(params, biomass):
    """Equilibrium catch of the prey alone at biomass ``B``: (R-1) B - (R/kappa) B**2."""
    B = np.asarray(biomass, dtype=float)
    return (params.R - 1.0) * B - params.density_slope * B**2


def msy_schaefer(params) -> SchaeferMsy:
    """Single-species MSY of the prey, ``(R - 1) K / 4`` at biomass ``K / 2``."""
    if not params.R > 1 or not params.K > 0:
        raise InvalidArgumentError("need R > 1 and K > 0")
    return SchaeferMsy(msy=(params.R - 1.0) * params.K / 4.0, biomass=params.K / 2.0)

