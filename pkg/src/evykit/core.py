"""
States, efforts, constraint sets and the one-step harvested dynamics.

A harvested ecosystem with ``N`` species is advanced one year by

    biomass_i(t+1) = biomass_i(t) * R_i(biomass(t), effort_i(t))

where ``R_i`` is the growth factor of species ``i``.  Catches are
``effort_i * biomass_i``.  Units are tonnes for biomass, tonnes/year for
catches; efforts are dimensionless rates per year.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

# Relative slack used by every ">=" comparison against a minimal level.
# Boundary states (successor exactly at the minimal biomass) are the
# normal operating point of viable policies, so exact float comparisons
# would reject them on rounding noise.
REL_SLACK = 1e-9


class InvalidArgumentError(ValueError):
    """Malformed input: wrong length, negative or non-finite values."""


class DomainError(ValueError):
    """Well-formed input outside the domain where a result is defined."""


def geq(value, minimum):
    """Elementwise ``value >= minimum`` up to ``REL_SLACK`` relative slack."""
    value = np.asarray(value, dtype=float)
    minimum = np.asarray(minimum, dtype=float)
    return value >= minimum - REL_SLACK * np.abs(minimum)


def _as_nonneg_vector(x, name, n=None):
    arr = np.array(x, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidArgumentError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries: {arr}")
    if np.any(arr < 0):
        raise InvalidArgumentError(f"{name} has negative entries: {arr}")
    return arr


def as_state(biomass, n=None) -> np.ndarray:
    """Validate a biomass vector (tonnes) and return it as a float array."""
    return _as_nonneg_vector(biomass, "biomass", n)


def as_efforts(effort, n=None) -> np.ndarray:
    """Validate an effort vector (per year) and return it as a float array."""
    return _as_nonneg_vector(effort, "effort", n)


@dataclass(frozen=True)
class ConstraintSet:
    """Minimal biomass levels (t) and minimal catch levels (t/year)."""

    min_biomass: tuple
    min_catch: tuple

    def __post_init__(self):
        b = _as_nonneg_vector(self.min_biomass, "min_biomass")
        c = _as_nonneg_vector(self.min_catch, "min_catch")
        if b.shape != c.shape:
            raise InvalidArgumentError(
                f"min_biomass and min_catch lengths differ ({b.size} vs {c.size})"
            )
        object.__setattr__(self, "min_biomass", tuple(b.tolist()))
        object.__setattr__(self, "min_catch", tuple(c.tolist()))

    @property
    def n_species(self) -> int:
        return len(self.min_biomass)

    @property
    def biomass(self) -> np.ndarray:
        return np.array(self.min_biomass)

    @property
    def catch(self) -> np.ndarray:
        return np.array(self.min_catch)

    def with_catch(self, min_catch) -> "ConstraintSet":
        return ConstraintSet(self.min_biomass, tuple(np.asarray(min_catch, float).tolist()))


class GrowthModel(abc.ABC):
    """Per-species growth factors of a harvested ecosystem.

    ``growth_factor(i, state, effort)`` must broadcast: ``state`` may carry
    extra trailing axes (``state[j]`` is the biomass of species ``j``, scalar
    or array) and ``effort`` is any array broadcastable against them.  The
    grid and batch routines rely on this to evaluate many states at once.

    A *nice* model is continuous and nonincreasing in the species' own
    effort, with limit <= 0 as that effort goes to infinity.

    Subclasses may additionally provide ``effort_for_successor(i, state,
    target)`` returning the largest effort with
    ``state[i] * growth_factor(i, state, effort) == target``; when present
    it replaces the bracketing bisection in the viability routines.
    """

    n_species: int

    @abc.abstractmethod
    def growth_factor(self, i, state, effort):
        """Growth factor of species ``i``."""

    def growth_factors(self, state, efforts):
        return np.array([self.growth_factor(i, state, efforts[i]) for i in range(self.n_species)])


def _check_lengths(model, state, efforts):
    n = model.n_species
    return as_state(state, n), as_efforts(efforts, n)


def successor(model: GrowthModel, state, efforts):
    """One step of the dynamics, returning ``(next_state, extinct)``.

    ``extinct`` flags species whose growth factor went negative and whose
    biomass was therefore clamped to zero.
    """
    x, u = _check_lengths(model, state, efforts)
    raw = x * model.growth_factors(x, u)
    extinct = raw < 0
    return np.where(extinct, 0.0, raw), extinct


def step(model: GrowthModel, state, efforts) -> np.ndarray:
    """Advance the biomass one year under the given efforts (clamped at 0)."""
    return successor(model, state, efforts)[0]


def catches(state, efforts) -> np.ndarray:
    """Catches ``effort_i * biomass_i`` in tonnes/year."""
    x = as_state(state)
    u = as_efforts(efforts, x.size)
    return u * x


def check_acceptable(state, efforts, constraints: ConstraintSet) -> bool:
    """True iff biomasses and catches are at or above their minimal levels."""
    x = as_state(state, constraints.n_species)
    u = as_efforts(efforts, constraints.n_species)
    return bool(np.all(geq(x, constraints.biomass)) and np.all(geq(u * x, constraints.catch)))
