"""
Viability kernels of harvested ecosystems under minimal biomass and catch
levels.

Two routes are provided.  :class:`AnalyticKernel` gives the exact kernel
when the growth factors at the minimal biomass, under the minimal-catch
efforts, are at least one: the viable states are those above the minimal
biomasses that stay above them after one step at minimal-catch effort.
:func:`grid_kernel` computes the decreasing sequence of "viable for k
steps" sets on a rectangular grid and works for any model.

Grid discretisation choices: membership is decided at cell centres, a
successor belongs to the cell containing it, successors outside the grid
are non-members, and each species' effort is sampled at ``n_samples``
interior points plus both ends of its admissible interval.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    ConstraintSet,
    DomainError,
    GrowthModel,
    InvalidArgumentError,
    as_state,
    geq,
    step,
)
from .roots import EFFORT_TOL, bracket_above, largest_feasible

N_EFFORT_SAMPLES = 32


def _min_catch_efforts(constraints, x):
    """Efforts ``C_min_i / x_i`` for states of shape ``(N, ...)``.

    A zero biomass needs zero effort when no catch is required, and an
    infinite one otherwise.
    """
    x = np.asarray(x, dtype=float)
    c = constraints.catch.reshape((-1,) + (1,) * (x.ndim - 1))
    if not np.any(c):
        return np.zeros(x.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = c / x
    zero = x == 0
    if np.any(zero):
        e = np.where(zero, np.where(c > 0, np.inf, 0.0), e)
    return e


def favorable_factors(model: GrowthModel, constraints: ConstraintSet) -> np.ndarray:
    """Growth factors at the minimal biomass under minimal-catch efforts."""
    b = constraints.biomass
    c = constraints.catch
    if b.size != model.n_species:
        raise InvalidArgumentError("constraint set does not match the model size")
    bad = [i for i in range(b.size) if b[i] == 0 and c[i] > 0]
    if bad:
        raise DomainError(f"minimal catch required from zero minimal biomass (species {bad})")
    e = _min_catch_efforts(constraints, b)
    return np.array([model.growth_factor(i, b, e[i]) for i in range(b.size)], dtype=float)


def favorable_conditions(model: GrowthModel, constraints: ConstraintSet) -> bool:
    """True iff every growth factor at the minimal levels is at least one."""
    return bool(np.all(geq(favorable_factors(model, constraints), 1.0)))


def max_viable_effort(model, i, states, target, lower, method="auto"):
    """Largest effort sending species ``i`` exactly to ``target``.

    Vectorised over the trailing axes of ``states``.  Uses the model's
    ``effort_for_successor`` hook when present and ``method="auto"``;
    otherwise brackets by doubling from ``lower`` until the growth factor is
    nonpositive, then bisects to ``EFFORT_TOL``.  Where even ``lower``
    undershoots the target the result is ``lower``.
    """
    x = np.asarray(states, dtype=float)
    lower = np.asarray(lower, dtype=float)
    if method == "auto" and hasattr(model, "effort_for_successor"):
        return np.maximum(model.effort_for_successor(i, x, target), lower)
    if method not in ("auto", "bisect"):
        raise InvalidArgumentError(f"unknown method {method!r}")

    def reaches(e):
        return x[i] * model.growth_factor(i, x, e) >= target

    def dead(e):
        return model.growth_factor(i, x, e) <= 0

    hi = bracket_above(reaches, lower, initial_step=np.maximum(lower, 1.0), stop=dead)
    return largest_feasible(reaches, lower, hi, xtol=EFFORT_TOL)


@dataclass(frozen=True)
class ViableControlBox:
    lower: np.ndarray
    upper: np.ndarray
    successor_filter: Callable = field(repr=False)

    def contains(self, efforts) -> bool:
        u = np.asarray(efforts, dtype=float)
        inside = np.all(u >= self.lower * (1 - 1e-12)) and np.all(u <= self.upper * (1 + 1e-12) + 1e-15)
        return bool(inside and self.successor_filter(u))


class AnalyticKernel:
    """Exact viability kernel under favourable minimal levels.

    Construction fails with DomainError unless every growth factor at the
    minimal biomass, under the minimal-catch efforts, is at least one.
    """

    def __init__(self, model: GrowthModel, constraints: ConstraintSet):
        if constraints.n_species != model.n_species:
            raise InvalidArgumentError("constraint set does not match the model size")
        factors = favorable_factors(model, constraints)
        if not np.all(geq(factors, 1.0)):
            raise DomainError(f"unfavourable minimal levels: growth factors {factors} at the minimum")
        self.model = model
        self.constraints = constraints

    def contains_many(self, states, strict=False) -> np.ndarray:
        """Membership for states of shape ``(N, ...)``.

        ``strict`` drops the rounding slack of the ``>=`` tests.
        """
        x = np.asarray(states, dtype=float)
        n = self.model.n_species
        b = self.constraints.biomass.reshape((n,) + (1,) * (x.ndim - 1))
        e = _min_catch_efforts(self.constraints, x)
        with np.errstate(invalid="ignore"):
            nxt = np.stack([x[i] * self.model.growth_factor(i, x, e[i]) for i in range(n)])
            if strict:
                ok = (x >= b) & (nxt >= b)
            else:
                ok = geq(x, b) & geq(nxt, b)
        return np.all(ok, axis=0)

    def contains(self, state) -> bool:
        return bool(self.contains_many(as_state(state, self.model.n_species)))

    def control_box(self, state, method="auto") -> ViableControlBox:
        x = as_state(state, self.model.n_species)
        if np.any(x <= 0):
            raise DomainError("control box needs strictly positive biomass")
        if not self.contains(x):
            raise DomainError(f"state {x} is outside the viability kernel")
        lower = self.constraints.catch / x
        b = self.constraints.biomass
        upper = np.array(
            [max_viable_effort(self.model, i, x, b[i], lower[i], method) for i in range(x.size)],
            dtype=float,
        )
        return ViableControlBox(lower, upper, lambda u: self.contains(step(self.model, x, u)))


def analytic_kernel_membership(kernel: AnalyticKernel, state) -> bool:
    return kernel.contains(state)


def viable_control_box(kernel: AnalyticKernel, state, method="auto") -> ViableControlBox:
    """Efforts ``[C_min / state, upper]`` keeping the state in the kernel."""
    return kernel.control_box(state, method)


# --- grid induction ----------------------------------------------------------


@dataclass
class KernelGrid:
    """Layers ``V_0 ⊇ V_1 ⊇ ...`` of a viability kernel on a cell grid.

    ``layers[k]`` is a boolean array of shape ``resolution``.
    ``stationary_index`` is the first ``k`` with ``layers[k] == layers[k+1]``
    (``None`` if ``max_iters`` ran out first).
    """

    bounds: np.ndarray
    resolution: tuple
    layers: list
    stationary_index: Optional[int] = None

    @property
    def stationary(self) -> bool:
        return self.stationary_index is not None

    @property
    def kernel(self) -> np.ndarray:
        return self.layers[-1]

    @property
    def cell_size(self) -> np.ndarray:
        return (self.bounds[:, 1] - self.bounds[:, 0]) / np.asarray(self.resolution)

    def axes(self):
        return [lo + (np.arange(n) + 0.5) * h for (lo, _), n, h in zip(self.bounds, self.resolution, self.cell_size)]

    def centers(self) -> np.ndarray:
        """Cell centres, shape ``(N, *resolution)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    def cell_of(self, state):
        """Index tuple of the cell containing ``state``, or None outside the grid."""
        x = np.asarray(state, dtype=float)
        idx = np.floor((x - self.bounds[:, 0]) / self.cell_size).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.resolution)):
            return None
        return tuple(int(i) for i in idx)

    def first_excluded(self) -> np.ndarray:
        """Index of the first layer excluding each cell, -1 for kernel cells."""
        out = np.full(self.resolution, -1, dtype=int)
        for k in range(len(self.layers) - 1, -1, -1):
            out[~self.layers[k]] = k
        return out

    def agreement(self, kernel: AnalyticKernel) -> float:
        """Fraction of cells whose final membership matches the analytic kernel at the centre."""
        exact = kernel.contains_many(self.centers())
        return float(np.mean(exact == self.kernel))

    def write_csv(self, fh) -> None:
        """Write ``i,j,y_center,z_center,layer_first_excluded`` rows (2-species grids)."""
        if len(self.resolution) != 2:
            raise InvalidArgumentError("CSV export is defined for two-species grids")
        ay, az = self.axes()
        first = self.first_excluded()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "y_center", "z_center", "layer_first_excluded"])
        for i, j in itertools.product(range(self.resolution[0]), range(self.resolution[1])):
            w.writerow([i, j, repr(float(ay[i])), repr(float(az[j])), int(first[i, j])])


class _GridDynamics:
    """Successor-cell table of every grid cell under sampled admissible efforts."""

    def __init__(self, model, constraints, bounds, resolution, n_samples):
        self.model = model
        self.constraints = constraints
        self.bounds = bounds
        self.resolution = tuple(resolution)
        grid = KernelGrid(bounds, self.resolution, [])
        self.cell_size = grid.cell_size
        n = model.n_species
        x = grid.centers().reshape(n, -1)
        b = constraints.biomass
        self.acceptable = np.all(geq(x, b[:, None]), axis=0)

        t = np.linspace(0.0, 1.0, n_samples + 2)
        lower = _min_catch_efforts(constraints, x)
        # (N, cells, samples) successor cell indices along each axis; -1 = none
        self.succ_idx = np.full((n, x.shape[1], t.size), -1, dtype=np.int64)
        for i in range(n):
            with np.errstate(invalid="ignore", over="ignore"):
                ok = np.isfinite(lower[i]) & geq(x[i] * model.growth_factor(i, x, lower[i]), b[i])
            cols = np.flatnonzero(ok & self.acceptable)
            if cols.size == 0:
                continue
            xs = x[:, cols]
            upper = max_viable_effort(model, i, xs, b[i], lower[i, cols])
            e = lower[i, cols, None] + (upper - lower[i, cols])[:, None] * t[None, :]
            nxt = np.maximum(xs[i][:, None] * model.growth_factor(i, xs[:, :, None], e), 0.0)
            k = np.floor((nxt - bounds[i, 0]) / self.cell_size[i]).astype(np.int64)
            k[(k < 0) | (k >= self.resolution[i])] = -1
            self.succ_idx[i, cols] = k

    def induce(self, layer: np.ndarray, chunk=2048) -> np.ndarray:
        """One induction step: members of ``layer`` with a successor in ``layer``."""
        n = len(self.resolution)
        flat = layer.reshape(-1)
        strides = np.cumprod((1,) + self.resolution[::-1])[:-1][::-1]
        out = np.zeros_like(flat)
        cells = np.flatnonzero(flat & self.acceptable)
        s = self.succ_idx.shape[2]
        for start in range(0, cells.size, chunk):
            c = cells[start:start + chunk]
            idx = np.zeros((c.size,) + (s,) * n, dtype=np.int64)
            valid = np.ones(idx.shape, dtype=bool)
            for i in range(n):
                shape = [c.size] + [1] * n
                shape[i + 1] = s
                k = self.succ_idx[i, c].reshape(shape)
                valid &= k >= 0
                idx = idx + np.maximum(k, 0) * strides[i]
            hit = valid & flat[idx]
            out[c] = hit.reshape(c.size, -1).any(axis=1)
        return out.reshape(layer.shape)


def _grid_setup(model, constraints, bounds, resolution):
    n = model.n_species
    if constraints.n_species != n:
        raise InvalidArgumentError("constraint set does not match the model size")
    if bounds is None:
        if not hasattr(model, "default_grid_bounds"):
            raise InvalidArgumentError("bounds are required for this model")
        bounds = model.default_grid_bounds()
    bounds = np.asarray(bounds, dtype=float)
    res = tuple(int(r) for r in np.broadcast_to(resolution, (n,)))
    if bounds.shape != (n, 2) or np.any(bounds[:, 1] <= bounds[:, 0]):
        raise InvalidArgumentError(f"bounds must have shape ({n}, 2) with lo < hi")
    if any(r < 2 for r in res):
        raise InvalidArgumentError("resolution must be at least 2 per dimension")
    return bounds, res


def grid_kernel(
    model: GrowthModel,
    constraints: ConstraintSet,
    bounds=None,
    resolution=(200, 200),
    max_iters=50,
    n_samples=N_EFFORT_SAMPLES,
) -> KernelGrid:
    """Approximate the viability kernel by induction on a cell grid.

    Layer 0 holds cells whose centre is above the minimal biomasses; layer
    ``k+1`` keeps the cells of layer ``k`` admitting an acceptable effort
    whose successor lies in a layer-``k`` cell.  Iteration stops at
    ``max_iters`` or as soon as a layer repeats, in which case it is a
    viability domain of the discretised dynamics.
    """
    bounds, res = _grid_setup(model, constraints, bounds, resolution)
    dyn = _GridDynamics(model, constraints, bounds, res, n_samples)
    layers = [dyn.acceptable.reshape(res).copy()]
    stationary = None
    for k in range(max_iters):
        if not layers[-1].any():
            layers.append(layers[-1].copy())
            stationary = k
            break
        nxt = dyn.induce(layers[-1])
        layers.append(nxt)
        if np.array_equal(nxt, layers[-2]):
            stationary = k
            break
    return KernelGrid(bounds, res, layers, stationary)


def is_viability_domain(model: GrowthModel, constraints: ConstraintSet, grid: KernelGrid, members, n_samples=N_EFFORT_SAMPLES) -> bool:
    """Whether every member cell has an acceptable effort leading to a member cell."""
    mask = np.asarray(members, dtype=bool)
    if mask.shape != tuple(grid.resolution):
        raise InvalidArgumentError("member mask does not match the grid geometry")
    if not mask.any():
        return True
    dyn = _GridDynamics(model, constraints, grid.bounds, grid.resolution, n_samples)
    return bool(np.array_equal(dyn.induce(mask), mask))
