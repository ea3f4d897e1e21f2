"""
Multi-year trajectories under harvest policies, and constraint audits.

Viable policies pick efforts inside the viable control box of the
analytic kernel and re-check that the successor stays in the kernel:

* ``viable_min`` harvests exactly the minimal catches when that keeps the
  successor viable, otherwise the admissible sampled effort closest to the
  minimal one;
* ``viable_greedy`` harvests as much as possible, backing off towards the
  minimal effort by bisection until the successor is viable.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    REL_SLACK,
    ConstraintSet,
    DomainError,
    GrowthModel,
    InvalidArgumentError,
    as_efforts,
    as_state,
    geq,
)
from .viability import N_EFFORT_SAMPLES, AnalyticKernel, max_viable_effort

POLICY_KINDS = ("constant_effort", "constant_catch", "viable_min", "viable_greedy")


@dataclass(frozen=True)
class HarvestPolicy:
    kind: str
    values: Optional[tuple] = None
    n_samples: int = N_EFFORT_SAMPLES

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidArgumentError(f"unknown policy kind {self.kind!r}")
        if self.kind.startswith("constant") and self.values is None:
            raise InvalidArgumentError(f"{self.kind} needs values")

    @classmethod
    def constant_effort(cls, efforts):
        return cls("constant_effort", tuple(as_efforts(efforts).tolist()))

    @classmethod
    def constant_catch(cls, catches):
        return cls("constant_catch", tuple(as_efforts(catches).tolist()))

    @classmethod
    def viable_min(cls, n_samples=N_EFFORT_SAMPLES):
        return cls("viable_min", n_samples=n_samples)

    @classmethod
    def viable_greedy(cls, n_samples=N_EFFORT_SAMPLES):
        return cls("viable_greedy", n_samples=n_samples)

    @property
    def is_viable(self) -> bool:
        return self.kind.startswith("viable")


@dataclass
class Trajectory:
    """States for years ``0..T`` and the efforts applied in years ``0..T-1``.

    Flags are per year; the final year has a state but no harvest.
    """

    states: np.ndarray
    efforts: np.ndarray
    start_year: int = 0
    extinction: Optional[np.ndarray] = None
    in_kernel: Optional[np.ndarray] = None
    constraints_ok: Optional[np.ndarray] = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.efforts = np.asarray(self.efforts, dtype=float)
        if self.states.ndim != 2 or self.efforts.shape != (self.states.shape[0] - 1, self.states.shape[1]):
            raise InvalidArgumentError("need states of shape (T+1, N) and efforts of shape (T, N)")
        if self.extinction is None:
            self.extinction = np.zeros(self.efforts.shape, dtype=bool)

    @property
    def horizon(self) -> int:
        return self.efforts.shape[0]

    @property
    def years(self) -> np.ndarray:
        return self.start_year + np.arange(self.states.shape[0])

    @property
    def catches(self) -> np.ndarray:
        return self.efforts * self.states[:-1]


@dataclass(frozen=True)
class Violation:
    year: int
    species: int
    kind: str  # "biomass" or "catch"
    value: float
    minimum: float


@dataclass
class AuditReport:
    violations: list = field(default_factory=list)

    @property
    def biomass_ok(self) -> bool:
        return not any(v.kind == "biomass" for v in self.violations)

    @property
    def catch_ok(self) -> bool:
        return not any(v.kind == "catch" for v in self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first_violation_year(self) -> Optional[int]:
        return min((v.year for v in self.violations), default=None)

    def violating_years(self) -> list:
        return sorted({v.year for v in self.violations})


def audit(trajectory: Trajectory, constraints: ConstraintSet) -> AuditReport:
    """List every year where a biomass or a catch falls below its minimum."""
    b = constraints.biomass
    c = constraints.catch
    out = []
    years = trajectory.years
    for t, x in enumerate(trajectory.states):
        for i in np.flatnonzero(~geq(x, b)):
            out.append(Violation(int(years[t]), int(i), "biomass", float(x[i]), float(b[i])))
        if t < trajectory.horizon:
            h = trajectory.catches[t]
            for i in np.flatnonzero(~geq(h, c)):
                out.append(Violation(int(years[t]), int(i), "catch", float(h[i]), float(c[i])))
    out.sort(key=lambda v: (v.year, v.kind, v.species))
    return AuditReport(out)


# --- simulation ---------------------------------------------------------------


def _factors(model, x, u):
    return np.stack([model.growth_factor(i, x, u[i]) for i in range(model.n_species)])


def _successors_per_species(model, x, e):
    """Successor biomass of each species for per-species effort samples.

    ``x`` is ``(N, M)`` and ``e`` is ``(N, S, M)``; returns ``(N, S, M)``.
    Growth factors depend only on the species' own effort, so species can be
    sampled independently and combined afterwards.
    """
    return np.stack(
        [np.maximum(x[i] * model.growth_factor(i, x[:, None, :], e[i]), 0.0) for i in range(model.n_species)]
    )


def _viable_efforts(kernel, x, policy):
    model = kernel.model
    n, m = x.shape
    cons = kernel.constraints
    lower = cons.catch[:, None] / x
    # The maximal effort may undercut the minimal one by the rounding slack:
    # that is what maps a state a few ulps below the corner back onto it.
    floor = lower * (1.0 - REL_SLACK)
    upper = np.stack([max_viable_effort(model, i, x, cons.biomass[i], floor[i]) for i in range(n)])

    def viable_next(u, xs=x, strict=False):
        return kernel.contains_many(np.maximum(xs * _factors(model, xs, u), 0.0), strict=strict)

    if policy.kind == "viable_greedy":
        u = upper.copy()
        bad = ~viable_next(u)
        if np.any(bad):
            lo_ok = viable_next(lower)
            if np.any(bad & ~lo_ok):
                raise DomainError("no viable effort found between the minimal and maximal efforts")
            # back off along the segment lower -> upper
            cols = np.flatnonzero(bad)
            seg_lo, seg_hi = lower[:, cols], upper[:, cols]
            xs = x[:, cols]
            a, b = np.zeros(cols.size), np.ones(cols.size)
            for _ in range(60):
                mid = 0.5 * (a + b)
                trial = seg_lo + mid * (seg_hi - seg_lo)
                ok = kernel.contains_many(np.maximum(xs * _factors(model, xs, trial), 0.0))
                a = np.where(ok, mid, a)
                b = np.where(ok, b, mid)
            u[:, cols] = seg_lo + a * (seg_hi - seg_lo)
        return u

    # Preference order: minimal efforts, then the sampled effort nearest to
    # them, both with a successor strictly inside the kernel; failing that,
    # the maximal efforts, whose successor is the minimal-biomass corner.
    # Accepting slack-only successors anywhere but that corner lets rounding
    # errors grow along the kernel boundary.
    u = lower.copy()
    bad = ~viable_next(u, strict=True)
    if np.any(bad):
        cols = np.flatnonzero(bad)
        xs = x[:, cols]
        s = policy.n_samples + 2
        t = np.linspace(0.0, 1.0, s)
        e = lower[:, None, cols] + t[None, :, None] * (upper - lower)[:, None, cols]
        per = _successors_per_species(model, xs, e)  # (N, S, M)
        chosen = np.full(cols.size, -1)
        for block in _nearest_first(s, n):
            todo = np.flatnonzero(chosen < 0)
            if todo.size == 0:
                break
            nxt = np.stack([per[i][block[:, i]][:, todo] for i in range(n)])
            ok = kernel.contains_many(nxt, strict=True)  # (len(block), len(todo))
            hit = ok.any(axis=0)
            chosen[todo[hit]] = block[np.argmax(ok[:, hit], axis=0)].dot(s ** np.arange(n))
        found = chosen >= 0
        for i in range(n):
            k = (chosen // s**i) % s
            u[i, cols] = np.where(found, e[i, k, np.arange(cols.size)], upper[i, cols])
        rest = cols[~found]
        if rest.size and not np.all(viable_next(upper[:, rest], x[:, rest])):
            raise DomainError("no viable effort found in the control box")
    return u


@functools.lru_cache(maxsize=8)
def _nearest_first(s, n, block=96):
    """Sample-index combinations ordered by distance from the minimal efforts, in blocks."""
    combos = np.array(list(itertools.product(range(s), repeat=n)))
    order = np.lexsort(combos.T[::-1].tolist() + [combos.sum(axis=1)])
    combos = combos[order]
    return tuple(combos[i:i + block] for i in range(0, len(combos), block))


def simulate_batch(model: GrowthModel, states0, policy: HarvestPolicy, constraints=None, horizon=100):
    """Simulate ``M`` independent trajectories at once.

    ``states0`` has shape ``(M, N)``.  Returns arrays ``states (T+1, M, N)``,
    ``efforts (T, M, N)``, ``extinction (T, M, N)``, ``in_kernel (T+1, M)`` and
    ``constraints_ok (T+1, M)``.
    """
    if horizon < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    n = model.n_species
    x0 = np.array(states0, dtype=float, ndmin=2)
    if x0.shape[1] != n or np.any(~np.isfinite(x0)) or np.any(x0 < 0):
        raise InvalidArgumentError(f"initial states must be a nonnegative (M, {n}) array")
    if constraints is not None and constraints.n_species != n:
        raise InvalidArgumentError("constraint set does not match the model size")

    kernel = None
    if policy.is_viable:
        if constraints is None:
            raise InvalidArgumentError("viable policies need a constraint set")
        kernel = AnalyticKernel(model, constraints)
        inside = kernel.contains_many(x0.T)
        if not np.all(inside):
            raise DomainError(f"initial states outside the viability kernel: rows {np.flatnonzero(~inside).tolist()}")
    elif constraints is not None:
        try:
            kernel = AnalyticKernel(model, constraints)
        except DomainError:
            kernel = None

    m = x0.shape[0]
    states = np.empty((horizon + 1, m, n))
    efforts = np.empty((horizon, m, n))
    extinct = np.zeros((horizon, m, n), dtype=bool)
    states[0] = x0
    fixed = np.asarray(policy.values, float)[:, None] if policy.values is not None else None
    for t in range(horizon):
        x = states[t].T  # (N, M)
        if policy.kind == "constant_effort":
            u = np.broadcast_to(fixed, x.shape).copy()
        elif policy.kind == "constant_catch":
            with np.errstate(divide="ignore", invalid="ignore"):
                u = np.where(x > 0, fixed / np.where(x > 0, x, 1.0), 0.0)
        else:
            u = _viable_efforts(kernel, x, policy)
        raw = x * _factors(model, x, u)
        extinct[t] = (raw < 0).T
        states[t + 1] = np.maximum(raw, 0.0).T
        efforts[t] = u.T

    if kernel is not None:
        in_kernel = np.stack([kernel.contains_many(s.T) for s in states])
    else:
        in_kernel = np.zeros((horizon + 1, m), dtype=bool)
    if constraints is not None:
        b, c = constraints.biomass, constraints.catch
        ok = np.all(geq(states, b), axis=2)
        ok[:-1] &= np.all(geq(efforts * states[:-1], c), axis=2)
    else:
        ok = np.ones((horizon + 1, m), dtype=bool)
    return states, efforts, extinct, in_kernel, ok


def run(model: GrowthModel, state0, policy: HarvestPolicy, constraints: ConstraintSet = None, horizon=100, start_year=0) -> Trajectory:
    """Simulate one trajectory of ``horizon`` harvest years."""
    x0 = as_state(state0, model.n_species)
    states, efforts, extinct, in_kernel, ok = simulate_batch(model, x0[None, :], policy, constraints, horizon)
    return Trajectory(
        states=states[:, 0],
        efforts=efforts[:, 0],
        start_year=start_year,
        extinction=extinct[:, 0],
        in_kernel=in_kernel[:, 0],
        constraints_ok=ok[:, 0],
    )


def run_batch(model, states0, policy, constraints=None, horizon=100, start_year=0) -> list:
    """Independent trajectories from each row of ``states0``."""
    states, efforts, extinct, in_kernel, ok = simulate_batch(model, states0, policy, constraints, horizon)
    return [
        Trajectory(states[:, j], efforts[:, j], start_year, extinct[:, j], in_kernel[:, j], ok[:, j])
        for j in range(states.shape[1])
    ]
