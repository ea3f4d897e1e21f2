import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import PlainLV
from evykit import (
    AnalyticKernel,
    ConstraintSet,
    DomainError,
    InvalidArgumentError,
    PERU_MIN_BIOMASS,
    PERU_PARAMS,
    analytic_kernel_membership,
    favorable_conditions,
    grid_kernel,
    is_viability_domain,
    step,
    viable_control_box,
)
from evykit.viability import favorable_factors, max_viable_effort

YB, ZB = PERU_MIN_BIOMASS


def test_favorable_conditions(peru, peru_free, peru_evy):
    np.testing.assert_allclose(favorable_factors(peru, peru_free), [1.7713211747351483, 1.28415], rtol=1e-14)
    assert favorable_conditions(peru, peru_free)
    np.testing.assert_allclose(favorable_factors(peru, peru_evy), [1.0, 1.0], rtol=1e-14)
    assert favorable_conditions(peru, peru_evy)
    high = ConstraintSet(PERU_MIN_BIOMASS, (6e6, 0.0))
    assert favorable_factors(peru, high)[0] == pytest.approx(1.7713211747351483 - 6 / 7, rel=1e-14)
    assert not favorable_conditions(peru, high)
    with pytest.raises(DomainError):
        AnalyticKernel(peru, high)


def test_catch_from_zero_floor_rejected(peru):
    with pytest.raises(DomainError):
        favorable_factors(peru, ConstraintSet((0.0, 2e5), (1.0, 0.0)))


def test_membership_examples(peru, peru_free, peru_evy):
    for cs in (peru_free, peru_evy):
        k = AnalyticKernel(peru, cs)
        assert analytic_kernel_membership(k, PERU_MIN_BIOMASS)
        assert not analytic_kernel_membership(k, (YB, 1.9e5))
        assert not analytic_kernel_membership(k, (6.9e6, ZB))
    # equality in both one-step tests at the floor
    k = AnalyticKernel(peru, peru_evy)
    nxt = step(peru, PERU_MIN_BIOMASS, peru_evy.catch / np.array(PERU_MIN_BIOMASS))
    np.testing.assert_allclose(nxt, PERU_MIN_BIOMASS, rtol=1e-14)
    # far too many predators starve the prey's recovery
    assert not k.contains((YB, 1e6))


def test_contains_many_matches_contains(peru, peru_evy):
    k = AnalyticKernel(peru, peru_evy)
    rng = np.random.default_rng(3)
    xs = rng.uniform([0, 0], [6e7, 1.2e6], size=(500, 2))
    many = k.contains_many(xs.T)
    assert many.any() and not many.all()
    assert [k.contains(x) for x in xs] == many.tolist()


def test_control_box_closed_form(peru, peru_free):
    k = AnalyticKernel(peru, peru_free)
    box = viable_control_box(k, PERU_MIN_BIOMASS)
    np.testing.assert_array_equal(box.lower, [0.0, 0.0])
    assert box.upper[0] == pytest.approx(1.7713211747351483 - 1.0, rel=1e-13)
    assert box.upper[1] == pytest.approx(0.28415, rel=1e-13)
    assert box.contains(box.lower) and box.contains(box.upper)
    assert not box.contains(box.upper * 1.01)


def test_control_box_degenerates_at_equality(peru, peru_evy):
    box = AnalyticKernel(peru, peru_evy).control_box(PERU_MIN_BIOMASS)
    np.testing.assert_allclose(box.upper, box.lower, rtol=1e-12)


def test_control_box_generic_matches_closed_form(peru, peru_evy):
    k = AnalyticKernel(peru, peru_evy)
    kp = AnalyticKernel(PlainLV(PERU_PARAMS), peru_evy)
    for x in ([2e7, 4e5], [1.2e7, 3e5], [3e7, 2.5e5]):
        a = k.control_box(x)
        b = kp.control_box(x)
        np.testing.assert_allclose(b.upper, a.upper, atol=1e-8)
        np.testing.assert_array_equal(a.lower, b.lower)


def test_control_box_outside_kernel(peru, peru_free):
    k = AnalyticKernel(peru, peru_free)
    with pytest.raises(DomainError):
        k.control_box((6e6, 3e5))
    with pytest.raises(DomainError):
        k.control_box((0.0, 3e5))


def test_max_viable_effort_lands_on_target(peru):
    x = np.array([[2e7, 1.5e7], [4e5, 3e5]])
    for i, target in ((0, YB), (1, ZB)):
        e = max_viable_effort(peru, i, x, target, np.zeros(2))
        np.testing.assert_allclose(x[i] * peru.growth_factor(i, x, e), target, rtol=1e-12)
        eb = max_viable_effort(peru, i, x, target, np.zeros(2), method="bisect")
        np.testing.assert_allclose(eb, e, atol=1e-8)


kernel_state = st.tuples(st.floats(YB, 6.5e7), st.floats(ZB, 1.2e6))


@given(kernel_state, st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_one_step_invariance(x, c, s, t):
    """Some effort of the control box keeps a kernel state in the kernel,
    and the box accepts exactly the efforts whose successor stays in it."""
    from evykit import LotkaVolterra

    m = LotkaVolterra(PERU_PARAMS)
    cstar = m.equilibrium_catches(np.array(PERU_MIN_BIOMASS))
    k = AnalyticKernel(m, ConstraintSet(PERU_MIN_BIOMASS, tuple(c * cstar)))
    if not k.contains(x):
        return
    box = k.control_box(x)
    assert np.all(box.lower <= box.upper)
    t_ = np.linspace(0, 1, 21)
    ue = box.lower[:, None, None] + np.stack(np.meshgrid(t_, t_, indexing="ij")) * (box.upper - box.lower)[:, None, None]
    x_ = np.asarray(x, float)[:, None, None]
    nxt = np.maximum(x_ * np.stack([m.growth_factor(i, x_, ue[i]) for i in range(2)]), 0)
    assert k.contains_many(nxt).any()
    u = box.lower + np.array([s, t]) * (box.upper - box.lower)
    assert box.contains(u) == k.contains(step(m, x, u))
    assert np.all(step(m, x, u) >= np.array(PERU_MIN_BIOMASS) * (1 - 1e-12))


# --- grid ---------------------------------------------------------------------


def test_grid_spec_case(peru, peru_free):
    grid = grid_kernel(peru, peru_free, bounds=[[0, 4e7], [0, 1.5e6]], resolution=(100, 100))
    assert grid.stationary
    assert grid.agreement(AnalyticKernel(peru, peru_free)) >= 0.99


@pytest.mark.parametrize("use_evy", [False, True])
def test_grid_layers_monotone(peru, peru_free, peru_evy, use_evy):
    cs = peru_evy if use_evy else peru_free
    grid = grid_kernel(peru, cs, resolution=(60, 60))
    for a, b in zip(grid.layers, grid.layers[1:]):
        assert not np.any(b & ~a)
    assert grid.stationary_index is not None and grid.stationary_index <= 2


@pytest.mark.parametrize("use_evy", [False, True])
def test_floor_cell_in_every_layer(peru, peru_free, peru_evy, use_evy):
    # cell size (4e5, 1.6e4) puts the minimal biomass at a cell centre
    cs = peru_evy if use_evy else peru_free
    grid = grid_kernel(peru, cs, bounds=[[0, 4e7], [0, 1.6e6]], resolution=(100, 100))
    cell = grid.cell_of(PERU_MIN_BIOMASS)
    assert cell == (17, 12)
    assert [grid.axes()[0][17], grid.axes()[1][12]] == list(PERU_MIN_BIOMASS)
    assert all(layer[cell] for layer in grid.layers)


def test_grid_stationary_is_viability_domain(peru, peru_evy):
    grid = grid_kernel(peru, peru_evy, resolution=(60, 60))
    assert is_viability_domain(peru, peru_evy, grid, grid.kernel)
    assert is_viability_domain(peru, peru_evy, grid, np.zeros(grid.resolution, bool))


def test_layer0_not_a_domain_with_large_catch(peru):
    cs = ConstraintSet(PERU_MIN_BIOMASS, (5e6, 5e4))
    grid = grid_kernel(peru, cs, resolution=(60, 60), max_iters=1)
    assert not is_viability_domain(peru, cs, grid, grid.layers[0])
    assert grid.layers[1].sum() < grid.layers[0].sum()


def test_grid_floor_above_bounds_is_empty(peru, peru_free):
    grid = grid_kernel(peru, peru_free, bounds=[[0, 5e6], [0, 1e5]], resolution=(20, 20))
    assert not grid.kernel.any()
    assert grid.stationary


def test_grid_smoke_two_by_two(peru, peru_free):
    grid = grid_kernel(peru, peru_free, resolution=(2, 2))
    assert grid.kernel.shape == (2, 2)
    assert 0.0 <= grid.agreement(AnalyticKernel(peru, peru_free)) <= 1.0


def test_grid_generic_model_matches_hooked(peru, peru_evy):
    bounds = peru.default_grid_bounds()
    a = grid_kernel(peru, peru_evy, bounds=bounds, resolution=(40, 40))
    b = grid_kernel(PlainLV(PERU_PARAMS), peru_evy, bounds=bounds, resolution=(40, 40))
    assert np.mean(a.kernel == b.kernel) >= 0.99
    with pytest.raises(InvalidArgumentError):
        grid_kernel(PlainLV(PERU_PARAMS), peru_evy)


def test_grid_validation(peru, peru_free):
    with pytest.raises(InvalidArgumentError):
        grid_kernel(peru, peru_free, resolution=(1, 10))
    with pytest.raises(InvalidArgumentError):
        grid_kernel(peru, peru_free, bounds=[[1, 0], [0, 1]])


def test_grid_csv(peru, peru_free, tmp_path):
    grid = grid_kernel(peru, peru_free, resolution=(5, 4))
    path = tmp_path / "k.csv"
    with open(path, "w") as fh:
        grid.write_csv(fh)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,j,y_center,z_center,layer_first_excluded"
    assert len(lines) == 1 + 20
    first = grid.first_excluded()
    i, j, y, z, k = lines[1 + 4 * 2 + 3].split(",")
    assert (int(i), int(j)) == (2, 3)
    assert float(y) == grid.axes()[0][2] and float(z) == grid.axes()[1][3]
    assert int(k) == first[2, 3]
