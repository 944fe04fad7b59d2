"""Tests for the method of characteristics on u = u_x1 u_x2 and friends."""

import numpy as np
import pytest
import sympy

from domain.errors import CharacteristicDataError, NewtonConvergenceError, PreconditionError
from domain.sheets import CauchyData
from logic.charsolve import (
    build_strip,
    contact_residual,
    dense_grid,
    eval_solution,
    first_integral_drift,
    integrate_characteristics,
    noncharacteristic_check,
)
from logic.contact import J1Space
from logic.parser import parse_system
from pipeline import loader
from tests.conftest import system_path

s = sympy.Symbol("s")


def closed_form(s_values, t):
    """Characteristics of u = u_x1 u_x2 through u(s, 0) = s^2: (x1, x2, p1, p2, u)."""
    s_values = np.asarray(s_values)[:, None]
    decay = np.exp(-np.asarray(t))[None, :]
    return np.stack(
        [
            s_values / 2 * (1 + decay),
            2 * s_values * (decay - 1),
            2 * s_values * decay,
            s_values / 2 * decay,
            s_values**2 * decay**2,
        ],
        axis=-1,
    )


@pytest.fixture
def strip_setup(monge_strip):
    space = J1Space.from_system(monge_strip)
    F = monge_strip.equations[0]
    cauchy, axes, _ = loader.load_cauchy(system_path("monge_strip_cauchy.json"), monge_strip)
    return space, F, cauchy, axes


@pytest.fixture
def strip_sheet(strip_setup):
    space, F, cauchy, axes = strip_setup
    strip = build_strip(space, F, cauchy, axes)
    return integrate_characteristics(space, F, strip, h=1e-3, steps=1000)


def test_strip_solves_tangency_and_equation(strip_setup):
    space, F, cauchy, axes = strip_setup
    strip = build_strip(space, F, cauchy, axes)
    assert len(strip.samples) == 20
    assert strip.dropped == []
    for sample in strip.samples:
        (value,) = sample.s
        np.testing.assert_allclose(sample.point.p, [2 * value, value / 2], atol=1e-12)
        assert sample.residual <= 1e-12 * max(1.0, value**2, value)


def test_strip_converges_from_a_rough_guess(strip_setup):
    space, F, cauchy, axes = strip_setup
    rough = cauchy.model_copy(update={"guess": [2 * s + sympy.Rational(1, 10), s / 3]})
    strip = build_strip(space, F, rough, axes)
    values = np.array([sample.s[0] for sample in strip.samples])
    p = np.array([sample.point.p for sample in strip.samples])
    np.testing.assert_allclose(p, np.stack([2 * values, values / 2], axis=1), atol=1e-10)


def test_sheet_matches_closed_form(strip_sheet):
    assert strip_sheet.nodes.shape == (20, 1001, 5)
    assert not np.any(strip_sheet.truncated)
    expected = closed_form(strip_sheet.s[:, 0], strip_sheet.t)
    np.testing.assert_allclose(strip_sheet.nodes, expected, atol=1e-10)


def test_equation_is_a_first_integral(strip_setup, strip_sheet):
    space, F, _, _ = strip_setup
    assert np.max(first_integral_drift(space, F, strip_sheet)) < 1e-10


def test_noncharacteristic_values(strip_setup):
    space, F, cauchy, axes = strip_setup
    strip = build_strip(space, F, cauchy, axes)
    values = noncharacteristic_check(space, F, strip, cauchy.z)
    expected = [-2 * sample.s[0] for sample in strip.samples]
    np.testing.assert_allclose(values, expected, atol=1e-12)


@pytest.mark.parametrize("x", [(0.75, -1.0), (1.2, -1.5), (0.9, -0.3)])
def test_evaluation_matches_the_explicit_solution(strip_sheet, x):
    result = eval_solution(strip_sheet, x)
    assert not result.out_of_domain
    assert len(result.branches) == 1
    branch = result.branches[0]
    x1, x2 = x
    assert branch.u == pytest.approx((4 * x1 + x2) ** 2 / 16, abs=1e-6)
    np.testing.assert_allclose(branch.p, [(4 * x1 + x2) / 2, (4 * x1 + x2) / 8], atol=1e-6)


def test_evaluation_recovers_sheet_coordinates(strip_sheet):
    branch = eval_solution(strip_sheet, (0.75, -1.0)).branches[0]
    assert branch.s[0] == pytest.approx(1.0, abs=1e-6)
    assert branch.t == pytest.approx(np.log(2.0), abs=1e-6)
    assert branch.u == pytest.approx(0.25, abs=1e-6)


def test_query_outside_the_sheet(strip_sheet):
    result = eval_solution(strip_sheet, (10.0, 10.0))
    assert result.out_of_domain
    assert result.branches == []


def test_query_dimension_is_checked(strip_sheet):
    with pytest.raises(PreconditionError):
        eval_solution(strip_sheet, (1.0,))


def test_dense_grid_layout(strip_sheet):
    dense = dense_grid(strip_sheet)
    assert dense.shape == (20, 1001, 5)
    np.testing.assert_array_equal(dense[3], strip_sheet.nodes[3])


def test_trajectory_error_converges_at_fourth_order(strip_setup):
    space, F, cauchy, axes = strip_setup
    strip = build_strip(space, F, cauchy, axes)

    def error(h):
        steps = int(round(1.0 / h))
        sheet = integrate_characteristics(space, F, strip, h=h, steps=steps)
        expected = closed_form(sheet.s[:, 0], sheet.t)
        return np.max(np.abs(sheet.nodes[:, -1] - expected[:, -1]))

    ratio = error(0.1) / error(0.05)
    assert 8 <= ratio <= 32


def test_contact_residual_converges_at_fifth_order(strip_setup):
    space, F, cauchy, axes = strip_setup
    strip = build_strip(space, F, cauchy, axes)

    def residual(h):
        steps = int(round(1.0 / h))
        sheet = integrate_characteristics(space, F, strip, h=h, steps=steps)
        return np.max(np.abs(contact_residual(space, F, sheet)))

    ratio = residual(0.05) / residual(0.025)
    assert 16 <= ratio <= 64


def test_point_source_in_one_dimension():
    system = loader.load_system(system_path("eikonal.pde"))
    space = J1Space.from_system(system)
    cauchy, axes, _ = loader.load_cauchy(system_path("eikonal_point.json"), system)
    strip = build_strip(space, system.equations[0], cauchy, axes)
    assert len(strip.samples) == 1
    sheet = integrate_characteristics(space, system.equations[0], strip, h=1e-3, steps=500)
    branch = eval_solution(sheet, (0.5,)).branches[0]
    assert branch.u == pytest.approx(0.5, abs=1e-9)
    assert branch.t == pytest.approx(0.25, abs=1e-9)


def test_focusing_wave_front_has_several_branches():
    system = parse_system("indep x1, x2; dep u; eq d(u,x1)^2 + d(u,x2)^2 - 1 = 0;")
    space = J1Space.from_system(system)
    cauchy = CauchyData(params=["s"], surface=[s, 0], value=-(s**2) / 4, guess=[-s / 2, 1])
    axes = [list(np.linspace(-1.5, 1.5, 60))]
    F = system.equations[0]
    strip = build_strip(space, F, cauchy, axes)
    sheet = integrate_characteristics(space, F, strip, h=1.3e-3, steps=1000)

    result = eval_solution(sheet, (0.0, 1.8))
    values = sorted(branch.u for branch in result.branches)
    assert values == pytest.approx([1.8, 1.81, 1.81], abs=1e-4)
    p_values = sorted(branch.p[0] for branch in result.branches)
    assert p_values == pytest.approx([-np.sqrt(0.19), 0.0, np.sqrt(0.19)], abs=1e-4)


def test_characteristic_samples_are_dropped():
    system = parse_system("indep x, t; dep u; eq d(u,t) + 2*d(u,x) = 0;")
    space = J1Space.from_system(system)
    cauchy = CauchyData(params=["s"], surface=[s, s**2 / 4], value=0, guess=[0, 0])
    axes = [[0.0, 0.5, 1.0, 1.5]]
    strip = build_strip(space, system.equations[0], cauchy, axes)
    assert strip.dropped == [(1.0,)]
    assert [sample.s for sample in strip.samples] == [(0.0,), (0.5,), (1.5,)]
    with pytest.raises(CharacteristicDataError):
        build_strip(space, system.equations[0], cauchy, axes, on_characteristic="raise")


def test_characteristic_samples_can_be_kept():
    system = parse_system("indep x1, x2; dep u; eq u - d(u,x1)*d(u,x2) = 0;")
    space = J1Space.from_system(system)
    cauchy = CauchyData(params=["s"], surface=[s, 0], value=0, guess=[0, 0])
    axes = [[0.5, 1.0, 1.5]]
    strip = build_strip(space, system.equations[0], cauchy, axes, on_characteristic="keep")
    assert [sample.s for sample in strip.samples] == [(0.5,), (1.0,), (1.5,)]
    assert all(sample.characteristic for sample in strip.samples)
    for sample in strip.samples:
        np.testing.assert_allclose(sample.point.p, [0.0, 0.0], atol=1e-12)
    with pytest.raises(CharacteristicDataError):
        build_strip(space, system.equations[0], cauchy, axes)


def test_singular_jacobian_at_the_guess_is_not_characteristic(strip_setup):
    space, F, cauchy, _ = strip_setup
    degenerate_start = cauchy.model_copy(update={"guess": [0, s / 2]})
    strip = build_strip(space, F, degenerate_start, [[0.5, 1.0, 1.5]])
    assert strip.dropped == []
    assert not any(sample.characteristic for sample in strip.samples)
    for sample in strip.samples:
        (value,) = sample.s
        np.testing.assert_allclose(sample.point.p, [2 * value, value / 2], atol=1e-10)


def test_surface_along_a_characteristic_is_rejected():
    system = parse_system("indep x, t; dep u; eq d(u,t) + 2*d(u,x) = 0;")
    space = J1Space.from_system(system)
    cauchy = CauchyData(params=["s"], surface=[2 * s, s], value=0, guess=[1, -2])
    with pytest.raises(CharacteristicDataError):
        build_strip(space, system.equations[0], cauchy, [[0.0, 0.5, 1.0]])


def test_newton_failure_without_real_solution():
    system = parse_system("indep x; dep u; eq d(u,x)^2 + 1 = 0;")
    space = J1Space.from_system(system)
    cauchy = CauchyData(params=[], surface=[0], value=0, guess=[sympy.Float(0.7)])
    with pytest.raises(NewtonConvergenceError):
        build_strip(space, system.equations[0], cauchy, [])


def test_cauchy_data_must_match_the_dimension(strip_setup):
    space, F, cauchy, axes = strip_setup
    with pytest.raises(PreconditionError):
        build_strip(space, F, cauchy.model_copy(update={"guess": [2 * s]}), axes)


def test_evaluation_over_the_footprint(strip_sheet):
    s_values, t_values = np.meshgrid(np.linspace(0.55, 1.95, 20), np.linspace(0.05, 0.95, 20))
    decay = np.exp(-t_values.ravel())
    x1 = s_values.ravel() / 2 * (1 + decay)
    x2 = 2 * s_values.ravel() * (decay - 1)
    errors = []
    for a, b in zip(x1, x2):
        branches = eval_solution(strip_sheet, (a, b)).branches
        assert len(branches) == 1
        errors.append(abs(branches[0].u - (4 * a + b) ** 2 / 16))
    assert max(errors) <= 1e-6


def test_query_on_a_grid_node_is_one_branch(strip_sheet):
    node = strip_sheet.nodes[5, 400]
    result = eval_solution(strip_sheet, tuple(node[:2]))
    assert len(result.branches) == 1
    branch = result.branches[0]
    assert branch.s[0] == pytest.approx(strip_sheet.s[5, 0], abs=1e-9)
    assert branch.t == pytest.approx(strip_sheet.t[400], abs=1e-9)
    assert branch.u == pytest.approx(node[4], abs=1e-10)
    np.testing.assert_allclose(branch.p, node[2:4], atol=1e-10)
