"""Tests for Hamiltonian flows, Lagrangian sweeps and the Hamilton-Jacobi lift."""

import numpy as np
import pytest
import sympy

from domain.errors import HamiltonianError, IsotropyViolationError, OffShellSeedError, PreconditionError
from domain.models import HamiltonianSystem
from domain.sheets import PhasePoint, SeedFamily
from logic.charsolve import CompiledPDE
from logic.contact import char_field
from logic.hamjac import (
    energy_deviation,
    energy_drift,
    flow,
    graph_deviation,
    hamiltonian_field,
    isotropy_defect,
    lift_space,
    lift_to_jet,
    seed_states,
    sweep_lagrangian,
    symplectic_pairing,
)
from logic.integrate import rk4
from pipeline import loader
from pipeline.analysis import hamiltonian_from_system
from tests.conftest import system_path


@pytest.fixture
def oscillator():
    return loader.load_hamiltonian(system_path("oscillator.json"))


@pytest.fixture
def plane_wave():
    return loader.load_hamiltonian(system_path("plane_wave.json"))


@pytest.fixture
def plane_wave_sheet(plane_wave):
    seed = loader.load_seed_family(system_path("plane_wave_seed.json"))
    return sweep_lagrangian(plane_wave, seed, h=1e-2, steps=100)


def test_field_of_the_oscillator(oscillator):
    q, p_q = sympy.symbols("q p_q")
    assert hamiltonian_field(oscillator) == [2 * p_q, -2 * q]


def test_parameters_are_substituted():
    system = HamiltonianSystem(indep=["x"], H=sympy.sympify("k*p_x**2"), params={"k": 3.0})
    (x_dot, _) = hamiltonian_field(system)
    assert complex(x_dot.subs(sympy.Symbol("p_x"), 1)) == 6


def test_unknown_names_in_the_hamiltonian():
    system = HamiltonianSystem(indep=["x"], H=sympy.sympify("k*p_x**2"))
    with pytest.raises(HamiltonianError):
        hamiltonian_field(system)


def test_oscillator_conserves_energy(oscillator):
    seed = loader.load_seed_family(system_path("oscillator_seed.json"))
    trajectories = flow(oscillator, seed.points, h=1e-3, steps=10000)
    assert trajectories.nodes.shape == (1, 10001, 2)
    assert energy_drift(oscillator, trajectories.nodes)[0] <= 1e-8


def test_oscillator_orbit_closes_after_one_period(oscillator):
    steps = 3000
    trajectories = flow(oscillator, [PhasePoint(x=[1.0], p=[0.0])], h=np.pi / steps, steps=steps)
    np.testing.assert_allclose(trajectories.nodes[0, -1], [1.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(trajectories.nodes[0, steps // 4], [0.0, -1.0], atol=1e-6)


def test_flow_checks_point_dimension(oscillator):
    with pytest.raises(PreconditionError):
        flow(oscillator, np.zeros((2, 3)), h=0.1, steps=1)


def test_seed_states_follow_the_parameter_grid(plane_wave):
    seed = loader.load_seed_family(system_path("plane_wave_seed.json"))
    states, axes = seed_states(plane_wave, seed)
    assert states.shape == (21, 4)
    assert axes[0][0] == -1.0
    np.testing.assert_allclose(states[:, 1], np.linspace(-1.0, 1.0, 21))
    np.testing.assert_allclose(states[:, 2], 1.0)


def test_symplectic_pairing_is_antisymmetric():
    rng = np.random.default_rng(3)
    v, w = rng.normal(size=(2, 6))
    assert symplectic_pairing(v, w, 3) == pytest.approx(-symplectic_pairing(w, v, 3))
    assert symplectic_pairing(v, v, 3) == 0


def test_plane_wave_sheet_is_lagrangian(plane_wave, plane_wave_sheet):
    assert plane_wave_sheet.nodes.shape == (21, 101, 4)
    assert plane_wave_sheet.is_grid
    assert isotropy_defect(plane_wave_sheet) <= 1e-6
    assert energy_deviation(plane_wave, plane_wave_sheet.nodes) <= 1e-8
    assert graph_deviation(plane_wave, sympy.Symbol("x"), plane_wave_sheet.nodes) <= 1e-6


def test_plane_wave_fronts_move_at_unit_speed(plane_wave_sheet):
    x_final = plane_wave_sheet.nodes[:, -1, 0]
    np.testing.assert_allclose(x_final, 1.0, atol=1e-12)


def test_isotropy_defect_detects_noise(plane_wave_sheet):
    rng = np.random.default_rng(0)
    noisy = plane_wave_sheet.nodes.copy()
    noisy[..., 2:] += 1e-3 * rng.normal(size=noisy[..., 2:].shape)
    assert isotropy_defect(plane_wave_sheet.model_copy(update={"nodes": noisy})) > 1e-6


def test_isotropy_defect_of_a_twisted_sheet(plane_wave_sheet):
    s = np.asarray(plane_wave_sheet.axes[0])[:, None]
    t = np.asarray(plane_wave_sheet.t)[None, :]
    s, t = np.broadcast_arrays(s, t)
    twisted = np.stack([t, s, np.zeros_like(t), t], axis=-1)
    defect = isotropy_defect(plane_wave_sheet.model_copy(update={"nodes": twisted}))
    assert defect == pytest.approx(1.0)


def test_off_shell_seed_is_rejected(oscillator):
    seed = SeedFamily(points=[PhasePoint(x=[1.0], p=[0.0]), PhasePoint(x=[1.0], p=[0.5])])
    with pytest.raises(OffShellSeedError) as excinfo:
        sweep_lagrangian(oscillator, seed, h=1e-2, steps=10)
    ((index, deviation),) = excinfo.value.offenders
    assert index == 1
    assert deviation == pytest.approx(0.25)


def test_non_isotropic_seed_is_rejected():
    system = HamiltonianSystem(indep=["x", "y", "z"], H=sympy.sympify("(p_x**2 + p_y**2 + p_z**2)/2"), E=0.5)
    a, b = sympy.symbols("a b")
    seed = SeedFamily(
        params=["a", "b"],
        x=[0, a, b],
        p=[sympy.cos(a), 0, sympy.sin(a)],
        axes=[list(np.linspace(-0.1, 0.1, 5)), list(np.linspace(-0.1, 0.1, 3))],
    )
    with pytest.raises(IsotropyViolationError) as excinfo:
        sweep_lagrangian(system, seed, h=1e-2, steps=10)
    assert excinfo.value.defect == pytest.approx(1.0, abs=1e-2)


def test_point_seeds_in_one_dimension(oscillator):
    seed = SeedFamily(points=[PhasePoint(x=[1.0], p=[0.0]), PhasePoint(x=[0.0], p=[1.0])])
    sheet = sweep_lagrangian(oscillator, seed, h=1e-2, steps=50)
    assert sheet.seed_shape == (2,)
    assert not sheet.is_grid
    assert isotropy_defect(sheet) == 0.0


def test_lift_to_jet(plane_wave):
    lift = lift_to_jet(plane_wave)
    u_x, u_y = sympy.symbols("u_x u_y")
    assert sympy.expand(lift.F - (u_x**2 + u_y**2 - 1) / 2) == 0
    assert not lift.degenerate


def test_constant_hamiltonian_lifts_to_a_degenerate_equation():
    lift = lift_to_jet(HamiltonianSystem(indep=["x"], H=sympy.Integer(1), E=1.0))
    assert lift.degenerate


def test_lift_characteristics_project_to_the_hamiltonian_flow(oscillator):
    lift = lift_to_jet(oscillator)
    space = lift_space(lift)
    components = list(char_field(space, lift.F).components)
    u_q = sympy.Symbol("u_q")
    expected = [e.xreplace({sympy.Symbol("p_q"): u_q}) for e in hamiltonian_field(oscillator)]
    assert [sympy.expand(c - e) for c, e in zip(components[:2], expected)] == [0, 0]
    assert sympy.expand(components[2] - 2 * u_q**2) == 0


def test_wave_front_hamiltonian_of_klein_gordon():
    system = loader.load_system(system_path("kg2d.pde"))
    env, document = loader.load_env(system_path("kg_env.json"), system)
    hamiltonian = hamiltonian_from_system(system, env, document.time_axis)
    assert hamiltonian.indep == ["x"]
    p_x = sympy.Symbol("p_x")
    assert sympy.expand(sympy.sympify(hamiltonian.H) - (1 - p_x**2)) == 0


def test_wave_fronts_travel_along_light_rays():
    system = loader.load_system(system_path("kg2d.pde"))
    env, document = loader.load_env(system_path("kg_env.json"), system)
    lift = lift_to_jet(hamiltonian_from_system(system, env, document.time_axis))
    compiled = CompiledPDE(lift_space(lift), lift.F)
    nodes, truncated = rk4(compiled.rhs, np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]), 1e-2, 100)
    assert not np.any(truncated)
    slopes = np.diff(nodes[..., 2], axis=1) / np.diff(nodes[..., 0], axis=1)
    np.testing.assert_allclose(slopes[0], 1.0, atol=1e-8)
    np.testing.assert_allclose(slopes[1], -1.0, atol=1e-8)
