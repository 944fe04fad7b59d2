"""Tests for the command-level analyses."""

import numpy as np
import pytest
import sympy

from domain.errors import PreconditionError, ZeroCovectorError
from domain.models import JetEnv
from logic.symbol import principal_symbol
from pipeline import analysis, loader
from tests.conftest import system_path


@pytest.fixture
def maxwell():
    return principal_symbol(loader.load_system(system_path("maxwell.pde")))


def test_rank_report_at_a_null_covector(maxwell):
    report = analysis.rank_report(maxwell, None, [1, 1, 0, 0], seed=0, trials=8)
    assert report.generic_rank == 3
    assert report.rank == 1
    assert report.q == 2
    assert report.characteristic
    assert report.null_space.shape == (3, 4)


def test_rank_report_without_covector(maxwell):
    report = analysis.rank_report(maxwell, None)
    assert report.generic_rank == 3
    assert report.rank is None
    assert report.characteristic is None


def test_rank_report_rejects_bad_covectors(maxwell):
    with pytest.raises(ZeroCovectorError):
        analysis.rank_report(maxwell, None, [0, 0, 0, 0])
    with pytest.raises(PreconditionError):
        analysis.rank_report(maxwell, None, [1, 0])


def test_bound_symbol_substitutes_background():
    st = principal_symbol(loader.load_system(system_path("monge_ampere.pde")))
    bound = analysis.bound_symbol(st, JetEnv(bindings={"u_xxx": 1, "u_xxy": 0.5, "u_xyy": -2}))
    for matrix in bound.entries.values():
        assert all(not sympy.sympify(entry).free_symbols for entry in matrix)
    assert analysis.bound_symbol(st, None) is st


def test_light_cone_surface_report():
    system = loader.load_system(system_path("kg2d.pde"))
    env, document = loader.load_env(system_path("kg_light_cone.json"), system)
    report = analysis.surface_report(system, "t - x", env, document)
    assert report.generic_rank == 1
    assert report.characteristic == [True, True, True]
    graph = analysis.surface_report(system, "x", env, document, graph=True)
    assert graph.characteristic == [True, True, True]
    assert "jet data" in report.note


def test_time_slice_surface_report():
    system = loader.load_system(system_path("kg2d.pde"))
    env, document = loader.load_env(system_path("kg_light_cone.json"), system)
    report = analysis.surface_report(system, "0", env, document, graph=True)
    assert report.characteristic == [False, False, False]


def test_solve_transported_sine():
    system = loader.load_system(system_path("transport.pde"))
    cauchy, axes, bindings = loader.load_cauchy(system_path("transport_sine.json"), system)
    outcome = analysis.solve_cauchy(system, cauchy, axes, bindings, queries=[(0.3, 0.1), (5.0, 0.5)])
    assert len(outcome.strip.samples) == 21
    np.testing.assert_allclose(outcome.noncharacteristic, 1.0)
    assert np.max(outcome.drift) < 1e-10
    inside, outside = outcome.evaluations
    assert len(inside.branches) == 1
    assert inside.branches[0].u == pytest.approx(np.sin(0.1), abs=1e-5)
    assert inside.branches[0].p[0] == pytest.approx(np.cos(0.1), abs=1e-5)
    assert outside.out_of_domain


def test_solve_uses_settings_for_step_defaults():
    system = loader.load_system(system_path("monge_strip.pde"))
    cauchy, axes, bindings = loader.load_cauchy(system_path("monge_strip_cauchy.json"), system)
    outcome = analysis.solve_cauchy(system, cauchy, axes, bindings, steps=20)
    assert outcome.sheet.h == 1e-3
    assert outcome.sheet.nodes.shape == (20, 21, 5)


def test_sweep_reports_isotropy_and_energy():
    hamiltonian = loader.load_hamiltonian(system_path("plane_wave.json"))
    seed = loader.load_seed_family(system_path("plane_wave_seed.json"))
    outcome = analysis.sweep(hamiltonian, seed, h=1e-2, steps=50)
    assert outcome.isotropy_defect <= 1e-6
    assert outcome.energy_deviation <= 1e-8
    assert np.max(outcome.energy_drift) <= 1e-8
    assert not outcome.lift.degenerate


def test_bicharacteristics_of_klein_gordon():
    system = loader.load_system(system_path("kg2d.pde"))
    env, document = loader.load_env(system_path("kg_env.json"), system)
    hamiltonian = analysis.hamiltonian_from_system(system, env, document.time_axis)
    seed = loader.load_seed_family(system_path("kg_ray_seed.json"))
    outcome = analysis.sweep(hamiltonian, seed, h=1e-2, steps=100)
    # H = 1 - p_x^2 at level 0: rays x = -+2t
    np.testing.assert_allclose(outcome.sheet.nodes[:, -1, 0], [-2.0, 2.0], atol=1e-12)
