"""Tests for the contact algebra on J^1: contact fields, brackets and characteristic fields."""

import numpy as np
import pytest
import sympy

from domain.errors import HigherJetError, PreconditionError
from logic.contact import (
    J1Space,
    char_field,
    contact_field,
    contact_form,
    directional_derivative,
    fields_equal,
    jacobi_bracket,
    jet_symbol,
    lie_bracket,
)
from logic.parser import parse_system


def random_function(space: J1Space, rng: np.random.Generator, terms: int = 4, degree: int = 2) -> sympy.Expr:
    """Random polynomial with small integer coefficients in the J^1 coordinates."""
    symbols = [ref.symbol for ref in space.coordinates]
    total = sympy.Integer(int(rng.integers(-3, 4)))
    for _ in range(terms):
        monomial = sympy.Integer(int(rng.integers(-3, 4)))
        for _ in range(int(rng.integers(1, degree + 1))):
            monomial *= symbols[int(rng.integers(len(symbols)))]
        total += monomial
    return sympy.expand(total)


@pytest.mark.parametrize("seed", range(50))
def test_bracket_of_contact_fields(plane_space, seed):
    rng = np.random.default_rng(seed)
    f = random_function(plane_space, rng)
    g = random_function(plane_space, rng)
    commutator = lie_bracket(plane_space, contact_field(plane_space, f), contact_field(plane_space, g))
    assert fields_equal(commutator, contact_field(plane_space, jacobi_bracket(plane_space, f, g)))


@pytest.mark.parametrize("seed", range(50))
def test_jacobi_bracket_is_a_lie_bracket(plane_space, seed):
    rng = np.random.default_rng(100 + seed)
    f, g, h = (random_function(plane_space, rng, terms=3) for _ in range(3))

    def bracket(a, b):
        return jacobi_bracket(plane_space, a, b)

    assert sympy.expand(bracket(f, g) + bracket(g, f)) == 0
    cyclic = bracket(f, bracket(g, h)) + bracket(g, bracket(h, f)) + bracket(h, bracket(f, g))
    assert sympy.expand(cyclic) == 0


@pytest.mark.parametrize("seed", range(50))
def test_contact_form_on_contact_fields(plane_space, seed):
    f = random_function(plane_space, np.random.default_rng(200 + seed))
    assert sympy.expand(contact_form(plane_space, contact_field(plane_space, f)) + f) == 0


@pytest.mark.parametrize("seed", range(50))
def test_characteristic_field_is_horizontal_and_conserves_F(plane_space, seed):
    F = random_function(plane_space, np.random.default_rng(300 + seed))
    Y = char_field(plane_space, F)
    assert contact_form(plane_space, Y) == 0
    assert directional_derivative(plane_space, Y, F) == 0


def test_contact_field_of_constant():
    space = J1Space(["x"])
    X = contact_field(space, 1)
    assert X.x_dot == (0,)
    assert X.p_dot == (0,)
    assert X.u_dot == -1


def test_characteristic_field_of_the_strip_equation(monge_strip):
    space = J1Space.from_system(monge_strip)
    Y = char_field(space, monge_strip.equations[0])
    p1, p2 = jet_symbol(space, 0), jet_symbol(space, 1)
    assert Y.x_dot == (-p2, -p1)
    assert Y.p_dot == (-p1, -p2)
    assert Y.u_dot == -2 * p1 * p2


def test_coordinates_are_ordered_x_p_u(plane_space):
    assert [ref.name for ref in plane_space.coordinates] == ["x1", "x2", "u_x1", "u_x2", "u"]
    assert jet_symbol(plane_space) == sympy.Symbol("u")


def test_second_jets_are_rejected(plane_space):
    with pytest.raises(HigherJetError):
        contact_field(plane_space, sympy.Symbol("u_x1_x1"))


def test_only_scalar_equations_have_a_j1_space():
    system = parse_system("indep x; dep u, v; eq d(u,x) = v; eq d(v,x) = u;")
    with pytest.raises(PreconditionError):
        J1Space.from_system(system)
