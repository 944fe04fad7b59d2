"""Tests for the system DSL parser and the canonical printer."""

import pytest
import sympy

from domain.errors import (
    DerivativeTargetError,
    DSLSyntaxError,
    EmptySystemError,
    NonIntegerExponentError,
    ParseError,
    UndeclaredIdentifierError,
)
from logic.expr import poly_equal
from logic.formatting import dsl_names, expr_to_dsl, format_dimensions, format_number, format_system
from logic.parser import expression_or_number, parse_expression, parse_system

u, u_tt, u_xx, m = sympy.symbols("u u_tt u_xx m")


def test_parse_klein_gordon(load):
    system = load("kg2d.pde")
    assert system.indep == ["x", "t"]
    assert system.dep == ["u"]
    assert system.params == ["m"]
    assert system.order == 2
    assert system.is_determined
    assert poly_equal(system.equations[0], u_tt - u_xx + m**2 * u)


def test_equations_are_stored_as_lhs_minus_rhs():
    system = parse_system("indep x, t; dep u; eq d(u,t) = d(u,x,x);")
    assert poly_equal(system.equations[0], sympy.Symbol("u_t") - u_xx)
    assert system.order == 2


def test_multi_character_names_use_separators(monge_strip):
    assert monge_strip.indep == ["x1", "x2"]
    assert poly_equal(monge_strip.equations[0], u - sympy.Symbol("u_x1") * sympy.Symbol("u_x2"))


def test_mixed_derivatives_are_symmetric():
    system = parse_system("indep x, y; dep u; eq d(u,x,y) - d(u,y,x) = 0;")
    assert system.equations[0] == 0


def test_imaginary_unit(load):
    system = load("dirac.pde")
    assert system.m == 4
    assert len(system.equations) == 4
    assert system.equations[0].has(sympy.I)


def test_syntax_error_carries_position():
    with pytest.raises(DSLSyntaxError) as excinfo:
        parse_system("indep x;\ndep u;\neq d(u,x) = ;")
    assert excinfo.value.line == 3
    assert isinstance(excinfo.value, ParseError)


def test_undeclared_identifier():
    with pytest.raises(UndeclaredIdentifierError) as excinfo:
        parse_system("indep x; dep u; eq d(u,x) + k = 0;")
    assert excinfo.value.name == "k"


def test_derivative_of_a_parameter():
    with pytest.raises(DerivativeTargetError):
        parse_system("indep x; dep u; param c; eq d(c,x) = 0;")


def test_derivative_along_a_dependent_variable():
    with pytest.raises(DerivativeTargetError):
        parse_system("indep x; dep u, v; eq d(u,v) = 0;")


def test_empty_system():
    with pytest.raises(EmptySystemError):
        parse_system("indep x; dep u;")


def test_fractional_exponent():
    with pytest.raises(NonIntegerExponentError):
        parse_system("indep x; dep u; eq d(u,x)^0.5 = 0;")


def test_duplicate_declaration():
    with pytest.raises(DSLSyntaxError):
        parse_system("indep x; dep x; eq d(x,x) = 0;")


def test_comments_are_ignored():
    system = parse_system("# heat\nindep x, t; # space and time\ndep u;\neq d(u,t) - d(u,x,x) = 0; # done\n")
    assert system.n == 2


@pytest.mark.parametrize("name", ["kg2d.pde", "dirac.pde", "maxwell.pde", "monge_ampere.pde", "monge_strip.pde"])
def test_canonical_form_parses_back(load, name):
    system = load(name)
    again = parse_system(format_system(system))
    assert again.indep == system.indep
    assert again.dep == system.dep
    assert again.params == system.params
    assert again.order == system.order
    for a, b in zip(again.equations, system.equations):
        assert poly_equal(a, b)


def test_parse_expression_restricts_names():
    H = parse_expression("p_q^2 + q^2", names={"q", "p_q"})
    assert H == sympy.Symbol("p_q") ** 2 + sympy.Symbol("q") ** 2
    with pytest.raises(UndeclaredIdentifierError):
        parse_expression("p_q + z", names={"q", "p_q"})


def test_parse_expression_resolves_derivatives(load):
    system = load("monge_ampere.pde")
    assert parse_expression("d(u,y,x,x)", system) == sympy.Symbol("u_xxy")
    with pytest.raises(DerivativeTargetError):
        parse_expression("d(u,x)")


def test_expression_or_number():
    assert expression_or_number(2) == 2
    assert complex(expression_or_number([1, 2])) == 1 + 2j
    assert expression_or_number("s/2") == sympy.Symbol("s") / 2


def test_dsl_printing():
    x = sympy.Symbol("x")
    assert expr_to_dsl(x**2 - 1) == "x^2 - 1"
    assert expr_to_dsl(sympy.I * x) == "im*x"


def test_dsl_names_map_jets_to_derivatives(load):
    names = dsl_names(load("kg2d.pde"))
    assert names["u_tt"] == "d(u,t,t)"
    assert names["u_x"] == "d(u,x)"
    assert "u" not in names


def test_format_number():
    assert format_number(3 + 0j) == 3.0
    assert format_number(1j) == [0.0, 1.0]
    assert format_number(-0.0) == 0.0


def test_format_dimensions(load):
    assert format_dimensions(load("kg2d.pde")) == "n=2, m=1, k=2, determined"
