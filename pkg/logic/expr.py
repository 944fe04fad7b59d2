"""Symbolic expression core: differentiation, evaluation, substitution, normal form.

Expressions are sympy trees. Every variable is a plain ``sympy.Symbol`` whose
name is the ``VarRef.name`` it stands for, so jet coordinates of different
orders are independent symbols and ``diff`` never applies a chain rule across
jet orders.
"""

import cmath
from typing import Callable, Dict, Iterable, Mapping, Sequence, Union

import numpy as np
import sympy
from loguru import logger

from domain.errors import (
    NotPolynomialError,
    NumericDomainError,
    UnboundVariableError,
    UnsupportedFunctionError,
)
from domain.models import PolyForm, VarRef

Expr = sympy.Expr
VarLike = Union[VarRef, sympy.Symbol, str]

SUPPORTED_FUNCTIONS = (sympy.sin, sympy.cos, sympy.exp)


def as_symbol(var: VarLike) -> sympy.Symbol:
    """Normalize a VarRef, Symbol or name into the symbol used in expressions."""
    if isinstance(var, VarRef):
        return var.symbol
    if isinstance(var, sympy.Symbol):
        return var
    return sympy.Symbol(str(var))


def to_number(value) -> sympy.Expr:
    """Convert a Python scalar to a sympy number, keeping integers exact."""
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, (bool, np.bool_)):
        return sympy.Integer(int(value))
    if isinstance(value, (int, np.integer)):
        return sympy.Integer(int(value))
    value = complex(value)
    if value.imag == 0:
        return sympy.Float(value.real)
    return sympy.Float(value.real) + sympy.Float(value.imag) * sympy.I


def check_supported(e: Expr) -> None:
    """Raise if ``e`` uses a function outside sin, cos, exp, sqrt.

    Raises:
        UnsupportedFunctionError: naming the first unsupported function found
    """
    for func in e.atoms(sympy.Function):
        if not isinstance(func, SUPPORTED_FUNCTIONS):
            raise UnsupportedFunctionError(str(func.func))
    for power in e.atoms(sympy.Pow):
        exponent = power.exp
        if exponent.is_Integer:
            continue
        if exponent.is_Rational and exponent.q == 2:
            continue
        raise UnsupportedFunctionError(f"pow({exponent})")


def diff(e: Expr, v: VarLike) -> Expr:
    """Formal partial derivative treating every distinct variable as independent.

    Examples:
        >>> x = sympy.Symbol("x1")
        >>> diff(x * x, x)
        2*x1
    """
    e = sympy.sympify(e)
    check_supported(e)
    return sympy.diff(e, as_symbol(v))


def _value_map(env: Mapping) -> Dict[sympy.Symbol, sympy.Expr]:
    return {as_symbol(key): to_number(value) for key, value in env.items()}


def evaluate(e: Expr, env: Mapping) -> complex:
    """Evaluate ``e`` to a double-precision complex number.

    Args:
        e: Expression to evaluate
        env: Bindings keyed by VarRef, Symbol or symbol name

    Returns:
        complex: The value of ``e``

    Raises:
        UnboundVariableError: If ``env`` misses a variable occurring in ``e``
        NumericDomainError: On poles or other non-finite results
    """
    e = sympy.sympify(e)
    values = _value_map(env)
    missing = {sym.name for sym in e.free_symbols if sym not in values}
    if missing:
        raise UnboundVariableError(missing)
    result = e.xreplace(values)
    if result.has(sympy.zoo, sympy.nan, sympy.oo, -sympy.oo):
        raise NumericDomainError(f"{e} is not finite at the given point")
    try:
        value = complex(result.evalf())
    except (TypeError, ZeroDivisionError) as exc:
        raise NumericDomainError(f"{e} could not be evaluated: {exc}") from exc
    if not cmath.isfinite(value):
        raise NumericDomainError(f"{e} is not finite at the given point")
    return value


def substitute(e: Expr, mapping: Mapping) -> Expr:
    """Simultaneous substitution; sympy's automatic evaluation folds constants."""
    e = sympy.sympify(e)
    if not mapping:
        return e
    replacements = {
        as_symbol(key): value.symbol if isinstance(value, VarRef) else to_number(value)
        for key, value in mapping.items()
    }
    return e.xreplace(replacements)


def poly_normalize(e: Expr, variables: Sequence[VarRef]) -> PolyForm:
    """Expand ``e`` into a PolyForm over ``variables``.

    Coefficients may involve any other symbols. Terms are ordered by
    descending graded-lexicographic exponent vectors.

    Raises:
        NotPolynomialError: If ``e`` depends non-polynomially on a listed variable
    """
    e = sympy.sympify(e)
    variables = tuple(variables)
    if not variables:
        expanded = sympy.expand(e)
        return PolyForm(variables=(), terms={} if expanded == 0 else {(): expanded})
    symbols = [v.symbol for v in variables]
    expanded = sympy.expand(e)
    if not expanded.is_polynomial(*symbols):
        raise NotPolynomialError(str(e))
    try:
        poly = sympy.Poly(expanded, *symbols)
    except sympy.PolynomialError as exc:
        raise NotPolynomialError(str(exc)) from exc
    terms = {}
    for monomial, coeff in poly.terms(order="grlex"):
        coeff = sympy.expand(coeff)
        if not coeff.is_zero:
            terms[tuple(monomial)] = coeff
    return PolyForm(variables=variables, terms=terms)


def poly_equal(a: Expr, b: Expr) -> bool:
    """True when ``a - b`` expands to zero."""
    return sympy.expand(sympy.sympify(a) - sympy.sympify(b)) == 0


def free_names(e: Expr) -> set:
    return {sym.name for sym in sympy.sympify(e).free_symbols}


def compile_numeric(
    exprs: Iterable[Expr],
    variables: Sequence[VarLike],
    bindings: Mapping = None,
) -> Callable[[np.ndarray], np.ndarray]:
    """Compile expressions into a vectorized numpy function.

    The returned callable takes an array of shape (N, len(variables)) and
    returns an array of shape (N, len(exprs)).

    Raises:
        UnboundVariableError: If an expression keeps a symbol that is neither
            listed in ``variables`` nor bound in ``bindings``
    """
    symbols = [as_symbol(v) for v in variables]
    exprs = [substitute(sympy.sympify(e), bindings or {}) for e in exprs]
    for e in exprs:
        check_supported(e)
    leftover = set().union(*(e.free_symbols for e in exprs)) - set(symbols) if exprs else set()
    if leftover:
        raise UnboundVariableError(sym.name for sym in leftover)
    function = sympy.lambdify(symbols, exprs, modules="numpy")
    logger.debug("compiled {} expressions over {} variables", len(exprs), len(symbols))

    def evaluate_rows(values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values))
        rows = values.shape[0]
        columns = function(*values.T)
        return np.stack([np.broadcast_to(np.asarray(c), (rows,)) for c in columns], axis=1)

    return evaluate_rows
