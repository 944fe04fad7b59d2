"""String formatting utilities for expressions, numbers and systems."""

from typing import Dict, List, Optional, Union

import sympy
from sympy.printing.precedence import PRECEDENCE, precedence
from sympy.printing.str import StrPrinter

from domain.models import PDESystem, VarKind


class DSLPrinter(StrPrinter):
    """Print sympy expressions in the system DSL syntax.

    Jet coordinates print as ``d(u,x,x)``, powers as ``^`` and the imaginary
    unit as ``im``, so the output parses back to the same expression.
    """

    def __init__(self, names: Optional[Dict[str, str]] = None):
        super().__init__({"order": None})
        self._names = names or {}

    def _print_Symbol(self, expr):
        return self._names.get(expr.name, expr.name)

    def _print_ImaginaryUnit(self, expr):
        return "im"

    def _print_Pow(self, expr, rational=False):
        base, exponent = expr.as_base_exp()
        if exponent.is_Integer and exponent.is_negative:
            return "1/" + self.parenthesize(sympy.Pow(base, -exponent), PRECEDENCE["Mul"], strict=True)
        if exponent.is_Rational and exponent.q == 2:
            root = f"sqrt({self._print(base)})"
            count = abs(exponent.p)
            powered = root if count == 1 else f"{root}^{count}"
            return powered if exponent.p > 0 else f"1/{powered}" if count == 1 else f"1/({powered})"
        if exponent.is_Integer:
            return f"{self.parenthesize(base, precedence(expr), strict=True)}^{exponent}"
        raise ValueError(f"exponent {exponent} has no DSL form")

    def _print_Float(self, expr):
        return repr(float(expr))


def dsl_names(system: PDESystem) -> Dict[str, str]:
    """Map jet symbol names of ``system`` to their ``d(...)`` spelling."""
    names = {}
    for name, ref in system.refs().items():
        if ref.kind == VarKind.JET and ref.order > 0:
            args = [system.dep[ref.dep]] + [system.indep[i] for i in ref.index.indices]
            names[name] = f"d({','.join(args)})"
    return names


def expr_to_dsl(e, names: Optional[Dict[str, str]] = None) -> str:
    """Render an expression in DSL syntax.

    Examples:
        >>> expr_to_dsl(sympy.Symbol("x")**2 - 1)
        'x^2 - 1'
    """
    return DSLPrinter(names).doprint(sympy.sympify(e))


def format_system(system: PDESystem) -> str:
    """Canonical DSL text for a system; parsing it yields the same system."""
    names = dsl_names(system)
    lines = [f"indep {', '.join(system.indep)};", f"dep {', '.join(system.dep)};"]
    if system.params:
        lines.append(f"param {', '.join(system.params)};")
    for equation in system.equations:
        lines.append(f"eq {expr_to_dsl(equation, names)} = 0;")
    return "\n".join(lines) + "\n"


def format_number(value: Union[complex, float]) -> Union[float, List[float]]:
    """JSON-ready number: a float for real values, ``[re, im]`` otherwise.

    Python's float repr is the shortest round-trip form (at most 17
    significant digits), which keeps JSON output byte-stable.

    Examples:
        >>> format_number(3+0j)
        3.0
        >>> format_number(1j)
        [0.0, 1.0]
    """
    value = complex(value)
    if value.imag == 0:
        return float(value.real) + 0.0
    return [float(value.real) + 0.0, float(value.imag) + 0.0]


def format_dimensions(system: PDESystem) -> str:
    """One-line summary such as ``n=2, m=1, k=2, determined``."""
    kind = "determined" if system.is_determined else f"{len(system.equations)} equations"
    return f"n={system.n}, m={system.m}, k={system.order}, {kind}"
