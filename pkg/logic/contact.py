"""Contact geometry of first jets J^1 of scalar functions.

Coordinates are ordered (x^1..x^n, u_1..u_n, u) everywhere: vector-field
components, numeric state vectors and compiled right-hand sides.
"""

from typing import List, Optional, Sequence

import sympy

from domain.errors import HigherJetError, PreconditionError
from domain.models import MultiIndex, PDESystem, VarRef, VectorFieldExpr, jet_name
from logic.expr import diff, free_names


class J1Space:
    """Coordinate symbols of J^1(M) for one dependent variable."""

    def __init__(self, indep: Sequence[str], dep: str = "u", params: Sequence[str] = ()):
        self.indep = list(indep)
        self.dep = dep
        self.params = list(params)
        self.x = [VarRef.indep(i, name) for i, name in enumerate(self.indep)]
        self.p = [
            VarRef.jet(0, dep, MultiIndex.of(i), self.indep) for i in range(len(self.indep))
        ]
        self.u = VarRef.jet(0, dep, MultiIndex(), self.indep)

    @classmethod
    def from_system(cls, system: PDESystem) -> "J1Space":
        """J^1 coordinates of a scalar first-order system.

        Raises:
            PreconditionError: If the system has several unknowns or equations
        """
        if system.m != 1 or len(system.equations) != 1:
            raise PreconditionError("The method of characteristics needs one equation for one unknown")
        return cls(system.indep, system.dep[0], system.params)

    @property
    def n(self) -> int:
        return len(self.indep)

    @property
    def coordinates(self) -> List[VarRef]:
        """All 2n+1 coordinates in (x, p, u) order."""
        return [*self.x, *self.p, self.u]

    @property
    def p_names(self) -> List[str]:
        return [ref.name for ref in self.p]

    def check(self, f) -> sympy.Expr:
        """Return ``f`` as an expression after verifying it lives on J^1.

        Raises:
            HigherJetError: If ``f`` uses symbols other than J^1 coordinates and parameters
        """
        f = sympy.sympify(f)
        allowed = {ref.name for ref in self.coordinates} | set(self.params)
        foreign = free_names(f) - allowed
        if foreign:
            raise HigherJetError(foreign)
        return f

    def field(self, components: Sequence) -> VectorFieldExpr:
        return VectorFieldExpr(n=self.n, components=tuple(sympy.sympify(c) for c in components))


def contact_field(space: J1Space, f) -> VectorFieldExpr:
    """Infinitesimal contactomorphism X_f.

    x'^i = f_{u_i}, u_i' = -(f_{x^i} + u_i f_u), u' = u_i f_{u_i} - f.

    Examples:
        >>> space = J1Space(["x1", "x2"])
        >>> contact_field(space, 1).u_dot
        -1
    """
    f = space.check(f)
    f_u = diff(f, space.u)
    f_p = [diff(f, p) for p in space.p]
    f_x = [diff(f, x) for x in space.x]
    p = [ref.symbol for ref in space.p]
    x_dot = f_p
    p_dot = [-(f_x[i] + p[i] * f_u) for i in range(space.n)]
    u_dot = sum(p[i] * f_p[i] for i in range(space.n)) - f
    return space.field([*x_dot, *p_dot, u_dot])


def char_field(space: J1Space, F) -> VectorFieldExpr:
    """Characteristic field Y_F = X_F + F d/du.

    x'^i = F_{u_i}, u_i' = -F_{x^i} - u_i F_u, u' = u_i F_{u_i}.
    """
    X = contact_field(space, F)
    components = list(X.components)
    components[-1] = sympy.expand(components[-1] + space.check(F))
    return space.field(components)


def jacobi_bracket(space: J1Space, f, g) -> sympy.Expr:
    """Jacobi bracket {f, g} of functions on J^1, satisfying [X_f, X_g] = X_{f,g}."""
    f = space.check(f)
    g = space.check(g)
    f_u, g_u = diff(f, space.u), diff(g, space.u)
    total = -f * g_u + g * f_u
    for x, p in zip(space.x, space.p):
        f_p, g_p = diff(f, p), diff(g, p)
        total += f_p * diff(g, x) - g_p * diff(f, x)
        total += p.symbol * (f_p * g_u - g_p * f_u)
    return sympy.expand(total)


def directional_derivative(space: J1Space, V: VectorFieldExpr, f) -> sympy.Expr:
    """V(f) = sum of V^a df/dz^a over the J^1 coordinates z."""
    f = sympy.sympify(f)
    return sympy.expand(
        sum(component * diff(f, coordinate) for component, coordinate in zip(V.components, space.coordinates))
    )


def lie_bracket(space: J1Space, V: VectorFieldExpr, W: VectorFieldExpr) -> VectorFieldExpr:
    """Commutator [V, W]^c = V(W^c) - W(V^c)."""
    return space.field(
        [
            directional_derivative(space, V, w) - directional_derivative(space, W, v)
            for v, w in zip(V.components, W.components)
        ]
    )


def contact_form(space: J1Space, V: VectorFieldExpr) -> sympy.Expr:
    """alpha(V) for alpha = du - u_i dx^i."""
    p = [ref.symbol for ref in space.p]
    return sympy.expand(V.u_dot - sum(p[i] * V.x_dot[i] for i in range(space.n)))


def fields_equal(V: VectorFieldExpr, W: VectorFieldExpr) -> bool:
    """Component-wise poly-equality."""
    return len(V.components) == len(W.components) and all(
        sympy.expand(a - b) == 0 for a, b in zip(V.components, W.components)
    )


def jet_symbol(space: J1Space, index: Optional[int] = None) -> sympy.Symbol:
    """Symbol of u (index None) or of u_i."""
    if index is None:
        return space.u.symbol
    return sympy.Symbol(jet_name(space.dep, MultiIndex.of(index), space.indep))
