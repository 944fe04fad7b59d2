"""Domain models for PDE systems, jet variables and principal symbols."""

import cmath
from enum import Enum
from itertools import combinations_with_replacement
from math import factorial
from typing import Any, Dict, List, Optional, Tuple

import sympy
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MultiIndex(BaseModel):
    """Sorted multi-index of independent-variable ordinals (repeats allowed)."""

    model_config = ConfigDict(frozen=True)

    indices: Tuple[int, ...] = ()

    @field_validator("indices")
    @classmethod
    def _sorted(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(i < 0 for i in value):
            raise ValueError("multi-index ordinals must be non-negative")
        return tuple(sorted(value))

    @classmethod
    def of(cls, *ordinals: int) -> "MultiIndex":
        return cls(indices=tuple(ordinals))

    @property
    def order(self) -> int:
        return len(self.indices)

    def label(self, indep_names: List[str]) -> str:
        """Readable label such as ``"ttx"`` (``"x1,x2"`` for multi-character names)."""
        names = [indep_names[i] for i in self.indices]
        if all(len(name) == 1 for name in indep_names):
            return "".join(names)
        return ",".join(names)

    def tensor_weight(self) -> sympy.Rational:
        """Combinatorial factor mult(I)!/k! relating ordered-sum entries to tensor components."""
        if not self.indices:
            return sympy.Integer(1)
        weight = 1
        for ordinal in set(self.indices):
            weight *= factorial(self.indices.count(ordinal))
        return sympy.Rational(weight, factorial(self.order))


class VarKind(str, Enum):
    INDEP = "indep"
    JET = "jet"
    PARAM = "param"
    AUX = "aux"


def jet_name(dep_name: str, index: MultiIndex, indep_names: List[str]) -> str:
    """Symbol name for the jet coordinate u_I.

    Examples:
        >>> jet_name("u", MultiIndex.of(1, 1), ["x", "t"])
        'u_tt'
        >>> jet_name("u", MultiIndex.of(0), ["x1", "x2"])
        'u_x1'
    """
    if index.order == 0:
        return dep_name
    names = [indep_names[i] for i in index.indices]
    if all(len(name) == 1 for name in indep_names):
        return f"{dep_name}_{''.join(names)}"
    return f"{dep_name}_{'_'.join(names)}"


class VarRef(BaseModel):
    """Reference to a variable: independent, jet coordinate, parameter or auxiliary."""

    model_config = ConfigDict(frozen=True)

    kind: VarKind
    name: str
    ordinal: Optional[int] = None
    dep: Optional[int] = None
    index: Optional[MultiIndex] = None

    @classmethod
    def indep(cls, ordinal: int, name: str) -> "VarRef":
        return cls(kind=VarKind.INDEP, name=name, ordinal=ordinal)

    @classmethod
    def jet(cls, dep: int, dep_name: str, index: MultiIndex, indep_names: List[str]) -> "VarRef":
        return cls(kind=VarKind.JET, name=jet_name(dep_name, index, indep_names), dep=dep, index=index)

    @classmethod
    def param(cls, name: str) -> "VarRef":
        return cls(kind=VarKind.PARAM, name=name)

    @classmethod
    def aux(cls, name: str) -> "VarRef":
        return cls(kind=VarKind.AUX, name=name)

    @property
    def symbol(self) -> sympy.Symbol:
        return sympy.Symbol(self.name)

    @property
    def order(self) -> int:
        return self.index.order if self.index is not None else 0


class PolyForm(BaseModel):
    """Expanded polynomial in a fixed list of variables.

    Terms map exponent vectors to coefficient expressions that are free of the
    listed variables. Terms are kept in descending graded-lexicographic order.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variables: Tuple[VarRef, ...]
    terms: Dict[Tuple[int, ...], Any] = Field(default_factory=dict)

    def to_expr(self) -> sympy.Expr:
        symbols = [v.symbol for v in self.variables]
        total = sympy.Integer(0)
        for exponents, coeff in self.terms.items():
            monomial = sympy.Integer(1)
            for sym, power in zip(symbols, exponents):
                monomial *= sym**power
            total += coeff * monomial
        return total

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> List[int]:
        return sorted({sum(exponents) for exponents in self.terms})

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def equals(self, other: "PolyForm") -> bool:
        """Poly-equivalence: same variables and coefficient-wise equal after expansion."""
        if [v.name for v in self.variables] != [v.name for v in other.variables]:
            return False
        keys = set(self.terms) | set(other.terms)
        zero = sympy.Integer(0)
        return all(
            sympy.expand(self.terms.get(key, zero) - other.terms.get(key, zero)) == 0
            for key in keys
        )


class PDESystem(BaseModel):
    """Parsed system of PDEs F^alpha = 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    indep: List[str]
    dep: List[str]
    params: List[str] = Field(default_factory=list)
    bindings: Dict[str, Any] = Field(default_factory=dict)
    equations: List[Any]
    order: int

    @model_validator(mode="after")
    def _dimensions(self) -> "PDESystem":
        if not self.indep:
            raise ValueError("a system needs at least one independent variable")
        if not self.dep:
            raise ValueError("a system needs at least one dependent variable")
        if not self.equations:
            raise ValueError("a system needs at least one equation")
        if self.order < 1:
            raise ValueError("system order must be at least 1")
        return self

    @property
    def n(self) -> int:
        return len(self.indep)

    @property
    def m(self) -> int:
        return len(self.dep)

    @property
    def is_determined(self) -> bool:
        return len(self.equations) == self.m

    def indep_ref(self, ordinal: int) -> VarRef:
        return VarRef.indep(ordinal, self.indep[ordinal])

    def jet_ref(self, dep: int, index: MultiIndex) -> VarRef:
        return VarRef.jet(dep, self.dep[dep], index, self.indep)

    def refs(self) -> Dict[str, VarRef]:
        """All references that may occur in equations, keyed by symbol name."""
        table: Dict[str, VarRef] = {}
        for i, _ in enumerate(self.indep):
            ref = self.indep_ref(i)
            table[ref.name] = ref
        for name in self.params:
            table[name] = VarRef.param(name)
        for b in range(self.m):
            for order in range(self.order + 1):
                for combo in combinations_with_replacement(range(self.n), order):
                    ref = self.jet_ref(b, MultiIndex(indices=combo))
                    table[ref.name] = ref
        return table


class SymbolTensor(BaseModel):
    """Principal symbol: sorted order-k multi-index -> (equations x m) matrix of Exprs.

    ``entries[I][alpha, b]`` is dF^alpha/du^b_I. Absent indices mean zero matrices.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    m: int
    k: int
    equations: int
    indep: List[str]
    params: List[str] = Field(default_factory=list)
    entries: Dict[Tuple[int, ...], Any] = Field(default_factory=dict)
    name: Optional[str] = None

    @model_validator(mode="after")
    def _shapes(self) -> "SymbolTensor":
        for index, matrix in self.entries.items():
            if len(index) != self.k or list(index) != sorted(index):
                raise ValueError(f"entry index {index} is not a sorted order-{self.k} multi-index")
            if matrix.shape != (self.equations, self.m):
                raise ValueError(
                    f"entry {index} has shape {matrix.shape}, expected {(self.equations, self.m)}"
                )
        return self

    def entry(self, index: Tuple[int, ...]) -> sympy.ImmutableMatrix:
        return self.entries.get(tuple(sorted(index)), sympy.zeros(self.equations, self.m).as_immutable())

    def free_symbols(self) -> set:
        symbols = set()
        for matrix in self.entries.values():
            symbols |= matrix.free_symbols
        return symbols

    def covector_refs(self) -> List[VarRef]:
        """Auxiliary covector variables p_<indep>, one per independent variable."""
        return [VarRef.aux(f"p_{name}") for name in self.indep]


class JetEnv(BaseModel):
    """Numeric bindings for x, parameters and jet coordinates, keyed by symbol name."""

    model_config = ConfigDict(frozen=True)

    bindings: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("bindings")
    @classmethod
    def _finite(cls, value: Dict[str, Any]) -> Dict[str, complex]:
        converted = {}
        for name, number in value.items():
            number = complex(number)
            if not cmath.isfinite(number):
                raise ValueError(f"binding {name} is not finite")
            converted[name] = number
        return converted

    def merged(self, other: Dict[str, complex]) -> "JetEnv":
        return JetEnv(bindings={**self.bindings, **other})

    def subs_map(self) -> Dict[sympy.Symbol, sympy.Expr]:
        return {sympy.Symbol(name): sympy.sympify(value) for name, value in self.bindings.items()}


class Covector(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: Tuple[Any, ...]

    @field_validator("p")
    @classmethod
    def _complex(cls, value: Tuple[Any, ...]) -> Tuple[complex, ...]:
        return tuple(complex(c) for c in value)

    @property
    def is_zero(self) -> bool:
        return all(abs(c) == 0 for c in self.p)


class VectorFieldExpr(BaseModel):
    """Vector field on J^1 with components ordered (x^1..x^n, u_1..u_n, u)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    components: Tuple[Any, ...]

    @model_validator(mode="after")
    def _count(self) -> "VectorFieldExpr":
        if len(self.components) != 2 * self.n + 1:
            raise ValueError(f"expected {2 * self.n + 1} components, got {len(self.components)}")
        return self

    @property
    def x_dot(self) -> Tuple[Any, ...]:
        return self.components[: self.n]

    @property
    def p_dot(self) -> Tuple[Any, ...]:
        return self.components[self.n : 2 * self.n]

    @property
    def u_dot(self) -> Any:
        return self.components[2 * self.n]


class HamiltonianSystem(BaseModel):
    """Hamiltonian H(x, p) on T*M together with the energy level E."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    indep: List[str]
    H: Any
    E: float = 0.0
    params: Dict[str, float] = Field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.indep)

    @property
    def x_refs(self) -> List[VarRef]:
        return [VarRef.indep(i, name) for i, name in enumerate(self.indep)]

    @property
    def p_refs(self) -> List[VarRef]:
        return [VarRef.aux(f"p_{name}") for name in self.indep]

    @classmethod
    def from_wave_front(cls, pde: Any) -> "HamiltonianSystem":
        """Hamiltonian H(y, p) = wave-front expression with tau_a -> p_a, at level E = 0."""
        mapping = {
            sympy.Symbol(unknown): sympy.Symbol(f"p_{name}")
            for name, unknown in zip(pde.base, pde.unknowns)
        }
        return cls(indep=list(pde.base), H=sympy.sympify(pde.expr).xreplace(mapping), E=0.0)


class JetLift(BaseModel):
    """Hamilton-Jacobi equation F(x, u, u_i) = H(x, u_i) - E on J^1."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    indep: List[str]
    dep: str = "u"
    F: Any
    degenerate: bool = False


class RunConfig(BaseModel):
    """Validated options for one CLI invocation."""

    command: str
    system: Optional[str] = None
    aux: Optional[str] = None
    seed: int = 0
    trials: int = Field(default=16, ge=1)
    h: float = Field(default=1e-3, gt=0)
    steps: int = Field(default=1000, ge=1)
    tol: float = Field(default=1e-9, gt=0)
    output: Optional[str] = None
