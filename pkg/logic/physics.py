"""Built-in principal symbols: wave, Dirac, Maxwell (plain and Lorenz gauge), linearized Einstein."""

from itertools import combinations_with_replacement
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import sympy
from loguru import logger

from domain.errors import InvalidMetricError
from domain.models import SymbolTensor, VarRef
from logic.expr import to_number

DEFAULT_INDEP = {1: ["t"], 2: ["t", "x"], 3: ["t", "x", "y"], 4: ["t", "x", "y", "z"]}


def minkowski(n: int = 4) -> sympy.ImmutableMatrix:
    """Minkowski metric with signature (+, -, ..., -)."""
    return sympy.diag(1, *([-1] * (n - 1))).as_immutable()


def default_indep(n: int) -> List[str]:
    return DEFAULT_INDEP.get(n, [f"x{i}" for i in range(n)])


def validate_metric(metric) -> sympy.ImmutableMatrix:
    """Check a metric is a symmetric, invertible square matrix of scalars.

    Raises:
        InvalidMetricError: If it is ragged, non-square, non-symmetric or singular
    """
    if isinstance(metric, sympy.MatrixBase):
        metric = metric.tolist()
    try:
        g = sympy.Matrix([[to_number(c) for c in row] for row in metric])
    except (TypeError, ValueError) as exc:
        raise InvalidMetricError(f"Metric entries must be numbers: {exc}") from exc
    if g.rows != g.cols or g.rows == 0:
        raise InvalidMetricError(f"Metric must be square, got {g.rows}x{g.cols}")
    numeric = np.array(g.tolist(), dtype=complex)
    scale = max(np.max(np.abs(numeric)), 1.0)
    if np.max(np.abs(numeric - numeric.T)) > 1e-12 * scale:
        raise InvalidMetricError("Metric must be symmetric")
    if abs(np.linalg.det(numeric)) <= 1e-12 * scale ** g.rows:
        raise InvalidMetricError("Metric must be invertible")
    return g.as_immutable()


def symbol_from_matrix(
    A: sympy.Matrix, indep: Sequence[str], k: int, name: Optional[str] = None
) -> SymbolTensor:
    """Split a matrix homogeneous of degree k in p_<indep> into sorted-index entries.

    The coefficient of the monomial p^I is the entry for the sorted index I,
    so that A(p) = sum over sorted I of p^I * entry(I).
    """
    p = _covector_symbols(indep)
    n = len(indep)
    polys = [[sympy.Poly(sympy.expand(entry), *p) for entry in row] for row in A.tolist()]
    entries = {}
    for combo in combinations_with_replacement(range(n), k):
        exponents = tuple(combo.count(i) for i in range(n))
        matrix = sympy.ImmutableMatrix(
            A.rows, A.cols, lambda a, b: polys[a][b].nth(*exponents)
        )
        if any(entry != 0 for entry in matrix):
            entries[combo] = matrix
    return SymbolTensor(n=n, m=A.cols, k=k, equations=A.rows, indep=list(indep), entries=entries, name=name)


def _covector_symbols(indep: Sequence[str]) -> List[sympy.Symbol]:
    return [VarRef.aux(f"p_{name}").symbol for name in indep]


def _raise_index(g_inv: sympy.Matrix, p: List[sympy.Symbol]) -> List[sympy.Expr]:
    n = len(p)
    return [sum(g_inv[a, b] * p[b] for b in range(n)) for a in range(n)]


def wave(metric=None, indep: Optional[Sequence[str]] = None) -> SymbolTensor:
    """Scalar wave operator g^{ij} d_i d_j: A(p) = g^{-1}(p, p)."""
    g = validate_metric(metric if metric is not None else minkowski(2))
    indep = list(indep or default_indep(g.rows))
    g_inv = g.inv()
    p = _covector_symbols(indep)
    norm = sum(p[a] * raised for a, raised in enumerate(_raise_index(g_inv, p)))
    return symbol_from_matrix(sympy.Matrix([[norm]]), indep, 2, name="wave")


def gamma_matrices() -> List[sympy.ImmutableMatrix]:
    """Dirac gamma matrices in the standard (Dirac) representation, signature (+,-,-,-)."""
    sigma = [
        sympy.Matrix([[0, 1], [1, 0]]),
        sympy.Matrix([[0, -sympy.I], [sympy.I, 0]]),
        sympy.Matrix([[1, 0], [0, -1]]),
    ]
    identity = sympy.eye(2)
    zero = sympy.zeros(2)
    gamma0 = sympy.BlockMatrix([[identity, zero], [zero, -identity]]).as_explicit()
    gammas = [gamma0.as_immutable()]
    for s in sigma:
        gammas.append(sympy.BlockMatrix([[zero, s], [-s, zero]]).as_explicit().as_immutable())
    return gammas


def dirac(indep: Optional[Sequence[str]] = None) -> SymbolTensor:
    """Dirac operator i gamma^mu d_mu: A(p) = i gamma^mu p_mu, 4x4 complex."""
    indep = list(indep or default_indep(4))
    p = _covector_symbols(indep)
    A = sympy.zeros(4, 4)
    for gamma, component in zip(gamma_matrices(), p):
        A += sympy.I * component * gamma
    return symbol_from_matrix(A, indep, 1, name="dirac")


def maxwell(metric=None, indep: Optional[Sequence[str]] = None) -> SymbolTensor:
    """Maxwell equations for the potential: A(p) = g^{-1}(p,p) I - p (x) p^sharp.

    Row j, column l holds g(p,p) delta_j^l - p^j p_l, so the raised covector
    p^sharp spans the right kernel.
    """
    g = validate_metric(metric if metric is not None else minkowski(4))
    indep = list(indep or default_indep(g.rows))
    n = g.rows
    p = _covector_symbols(indep)
    raised = _raise_index(g.inv(), p)
    norm = sum(p[a] * raised[a] for a in range(n))
    A = sympy.Matrix(n, n, lambda j, l: (norm if j == l else 0) - raised[j] * p[l])
    return symbol_from_matrix(A, indep, 2, name="maxwell")


def maxwell_lorenz(metric=None, indep: Optional[Sequence[str]] = None) -> SymbolTensor:
    """Maxwell in Lorenz gauge: A(p) = g^{-1}(p,p) I, degenerate exactly on null covectors."""
    g = validate_metric(metric if metric is not None else minkowski(4))
    indep = list(indep or default_indep(g.rows))
    p = _covector_symbols(indep)
    raised = _raise_index(g.inv(), p)
    norm = sum(p[a] * raised[a] for a in range(g.rows))
    return symbol_from_matrix(norm * sympy.eye(g.rows), indep, 2, name="maxwell_lorenz")


def symmetric_pairs(n: int) -> List[tuple]:
    """Index pairs (i, j) with i <= j in lexicographic order."""
    return [(i, j) for i in range(n) for j in range(i, n)]


def einstein_linearized(metric=None, indep: Optional[Sequence[str]] = None) -> SymbolTensor:
    """Principal part of the linearized Ricci tensor at a constant background metric.

    (A h)_ij = 1/2 (g(p,p) h_ij + p_i p_j tr h - p_i p^m h_mj - p_j p^m h_mi),
    acting on symmetric h ordered by ``symmetric_pairs``.
    """
    g = validate_metric(metric if metric is not None else minkowski(4))
    indep = list(indep or default_indep(g.rows))
    n = g.rows
    g_inv = g.inv()
    p = _covector_symbols(indep)
    raised = _raise_index(g_inv, p)
    norm = sum(p[a] * raised[a] for a in range(n))

    pairs = symmetric_pairs(n)
    unknowns = {pair: sympy.Symbol(f"h_{pair[0]}{pair[1]}") for pair in pairs}
    h = sympy.Matrix(n, n, lambda i, j: unknowns[(min(i, j), max(i, j))])
    trace = sum(g_inv[a, b] * h[a, b] for a in range(n) for b in range(n))

    rows = []
    for i, j in pairs:
        contracted_j = sum(raised[m] * h[m, j] for m in range(n))
        contracted_i = sum(raised[m] * h[m, i] for m in range(n))
        component = sympy.Rational(1, 2) * (
            norm * h[i, j] + p[i] * p[j] * trace - p[i] * contracted_j - p[j] * contracted_i
        )
        rows.append([sympy.expand(sympy.diff(component, unknowns[pair])) for pair in pairs])
    return symbol_from_matrix(sympy.Matrix(rows), indep, 2, name="einstein_linearized")


BUILTINS: Dict[str, Callable[..., SymbolTensor]] = {
    "wave": wave,
    "dirac": lambda metric=None, indep=None: dirac(indep),
    "maxwell": maxwell,
    "maxwell_lorenz": maxwell_lorenz,
    "einstein": einstein_linearized,
    "einstein_linearized": einstein_linearized,
}


def builtin_symbol(name: str, metric=None, indep: Optional[Sequence[str]] = None) -> SymbolTensor:
    """Construct a built-in symbol by name.

    Raises:
        ValueError: For unknown names
        InvalidMetricError: For non-symmetric or singular metrics
    """
    try:
        constructor = BUILTINS[name]
    except KeyError:
        raise ValueError(f"Unknown built-in symbol: {name} (choose from {', '.join(sorted(BUILTINS))})")
    logger.debug("building built-in symbol {}", name)
    return constructor(metric=metric, indep=indep)
