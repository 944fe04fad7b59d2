"""Principal symbols, characteristic variety, ranks and characteristic surfaces."""

from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from loguru import logger

from domain.errors import (
    NotBackgroundReducibleError,
    NotDeterminedError,
    VanishingGradientError,
    ZeroCovectorError,
)
from domain.models import Covector, JetEnv, MultiIndex, PDESystem, PolyForm, SymbolTensor, VarRef
from domain.sheets import SurfaceReport, SurfaceSample, WaveFrontPDE
from logic import linalg
from logic.expr import diff, evaluate, poly_normalize, substitute

EnvLike = Optional[Union[JetEnv, Dict[str, complex]]]


def _bindings(env: EnvLike) -> Dict[str, complex]:
    if env is None:
        return {}
    if isinstance(env, JetEnv):
        return dict(env.bindings)
    return dict(env)


def _covector(p) -> np.ndarray:
    if isinstance(p, Covector):
        p = p.p
    return np.asarray(p, dtype=complex)


def principal_symbol(system: PDESystem) -> SymbolTensor:
    """Principal symbol: entry(I)[alpha, b] = dF^alpha / du^b_I for every sorted |I| = k.

    Zero matrices are not stored.

    Examples:
        >>> from logic.parser import parse_system
        >>> st = principal_symbol(parse_system("indep x,t; dep u; eq d(u,t,t) - d(u,x,x) = 0;"))
        >>> sorted(st.entries)
        [(0, 0), (1, 1)]
    """
    k = system.order
    rows = len(system.equations)
    entries = {}
    for combo in combinations_with_replacement(range(system.n), k):
        index = MultiIndex(indices=combo)
        refs = [system.jet_ref(b, index) for b in range(system.m)]
        matrix = sympy.ImmutableMatrix(
            rows, system.m, lambda a, b: diff(system.equations[a], refs[b])
        )
        if any(entry != 0 for entry in matrix):
            entries[combo] = matrix
    logger.debug("principal symbol: {} non-zero order-{} entries", len(entries), k)
    return SymbolTensor(
        n=system.n,
        m=system.m,
        k=k,
        equations=rows,
        indep=system.indep,
        params=system.params,
        entries=entries,
    )


def tensor_components(st: SymbolTensor) -> Dict[Tuple[int, ...], sympy.ImmutableMatrix]:
    """Symmetric-tensor components A^{j1..jk} = mult(I)!/k! * dF/du_I, for display only."""
    return {
        index: (MultiIndex(indices=index).tensor_weight() * matrix).as_immutable()
        for index, matrix in st.entries.items()
    }


def symbolic_matrix(st: SymbolTensor) -> sympy.Matrix:
    """A(p) = sum over sorted I of p^I * entry(I), with p the aux symbols p_<indep>."""
    p = [ref.symbol for ref in st.covector_refs()]
    total = sympy.zeros(st.equations, st.m)
    for index, matrix in st.entries.items():
        monomial = sympy.Mul(*[p[i] for i in index])
        total += monomial * matrix
    return total


def numeric_entries(st: SymbolTensor, env: EnvLike = None) -> Dict[Tuple[int, ...], np.ndarray]:
    """Evaluate every stored entry matrix once.

    Raises:
        UnboundVariableError: If ``env`` misses a symbol used by the entries
    """
    bindings = _bindings(env)
    numeric = {}
    for index, matrix in st.entries.items():
        values = np.empty(matrix.shape, dtype=complex)
        for (a, b), entry in np.ndenumerate(np.array(matrix.tolist(), dtype=object)):
            values[a, b] = complex(entry) if entry.is_number else evaluate(entry, bindings)
        numeric[index] = values
    return numeric


def _assemble(st: SymbolTensor, numeric: Dict[Tuple[int, ...], np.ndarray], p: np.ndarray) -> np.ndarray:
    A = np.zeros((st.equations, st.m), dtype=complex)
    for index, values in numeric.items():
        A += np.prod(p[list(index)]) * values
    return A


def symbol_matrix(st: SymbolTensor, env: EnvLike, p) -> np.ndarray:
    """Numeric characteristic matrix A(p) at a jet point.

    Args:
        st: Principal symbol
        env: Bindings for every symbol occurring in the entries
        p: Covector components, one per independent variable

    Returns:
        np.ndarray: Complex matrix of shape (equations, m), homogeneous of degree k in p
    """
    return _assemble(st, numeric_entries(st, env), _covector(p))


def char_det(st: SymbolTensor, env: EnvLike = None) -> PolyForm:
    """Characteristic polynomial det A(p) as a PolyForm in p_<indep>.

    Bindings in ``env`` are substituted before the determinant is taken;
    unbound symbols stay symbolic.

    Raises:
        NotDeterminedError: If the number of equations differs from m
    """
    if st.equations != st.m:
        raise NotDeterminedError(st.equations, st.m)
    A = symbolic_matrix(st)
    bindings = _bindings(env)
    if bindings:
        A = A.applyfunc(lambda entry: substitute(entry, bindings))
    determinant = sympy.expand(A.det(method="berkowitz"))
    return poly_normalize(determinant, st.covector_refs())


def covector_rank(st: SymbolTensor, env: EnvLike, p, tol: float = linalg.DEFAULT_RANK_TOL) -> int:
    return linalg.numeric_rank(symbol_matrix(st, env, p), tol)


def generic_rank(
    st: SymbolTensor,
    env: EnvLike = None,
    seed: int = 0,
    trials: int = 16,
    tol: float = linalg.DEFAULT_RANK_TOL,
) -> int:
    """Maximum numeric rank of A(p) over seeded random real covectors.

    Components are drawn uniformly from [-1, 1].
    """
    numeric = numeric_entries(st, env)
    rng = np.random.default_rng(seed)
    covectors = rng.uniform(-1.0, 1.0, size=(trials, st.n))
    rank = max(linalg.numeric_rank(_assemble(st, numeric, p.astype(complex)), tol) for p in covectors)
    logger.debug("generic rank {} over {} trials (seed {})", rank, trials, seed)
    return rank


def is_char_covector(
    st: SymbolTensor, env: EnvLike, p, r: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> bool:
    """True when the rank of A(p) drops below the generic rank ``r``.

    Raises:
        ZeroCovectorError: If every component of ``p`` vanishes
    """
    p = _covector(p)
    if not np.any(p):
        raise ZeroCovectorError()
    return covector_rank(st, env, p, tol) < r


def left_null_space(A, tol: float = linalg.DEFAULT_RANK_TOL) -> np.ndarray:
    """Rows M with M A = 0; orthonormal, shape (q, m)."""
    return linalg.left_null_space(A, tol)


def symbol_kernel(st: SymbolTensor, env: EnvLike = None, tol: float = linalg.DEFAULT_RANK_TOL):
    """Kernel of the order-k symbol map v -> sum_I entry(I) v_I.

    Returns:
        Tuple[np.ndarray, int]: Orthonormal basis columns and the kernel dimension
            m * (number of order-k indices) - rank
    """
    numeric = numeric_entries(st, env)
    blocks = []
    for combo in combinations_with_replacement(range(st.n), st.k):
        blocks.append(numeric.get(combo, np.zeros((st.equations, st.m), dtype=complex)))
    stacked = np.hstack(blocks)
    dimension = stacked.shape[1] - linalg.numeric_rank(stacked, tol)
    basis = linalg.right_null_space(stacked, tol)
    return basis, dimension


def graph_surface(system: PDESystem, tau, time_axis: Optional[str] = None) -> sympy.Expr:
    """Defining function z = t - tau(y) of the graph surface t = tau(y)."""
    time_axis = time_axis or system.indep[-1]
    return sympy.Symbol(time_axis) - sympy.sympify(tau)


def check_surface(
    system: PDESystem,
    z,
    samples: Sequence[EnvLike],
    seed: int = 0,
    trials: int = 16,
    tol: float = linalg.DEFAULT_RANK_TOL,
) -> SurfaceReport:
    """Classify the surface z = 0 at each sample of jet data.

    Each sample must bind the independent variables (to locate the point on
    the surface) and every jet coordinate the symbol depends on.

    Raises:
        VanishingGradientError: If dz vanishes at a sample
    """
    st = principal_symbol(system)
    gradient = [diff(z, system.indep_ref(i)) for i in range(system.n)]
    reports: List[SurfaceSample] = []
    for number, env in enumerate(samples):
        bindings = _bindings(env)
        dz = np.array([evaluate(component, bindings) for component in gradient], dtype=complex)
        if not np.any(np.abs(dz) > 0):
            raise VanishingGradientError(number)
        r = generic_rank(st, bindings, seed=seed, trials=trials, tol=tol)
        A = symbol_matrix(st, bindings, dz)
        rank = linalg.numeric_rank(A, tol)
        reports.append(
            SurfaceSample(
                index=number,
                covector=tuple(dz),
                rank=rank,
                q=r - rank,
                characteristic=rank < r,
                constraints=left_null_space(A, tol),
            )
        )
    generic = max((sample.rank + sample.q for sample in reports), default=0)
    logger.debug("checked {} surface samples", len(reports))
    return SurfaceReport(generic_rank=generic, samples=reports)


def char_surface_pde(
    source: Union[PDESystem, SymbolTensor],
    background: EnvLike = None,
    time_axis: Optional[str] = None,
) -> WaveFrontPDE:
    """Wave-front PDE for t = tau(y): det A(dz) with p_t -> 1 and p_a -> -tau_a.

    Only the zero set of the result is meaningful; sign and scale are those of
    the determinant.

    Raises:
        NotBackgroundReducibleError: If jet coordinates remain after binding ``background``
    """
    st = principal_symbol(source) if isinstance(source, PDESystem) else source
    time_axis = time_axis or st.indep[-1]
    if time_axis not in st.indep:
        raise ValueError(f"Unknown time axis: {time_axis}")
    polynomial = char_det(st, background)

    # Step 1: Anything left besides p, x and parameters is a jet coordinate
    allowed = {ref.name for ref in st.covector_refs()} | set(st.indep) | set(st.params)
    residual = {
        sym.name for coeff in polynomial.terms.values() for sym in sympy.sympify(coeff).free_symbols
    } - allowed
    if residual:
        raise NotBackgroundReducibleError(residual)

    # Step 2: Substitute p = dt - tau_a dy^a
    base = [name for name in st.indep if name != time_axis]
    unknowns = [f"tau_{name}" for name in base]
    mapping = {VarRef.aux(f"p_{time_axis}"): 1}
    for name, unknown in zip(base, unknowns):
        mapping[VarRef.aux(f"p_{name}")] = -sympy.Symbol(unknown)
    expr = sympy.expand(substitute(polynomial.to_expr(), mapping))
    return WaveFrontPDE(expr=expr, time_axis=time_axis, base=base, unknowns=unknowns)
