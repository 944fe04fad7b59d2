"""Assembly of the analyses behind each command: symbols, ranks, surfaces, solutions, sweeps."""

from typing import Any, Dict, List, Optional, Sequence

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from config.settings import Settings, get_settings
from domain.errors import PreconditionError, ZeroCovectorError
from domain.models import HamiltonianSystem, JetEnv, JetLift, PDESystem, SymbolTensor
from domain.sheets import (
    CauchyData,
    EvalOptions,
    EvalResult,
    LagrangianSheet,
    NewtonOptions,
    SeedFamily,
    SolutionSheet,
    Strip,
    SurfaceReport,
    WaveFrontPDE,
)
from logic import hamjac, linalg
from logic.charsolve import (
    build_strip,
    eval_solution,
    first_integral_drift,
    integrate_characteristics,
    noncharacteristic_check,
)
from logic.contact import J1Space
from logic.expr import substitute
from logic.parser import parse_expression
from logic.symbol import (
    check_surface,
    char_surface_pde,
    covector_rank,
    generic_rank,
    graph_surface,
    left_null_space,
    symbol_matrix,
)
from pipeline.loader import EnvDocument, bind_system, parse_bindings, parse_number


class RankReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    generic_rank: int
    seed: int
    trials: int
    covector: Optional[List[Any]] = None
    rank: Optional[int] = None
    q: Optional[int] = None
    characteristic: Optional[bool] = None
    null_space: Any = Field(None, description="Left null space of A(p) at the covector")


class SolveOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    strip: Strip
    sheet: SolutionSheet
    noncharacteristic: Optional[List[float]] = None
    drift: Any = Field(..., description="Per-trajectory max |F|")
    evaluations: List[EvalResult] = Field(default_factory=list)


class SweepOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    sheet: LagrangianSheet
    isotropy_defect: float
    energy_deviation: float
    energy_drift: Any
    lift: JetLift


def bound_symbol(st: SymbolTensor, env: Optional[JetEnv] = None) -> SymbolTensor:
    """Symbol with the env bindings substituted into every entry."""
    if env is None or not env.bindings:
        return st
    values = {name: v.real if v.imag == 0 else v for name, v in env.bindings.items()}
    entries = {
        index: matrix.applyfunc(lambda entry: substitute(entry, values)).as_immutable()
        for index, matrix in st.entries.items()
    }
    return st.model_copy(update={"entries": entries})


def rank_report(
    st: SymbolTensor,
    env: Optional[JetEnv],
    covector: Optional[Sequence[Any]] = None,
    seed: int = 0,
    trials: int = 16,
    tol: float = linalg.DEFAULT_RANK_TOL,
) -> RankReport:
    """Generic rank and, when a covector is given, the pointwise rank and constraints there."""
    r = generic_rank(st, env, seed=seed, trials=trials, tol=tol)
    if covector is None:
        return RankReport(generic_rank=r, seed=seed, trials=trials)
    p = [parse_number(c) for c in covector]
    if len(p) != st.n:
        raise PreconditionError(f"Covector needs {st.n} components, got {len(p)}")
    if not any(p):
        raise ZeroCovectorError()
    rank = covector_rank(st, env, p, tol)
    return RankReport(
        generic_rank=r,
        seed=seed,
        trials=trials,
        covector=p,
        rank=rank,
        q=r - rank,
        characteristic=rank < r,
        null_space=left_null_space(symbol_matrix(st, env, p), tol),
    )


def surface_report(
    system: PDESystem,
    surface: str,
    env: JetEnv,
    document: EnvDocument,
    graph: bool = False,
    seed: int = 0,
    trials: int = 16,
    tol: float = linalg.DEFAULT_RANK_TOL,
) -> SurfaceReport:
    """Characteristic report for z = 0 (or the graph t = tau(y) when ``graph`` is set).

    Every sample in the env document is merged over the base bindings; with no
    samples the base bindings form the only sample.
    """
    expression = parse_expression(surface, system)
    z = graph_surface(system, expression, document.time_axis) if graph else expression
    samples = [env.merged(parse_bindings(sample, system)) for sample in document.samples] or [env]
    return check_surface(system, z, samples, seed=seed, trials=trials, tol=tol)


def wave_front(
    source,
    env: Optional[JetEnv] = None,
    time_axis: Optional[str] = None,
) -> WaveFrontPDE:
    return char_surface_pde(source, env, time_axis)


def solve_cauchy(
    system: PDESystem,
    cauchy: CauchyData,
    axes: List[List[float]],
    bindings: Optional[Dict[str, complex]] = None,
    h: Optional[float] = None,
    steps: Optional[int] = None,
    queries: Sequence[Sequence[float]] = (),
    settings: Optional[Settings] = None,
) -> SolveOutcome:
    """Strip, characteristic sheet and query branches for a scalar first-order equation.

    Args:
        system: Parsed equation F = 0 with one unknown
        cauchy: Surface, value and gradient guess
        axes: Sample values per surface parameter
        bindings: Parameter values substituted into F first
        h: Step size (settings default when omitted)
        steps: Number of steps (settings default when omitted)
        queries: Base points to evaluate every branch at
        settings: Numeric tolerances

    Returns:
        SolveOutcome: Strip, sheet, drift, non-characteristic values and evaluations
    """
    settings = settings or get_settings()
    h = h if h is not None else settings.h
    steps = steps if steps is not None else settings.steps

    # Step 1: Bind parameters and set up J^1
    system = bind_system(system, bindings or {})
    space = J1Space.from_system(system)
    F = space.check(system.equations[0])
    if system.params:
        logger.debug("parameters {} remain symbolic", system.params)

    # Step 2: Build the strip
    strip = build_strip(
        space,
        F,
        cauchy,
        axes,
        newton=NewtonOptions(max_iter=settings.newton_max_iter, tol=settings.newton_tol),
        characteristic_tol=settings.characteristic_tol,
        transversality_angle=settings.transversality_angle,
    )
    noncharacteristic = None
    if cauchy.z is not None:
        noncharacteristic = noncharacteristic_check(space, F, strip, cauchy.z)
        degenerate = [v for v in noncharacteristic if abs(v) <= settings.strip_tol]
        if degenerate:
            logger.warning("{} strip samples fail the non-characteristic test", len(degenerate))

    # Step 3: Integrate and evaluate
    sheet = integrate_characteristics(space, F, strip, h=h, steps=steps, overflow_guard=settings.overflow_guard)
    drift = first_integral_drift(space, F, sheet)
    options = EvalOptions(tol=settings.newton_tol, max_iter=settings.newton_max_iter)
    evaluations = [eval_solution(sheet, query, options) for query in queries]
    return SolveOutcome(
        strip=strip, sheet=sheet, noncharacteristic=noncharacteristic, drift=drift, evaluations=evaluations
    )


def sweep(
    system: HamiltonianSystem,
    seed: SeedFamily,
    h: Optional[float] = None,
    steps: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> SweepOutcome:
    """Lagrangian sweep with its isotropy and energy report."""
    settings = settings or get_settings()
    h = h if h is not None else settings.h
    steps = steps if steps is not None else settings.steps
    sheet = hamjac.sweep_lagrangian(
        system,
        seed,
        h=h,
        steps=steps,
        energy_tol=settings.energy_tol,
        isotropy_tol=settings.isotropy_tol,
        transversality_angle=settings.transversality_angle,
        overflow_guard=settings.overflow_guard,
    )
    defect = hamjac.isotropy_defect(sheet)
    if defect > settings.isotropy_tol:
        logger.warning("Swept sheet isotropy defect {:.3e} exceeds {:.1e}", defect, settings.isotropy_tol)
    return SweepOutcome(
        sheet=sheet,
        isotropy_defect=defect,
        energy_deviation=hamjac.energy_deviation(system, sheet.nodes),
        energy_drift=hamjac.energy_drift(system, sheet.flat_nodes()),
        lift=hamjac.lift_to_jet(system),
    )


def hamiltonian_from_system(system: PDESystem, env: Optional[JetEnv] = None, time_axis: Optional[str] = None) -> HamiltonianSystem:
    """Bicharacteristic Hamiltonian of a system's wave-front PDE."""
    return HamiltonianSystem.from_wave_front(wave_front(system, env, time_axis))
