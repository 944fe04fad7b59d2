"""Machine-readable output: pydantic payload models, byte-stable JSON and pandas CSV frames."""

import json
import math
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Type, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from domain.models import HamiltonianSystem, MultiIndex, PDESystem, PolyForm, SymbolTensor
from domain.sheets import EvalResult, LagrangianSheet, SolutionSheet, SurfaceReport, WaveFrontPDE
from logic.formatting import dsl_names, expr_to_dsl, format_dimensions, format_number, format_system
from logic.symbol import tensor_components
from pipeline.analysis import RankReport, SolveOutcome, SweepOutcome

JsonNumber = Union[float, List[float]]


class SystemPayload(BaseModel):
    canonical: str = Field(..., description="Canonical DSL text; parses back to the same system")
    dimensions: str
    n: int
    m: int
    k: int
    determined: bool
    indep: List[str]
    dep: List[str]
    params: List[str]
    equations: List[str]


class SymbolEntryPayload(BaseModel):
    index: str = Field(..., description="Multi-index label such as ttx")
    matrix: List[List[str]] = Field(..., description="dF/du_I for the sorted multi-index")
    tensor: List[List[str]] = Field(..., description="Symmetric-tensor components mult(I)!/k! dF/du_I")


class SymbolPayload(BaseModel):
    name: Optional[str] = None
    n: int
    m: int
    k: int
    equations: int
    indep: List[str]
    entries: List[SymbolEntryPayload]


class PolyTermPayload(BaseModel):
    exponents: List[int]
    coefficient: str


class CharpolyPayload(BaseModel):
    variables: List[str]
    polynomial: str
    degrees: List[int]
    homogeneous: bool
    terms: List[PolyTermPayload]


class RankPayload(BaseModel):
    generic_rank: int
    seed: int
    trials: int
    covector: Optional[List[JsonNumber]] = None
    rank: Optional[int] = None
    q: Optional[int] = None
    characteristic: Optional[bool] = None
    null_space: Optional[List[List[JsonNumber]]] = None


class SurfaceSamplePayload(BaseModel):
    index: int
    covector: List[JsonNumber]
    rank: int
    q: int
    characteristic: bool
    constraints: List[List[JsonNumber]]


class SurfacePayload(BaseModel):
    generic_rank: int
    characteristic: List[bool]
    note: str
    samples: List[SurfaceSamplePayload]


class CharPDEPayload(BaseModel):
    expr: str
    time_axis: str
    base: List[str]
    unknowns: List[str]
    hamiltonian: str = Field(..., description="Bicharacteristic Hamiltonian with tau_a -> p_a, E = 0")


class NodePayload(BaseModel):
    t: float
    x: List[float]
    u: Optional[float] = None
    p: List[float]


class TrajectoryPayload(BaseModel):
    s: List[float]
    truncated: bool
    nodes: List[NodePayload]


class BranchPayload(BaseModel):
    u: float
    p: List[float]
    s: List[float]
    t: float
    residual: float


class QueryPayload(BaseModel):
    x: List[float]
    out_of_domain: bool
    branches: List[BranchPayload]


class SolvePayload(BaseModel):
    h: float
    method: str
    steps: int
    trajectories: List[TrajectoryPayload]
    dropped: List[List[float]]
    first_integral_drift: Optional[float] = None
    noncharacteristic: Optional[List[float]] = None
    queries: List[QueryPayload] = Field(default_factory=list)


class HJFlowPayload(BaseModel):
    h: float
    method: str
    steps: int
    E: float
    hamiltonian: str
    lifted: str = Field(..., description="Hamilton-Jacobi equation H(x, u_i) - E on J^1")
    degenerate_lift: bool
    trajectories: List[TrajectoryPayload]
    isotropy_defect: float
    energy_deviation: Optional[float] = None
    energy_drift: Optional[float] = None


PAYLOADS: Dict[str, Type[BaseModel]] = {
    "parse": SystemPayload,
    "symbol": SymbolPayload,
    "charpoly": CharpolyPayload,
    "rank": RankPayload,
    "check-surface": SurfacePayload,
    "charpde": CharPDEPayload,
    "solve": SolvePayload,
    "hjflow": HJFlowPayload,
    "builtin": SymbolPayload,
}


def _finite(value) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def _numbers(values) -> List[JsonNumber]:
    return [format_number(v) for v in np.asarray(values).ravel()]


def _matrix(rows) -> List[List[JsonNumber]]:
    return [_numbers(row) for row in np.atleast_2d(np.asarray(rows))] if np.size(rows) else []


def to_json(payload: BaseModel) -> str:
    """Byte-stable JSON: sorted keys, shortest round-trip floats, no null fields."""
    return json.dumps(payload.model_dump(mode="json", exclude_none=True), sort_keys=True, indent=2) + "\n"


def system_payload(system: PDESystem) -> SystemPayload:
    names = dsl_names(system)
    return SystemPayload(
        canonical=format_system(system),
        dimensions=format_dimensions(system),
        n=system.n,
        m=system.m,
        k=system.order,
        determined=system.is_determined,
        indep=system.indep,
        dep=system.dep,
        params=system.params,
        equations=[expr_to_dsl(e, names) for e in system.equations],
    )


def symbol_payload(st: SymbolTensor, names: Optional[Dict[str, str]] = None) -> SymbolPayload:
    tensor = tensor_components(st)
    entries = []
    for index in sorted(st.entries):
        label = MultiIndex(indices=index).label(st.indep)
        entries.append(
            SymbolEntryPayload(
                index=label,
                matrix=[[expr_to_dsl(e, names) for e in row] for row in st.entries[index].tolist()],
                tensor=[[expr_to_dsl(e, names) for e in row] for row in tensor[index].tolist()],
            )
        )
    return SymbolPayload(
        name=st.name, n=st.n, m=st.m, k=st.k, equations=st.equations, indep=st.indep, entries=entries
    )


def charpoly_payload(poly: PolyForm, names: Optional[Dict[str, str]] = None) -> CharpolyPayload:
    return CharpolyPayload(
        variables=[v.name for v in poly.variables],
        polynomial=expr_to_dsl(poly.to_expr(), names),
        degrees=poly.degrees(),
        homogeneous=poly.is_homogeneous(),
        terms=[
            PolyTermPayload(exponents=list(exponents), coefficient=expr_to_dsl(coeff, names))
            for exponents, coeff in poly.terms.items()
        ],
    )


def rank_payload(report: RankReport) -> RankPayload:
    return RankPayload(
        generic_rank=report.generic_rank,
        seed=report.seed,
        trials=report.trials,
        covector=_numbers(report.covector) if report.covector is not None else None,
        rank=report.rank,
        q=report.q,
        characteristic=report.characteristic,
        null_space=_matrix(report.null_space) if report.null_space is not None else None,
    )


def surface_payload(report: SurfaceReport) -> SurfacePayload:
    return SurfacePayload(
        generic_rank=report.generic_rank,
        characteristic=report.characteristic,
        note=report.note,
        samples=[
            SurfaceSamplePayload(
                index=sample.index,
                covector=_numbers(sample.covector),
                rank=sample.rank,
                q=sample.q,
                characteristic=sample.characteristic,
                constraints=_matrix(sample.constraints),
            )
            for sample in report.samples
        ],
    )


def charpde_payload(pde: WaveFrontPDE, hamiltonian: HamiltonianSystem) -> CharPDEPayload:
    return CharPDEPayload(
        expr=expr_to_dsl(pde.expr),
        time_axis=pde.time_axis,
        base=pde.base,
        unknowns=pde.unknowns,
        hamiltonian=expr_to_dsl(hamiltonian.H),
    )


def _node(t: float, state: np.ndarray, n: int, with_u: bool) -> NodePayload:
    return NodePayload(
        t=float(t),
        x=[float(v) for v in state[:n]],
        p=[float(v) for v in state[n : 2 * n]],
        u=float(state[2 * n]) if with_u else None,
    )


def _trajectory(s, nodes: np.ndarray, t: np.ndarray, truncated: bool, n: int, with_u: bool) -> TrajectoryPayload:
    finite = np.all(np.isfinite(nodes), axis=1)
    return TrajectoryPayload(
        s=[float(v) for v in s],
        truncated=bool(truncated),
        nodes=[_node(t[k], nodes[k], n, with_u) for k in np.flatnonzero(finite)],
    )


def _query(result: EvalResult) -> QueryPayload:
    return QueryPayload(
        x=list(result.x),
        out_of_domain=result.out_of_domain,
        branches=[
            BranchPayload(u=b.u, p=list(b.p), s=list(b.s), t=b.t, residual=b.residual) for b in result.branches
        ],
    )


def solve_payload(outcome: SolveOutcome) -> SolvePayload:
    sheet = outcome.sheet
    trajectories = [
        _trajectory(sheet.s[row], sheet.nodes[row], sheet.t, sheet.truncated[row], sheet.n, True)
        for row in range(sheet.samples)
    ]
    return SolvePayload(
        h=sheet.h,
        method=sheet.method,
        steps=len(sheet.t) - 1,
        trajectories=trajectories,
        dropped=[list(s) for s in outcome.strip.dropped],
        first_integral_drift=_finite(np.nanmax(outcome.drift)) if np.any(np.isfinite(outcome.drift)) else None,
        noncharacteristic=outcome.noncharacteristic,
        queries=[_query(result) for result in outcome.evaluations],
    )


def seed_coordinates(sheet: LagrangianSheet) -> np.ndarray:
    """Seed parameters per flattened seed sample; the sample number for point seeds."""
    if sheet.is_grid:
        return np.array(list(product(*sheet.axes)), dtype=float).reshape(-1, len(sheet.axes))
    count = int(np.prod(sheet.seed_shape)) if sheet.seed_shape else 1
    return np.arange(count, dtype=float).reshape(-1, 1)


def hjflow_payload(outcome: SweepOutcome, system: HamiltonianSystem) -> HJFlowPayload:
    sheet = outcome.sheet
    flat = sheet.flat_nodes()
    truncated = np.asarray(sheet.truncated).reshape(-1)
    seeds = seed_coordinates(sheet)
    drift = np.asarray(outcome.energy_drift, dtype=float)
    return HJFlowPayload(
        h=sheet.h,
        method=sheet.method,
        steps=len(sheet.t) - 1,
        E=sheet.E,
        hamiltonian=expr_to_dsl(system.H),
        lifted=expr_to_dsl(outcome.lift.F),
        degenerate_lift=outcome.lift.degenerate,
        trajectories=[
            _trajectory(seeds[row], flat[row], sheet.t, truncated[row], sheet.n, False)
            for row in range(flat.shape[0])
        ],
        isotropy_defect=outcome.isotropy_defect,
        energy_deviation=_finite(outcome.energy_deviation),
        energy_drift=_finite(np.nanmax(drift)) if np.any(np.isfinite(drift)) else None,
    )


def _seed_columns(count: int) -> List[str]:
    return ["s"] if count == 1 else [f"s{i + 1}" for i in range(count)]


def solution_frame(sheet: SolutionSheet) -> pd.DataFrame:
    """One row per finite node with columns x1..xn, u, p1..pn, s, t."""
    n = sheet.n
    steps = sheet.nodes.shape[1]
    rows = sheet.nodes.reshape(-1, 2 * n + 1)
    s = np.repeat(np.asarray(sheet.s, dtype=float), steps, axis=0)
    frame = pd.DataFrame(rows[:, :n], columns=[f"x{i + 1}" for i in range(n)])
    frame["u"] = rows[:, 2 * n]
    for i in range(n):
        frame[f"p{i + 1}"] = rows[:, n + i]
    for column, values in zip(_seed_columns(s.shape[1]), s.T):
        frame[column] = values
    frame["t"] = np.tile(np.asarray(sheet.t, dtype=float), sheet.samples)
    return frame.dropna().reset_index(drop=True)


def lagrangian_frame(sheet: LagrangianSheet) -> pd.DataFrame:
    """One row per finite node with columns x1..xn, p1..pn, s, t (u is omitted)."""
    n = sheet.n
    flat = sheet.flat_nodes()
    samples, steps = flat.shape[:2]
    rows = flat.reshape(-1, 2 * n)
    frame = pd.DataFrame(rows[:, :n], columns=[f"x{i + 1}" for i in range(n)])
    for i in range(n):
        frame[f"p{i + 1}"] = rows[:, n + i]
    seeds = np.repeat(seed_coordinates(sheet), steps, axis=0)
    for column, values in zip(_seed_columns(seeds.shape[1]), seeds.T):
        frame[column] = values
    frame["t"] = np.tile(np.asarray(sheet.t, dtype=float), samples)
    return frame.dropna().reset_index(drop=True)


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    frame.to_csv(path, index=False, float_format="%.17g")


def schema_documents() -> Dict[str, str]:
    """JSON schema text per command, keyed by file name."""
    return {
        f"{command}.json": json.dumps(model.model_json_schema(), sort_keys=True, indent=2) + "\n"
        for command, model in PAYLOADS.items()
    }


def write_schemas(directory: Union[str, Path]) -> List[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in schema_documents().items():
        path = directory / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
