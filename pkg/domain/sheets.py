"""Domain models for numeric results: strips, solution sheets, phase-space sheets, reports."""

import math
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


def _finite_tuple(value) -> Tuple[float, ...]:
    value = tuple(float(c) for c in value)
    if not all(math.isfinite(c) for c in value):
        raise ValueError("components must be finite")
    return value


class ContactPoint(BaseModel):
    """Point (x, u, p) of the first-jet space; p holds the jet coordinates u_i."""

    model_config = ConfigDict(frozen=True)

    x: Tuple[float, ...]
    u: float
    p: Tuple[float, ...]

    @field_validator("x", "p", mode="before")
    @classmethod
    def _finite(cls, value):
        return _finite_tuple(value)

    @field_validator("u")
    @classmethod
    def _finite_u(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("u must be finite")
        return value

    @property
    def n(self) -> int:
        return len(self.x)

    def state(self) -> np.ndarray:
        """State vector in the order used by characteristic fields: (x, p, u)."""
        return np.array([*self.x, *self.p, self.u], dtype=float)


class PhasePoint(BaseModel):
    """Point (x, p) of the cotangent bundle."""

    model_config = ConfigDict(frozen=True)

    x: Tuple[float, ...]
    p: Tuple[float, ...]

    @field_validator("x", "p", mode="before")
    @classmethod
    def _finite(cls, value):
        return _finite_tuple(value)

    def state(self) -> np.ndarray:
        return np.array([*self.x, *self.p], dtype=float)


class CauchyData(BaseModel):
    """Cauchy data: surface x = X(s), value mu(s) and a Newton guess for the gradient."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: List[str] = Field(..., description="Surface parameter names s1..s(n-1)")
    surface: List[Any] = Field(..., description="Expressions X^i(s), one per independent variable")
    value: Any = Field(..., description="Expression mu(s) for u on the surface")
    guess: List[Any] = Field(..., description="Initial gradient guess, numbers or expressions in s")
    z: Optional[Any] = Field(None, description="Defining function of the surface for the non-characteristic test")


class NewtonOptions(BaseModel):
    max_iter: int = Field(50, ge=1)
    tol: float = Field(1e-12, gt=0)


class StripSample(BaseModel):
    """One solved Cauchy strip point with its surface parameters."""

    model_config = ConfigDict(frozen=True)

    s: Tuple[float, ...]
    grid_index: Tuple[int, ...]
    point: ContactPoint
    residual: float = Field(..., description="Max of |F| and tangency residuals after Newton")
    characteristic: bool = Field(False, description="Converged with a singular strip Jacobian")


class Strip(BaseModel):
    """Initial manifold of the characteristic flow: solved samples over an s-grid."""

    model_config = ConfigDict(frozen=True)

    samples: List[StripSample]
    axes: List[List[float]] = Field(..., description="Sample values along each surface parameter")
    dropped: List[Tuple[float, ...]] = Field(default_factory=list, description="Characteristic samples left out")

    @property
    def n(self) -> int:
        return self.samples[0].point.n if self.samples else len(self.axes) + 1


class SolutionSheet(BaseModel):
    """Characteristic trajectories indexed by (strip sample, time step).

    ``nodes`` has shape (samples, steps + 1, 2n + 1) in (x, p, u) order.
    Truncated trajectories hold NaN past the step where they overflowed.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    nodes: Any
    s: Any = Field(..., description="Surface parameters per trajectory, shape (samples, n-1)")
    grid_index: Any = Field(..., description="Integer s-grid position per trajectory")
    axes: List[List[float]]
    t: Any
    h: float
    method: str = "RK4"
    truncated: Any = Field(..., description="Boolean flag per trajectory")

    @property
    def samples(self) -> int:
        return self.nodes.shape[0]

    def x(self) -> np.ndarray:
        return self.nodes[..., : self.n]

    def p(self) -> np.ndarray:
        return self.nodes[..., self.n : 2 * self.n]

    def u(self) -> np.ndarray:
        return self.nodes[..., 2 * self.n]


class EvalOptions(BaseModel):
    tol: float = Field(1e-12, gt=0)
    max_iter: int = Field(50, ge=1)
    dedupe_tol: float = Field(1e-6, gt=0, description="Branches closer than this in u and p are merged")
    merge_steps: float = Field(1e-3, gt=0, description="Branches closer than this many grid steps in (s, t) are merged")
    degree: int = Field(3, ge=1, le=7, description="Degree of the local interpolant along each sheet axis")


class Branch(BaseModel):
    """One sheet of a (possibly multivalued) solution above a query point."""

    u: float
    p: Tuple[float, ...]
    s: Tuple[float, ...]
    t: float
    residual: float


class EvalResult(BaseModel):
    x: Tuple[float, ...]
    branches: List[Branch] = Field(default_factory=list)
    out_of_domain: bool = False


class PhaseTrajectories(BaseModel):
    """Flow of a Hamiltonian field; ``nodes`` has shape (points, steps + 1, 2n)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    nodes: Any
    t: Any
    h: float
    method: str = "RK4"
    truncated: Any


class LagrangianSheet(BaseModel):
    """Swept Lagrangian submanifold over a seed grid times the flow parameter."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    nodes: Any = Field(..., description="Shape (*seed_shape, steps + 1, 2n)")
    axes: List[List[float]] = Field(
        default_factory=list, description="Seed parameter values per axis; empty for explicit point seeds"
    )
    t: Any
    h: float
    E: float
    method: str = "RK4"
    truncated: Any

    @property
    def seed_shape(self) -> Tuple[int, ...]:
        return tuple(self.nodes.shape[:-2])

    @property
    def is_grid(self) -> bool:
        """True when the seed axes are parameter axes (not a bare list of points)."""
        return len(self.axes) == len(self.seed_shape) and len(self.axes) > 0

    def flat_nodes(self) -> np.ndarray:
        return self.nodes.reshape(-1, self.nodes.shape[-2], self.nodes.shape[-1])


class SurfaceSample(BaseModel):
    index: int
    covector: Tuple[Any, ...]
    rank: int
    q: int
    characteristic: bool
    constraints: Any = Field(None, description="Rows M with M A(dz) = 0")


class SurfaceReport(BaseModel):
    generic_rank: int
    samples: List[SurfaceSample]
    note: str = (
        "The verdict depends on the supplied jet data on the surface, not only on the surface itself."
    )

    @property
    def characteristic(self) -> List[bool]:
        return [sample.characteristic for sample in self.samples]


class WaveFrontPDE(BaseModel):
    """First-order PDE for a wave front t = tau(y), as an expression in tau_a."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    expr: Any
    time_axis: str
    base: List[str] = Field(..., description="Remaining independent variables y")
    unknowns: List[str] = Field(..., description="Gradient symbols tau_<y>")


class SeedFamily(BaseModel):
    """Initial data for a Lagrangian sweep: a parametrized family or explicit points."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: List[str] = Field(default_factory=list)
    x: List[Any] = Field(default_factory=list, description="Expressions x^i(s)")
    p: List[Any] = Field(default_factory=list, description="Expressions p_i(s)")
    axes: List[List[float]] = Field(default_factory=list)
    points: List[PhasePoint] = Field(default_factory=list)

    @property
    def is_parametric(self) -> bool:
        return not self.points
