"""Hamilton-Jacobi equations: Hamiltonian flow, Lagrangian sweeps and the lift to J^1."""

from itertools import combinations
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from loguru import logger

from domain.errors import HamiltonianError, IsotropyViolationError, OffShellSeedError, PreconditionError
from domain.models import HamiltonianSystem, JetLift, MultiIndex, jet_name
from domain.sheets import LagrangianSheet, PhasePoint, PhaseTrajectories, SeedFamily
from logic.charsolve import sample_grid
from logic.contact import J1Space
from logic.expr import compile_numeric, diff, free_names, substitute
from logic.integrate import DEFAULT_OVERFLOW_GUARD, rk4


def bound_hamiltonian(system: HamiltonianSystem) -> sympy.Expr:
    """H with parameter values substituted.

    Raises:
        HamiltonianError: If H uses anything besides x, p_<x> and bound parameters
    """
    H = substitute(sympy.sympify(system.H), system.params)
    allowed = {ref.name for ref in system.x_refs} | {ref.name for ref in system.p_refs}
    foreign = free_names(H) - allowed
    if foreign:
        raise HamiltonianError(
            f"H may depend only on x and p; it references {', '.join(sorted(foreign))}"
        )
    return H


def hamiltonian_field(system: HamiltonianSystem) -> List[sympy.Expr]:
    """Components (x' = H_p, p' = -H_x) of the Hamiltonian vector field.

    Examples:
        >>> sys = HamiltonianSystem(indep=["q"], H=sympy.sympify("p_q**2 + q**2"))
        >>> hamiltonian_field(sys)
        [2*p_q, -2*q]
    """
    H = bound_hamiltonian(system)
    x_dot = [diff(H, p) for p in system.p_refs]
    p_dot = [-diff(H, x) for x in system.x_refs]
    return [*x_dot, *p_dot]


class CompiledHamiltonian:
    def __init__(self, system: HamiltonianSystem):
        self.system = system
        self.H = bound_hamiltonian(system)
        variables = [*system.x_refs, *system.p_refs]
        self._field = compile_numeric(hamiltonian_field(system), variables)
        self._energy = compile_numeric([self.H], variables)

    def rhs(self, states: np.ndarray) -> np.ndarray:
        return np.real(self._field(states)).astype(float)

    def energy(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        flat = states.reshape(-1, states.shape[-1])
        values = np.full(flat.shape[0], np.nan)
        finite = np.all(np.isfinite(flat), axis=1)
        if np.any(finite):
            values[finite] = np.real(self._energy(flat[finite]))[:, 0]
        return values.reshape(states.shape[:-1])


def _as_states(points: Union[Sequence[PhasePoint], np.ndarray], n: int) -> np.ndarray:
    if isinstance(points, np.ndarray):
        states = np.atleast_2d(points.astype(float))
    else:
        states = np.array([point.state() for point in points], dtype=float)
    if states.ndim != 2 or states.shape[1] != 2 * n:
        raise PreconditionError(f"Phase points need {2 * n} components")
    return states


def flow(
    system: HamiltonianSystem,
    points: Union[Sequence[PhasePoint], np.ndarray],
    h: float = 1e-3,
    steps: int = 1000,
    overflow_guard: float = DEFAULT_OVERFLOW_GUARD,
) -> PhaseTrajectories:
    """RK4 trajectories of X_H from every starting point."""
    compiled = CompiledHamiltonian(system)
    states = _as_states(points, system.n)
    nodes, truncated = rk4(compiled.rhs, states, h, steps, overflow_guard)
    return PhaseTrajectories(n=system.n, nodes=nodes, t=h * np.arange(steps + 1), h=h, truncated=truncated)


def seed_states(system: HamiltonianSystem, seed: SeedFamily) -> Tuple[np.ndarray, List[List[float]]]:
    """Seed samples as an array of shape (*seed_shape, 2n) plus the parameter axes."""
    n = system.n
    if not seed.is_parametric:
        return _as_states(seed.points, n), []
    if len(seed.x) != n or len(seed.p) != n:
        raise PreconditionError(f"Seed family needs {n} x and {n} p expressions")
    if len(seed.params) != n - 1 or len(seed.axes) != n - 1:
        raise PreconditionError(f"Seed family needs {n - 1} parameters with sample axes")
    params = [sympy.Symbol(name) for name in seed.params]
    function = compile_numeric([sympy.sympify(e) for e in [*seed.x, *seed.p]], params)
    grid = sample_grid(seed.axes)
    values = np.real(function(np.array([s for _, s in grid], dtype=float).reshape(len(grid), n - 1)))
    shape = tuple(len(axis) for axis in seed.axes)
    return values.astype(float).reshape(shape + (2 * n,)), [list(map(float, a)) for a in seed.axes]


def symplectic_pairing(v: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    """Omega(v, w) = sum_i (v_{p_i} w_{x^i} - w_{p_i} v_{x^i}) over the last axis."""
    return np.sum(v[..., n:] * w[..., :n] - w[..., n:] * v[..., :n], axis=-1)


def _tangents(grid: np.ndarray, coordinates: Sequence[Optional[np.ndarray]]) -> List[np.ndarray]:
    """Finite-difference tangents along every grid axis that has coordinates and two samples."""
    tangents = []
    for axis, coords in enumerate(coordinates):
        if coords is None or grid.shape[axis] < 2:
            continue
        edge_order = 2 if grid.shape[axis] >= 3 else 1
        tangents.append(np.gradient(grid, coords, axis=axis, edge_order=edge_order))
    return tangents


def _max_pairing(tangents: List[np.ndarray], n: int) -> float:
    defect = 0.0
    for a, b in combinations(range(len(tangents)), 2):
        values = np.abs(symplectic_pairing(tangents[a], tangents[b], n))
        if np.any(np.isfinite(values)):
            defect = max(defect, float(np.nanmax(values)))
    return defect


def isotropy_defect(sheet: LagrangianSheet) -> float:
    """Max |Omega| between finite-difference tangents over all grid nodes.

    Central differences inside the grid, second-order one-sided at edges.
    Bare point seeds contribute no direction, so n = 1 sheets give 0.
    """
    seed_coordinates: List[Optional[np.ndarray]]
    if sheet.is_grid:
        seed_coordinates = [np.asarray(axis, dtype=float) for axis in sheet.axes]
    else:
        seed_coordinates = [None] * len(sheet.seed_shape)
    coordinates = seed_coordinates + [np.asarray(sheet.t, dtype=float)]
    return _max_pairing(_tangents(sheet.nodes, coordinates), sheet.n)


def _check_transversal(
    compiled: CompiledHamiltonian, states: np.ndarray, axes: List[List[float]], threshold: float
) -> None:
    velocity = compiled.rhs(states.reshape(-1, states.shape[-1]))
    speeds = np.linalg.norm(velocity, axis=1)
    if np.any(speeds == 0):
        logger.warning("X_H vanishes at {} seed samples", int(np.sum(speeds == 0)))
    if not axes:
        return
    tangents = _tangents(states, [np.asarray(a, dtype=float) for a in axes])
    if not tangents:
        return
    span = np.stack([t.reshape(-1, t.shape[-1]) for t in tangents], axis=-1)
    smallest = np.inf
    for row in range(span.shape[0]):
        if speeds[row] == 0:
            continue
        basis, _ = np.linalg.qr(span[row])
        normal = velocity[row] - basis @ (basis.T @ velocity[row])
        smallest = min(smallest, float(np.arcsin(min(1.0, np.linalg.norm(normal) / speeds[row]))))
    if smallest < threshold:
        logger.warning("Seed nearly tangent to X_H (smallest angle {:.2e} rad)", smallest)


def sweep_lagrangian(
    system: HamiltonianSystem,
    seed: SeedFamily,
    h: float = 1e-3,
    steps: int = 1000,
    energy_tol: float = 1e-8,
    isotropy_tol: float = 1e-6,
    transversality_angle: float = 1e-6,
    overflow_guard: float = DEFAULT_OVERFLOW_GUARD,
) -> LagrangianSheet:
    """Move an isotropic seed on H = E along the flow of X_H.

    Raises:
        OffShellSeedError: Listing every seed sample with |H - E| > energy_tol
        IsotropyViolationError: If the seed itself is not isotropic
    """
    compiled = CompiledHamiltonian(system)
    states, axes = seed_states(system, seed)
    shape = states.shape[:-1]

    # Step 1: Seed must lie on the energy level
    deviation = np.abs(compiled.energy(states) - system.E).reshape(-1)
    offenders = [(i, float(d)) for i, d in enumerate(deviation) if not d <= energy_tol]
    if offenders:
        raise OffShellSeedError(offenders)

    # Step 2: Seed must be isotropic
    if axes:
        defect = _max_pairing(_tangents(states, [np.asarray(a, dtype=float) for a in axes]), system.n)
        if defect > isotropy_tol:
            raise IsotropyViolationError(defect, isotropy_tol)
    _check_transversal(compiled, states, axes, transversality_angle)

    # Step 3: Flow every sample
    flat = states.reshape(-1, 2 * system.n)
    nodes, truncated = rk4(compiled.rhs, flat, h, steps, overflow_guard)
    logger.debug("swept {} seed samples over {} steps", flat.shape[0], steps)
    return LagrangianSheet(
        n=system.n,
        nodes=nodes.reshape(shape + nodes.shape[1:]),
        axes=axes,
        t=h * np.arange(steps + 1),
        h=h,
        E=system.E,
        truncated=truncated.reshape(shape),
    )


def energy_drift(system: HamiltonianSystem, nodes: np.ndarray) -> np.ndarray:
    """Per-trajectory max |H(node) - H(start)| for nodes of shape (..., steps + 1, 2n)."""
    energy = CompiledHamiltonian(system).energy(nodes)
    drift = np.abs(energy - energy[..., :1])
    return np.nanmax(drift, axis=-1)


def energy_deviation(system: HamiltonianSystem, nodes: np.ndarray) -> float:
    """Max |H - E| over all finite nodes."""
    energy = CompiledHamiltonian(system).energy(nodes)
    return float(np.nanmax(np.abs(energy - system.E)))


def lift_to_jet(system: HamiltonianSystem, dep: str = "u") -> JetLift:
    """Hamilton-Jacobi equation F = H(x, u_i) - E on J^1, flagged when F vanishes identically."""
    H = bound_hamiltonian(system)
    mapping = {
        p.symbol: sympy.Symbol(jet_name(dep, MultiIndex.of(i), system.indep))
        for i, p in enumerate(system.p_refs)
    }
    F = sympy.expand(H.xreplace(mapping) - sympy.nsimplify(system.E))
    degenerate = F == 0
    if degenerate:
        logger.warning("Lifted Hamilton-Jacobi equation vanishes identically")
    return JetLift(indep=system.indep, dep=dep, F=F, degenerate=degenerate)


def lift_space(lift: JetLift) -> J1Space:
    return J1Space(lift.indep, lift.dep)


def graph_deviation(system: HamiltonianSystem, f, nodes: np.ndarray) -> float:
    """Max over nodes of |p - grad f(x)|: distance of a flow from the graph of df."""
    gradient = [diff(f, x) for x in system.x_refs]
    function = compile_numeric(gradient, system.x_refs)
    n = system.n
    flat = np.asarray(nodes, dtype=float).reshape(-1, 2 * n)
    flat = flat[np.all(np.isfinite(flat), axis=1)]
    expected = np.real(function(flat[:, :n]))
    return float(np.max(np.abs(flat[:, n:] - expected)))
