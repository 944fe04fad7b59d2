"""Method of characteristics for scalar first-order PDEs F(x, u, grad u) = 0.

Pipeline: Cauchy data -> strip (Newton per sample) -> characteristic
trajectories (RK4) -> solution sheet -> pointwise evaluation of every branch.
"""

from itertools import product
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import sympy
from loguru import logger
from scipy.interpolate import KroghInterpolator
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from domain.errors import CharacteristicDataError, NewtonConvergenceError, PreconditionError
from domain.sheets import (
    Branch,
    CauchyData,
    ContactPoint,
    EvalOptions,
    EvalResult,
    NewtonOptions,
    SolutionSheet,
    Strip,
    StripSample,
)
from logic.contact import J1Space, char_field
from logic.expr import compile_numeric, diff
from logic.integrate import DEFAULT_OVERFLOW_GUARD, rk4

DAMPING_ATTEMPTS = 3

CharacteristicPolicy = Literal["drop", "keep", "raise"]


def _real(values: np.ndarray) -> np.ndarray:
    return np.real(np.asarray(values)).astype(float)


class CompiledPDE:
    """Numeric callables for F, its p-gradient and its characteristic field."""

    def __init__(self, space: J1Space, F):
        self.space = space
        self.F = space.check(F)
        coordinates = space.coordinates
        self.value = compile_numeric([self.F], coordinates)
        self.gradient_p = compile_numeric([diff(self.F, p) for p in space.p], coordinates)
        self.field = compile_numeric(list(char_field(space, self.F).components), coordinates)

    def rhs(self, states: np.ndarray) -> np.ndarray:
        return _real(self.field(states))

    def residual(self, states: np.ndarray) -> np.ndarray:
        return _real(self.value(states))[:, 0]


def sample_grid(axes: Sequence[Sequence[float]]) -> List[Tuple[Tuple[int, ...], Tuple[float, ...]]]:
    """All (grid index, parameter value) pairs of the product grid, row-major."""
    axes = [list(axis) for axis in axes]
    grid = []
    for index in product(*[range(len(axis)) for axis in axes]):
        grid.append((index, tuple(float(axes[a][i]) for a, i in enumerate(index))))
    return grid


def _newton(
    system: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]],
    s: Tuple[float, ...],
    start: np.ndarray,
    options: NewtonOptions,
    damping: float,
    scale: float,
) -> Tuple[np.ndarray, float]:
    p = start.copy()
    norm = np.inf
    for iteration in range(options.max_iter + 1):
        G, J = system(p)
        norm = float(np.max(np.abs(G)))
        if norm <= options.tol * scale:
            return p, norm
        if iteration == options.max_iter:
            break
        # Minimum-norm step, defined at singular iterates too
        step, *_ = np.linalg.lstsq(J, G, rcond=None)
        p = p - damping * step
        if not np.all(np.isfinite(p)):
            break
    raise NewtonConvergenceError(s, norm, options.max_iter)


def build_strip(
    space: J1Space,
    F,
    data: CauchyData,
    axes: Sequence[Sequence[float]],
    newton: Optional[NewtonOptions] = None,
    characteristic_tol: float = 1e-10,
    transversality_angle: float = 1e-6,
    on_characteristic: CharacteristicPolicy = "drop",
) -> Strip:
    """Solve F = 0 plus the tangency equations for the gradient at every surface sample.

    Args:
        space: J^1 coordinates
        F: First-order equation on J^1
        data: Surface X(s), value mu(s), gradient guess
        axes: Sample values per surface parameter (empty when n = 1)
        newton: Iteration limits; retries halve the step up to twice
        characteristic_tol: Relative singular-value threshold of the converged strip Jacobian
        transversality_angle: Warn when the characteristic direction makes a
            smaller angle (radians) with the surface
        on_characteristic: What to do with a converged sample whose Jacobian is
            singular: ``drop`` it with a warning, ``keep`` it flagged as
            characteristic, or ``raise``

    Returns:
        Strip: Samples with |F| and tangency residuals within Newton tolerance

    Raises:
        NewtonConvergenceError: If a sample does not converge with any damping
        CharacteristicDataError: At a characteristic sample under ``raise``,
            or when ``drop`` leaves no sample
    """
    newton = newton or NewtonOptions()
    n = space.n
    if len(data.surface) != n or len(data.guess) != n or len(data.params) != n - 1:
        raise PreconditionError(
            f"Cauchy data need {n} surface expressions, {n} guesses and {n - 1} parameters"
        )
    if len(axes) != n - 1:
        raise PreconditionError(f"Expected {n - 1} sample axes, got {len(axes)}")
    if on_characteristic not in ("drop", "keep", "raise"):
        raise ValueError(f"Unknown characteristic policy: {on_characteristic}")
    compiled = CompiledPDE(space, F)

    # Step 1: Compile the surface, its parameter derivatives and the guess
    params = [sympy.Symbol(name) for name in data.params]
    surface_exprs = [sympy.sympify(e) for e in data.surface] + [sympy.sympify(data.value)]
    tangent_exprs = [diff(e, s) for s in params for e in surface_exprs]
    surface_fn = compile_numeric(surface_exprs + tangent_exprs, params)
    guess_fn = compile_numeric([sympy.sympify(g) for g in data.guess], params)

    samples: List[StripSample] = []
    dropped: List[Tuple[float, ...]] = []
    for grid_index, s in sample_grid(axes):
        row = _real(surface_fn(np.array([s], dtype=float)))[0]
        X, mu = row[:n], row[n]
        tangents = row[n + 1 :].reshape(n - 1, n + 1) if n > 1 else np.zeros((0, n + 1))
        dX, dmu = tangents[:, :n], tangents[:, n]

        def strip_equations(p: np.ndarray, X=X, mu=mu, dX=dX, dmu=dmu):
            state = np.concatenate([X, p, [mu]])[None, :]
            F_value = compiled.residual(state)[0]
            F_p = _real(compiled.gradient_p(state))[0]
            G = np.concatenate([dmu - dX @ p, [F_value]])
            J = np.vstack([-dX, F_p[None, :]])
            return G, J

        # Step 2: Newton with damped retries
        start = _real(guess_fn(np.array([s], dtype=float)))[0]
        scale = max(1.0, abs(mu), float(np.max(np.abs(X))))
        for attempt in Retrying(
            stop=stop_after_attempt(DAMPING_ATTEMPTS),
            retry=retry_if_exception_type(NewtonConvergenceError),
            reraise=True,
        ):
            with attempt:
                damping = 0.5 ** (attempt.retry_state.attempt_number - 1)
                p, norm = _newton(strip_equations, s, start, newton, damping, scale)

        # Step 3: The converged Jacobian must be regular (non-characteristic data)
        _, J = strip_equations(p)
        singular = np.linalg.svd(J, compute_uv=False)
        characteristic = bool(singular[-1] <= characteristic_tol * max(1.0, singular[0]))
        if characteristic:
            if on_characteristic == "raise":
                raise CharacteristicDataError(s)
            if on_characteristic == "drop":
                logger.warning("Dropping characteristic Cauchy sample s={}", s)
                dropped.append(s)
                continue
            logger.warning("Keeping characteristic Cauchy sample s={}", s)
        else:
            _warn_if_tangent(J[-1], dX, s, transversality_angle)

        samples.append(
            StripSample(
                s=s,
                grid_index=grid_index,
                point=ContactPoint(x=X, u=float(mu), p=p),
                residual=norm,
                characteristic=characteristic,
            )
        )

    if not samples:
        raise CharacteristicDataError(dropped[0] if dropped else (), "no non-characteristic samples")
    logger.debug("strip: {} samples, {} dropped", len(samples), len(dropped))
    return Strip(samples=samples, axes=[[float(v) for v in axis] for axis in axes], dropped=dropped)


def _warn_if_tangent(velocity: np.ndarray, dX: np.ndarray, s, threshold: float) -> None:
    """Warn when the projected characteristic direction nearly lies in the surface."""
    speed = np.linalg.norm(velocity)
    if speed == 0:
        logger.warning("Characteristic direction vanishes at s={}", s)
        return
    if dX.shape[0] == 0:
        return
    basis, _ = np.linalg.qr(dX.T)
    normal_part = velocity - basis @ (basis.T @ velocity)
    angle = float(np.arcsin(min(1.0, np.linalg.norm(normal_part) / speed)))
    if angle < threshold:
        logger.warning("Strip nearly tangent to the characteristic direction at s={} (angle {:.2e})", s, angle)


def noncharacteristic_check(space: J1Space, F, strip: Strip, z) -> List[float]:
    """Values F_{u_i} z_{x^i} at every strip sample; zero flags characteristic points."""
    gradient = [diff(F, p) for p in space.p]
    z_gradient = [diff(z, x) for x in space.x]
    combined = sympy.expand(sum(a * b for a, b in zip(gradient, z_gradient)))
    function = compile_numeric([combined], space.coordinates)
    states = np.array([sample.point.state() for sample in strip.samples])
    return [float(v) for v in _real(function(states))[:, 0]]


def integrate_characteristics(
    space: J1Space,
    F,
    strip: Strip,
    h: float = 1e-3,
    steps: int = 1000,
    overflow_guard: float = DEFAULT_OVERFLOW_GUARD,
) -> SolutionSheet:
    """Integrate the characteristic field from every strip sample with RK4."""
    if h <= 0:
        raise ValueError("Step size must be positive")
    compiled = CompiledPDE(space, F)
    initial = np.array([sample.point.state() for sample in strip.samples])
    nodes, truncated = rk4(compiled.rhs, initial, h, steps, overflow_guard)
    if np.any(truncated):
        logger.warning("{} characteristic trajectories truncated", int(np.sum(truncated)))
    shape = (len(strip.samples), space.n - 1)
    return SolutionSheet(
        n=space.n,
        nodes=nodes,
        s=np.array([sample.s for sample in strip.samples], dtype=float).reshape(shape),
        grid_index=np.array([sample.grid_index for sample in strip.samples], dtype=int).reshape(shape),
        axes=strip.axes,
        t=h * np.arange(steps + 1),
        h=h,
        truncated=truncated,
    )


def dense_grid(sheet: SolutionSheet) -> np.ndarray:
    """Nodes on the full (s-grid, t) lattice; missing samples are NaN."""
    shape = tuple(len(axis) for axis in sheet.axes) + sheet.nodes.shape[1:]
    dense = np.full(shape, np.nan)
    for row, index in enumerate(sheet.grid_index):
        dense[tuple(index)] = sheet.nodes[row]
    return dense


def _corner_offsets(n: int) -> List[Tuple[int, ...]]:
    return list(product((0, 1), repeat=n))


def _multilinear(corners: np.ndarray, xi: np.ndarray, offsets) -> Tuple[np.ndarray, np.ndarray]:
    """Value and Jacobian of the multilinear interpolant on the unit cell."""
    n = len(xi)
    weights = np.ones(len(offsets))
    partials = np.ones((len(offsets), n))
    for c, offset in enumerate(offsets):
        for k in range(n):
            factor = xi[k] if offset[k] else 1.0 - xi[k]
            weights[c] *= factor
            for j in range(n):
                if j == k:
                    partials[c, j] *= 1.0 if offset[k] else -1.0
                else:
                    partials[c, j] *= factor
    return weights @ corners, corners.T @ partials


def _locate_in_cell(corners: np.ndarray, target: np.ndarray, offsets, options: EvalOptions) -> Optional[np.ndarray]:
    xi = np.full(len(target), 0.5)
    for _ in range(options.max_iter):
        value, jacobian = _multilinear(corners, xi, offsets)
        error = value - target
        if np.max(np.abs(error)) <= options.tol * max(1.0, np.max(np.abs(target))):
            break
        try:
            xi = xi - np.linalg.solve(jacobian, error)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(xi)) or np.max(np.abs(xi - 0.5)) > 2.0:
            return None
    slack = 1e-9
    if np.all(xi >= -slack) and np.all(xi <= 1.0 + slack):
        return xi
    return None


class _LocalInterpolant:
    """Tensor-product polynomial interpolation of the full state around one cell.

    Works in cell-local coordinates (sigma - low) / width, so the window nodes
    sit near small integers and the cell itself is the unit cube. Falls back
    to the cell's own corners (multilinear) when the window holds NaN.
    """

    def __init__(self, dense: np.ndarray, coordinates: List[np.ndarray], cell: Tuple[int, ...], degree: int):
        n_axes = len(coordinates)
        self.low = np.array([coordinates[k][cell[k]] for k in range(n_axes)])
        self.widths = np.array([coordinates[k][cell[k] + 1] - coordinates[k][cell[k]] for k in range(n_axes)])
        windows = [_window(len(coordinates[k]), cell[k], degree + 1) for k in range(n_axes)]
        values = dense[tuple(windows)]
        if not np.all(np.isfinite(values)):
            windows = [slice(cell[k], cell[k] + 2) for k in range(n_axes)]
            values = dense[tuple(windows)]
        self.values = values
        self.nodes = [(coordinates[k][windows[k]] - self.low[k]) / self.widths[k] for k in range(n_axes)]

    def _contract(self, local: np.ndarray, derivative: Optional[int] = None) -> np.ndarray:
        values = self.values
        for k, nodes in enumerate(self.nodes):
            interpolator = KroghInterpolator(nodes, values, axis=0)
            values = interpolator.derivative(local[k], der=1) if k == derivative else interpolator(local[k])
        return np.asarray(values, dtype=float)

    def state(self, local: np.ndarray) -> np.ndarray:
        return self._contract(local)

    def footpoint_jacobian(self, local: np.ndarray, n: int) -> np.ndarray:
        """d x / d local, shape (n, n)."""
        return np.stack([self._contract(local, derivative=k)[:n] for k in range(len(self.nodes))], axis=1)

    def sigma(self, local: np.ndarray) -> np.ndarray:
        return self.low + local * self.widths


def _window(size: int, index: int, width: int) -> slice:
    """Up to ``width`` consecutive nodes, centred on the cell [index, index + 1]."""
    width = min(width, size)
    start = min(max(index - (width - 1) // 2, 0), size - width)
    return slice(start, start + width)


def _refine(
    interpolant: _LocalInterpolant,
    local: np.ndarray,
    target: np.ndarray,
    n: int,
    options: EvalOptions,
) -> Tuple[np.ndarray, float]:
    """Newton on the interpolated footpoint map, in cell-local coordinates."""
    scale = max(1.0, float(np.max(np.abs(target))))
    error = interpolant.state(local)[:n] - target
    for _ in range(options.max_iter):
        if np.max(np.abs(error)) <= options.tol * scale:
            break
        try:
            local = local - np.linalg.solve(interpolant.footpoint_jacobian(local, n), error)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(local)):
            return local, np.inf
        error = interpolant.state(local)[:n] - target
    return local, float(np.max(np.abs(error)))


def eval_solution(sheet: SolutionSheet, x_query: Sequence[float], options: Optional[EvalOptions] = None) -> EvalResult:
    """All branches (u, p) of the sheet above ``x_query``.

    Cells of the (s, t) lattice whose footpoint bounding box contains the
    query are inverted with multilinear Newton, then refined on a local
    polynomial interpolant of degree ``options.degree``. Candidates from
    neighbouring cells that land on the same sheet point are merged, so
    several branches mean the solution is multivalued there.
    """
    options = options or EvalOptions()
    n = sheet.n
    target = np.asarray(x_query, dtype=float)
    if target.shape != (n,):
        raise PreconditionError(f"Query point needs {n} coordinates")
    dense = dense_grid(sheet)
    coordinates = [np.asarray(axis, dtype=float) for axis in sheet.axes] + [np.asarray(sheet.t, dtype=float)]
    footpoints = dense[..., :n]
    cell_shape = tuple(len(c) - 1 for c in coordinates)
    if any(size < 1 for size in cell_shape):
        return EvalResult(x=tuple(target), out_of_domain=True)

    # Step 1: Candidate cells by bounding box
    offsets = _corner_offsets(n)
    corners = np.stack(
        [footpoints[tuple(slice(o, o + size) for o, size in zip(offset, cell_shape))] for offset in offsets]
    )
    with np.errstate(invalid="ignore"):
        lower = corners.min(axis=0)
        upper = corners.max(axis=0)
        margin = 1e-9 * max(1.0, float(np.max(np.abs(target))))
        inside = np.all((lower - margin <= target) & (target <= upper + margin), axis=-1)
    inside &= np.all(np.isfinite(corners), axis=(0, -1))

    branches: List[Branch] = []
    for cell in zip(*np.nonzero(inside)):
        cell = tuple(int(c) for c in cell)
        xi = _locate_in_cell(corners[(slice(None),) + cell], target, offsets, options)
        if xi is None:
            continue

        # Step 2: Refine on the local interpolant and read off u, p
        interpolant = _LocalInterpolant(dense, coordinates, cell, options.degree)
        local, residual = _refine(interpolant, xi, target, n, options)
        if np.any(local < -1e-6) or np.any(local > 1.0 + 1e-6):
            continue
        sigma = interpolant.sigma(local)
        state = interpolant.state(local)
        branches.append(
            Branch(
                u=float(state[2 * n]),
                p=tuple(float(v) for v in state[n : 2 * n]),
                s=tuple(float(v) for v in sigma[:-1]),
                t=float(sigma[-1]),
                residual=residual,
            )
        )

    # Step 3: Merge candidates that are one sheet point seen from several cells
    spacing = np.array([np.min(np.diff(axis)) for axis in coordinates])
    branches = _dedupe(branches, spacing, options)
    if not branches:
        logger.debug("query {} is outside the swept footprint", tuple(target))
    return EvalResult(x=tuple(float(v) for v in target), branches=branches, out_of_domain=not branches)


def _dedupe(branches: List[Branch], spacing: np.ndarray, options: EvalOptions) -> List[Branch]:
    unique: List[Branch] = []
    for branch in sorted(branches, key=lambda b: b.residual):
        if not any(_same_branch(branch, kept, spacing, options) for kept in unique):
            unique.append(branch)
    return sorted(unique, key=lambda b: (b.u, b.p))


def _same_branch(a: Branch, b: Branch, spacing: np.ndarray, options: EvalOptions) -> bool:
    position = np.abs(np.array([*a.s, a.t]) - np.array([*b.s, b.t])) / spacing
    if np.max(position) <= options.merge_steps:
        return True
    values = np.abs(np.array([a.u, *a.p]) - np.array([b.u, *b.p]))
    return bool(np.max(values) <= options.dedupe_tol)


def first_integral_drift(space: J1Space, F, sheet: SolutionSheet) -> np.ndarray:
    """Per-trajectory max |F| over finite nodes (F vanishes exactly along the flow)."""
    compiled = CompiledPDE(space, F)
    flat = sheet.nodes.reshape(-1, sheet.nodes.shape[-1])
    values = np.full(flat.shape[0], np.nan)
    finite = np.all(np.isfinite(flat), axis=1)
    values[finite] = np.abs(compiled.residual(flat[finite]))
    return np.nanmax(values.reshape(sheet.nodes.shape[:2]), axis=1)


def contact_residual(space: J1Space, F, sheet: SolutionSheet) -> np.ndarray:
    """Residual u_{k+1} - u_{k-1} - integral of p.x' over each double step (Simpson).

    Returns an array of shape (samples, steps - 1); entry k is centred on node k + 1.
    """
    compiled = CompiledPDE(space, F)
    n = space.n
    nodes = sheet.nodes
    flat = nodes.reshape(-1, nodes.shape[-1])
    velocity = np.full((flat.shape[0], n), np.nan)
    finite = np.all(np.isfinite(flat), axis=1)
    velocity[finite] = compiled.rhs(flat[finite])[:, :n]
    velocity = velocity.reshape(nodes.shape[:2] + (n,))
    integrand = np.sum(nodes[..., n : 2 * n] * velocity, axis=-1)
    u = nodes[..., 2 * n]
    simpson = (sheet.h / 3.0) * (integrand[:, :-2] + 4.0 * integrand[:, 1:-1] + integrand[:, 2:])
    return (u[:, 2:] - u[:, :-2]) - simpson
