"""Loading of system files, built-in references and auxiliary JSON documents."""

import json
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import sympy
from loguru import logger
from pydantic import BaseModel, Field, ValidationError, model_validator

from domain.errors import PreconditionError, UsageError
from domain.models import HamiltonianSystem, JetEnv, PDESystem, SymbolTensor
from domain.sheets import CauchyData, PhasePoint, SeedFamily
from logic.expr import substitute
from logic.parser import expression_or_number, parse_expression, parse_system
from logic.physics import builtin_symbol, validate_metric
from logic.symbol import principal_symbol

BUILTIN_PATTERN = re.compile(r"^builtin:([a-z_]+)$")

Number = Union[float, List[float]]


class SampleSpec(BaseModel):
    """Evenly spaced samples, as for ``numpy.linspace``."""

    start: float
    stop: float
    num: int = Field(..., ge=1)

    def values(self) -> List[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


class EnvDocument(BaseModel):
    bindings: Dict[str, Any] = Field(default_factory=dict)
    covector: Optional[List[Any]] = None
    samples: List[Dict[str, Any]] = Field(default_factory=list, description="Per-sample bindings on a surface")
    time_axis: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _flatten_samples(cls, data):
        if isinstance(data, dict) and data.get("samples"):
            data = dict(data)
            data["samples"] = [s.get("bindings", s) if isinstance(s, dict) else s for s in data["samples"]]
        return data


class CauchyDocument(BaseModel):
    params: List[str] = Field(default_factory=list)
    surface: List[Any]
    value: Any
    guess: List[Any]
    samples: Optional[Union[SampleSpec, List[SampleSpec]]] = None
    axes: Optional[List[List[float]]] = None
    z: Optional[Any] = None
    bindings: Dict[str, Any] = Field(default_factory=dict)


class HamiltonianDocument(BaseModel):
    indep: List[str]
    H: str
    E: float = 0.0
    params: Dict[str, float] = Field(default_factory=dict)


class SeedDocument(BaseModel):
    params: List[str] = Field(default_factory=list)
    x: List[Any] = Field(default_factory=list)
    p: List[Any] = Field(default_factory=list)
    samples: Optional[Union[SampleSpec, List[SampleSpec]]] = None
    axes: Optional[List[List[float]]] = None
    points: List[PhasePoint] = Field(default_factory=list)


class QueryPoint(BaseModel):
    x: List[float]


def parse_builtin_ref(reference: str) -> Optional[str]:
    """Name of a built-in symbol reference such as ``builtin:maxwell``, else None."""
    match = BUILTIN_PATTERN.match(reference.strip())
    return match.group(1) if match else None


def read_text(path: Union[str, Path]) -> str:
    """Read a UTF-8 file.

    Raises:
        UsageError: If the file cannot be read
    """
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"Cannot read {path}: {exc.strerror}") from exc


def read_json(source: Union[str, Path]) -> Any:
    """Parse a JSON document given either inline or as a file path.

    Raises:
        UsageError: If the file is unreadable or the JSON is malformed
    """
    text = str(source)
    if not text.lstrip().startswith(("[", "{")):
        text = read_text(source)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"Malformed JSON in {source}: {exc.msg} (line {exc.lineno}, column {exc.colno})") from exc


def _validate(model, data):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise UsageError(f"Invalid {model.__name__}: {exc.errors()[0]['msg']}") from exc


def load_system(path: Union[str, Path]) -> PDESystem:
    system = parse_system(read_text(path))
    logger.debug("loaded system from {}", path)
    return system


def load_symbol(reference: str, metric=None) -> SymbolTensor:
    """Principal symbol of a ``.pde`` file or of a ``builtin:<name>`` reference."""
    name = parse_builtin_ref(reference)
    if name is not None:
        try:
            return builtin_symbol(name, metric=metric)
        except ValueError as exc:
            if isinstance(exc, PreconditionError):
                raise
            raise UsageError(str(exc)) from exc
    return principal_symbol(load_system(reference))


def load_metric(source) -> sympy.ImmutableMatrix:
    """Metric from ``{"metric": [[...]]}`` or a bare nested list."""
    data = read_json(source) if isinstance(source, (str, Path)) else source
    if isinstance(data, dict):
        data = data.get("metric")
    if not isinstance(data, list):
        raise UsageError("Metric document needs a nested list of numbers")
    return validate_metric(data)


def parse_number(value) -> complex:
    """JSON number or ``[re, im]`` pair as a complex scalar."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise UsageError(f"Expected a number or [re, im] pair, got {value!r}")


def parse_bindings(raw: Dict[str, Any], system: Optional[PDESystem] = None) -> Dict[str, complex]:
    """Bindings keyed by symbol name; keys may also be written as ``d(u,x,x)``.

    Examples:
        >>> parse_bindings({"m": 2, "x": [0, 1]})
        {'m': (2+0j), 'x': 1j}
    """
    bindings = {}
    for key, value in raw.items():
        name = key
        if "(" in key:
            symbol = parse_expression(key, system)
            if not isinstance(symbol, sympy.Symbol):
                raise UsageError(f"Binding key {key} is not a single variable")
            name = symbol.name
        bindings[name] = parse_number(value)
    return bindings


def load_env(source, system: Optional[PDESystem] = None) -> Tuple[JetEnv, EnvDocument]:
    """Point bindings plus the raw env document (covector, surface samples, time axis)."""
    data = read_json(source) if isinstance(source, (str, Path)) else source
    document = _validate(EnvDocument, data or {})
    return JetEnv(bindings=parse_bindings(document.bindings, system)), document


def sample_axes(
    params: List[str],
    samples: Optional[Union[SampleSpec, List[SampleSpec]]],
    axes: Optional[List[List[float]]],
) -> List[List[float]]:
    """Sample values per parameter, sorted ascending.

    A single ``samples`` spec applies to every parameter.
    """
    if axes is not None:
        resolved = [sorted(float(v) for v in axis) for axis in axes]
    elif samples is None:
        resolved = []
    elif isinstance(samples, SampleSpec):
        resolved = [samples.values() for _ in params]
    else:
        resolved = [spec.values() for spec in samples]
    if len(resolved) != len(params):
        raise UsageError(f"Need sample axes for {len(params)} parameters, got {len(resolved)}")
    for axis in resolved:
        if len(set(axis)) != len(axis):
            raise UsageError("Sample values along an axis must be distinct")
    return resolved


def _bound_expression(value, bindings: Dict[str, complex]) -> sympy.Expr:
    expr = expression_or_number(value)
    return substitute(expr, {name: v.real if v.imag == 0 else v for name, v in bindings.items()})


def load_cauchy(source, system: Optional[PDESystem] = None) -> Tuple[CauchyData, List[List[float]], Dict[str, complex]]:
    """Cauchy data, the sample axes and parameter bindings for the system."""
    data = read_json(source) if isinstance(source, (str, Path)) else source
    document = _validate(CauchyDocument, data)
    bindings = parse_bindings(document.bindings, system)
    cauchy = CauchyData(
        params=document.params,
        surface=[_bound_expression(e, bindings) for e in document.surface],
        value=_bound_expression(document.value, bindings),
        guess=[_bound_expression(g, bindings) for g in document.guess],
        z=_bound_expression(document.z, bindings) if document.z is not None else None,
    )
    axes = sample_axes(document.params, document.samples, document.axes)
    return cauchy, axes, bindings


def load_queries(source) -> List[List[float]]:
    data = read_json(source) if isinstance(source, (str, Path)) else source
    if isinstance(data, dict):
        data = [data]
    return [_validate(QueryPoint, item).x for item in data]


def load_hamiltonian(source) -> HamiltonianSystem:
    """Hamiltonian document; H may use x names, ``p_<x>`` and declared parameters."""
    data = read_json(source) if isinstance(source, (str, Path)) else source
    document = _validate(HamiltonianDocument, data)
    names = set(document.indep) | {f"p_{name}" for name in document.indep} | set(document.params)
    H = parse_expression(document.H, names=names)
    return HamiltonianSystem(indep=document.indep, H=H, E=document.E, params=document.params)


def load_seed_family(source) -> SeedFamily:
    data = read_json(source) if isinstance(source, (str, Path)) else source
    document = _validate(SeedDocument, data)
    if document.points:
        return SeedFamily(points=document.points)
    return SeedFamily(
        params=document.params,
        x=[expression_or_number(e) for e in document.x],
        p=[expression_or_number(e) for e in document.p],
        axes=sample_axes(document.params, document.samples, document.axes),
    )


def bind_system(system: PDESystem, bindings: Dict[str, complex]) -> PDESystem:
    """Substitute parameter values into the equations; bound params are dropped."""
    values = {name: v for name, v in bindings.items() if name in system.params}
    if not values:
        return system
    equations = [substitute(e, {n: v.real if v.imag == 0 else v for n, v in values.items()}) for e in system.equations]
    return system.model_copy(
        update={
            "equations": equations,
            "params": [name for name in system.params if name not in values],
            "bindings": {**system.bindings, **values},
        }
    )
