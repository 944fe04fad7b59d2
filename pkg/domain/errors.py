"""Exception hierarchy for charkit.

Every error carries the CLI exit code it maps to, so the command-line layer can
translate failures without inspecting messages.
"""

from typing import Iterable, Optional


class CharkitError(Exception):
    """Base class for all charkit errors."""

    exit_code: int = 1


class UsageError(CharkitError):
    """Bad command-line usage or unreadable input documents."""


# --- DSL / parse errors (exit 2) -------------------------------------------


class ParseError(CharkitError, ValueError):
    """Raised for any failure to turn DSL text into a system."""

    exit_code = 2


class DSLSyntaxError(ParseError):
    """Lexical or grammatical error at a known position."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class UndeclaredIdentifierError(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Undeclared identifier: {name}")


class DerivativeTargetError(ParseError):
    def __init__(self, name: str, expected: str = "dependent"):
        self.name = name
        super().__init__(f"Derivative argument {name} is not a declared {expected} variable")


class EmptySystemError(ParseError):
    def __init__(self):
        super().__init__("System declares no equations")


class NonIntegerExponentError(ParseError):
    def __init__(self, exponent: str):
        super().__init__(f"Exponent must be a non-negative integer, got {exponent}")


# --- numeric failures (exit 3) ---------------------------------------------


class NumericFailure(CharkitError):
    exit_code = 3


class NewtonConvergenceError(NumericFailure):
    """Newton iteration did not reach tolerance."""

    def __init__(self, s: Iterable[float], residual: float, iterations: int):
        self.s = tuple(s)
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Newton did not converge at s={self.s} after {iterations} iterations "
            f"(last residual {residual:.3e})"
        )


class NumericDomainError(NumericFailure, ArithmeticError):
    """Evaluation left the numeric domain (pole, NaN)."""


# --- precondition violations (exit 4) --------------------------------------


class PreconditionError(CharkitError):
    exit_code = 4


class UnboundVariableError(PreconditionError, KeyError):
    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        super().__init__(f"Unbound variables: {', '.join(self.missing)}")

    def __str__(self) -> str:
        return self.args[0]


class UnsupportedFunctionError(PreconditionError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unsupported function: {name}")


class NotPolynomialError(PreconditionError):
    def __init__(self, detail: str):
        super().__init__(f"Expression is not polynomial in the requested variables: {detail}")


class NotDeterminedError(PreconditionError):
    def __init__(self, equations: int, unknowns: int):
        super().__init__(
            f"System is not determined: {equations} equations for {unknowns} unknowns"
        )


class ZeroCovectorError(PreconditionError):
    def __init__(self):
        super().__init__("Covector must be non-zero")


class VanishingGradientError(PreconditionError):
    def __init__(self, sample: int):
        self.sample = sample
        super().__init__(f"Surface gradient vanishes at sample {sample}")


class NotBackgroundReducibleError(PreconditionError):
    def __init__(self, residual: Iterable[str]):
        self.residual = sorted(residual)
        super().__init__(
            "symbol not background-reducible: still depends on " + ", ".join(self.residual)
        )


class HigherJetError(PreconditionError):
    def __init__(self, names: Iterable[str]):
        self.names = sorted(names)
        super().__init__(f"Function references coordinates outside J^1: {', '.join(self.names)}")


class CharacteristicDataError(PreconditionError):
    """Singular strip Jacobian: the Cauchy data are characteristic at a sample."""

    def __init__(self, s: Iterable[float], detail: Optional[str] = None):
        self.s = tuple(s)
        message = f"Cauchy data are characteristic at s={self.s}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class OffShellSeedError(PreconditionError):
    def __init__(self, offenders: Iterable[tuple]):
        self.offenders = list(offenders)
        listing = ", ".join(f"#{i}: |H-E|={d:.3e}" for i, d in self.offenders)
        super().__init__(f"Seed samples off the energy level: {listing}")


class IsotropyViolationError(PreconditionError):
    def __init__(self, defect: float, tol: float):
        self.defect = defect
        super().__init__(f"Seed is not isotropic: defect {defect:.3e} exceeds {tol:.1e}")


class HamiltonianError(PreconditionError):
    pass


class InvalidMetricError(PreconditionError, ValueError):
    pass
