"""Parser for the ``.pde`` system DSL.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    system := decl* eq+
    decl   := ("indep" | "dep" | "param") ident ("," ident)* ";"
    eq     := "eq" expr "=" expr ";"

Expressions support ``+ - * / ^``, parentheses, decimal literals, the
imaginary unit ``im``, the functions sin, cos, exp, sqrt and derivative
terms ``d(u, x, x)``.
"""

from typing import Dict, List, Optional, Set, Tuple

import sympy
from loguru import logger
from pyparsing import (
    DelimitedList,
    Forward,
    Keyword,
    MatchFirst,
    OpAssoc,
    ParseException,
    Regex,
    StringEnd,
    Suppress,
    Word,
    ZeroOrMore,
    alphanums,
    alphas,
    col,
    infix_notation,
    lineno,
    one_of,
    python_style_comment,
)

from domain.errors import (
    DerivativeTargetError,
    DSLSyntaxError,
    EmptySystemError,
    NonIntegerExponentError,
    ParseError,
    UndeclaredIdentifierError,
)
from domain.models import MultiIndex, PDESystem, jet_name

RESERVED = ("indep", "dep", "param", "eq", "im", "d", "sin", "cos", "exp", "sqrt")
FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp, "sqrt": sympy.sqrt}


def _placeholder(dep: str, indeps: Tuple[str, ...]) -> sympy.Symbol:
    return sympy.Symbol(f"d({dep},{','.join(indeps)})")


def _fold_sum(tokens):
    items = tokens[0]
    result = items[0]
    for op, operand in zip(items[1::2], items[2::2]):
        result = result + operand if op == "+" else result - operand
    return result


def _fold_product(tokens):
    items = tokens[0]
    result = items[0]
    for op, operand in zip(items[1::2], items[2::2]):
        result = result * operand if op == "*" else result / operand
    return result


def _fold_sign(tokens):
    items = tokens[0]
    result = items[-1]
    for op in reversed(items[:-1]):
        if op == "-":
            result = -result
    return result


def _fold_power(tokens):
    items = tokens[0]
    result = items[-1]
    for base in reversed(items[:-1:2]):
        exponent = sympy.sympify(result)
        if not (exponent.is_Integer and exponent >= 0):
            raise NonIntegerExponentError(str(exponent))
        result = sympy.Pow(base, exponent)
    return result


class _Grammar:
    """One-shot grammar instance; parse actions record names and derivatives as they match."""

    def __init__(self):
        self.identifiers: List[Tuple[str, int]] = []
        self.derivatives: List[Tuple[str, Tuple[str, ...], int]] = []
        self.declarations: Dict[str, List[str]] = {"indep": [], "dep": [], "param": []}
        self.equations: List[sympy.Expr] = []

        reserved = MatchFirst([Keyword(word) for word in RESERVED])
        name = ~reserved + Word(alphas + "_", alphanums + "_")
        variable = name.copy().set_parse_action(self._variable)
        number = Regex(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?").set_parse_action(
            lambda t: sympy.Rational(t[0])
        )
        imaginary = Keyword("im").set_parse_action(lambda: sympy.I)

        expr = Forward()
        derivative = (
            Keyword("d").suppress()
            + Suppress("(")
            + name
            + Suppress(",")
            + DelimitedList(name)
            + Suppress(")")
        ).set_parse_action(self._derivative)
        function = (
            MatchFirst([Keyword(f) for f in FUNCTIONS]) + Suppress("(") + expr + Suppress(")")
        ).set_parse_action(lambda t: FUNCTIONS[t[0]](t[1]))

        operand = number | imaginary | derivative | function | variable
        expr <<= infix_notation(
            operand,
            [
                ("^", 2, OpAssoc.RIGHT, _fold_power),
                (one_of("+ -"), 1, OpAssoc.RIGHT, _fold_sign),
                (one_of("* /"), 2, OpAssoc.LEFT, _fold_product),
                (one_of("+ -"), 2, OpAssoc.LEFT, _fold_sum),
            ],
        )

        declaration = (
            MatchFirst([Keyword("indep"), Keyword("dep"), Keyword("param")])
            + DelimitedList(name)
            + Suppress(";")
        ).set_parse_action(self._declare)
        equation = (
            Keyword("eq").suppress() + expr + Suppress("=") + expr + Suppress(";")
        ).set_parse_action(self._equation)

        self.system = ZeroOrMore(declaration) + ZeroOrMore(equation) + StringEnd()
        self.system.ignore(python_style_comment)
        self.expression = expr + StringEnd()
        self.expression.ignore(python_style_comment)

    def _variable(self, s, loc, tokens):
        self.identifiers.append((tokens[0], loc))
        return sympy.Symbol(tokens[0])

    def _derivative(self, s, loc, tokens):
        dep, indeps = tokens[0], tuple(tokens[1:])
        self.derivatives.append((dep, indeps, loc))
        return _placeholder(dep, indeps)

    def _declare(self, s, loc, tokens):
        kind, names = tokens[0], list(tokens[1:])
        declared = {n for group in self.declarations.values() for n in group}
        for declared_name in names:
            if declared_name in declared:
                raise DSLSyntaxError(
                    f"Duplicate declaration of {declared_name}", lineno(loc, s), col(loc, s)
                )
            declared.add(declared_name)
        self.declarations[kind].extend(names)
        return []

    def _equation(self, tokens):
        self.equations.append(tokens[0] - tokens[1])
        return []


def _run(grammar_expr, text: str):
    try:
        return grammar_expr.parse_string(text, parse_all=True)
    except ParseException as exc:
        raise DSLSyntaxError(f"Syntax error: {exc.msg}", exc.lineno, exc.col) from exc


def _jet_substitutions(
    grammar: _Grammar, system_indep: List[str], system_dep: List[str], declared: Set[str]
) -> Dict[sympy.Symbol, sympy.Symbol]:
    """Validate derivative terms and map their placeholders onto jet symbols."""
    mapping = {}
    for dep, indeps, _ in grammar.derivatives:
        if dep not in system_dep:
            if dep not in declared:
                raise UndeclaredIdentifierError(dep)
            raise DerivativeTargetError(dep)
        for indep in indeps:
            if indep not in system_indep:
                if indep not in declared:
                    raise UndeclaredIdentifierError(indep)
                raise DerivativeTargetError(indep, expected="independent")
        index = MultiIndex(indices=tuple(system_indep.index(i) for i in indeps))
        jet = sympy.Symbol(jet_name(dep, index, system_indep))
        mapping[_placeholder(dep, indeps)] = jet
    return mapping


def parse_system(text: str) -> PDESystem:
    """Parse DSL text into a PDESystem.

    Args:
        text: Source of a ``.pde`` file

    Returns:
        PDESystem: Equations stored as ``lhs - rhs``; order is the largest
            derivative count written in the source

    Raises:
        DSLSyntaxError: On lexical or grammatical errors, with line and column
        UndeclaredIdentifierError: If an identifier was never declared
        DerivativeTargetError: If ``d(...)`` targets a non-dependent name
        EmptySystemError: If the text declares no equations
        NonIntegerExponentError: For exponents that are not non-negative integers

    Examples:
        >>> parse_system("indep x,t; dep u; eq d(u,t,t) - d(u,x,x) = 0;").order
        2
    """
    grammar = _Grammar()
    _run(grammar.system, text)

    # Step 1: Check declarations and equations
    indep = grammar.declarations["indep"]
    dep = grammar.declarations["dep"]
    params = grammar.declarations["param"]
    if not grammar.equations:
        raise EmptySystemError()
    declared = set(indep) | set(dep) | set(params)
    for identifier, _ in grammar.identifiers:
        if identifier not in declared:
            raise UndeclaredIdentifierError(identifier)
    if not indep or not dep:
        raise ParseError("A system needs at least one indep and one dep declaration")

    # Step 2: Resolve derivative terms to jet coordinates
    mapping = _jet_substitutions(grammar, indep, dep, declared)
    order = max((len(indeps) for _, indeps, _ in grammar.derivatives), default=0)
    if order < 1:
        raise ParseError("A system must contain at least one derivative")
    equations = [sympy.sympify(e).xreplace(mapping) for e in grammar.equations]

    logger.debug(
        "parsed system: {} equations, n={}, m={}, order {}", len(equations), len(indep), len(dep), order
    )
    return PDESystem(indep=indep, dep=dep, params=params, equations=equations, order=order)


def parse_expression(
    text: str,
    system: Optional[PDESystem] = None,
    names: Optional[Set[str]] = None,
) -> sympy.Expr:
    """Parse a single DSL expression, for example a surface or a Hamiltonian.

    Args:
        text: Expression source
        system: Resolves ``d(u, ...)`` terms to jet coordinates when given
        names: If given, every plain identifier must be one of these

    Raises:
        DSLSyntaxError: On malformed text
        UndeclaredIdentifierError: For identifiers outside ``names``
        DerivativeTargetError: For derivative terms without a matching system
    """
    grammar = _Grammar()
    result = _run(grammar.expression, str(text))[0]
    if names is not None:
        for identifier, _ in grammar.identifiers:
            if identifier not in names:
                raise UndeclaredIdentifierError(identifier)
    if grammar.derivatives:
        if system is None:
            raise DerivativeTargetError(grammar.derivatives[0][0])
        declared = set(system.indep) | set(system.dep) | set(system.params)
        result = sympy.sympify(result).xreplace(
            _jet_substitutions(grammar, system.indep, system.dep, declared)
        )
    return sympy.sympify(result)


def expression_or_number(value, system: Optional[PDESystem] = None) -> sympy.Expr:
    """Accept a JSON number, ``[re, im]`` pair or DSL string and return an expression."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return sympy.Integer(value) if isinstance(value, int) else sympy.Float(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return sympy.Float(value[0]) + sympy.Float(value[1]) * sympy.I
    return parse_expression(str(value), system)
