"""
Closed-form expressions: parsing, validation and jet evaluation.

Expressions use the coordinate names of a chart, named constants, + - * / ^ (or **),
parentheses and the functions exp, log, sin, cos, sinh, cosh, sqrt, pow. Parsing goes through
sympy with a restricted namespace; anything outside that grammar is an ExpressionError.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from tokenize import TokenError

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from qsoliton import jets
from qsoliton.errors import ExpressionError
from qsoliton.jets import Jet, JetSpace

logger = logging.getLogger(__name__)

FUNCTIONS: dict[str, object] = {
    "exp": sympy.exp,
    "log": sympy.log,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "sqrt": sympy.sqrt,
    "pow": sympy.Pow,
}

_JET_FUNCTIONS: dict[type, tuple[Callable[[Jet], Jet], Callable[[float], float]]] = {
    sympy.exp: (jets.exp, math.exp),
    sympy.log: (jets.log, math.log),
    sympy.sin: (jets.sin, math.sin),
    sympy.cos: (jets.cos, math.cos),
    sympy.sinh: (jets.sinh, math.sinh),
    sympy.cosh: (jets.cosh, math.cosh),
}

_GLOBALS = {
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
    "Function": sympy.Function,
}

_TRANSFORMATIONS = standard_transformations + (convert_xor,)

RESERVED = frozenset(FUNCTIONS) | {"pi", "E"}


def parse_expression(
    text: str,
    coordinates: Sequence[str],
    constants: Mapping[str, float] | None = None,
) -> sympy.Expr:
    """Parse ``text`` over the given coordinate names.

    Args:
        text: Expression source, e.g. ``"4/(1+u^2+v^2)^2"``
        coordinates: Allowed free variable names
        constants: Named numeric constants substituted at parse time

    Returns:
        A real sympy expression whose free symbols are coordinates

    Raises:
        ExpressionError: On syntax errors, unknown names or complex constants
    """
    constants = dict(constants or {})
    clash = (set(coordinates) | set(constants)) & RESERVED
    if clash:
        raise ExpressionError(f"Names {sorted(clash)} are reserved")

    local_dict: dict[str, object] = {name: sympy.Symbol(name, real=True) for name in coordinates}
    local_dict.update({name: sympy.Float(value) for name, value in constants.items()})
    local_dict.update(FUNCTIONS)
    local_dict["pi"] = sympy.pi
    local_dict["E"] = sympy.E

    try:
        expr = parse_expr(
            text,
            local_dict=local_dict,
            global_dict=dict(_GLOBALS),
            transformations=_TRANSFORMATIONS,
        )
    except (SyntaxError, TokenError, TypeError, AttributeError, NameError) as e:
        raise ExpressionError(f"Cannot parse expression {text!r}: {e}") from e

    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"Expression {text!r} is not a scalar expression")
    validate_expression(expr, coordinates, text)
    return expr


def validate_expression(expr: sympy.Expr, coordinates: Sequence[str], text: str = "") -> None:
    source = text or str(expr)
    unknown = sorted(s.name for s in expr.free_symbols if s.name not in coordinates)
    if unknown:
        raise ExpressionError(f"Unknown symbols {unknown} in {source!r}")
    for call in expr.atoms(sympy.Function):
        if call.func not in _JET_FUNCTIONS:
            raise ExpressionError(f"Unsupported function {call.func} in {source!r}")
    if expr.has(sympy.I) or expr.has(sympy.zoo) or expr.has(sympy.nan):
        raise ExpressionError(f"Expression {source!r} is not real-valued")


def evaluate_jet(
    expr: sympy.Expr,
    variables: Mapping[sympy.Symbol, Jet],
    space: JetSpace,
) -> Jet:
    """Evaluate ``expr`` as a scalar jet given jets for its free symbols."""
    memo: dict[sympy.Basic, Jet | float] = {}
    result = _walk(expr, variables, memo)
    if isinstance(result, Jet):
        return result.truncate(space.order) if result.order > space.order else result
    return Jet.constant(result, space)


def _walk(
    node: sympy.Basic,
    variables: Mapping[sympy.Symbol, Jet],
    memo: dict[sympy.Basic, Jet | float],
) -> Jet | float:
    if node in memo:
        return memo[node]

    value: Jet | float
    if node.is_Symbol:
        try:
            value = variables[node]
        except KeyError as e:
            raise ExpressionError(f"No value bound for symbol {node}") from e
    elif node.is_number:
        value = float(node.evalf())
    elif node.is_Add:
        value = 0.0
        for arg in node.args:
            value = value + _walk(arg, variables, memo)
    elif node.is_Mul:
        value = 1.0
        for arg in node.args:
            value = value * _walk(arg, variables, memo)
    elif node.is_Pow:
        base = _walk(node.args[0], variables, memo)
        exponent = node.args[1]
        if exponent.is_number:
            e = float(exponent)
            value = base.power(e) if isinstance(base, Jet) else float(base) ** e
        else:
            power = _walk(exponent, variables, memo)
            log_base = jets.log(base) if isinstance(base, Jet) else math.log(base)
            value = jets.exp(power * log_base)
    elif isinstance(node, sympy.Function) and node.func in _JET_FUNCTIONS:
        argument = _walk(node.args[0], variables, memo)
        jet_fn, float_fn = _JET_FUNCTIONS[node.func]
        value = jet_fn(argument) if isinstance(argument, Jet) else float_fn(argument)
    else:
        raise ExpressionError(f"Cannot evaluate expression node {node!r}")

    memo[node] = value
    return value


def symbols_for(coordinates: Sequence[str]) -> list[sympy.Symbol]:
    return [sympy.Symbol(name, real=True) for name in coordinates]


def compile_numeric(
    exprs: Sequence[sympy.Expr], coordinates: Sequence[str]
) -> Callable[[np.ndarray], np.ndarray]:
    """Fast numpy evaluation of a list of expressions at one point."""
    fn = sympy.lambdify(symbols_for(coordinates), list(exprs), modules="numpy")

    def evaluate(point: np.ndarray) -> np.ndarray:
        return np.asarray(fn(*point), dtype=float)

    return evaluate
