"""Tiny arithmetic expression grammar for configs: coordinate names,
constants, + - * / **, and sin/cos/exp/abs/sqrt. Compiled through an AST
whitelist so config files cannot reach arbitrary Python."""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np


class ExpressionError(ValueError):
    """Raised when an expression uses anything outside the grammar."""


_FUNCS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

_CONSTS = {"pi": np.pi, "e": np.e}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


def _check(node: ast.AST, names: tuple[str, ...]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, names)
    elif isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _check(node.left, names)
        _check(node.right, names)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNARYOPS):
        _check(node.operand, names)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"constant {node.value!r} is not a number")
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in _CONSTS:
            raise ExpressionError(f"unknown name {node.id!r}; "
                                  f"allowed: {sorted(names + tuple(_CONSTS))}")
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError("only sin, cos, exp, abs, sqrt may be called")
        if node.keywords or len(node.args) != 1:
            raise ExpressionError(f"{node.func.id} takes one positional argument")
        _check(node.args[0], names)
    else:
        raise ExpressionError(f"disallowed syntax: {type(node).__name__}")


def compile_expression(expr: str, names: tuple[str, ...]) -> Callable[..., np.ndarray]:
    """Compile ``expr`` into a vectorized function of the named arrays.

    Parameters
    ----------
    expr : str
        Arithmetic expression over ``names``, the constants pi and e, and
        the functions sin, cos, exp, abs, sqrt.
    names : tuple of str
        Variable names the expression may reference (keyword arguments of
        the returned function).

    Returns
    -------
    callable
        ``fn(**arrays) -> ndarray``, broadcasting over the inputs.

    Raises
    ------
    ExpressionError
        On any syntax outside the grammar.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression: {exc}") from exc
    _check(tree, names)
    code = compile(tree, "<expression>", "eval")
    env = {"__builtins__": {}}
    env.update(_FUNCS)
    env.update(_CONSTS)

    def fn(**arrays: np.ndarray) -> np.ndarray:
        missing = set(code.co_names) - set(_FUNCS) - set(_CONSTS) - set(arrays)
        if missing:
            raise ExpressionError(f"expression needs {sorted(missing)}")
        out = eval(code, env, arrays)  # noqa: S307 - AST whitelisted above
        return np.asarray(out, dtype=float)

    return fn


def point_function(expr: str, dim: int,
                   extra: tuple[str, ...] = ()) -> Callable[..., np.ndarray]:
    """Wrap an expression as a function of point arrays of shape (m, dim).

    Coordinates are exposed as x, y, z up to ``dim``; ``extra`` names (such
    as theta for boundary angles) are passed through as keyword arrays.
    """
    coord_names = ("x", "y", "z")[:dim]
    fn = compile_expression(expr, coord_names + extra)

    def evaluate(points: np.ndarray, **kw: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, dim)
        args = {name: pts[:, i] for i, name in enumerate(coord_names)}
        args.update(kw)
        values = fn(**args)
        return np.broadcast_to(values, (pts.shape[0],)).astype(float, copy=True)

    return evaluate
