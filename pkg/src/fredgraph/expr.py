"""Tiny arithmetic expression language for coefficients declared in JSON.

Expressions are parsed with :mod:`ast` and only a whitelist of nodes is
accepted; evaluation is vectorised through numpy. Example::

    >>> f = compile_expr("2 + sin(2*pi*x)")
    >>> float(f(x=0.25))
    3.0
"""
from __future__ import annotations

import ast
import operator

import numpy as np

from .errors import SpecFormatError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "atan": np.arctan,
    "arctan": np.arctan,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "abs": np.abs,
    "real": np.real,
    "imag": np.imag,
    "conj": np.conj,
    "sign": np.sign,
    "floor": np.floor,
}
CONSTANTS = {"pi": np.pi, "e": np.e, "j": 1j, "i": 1j}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class Expression:
    """Compiled expression; call with keyword arrays for its variables."""

    def __init__(self, source: str, variables=None):
        self.source = str(source)
        try:
            # "^" means power, with the precedence of "**"
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise SpecFormatError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._tree = tree.body
        self.names = set()
        self._check(self._tree)
        if variables is not None:
            unknown = self.names - set(variables)
            if unknown:
                raise SpecFormatError(f"unknown names {sorted(unknown)} in {source!r}")

    def _check(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or node.keywords:
                raise SpecFormatError(f"unsupported call in {self.source!r}")
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Name):
            if node.id not in CONSTANTS:
                self.names.add(node.id)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            pass
        else:
            raise SpecFormatError(f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](*(self._eval(a, env) for a in node.args))
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            raise SpecFormatError(f"variable {node.id!r} not bound in {self.source!r}")
        return node.value

    def __call__(self, **env):
        env = {k: np.asarray(v) for k, v in env.items()}
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._eval(self._tree, env)
        shape = np.broadcast_shapes(*(v.shape for v in env.values())) if env else ()
        return np.broadcast_to(np.asarray(out), shape) if np.ndim(out) == 0 else out

    @property
    def is_constant(self) -> bool:
        return not self.names

    def __repr__(self):
        return f"Expression({self.source!r})"


def compile_expr(source, variables=None) -> Expression:
    if isinstance(source, (int, float, complex)):
        source = repr(source)
    return Expression(source, variables)
