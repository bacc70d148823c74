"""Expression evaluation.

:func:`evaluate` is a direct tree-walking interpreter.  :func:`compile_expr`
translates an expression into a Python function over a state tuple; the
explorer uses the compiled form, and the test-suite checks both agree.
"""
from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence, Union

from ..errors import EvaluationError
from . import ast as A
from .printer import format_expr

Value = Union[int, float, bool]


def _div(a, b, text):
    if b == 0:
        raise EvaluationError(f"division by zero in {text}")
    return float(a) / float(b)


def _mod(a, b, text):
    if b == 0:
        raise EvaluationError(f"modulo by zero in {text}")
    return a % b


def _floor(a):
    return math.floor(a)


def _ceil(a):
    return math.ceil(a)


def evaluate(expr: A.Expr, env: Mapping[str, Value]) -> Value:
    """Evaluate ``expr`` with identifiers bound by ``env``."""
    if isinstance(expr, (A.IntLit, A.RealLit, A.BoolLit)):
        return expr.value
    if isinstance(expr, A.Ident):
        try:
            return env[expr.name]
        except KeyError:
            raise EvaluationError(f"unbound identifier {expr.name!r}") from None
    if isinstance(expr, A.Unary):
        v = evaluate(expr.operand, env)
        return (not v) if expr.op == "!" else -v
    if isinstance(expr, A.Binary):
        op = expr.op
        if op == "&":
            return bool(evaluate(expr.left, env)) and bool(evaluate(expr.right, env))
        if op == "|":
            return bool(evaluate(expr.left, env)) or bool(evaluate(expr.right, env))
        a = evaluate(expr.left, env)
        b = evaluate(expr.right, env)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return _div(a, b, format_expr(expr))
        if op == "=":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        raise EvaluationError(f"unknown operator {op!r}")
    if isinstance(expr, A.Call):
        args = [evaluate(a, env) for a in expr.args]
        if expr.func == "min":
            return min(args)
        if expr.func == "max":
            return max(args)
        if expr.func == "floor":
            return _floor(args[0])
        if expr.func == "ceil":
            return _ceil(args[0])
        if expr.func == "abs":
            return abs(args[0])
        if expr.func == "mod":
            return _mod(args[0], args[1], format_expr(expr))
        raise EvaluationError(f"unknown function {expr.func!r}")
    if isinstance(expr, A.Cond):
        if evaluate(expr.cond, env):
            return evaluate(expr.then, env)
        return evaluate(expr.other, env)
    raise TypeError(f"not an expression: {expr!r}")


_PY_OPS = {"+": "+", "-": "-", "*": "*", "=": "==", "!=": "!=", "<": "<", "<=": "<=",
           ">": ">", ">=": ">=", "&": "and", "|": "or"}


class _Emitter:
    def __init__(self, slots: Mapping[str, int], constants: Mapping[str, Value]):
        self.slots = slots
        self.constants = constants
        self.texts: list[str] = []

    def text_ref(self, e: A.Expr) -> str:
        self.texts.append(format_expr(e))
        return f"_T[{len(self.texts) - 1}]"

    def emit(self, e: A.Expr) -> str:
        if isinstance(e, (A.IntLit, A.BoolLit)):
            return repr(e.value)
        if isinstance(e, A.RealLit):
            return f"float({e.value!r})"
        if isinstance(e, A.Ident):
            if e.name in self.slots:
                return f"s[{self.slots[e.name]}]"
            if e.name in self.constants:
                v = self.constants[e.name]
                return f"float({v!r})" if isinstance(v, float) else repr(v)
            raise EvaluationError(f"unbound identifier {e.name!r}")
        if isinstance(e, A.Unary):
            inner = self.emit(e.operand)
            return f"(not {inner})" if e.op == "!" else f"(-{inner})"
        if isinstance(e, A.Binary):
            left, right = self.emit(e.left), self.emit(e.right)
            if e.op == "/":
                return f"_div({left}, {right}, {self.text_ref(e)})"
            if e.op in ("&", "|"):
                return f"(bool({left}) {_PY_OPS[e.op]} bool({right}))"
            return f"({left} {_PY_OPS[e.op]} {right})"
        if isinstance(e, A.Call):
            args = [self.emit(a) for a in e.args]
            if e.func == "mod":
                return f"_mod({args[0]}, {args[1]}, {self.text_ref(e)})"
            if e.func in ("min", "max") and len(args) == 1:
                return args[0]
            fn = {"floor": "_floor", "ceil": "_ceil"}.get(e.func, e.func)
            return f"{fn}({', '.join(args)})"
        if isinstance(e, A.Cond):
            return f"({self.emit(e.then)} if {self.emit(e.cond)} else {self.emit(e.other)})"
        raise TypeError(f"not an expression: {e!r}")


def compile_source(body: str, texts: Sequence[str]) -> Callable:
    namespace = {"_div": _div, "_mod": _mod, "_floor": _floor, "_ceil": _ceil,
                 "_T": tuple(texts), "min": min, "max": max, "abs": abs}
    exec(compile(f"def _f(s):\n    return {body}\n", "<diskmdp-expr>", "exec"), namespace)
    return namespace["_f"]


def compile_expr(expr: A.Expr, variables: Sequence[str],
                 constants: Mapping[str, Value]) -> Callable[[tuple], Value]:
    """Compile ``expr`` into ``f(state_tuple) -> value``.

    Variables are read from the tuple positions given by ``variables``;
    constants are inlined.
    """
    em = _Emitter({name: k for k, name in enumerate(variables)}, constants)
    body = em.emit(expr)
    return compile_source(body, em.texts)


def emit_tuple(exprs: Sequence[A.Expr], variables: Sequence[str],
               constants: Mapping[str, Value]) -> Callable[[tuple], tuple]:
    """Compile several expressions into one function returning a tuple."""
    em = _Emitter({name: k for k, name in enumerate(variables)}, constants)
    parts = [em.emit(e) for e in exprs]
    body = "(" + "".join(p + ", " for p in parts) + ")"
    return compile_source(body, em.texts)
