"""Type checking and compilation of a parsed model.

Types are ``int``, ``real`` and ``bool``.  An ``int`` is accepted wherever a
``real`` is expected; a ``real`` is never accepted where an ``int`` is.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

from ..errors import ModelError, ModelTypeError
from . import ast as A
from .evaluate import Value, compile_expr, emit_tuple, evaluate
from .printer import format_expr

INT, REAL, BOOL = "int", "real", "bool"
I32_MIN, I32_MAX = -(2 ** 31), 2 ** 31 - 1
DEFAULT_PARTITION_BOUND = I32_MAX


def _numeric(t: str) -> bool:
    return t in (INT, REAL)


class _Typer:
    def __init__(self, scope: dict[str, str]):
        self.scope = scope
        self.types: dict[int, tuple[A.Expr, str]] = {}

    def mismatch(self, e: A.Expr, expected: str, found: str):
        raise ModelTypeError(format_expr(e), expected, found)

    def want_numeric(self, e: A.Expr) -> str:
        t = self.infer(e)
        if not _numeric(t):
            self.mismatch(e, "int or real", t)
        return t

    def want(self, e: A.Expr, expected: str) -> str:
        t = self.infer(e)
        if expected == REAL and _numeric(t):
            return t
        if t != expected:
            self.mismatch(e, expected, t)
        return t

    def infer(self, e: A.Expr) -> str:
        t = self._infer(e)
        self.types[id(e)] = (e, t)
        return t

    def _infer(self, e: A.Expr) -> str:
        if isinstance(e, A.IntLit):
            return INT
        if isinstance(e, A.RealLit):
            return REAL
        if isinstance(e, A.BoolLit):
            return BOOL
        if isinstance(e, A.Ident):
            if e.name not in self.scope:
                raise ModelTypeError(e.name, "a declared constant or variable", "unknown identifier")
            return self.scope[e.name]
        if isinstance(e, A.Unary):
            if e.op == "!":
                self.want(e.operand, BOOL)
                return BOOL
            return self.want_numeric(e.operand)
        if isinstance(e, A.Binary):
            if e.op in A.BOOL_OPS:
                self.want(e.left, BOOL)
                self.want(e.right, BOOL)
                return BOOL
            if e.op in ("=", "!="):
                lt, rt = self.infer(e.left), self.infer(e.right)
                if (lt == BOOL) != (rt == BOOL):
                    self.mismatch(e.right, lt, rt)
                return BOOL
            lt, rt = self.want_numeric(e.left), self.want_numeric(e.right)
            if e.op in A.CMP_OPS:
                return BOOL
            if e.op == "/":
                return REAL
            return INT if lt == rt == INT else REAL
        if isinstance(e, A.Call):
            ts = [self.want_numeric(a) for a in e.args]
            if e.func in ("floor", "ceil"):
                return INT
            if e.func == "mod":
                for a in e.args:
                    self.want(a, INT)
                return INT
            return INT if all(t == INT for t in ts) else REAL
        if isinstance(e, A.Cond):
            self.want(e.cond, BOOL)
            tt, ot = self.infer(e.then), self.infer(e.other)
            if tt == ot:
                return tt
            if _numeric(tt) and _numeric(ot):
                return REAL
            self.mismatch(e.other, tt, ot)
        raise TypeError(f"not an expression: {e!r}")


@dataclass
class CompiledAlternative:
    probability: Callable[[tuple], Value]
    reward: Callable[[tuple], Value]
    update: Callable[[tuple], tuple]


@dataclass
class CompiledCommand:
    guard: Callable[[tuple], Value]
    alternatives: list[CompiledAlternative]
    source: A.GuardedCommand


@dataclass
class TypedModel:
    """A type-checked model with its expressions compiled for fast evaluation."""

    ast: A.ModelAst
    constants: dict[str, Value]
    variables: tuple[str, ...]
    lower: tuple[int, ...]
    upper: tuple[int, ...]
    init: tuple[int, ...]
    commands: list[CompiledCommand]
    partition: Optional[A.PartitionSpec]
    partition_bound: int
    partition_fn: Callable[[tuple], Value]
    properties: list[A.PropertySpec]
    types: dict[int, tuple[A.Expr, str]] = field(repr=False, default_factory=dict)
    _targets: dict[int, tuple[A.PropertySpec, Callable]] = field(repr=False, default_factory=dict)

    def type_of(self, expr: A.Expr) -> str:
        return self.types[id(expr)][1]

    def compile(self, expr: A.Expr) -> Callable[[tuple], Value]:
        return compile_expr(expr, self.variables, self.constants)

    def target_fn(self, prop: A.PropertySpec) -> Callable[[tuple], Value]:
        entry = self._targets.get(id(prop))
        if entry is None or entry[0] is not prop:
            _Typer(self._scope()).want(prop.target, BOOL)
            entry = self._targets[id(prop)] = (prop, self.compile(prop.target))
        return entry[1]

    def valuation(self, state: Sequence[int]) -> dict[str, Value]:
        env = dict(self.constants)
        env.update(zip(self.variables, state))
        return env

    def property(self, selector: str) -> A.PropertySpec:
        for p in self.properties:
            if p.name == selector:
                return p
        raise KeyError(selector)

    def _scope(self) -> dict[str, str]:
        scope = {name: _const_type(v) for name, v in self.constants.items()}
        scope.update((v, INT) for v in self.variables)
        return scope


def _const_type(v: Value) -> str:
    if isinstance(v, bool):
        return BOOL
    return INT if isinstance(v, int) else REAL


def _eval_constants(decls: Iterable[A.ConstDecl]) -> dict[str, Value]:
    values: dict[str, Value] = {}
    for c in decls:
        typer = _Typer({k: _const_type(v) for k, v in values.items()})
        t = typer.infer(c.expr)
        declared = {"int": INT, "double": REAL, "bool": BOOL, None: t}[c.type]
        if declared == REAL and _numeric(t):
            v = float(evaluate(c.expr, values))
        elif declared != t:
            raise ModelTypeError(format_expr(c.expr), declared, t, f"constant {c.name}")
        else:
            v = evaluate(c.expr, values)
        values[c.name] = v
    return values


def _const_int(e: A.Expr, constants: dict[str, Value], what: str) -> int:
    typer = _Typer({k: _const_type(v) for k, v in constants.items()})
    t = typer.infer(e)
    if t != INT:
        raise ModelTypeError(format_expr(e), INT, t, what)
    v = evaluate(e, constants)
    if not I32_MIN <= v <= I32_MAX:
        raise ModelError(f"{what}: value {v} does not fit a 32-bit signed integer")
    return v


def type_check(ast: A.ModelAst, props: Optional[Sequence[A.PropertySpec]] = None,
               part: Optional[A.PartitionSpec] = None) -> TypedModel:
    """Check ``ast`` and compile it.

    ``props`` and ``part`` default to the properties and partition declared
    in the model itself.  Without any partition declaration every state
    lands in partition 1.
    """
    props = list(ast.properties if props is None else props)
    part = ast.partition if part is None else part

    constants = _eval_constants(ast.constants)
    names = [v.name for v in ast.variables]
    lower, upper, init = [], [], []
    for v in ast.variables:
        lo = _const_int(v.lower, constants, f"lower bound of {v.name}")
        hi = _const_int(v.upper, constants, f"upper bound of {v.name}")
        iv = _const_int(v.init, constants, f"initial value of {v.name}")
        if not lo <= iv <= hi:
            raise ModelError(f"initial value {iv} of {v.name} outside {lo}..{hi}")
        lower.append(lo)
        upper.append(hi)
        init.append(iv)

    scope = {k: _const_type(v) for k, v in constants.items()}
    scope.update((n, INT) for n in names)
    typer = _Typer(scope)

    commands = []
    for cmd in ast.commands:
        typer.want(cmd.guard, BOOL)
        if cmd.reward is not None:
            typer.want(cmd.reward, REAL)
        alts = []
        for alt in cmd.alternatives:
            typer.want(alt.probability, REAL)
            reward = alt.reward if alt.reward is not None else cmd.reward
            if alt.reward is not None:
                typer.want(alt.reward, REAL)
            assigned = {}
            for u in alt.updates:
                typer.want(u.expr, INT)
                assigned[u.var] = u.expr
            targets = [assigned.get(n, A.Ident(n)) for n in names]
            alts.append(CompiledAlternative(
                probability=compile_expr(alt.probability, names, constants),
                reward=compile_expr(reward if reward is not None else A.IntLit(0), names, constants),
                update=emit_tuple(targets, names, constants),
            ))
        commands.append(CompiledCommand(compile_expr(cmd.guard, names, constants), alts, cmd))

    for p in props:
        typer.want(p.target, BOOL)

    if part is not None:
        typer.want(part.expr, INT)
        bound = (DEFAULT_PARTITION_BOUND if part.bound is None
                 else _const_int(part.bound, constants, "partition bound"))
        if bound < 1:
            raise ModelError(f"partition bound must be positive, got {bound}")
        partition_fn = compile_expr(part.expr, names, constants)
    else:
        bound = 1
        partition_fn = compile_expr(A.IntLit(1), names, constants)

    model = TypedModel(ast, constants, tuple(names), tuple(lower), tuple(upper), tuple(init),
                       commands, part, bound, partition_fn, props, typer.types)
    for p in props:
        model.target_fn(p)
    return model


def with_partition(model: TypedModel, part: A.PartitionSpec) -> TypedModel:
    """Copy of ``model`` using a different partitioning expression."""
    typer = _Typer(model._scope())
    typer.want(part.expr, INT)
    bound = (DEFAULT_PARTITION_BOUND if part.bound is None
             else _const_int(part.bound, model.constants, "partition bound"))
    if bound < 1:
        raise ModelError(f"partition bound must be positive, got {bound}")
    types = dict(model.types)
    types.update(typer.types)
    return replace(model, partition=part, partition_bound=bound,
                    partition_fn=model.compile(part.expr), types=types)
