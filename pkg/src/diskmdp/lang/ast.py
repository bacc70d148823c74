"""Syntax tree for the guarded-command model language.

Nodes are frozen dataclasses so that two trees compare equal iff they are
structurally identical.  Source positions are carried along for error
messages but excluded from comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Pos = Optional[tuple[int, int]]


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RealLit:
    value: float
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ident:
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cond:
    cond: "Expr"
    then: "Expr"
    other: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


Expr = Union[IntLit, RealLit, BoolLit, Ident, Unary, Binary, Call, Cond]

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&", "|")
FUNCTIONS = {"min": (1, None), "max": (1, None), "floor": (1, 1), "ceil": (1, 1),
             "mod": (2, 2), "abs": (1, 1)}


@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: Optional[str]  # "int", "double", "bool" or None (inferred)
    expr: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VariableDecl:
    name: str
    lower: Expr
    upper: Expr
    init: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Update:
    var: str
    expr: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Alternative:
    probability: Expr
    updates: tuple[Update, ...]
    reward: Optional[Expr] = None  # per-branch reward; None falls back to the command's


@dataclass(frozen=True)
class GuardedCommand:
    label: Optional[str]
    guard: Expr
    alternatives: tuple[Alternative, ...]
    reward: Optional[Expr] = None
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class PropertySpec:
    name: Optional[str]
    kind: str  # "P" (reach probability) or "R" (expected reward)
    direction: str  # "max" or "min"
    target: Expr
    pos: Pos = field(default=None, compare=False, repr=False)

    @property
    def is_reward(self) -> bool:
        return self.kind == "R"


@dataclass(frozen=True)
class PartitionSpec:
    expr: Expr
    bound: Optional[Expr] = None
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ModelAst:
    constants: tuple[ConstDecl, ...]
    variables: tuple[VariableDecl, ...]
    commands: tuple[GuardedCommand, ...]
    properties: tuple[PropertySpec, ...] = ()
    partition: Optional[PartitionSpec] = None

    def property(self, name: str) -> PropertySpec:
        for p in self.properties:
            if p.name == name:
                return p
        raise KeyError(name)


def walk(expr: Expr):
    """Yield every node of an expression tree, parents first."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Unary):
            stack.append(node.operand)
        elif isinstance(node, Binary):
            stack.extend((node.right, node.left))
        elif isinstance(node, Call):
            stack.extend(reversed(node.args))
        elif isinstance(node, Cond):
            stack.extend((node.other, node.then, node.cond))
