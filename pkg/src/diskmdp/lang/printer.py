"""Pretty-printer producing source text that parses back to the same tree."""
from __future__ import annotations

from . import ast as A


def format_expr(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.RealLit):
        return repr(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Ident):
        return e.name
    if isinstance(e, A.Unary):
        return f"({e.op}({format_expr(e.operand)}))"
    if isinstance(e, A.Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, A.Cond):
        return f"({format_expr(e.cond)} ? {format_expr(e.then)} : {format_expr(e.other)})"
    raise TypeError(f"not an expression: {e!r}")


def format_property(p: A.PropertySpec) -> str:
    return f"{p.kind}{p.direction}=? [F {format_expr(p.target)}]"


def _format_alternative(alt: A.Alternative) -> str:
    if alt.updates:
        updates = " & ".join(f"({u.var}'={format_expr(u.expr)})" for u in alt.updates)
    else:
        updates = "true"
    text = f"{format_expr(alt.probability)} : {updates}"
    if alt.reward is not None:
        text += f" {{{format_expr(alt.reward)}}}"
    return text


def format_model(m: A.ModelAst) -> str:
    lines = []
    for c in m.constants:
        ctype = f"{c.type} " if c.type else ""
        lines.append(f"const {ctype}{c.name} = {format_expr(c.expr)};")
    for v in m.variables:
        lines.append(f"var {v.name} : {format_expr(v.lower)}..{format_expr(v.upper)} "
                     f"init {format_expr(v.init)};")
    for cmd in m.commands:
        alts = " + ".join(_format_alternative(a) for a in cmd.alternatives)
        line = f"[{cmd.label or ''}] {format_expr(cmd.guard)} -> {alts}"
        if cmd.reward is not None:
            line += f" reward {format_expr(cmd.reward)}"
        lines.append(line + ";")
    for p in m.properties:
        name = f"{p.name} = " if p.name else ""
        lines.append(f"property {name}{format_property(p)};")
    if m.partition is not None:
        line = f"partition {format_expr(m.partition.expr)}"
        if m.partition.bound is not None:
            line += f" bound {format_expr(m.partition.bound)}"
        lines.append(line + ";")
    return "\n".join(lines) + "\n"
