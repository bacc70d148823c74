"""Recursive-descent parser for the guarded-command model language.

Grammar (informal)::

    model     := { stmt }
    stmt      := "const" [type] IDENT ["=" expr] ";"
               | "var" IDENT ":" expr ".." expr "init" expr ";"
               | "[" [IDENT] "]" expr "->" alts ["reward" expr] ";"
               | "property" [IDENT "="] prop ";"
               | "partition" expr ["bound" expr] ";"
    alts      := alt { "+" alt }
    alt       := expr ":" updates ["{" expr "}"] | updates
    updates   := "true" | "(" IDENT "'" "=" expr ")" { "&" "(" ... ")" }
    prop      := ("Pmax" | "Pmin" | "Rmax" | "Rmin") "=" "?" "[" "F" expr "]"

Comments start with ``//`` and run to the end of the line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from ..errors import ModelSyntaxError, SyntaxIssue
from . import ast as A

KEYWORDS = {"const", "var", "init", "property", "partition", "bound", "reward",
            "true", "false", "int", "double", "bool"}
PROPERTY_HEADS = {"Pmax": ("P", "max"), "Pmin": ("P", "min"),
                  "Rmax": ("R", "max"), "Rmin": ("R", "min")}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<real>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>\.\.|->|<=|>=|!=|[-+*/=<>&|!?:;,()\[\]{}'])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "real", "ident", "kw", "sym", "eof"
    text: str
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


class _Abort(Exception):
    def __init__(self, issue: SyntaxIssue):
        self.issue = issue


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ModelSyntaxError([SyntaxIssue(line, i - line_start + 1,
                                                f"unexpected character {text[i]!r}")])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            value = m.group()
            if kind == "ident" and value in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, value, line, i - line_start + 1))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "kw") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, message: str, *expected: str):
        t = self.tok
        found = t.text if t.kind != "eof" else "end of input"
        raise _Abort(SyntaxIssue(t.line, t.col, f"{message}, found {found!r}", expected))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail("unexpected token", repr(text))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail("unexpected token", "identifier")
        return self.advance()

    def skip_statement(self):
        while not self.at(";") and self.tok.kind != "eof":
            self.advance()
        if self.at(";"):
            self.advance()

    # -- expressions -------------------------------------------------------
    def expr(self) -> A.Expr:
        start = self.tok
        cond = self.disjunction()
        if self.at("?"):
            self.advance()
            then = self.expr()
            self.expect(":")
            other = self.expr()
            return A.Cond(cond, then, other, start.pos)
        return cond

    def disjunction(self) -> A.Expr:
        left = self.conjunction()
        while self.at("|"):
            t = self.advance()
            left = A.Binary("|", left, self.conjunction(), t.pos)
        return left

    def conjunction(self) -> A.Expr:
        left = self.negation()
        while self.at("&"):
            t = self.advance()
            left = A.Binary("&", left, self.negation(), t.pos)
        return left

    def negation(self) -> A.Expr:
        if self.at("!"):
            t = self.advance()
            return A.Unary("!", self.negation(), t.pos)
        return self.comparison()

    def comparison(self) -> A.Expr:
        left = self.additive()
        if self.tok.kind == "sym" and self.tok.text in A.CMP_OPS:
            t = self.advance()
            left = A.Binary(t.text, left, self.additive(), t.pos)
        return left

    def additive(self) -> A.Expr:
        left = self.multiplicative()
        while self.at("+") or self.at("-"):
            t = self.advance()
            left = A.Binary(t.text, left, self.multiplicative(), t.pos)
        return left

    def multiplicative(self) -> A.Expr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            t = self.advance()
            left = A.Binary(t.text, left, self.unary(), t.pos)
        return left

    def unary(self) -> A.Expr:
        if self.at("-"):
            t = self.advance()
            operand = self.unary()
            # fold negative literals so that printing and re-parsing is stable
            if isinstance(operand, A.IntLit):
                return A.IntLit(-operand.value, t.pos)
            if isinstance(operand, A.RealLit):
                return A.RealLit(-operand.value, t.pos)
            return A.Unary("-", operand, t.pos)
        return self.atom()

    def atom(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(int(t.text), t.pos)
        if t.kind == "real":
            self.advance()
            return A.RealLit(float(t.text), t.pos)
        if self.at("true") or self.at("false"):
            self.advance()
            return A.BoolLit(t.text == "true", t.pos)
        if t.kind == "ident":
            self.advance()
            if self.at("(") and t.text in A.FUNCTIONS:
                self.advance()
                args = [self.expr()]
                while self.at(","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                lo, hi = A.FUNCTIONS[t.text]
                if len(args) < lo or (hi is not None and len(args) > hi):
                    raise _Abort(SyntaxIssue(t.line, t.col,
                                             f"wrong number of arguments to {t.text}"))
                return A.Call(t.text, tuple(args), t.pos)
            return A.Ident(t.text, t.pos)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("expected an expression", "number", "identifier", "'('")

    # -- statements --------------------------------------------------------
    def model(self) -> tuple[A.ModelAst, list[SyntaxIssue]]:
        consts, variables, commands, props, partitions = [], [], [], [], []
        issues: list[SyntaxIssue] = []
        while self.tok.kind != "eof":
            try:
                if self.at("const"):
                    consts.append(self.const_decl())
                elif self.at("var"):
                    variables.append(self.var_decl())
                elif self.at("["):
                    commands.append(self.command())
                elif self.at("property"):
                    props.append(self.property_stmt())
                elif self.at("partition"):
                    partitions.append(self.partition_stmt())
                else:
                    self.fail("expected a declaration",
                              "'const'", "'var'", "'['", "'property'", "'partition'")
            except _Abort as abort:
                issues.append(abort.issue)
                self.skip_statement()
        if len(partitions) > 1:
            line, col = partitions[1].pos
            issues.append(SyntaxIssue(line, col, "duplicate partition declaration"))
        model = A.ModelAst(tuple(consts), tuple(variables), tuple(commands), tuple(props),
                           partitions[0] if partitions else None)
        return model, issues

    def const_decl(self) -> A.ConstDecl:
        start = self.expect("const")
        ctype = None
        if self.at("int") or self.at("double") or self.at("bool"):
            ctype = self.advance().text
        name = self.expect_ident().text
        expr = None
        if self.at("="):
            self.advance()
            expr = self.expr()
        self.expect(";")
        return A.ConstDecl(name, ctype, expr, start.pos)

    def var_decl(self) -> A.VariableDecl:
        start = self.expect("var")
        name = self.expect_ident().text
        self.expect(":")
        lower = self.additive()
        self.expect("..")
        upper = self.additive()
        self.expect("init")
        init = self.expr()
        self.expect(";")
        return A.VariableDecl(name, lower, upper, init, start.pos)

    def command(self) -> A.GuardedCommand:
        start = self.expect("[")
        label = None
        if self.tok.kind == "ident":
            label = self.advance().text
        self.expect("]")
        guard = self.expr()
        self.expect("->")
        alts = [self.alternative()]
        while self.at("+"):
            self.advance()
            alts.append(self.alternative())
        reward = None
        if self.at("reward"):
            self.advance()
            reward = self.expr()
        self.expect(";")
        return A.GuardedCommand(label, guard, tuple(alts), reward, start.pos)

    def _at_updates(self) -> bool:
        if self.at("(") and self.peek().kind == "ident" and self.peek(2).text == "'":
            return True
        return self.at("true") and self.peek().text in (";", "+", "{", "reward")

    def alternative(self) -> A.Alternative:
        if self._at_updates():
            prob: A.Expr = A.IntLit(1, self.tok.pos)
        else:
            prob = self.expr()
            self.expect(":")
        updates = self.updates()
        reward = None
        if self.at("{"):
            self.advance()
            reward = self.expr()
            self.expect("}")
        return A.Alternative(prob, updates, reward)

    def updates(self) -> tuple[A.Update, ...]:
        if self.at("true"):
            self.advance()
            return ()
        result = [self.update()]
        while self.at("&"):
            self.advance()
            result.append(self.update())
        return tuple(result)

    def update(self) -> A.Update:
        start = self.expect("(")
        name = self.expect_ident().text
        self.expect("'")
        self.expect("=")
        e = self.expr()
        self.expect(")")
        return A.Update(name, e, start.pos)

    def property_stmt(self) -> A.PropertySpec:
        self.expect("property")
        name = None
        if self.tok.kind == "ident" and self.peek().text == "=" and self.peek(2).text != "?":
            name = self.advance().text
            self.expect("=")
        prop = self.property_body(name)
        self.expect(";")
        return prop

    def property_body(self, name: Optional[str]) -> A.PropertySpec:
        head = self.tok
        if head.kind != "ident" or head.text not in PROPERTY_HEADS:
            self.fail("expected a property operator", *PROPERTY_HEADS)
        self.advance()
        kind, direction = PROPERTY_HEADS[head.text]
        self.expect("=")
        self.expect("?")
        self.expect("[")
        if not (self.tok.kind == "ident" and self.tok.text == "F"):
            self.fail("only eventually-properties are supported", "'F'")
        self.advance()
        target = self.expr()
        self.expect("]")
        return A.PropertySpec(name, kind, direction, target, head.pos)

    def partition_stmt(self) -> A.PartitionSpec:
        start = self.expect("partition")
        spec = self.partition_body(start)
        self.expect(";")
        return spec

    def partition_body(self, start: Token) -> A.PartitionSpec:
        e = self.expr()
        bound = None
        if self.at("bound"):
            self.advance()
            bound = self.expr()
        return A.PartitionSpec(e, bound, start.pos)


def _check_names(model: A.ModelAst) -> list[SyntaxIssue]:
    """Duplicate declarations and unknown identifiers."""
    issues = []

    def issue(pos, message):
        line, col = pos if pos else (0, 0)
        issues.append(SyntaxIssue(line, col, message))

    consts: set[str] = set()
    variables: set[str] = set()

    def check_expr(e: Optional[A.Expr], allowed: set[str], context: str):
        if e is None:
            return
        for node in A.walk(e):
            if isinstance(node, A.Ident) and node.name not in allowed:
                issue(node.pos, f"unknown identifier {node.name!r} in {context}")

    for c in model.constants:
        if c.name in consts:
            issue(c.pos, f"duplicate declaration of {c.name!r}")
        check_expr(c.expr, consts, f"constant {c.name}")
        consts.add(c.name)
    for v in model.variables:
        if v.name in consts or v.name in variables:
            issue(v.pos, f"duplicate declaration of {v.name!r}")
        for e in (v.lower, v.upper, v.init):
            check_expr(e, consts, f"declaration of {v.name}")
        variables.add(v.name)
    scope = consts | variables
    for cmd in model.commands:
        check_expr(cmd.guard, scope, "guard")
        check_expr(cmd.reward, scope, "reward")
        for alt in cmd.alternatives:
            check_expr(alt.probability, scope, "probability")
            check_expr(alt.reward, scope, "reward")
            seen = set()
            for u in alt.updates:
                if u.var not in variables:
                    issue(u.pos, f"update of undeclared variable {u.var!r}")
                if u.var in seen:
                    issue(u.pos, f"variable {u.var!r} updated twice in one alternative")
                seen.add(u.var)
                check_expr(u.expr, scope, f"update of {u.var}")
    names = set()
    for p in model.properties:
        if p.name is not None:
            if p.name in names:
                issue(p.pos, f"duplicate property name {p.name!r}")
            names.add(p.name)
        check_expr(p.target, scope, "property")
    if model.partition is not None:
        check_expr(model.partition.expr, scope, "partition expression")
        check_expr(model.partition.bound, consts, "partition bound")
    return issues


def _literal(value) -> A.Expr:
    if isinstance(value, bool):
        return A.BoolLit(value)
    if isinstance(value, int):
        return A.IntLit(value)
    if isinstance(value, float):
        return A.RealLit(value)
    raise TypeError(f"constant override must be bool, int or float, not {type(value).__name__}")


def parse_model(text: str, constants: Optional[Mapping[str, object]] = None) -> A.ModelAst:
    """Parse model source text.

    ``constants`` overrides (or supplies) values of ``const`` declarations.
    Raises :class:`ModelSyntaxError` listing every issue found.
    """
    parser = Parser(text)
    model, issues = parser.model()
    if constants:
        decls = list(model.constants)
        known = {c.name: k for k, c in enumerate(decls)}
        for name, value in constants.items():
            if name not in known:
                issues.append(SyntaxIssue(0, 0, f"override for undeclared constant {name!r}"))
                continue
            decls[known[name]] = replace(decls[known[name]], expr=_literal(value))
        model = replace(model, constants=tuple(decls))
    issues.extend(_check_names(model))
    for c in model.constants:
        if c.expr is None:
            line, col = c.pos or (0, 0)
            issues.append(SyntaxIssue(line, col, f"constant {c.name!r} has no value"))
    if issues:
        raise ModelSyntaxError(sorted(issues, key=lambda i: (i.line, i.column)))
    return model


def _parse_fragment(text: str, rule: str):
    parser = Parser(text)
    try:
        result = getattr(parser, rule)()
        if parser.tok.kind != "eof":
            parser.fail("trailing input", "end of input")
    except _Abort as abort:
        raise ModelSyntaxError([abort.issue]) from None
    return result


def parse_expression(text: str) -> A.Expr:
    return _parse_fragment(text, "expr")


def parse_property(text: str, name: Optional[str] = None) -> A.PropertySpec:
    """Parse an inline property such as ``Pmax=? [F c=2]``."""
    parser = Parser(text)
    try:
        prop = parser.property_body(name)
        if parser.tok.kind != "eof":
            parser.fail("trailing input", "end of input")
    except _Abort as abort:
        raise ModelSyntaxError([abort.issue]) from None
    return prop


def parse_partition(text: str) -> A.PartitionSpec:
    """Parse a partition override such as ``c + 1 bound 3``."""
    parser = Parser(text)
    try:
        spec = parser.partition_body(parser.tok)
        if parser.tok.kind != "eof":
            parser.fail("trailing input", "end of input")
    except _Abort as abort:
        raise ModelSyntaxError([abort.issue]) from None
    return spec
