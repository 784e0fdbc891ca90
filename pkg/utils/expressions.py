"""
Arithmetic expressions in one variable (`x`, or `alpha` for temperature maps),
used by model documents.

Grammar: numbers, `x`, `+ - * / ^`, unary minus, parentheses and the
functions sin, cos, exp, abs. Expressions evaluate on numpy arrays and
differentiate symbolically, so document models get analytic gradients.
"""
from dataclasses import dataclass

import numpy as np
import pyparsing as pp

from utils.errors import ModelParseError

pp.ParserElement.enable_packrat()

FUNCTIONS = {
    'sin': np.sin,
    'cos': np.cos,
    'exp': np.exp,
    'abs': np.abs,
}


# ---------------------------------------------
# AST
# ---------------------------------------------
class Node:
    def evaluate(self, x):
        raise NotImplementedError

    def diff(self):
        raise NotImplementedError

    def depends_on_x(self):
        return True


@dataclass(frozen=True)
class Num(Node):
    value: float

    def evaluate(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def diff(self):
        return Num(0.0)

    def depends_on_x(self):
        return False

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Node):
    def evaluate(self, x):
        return np.asarray(x, dtype=float)

    def diff(self):
        return Num(1.0)

    def __str__(self):
        return 'x'


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def evaluate(self, x):
        return -self.arg.evaluate(x)

    def diff(self):
        return Neg(self.arg.diff())

    def depends_on_x(self):
        return self.arg.depends_on_x()

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, x):
        a = self.left.evaluate(x)
        b = self.right.evaluate(x)
        if self.op == '+':
            return a + b
        if self.op == '-':
            return a - b
        if self.op == '*':
            return a * b
        if self.op == '/':
            return a / b
        return np.power(a, b)

    def diff(self):
        a, b = self.left, self.right
        da, db = a.diff(), b.diff()
        if self.op in ('+', '-'):
            return BinOp(self.op, da, db)
        if self.op == '*':
            return BinOp('+', BinOp('*', da, b), BinOp('*', a, db))
        if self.op == '/':
            top = BinOp('-', BinOp('*', da, b), BinOp('*', a, db))
            return BinOp('/', top, BinOp('^', b, Num(2.0)))
        if not b.depends_on_x():
            # d(a^c) = c a^(c-1) da
            lowered = BinOp('^', a, BinOp('-', b, Num(1.0)))
            return BinOp('*', BinOp('*', b, lowered), da)
        # d(a^b) = a^b (db log a + b da / a)
        log_a = Call('log', a)
        inner = BinOp('+', BinOp('*', db, log_a), BinOp('/', BinOp('*', b, da), a))
        return BinOp('*', self, inner)

    def depends_on_x(self):
        return self.left.depends_on_x() or self.right.depends_on_x()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Node):
    fn: str
    arg: Node

    def evaluate(self, x):
        inner = self.arg.evaluate(x)
        if self.fn == 'log':
            return np.log(inner)
        if self.fn == 'sign':
            return np.sign(inner)
        return FUNCTIONS[self.fn](inner)

    def diff(self):
        da = self.arg.diff()
        if self.fn == 'sin':
            outer = Call('cos', self.arg)
        elif self.fn == 'cos':
            outer = Neg(Call('sin', self.arg))
        elif self.fn == 'exp':
            outer = self
        elif self.fn == 'abs':
            outer = Call('sign', self.arg)
        elif self.fn == 'log':
            outer = BinOp('/', Num(1.0), self.arg)
        else:
            outer = Num(0.0)
        return BinOp('*', outer, da)

    def depends_on_x(self):
        return self.arg.depends_on_x()

    def __str__(self):
        return f"{self.fn}({self.arg})"


# ---------------------------------------------
# Grammar
# ---------------------------------------------
@dataclass(frozen=True)
class _Ident:
    name: str
    loc: int


@dataclass(frozen=True)
class _CallToken:
    name: str
    loc: int
    arg: object


def _make_grammar():
    number = pp.Regex(r'(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?')
    number.set_parse_action(lambda t: float(t[0]))
    ident = pp.Word(pp.alphas + '_', pp.alphanums + '_')

    expr = pp.Forward()
    lpar, rpar = pp.Suppress('('), pp.Suppress(')')
    call = ident + lpar + expr + rpar
    call.set_parse_action(lambda s, loc, t: _CallToken(t[0], loc, t[1]))
    var = ident.copy().set_parse_action(lambda s, loc, t: _Ident(t[0], loc))

    atom = number | call | var | lpar + expr + rpar
    # the exponent is a signed factor, so x^-2 parses while -x^2 stays -(x^2)
    factor = pp.Forward()
    power = pp.Group(atom + pp.Opt('^' + factor))
    factor <<= pp.Group(pp.one_of('+ -') + factor) | power
    term = pp.Group(factor + pp.ZeroOrMore(pp.one_of('* /') + factor))
    expr <<= pp.Group(term + pp.ZeroOrMore(pp.one_of('+ -') + term))
    return expr


_GRAMMAR = _make_grammar()


def _build(token, source, variable='x'):
    if isinstance(token, float):
        return Num(token)
    if isinstance(token, _Ident):
        if token.name != variable:
            raise ModelParseError(f"unknown token '{token.name}' in '{source}'")
        return Var()
    if isinstance(token, _CallToken):
        if token.name not in FUNCTIONS:
            raise ModelParseError(f"unknown function '{token.name}' in '{source}'")
        return Call(token.name, _build(token.arg, source, variable))

    items = list(token)
    if len(items) == 1:
        return _build(items[0], source, variable)
    if len(items) == 2:
        # unary sign
        arg = _build(items[1], source, variable)
        return Neg(arg) if items[0] == '-' else arg
    if items[1] == '^':
        # right associative
        node = _build(items[-1], source, variable)
        for i in range(len(items) - 3, -1, -2):
            node = BinOp('^', _build(items[i], source, variable), node)
        return node
    node = _build(items[0], source, variable)
    for i in range(1, len(items), 2):
        node = BinOp(items[i], node, _build(items[i + 1], source, variable))
    return node


class Expression:
    """A parsed expression, callable on scalars or numpy arrays."""

    def __init__(self, source, node=None, variable='x'):
        self.source = source
        self.variable = variable
        if node is None:
            try:
                parsed = _GRAMMAR.parse_string(source, parse_all=True)
            except pp.ParseException as e:
                raise ModelParseError(f"cannot parse '{source}': {e.msg} at column {e.col}")
            node = _build(parsed[0], source, variable)
        self.node = node

    def __call__(self, x):
        return self.node.evaluate(x)

    def derivative(self):
        return Expression(f"d/d{self.variable}[{self.source}]", self.node.diff(), self.variable)

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse_expression(source, variable='x'):
    if not isinstance(source, str) or not source.strip():
        raise ModelParseError(f"expression must be a non-empty string, got {source!r}")
    return Expression(source.strip(), variable=variable)
