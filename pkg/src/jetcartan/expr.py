"""Arithmetic expression parser for scenario input.

Grammar (EBNF)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := base ('^' factor)?
    base   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

Precedence is ^ > unary minus > *,/ > +,- with ^ right-associative, so
``-x^2`` parses as ``-(x^2)`` and ``x^-2`` as ``x^(-2)``.  Functions:
sqrt, sin, cos, tan, exp, ln, pow(x, y).  NUMBER is decimal with optional
exponent.  Identifiers must name a chart coordinate or a declared parameter.
"""

from __future__ import annotations

from . import fields
from .charts import Chart

__all__ = [
    "ExprError", "parse_expression", "to_field", "pretty",
    "Num", "Name", "Unary", "Binary", "Call", "FUNCTIONS",
]

FUNCTIONS = {"sqrt": 1, "sin": 1, "cos": 1, "tan": 1, "exp": 1, "ln": 1, "pow": 2}


class ExprError(ValueError):
    """Syntax or name error, carrying the byte offset into the source."""

    def __init__(self, msg, offset):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


# -- AST --------------------------------------------------------------------

class Num:
    def __init__(self, value):
        self.value = value


class Name:
    """A coordinate or parameter reference; ``kind`` is 'coord' or 'param'."""

    def __init__(self, name, kind):
        self.name = name
        self.kind = kind


class Unary:
    def __init__(self, op, arg):
        self.op = op
        self.arg = arg


class Binary:
    def __init__(self, op, lhs, rhs):
        self.op = op
        self.lhs = lhs
        self.rhs = rhs


class Call:
    def __init__(self, func, args):
        self.func = func
        self.args = args


# -- tokenizer ---------------------------------------------------------------

_OPS = set("+-*/^(),")


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPS:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            try:
                val = float(lit)
            except ValueError:
                raise ExprError(f"bad number literal {lit!r}", i) from None
            tokens.append(("num", val, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExprError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


# -- recursive descent --------------------------------------------------------

class _Parser:
    def __init__(self, text, chart, params):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.chart = chart
        self.params = set(params or ())

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise ExprError(f"expected {kind!r}, found {tok[0]!r}", tok[2])
        return self.advance()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprError(f"unexpected {tok[0]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = Binary(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[0] == "-":
            self.advance()
            return Unary("-", self.factor())
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[0] == "^":
            self.advance()
            node = Binary("^", node, self.factor())
        return node

    def base(self):
        kind, value, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(value)
        if kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise ExprError(f"unknown function {value!r}", off)
                self.advance()
                args = [self.expr()]
                while self.peek()[0] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[value]:
                    raise ExprError(
                        f"function {value!r} takes {FUNCTIONS[value]} argument(s), "
                        f"got {len(args)}", off)
                return Call(value, args)
            if value in self.chart.coord_names:
                return Name(value, "coord")
            if value in self.params:
                return Name(value, "param")
            raise ExprError(f"unknown identifier {value!r}", off)
        raise ExprError(f"expected a value, found {kind!r}", off)


def parse_expression(text, chart: Chart, params=()):
    """Parse ``text`` into an AST over the chart's coordinates and parameters."""
    return _Parser(text, chart, params).parse()


# -- AST -> ScalarField --------------------------------------------------------

def to_field(node, chart: Chart, param_values=None):
    """Bind an AST to a chart, substituting numeric parameter values."""
    pv = param_values or {}

    def build(n):
        if isinstance(n, Num):
            return fields.const(chart, n.value)
        if isinstance(n, Name):
            if n.kind == "coord":
                return fields.CoordField(chart, chart.index(n.name))
            if n.name not in pv:
                raise KeyError(f"no value bound for parameter {n.name!r}")
            return fields.const(chart, pv[n.name])
        if isinstance(n, Unary):
            return fields.fneg(build(n.arg))
        if isinstance(n, Binary):
            lhs, rhs = build(n.lhs), build(n.rhs)
            if n.op == "+":
                return fields.fadd(lhs, rhs)
            if n.op == "-":
                return fields.fadd(lhs, fields.fneg(rhs))
            if n.op == "*":
                return fields.fmul(lhs, rhs)
            if n.op == "/":
                return fields.fdiv(lhs, rhs)
            if n.op == "^":
                return fields.fpow(lhs, rhs)
        if isinstance(n, Call):
            if n.func == "pow":
                return fields.fpow(build(n.args[0]), build(n.args[1]))
            return fields.ffunc(n.func, build(n.args[0]))
        raise TypeError(f"not an AST node: {n!r}")

    return build(node)


# -- pretty printer -------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "u-": 3, "^": 4}


def pretty(node):
    """Render an AST back to source; parse(pretty(ast)) rebuilds the same AST."""

    def render(n, parent_prec, right_of_same=False):
        if isinstance(n, Num):
            v = n.value
            s = repr(int(v)) if v == int(v) and abs(v) < 1e16 else repr(v)
            return s
        if isinstance(n, Name):
            return n.name
        if isinstance(n, Call):
            return n.func + "(" + ", ".join(render(a, 0) for a in n.args) + ")"
        if isinstance(n, Unary):
            inner = render(n.arg, _PREC["u-"])
            s = "-" + inner
            return "(" + s + ")" if parent_prec > _PREC["u-"] else s
        if isinstance(n, Binary):
            p = _PREC[n.op]
            if n.op == "^":
                # right-associative
                lhs = render(n.lhs, p + 1)
                rhs = render(n.rhs, p)
            else:
                lhs = render(n.lhs, p)
                rhs = render(n.rhs, p + 1)
            s = f"{lhs} {n.op} {rhs}" if n.op in "+-" else f"{lhs}{n.op}{rhs}"
            if p < parent_prec:
                return "(" + s + ")"
            return s
        raise TypeError(f"not an AST node: {n!r}")

    return render(node, 0)
