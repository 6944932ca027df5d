"""Recursive-descent parser for the metric grammar.

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | atom ('^' exponent)?
    atom     := number | 'v' digit+ | '(' expr ')'
              | 'sqrt' '(' expr ')' | 'abs' '(' expr ')'
              | 'pow' '(' expr ',' exponent ')'
    exponent := rational | '-' rational | '(' '-'? rational ')'
    rational := integer ('/' integer)?

Note that ``v1^2/3`` reads as ``v1^(2/3)``: an integer directly after the
exponent's slash belongs to the exponent.  Write ``v1^2 / (3)`` or
``(v1^2)/3`` for a quotient.
"""

from dataclasses import dataclass
from fractions import Fraction
import re

from .errors import DimensionError, MetricSyntaxError
from .expr import MAX_DEPTH, Abs, Add, Const, Div, Mul, Neg, Pow, Sqrt, Sub, Var, depth

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

_FUNCS = ("sqrt", "abs", "pow")
_ATOM_START = ("number", "variable", "'('", "'sqrt'", "'abs'", "'pow'")


@dataclass(frozen=True)
class Token:
    kind: str  # number | name | op | end
    text: str
    pos: int


def tokenize(text):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise MetricSyntaxError(f"unexpected character {text[pos]!r}", pos, _ATOM_START + ("operator",))
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, dim):
        self.tokens = tokenize(text)
        self.i = 0
        self.dim = dim
        self.nesting = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def _peek(self, k=1):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def _is(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def _accept(self, text):
        if self._is(text):
            self.i += 1
            return True
        return False

    def _expect(self, text):
        if not self._accept(text):
            self._fail(f"'{text}'")

    def _fail(self, *expected):
        tok = self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise MetricSyntaxError(f"unexpected {what}", tok.pos, expected)

    def _enter(self):
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            raise MetricSyntaxError(f"expression nested deeper than {MAX_DEPTH}", self.tok.pos)

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("operator", "end of input")
        if depth(node) > MAX_DEPTH:
            raise MetricSyntaxError(f"expression tree deeper than {MAX_DEPTH}", 0)
        return node

    def expr(self):
        self._enter()
        node = self.term()
        while self._is("+") or self._is("-"):
            op = self.tok.text
            self.i += 1
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        self.nesting -= 1
        return node

    def term(self):
        node = self.factor()
        while self._is("*") or self._is("/"):
            op = self.tok.text
            self.i += 1
            right = self.factor()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def factor(self):
        if self._accept("-"):
            self._enter()
            node = Neg(self.factor())
            self.nesting -= 1
            return node
        node = self.atom()
        if self._accept("^"):
            node = Pow(node, self.exponent())
        return node

    def _integer(self):
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            self._fail("integer")
        self.i += 1
        return int(tok.text)

    def _rational(self, sign=1):
        start = self.tok.pos
        num = self._integer()
        den = 1
        nxt = self._peek()
        if self._is("/") and nxt.kind == "number" and nxt.text.isdigit():
            self.i += 1
            den = self._integer()
            if den == 0:
                raise MetricSyntaxError("zero denominator in exponent", start)
        return Fraction(sign * num, den)

    def exponent(self):
        if self._accept("("):
            sign = -1 if self._accept("-") else 1
            r = self._rational(sign)
            self._expect(")")
            return r
        if self._accept("-"):
            return self._rational(-1)
        return self._rational()

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            if tok.text.isdigit():
                return Const(Fraction(int(tok.text)))
            return Const(float(tok.text))
        if tok.kind == "name":
            if tok.text in _FUNCS:
                return self.call(tok.text)
            m = re.fullmatch(r"v(\d+)", tok.text)
            if m is None:
                raise MetricSyntaxError(f"unknown name {tok.text!r}", tok.pos, _ATOM_START)
            index = int(m.group(1))
            if not 1 <= index <= self.dim:
                raise DimensionError(
                    f"variable {tok.text} outside 1..{self.dim}", pos=tok.pos, index=index, dim=self.dim
                )
            self.i += 1
            return Var(index)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        self._fail(*_ATOM_START)

    def call(self, name):
        self.i += 1
        self._expect("(")
        arg = self.expr()
        if name == "pow":
            self._expect(",")
            sign = -1 if self._accept("-") else 1
            if self._is("("):
                r = self.exponent() * sign
            else:
                r = self._rational(sign)
            self._expect(")")
            return Pow(arg, r)
        self._expect(")")
        return Sqrt(arg) if name == "sqrt" else Abs(arg)


def parse_expr(text, dim):
    """Parse ``text`` into an expression tree over variables ``v1..v<dim>``."""
    if not text or not text.strip():
        raise MetricSyntaxError("empty metric expression", 0, _ATOM_START)
    return _Parser(text, dim).parse()
