"""Potentials q(x): a small recursive-descent expression language plus tables.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

so ``-x^2`` reads as ``-(x^2)`` and ``2^-1`` is accepted.  Names are the
variable ``x``, the constants ``pi`` and ``e`` and the one-argument functions
``sin cos tan exp log sqrt abs``.

Expressions compile to an immutable tree that evaluates on numpy arrays.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ArityError, DomainError, NonFinite, PotentialSyntaxError, UnknownIdentifier

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


# -- tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def text(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var:
    def text(self):
        return "x"


@dataclass(frozen=True)
class Const:
    name: str

    def text(self):
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object

    def text(self):
        return f"({self.op}{self.operand.text()})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object

    def text(self):
        return f"({self.left.text()} {self.op} {self.right.text()})"


@dataclass(frozen=True)
class Call:
    name: str
    arg: object

    def text(self):
        return f"{self.name}({self.arg.text()})"


# -- parser -------------------------------------------------------------------


def _tokenize(text):
    tokens = []
    pos = 0
    raw = text.encode("utf-8")
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            offset = len(text[:pos].encode("utf-8")) + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise PotentialSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}", offset)
        kind = m.lastgroup
        start = len(text[: m.start(kind)].encode("utf-8"))
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, tok, off = self.take()
        if tok != value:
            found = "end of input" if kind == "end" else repr(tok)
            raise PotentialSyntaxError(f"expected {value!r}, found {found}", off)

    def parse(self):
        tree = self.expr()
        kind, tok, off = self.peek()
        if kind != "end":
            raise PotentialSyntaxError(f"unexpected {tok!r}", off)
        return tree

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        kind, tok, _ = self.peek()
        if kind == "op" and tok in ("-", "+"):
            self.take()
            return Unary(tok, self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, tok, off = self.take()
        if kind == "num":
            return Num(float(tok))
        if kind == "name":
            if self.peek()[1] == "(":
                if tok in CONSTANTS or tok == "x":
                    raise ArityError(f"{tok!r} takes no arguments (byte offset {off})")
                if tok not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {tok!r} at byte offset {off}")
                self.take()
                if self.peek()[1] == ")":
                    raise ArityError(f"{tok} takes 1 argument, got 0")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ArityError(f"{tok} takes 1 argument, got {len(args)}")
                return Call(tok, args[0])
            if tok in FUNCTIONS:
                raise ArityError(f"{tok} takes 1 argument, got 0")
            if tok == "x":
                return Var()
            if tok in CONSTANTS:
                return Const(tok)
            raise UnknownIdentifier(f"unknown identifier {tok!r} at byte offset {off}")
        if tok == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(tok)
        raise PotentialSyntaxError(f"unexpected {found}", off)


def _evaluate(node, x):
    if isinstance(node, Num):
        return np.full_like(x, node.value)
    if isinstance(node, Var):
        return x.copy()
    if isinstance(node, Const):
        return np.full_like(x, CONSTANTS[node.name])
    if isinstance(node, Unary):
        v = _evaluate(node.operand, x)
        return -v if node.op == "-" else v
    if isinstance(node, Binary):
        left = _evaluate(node.left, x)
        right = _evaluate(node.right, x)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                return left / right
            return np.power(left, right)
    arg = _evaluate(node.arg, x)
    if node.name == "log" and np.any(arg <= 0):
        bad = x[np.argmax(arg <= 0)]
        raise DomainError(f"log of nonpositive value at x={bad:.6g}")
    if node.name == "sqrt" and np.any(arg < 0):
        bad = x[np.argmax(arg < 0)]
        raise DomainError(f"sqrt of negative value at x={bad:.6g}")
    with np.errstate(all="ignore"):
        return FUNCTIONS[node.name](arg)


def _depends_on_x(node):
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Unary):
        return _depends_on_x(node.operand)
    if isinstance(node, Binary):
        return _depends_on_x(node.left) or _depends_on_x(node.right)
    return _depends_on_x(node.arg)


# -- public surface -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A continuous real potential on [0, 1].

    ``source`` is the expression text or the ``(x, q)`` table; ``compiled``
    is the expression tree, or a monotone cubic interpolant for tables.
    """

    source: object
    compiled: object
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_table(self):
        return isinstance(self.compiled, PchipInterpolator)

    @property
    def is_constant(self):
        return not self.is_table and not _depends_on_x(self.compiled)

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((xs < 0.0) | (xs > 1.0)):
            raise DomainError("potential is only defined on [0, 1]")
        if self.is_table:
            nodes, values = self.source
            vals = self.compiled(xs)
            hit = np.searchsorted(nodes, xs)
            hit = np.clip(hit, 0, len(nodes) - 1)
            exact = nodes[hit] == xs
            vals[exact] = values[hit[exact]]
        else:
            vals = _evaluate(self.compiled, xs)
        if not np.all(np.isfinite(vals)):
            bad = xs[np.argmax(~np.isfinite(vals))]
            raise NonFinite("potential is not finite", bad)
        return float(vals[0]) if scalar else vals

    def sampled(self, n):
        """Values on ``n`` uniform points of [0, 1] (cached, read-only)."""
        vals = self._cache.get(n)
        if vals is None:
            vals = self(np.linspace(0.0, 1.0, n))
            vals.setflags(write=False)
            self._cache[n] = vals
        return vals

    def text(self):
        if self.is_table:
            nodes, values = self.source
            return "table:" + ";".join(f"{a!r},{b!r}" for a, b in zip(nodes, values))
        return self.compiled.text()

    def __eq__(self, other):
        if not isinstance(other, PotentialSpec):
            return NotImplemented
        if self.is_table or other.is_table:
            if not (self.is_table and other.is_table):
                return False
            return all(np.array_equal(s, o) for s, o in zip(self.source, other.source))
        return self.compiled == other.compiled

    def __hash__(self):
        return hash(self.text())


def parse_expression(text):
    """Parse ``text`` into an expression tree (no evaluation)."""
    if not isinstance(text, str) or not text.strip():
        raise PotentialSyntaxError("empty expression", 0)
    return _Parser(text).parse()


def parse_potential(text):
    """Compile an expression such as ``"x^2 - 1"`` into a :class:`PotentialSpec`."""
    return PotentialSpec(source=text, compiled=parse_expression(text))


def table_potential(xs, qs):
    """Potential from tabulated values, interpolated by monotone cubics."""
    nodes = np.array(xs, dtype=float)
    values = np.array(qs, dtype=float)
    if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 2:
        raise ValueError("table needs matching 1-D x and q columns with at least two rows")
    if np.any(np.diff(nodes) <= 0):
        raise ValueError("table abscissae must be strictly increasing")
    if nodes[0] > 0.0 or nodes[-1] < 1.0:
        raise ValueError("table must cover [0, 1]")
    if not np.all(np.isfinite(values)):
        raise NonFinite("table contains non-finite q values")
    nodes.setflags(write=False)
    values.setflags(write=False)
    return PotentialSpec(source=(nodes, values), compiled=PchipInterpolator(nodes, values))


def read_table_csv(path_or_text):
    """Read a ``x,q`` CSV table from a path or from literal CSV text."""
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    else:
        text = path_or_text
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "q"]:
        raise ValueError('table CSV must have the header "x,q"')
    xs, qs = [], []
    for row in reader:
        row = {k.strip(): v for k, v in row.items()}
        xs.append(float(row["x"]))
        qs.append(float(row["q"]))
    return table_potential(xs, qs)


def eval_potential(p, x):
    """Evaluate ``p`` at a point (or array of points) of [0, 1]."""
    return p(x)
