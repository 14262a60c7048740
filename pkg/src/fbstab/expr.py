"""Arithmetic expressions in one variable ``sigma``: parsing, exact symbolic
differentiation, and evaluation.

The supported language is deliberately tiny: numeric literals, the variable
``sigma``, the unary functions exp/log/sinh/cosh, unary minus, and the binary
operators ``+ - * / ^`` (with ``^`` right-associative and unary minus binding
tighter than ``*``).  This covers every analytic consumption/proliferation
law used anywhere else in the package; it is not a CAS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EvalDomainError, ParseError

_FUNCTIONS = ("exp", "log", "sinh", "cosh")
_UNARY_OPS = ("neg",) + _FUNCTIONS
_BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_MATH = {"exp": math.exp, "log": math.log, "sinh": math.sinh, "cosh": math.cosh}


class ExprAST:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True, slots=True)
class Const(ExprAST):
    value: float


@dataclass(frozen=True, slots=True)
class Var(ExprAST):
    pass


@dataclass(frozen=True, slots=True)
class Unary(ExprAST):
    op: str
    arg: ExprAST


@dataclass(frozen=True, slots=True)
class Binary(ExprAST):
    op: str
    left: ExprAST
    right: ExprAST


# ---------------------------------------------------------------------------
# parsing

class _Tokenizer:
    def __init__(self, src):
        self.src = src
        self.pos = 0
        self.tokens = []
        self._scan()
        self.idx = 0

    def _scan(self):
        src, i, n = self.src, 0, len(self.src)
        while i < n:
            c = src[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append((c, i))
                i += 1
                continue
            if c.isdigit() or c == ".":
                j = i
                while j < n and (src[j].isdigit() or src[j] == "."):
                    j += 1
                if j < n and src[j] in "eE":
                    k = j + 1
                    if k < n and src[k] in "+-":
                        k += 1
                    if k < n and src[k].isdigit():
                        j = k
                        while j < n and src[j].isdigit():
                            j += 1
                text = src[i:j]
                try:
                    value = float(text)
                except ValueError:
                    raise ParseError(f"bad numeric literal {text!r}", i) from None
                self.tokens.append((("num", value), i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                self.tokens.append((("name", src[i:j]), i))
                i = j
                continue
            raise ParseError(f"unexpected character {c!r}", i)
        self.tokens.append((("end", None), n))

    def peek(self):
        return self.tokens[self.idx][0]

    def offset(self):
        return self.tokens[self.idx][1]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok


def parse_expr(src: str) -> ExprAST:
    """Parse ``src`` into an AST.

    Raises :class:`ParseError` (with byte offset) on syntax errors, unknown
    identifiers and arity mistakes.
    """
    tz = _Tokenizer(src)
    ast = _parse_sum(tz)
    tok, off = tz.next()
    if tok != ("end", None):
        raise ParseError("trailing input", off)
    return ast


def _parse_sum(tz):
    node = _parse_term(tz)
    while tz.peek() in ("+", "-"):
        op, _ = tz.next()
        rhs = _parse_term(tz)
        node = Binary("add" if op == "+" else "sub", node, rhs)
    return node


def _parse_term(tz):
    node = _parse_factor(tz)
    while tz.peek() in ("*", "/"):
        op, _ = tz.next()
        rhs = _parse_factor(tz)
        node = Binary("mul" if op == "*" else "div", node, rhs)
    return node


def _parse_factor(tz):
    # unary minus binds tighter than * but looser than ^
    if tz.peek() == "-":
        tz.next()
        return Unary("neg", _parse_factor(tz))
    return _parse_power(tz)


def _parse_power(tz):
    base = _parse_atom(tz)
    if tz.peek() == "^":
        tz.next()
        # right-associative; exponent may carry its own unary minus
        return Binary("pow", base, _parse_factor(tz))
    return base


def _parse_atom(tz):
    tok, off = tz.next()
    if tok == "(":
        node = _parse_sum(tz)
        tok2, off2 = tz.next()
        if tok2 != ")":
            raise ParseError("expected ')'", off2)
        return node
    if isinstance(tok, tuple) and tok[0] == "num":
        return Const(tok[1])
    if isinstance(tok, tuple) and tok[0] == "name":
        name = tok[1]
        if name == "sigma":
            return Var()
        if name in _FUNCTIONS:
            tok2, off2 = tz.next()
            if tok2 != "(":
                raise ParseError(f"function {name!r} needs an argument list", off2)
            arg = _parse_sum(tz)
            tok3, off3 = tz.next()
            if tok3 == ",":
                raise ParseError(f"function {name!r} takes exactly one argument", off3)
            if tok3 != ")":
                raise ParseError("expected ')'", off3)
            return Unary(name, arg)
        raise ParseError(f"unknown identifier {name!r}", off)
    raise ParseError("expected a value", off)


# ---------------------------------------------------------------------------
# printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def pretty(ast: ExprAST) -> str:
    """Render ``ast`` with minimal parentheses; ``parse_expr`` inverts it."""
    if isinstance(ast, Const):
        return repr(ast.value)
    if isinstance(ast, Var):
        return "sigma"
    if isinstance(ast, Unary):
        if ast.op == "neg":
            inner = pretty(ast.arg)
            if _prec(ast.arg) < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{ast.op}({pretty(ast.arg)})"
    assert isinstance(ast, Binary)
    sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "^"}[ast.op]
    lhs, rhs = pretty(ast.left), pretty(ast.right)
    p = _PREC[ast.op]
    # left operand: parenthesize strictly lower precedence; for pow (right
    # assoc) also parenthesize an equal-precedence left operand
    if _prec(ast.left) < p or (ast.op == "pow" and _prec(ast.left) == p):
        lhs = f"({lhs})"
    # right operand: sub/div are left-associative, pow is right-associative
    rp = _prec(ast.right)
    if rp < p or (ast.op in ("sub", "div") and rp == p):
        rhs = f"({rhs})"
    # a negative literal or unary minus directly after an operator is fine
    # except when it would glue to '^' (2^-3 parses, but keep it readable)
    return f"{lhs}{sym}{rhs}"


def _prec(ast):
    if isinstance(ast, (Const, Var)):
        return 9 if not (isinstance(ast, Const) and ast.value < 0) else 3
    if isinstance(ast, Unary):
        return 9 if ast.op != "neg" else _PREC["neg"]
    return _PREC[ast.op]


# ---------------------------------------------------------------------------
# evaluation

def eval_expr(ast: ExprAST, sigma: float) -> float:
    """Evaluate ``ast`` at ``sigma`` in IEEE double precision.

    Domain violations raise :class:`EvalDomainError` instead of producing
    silent NaN/inf.
    """
    if isinstance(ast, Const):
        return ast.value
    if isinstance(ast, Var):
        return sigma
    if isinstance(ast, Unary):
        x = eval_expr(ast.arg, sigma)
        if ast.op == "neg":
            return -x
        if ast.op == "log" and x <= 0.0:
            raise EvalDomainError(f"log of non-positive value {x}")
        try:
            return _MATH[ast.op](x)
        except OverflowError:
            raise EvalDomainError(f"{ast.op}({x}) overflows") from None
    assert isinstance(ast, Binary)
    a = eval_expr(ast.left, sigma)
    b = eval_expr(ast.right, sigma)
    if ast.op == "add":
        return a + b
    if ast.op == "sub":
        return a - b
    if ast.op == "mul":
        return a * b
    if ast.op == "div":
        if b == 0.0:
            raise EvalDomainError("division by zero")
        return a / b
    # pow
    if a == 0.0 and b < 0.0:
        raise EvalDomainError("zero raised to a negative power")
    if a < 0.0 and b != round(b):
        raise EvalDomainError(f"negative base {a} with non-integer exponent {b}")
    try:
        return a ** b
    except OverflowError:
        raise EvalDomainError(f"{a}^{b} overflows") from None


# ---------------------------------------------------------------------------
# differentiation

def diff_expr(ast: ExprAST) -> ExprAST:
    """Exact derivative with respect to ``sigma``.

    The result is simplified only by constant folding and 0/1 elimination so
    that the returned tree stays recognizable.
    """
    if isinstance(ast, Const):
        return Const(0.0)
    if isinstance(ast, Var):
        return Const(1.0)
    if isinstance(ast, Unary):
        da = diff_expr(ast.arg)
        if ast.op == "neg":
            return _neg(da)
        if ast.op == "exp":
            return _mul(Unary("exp", ast.arg), da)
        if ast.op == "log":
            return _div(da, ast.arg)
        if ast.op == "sinh":
            return _mul(Unary("cosh", ast.arg), da)
        if ast.op == "cosh":
            return _mul(Unary("sinh", ast.arg), da)
    assert isinstance(ast, Binary)
    u, v = ast.left, ast.right
    du, dv = diff_expr(u), diff_expr(v)
    if ast.op == "add":
        return _add(du, dv)
    if ast.op == "sub":
        return _sub(du, dv)
    if ast.op == "mul":
        return _add(_mul(du, v), _mul(u, dv))
    if ast.op == "div":
        return _div(_sub(_mul(du, v), _mul(u, dv)), _mul(v, v))
    # pow: u^c, c^u and the general case
    if isinstance(v, Const):
        c = v.value
        return _mul(_mul(Const(c), _pow(u, Const(c - 1.0))), du)
    if isinstance(u, Const):
        return _mul(_mul(_pow(u, v), Const(math.log(u.value))), dv)
    # u^v = exp(v log u):  u^v * (v' log u + v u'/u)
    return _mul(_pow(u, v), _add(_mul(dv, Unary("log", u)), _div(_mul(v, du), u)))


def _fold(op, a, b):
    table = {
        "add": lambda x, y: x + y,
        "sub": lambda x, y: x - y,
        "mul": lambda x, y: x * y,
        "div": lambda x, y: x / y if y != 0 else None,
        "pow": lambda x, y: x ** y if (x > 0 or y == round(y)) else None,
    }
    try:
        out = table[op](a, b)
    except (OverflowError, ZeroDivisionError):
        return None
    return out


def _add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("add", a.value, b.value)
        if folded is not None:
            return Const(folded)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Binary("add", a, b)


def _sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("sub", a.value, b.value)
        if folded is not None:
            return Const(folded)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return _neg(b)
    return Binary("sub", a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    return Unary("neg", a)


def _mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("mul", a.value, b.value)
        if folded is not None:
            return Const(folded)
    if isinstance(a, Const):
        if a.value == 0.0:
            return Const(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, Const):
        if b.value == 0.0:
            return Const(0.0)
        if b.value == 1.0:
            return a
    return Binary("mul", a, b)


def _div(a, b):
    if isinstance(a, Const) and a.value == 0.0:
        return Const(0.0)
    if isinstance(b, Const) and b.value == 1.0:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("div", a.value, b.value)
        if folded is not None:
            return Const(folded)
    return Binary("div", a, b)


def _pow(a, b):
    if isinstance(b, Const):
        if b.value == 0.0:
            return Const(1.0)
        if b.value == 1.0:
            return a
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("pow", a.value, b.value)
        if folded is not None:
            return Const(folded)
    return Binary("pow", a, b)


# ---------------------------------------------------------------------------
# compilation (fast path for solvers; eval_expr keeps the checked semantics)

def compile_expr(ast: ExprAST, target: str = "numpy"):
    """Compile ``ast`` to a plain python callable of one argument.

    ``target="numpy"`` builds on numpy ufuncs (vectorized, accepts arrays);
    ``target="math"`` builds on ``math.*`` (fastest for scalar hot loops).
    Domain violations surface as the underlying ``ValueError``/
    ``ZeroDivisionError`` rather than the checked :class:`EvalDomainError`
    of :func:`eval_expr`.
    """
    src = _emit(ast)
    if target == "math":
        namespace = {"_lib": math}
    else:
        namespace = {"_lib": __import__("numpy")}
    return eval(f"lambda sigma: {src}", namespace)  # noqa: S307 - own codegen


def _emit(ast):
    if isinstance(ast, Const):
        return repr(ast.value)
    if isinstance(ast, Var):
        return "sigma"
    if isinstance(ast, Unary):
        if ast.op == "neg":
            return f"(-({_emit(ast.arg)}))"
        return f"_lib.{ast.op}({_emit(ast.arg)})"
    ops = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}
    return f"(({_emit(ast.left)}){ops[ast.op]}({_emit(ast.right)}))"
