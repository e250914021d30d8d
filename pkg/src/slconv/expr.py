"""Coefficient expression language: parser, printer, evaluator, derivative.

Grammar (ASCII, '^' right-associative, unary minus binds looser than '^'):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | atom ('^' factor)?
    atom   := number | 'x' | ident '(' expr ')' | 'pow' '(' expr ',' expr ')'
            | '(' expr ')'
    ident  in {exp, log, sqrt, sinh, cosh, tanh, abs}

ASTs are nested tuples: ('num', v), ('x',), ('neg', e), ('add', a, b),
('sub', a, b), ('mul', a, b), ('div', a, b), ('pow', a, b),
('call', name, e).  pow(a, b) is sugar for the '^' node, so it prints
back in operator form.
"""

import math
import re

import numpy as np

from . import errors

FUNCTIONS = {"exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs"}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[-+*/^(),]))"
)


def _tokenize(src):
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise errors.SyntaxError(pos, {"token"},
                                     "unrecognized character %r at position %d"
                                     % (src[pos], pos))
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("sym", m.group("sym"), m.start("sym")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def _peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", None, len(self.src))

    def _advance(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _expect_sym(self, sym):
        kind, val, pos = self._peek()
        if kind != "sym" or val != sym:
            raise errors.SyntaxError(pos, {sym})
        self.i += 1

    def parse(self):
        ast = self.expr()
        kind, _, pos = self._peek()
        if kind != "end":
            raise errors.SyntaxError(pos, {"end of input"})
        return ast

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self._peek()
            if kind == "sym" and val in "+-":
                self.i += 1
                rhs = self.term()
                node = ("add" if val == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self._peek()
            if kind == "sym" and val in "*/":
                self.i += 1
                rhs = self.factor()
                node = ("mul" if val == "*" else "div", node, rhs)
            else:
                return node

    def factor(self):
        kind, val, _ = self._peek()
        if kind == "sym" and val == "-":
            self.i += 1
            return ("neg", self.factor())
        node = self.atom()
        kind, val, _ = self._peek()
        if kind == "sym" and val == "^":
            self.i += 1
            rhs = self.factor()
            return ("pow", node, rhs)
        return node

    def atom(self):
        kind, val, pos = self._advance()
        if kind == "num":
            return ("num", val)
        if kind == "ident":
            if val == "x":
                return ("x",)
            if val == "pow":
                self._expect_sym("(")
                a = self.expr()
                self._expect_sym(",")
                b = self.expr()
                self._expect_sym(")")
                return ("pow", a, b)
            if val not in FUNCTIONS:
                raise errors.UnknownFunction(val)
            self._expect_sym("(")
            arg = self.expr()
            self._expect_sym(")")
            return ("call", val, arg)
        if kind == "sym" and val == "(":
            node = self.expr()
            self._expect_sym(")")
            return node
        raise errors.SyntaxError(pos, {"number", "x", "function", "("})


def parse(src):
    """Parse a coefficient expression into an AST tuple tree."""
    if not src or not src.strip():
        raise errors.SyntaxError(0, {"expression"}, "empty expression")
    try:
        src.encode("ascii")
    except UnicodeEncodeError:
        raise errors.SyntaxError(0, {"ASCII"}, "expression must be ASCII")
    return _Parser(src).parse()


# --- printer ---

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 2, "pow": 3,
         "num": 9, "x": 9, "call": 9}


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return repr(int(v))
    return repr(v)


def _fits_pow_rhs(ast):
    # '^' rhs is a factor: atom, pow chain, or '-' factor
    if ast[0] in ("num", "x", "call", "pow"):
        return True
    if ast[0] == "neg":
        return _fits_pow_rhs(ast[1])
    return False


def unparse(ast):
    """Print an AST back to source; parse(unparse(ast)) == ast."""
    op = ast[0]
    if op == "num":
        return _fmt_num(ast[1])
    if op == "x":
        return "x"
    if op == "call":
        return "%s(%s)" % (ast[1], unparse(ast[2]))
    if op == "neg":
        inner = unparse(ast[1])
        # grammar: '-' factor, so the operand must itself be a factor
        if ast[1][0] not in ("num", "x", "call", "pow", "neg"):
            inner = "(%s)" % inner
        return "-" + inner
    if op == "pow":
        lhs = unparse(ast[1])
        if ast[1][0] not in ("num", "x", "call"):
            lhs = "(%s)" % lhs
        rhs = unparse(ast[2])
        if not _fits_pow_rhs(ast[2]):
            rhs = "(%s)" % rhs
        return "%s^%s" % (lhs, rhs)
    # binary arithmetic, left-associative: an equal-precedence right child
    # must be parenthesized to survive the round trip, except a leading
    # unary minus which re-parses identically ('a*-b', 'a--b').
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
    p = _PREC[op]
    lhs = unparse(ast[1])
    if _PREC[ast[1][0]] < p:
        lhs = "(%s)" % lhs
    rhs = unparse(ast[2])
    if _PREC[ast[2][0]] < p or (_PREC[ast[2][0]] == p and ast[2][0] != "neg"):
        rhs = "(%s)" % rhs
    return "%s%s%s" % (lhs, sym, rhs)


# --- evaluation ---

_FN_NUMPY = {
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "sinh": np.sinh,
    "cosh": np.cosh, "tanh": np.tanh, "abs": np.abs,
}


def evaluate(ast, x, check=True):
    """Evaluate the AST at x (scalar or ndarray).

    With check=True a non-finite result raises DomainError instead of
    silently returning NaN/inf.
    """
    try:
        with np.errstate(all="ignore"):
            val = _eval(ast, x)
    except ZeroDivisionError:
        if not check:
            return math.nan
        raise errors.DomainError("expression not finite at x=%r" % (x,))
    if check:
        if np.isscalar(val) or np.ndim(val) == 0:
            if not math.isfinite(float(val)):
                raise errors.DomainError(
                    "expression not finite at x=%r" % (x,))
        else:
            if not np.all(np.isfinite(val)):
                bad = np.asarray(x)[~np.isfinite(val)]
                raise errors.DomainError(
                    "expression not finite at x=%r" % (bad[:3],))
    return val


def _eval(ast, x):
    op = ast[0]
    if op == "num":
        return ast[1] * np.ones_like(x, dtype=float) if np.ndim(x) else ast[1]
    if op == "x":
        return np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    if op == "neg":
        return -_eval(ast[1], x)
    if op == "call":
        return _FN_NUMPY[ast[1]](_eval(ast[2], x))
    a = _eval(ast[1], x)
    if op == "add":
        return a + _eval(ast[2], x)
    if op == "sub":
        return a - _eval(ast[2], x)
    if op == "mul":
        return a * _eval(ast[2], x)
    if op == "div":
        return a / _eval(ast[2], x)
    if op == "pow":
        b = _eval(ast[2], x)
        return np.power(a, b)
    raise ValueError("bad AST node %r" % (op,))


# --- symbolic differentiation ---

def _is_const(ast):
    op = ast[0]
    if op == "num":
        return True
    if op == "x":
        return False
    if op == "neg":
        return _is_const(ast[1])
    if op == "call":
        return _is_const(ast[2])
    return _is_const(ast[1]) and _is_const(ast[2])


def diff(ast):
    """Symbolic derivative d/dx of the AST (no simplification beyond
    trivial constant/zero pruning)."""
    op = ast[0]
    if op == "num":
        return ("num", 0.0)
    if op == "x":
        return ("num", 1.0)
    if op == "neg":
        return ("neg", diff(ast[1]))
    if op == "add":
        return ("add", diff(ast[1]), diff(ast[2]))
    if op == "sub":
        return ("sub", diff(ast[1]), diff(ast[2]))
    if op == "mul":
        u, v = ast[1], ast[2]
        return ("add", ("mul", diff(u), v), ("mul", u, diff(v)))
    if op == "div":
        u, v = ast[1], ast[2]
        num = ("sub", ("mul", diff(u), v), ("mul", u, diff(v)))
        return ("div", num, ("pow", v, ("num", 2.0)))
    if op == "pow":
        u, v = ast[1], ast[2]
        if _is_const(v):
            # d u^c = c * u^(c-1) * u'
            cm1 = ("sub", v, ("num", 1.0))
            return ("mul", ("mul", v, ("pow", u, cm1)), diff(u))
        # general: u^v * (v' log u + v u' / u)
        t1 = ("mul", diff(v), ("call", "log", u))
        t2 = ("div", ("mul", v, diff(u)), u)
        return ("mul", ast, ("add", t1, t2))
    if op == "call":
        name, u = ast[1], ast[2]
        du = diff(u)
        if name == "exp":
            outer = ast
        elif name == "log":
            return ("div", du, u)
        elif name == "sqrt":
            return ("div", du, ("mul", ("num", 2.0), ast))
        elif name == "sinh":
            outer = ("call", "cosh", u)
        elif name == "cosh":
            outer = ("call", "sinh", u)
        elif name == "tanh":
            outer = ("sub", ("num", 1.0), ("pow", ast, ("num", 2.0)))
        elif name == "abs":
            outer = ("div", u, ast)  # sign(u), undefined at 0
        else:
            raise errors.UnknownFunction(name)
        return ("mul", outer, du)
    raise ValueError("bad AST node %r" % (op,))


def log_ast(ast):
    """AST computing log(ast), decomposed structurally through products,
    powers and exponentials so that it stays representable even where the
    expression itself over/underflows.  Assumes the expression is positive."""
    op = ast[0]
    if op == "num":
        return ("num", float(np.log(ast[1])))
    if op == "mul":
        return ("add", log_ast(ast[1]), log_ast(ast[2]))
    if op == "div":
        return ("sub", log_ast(ast[1]), log_ast(ast[2]))
    if op == "pow" and _is_const(ast[2]):
        return ("mul", ast[2], log_ast(ast[1]))
    if op == "call" and ast[1] == "exp":
        return ast[2]
    if op == "call" and ast[1] == "sqrt":
        return ("div", log_ast(ast[2]), ("num", 2.0))
    return ("call", "log", ast)


def dlog_ast(ast):
    """AST computing d/dx log(ast), decomposed structurally (the logarithmic
    derivative stays tame where the expression itself over/underflows)."""
    op = ast[0]
    if op == "num":
        return ("num", 0.0)
    if op == "mul":
        return ("add", dlog_ast(ast[1]), dlog_ast(ast[2]))
    if op == "div":
        return ("sub", dlog_ast(ast[1]), dlog_ast(ast[2]))
    if op == "pow" and _is_const(ast[2]):
        return ("mul", ast[2], dlog_ast(ast[1]))
    if op == "call" and ast[1] == "exp":
        return diff(ast[2])
    if op == "call" and ast[1] == "sqrt":
        return ("div", dlog_ast(ast[2]), ("num", 2.0))
    return ("div", diff(ast), ast)


class CoeffExpr:
    """Parsed coefficient expression; immutable, callable, differentiable."""

    __slots__ = ("ast", "source")

    def __init__(self, src_or_ast):
        if isinstance(src_or_ast, str):
            self.ast = parse(src_or_ast)
            self.source = src_or_ast
        elif isinstance(src_or_ast, CoeffExpr):
            self.ast = src_or_ast.ast
            self.source = src_or_ast.source
        else:
            self.ast = src_or_ast
            self.source = unparse(src_or_ast)

    def __call__(self, x, check=True):
        return evaluate(self.ast, x, check=check)

    def diff(self):
        return CoeffExpr(diff(self.ast))

    def log(self):
        """log of this expression, decomposed to stay representable."""
        return CoeffExpr(log_ast(self.ast))

    def dlog(self):
        """Logarithmic derivative of this expression."""
        return CoeffExpr(dlog_ast(self.ast))

    def printed(self):
        return unparse(self.ast)

    def __repr__(self):
        return "CoeffExpr(%r)" % (self.printed(),)

    def __eq__(self, other):
        return isinstance(other, CoeffExpr) and self.ast == other.ast

    def __hash__(self):
        return hash(("CoeffExpr", self.printed()))
