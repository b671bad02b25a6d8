"""Expression language for vector fields and scalar candidate functions.

Grammar: numbers, variables x1..xn, + - * / ^ with standard precedence
(^ above unary minus above * / above + -), parentheses, and calls to
sin cos exp sqrt abs tanh (one argument) and min max (two or more).
Exponents of ^ must be constants. ASTs are immutable; evaluation either
returns a finite double or raises, never a silent NaN/Inf.

Two evaluators are kept deliberately: a recursive reference evaluator
that checks finiteness at every node, and a code generator that builds
a Python closure for hot loops. Both use the same primitive operations
(math.pow and friends), so values agree bitwise wherever both succeed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import (
    DimensionMismatchError,
    EvalDomainError,
    ExprSyntaxError,
    NondifferentiableError,
)

_UNARY_OPS = ("neg", "sin", "cos", "exp", "sqrt", "abs", "tanh")
_BINARY_OPS = ("add", "sub", "mul", "div", "pow")
_NARY_OPS = ("min", "max")
_FUNCTIONS = {"sin", "cos", "exp", "sqrt", "abs", "tanh", "min", "max"}


@dataclass(frozen=True, slots=True)
class Const:
    kind = "constant"
    value: float


@dataclass(frozen=True, slots=True)
class Var:
    kind = "variable"
    index: int  # 1-based, x1..xn


@dataclass(frozen=True, slots=True)
class Unary:
    kind = "unary"
    op: str
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class Binary:
    kind = "binary"
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Nary:
    kind = "nary"
    op: str
    args: tuple["Expr", ...]


Expr = Const | Var | Unary | Binary | Nary


# ---------------------------------------------------------------------------
# parsing


_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)
_VAR_RE = re.compile(r"^x(\d+)$")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", pos)
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        kind, val, _ = self.peek()
        return kind == "op" and val in ops

    def parse(self) -> Expr:
        kind, _, pos = self.peek()
        if kind == "end":
            raise ExprSyntaxError("empty expression", pos)
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.at_op("+", "-"):
            _, op, _ = self.advance()
            right = self.term()
            left = Binary("add" if op == "+" else "sub", left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at_op("*", "/"):
            _, op, _ = self.advance()
            right = self.unary()
            left = Binary("mul" if op == "*" else "div", left, right)
        return left

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at_op("^"):
            _, _, pos = self.advance()
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ExprSyntaxError("exponent of ^ must be a constant", pos)
            return Binary("pow", base, exponent)
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "ident":
            m = _VAR_RE.match(val)
            if m:
                index = int(m.group(1))
                if index < 1:
                    raise ExprSyntaxError(f"variable index must be >= 1: {val}", pos)
                if index > self.n:
                    raise ExprSyntaxError(
                        f"variable index {index} exceeds dimension {self.n}", pos
                    )
                return Var(index)
            if val in _FUNCTIONS:
                return self.call(val, pos)
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)

    def call(self, name: str, pos: int) -> Expr:
        self.expect_op("(")
        args = [self.expr()]
        while self.at_op(","):
            self.advance()
            args.append(self.expr())
        self.expect_op(")")
        if name in ("min", "max"):
            if len(args) < 2:
                raise ExprSyntaxError(f"{name} needs at least 2 arguments", pos)
            return Nary(name, tuple(args))
        if len(args) != 1:
            raise ExprSyntaxError(f"{name} takes exactly 1 argument", pos)
        return Unary(name, args[0])


def parse(text: str, n: int) -> Expr:
    """Parse an expression over variables x1..xn."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return _Parser(text, n).parse()


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        return _PREC_NEG if e.value < 0 else _PREC_ATOM
    if isinstance(e, (Var, Nary)):
        return _PREC_ATOM
    if isinstance(e, Unary):
        return _PREC_NEG if e.op == "neg" else _PREC_ATOM
    return {"add": _PREC_ADD, "sub": _PREC_ADD, "mul": _PREC_MUL,
            "div": _PREC_MUL, "pow": _PREC_POW}[e.op]


def _fmt_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _wrap(child: Expr, parent_prec: int, strict: bool) -> str:
    text = print_expr(child)
    cp = _prec(child)
    if cp < parent_prec or (strict and cp == parent_prec):
        return f"({text})"
    return text


def print_expr(e: Expr) -> str:
    """Render an AST back to parseable text; parse(print_expr(e)) == e."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, _PREC_NEG, strict=False)
        return f"{e.op}({print_expr(e.arg)})"
    if isinstance(e, Nary):
        return f"{e.op}({','.join(print_expr(a) for a in e.args)})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[e.op]
    if e.op == "pow":
        return _wrap(e.left, _PREC_POW, strict=True) + sym + _wrap(e.right, _PREC_POW, False)
    prec = _prec(e)
    return _wrap(e.left, prec, strict=False) + sym + _wrap(e.right, prec, strict=True)


# ---------------------------------------------------------------------------
# evaluation

_UNARY_FN = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
    "tanh": math.tanh,
}


def eval_expr(e: Expr, x) -> float:
    """Reference evaluator; raises EvalDomainError on any non-finite value."""
    try:
        v = _eval(e, x)
    except DimensionMismatchError:
        raise
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvalDomainError(str(exc)) from exc
    return v


def _eval(e: Expr, x) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.index > len(x):
            raise DimensionMismatchError(
                f"expression uses x{e.index} but the point has {len(x)} coordinates"
            )
        return float(x[e.index - 1])
    if isinstance(e, Unary):
        a = _eval(e.arg, x)
        v = -a if e.op == "neg" else _UNARY_FN[e.op](a)
    elif isinstance(e, Nary):
        vals = [_eval(a, x) for a in e.args]
        v = min(vals) if e.op == "min" else max(vals)
    else:
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        if e.op == "add":
            v = a + b
        elif e.op == "sub":
            v = a - b
        elif e.op == "mul":
            v = a * b
        elif e.op == "div":
            v = a / b
        else:
            v = math.pow(a, b)
    if not math.isfinite(v):
        raise EvalDomainError(f"non-finite value from {e.op if hasattr(e, 'op') else e.kind}")
    return v


# ---------------------------------------------------------------------------
# code generation

def _ck(v: float) -> float:
    """Guard for operations that could absorb a non-finite operand."""
    if math.isfinite(v):
        return v
    raise EvalDomainError("non-finite intermediate value")


def _fin(v: float) -> float:
    if math.isfinite(v):
        return v
    raise EvalDomainError("non-finite result")


def _gen(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x[{e.index - 1}]"
    if isinstance(e, Unary):
        a = _gen(e.arg)
        if e.op == "neg":
            return f"(-{a})"
        if e.op == "abs":
            return f"_abs({a})"
        if e.op == "tanh":
            # tanh maps Inf to 1.0, so its operand must be checked.
            return f"_tanh(_ck({a}))"
        return f"_{e.op}({a})"
    if isinstance(e, Nary):
        args = ",".join(f"_ck({_gen(a)})" for a in e.args)
        return f"_{e.op}({args})"
    a, b = _gen(e.left), _gen(e.right)
    if e.op == "pow":
        # pow maps Inf^0 to 1.0 and Inf^-1 to 0.0; check the base.
        return f"_pow(_ck({a}),{b})"
    if e.op == "div":
        # x/Inf is 0.0; check the divisor.
        return f"({a}/_ck({b}))"
    sym = {"add": "+", "sub": "-", "mul": "*"}[e.op]
    return f"({a}{sym}{b})"


_HELPERS = (
    "_sin=math.sin,_cos=math.cos,_exp=math.exp,_sqrt=math.sqrt,"
    "_tanh=math.tanh,_pow=math.pow,_abs=abs,_min=min,_max=max,_ck=_ck,_fin=_fin"
)


def _compile_body(body: str, arity_note: str):
    src = f"def _compiled(x,{_HELPERS}):\n    try:\n        return {body}\n" \
          "    except (ValueError, ZeroDivisionError, OverflowError) as exc:\n" \
          "        raise EvalDomainError(str(exc)) from exc\n"
    scope = {"math": math, "_ck": _ck, "_fin": _fin, "EvalDomainError": EvalDomainError}
    exec(src, scope)  # source is generated solely from the validated AST
    fn = scope["_compiled"]
    fn.__doc__ = arity_note
    return fn


def compile_scalar(e: Expr):
    """Compile to a closure mapping a coordinate sequence to a float."""
    return _compile_body(f"_fin({_gen(e)})", "compiled scalar expression")


# ---------------------------------------------------------------------------
# differentiation

def contains_var(e: Expr, i: int) -> bool:
    if isinstance(e, Const):
        return False
    if isinstance(e, Var):
        return e.index == i
    if isinstance(e, Unary):
        return contains_var(e.arg, i)
    if isinstance(e, Nary):
        return any(contains_var(a, i) for a in e.args)
    return contains_var(e.left, i) or contains_var(e.right, i)


def max_var_index(e: Expr) -> int:
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return max_var_index(e.arg)
    if isinstance(e, Nary):
        return max(max_var_index(a) for a in e.args)
    return max(max_var_index(e.left), max_var_index(e.right))


def _is_const(e: Expr, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    return Unary("neg", a)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("add", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Binary("sub", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Binary("mul", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    return Binary("div", a, b)


def _pow(a: Expr, c: float) -> Expr:
    if c == 0.0:
        return Const(1.0)
    if c == 1.0:
        return a
    return Binary("pow", a, Const(c))


def differentiate(e: Expr, i: int) -> Expr:
    """Exact symbolic partial derivative with respect to x_i."""
    if i < 1:
        raise ValueError("variable index must be >= 1")
    if not contains_var(e, i):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Unary):
        du = differentiate(e.arg, i)
        if e.op == "neg":
            return neg(du)
        if e.op == "sin":
            return _mul(Unary("cos", e.arg), du)
        if e.op == "cos":
            return neg(_mul(Unary("sin", e.arg), du))
        if e.op == "exp":
            return _mul(Unary("exp", e.arg), du)
        if e.op == "sqrt":
            return _div(du, _mul(Const(2.0), Unary("sqrt", e.arg)))
        if e.op == "tanh":
            slope = _sub(Const(1.0), _pow(Unary("tanh", e.arg), 2.0))
            return _mul(slope, du)
        raise NondifferentiableError(f"{e.op} is not differentiable in x{i}")
    if isinstance(e, Nary):
        raise NondifferentiableError(f"{e.op} is not differentiable in x{i}")
    if e.op == "add":
        return _add(differentiate(e.left, i), differentiate(e.right, i))
    if e.op == "sub":
        return _sub(differentiate(e.left, i), differentiate(e.right, i))
    if e.op == "mul":
        return _add(
            _mul(differentiate(e.left, i), e.right),
            _mul(e.left, differentiate(e.right, i)),
        )
    if e.op == "div":
        num = _sub(
            _mul(differentiate(e.left, i), e.right),
            _mul(e.left, differentiate(e.right, i)),
        )
        return _div(num, _pow(e.right, 2.0))
    # pow with constant exponent c: c * base^(c-1) * base'
    c = e.right.value
    return _mul(
        _mul(Const(c), _pow(e.left, c - 1.0)),
        differentiate(e.left, i),
    )


# ---------------------------------------------------------------------------
# field specifications

@dataclass(frozen=True)
class VectorFieldSpec:
    """Right-hand side of an autonomous system, one expression per coordinate."""

    components: tuple[Expr, ...]
    dim: int

    def __post_init__(self):
        if self.dim < 1 or len(self.components) != self.dim:
            raise DimensionMismatchError(
                f"{len(self.components)} components for dimension {self.dim}"
            )
        for c in self.components:
            if max_var_index(c) > self.dim:
                raise DimensionMismatchError(
                    f"component {print_expr(c)!r} uses a variable beyond x{self.dim}"
                )

    @classmethod
    def from_strings(cls, texts) -> "VectorFieldSpec":
        n = len(texts)
        return cls(tuple(parse(t, n) for t in texts), n)

    def label(self) -> str:
        return "[" + ", ".join(print_expr(c) for c in self.components) + "]"

    def negated(self) -> "VectorFieldSpec":
        return VectorFieldSpec(tuple(neg(c) for c in self.components), self.dim)


@dataclass(frozen=True)
class ScalarFieldSpec:
    """Scalar function of the state, the carrier for candidate functions."""

    body: Expr
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatchError("dimension must be >= 1")
        if max_var_index(self.body) > self.dim:
            raise DimensionMismatchError(
                f"{print_expr(self.body)!r} uses a variable beyond x{self.dim}"
            )

    @classmethod
    def from_string(cls, text: str, n: int) -> "ScalarFieldSpec":
        return cls(parse(text, n), n)


def compile_vector_field(V: VectorFieldSpec):
    """Compile to a closure mapping a coordinate sequence to a list of floats."""
    body = "[" + ",".join(f"_fin({_gen(c)})" for c in V.components) + "]"
    return _compile_body(body, f"compiled field {V.label()}")


def compile_gradient(s: ScalarFieldSpec):
    """Compile the symbolic gradient to a closure returning a list of floats."""
    parts = [differentiate(s.body, i) for i in range(1, s.dim + 1)]
    body = "[" + ",".join(f"_fin({_gen(p)})" for p in parts) + "]"
    return _compile_body(body, "compiled gradient")


def eval_field(V: VectorFieldSpec, x) -> list[float]:
    if len(x) != V.dim:
        raise DimensionMismatchError(f"point has {len(x)} coordinates, field needs {V.dim}")
    return [eval_expr(c, x) for c in V.components]


def gradient(s: ScalarFieldSpec, x):
    """Symbolic gradient evaluated at a point, as a plain list of floats."""
    if len(x) != s.dim:
        raise DimensionMismatchError(f"point has {len(x)} coordinates, function needs {s.dim}")
    return [eval_expr(differentiate(s.body, i), x) for i in range(1, s.dim + 1)]
