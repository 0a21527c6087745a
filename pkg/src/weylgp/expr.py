"""Evaluable symbolic scalar expressions.

Expressions are immutable, hashable trees built through the smart
constructors :func:`add`, :func:`mul`, :func:`power` and :func:`func`, which
apply a light simplification (constant folding, flattening, collection of like
terms and equal bases, merging of ``exp`` factors).  There is no full
canonical form: two expressions are compared numerically, never
syntactically.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .parsing import Node, ParseError, integer_exponent, parse

__all__ = [
    "Expr", "Const", "Var", "NamedConst", "Add", "Mul", "Pow", "Func",
    "const", "var", "add", "mul", "power", "func", "exp", "sin", "cos",
    "sqrt", "absolute", "neg", "sub", "div", "diff", "substitute",
    "parse_expr", "compile_expr", "evaluate", "free_vars", "NON_SMOOTH",
]

FUNCTIONS = ("exp", "sin", "cos", "sqrt", "abs", "sign")
# admitted only for boundary presets; not differentiable everywhere
NON_SMOOTH = frozenset({"sqrt", "abs", "sign"})
NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    __slots__ = ("_hash",)

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        # defining __eq__ in a subclass would otherwise drop the hash
        cls.__hash__ = Expr.__hash__

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n: int):
        return power(self, n)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)
        self._hash = hash(("const", self.value))

    def __eq__(self, other):
        return isinstance(other, Const) and other.value == self.value


class NamedConst(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("named", name))

    def __eq__(self, other):
        return isinstance(other, NamedConst) and other.name == self.name


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("var", name))

    def __eq__(self, other):
        return isinstance(other, Var) and other.name == self.name


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        self.args = args
        self._hash = hash(("add", args))

    def __eq__(self, other):
        return isinstance(other, Add) and other._hash == self._hash and other.args == self.args


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        self.args = args
        self._hash = hash(("mul", args))

    def __eq__(self, other):
        return isinstance(other, Mul) and other._hash == self._hash and other.args == self.args


class Pow(Expr):
    __slots__ = ("base", "n")

    def __init__(self, base: Expr, n: int):
        self.base = base
        self.n = n
        self._hash = hash(("pow", base, n))

    def __eq__(self, other):
        return isinstance(other, Pow) and other.n == self.n and other.base == self.base


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        self.name = name
        self.arg = arg
        self._hash = hash(("func", name, arg))

    def __eq__(self, other):
        return isinstance(other, Func) and other.name == self.name and other.arg == self.arg


ZERO = Const(0)
ONE = Const(1)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, float):
        return Const(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value) -> Const:
    return Const(value)


def var(name: str) -> Var:
    if name in NAMED_CONSTANTS:
        return NamedConst(name)
    return Var(name)


def _split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.args[0], Const):
        rest = e.args[1:]
        return e.args[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Add):
            flat.extend(t.args)
        else:
            flat.append(t)
    constant = Fraction(0)
    collected: dict[Expr, Fraction] = {}
    for t in flat:
        c, rest = _split_coeff(t)
        if rest is ONE or rest == ONE:
            constant += c
        else:
            collected[rest] = collected.get(rest, 0) + c
    args = []
    for rest, c in collected.items():
        if c == 0:
            continue
        args.append(rest if c == 1 else _scaled(c, rest))
    if constant != 0:
        args.append(Const(constant))
    if not args:
        return ZERO
    if len(args) == 1:
        return args[0]
    return Add(tuple(args))


def _scaled(c: Fraction, rest: Expr) -> Expr:
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.args)
    return Mul((Const(c), rest))


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Mul):
            flat.extend(f.args)
        else:
            flat.append(f)
    coeff = Fraction(1)
    powers: dict[Expr, int] = {}
    exp_args: list[Expr] = []
    for f in flat:
        if isinstance(f, Const):
            coeff *= f.value
            if coeff == 0:
                return ZERO
        elif isinstance(f, Func) and f.name == "exp":
            exp_args.append(f.arg)
        elif isinstance(f, Pow):
            powers[f.base] = powers.get(f.base, 0) + f.n
        else:
            powers[f] = powers.get(f, 0) + 1
    args: list[Expr] = []
    for base, n in powers.items():
        if n == 0:
            continue
        args.append(base if n == 1 else Pow(base, n))
    if exp_args:
        merged = exp(add(*exp_args))
        if merged != ONE:
            if isinstance(merged, Const):
                coeff *= merged.value
            else:
                args.append(merged)
    if coeff == 0:
        return ZERO
    if not args:
        return Const(coeff)
    if coeff != 1:
        args.insert(0, Const(coeff))
    if len(args) == 1:
        return args[0]
    return Mul(tuple(args))


def power(base: Expr, n: int) -> Expr:
    if not isinstance(n, int):
        raise TypeError("only integer powers are supported")
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and n < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        return Const(base.value ** n)
    if isinstance(base, Pow):
        return power(base.base, base.n * n)
    if isinstance(base, Mul):
        return mul(*(power(a, n) for a in base.args))
    if isinstance(base, Func) and base.name == "exp":
        return exp(mul(Const(n), base.arg))
    return Pow(base, n)


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name}")
    if isinstance(arg, Const):
        if arg.value == 0:
            if name in ("exp", "cos"):
                return ONE
            return ZERO
        if name == "abs":
            return Const(abs(arg.value))
        if name == "sign":
            return Const((arg.value > 0) - (arg.value < 0))
    return Func(name, arg)


def exp(a: Expr) -> Expr:
    return func("exp", a)


def sin(a: Expr) -> Expr:
    return func("sin", a)


def cos(a: Expr) -> Expr:
    return func("cos", a)


def sqrt(a: Expr) -> Expr:
    return func("sqrt", a)


def absolute(a: Expr) -> Expr:
    return func("abs", a)


def neg(a: Expr) -> Expr:
    return mul(Const(-1), a)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, power(b, -1))


# -- calculus ---------------------------------------------------------------

@lru_cache(maxsize=200_000)
def diff(e: Expr, name: str) -> Expr:
    """Partial derivative of ``e`` with respect to the variable ``name``."""
    if isinstance(e, (Const, NamedConst)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == name else ZERO
    if isinstance(e, Add):
        return add(*(diff(a, name) for a in e.args))
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = diff(a, name)
            if da == ZERO:
                continue
            terms.append(mul(*e.args[:i], da, *e.args[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        db = diff(e.base, name)
        if db == ZERO:
            return ZERO
        return mul(Const(e.n), power(e.base, e.n - 1), db)
    if isinstance(e, Func):
        da = diff(e.arg, name)
        if da == ZERO:
            return ZERO
        if e.name == "exp":
            outer = e
        elif e.name == "sin":
            outer = cos(e.arg)
        elif e.name == "cos":
            outer = neg(sin(e.arg))
        elif e.name == "sqrt":
            outer = mul(Const(Fraction(1, 2)), power(e, -1))
        elif e.name == "abs":
            outer = func("sign", e.arg)
        else:  # sign
            return ZERO
        return mul(outer, da)
    raise TypeError(f"unsupported node {type(e).__name__}")


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions."""
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        if node in memo:
            return memo[node]
        if isinstance(node, Var):
            out = mapping.get(node.name, node)
        elif isinstance(node, (Const, NamedConst)):
            out = node
        elif isinstance(node, Add):
            out = add(*(go(a) for a in node.args))
        elif isinstance(node, Mul):
            out = mul(*(go(a) for a in node.args))
        elif isinstance(node, Pow):
            out = power(go(node.base), node.n)
        else:
            out = func(node.name, go(node.arg))
        memo[node] = out
        return out

    return go(e)


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Add, Mul)):
            stack.extend(node.args)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Func):
            stack.append(node.arg)
    return out


def uses_non_smooth(e: Expr) -> bool:
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Func):
            if node.name in NON_SMOOTH:
                return True
            stack.append(node.arg)
        elif isinstance(node, (Add, Mul)):
            stack.extend(node.args)
        elif isinstance(node, Pow):
            stack.append(node.base)
    return False


def count_nodes(e: Expr) -> int:
    seen: set[Expr] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        if isinstance(node, (Add, Mul)):
            stack.extend(node.args)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Func):
            stack.append(node.arg)
    return len(seen)


# -- printing ---------------------------------------------------------------

def _fmt_fraction(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        s = _fmt_fraction(e.value)
        return f"({s})" if e.value < 0 or e.value.denominator != 1 else s
    if isinstance(e, (Var, NamedConst)):
        return e.name
    if isinstance(e, Add):
        parts = []
        for i, a in enumerate(e.args):
            c, rest = _split_coeff(a)
            if i and c < 0:
                body = to_string(_scaled(-c, rest) if c != -1 else rest) if rest != ONE else _fmt_fraction(-c)
                parts.append(f" - {body}")
            else:
                parts.append((" + " if i else "") + to_string(a))
        return "(" + "".join(parts) + ")"
    if isinstance(e, Mul):
        return "*".join(to_string(a) for a in e.args)
    if isinstance(e, Pow):
        base = to_string(e.base)
        if isinstance(e.base, Mul):
            base = f"({base})"
        return f"{base}^{e.n}" if e.n >= 0 else f"{base}^({e.n})"
    if isinstance(e, Func):
        inner = to_string(e.arg)
        if inner.startswith("(") and inner.endswith(")") and isinstance(e.arg, Add):
            inner = inner[1:-1]
        return f"{e.name}({inner})"
    raise TypeError(type(e).__name__)


# -- parsing ----------------------------------------------------------------

def parse_expr(text: str, variables: Iterable[str] | None = None) -> Expr:
    """Parse an expression string.

    ``variables`` restricts the admissible variable names; ``pi`` and ``e`` are
    always available as named constants.
    """
    allowed = None if variables is None else set(variables)
    tree = parse(text)

    def build(node: Node) -> Expr:
        k = node.kind
        if k == "num":
            return Const(node.value)
        if k == "name":
            name = node.value
            if allowed is not None and name not in allowed and name not in NAMED_CONSTANTS:
                raise ParseError(f"unknown variable {name}", text, node.pos)
            return var(name)
        if k == "call":
            if node.value not in FUNCTIONS:
                raise ParseError(f"unknown function {node.value}", text, node.pos)
            return func(node.value, build(node.children[0]))
        if k == "neg":
            return neg(build(node.children[0]))
        a, b = node.children
        if k == "add":
            return add(build(a), build(b))
        if k == "sub":
            return sub(build(a), build(b))
        if k == "mul":
            return mul(build(a), build(b))
        if k == "div":
            return div(build(a), build(b))
        if k == "pow":
            return power(build(a), integer_exponent(b, text, allow_negative=True))
        raise ParseError(f"unsupported syntax {k}", text, node.pos)

    return build(tree)


# -- numeric evaluation -----------------------------------------------------

_NP_FUNCS = {"exp": "np.exp", "sin": "np.sin", "cos": "np.cos", "sqrt": "np.sqrt",
             "abs": "np.abs", "sign": "np.sign"}


def compile_expr(exprs: Expr | Iterable[Expr], names: Iterable[str]) -> Callable:
    """Compile one or several expressions into a vectorized numpy function.

    The returned callable takes one array per name in ``names`` (broadcastable
    shapes) and returns an array (or a list of arrays for several
    expressions).  Shared subtrees are evaluated once.
    """
    single = isinstance(exprs, Expr)
    roots = [exprs] if single else list(exprs)
    names = list(names)
    counts: dict[Expr, int] = {}
    order: list[Expr] = []

    def visit(node: Expr):
        c = counts.get(node, 0)
        counts[node] = c + 1
        if c:
            return
        if isinstance(node, (Add, Mul)):
            for a in node.args:
                visit(a)
        elif isinstance(node, Pow):
            visit(node.base)
        elif isinstance(node, Func):
            visit(node.arg)
        order.append(node)

    for r in roots:
        visit(r)
    for r in roots:
        counts[r] = counts.get(r, 0) + 1

    temps: dict[Expr, str] = {}
    lines: list[str] = []
    arg_names = {n: f"a{i}" for i, n in enumerate(names)}

    def code(node: Expr) -> str:
        if node in temps:
            return temps[node]
        if isinstance(node, Const):
            return repr(float(node.value))
        if isinstance(node, NamedConst):
            return repr(NAMED_CONSTANTS[node.name])
        if isinstance(node, Var):
            if node.name not in arg_names:
                raise KeyError(f"unbound variable {node.name}")
            return arg_names[node.name]
        if isinstance(node, Add):
            return "(" + " + ".join(code(a) for a in node.args) + ")"
        if isinstance(node, Mul):
            return "(" + " * ".join(code(a) for a in node.args) + ")"
        if isinstance(node, Pow):
            if node.n < 0:
                return f"(1.0 / {code(node.base)}**{-node.n})"
            return f"({code(node.base)}**{node.n})"
        return f"{_NP_FUNCS[node.name]}({code(node.arg)})"

    for node in order:
        if counts[node] > 1 and not isinstance(node, (Const, NamedConst, Var)):
            src = code(node)
            name = f"t{len(temps)}"
            lines.append(f"    {name} = {src}")
            temps[node] = name
    results = [code(r) for r in roots]
    params = ", ".join(arg_names[n] for n in names)
    if single:
        ret = f"    return {results[0]} + zero"
    else:
        ret = "    return [" + ", ".join(f"{r} + zero" for r in results) + "]"
    zero_src = " + ".join(f"0.0 * np.asarray({arg_names[n]}, dtype=float)" for n in names) or "0.0"
    src = f"def _f({params}):\n    zero = {zero_src}\n" + "\n".join(lines) + ("\n" if lines else "") + ret + "\n"
    namespace = {"np": np}
    exec(compile(src, "<weylgp.expr>", "exec"), namespace)
    fn = namespace["_f"]
    fn.source = src
    return fn


def evaluate(e: Expr, values: Mapping[str, object]):
    """Evaluate ``e`` with numpy semantics on the given variable bindings."""
    names = sorted(free_vars(e))
    fn = compile_expr(e, names)
    return fn(*(values[n] for n in names))
