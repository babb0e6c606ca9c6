"""Small convex-expression DSL: parser, evaluator, subgradients.

Expressions script general convex pricing rules (over portfolio coordinates
x1..xk) and acceptance-set constraint functions (over state coordinates
s1..sn).  Supported syntax:

    literals            1.5, 2e-3
    variables           x1..xk, s1..sn
    operators           + - * / (division by nonzero literals only), unary -
    functions           max(a,b), min(a,b), abs(a), exp(a), sqrt(a), pow(a, k)
    aggregator          E[body]   probability-weighted sum over states;
                        inside E[.] the only admissible variable is s1, bound
                        per state to that state's coordinate of the payoff

Precedence: unary minus > * / > + -.  Evaluation is IEEE-style; sqrt of a
negative (or fractional pow of a negative) marks the point as outside the
effective domain and raises ExprDomainError on the scalar path.

Subgradients are deterministic: max/min ties pick the first branch, abs and
sqrt use the right derivative at their kinks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError

# Slope cap standing in for the +inf right derivative of sqrt at 0.
_SQRT_SLOPE_CAP = 1e12


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str   # "x" or "s"
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # "+", "-", "*", "/"
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str  # "max", "min", "abs", "exp", "sqrt", "pow"
    args: tuple


@dataclass(frozen=True)
class Expect:
    body: "Node"


Node = Num | Var | Neg | Bin | Call | Expect

_FUNCS = {"max": 2, "min": 2, "abs": 1, "exp": 1, "sqrt": 1, "pow": 2}


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
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
            toks.append(_Tok("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("name", text[i:j], i))
            i = j
            continue
        if ch in "+-*/(),[]":
            toks.append(_Tok(ch, ch, i))
            i += 1
            continue
        raise ExprSyntaxError(i, {"token"}, ch)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind):
        tok = self.toks[self.i]
        if tok.kind != kind:
            raise ExprSyntaxError(tok.pos, {kind}, tok.text)
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(tok.pos, {"end of input", "+", "-", "*", "/"}, tok.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take(self.peek().kind).kind
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.take(self.peek().kind).kind
            rhs = self.factor()
            if op == "/":
                val = _literal_value(rhs)
                if val is None or val == 0.0:
                    raise ExprSyntaxError(self.toks[self.i - 1].pos,
                                          {"nonzero literal divisor"})
            node = Bin(op, node, rhs)
        return node

    def factor(self):
        tok = self.peek()
        if tok.kind == "-":
            self.take("-")
            return Neg(self.factor())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.take("num")
            return Num(float(tok.text))
        if tok.kind == "(":
            self.take("(")
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "name":
            name = self.take("name").text
            if name == "E":
                self.take("[")
                body = self.expr()
                self.take("]")
                return Expect(body)
            if name in _FUNCS:
                self.take("(")
                args = [self.expr()]
                for _ in range(_FUNCS[name] - 1):
                    self.take(",")
                    args.append(self.expr())
                self.take(")")
                if name == "pow":
                    if _literal_value(args[1]) is None:
                        raise ExprSyntaxError(tok.pos, {"literal exponent"})
                return Call(name, tuple(args))
            if (name[0] in "xs" and name[1:].isdigit() and int(name[1:]) >= 1):
                return Var(name[0], int(name[1:]))
            raise ExprSyntaxError(tok.pos, {"variable", "function", "E"}, name)
        raise ExprSyntaxError(tok.pos, {"number", "variable", "(", "-"}, tok.text)


def _literal_value(node):
    """Constant value of a literal (possibly negated) node, else None."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        inner = _literal_value(node.arg)
        return None if inner is None else -inner
    return None


def parse(text: str) -> Node:
    """Parse an expression string into an AST."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing (round-trips through parse up to whitespace)
# ---------------------------------------------------------------------------

def _prec(node):
    if isinstance(node, Bin):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Neg):
        return 3
    return 4


def to_text(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value) if node.value != int(node.value) else str(int(node.value))
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if _prec(node.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Bin):
        lhs, rhs = to_text(node.left), to_text(node.right)
        if _prec(node.left) < _prec(node):
            lhs = f"({lhs})"
        # right side needs parens at equal precedence: a - (b - c)
        if _prec(node.right) <= _prec(node):
            rhs = f"({rhs})"
        return f"{lhs} {node.op} {rhs}"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Expect):
        return f"E[{to_text(node.body)}]"
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Variable inventory / role validation
# ---------------------------------------------------------------------------

def variables(node: Node, inside_e=False):
    """Yield (kind, index, inside_e) triples for every variable occurrence."""
    if isinstance(node, Var):
        yield (node.kind, node.index, inside_e)
    elif isinstance(node, Neg):
        yield from variables(node.arg, inside_e)
    elif isinstance(node, Bin):
        yield from variables(node.left, inside_e)
        yield from variables(node.right, inside_e)
    elif isinstance(node, Call):
        for a in node.args:
            yield from variables(a, inside_e)
    elif isinstance(node, Expect):
        yield from variables(node.body, True)


def check_roles(node: Node, allow_x: bool, allow_s: bool):
    """Validate variable usage; returns list of problem strings (empty = ok)."""
    problems = []
    for kind, idx, inside in variables(node):
        if kind == "x" and not allow_x:
            problems.append(f"x{idx} not allowed here")
        if kind == "s":
            if inside:
                if idx != 1:
                    problems.append(f"s{idx} inside E[.]; only s1 is bound per state")
            elif not allow_s:
                problems.append(f"s{idx} not allowed here")
    return problems


# ---------------------------------------------------------------------------
# Evaluation (scalar or numpy-vectorized over batches of points)
# ---------------------------------------------------------------------------

def _ev(node, x, s, probs, s1_override):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.kind == "x":
            if x is None:
                raise ExprDomainError("no portfolio assignment for x-variable")
            return np.asarray(x)[..., node.index - 1]
        if s1_override is not None and node.index == 1:
            return s1_override
        if s is None:
            raise ExprDomainError("no state assignment for s-variable")
        return np.asarray(s)[..., node.index - 1]
    if isinstance(node, Neg):
        return -_ev(node.arg, x, s, probs, s1_override)
    if isinstance(node, Bin):
        a = _ev(node.left, x, s, probs, s1_override)
        b = _ev(node.right, x, s, probs, s1_override)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Call):
        args = [_ev(a, x, s, probs, s1_override) for a in node.args]
        if node.fn == "max":
            return np.maximum(args[0], args[1])
        if node.fn == "min":
            return np.minimum(args[0], args[1])
        if node.fn == "abs":
            return np.abs(args[0])
        if node.fn == "exp":
            return np.exp(args[0])
        if node.fn == "sqrt":
            with np.errstate(invalid="ignore"):
                return np.sqrt(args[0])
        if node.fn == "pow":
            with np.errstate(invalid="ignore"):
                return np.power(args[0] * 1.0, args[1])
        raise TypeError(node.fn)
    if isinstance(node, Expect):
        if probs is None:
            raise ExprDomainError("E[.] needs outcome probabilities")
        if s is None:
            raise ExprDomainError("E[.] needs a state assignment")
        sv = np.asarray(s, dtype=float)
        total = 0.0
        for i, p in enumerate(probs):
            total = total + p * _ev(node.body, x, s, probs, sv[..., i])
        return total
    raise TypeError(node)


def evaluate(node: Node, x=None, s=None, probs=None):
    """Evaluate at a point; raises ExprDomainError outside the effective domain.

    x / s may also be (batch, dim) arrays, in which case a (batch,) array is
    returned with NaN marking out-of-domain points.
    """
    val = _ev(node, x, s, probs, None)
    if np.isscalar(val) or np.ndim(val) == 0:
        val = float(val)
        if np.isnan(val):
            raise ExprDomainError("expression undefined at point")
        return val
    return np.asarray(val, dtype=float)


def _grad(node, x, s, probs, s1_override):
    """Return (value, grad_x, grad_s, grad_s1) at a scalar point."""
    nx = 0 if x is None else len(x)
    ns = 0 if s is None else len(s)
    zx, zs = np.zeros(nx), np.zeros(ns)
    if isinstance(node, Num):
        return node.value, zx, zs, 0.0
    if isinstance(node, Var):
        if node.kind == "x":
            g = zx.copy()
            g[node.index - 1] = 1.0
            return float(x[node.index - 1]), g, zs, 0.0
        if s1_override is not None and node.index == 1:
            return float(s1_override), zx, zs, 1.0
        g = zs.copy()
        g[node.index - 1] = 1.0
        return float(s[node.index - 1]), zx, g, 0.0
    if isinstance(node, Neg):
        v, gx, gs, g1 = _grad(node.arg, x, s, probs, s1_override)
        return -v, -gx, -gs, -g1
    if isinstance(node, Bin):
        va, gxa, gsa, g1a = _grad(node.left, x, s, probs, s1_override)
        vb, gxb, gsb, g1b = _grad(node.right, x, s, probs, s1_override)
        if node.op == "+":
            return va + vb, gxa + gxb, gsa + gsb, g1a + g1b
        if node.op == "-":
            return va - vb, gxa - gxb, gsa - gsb, g1a - g1b
        if node.op == "*":
            return va * vb, va * gxb + vb * gxa, va * gsb + vb * gsa, va * g1b + vb * g1a
        return va / vb, gxa / vb, gsa / vb, g1a / vb
    if isinstance(node, Call):
        parts = [_grad(a, x, s, probs, s1_override) for a in node.args]
        if node.fn in ("max", "min"):
            (va, gxa, gsa, g1a), (vb, gxb, gsb, g1b) = parts
            if node.fn == "max":
                first = va >= vb
            else:
                first = va <= vb
            if first:
                return (max(va, vb) if node.fn == "max" else min(va, vb)), gxa, gsa, g1a
            return (max(va, vb) if node.fn == "max" else min(va, vb)), gxb, gsb, g1b
        v, gx, gs, g1 = parts[0]
        if node.fn == "abs":
            sign = 1.0 if v >= 0 else -1.0
            return abs(v), sign * gx, sign * gs, sign * g1
        if node.fn == "exp":
            e = float(np.exp(v))
            return e, e * gx, e * gs, e * g1
        if node.fn == "sqrt":
            if v < 0:
                raise ExprDomainError("sqrt of negative")
            r = float(np.sqrt(v))
            slope = _SQRT_SLOPE_CAP if r == 0.0 else 0.5 / r
            return r, slope * gx, slope * gs, slope * g1
        if node.fn == "pow":
            k = parts[1][0]
            base = float(np.power(v, k)) if v != 0 or k > 0 else 0.0
            if np.isnan(base):
                raise ExprDomainError("pow outside domain")
            slope = 0.0 if v == 0.0 and k > 1 else k * float(np.power(v, k - 1)) if v != 0 or k > 1 else 0.0
            if np.isnan(slope):
                raise ExprDomainError("pow derivative outside domain")
            return base, slope * gx, slope * gs, slope * g1
        raise TypeError(node.fn)
    if isinstance(node, Expect):
        sv = np.asarray(s, dtype=float)
        val = 0.0
        gx = zx.copy()
        gs = zs.copy()
        for i, p in enumerate(probs):
            v, gxi, gsi, g1i = _grad(node.body, x, s, probs, sv[i])
            val += p * v
            gx += p * gxi
            gs += p * gsi
            gs[i] += p * g1i
        return val, gx, gs, 0.0
    raise TypeError(node)


def subgradient(node: Node, x=None, s=None, probs=None):
    """One subgradient of the expression at a scalar point.

    Returns grad w.r.t. x when x-variables are present, else w.r.t. s.
    """
    v, gx, gs, _ = _grad(node, x, s, probs, None)
    if np.isnan(v):
        raise ExprDomainError("expression undefined at point")
    has_x = any(kind == "x" for kind, _, _ in variables(node))
    return (gx if has_x else gs)


def value_and_subgradient(node: Node, x=None, s=None, probs=None):
    v, gx, gs, _ = _grad(node, x, s, probs, None)
    if np.isnan(v):
        raise ExprDomainError("expression undefined at point")
    has_x = any(kind == "x" for kind, _, _ in variables(node))
    return v, (gx if has_x else gs)


# ---------------------------------------------------------------------------
# Max-affine compilation (routes piecewise-linear expressions to the LP path)
# ---------------------------------------------------------------------------

def max_affine_pieces(node: Node, dim: int, kind: str = "x"):
    """Compile to pieces [(w, c), ...] with expr = max_j (w.x + c), or None.

    Handles the convex closure {affine, +, max, abs of affine, nonnegative
    scaling, subtraction of affine}.  Nonlinear atoms (exp, sqrt, pow, min of
    non-affine, E[.]) return None and stay on the cutting-plane path.
    """
    res = _pieces(node, dim, kind)
    if res is None:
        return None
    pieces = [(np.asarray(w, dtype=float), float(c)) for w, c in res]
    # drop exact duplicates for tidier LPs
    seen, out = set(), []
    for w, c in pieces:
        key = (tuple(np.round(w, 12)), round(c, 12))
        if key not in seen:
            seen.add(key)
            out.append((w, c))
    return out


def _pieces(node, dim, kind):
    zero = np.zeros(dim)
    if isinstance(node, Num):
        return [(zero, node.value)]
    if isinstance(node, Var):
        if node.kind != kind or node.index > dim:
            return None
        w = zero.copy()
        w[node.index - 1] = 1.0
        return [(w, 0.0)]
    if isinstance(node, Neg):
        inner = _pieces(node.arg, dim, kind)
        if inner is None or len(inner) != 1:
            return None
        (w, c), = inner
        return [(-w, -c)]
    if isinstance(node, Bin):
        a = _pieces(node.left, dim, kind)
        b = _pieces(node.right, dim, kind)
        if node.op == "+":
            if a is None or b is None:
                return None
            return [(wa + wb, ca + cb) for wa, ca in a for wb, cb in b]
        if node.op == "-":
            if a is None or b is None or len(b) != 1:
                return None
            (wb, cb), = b
            return [(wa - wb, ca - cb) for wa, ca in a]
        if node.op == "*":
            lv = _literal_value(node.left)
            rv = _literal_value(node.right)
            if lv is None and rv is None:
                return None
            scale, other = (lv, b) if lv is not None else (rv, a)
            if other is None:
                return None
            if scale >= 0:
                return [(scale * w, scale * c) for w, c in other]
            if len(other) == 1:
                (w, c), = other
                return [(scale * w, scale * c)]
            return None
        if node.op == "/":
            rv = _literal_value(node.right)
            if rv is None or a is None:
                return None
            if rv > 0:
                return [(w / rv, c / rv) for w, c in a]
            if len(a) == 1:
                (w, c), = a
                return [(w / rv, c / rv)]
            return None
    if isinstance(node, Call):
        if node.fn == "max":
            a = _pieces(node.args[0], dim, kind)
            b = _pieces(node.args[1], dim, kind)
            if a is None or b is None:
                return None
            return a + b
        if node.fn == "abs":
            a = _pieces(node.args[0], dim, kind)
            if a is None or len(a) != 1:
                return None
            (w, c), = a
            return [(w, c), (-w, -c)]
        if node.fn == "min":
            a = _pieces(node.args[0], dim, kind)
            b = _pieces(node.args[1], dim, kind)
            if a is not None and b is not None and len(a) == 1 and len(b) == 1:
                return None  # min of two affines is concave, not max-affine
            return None
    return None


# ---------------------------------------------------------------------------
# Sampling checks (convexity is asserted by the scenario author; we sample)
# ---------------------------------------------------------------------------

def sample_midpoint_convexity(node, sampler, probs=None, kind="x",
                              n_segments=1000, tol=1e-8, rng=None):
    """Sample midpoint convexity on random segments; returns violation count.

    `sampler(rng)` must return points inside the operative domain (the
    admissible set intersected with the expression's finite domain).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    bad = 0
    for _ in range(n_segments):
        a, b = sampler(rng), sampler(rng)
        try:
            fa = evaluate(node, **{kind: a}, probs=probs)
            fb = evaluate(node, **{kind: b}, probs=probs)
            fm = evaluate(node, **{kind: 0.5 * (a + b)}, probs=probs)
        except ExprDomainError:
            continue
        if fm > 0.5 * fa + 0.5 * fb + tol * (1 + abs(fa) + abs(fb)):
            bad += 1
    return bad


def sample_subgradient_inequality(node, sampler, probs=None, kind="x",
                                  n_pairs=1000, tol=1e-8, rng=None):
    """Sample f(y) >= f(x) + g.(y-x); returns violation count."""
    rng = np.random.default_rng(0) if rng is None else rng
    bad = 0
    for _ in range(n_pairs):
        a, b = sampler(rng), sampler(rng)
        try:
            fa, g = value_and_subgradient(node, **{kind: a}, probs=probs)
            fb = evaluate(node, **{kind: b}, probs=probs)
        except ExprDomainError:
            continue
        if np.max(np.abs(g)) >= _SQRT_SLOPE_CAP / 2:
            continue  # boundary of domain, subgradient capped
        if fb < fa + float(g @ (b - a)) - tol * (1 + abs(fa) + abs(fb)):
            bad += 1
    return bad
