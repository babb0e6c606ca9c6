"""One-period market model: outcomes, securities, pricing rules, constraints.

A market is a finite outcome space with strictly positive weights, a payoff
matrix of linearly independent basic securities, an ask pricing rule over
portfolios, and a convex set of admissible portfolios.  Payoffs and
portfolios are plain numpy vectors.

Conventions: the sign convention for extended reals is inf - inf = -inf;
prices are +inf beyond a volume cap.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import ExprDomainError, NotReplicable, ValidationError

RANK_TOL = 1e-9
REP_TOL = 1e-9
MEMBER_TOL = 1e-9
RECESSION_SLOPE_TOL = 1e-7

INF = float("inf")


def ext_sub(a, b):
    """a - b under the inf - inf = -inf convention."""
    if a == INF and b == INF:
        return -INF
    if a == -INF and b == -INF:
        return -INF
    return a - b


@dataclass(frozen=True)
class ProbabilitySpace:
    """Finite outcome set with strictly positive weights summing to one."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.p.ndim != 1 or self.p.size < 1:
            raise ValidationError([("/probs", "need at least one outcome")])
        if np.any(self.p <= 0):
            raise ValidationError([("/probs", "all outcome weights must be > 0")])
        if abs(self.p.sum() - 1.0) > 1e-12:
            raise ValidationError([("/probs", f"weights sum to {self.p.sum()!r}, not 1")])

    @property
    def n(self):
        return self.p.size

    def expectation(self, x):
        return float(self.p @ np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Pricing rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearRule:
    """Frictionless: same price to buy or sell each security."""

    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prices", np.asarray(self.prices, dtype=float))

    @property
    def n_assets(self):
        return self.prices.size

    def cost(self, x):
        return float(self.prices @ x)

    def recession_cost(self, d):
        return self.cost(d)

    def pieces(self):
        """Per-security affine pieces [(slope, intercept), ...] of the cost."""
        return [[(float(p), 0.0)] for p in self.prices]

    def cap_rows(self, nvar, offset):
        return [], []


@dataclass(frozen=True)
class ProportionalRule:
    """Constant bid-ask spread: buy at `buy`, sell at `sell` per unit."""

    buy: np.ndarray
    sell: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "buy", np.asarray(self.buy, dtype=float))
        object.__setattr__(self, "sell", np.asarray(self.sell, dtype=float))
        if self.buy.shape != self.sell.shape:
            raise ValidationError([("/pricing", "buy/sell price vectors differ in length")])
        if np.any(self.buy < self.sell - 1e-12):
            raise ValidationError([("/pricing", "buy price below sell price")])

    @property
    def n_assets(self):
        return self.buy.size

    def cost(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(np.where(x >= 0, self.buy * x, self.sell * x)))

    def recession_cost(self, d):
        return self.cost(d)

    def pieces(self):
        return [[(float(b), 0.0), (float(s), 0.0)]
                for b, s in zip(self.buy, self.sell)]

    def cap_rows(self, nvar, offset):
        return [], []


@dataclass(frozen=True)
class Curve:
    """Increasing piecewise-linear cost curve on volumes >= 0, zero at zero.

    slopes[k] applies on [breaks[k-1], breaks[k]) with breaks[-1] implicit
    +inf unless `cap` is set, beyond which the price is +inf.
    """

    slopes: tuple
    breaks: tuple = ()
    cap: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        if len(self.slopes) != len(self.breaks) + 1:
            raise ValidationError([("/pricing", "need one more slope than breakpoints")])
        if any(b <= 0 for b in self.breaks) or list(self.breaks) != sorted(self.breaks):
            raise ValidationError([("/pricing", "breakpoints must be positive increasing")])

    def value(self, q):
        """Curve value at volume q >= 0 (binary search over breakpoints)."""
        if self.cap is not None and q > self.cap + 1e-12:
            return INF
        k = bisect.bisect_right(self.breaks, q)
        total, prev = 0.0, 0.0
        for j in range(k):
            total += self.slopes[j] * (self.breaks[j] - prev)
            prev = self.breaks[j]
        return total + self.slopes[k] * (q - prev)

    def terminal_slope(self):
        return INF if self.cap is not None else self.slopes[-1]

    def piece_lines(self):
        """Affine pieces [(slope, intercept), ...] of q -> value(q)."""
        lines = []
        total, prev = 0.0, 0.0
        for k, s in enumerate(self.slopes):
            # value = total + s*(q - prev) on this segment
            lines.append((s, total - s * prev))
            if k < len(self.breaks):
                total += s * (self.breaks[k] - prev)
                prev = self.breaks[k]
        return lines


@dataclass(frozen=True)
class ConvexSeparableRule:
    """Volume-dependent buy/sell curves per security; convex total cost.

    `buys[i]` must be convex (nondecreasing slopes), `sells[i]` concave
    (nonincreasing slopes), and the first buy slope must be at least the
    first sell slope.  Caps make the cost +inf beyond the available volume
    on either side.
    """

    buys: tuple
    sells: tuple

    def __post_init__(self):
        failures = []
        for i, c in enumerate(self.buys):
            if any(c.slopes[k + 1] < c.slopes[k] - 1e-12 for k in range(len(c.slopes) - 1)):
                failures.append((f"/pricing/curves/{i}/buy", "buy slopes must be nondecreasing"))
        for i, c in enumerate(self.sells):
            if any(c.slopes[k + 1] > c.slopes[k] + 1e-12 for k in range(len(c.slopes) - 1)):
                failures.append((f"/pricing/curves/{i}/sell", "sell slopes must be nonincreasing"))
        for i, (b, s) in enumerate(zip(self.buys, self.sells)):
            if b.slopes[0] < s.slopes[0] - 1e-12:
                failures.append((f"/pricing/curves/{i}", "initial buy slope below initial sell slope"))
        if len(self.buys) != len(self.sells):
            failures.append(("/pricing/curves", "buy/sell curve counts differ"))
        if failures:
            raise ValidationError(failures)

    @property
    def n_assets(self):
        return len(self.buys)

    def cost(self, x):
        total = 0.0
        for i, q in enumerate(np.asarray(x, dtype=float)):
            if q >= 0:
                v = self.buys[i].value(q)
            else:
                v = self.sells[i].value(-q)
                v = -v if v < INF else INF
            if v == INF:
                return INF
            total += v
        return total

    def recession_cost(self, d):
        total = 0.0
        for i, q in enumerate(np.asarray(d, dtype=float)):
            if q == 0:
                continue
            s = (self.buys[i] if q > 0 else self.sells[i]).terminal_slope()
            if s == INF:
                return INF
            total += s * q
        return total

    def pieces(self):
        out = []
        for b, s in zip(self.buys, self.sells):
            lines = b.piece_lines()
            # the short side enters the cost as -sell(-x)
            lines.extend((slope, -intercept) for slope, intercept in s.piece_lines())
            out.append(lines)
        return out

    def cap_rows(self, nvar, offset):
        """Hard volume-cap rows a.x <= b over portfolio coordinates."""
        rows, rhs = [], []
        for i, (b, s) in enumerate(zip(self.buys, self.sells)):
            if b.cap is not None:
                row = np.zeros(nvar)
                row[offset + i] = 1.0
                rows.append(row)
                rhs.append(b.cap)
            if s.cap is not None:
                row = np.zeros(nvar)
                row[offset + i] = -1.0
                rows.append(row)
                rhs.append(s.cap)
        return rows, rhs

    def recession_cap_rows(self, nvar, offset):
        """Capped sides admit no recession volume: direction rows <= 0."""
        rows, rhs = [], []
        for i, (b, s) in enumerate(zip(self.buys, self.sells)):
            if b.cap is not None:
                row = np.zeros(nvar)
                row[offset + i] = 1.0
                rows.append(row)
                rhs.append(0.0)
            if s.cap is not None:
                row = np.zeros(nvar)
                row[offset + i] = -1.0
                rows.append(row)
                rhs.append(0.0)
        return rows, rhs


@dataclass(frozen=True)
class ExpressionRule:
    """Scripted convex cost over portfolio coordinates x1..xN."""

    body: ex.Node
    n_assets_hint: int = 0

    @property
    def n_assets(self):
        idx = [i for k, i, _ in ex.variables(self.body) if k == "x"]
        return max(idx + [self.n_assets_hint])

    def cost(self, x):
        try:
            return ex.evaluate(self.body, x=np.asarray(x, dtype=float))
        except ExprDomainError:
            return INF

    def cost_and_grad(self, x):
        return ex.value_and_subgradient(self.body, x=np.asarray(x, dtype=float))

    def recession_cost(self, d):
        return _numeric_recession(self.cost, np.asarray(d, dtype=float))

    def max_affine(self, dim):
        return ex.max_affine_pieces(self.body, dim, kind="x")


def _numeric_recession(cost, d, tol=RECESSION_SLOPE_TOL):
    """sup over scalings of cost(lam*d)/lam by doubling lam = 2^0..2^30."""
    if not np.any(d):
        return 0.0
    prev = None
    lam = 1.0
    for _ in range(31):
        v = cost(lam * d)
        if v == INF:
            return INF
        slope = v / lam
        if prev is not None and abs(slope - prev) <= tol * (1 + abs(slope)):
            return slope
        prev = slope
        lam *= 2.0
    if prev is not None and abs(prev) > 1e12:
        return INF
    return prev


PricingRule = LinearRule | ProportionalRule | ConvexSeparableRule | ExpressionRule


# ---------------------------------------------------------------------------
# Portfolio constraint sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Unconstrained:
    def admits(self, x, tol=MEMBER_TOL):
        return True

    def rows(self, nvar):
        return np.zeros((0, nvar)), np.zeros(0)

    def recession_rows(self, nvar):
        return np.zeros((0, nvar)), np.zeros(0)


@dataclass(frozen=True)
class LongOnly:
    def admits(self, x, tol=MEMBER_TOL):
        return bool(np.all(np.asarray(x) >= -tol))

    def rows(self, nvar):
        return -np.eye(nvar), np.zeros(nvar)

    def recession_rows(self, nvar):
        return -np.eye(nvar), np.zeros(nvar)


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        bad = [("/constraints", f"box excludes the zero portfolio in coordinate {i}")
               for i in range(self.lower.size)
               if self.lower[i] > 0 or self.upper[i] < 0]
        if np.any(self.lower > self.upper):
            bad.append(("/constraints", "box lower bound above upper bound"))
        if bad:
            raise ValidationError(bad)

    def admits(self, x, tol=MEMBER_TOL):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def rows(self, nvar):
        rows, rhs = [], []
        for i in range(nvar):
            if np.isfinite(self.lower[i]):
                r = np.zeros(nvar)
                r[i] = -1.0
                rows.append(r)
                rhs.append(-self.lower[i])
            if np.isfinite(self.upper[i]):
                r = np.zeros(nvar)
                r[i] = 1.0
                rows.append(r)
                rhs.append(self.upper[i])
        return (np.array(rows) if rows else np.zeros((0, nvar))), np.array(rhs)

    def recession_rows(self, nvar):
        rows, rhs = [], []
        for i in range(nvar):
            if np.isfinite(self.lower[i]):
                r = np.zeros(nvar)
                r[i] = -1.0
                rows.append(r)
                rhs.append(0.0)
            if np.isfinite(self.upper[i]):
                r = np.zeros(nvar)
                r[i] = 1.0
                rows.append(r)
                rhs.append(0.0)
        return (np.array(rows) if rows else np.zeros((0, nvar))), np.array(rhs)


@dataclass(frozen=True)
class Halfspaces:
    """Rows a.x <= b; each must admit the zero portfolio (b >= 0)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_2d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)))
        if np.any(self.b < 0):
            raise ValidationError([("/constraints", "halfspace excludes the zero portfolio")])

    def admits(self, x, tol=MEMBER_TOL):
        scale = 1.0 + np.abs(self.a).sum(axis=1)
        return bool(np.all(self.a @ np.asarray(x, dtype=float) <= self.b + tol * scale))

    def rows(self, nvar):
        return self.a, self.b

    def recession_rows(self, nvar):
        return self.a, np.zeros(self.b.size)


ConstraintSet = Unconstrained | LongOnly | Box | Halfspaces


# ---------------------------------------------------------------------------
# Market
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Market:
    """Finite market: outcome space, payoff matrix, pricing rule, constraints.

    securities has shape (N, n): one row per basic security.  Rows must be
    linearly independent so that replicating portfolios are unique (law of
    one price).
    """

    space: ProbabilitySpace
    securities: np.ndarray
    rule: PricingRule
    constraints: ConstraintSet = field(default_factory=Unconstrained)

    def __post_init__(self):
        object.__setattr__(self, "securities",
                           np.atleast_2d(np.asarray(self.securities, dtype=float)))
        failures = []
        if self.securities.shape[1] != self.space.n:
            failures.append(("/securities", "security payoff length differs from state count"))
        if self.securities.shape[0] < 1:
            failures.append(("/securities", "need at least one security"))
        rank = np.linalg.matrix_rank(self.securities, tol=RANK_TOL)
        if rank < self.securities.shape[0]:
            failures.append(("/securities", "redundant security: payoff rows are linearly dependent"))
        n_assets = getattr(self.rule, "n_assets", self.securities.shape[0])
        if isinstance(self.rule, ExpressionRule):
            if n_assets > self.securities.shape[0]:
                failures.append(("/pricing", f"rule references x{n_assets}, market has {self.securities.shape[0]} securities"))
        elif n_assets != self.securities.shape[0]:
            failures.append(("/pricing", f"rule prices {n_assets} securities, market has {self.securities.shape[0]}"))
        cost0 = self.rule.cost(np.zeros(self.securities.shape[0]))
        if abs(cost0) > 1e-12:
            failures.append(("/pricing", f"zero portfolio must cost zero, got {cost0!r}"))
        if isinstance(self.constraints, (Box, Halfspaces)):
            dim = (self.constraints.lower.size if isinstance(self.constraints, Box)
                   else self.constraints.a.shape[1])
            if dim != self.securities.shape[0]:
                failures.append(("/constraints", "constraint dimension differs from security count"))
        if failures:
            raise ValidationError(failures)

    @property
    def n_assets(self):
        return self.securities.shape[0]

    @property
    def n_states(self):
        return self.space.n


def portfolio_payoff(market: Market, x) -> np.ndarray:
    """Terminal payoff sum_i x_i * S_i of a portfolio."""
    x = np.asarray(x, dtype=float)
    if x.shape != (market.n_assets,):
        raise ValidationError([("/portfolio", f"expected {market.n_assets} coordinates")])
    return market.securities.T @ x


def price_portfolio(rule: PricingRule, x) -> float:
    """Ask cost of setting up portfolio x; +inf beyond a volume cap."""
    return rule.cost(np.asarray(x, dtype=float))


def replicating_portfolio(market: Market, payoff, tol=REP_TOL):
    """Unique portfolio generating `payoff`, or None when off the span."""
    payoff = np.asarray(payoff, dtype=float)
    if payoff.shape != (market.n_states,):
        raise ValidationError([("/payoff", f"expected {market.n_states} coordinates")])
    x, *_ = np.linalg.lstsq(market.securities.T, payoff, rcond=None)
    residual = market.securities.T @ x - payoff
    scale = 1.0 + float(np.max(np.abs(payoff)))
    if float(np.max(np.abs(residual))) > tol * scale:
        return None
    return x


def payoff_price(market: Market, payoff) -> float:
    """Market price of a replicable payoff via its unique portfolio."""
    x = replicating_portfolio(market, payoff)
    if x is None:
        raise NotReplicable("payoff is outside the span of the basic securities")
    return price_portfolio(market.rule, x)


def is_attainable(market: Market, payoff, tol=MEMBER_TOL) -> bool:
    """True iff the payoff is replicable by an admissible portfolio."""
    x = replicating_portfolio(market, payoff)
    if x is None:
        return False
    return market.constraints.admits(x, tol)


def recession_price(market: Market, payoff) -> float:
    """Smallest sublinear majorant of the pricing rule along the payoff."""
    x = replicating_portfolio(market, payoff)
    if x is None:
        raise NotReplicable("payoff is outside the span of the basic securities")
    return market.rule.recession_cost(x)


def is_attainable_direction(market: Market, payoff, tol=MEMBER_TOL) -> bool:
    """True iff the payoff is a recession direction of the attainable set."""
    x = replicating_portfolio(market, payoff)
    if x is None:
        return False
    rows, rhs = market.constraints.recession_rows(market.n_assets)
    if rows.shape[0] == 0:
        return True
    scale = 1.0 + np.abs(rows).sum(axis=1) * max(1.0, float(np.max(np.abs(x))))
    return bool(np.all(rows @ x <= rhs + tol * scale))


def recession_portfolio_generators(market: Market):
    """Finite generator list (and lineality basis) of the admissible
    portfolios' recession cone, in portfolio coordinates."""
    from .polyhedra import cone_generators

    rows, _ = market.constraints.recession_rows(market.n_assets)
    rays, lineality = cone_generators(-rows)  # cone {x : rows.x <= 0}
    return rays, lineality
