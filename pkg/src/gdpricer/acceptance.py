"""Acceptance-set families: membership, support values, cones, generators.

Every family is a convex subset of payoff space containing zero and the
positive cone and closed under adding positive payoffs.  LP-representable
families expose H-form blocks (possibly lifted); scripted sets expose
value/subgradient oracles instead.  The generated cone (closed conic hull
plus the positive cone) backs the deflator machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import (DimensionTooLarge, ExprDomainError, NotPolyhedral,
                     ValidationError)
from .model import ProbabilitySpace
from .polyhedra import LinearBlock, cone_generators, project_generators

MEMBER_TOL = 1e-9
MARGIN_TOL = 1e-7
MAX_ENUM_STATES = 6


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PositiveCone:
    """Perfect superreplication: only componentwise-positive errors pass."""


@dataclass(frozen=True)
class ExpectedShortfall:
    """Average loss on the worst alpha-tail must be nonpositive."""

    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValidationError([("/acceptance/alpha", "need alpha in (0,1)")])


@dataclass(frozen=True)
class GainLoss:
    """Expected gains at least (1-alpha)/alpha times expected losses."""

    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 0.5:
            raise ValidationError([("/acceptance/alpha", "need alpha in (0, 1/2]")])


@dataclass(frozen=True)
class Scenarios:
    """Positive payoff required on a fixed set of test outcomes (0-based)."""

    event: tuple

    def __post_init__(self):
        object.__setattr__(self, "event", tuple(sorted(set(int(i) for i in self.event))))
        if not self.event:
            raise ValidationError([("/acceptance/event", "event must be nonempty")])


@dataclass(frozen=True)
class TestProbabilities:
    """Expected value under each test density must clear its floor."""

    densities: np.ndarray  # (k, n), nonnegative, unit expectation each
    floors: np.ndarray     # (k,), nonpositive

    def __post_init__(self):
        object.__setattr__(self, "densities",
                           np.atleast_2d(np.asarray(self.densities, dtype=float)))
        object.__setattr__(self, "floors",
                           np.atleast_1d(np.asarray(self.floors, dtype=float)))
        bad = []
        if self.densities.shape[0] != self.floors.size:
            bad.append(("/acceptance", "one floor per test density required"))
        if np.any(self.densities < -1e-12):
            bad.append(("/acceptance/densities", "densities must be nonnegative"))
        if np.any(self.floors > 1e-12):
            bad.append(("/acceptance/floors", "floors must be nonpositive"))
        if bad:
            raise ValidationError(bad)


@dataclass(frozen=True)
class PwlUtility:
    """Expected piecewise-linear concave utility above a nonpositive floor.

    slopes are left-to-right across `breaks`, nonincreasing, first slope
    positive; the utility is pinned to zero at zero.
    """

    slopes: tuple
    breaks: tuple
    floor: float

    def __post_init__(self):
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        bad = []
        if len(self.slopes) != len(self.breaks) + 1:
            bad.append(("/acceptance", "need one more slope than breakpoints"))
        if list(self.breaks) != sorted(self.breaks):
            bad.append(("/acceptance/breaks", "breakpoints must be increasing"))
        if any(self.slopes[k + 1] > self.slopes[k] + 1e-12 for k in range(len(self.slopes) - 1)):
            bad.append(("/acceptance/slopes", "slopes must be nonincreasing (concavity)"))
        if self.slopes and (self.slopes[0] <= 0 or self.slopes[-1] < 0):
            bad.append(("/acceptance/slopes", "utility must be increasing with unbounded losses"))
        if self.floor > 1e-12:
            bad.append(("/acceptance/floor", "floor must be nonpositive"))
        if bad:
            raise ValidationError(bad)

    def lines(self):
        """Affine pieces (slope, intercept): u(v) = min over the pieces."""
        out = []
        for k, s in enumerate(self.slopes):
            anchor = self.breaks[k - 1] if k > 0 else (self.breaks[0] if self.breaks else 0.0)
            out.append((s, self.value(anchor) - s * anchor))
        return out

    def _integral(self, a, b):
        """Integral of the slope step function over [a, b]."""
        pts = [a] + [x for x in self.breaks if a < x < b] + [b]
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            mid = 0.5 * (lo + hi)
            k = int(np.searchsorted(self.breaks, mid, side="right"))
            total += self.slopes[k] * (hi - lo)
        return total

    def value(self, v):
        return self._integral(0.0, v) if v >= 0 else -self._integral(v, 0.0)

    def slopes_at_zero(self):
        k = int(np.searchsorted(self.breaks, 0.0, side="right"))
        kl = int(np.searchsorted(self.breaks, 0.0, side="left"))
        return self.slopes[kl], self.slopes[k]

    def asymptotic_slopes(self):
        return self.slopes[0], self.slopes[-1]


@dataclass(frozen=True)
class Dominance:
    """Second-order stochastic dominance over a benchmark payoff."""

    benchmark: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "benchmark", np.asarray(self.benchmark, dtype=float))


@dataclass(frozen=True)
class GeneratedCone:
    """Finitely generated conic acceptance set: cone(generators) + positives.

    Used for scans with respect to the generated cone of another set."""

    generators: tuple

    def __post_init__(self):
        gens = tuple(np.asarray(g, dtype=float) for g in self.generators)
        object.__setattr__(self, "generators", gens)


@dataclass(frozen=True)
class Scripted:
    """Author-supplied convex constraints c_j(s) <= 0 over state coordinates.

    Optional generators describe the generated cone for the dual machinery;
    without them cone operations degrade to NotPolyhedral.
    """

    constraints: tuple
    generators: tuple | None = None

    def __post_init__(self):
        parsed = tuple(ex.parse(c) if isinstance(c, str) else c for c in self.constraints)
        object.__setattr__(self, "constraints", parsed)
        if self.generators is not None:
            gens = tuple(np.asarray(g, dtype=float) for g in self.generators)
            object.__setattr__(self, "generators", gens)
        problems = []
        for j, c in enumerate(parsed):
            problems += [(f"/acceptance/constraints/{j}", p)
                         for p in ex.check_roles(c, allow_x=False, allow_s=True)]
        if problems:
            raise ValidationError(problems)


AcceptanceSet = (PositiveCone | ExpectedShortfall | GainLoss | Scenarios |
                 TestProbabilities | PwlUtility | Dominance | Scripted)


def is_conic(acc) -> bool:
    """Whether the family is a cone by construction."""
    if isinstance(acc, (PositiveCone, ExpectedShortfall, GainLoss, Scenarios)):
        return True
    if isinstance(acc, TestProbabilities):
        return bool(np.all(acc.floors == 0.0))
    if isinstance(acc, PwlUtility):
        lo, hi = acc.asymptotic_slopes()
        zl, zr = acc.slopes_at_zero()
        return acc.floor == 0.0 and lo == zl and hi == zr
    return False


# ---------------------------------------------------------------------------
# Risk functionals
# ---------------------------------------------------------------------------

def expected_shortfall(alpha, payoff, probs) -> float:
    """min_t { t + E[(-X-t)^+]/alpha }, minimized over the breakpoints -X_i."""
    x = np.asarray(payoff, dtype=float)
    p = np.asarray(probs, dtype=float)
    best = np.inf
    for t in -x:
        best = min(best, t + float(p @ np.maximum(-x - t, 0.0)) / alpha)
    return best


def expectile(alpha, payoff, probs, tol=1e-10) -> float:
    """Root of t -> alpha E[(X-t)^+] - (1-alpha) E[(t-X)^+] by bisection."""
    x = np.asarray(payoff, dtype=float)
    p = np.asarray(probs, dtype=float)

    def h(t):
        return alpha * float(p @ np.maximum(x - t, 0.0)) - \
            (1 - alpha) * float(p @ np.maximum(t - x, 0.0))

    lo, hi = float(np.min(x)), float(np.max(x))
    if hi - lo < tol:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) >= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Membership
# ---------------------------------------------------------------------------

def contains(acc, space: ProbabilitySpace, payoff, tol=MEMBER_TOL) -> bool:
    """Membership within additive tolerance on the defining functionals."""
    x = np.asarray(payoff, dtype=float)
    p = space.p
    scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    if isinstance(acc, PositiveCone):
        return bool(np.all(x >= -tol * scale))
    if isinstance(acc, ExpectedShortfall):
        return expected_shortfall(acc.alpha, x, p) <= tol * scale
    if isinstance(acc, GainLoss):
        gains = float(p @ np.maximum(x, 0.0))
        losses = float(p @ np.maximum(-x, 0.0))
        return acc.alpha * gains - (1 - acc.alpha) * losses >= -tol * scale
    if isinstance(acc, Scenarios):
        return bool(np.all(x[list(acc.event)] >= -tol * scale))
    if isinstance(acc, TestProbabilities):
        vals = acc.densities @ (p * x)
        return bool(np.all(vals >= acc.floors - tol * scale))
    if isinstance(acc, PwlUtility):
        util = float(sum(pi * acc.value(v) for pi, v in zip(p, x)))
        return util >= acc.floor - tol * scale
    if isinstance(acc, Dominance):
        for t, cap in zip(*_dominance_thresholds(acc, p)):
            if float(p @ np.maximum(t - x, 0.0)) > cap + tol * scale:
                return False
        return True
    if isinstance(acc, Scripted):
        for c in acc.constraints:
            try:
                if ex.evaluate(c, s=x, probs=p) > tol * scale:
                    return False
            except ExprDomainError:
                return False
        return True
    raise TypeError(acc)


def _dominance_thresholds(acc: Dominance, p):
    ts = np.unique(acc.benchmark)
    caps = np.array([float(p @ np.maximum(t - acc.benchmark, 0.0)) for t in ts])
    return ts, caps


# ---------------------------------------------------------------------------
# H-form blocks (lift variables encode tails/levels)
# ---------------------------------------------------------------------------

def membership_block(acc, space: ProbabilitySpace):
    """LinearBlock describing the set, or None for scripted sets."""
    n, p = space.n, space.p
    if isinstance(acc, PositiveCone):
        return LinearBlock.rows(-np.eye(n), np.zeros(n))
    if isinstance(acc, ExpectedShortfall):
        return _es_block(acc.alpha, p)
    if isinstance(acc, GainLoss):
        return _two_slope_block(p, acc.alpha, 1 - acc.alpha, 0.0)
    if isinstance(acc, Scenarios):
        rows = np.zeros((len(acc.event), n))
        for r, i in enumerate(acc.event):
            rows[r, i] = -1.0
        return LinearBlock.rows(rows, np.zeros(len(acc.event)))
    if isinstance(acc, TestProbabilities):
        return LinearBlock.rows(-(acc.densities * p), -acc.floors)
    if isinstance(acc, PwlUtility):
        return _utility_block(acc.lines(), p, acc.floor)
    if isinstance(acc, Dominance):
        return _dominance_block(acc, p)
    return None


def _es_block(alpha, p):
    """ES_alpha(X) <= 0 lifted over (t, s): s >= -X - t, s >= 0, t + E[s]/a <= 0."""
    n = p.size
    a_x, a_u, b = [], [], []
    for i in range(n):
        rx = np.zeros(n)
        rx[i] = -1.0
        ru = np.zeros(n + 1)
        ru[0] = -1.0
        ru[1 + i] = -1.0
        a_x.append(rx)
        a_u.append(ru)
        b.append(0.0)
    for i in range(n):
        ru = np.zeros(n + 1)
        ru[1 + i] = -1.0
        a_x.append(np.zeros(n))
        a_u.append(ru)
        b.append(0.0)
    ru = np.zeros(n + 1)
    ru[0] = 1.0
    ru[1:] = p / alpha
    a_x.append(np.zeros(n))
    a_u.append(ru)
    b.append(0.0)
    return LinearBlock(np.array(a_x), np.array(a_u), np.array(b))


def _two_slope_block(p, gain_slope, loss_slope, floor):
    """E[g(X)] >= floor for the concave kink g(v) = min(gain*v, loss*v)."""
    n = p.size
    a_x, a_u, b = [], [], []
    for i in range(n):
        for s in (gain_slope, loss_slope):
            rx = np.zeros(n)
            rx[i] = -s
            ru = np.zeros(n)
            ru[i] = 1.0
            a_x.append(rx)
            a_u.append(ru)
            b.append(0.0)
    a_x.append(np.zeros(n))
    a_u.append(-p)
    b.append(-floor)
    return LinearBlock(np.array(a_x), np.array(a_u), np.array(b))


def _utility_block(lines, p, floor):
    n = p.size
    a_x, a_u, b = [], [], []
    for i in range(n):
        for slope, intercept in lines:
            rx = np.zeros(n)
            rx[i] = -slope
            ru = np.zeros(n)
            ru[i] = 1.0
            a_x.append(rx)
            a_u.append(ru)
            b.append(intercept)
    a_x.append(np.zeros(n))
    a_u.append(-p)
    b.append(-floor)
    return LinearBlock(np.array(a_x), np.array(a_u), np.array(b))


def _dominance_block(acc, p):
    n = p.size
    ts, caps = _dominance_thresholds(acc, p)
    k = ts.size
    a_x, a_u, b = [], [], []
    for r, t in enumerate(ts):
        for i in range(n):
            rx = np.zeros(n)
            rx[i] = -1.0
            ru = np.zeros(k * n)
            ru[r * n + i] = -1.0
            a_x.append(rx)
            a_u.append(ru)
            b.append(-float(t))
        for i in range(n):
            ru = np.zeros(k * n)
            ru[r * n + i] = -1.0
            a_x.append(np.zeros(n))
            a_u.append(ru)
            b.append(0.0)
        ru = np.zeros(k * n)
        ru[r * n:(r + 1) * n] = p
        a_x.append(np.zeros(n))
        a_u.append(ru)
        b.append(float(caps[r]))
    return LinearBlock(np.array(a_x), np.array(a_u), np.array(b))


def recession_block(acc, space: ProbabilitySpace):
    """H-form of the recession cone; None for scripted sets (numeric only)."""
    n, p = space.n, space.p
    if isinstance(acc, (PositiveCone, ExpectedShortfall, GainLoss, Scenarios)):
        return membership_block(acc, space)
    if isinstance(acc, TestProbabilities):
        return LinearBlock.rows(-(acc.densities * p), np.zeros(acc.floors.size))
    if isinstance(acc, PwlUtility):
        loss, gain = acc.asymptotic_slopes()
        if gain == 0.0:
            return LinearBlock.rows(-np.eye(n), np.zeros(n))
        return _two_slope_block(p, gain, loss, 0.0)
    if isinstance(acc, Dominance):
        return LinearBlock.rows(-np.eye(n), np.zeros(n))
    return None


def in_recession_cone(acc, space: ProbabilitySpace, payoff, tol=MEMBER_TOL) -> bool:
    """Membership in the recession cone (analytic; sampled for scripted)."""
    x = np.asarray(payoff, dtype=float)
    p = space.p
    scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    if isinstance(acc, (PositiveCone, ExpectedShortfall, GainLoss, Scenarios)):
        return contains(acc, space, x, tol)
    if isinstance(acc, TestProbabilities):
        return bool(np.all(acc.densities @ (p * x) >= -tol * scale))
    if isinstance(acc, PwlUtility):
        loss, gain = acc.asymptotic_slopes()
        if gain == 0.0:
            return bool(np.all(x >= -tol * scale))
        val = float(p @ (gain * np.maximum(x, 0.0) - loss * np.maximum(-x, 0.0)))
        return val >= -tol * scale
    if isinstance(acc, Dominance):
        return bool(np.all(x >= -tol * scale))
    if isinstance(acc, Scripted):
        return all(contains(acc, space, lam * x, tol)
                   for lam in (1.0, 10.0, 100.0, 1e3, 1e4))
    raise TypeError(acc)


# ---------------------------------------------------------------------------
# Support function (gamma_A): inf over the set of E[XY]
# ---------------------------------------------------------------------------

def support_function(acc, space: ProbabilitySpace, y) -> float:
    """inf_{X in A} E[XY]; -inf when unbounded below."""
    from .solver import CutProgram, solve_cutting_plane, solve_lp

    y = np.asarray(y, dtype=float)
    weights = space.p * y
    block = membership_block(acc, space)
    if block is not None:
        c = np.concatenate([weights, np.zeros(block.n_lift)])
        a = np.hstack([block.a_x, block.a_u])
        res = solve_lp(c, a_ub=a, b_ub=block.b)
        if res.status == "unbounded":
            return -np.inf
        return res.value
    # scripted: cutting planes over payoff coordinates
    oracles = constraint_oracles(acc, space)
    prog = CutProgram(dim=space.n, objective=("linear", weights),
                      oracles=tuple(oracles), anchor=np.zeros(space.n))
    try:
        res = solve_cutting_plane(prog)
    except ExprDomainError:
        return 0.0
    if res.status == "unbounded" or "drifting" in res.note:
        return -np.inf
    if res.status == "infeasible":
        raise ValidationError([("/acceptance", "scripted set is empty")])
    return res.value


def constraint_oracles(acc: Scripted, space: ProbabilitySpace):
    """Value/subgradient callables over payoff coordinates for scripted sets."""
    p = space.p

    def make(c):
        def oracle(x):
            return ex.value_and_subgradient(c, s=np.asarray(x, dtype=float), probs=p)
        return oracle

    return [make(c) for c in acc.constraints]


def recession_oracles(acc: Scripted, space: ProbabilitySpace):
    """Approximate oracles for the recession versions of scripted constraints.

    c(lam x)/lam increases to the recession function, so evaluating at the
    largest scaling that stays finite yields valid (epsilon-) cuts.
    """
    p = space.p

    def make(c):
        def fn(y):
            return ex.value_and_subgradient(c, s=np.asarray(y, dtype=float), probs=p)
        return scaled_recession_oracle(fn)

    return [make(c) for c in acc.constraints]


def scaled_recession_oracle(fn, slope_tol=1e-9, max_doublings=30):
    """Turn a convex value/subgradient oracle into one for its recession
    function, doubling the scaling until the slope stabilizes or blows up."""

    def oracle(x):
        x = np.asarray(x, dtype=float)
        lam = 1.0
        best = None
        for _ in range(max_doublings + 1):
            try:
                v, g = fn(lam * x)
            except ExprDomainError:
                break
            if not np.isfinite(v) or not np.all(np.isfinite(g)):
                break
            slope = v / lam
            if best is not None and abs(slope - best[0]) <= slope_tol * (1 + abs(slope)):
                return slope, g
            best = (slope, g)
            lam *= 2.0
        if best is None:
            raise ExprDomainError("recession oracle: no finite scaling")
        return best

    return oracle


# ---------------------------------------------------------------------------
# Generated cone K(A) and its base
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeBase:
    """Finite generator list for the generated cone (plus positive slack)."""

    generators: tuple
    lineality: tuple = ()

    @property
    def matrix(self):
        gens = list(self.generators) + [v for b in self.lineality for v in (b, -b)]
        return np.array(gens) if gens else np.zeros((0, 0))


def _cone_rows(acc, space: ProbabilitySpace):
    """Homogeneous >=0 rows (possibly lifted) for K(A), or "whole", or None."""
    n, p = space.n, space.p
    if isinstance(acc, PositiveCone):
        return np.eye(n)
    if isinstance(acc, Scenarios):
        rows = np.zeros((len(acc.event), n))
        for r, i in enumerate(acc.event):
            rows[r, i] = 1.0
        return rows
    if isinstance(acc, TestProbabilities):
        keep = [k for k in range(acc.floors.size) if acc.floors[k] == 0.0]
        if not keep:
            return "whole"
        return acc.densities[keep] * p
    if isinstance(acc, ExpectedShortfall):
        blk = _es_block(acc.alpha, p)
        return np.hstack([-blk.a_x, -blk.a_u])
    if isinstance(acc, GainLoss):
        blk = _two_slope_block(p, acc.alpha, 1 - acc.alpha, 0.0)
        return np.hstack([-blk.a_x, -blk.a_u])
    if isinstance(acc, PwlUtility):
        if acc.floor < 0.0:
            return "whole"
        zl, zr = acc.slopes_at_zero()
        blk = _two_slope_block(p, zr, zl, 0.0)
        return np.hstack([-blk.a_x, -blk.a_u])
    return None


def cone_base(acc, space: ProbabilitySpace) -> ConeBase:
    """Generators of the generated acceptance cone within payoff space."""
    if isinstance(acc, Scripted):
        if acc.generators is None:
            raise NotPolyhedral("scripted acceptance set without generators")
        gens = []
        for g in acc.generators:
            g = np.asarray(g, dtype=float)
            nrm = float(np.max(np.abs(g)))
            if nrm > 0:
                gens.append(g / nrm)
        return ConeBase(tuple(gens))
    if isinstance(acc, Dominance):
        raise NotPolyhedral("dominance acceptance sets carry no finite cone base")
    rows = _cone_rows(acc, space)
    if rows is None:
        raise NotPolyhedral(type(acc).__name__)
    n = space.n
    if isinstance(rows, str):
        eye = np.eye(n)
        return ConeBase(tuple(np.concatenate([eye, -eye])),
                        tuple(e.copy() for e in np.eye(n)))
    if rows.shape[1] > n and n > MAX_ENUM_STATES:
        raise DimensionTooLarge(f"cone enumeration supports up to {MAX_ENUM_STATES} states")
    rays, lineality = cone_generators(rows)
    if rows.shape[1] > n:
        rays, lineality = project_generators(rays, lineality, n)
    return ConeBase(tuple(rays), tuple(lineality))


def in_generated_cone(acc, space: ProbabilitySpace, payoff, tol=MEMBER_TOL) -> bool:
    """Membership in the generated cone: weights over the base plus positive slack."""
    from .solver import solve_lp

    base = cone_base(acc, space)
    x = np.asarray(payoff, dtype=float)
    n = space.n
    gens = base.matrix
    k = gens.shape[0] if gens.size else 0
    # x = G^T lam + s, lam >= 0, s >= 0
    a_eq = np.hstack([gens.T if k else np.zeros((n, 0)), np.eye(n)])
    nvar = k + n
    res = solve_lp(np.zeros(nvar), a_ub=-np.eye(nvar), b_ub=np.full(nvar, tol * (1 + np.max(np.abs(x), initial=0.0))),
                   a_eq=a_eq, b_eq=x)
    return res.status == "optimal"


def is_pointed(acc, space: ProbabilitySpace) -> bool:
    """True iff the generated cone contains no line."""
    from .solver import solve_lp

    base = cone_base(acc, space)
    gens = base.matrix
    if len(base.lineality) > 0:
        return False
    n = space.n
    k = gens.shape[0] if gens.size else 0
    # v = G^T lam + s and -v = G^T mu + r with all weights >= 0, |v| <= 1
    nvar = n + 2 * (k + n)
    a_eq = np.zeros((2 * n, nvar))
    a_eq[:n, :n] = np.eye(n)
    a_eq[n:, :n] = np.eye(n)
    col = n
    a_eq[:n, col:col + k] = -gens.T if k else 0.0
    col += k
    a_eq[:n, col:col + n] = -np.eye(n)
    col += n
    a_eq[n:, col:col + k] = gens.T if k else 0.0
    col += k
    a_eq[n:, col:col + n] = np.eye(n)
    bounds = [(-1.0, 1.0)] * n + [(0.0, None)] * (2 * (k + n))
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(nvar)
            c[i] = -sign
            res = solve_lp(c, a_eq=a_eq, b_eq=np.zeros(2 * n), bounds=bounds)
            if res.status == "optimal" and -res.value > MARGIN_TOL:
                return False
    return True


# ---------------------------------------------------------------------------
# Construction-time sampling checks
# ---------------------------------------------------------------------------

def validate(acc, space: ProbabilitySpace, rng=None, n_monotone=200, n_convex=1000):
    """Sampled invariants: monotone, convex, strict subset.  Returns a
    non-membership witness; raises ValidationError when a check fails."""
    rng = np.random.default_rng(7) if rng is None else rng
    n = space.n
    failures = []
    witness = None
    for k in range(40):
        cand = -(2.0 ** k) * np.ones(n)
        if not contains(acc, space, cand):
            witness = cand
            break
    if witness is None:
        failures.append(("/acceptance", "set accepts arbitrarily negative constants (not a strict subset)"))
    if not contains(acc, space, np.zeros(n)):
        failures.append(("/acceptance", "zero payoff must be acceptable"))
    hits = 0
    for _ in range(n_monotone):
        x = rng.uniform(-2, 2, size=n)
        if not contains(acc, space, x):
            continue
        hits += 1
        i = int(rng.integers(0, n))
        e = np.zeros(n)
        e[i] = 1.0
        if not contains(acc, space, x + e, tol=1e-7):
            failures.append(("/acceptance", f"monotonicity violated at {np.round(x, 6).tolist()} + e_{i}"))
            break
    for _ in range(n_convex):
        x, y = rng.uniform(-2, 2, size=n), rng.uniform(-2, 2, size=n)
        if contains(acc, space, x) and contains(acc, space, y):
            if not contains(acc, space, 0.5 * (x + y), tol=1e-7):
                failures.append(("/acceptance", "midpoint convexity violated in sampling"))
                break
    if failures:
        raise ValidationError(failures)
    return witness
