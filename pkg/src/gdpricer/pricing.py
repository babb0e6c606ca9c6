"""Superreplication prices, the superreplicable-cost set, price intervals.

The buyer's superreplication price of a payoff X is the cheapest admissible
payoff whose replication error against X is acceptable.  All programs are
assembled over portfolio coordinates (epigraph lifts for piecewise-linear
costs, value/subgradient oracles for scripted pieces) and routed to the
simplex when fully polyhedral, to cutting planes otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import acceptance as acc_mod
from . import expr as ex
from .errors import ExprDomainError, InternalInconsistency, NotTwoSidedlyAttainable
from .model import (ExpressionRule, INF, Market, is_attainable, payoff_price,
                    portfolio_payoff, price_portfolio, replicating_portfolio)
from .solver import (CutProgram, INFEASIBLE, OPTIMAL, UNBOUNDED, feasibility_cp,
                     solve_cutting_plane, solve_lp)

TIE_TOL = 1e-9
FACE_TOL = 1e-7
ZERO_BALL = 1e-7


@dataclass
class PriceResult:
    """Outcome of a superreplication solve."""

    status: str            # optimal | unbounded | infeasible | tolerance_reached
    value: float           # +inf = no acceptable superreplication exists
    attained: bool
    payoff: np.ndarray | None = None     # superreplicating payoff when attained
    portfolio: np.ndarray | None = None
    note: str = ""

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass
class MCPInterval:
    """Market-consistent price interval (-inf, sup) or (-inf, sup]."""

    sup: float
    right_closed: bool
    attained_by: np.ndarray | None = None
    unique_attainer: bool = False


# ---------------------------------------------------------------------------
# Program assembly over portfolio coordinates
# ---------------------------------------------------------------------------

@dataclass
class PortfolioProgram:
    """Feasibility pieces for {x in P : S'x - shift in A} plus a cost handle."""

    market: Market
    nx: int
    n_tau: int
    n_lift: int
    a_ub: np.ndarray
    b_ub: np.ndarray
    oracles: list
    cost_kind: str      # "separable" | "joint" | "oracle" | "linear"
    cost_data: object

    @property
    def nvar(self):
        return self.nx + self.n_tau + self.n_lift


def _cost_description(market: Market):
    """How the portfolio cost enters programs."""
    rule = market.rule
    if isinstance(rule, ExpressionRule):
        pieces = rule.max_affine(market.n_assets)
        if pieces is not None:
            return "joint", pieces
        return "oracle", rule.cost_and_grad
    return "separable", rule.pieces()


def build_region(market: Market, acc, shift, *, recession=False):
    """Feasible-region pieces for superreplication-type programs.

    shift is the payoff X: the acceptance constraint reads S'x - X in A
    (or the recession analogue with shift ignored).
    """
    n, nx = market.n_states, market.n_assets
    cost_kind, cost_data = _cost_description(market)
    n_tau = 0
    if cost_kind == "separable":
        n_tau = nx
    elif cost_kind == "joint":
        n_tau = 1
    if recession:
        block = acc_mod.recession_block(acc, market.space)
    else:
        block = acc_mod.membership_block(acc, market.space)
    n_lift = block.n_lift if block is not None else 0
    nvar = nx + n_tau + n_lift

    rows, rhs = [], []
    if recession:
        prow, prhs = market.constraints.recession_rows(nx)
    else:
        prow, prhs = market.constraints.rows(nx)
    for r, b in zip(prow, prhs):
        full = np.zeros(nvar)
        full[:nx] = r
        rows.append(full)
        rhs.append(float(b))
    if recession and hasattr(market.rule, "recession_cap_rows"):
        cap_rows, cap_rhs = market.rule.recession_cap_rows(nvar, 0)
        rows.extend(cap_rows)
        rhs.extend(cap_rhs)
    elif not recession and hasattr(market.rule, "cap_rows"):
        cap_rows, cap_rhs = market.rule.cap_rows(nvar, 0)
        rows.extend(cap_rows)
        rhs.extend(cap_rhs)

    oracles = []
    shift_vec = np.zeros(n) if recession else np.asarray(shift, dtype=float)
    if block is not None:
        arows, arhs = block.shifted_rows(market.securities.T, -shift_vec,
                                         nvar, 0, nx + n_tau)
        rows.extend(arows)
        rhs.extend(list(arhs))
    else:
        sc = acc_mod
        base_oracles = (sc.recession_oracles(acc, market.space) if recession
                        else sc.constraint_oracles(acc, market.space))
        s_t = market.securities.T

        def wrap(fn):
            def oracle(v):
                x = v[:nx]
                val, g = fn(s_t @ x - shift_vec)
                full = np.zeros(v.size)
                full[:nx] = market.securities @ g
                return val, full
            return oracle

        oracles = [wrap(fn) for fn in base_oracles]

    a_ub = np.array(rows) if rows else np.zeros((0, nvar))
    b_ub = np.array(rhs)
    return PortfolioProgram(market, nx, n_tau, n_lift, a_ub, b_ub,
                            oracles, cost_kind, cost_data)


def _epigraph_rows(prog: PortfolioProgram, recession=False):
    """Rows tying tau variables to the cost pieces; objective coefficients."""
    nx, nvar = prog.nx, prog.nvar
    rows, rhs = [], []
    c = np.zeros(nvar)
    if prog.cost_kind == "separable":
        for j, pieces in enumerate(prog.cost_data):
            for slope, intercept in pieces:
                if recession:
                    intercept = 0.0
                r = np.zeros(nvar)
                r[j] = slope
                r[nx + j] = -1.0
                rows.append(r)
                rhs.append(-intercept)
            c[nx + j] = 1.0
    elif prog.cost_kind == "joint":
        for w, intercept in prog.cost_data:
            r = np.zeros(nvar)
            r[:nx] = w
            r[nx] = -1.0
            rows.append(r)
            rhs.append(-(0.0 if recession else intercept))
        c[nx] = 1.0
    return rows, rhs, c


def _cost_leq_rows(prog: PortfolioProgram, cutoff, recession=False):
    """Rows/oracles expressing cost(x) <= cutoff inside the same program."""
    rows, rhs, c = _epigraph_rows(prog, recession)
    oracles = []
    if prog.cost_kind == "oracle":
        if recession:
            base = acc_mod.scaled_recession_oracle(prog.market.rule.cost_and_grad)
        else:
            base = prog.cost_data

        def oracle(v):
            val, g = base(v[:prog.nx])
            full = np.zeros(v.size)
            full[:prog.nx] = g
            return val - cutoff, full

        oracles.append(oracle)
    else:
        cap = np.zeros(prog.nvar)
        cap[:] = c
        rows.append(cap)
        rhs.append(float(cutoff))
    return rows, rhs, oracles


def _run(prog: PortfolioProgram, objective, extra_rows=(), extra_rhs=(),
         extra_oracles=(), box_scale=16.0, cp_tol=1e-9):
    """Solve min objective over the assembled region; LP when possible."""
    rows = list(prog.a_ub) + list(extra_rows)
    rhs = list(prog.b_ub) + list(extra_rhs)
    oracles = list(prog.oracles) + list(extra_oracles)
    kind, data = objective
    if kind == "linear" and not oracles:
        return solve_lp(data, a_ub=np.array(rows) if rows else None,
                        b_ub=np.array(rhs) if rhs else None)
    lo = -np.full(prog.nvar, box_scale)
    hi = np.full(prog.nvar, box_scale)
    cp = CutProgram(dim=prog.nvar, objective=objective, oracles=tuple(oracles),
                    a_ub=np.array(rows) if rows else None,
                    b_ub=np.array(rhs) if rhs else None,
                    anchor=np.zeros(prog.nvar), box=(lo, hi))
    return solve_cutting_plane(cp, cp_tol=cp_tol)


# ---------------------------------------------------------------------------
# Superreplication price
# ---------------------------------------------------------------------------

def superreplication_price(market: Market, acc, payoff, cp_tol=1e-9) -> PriceResult:
    """inf { cost(Z) : Z attainable, Z - X acceptable }.

    status "infeasible" means no admissible payoff has an acceptable error
    against X (the price is +inf); "unbounded" means the price is -inf.
    """
    x_target = np.asarray(payoff, dtype=float)
    prog = build_region(market, acc, x_target)
    rows, rhs, c = _epigraph_rows(prog)
    if prog.cost_kind == "oracle":
        fn = prog.cost_data

        def obj(v):
            val, g = fn(v[:prog.nx])
            full = np.zeros(v.size)
            full[:prog.nx] = g
            return val, full

        objective = ("oracle", obj)
    else:
        objective = ("linear", c)
    scale = 16.0 * max(1.0, float(np.max(np.abs(x_target), initial=0.0)))
    res = _run(prog, objective, extra_rows=rows, extra_rhs=rhs,
               box_scale=scale, cp_tol=cp_tol)
    if res.status == INFEASIBLE:
        return PriceResult(INFEASIBLE, INF, False, note="no acceptable superreplication")
    if res.status == UNBOUNDED:
        return PriceResult(UNBOUNDED, -INF, False)
    port = res.x[:prog.nx] if res.x is not None else None
    pay = portfolio_payoff(market, port) if port is not None else None
    return PriceResult(res.status, res.value, bool(res.attained),
                       payoff=pay, portfolio=port, note=res.note)


def superreplicable_at_cost(market: Market, acc, payoff, m, tol=1e-9) -> bool:
    """Whether X can be superreplicated acceptably at cost <= -m."""
    x_target = np.asarray(payoff, dtype=float)
    prog = build_region(market, acc, x_target)
    rows, rhs, oracles = _cost_leq_rows(prog, -float(m))
    all_rows = list(prog.a_ub) + rows
    all_rhs = list(prog.b_ub) + rhs
    all_oracles = list(prog.oracles) + oracles
    if not all_oracles:
        res = solve_lp(np.zeros(prog.nvar),
                       a_ub=np.array(all_rows) if all_rows else None,
                       b_ub=np.array(all_rhs) if all_rhs else None)
        return res.status == OPTIMAL
    scale = 16.0 * max(1.0, float(np.max(np.abs(x_target), initial=0.0)))
    ok, _ = feasibility_cp(prog.nvar, tuple(all_oracles),
                           a_ub=np.array(all_rows) if all_rows else None,
                           b_ub=np.array(all_rhs) if all_rhs else None,
                           anchor=np.zeros(prog.nvar),
                           box=(-np.full(prog.nvar, scale), np.full(prog.nvar, scale)),
                           tol=tol)
    return ok


def optimal_face_deviation(market: Market, acc, payoff, price, origin,
                           tie_tol=TIE_TOL):
    """max |Z - origin|_inf over the tie_tol-optimal superreplication face."""
    x_target = np.asarray(payoff, dtype=float)
    origin = np.asarray(origin, dtype=float)
    prog = build_region(market, acc, x_target)
    rows, rhs, oracles = _cost_leq_rows(prog, float(price) + tie_tol)
    s_t = market.securities.T
    best = 0.0
    for i in range(market.n_states):
        for sign in (1.0, -1.0):
            c = np.zeros(prog.nvar)
            c[:prog.nx] = -sign * s_t[i]
            res = _run(prog, ("linear", c), extra_rows=rows, extra_rhs=rhs,
                       extra_oracles=oracles,
                       box_scale=64.0 * max(1.0, float(np.max(np.abs(x_target), initial=0.0))))
            if res.status == UNBOUNDED:
                return INF
            if res.status == INFEASIBLE:
                return 0.0  # face numerically empty
            dev = -res.value - sign * origin[i]
            best = max(best, dev)
    return best


def point_in_optimal_face(market: Market, acc, payoff, price, candidate,
                          tie_tol=TIE_TOL, tol=1e-9) -> bool:
    """Whether `candidate` lies on the tie_tol-optimal superreplication face."""
    z = np.asarray(candidate, dtype=float)
    x = replicating_portfolio(market, z)
    if x is None or not market.constraints.admits(x):
        return False
    if price_portfolio(market.rule, x) > price + tie_tol + tol:
        return False
    return acc_mod.contains(acc, market.space, z - np.asarray(payoff, dtype=float), tol)


def mcp_interval(market: Market, acc, payoff) -> MCPInterval:
    """Price interval: sup is the superreplication price; closedness from
    the uniqueness of the attainer (empty exact face = vacuously closed)."""
    x_target = np.asarray(payoff, dtype=float)
    res = superreplication_price(market, acc, x_target)
    if res.status == INFEASIBLE:
        return MCPInterval(INF, False)
    if res.status == UNBOUNDED:
        return MCPInterval(-INF, False)
    if res.optimal and not res.attained:
        # the infimum is approached, never attained: the exact optimal face
        # is empty and the supremum is market consistent vacuously
        return MCPInterval(res.value, True, None, False)
    dev_x = optimal_face_deviation(market, acc, x_target, res.value, x_target)
    right_closed = dev_x <= FACE_TOL
    unique = right_closed
    if not right_closed and res.payoff is not None:
        dev_w = optimal_face_deviation(market, acc, x_target, res.value, res.payoff)
        unique = dev_w <= FACE_TOL
    return MCPInterval(res.value, right_closed, res.payoff, unique)


def zero_spread_consistency(market: Market, acc, payoff, tol=1e-9) -> bool:
    """Two-sided attainable payoffs with zero spread price at their market
    cost when no good deal exists; verifies the pricing pipeline agrees."""
    from .gooddeal import find_good_deal

    x_target = np.asarray(payoff, dtype=float)
    if not is_attainable(market, x_target) or not is_attainable(market, -x_target):
        raise NotTwoSidedlyAttainable("payoff must be attainable in both directions")
    px = payoff_price(market, x_target)
    pm = payoff_price(market, -x_target)
    if abs(pm + px) > tol * (1 + abs(px)):
        return False
    if find_good_deal(market, acc).kind != "none":
        return False
    interval = mcp_interval(market, acc, x_target)
    if abs(interval.sup - px) > 1e-6 * (1 + abs(px)) or not interval.right_closed:
        raise InternalInconsistency(
            f"zero-spread payoff prices at {px}, pipeline returned "
            f"sup={interval.sup} right_closed={interval.right_closed}")
    return True
