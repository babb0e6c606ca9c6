"""Good-deal detection: plain, scalable, and strong scalable variants.

A good deal is a nonzero acceptable attainable payoff with nonpositive
cost; the scalable variant lives in the recession objects (acceptable and
attainable at every volume, with nonpositive asymptotic cost); a strong
scalable good deal is one whose negative is not itself scalable.  Strict
conditions are certified through a maximized margin over signed payoff
coordinates with the ball |X|_inf <= 1 as normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import acceptance as acc_mod
from .model import Market, portfolio_payoff
from .polyhedra import cone_generators, project_generators, row_space
from .pricing import _cost_leq_rows, _run, build_region
from .solver import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp

MARGIN_TOL = 1e-7

NONE = "none"
GOOD_DEAL = "good_deal"
SCALABLE = "scalable_good_deal"
STRONG_SCALABLE = "strong_scalable_good_deal"


@dataclass
class GoodDealReport:
    kind: str
    witness: np.ndarray | None = None
    margin: float = 0.0
    lineality: list = field(default_factory=list)


def _margin_scan(market: Market, acc, *, recession: bool):
    """Maximize each signed payoff coordinate over the (recession) deal set.

    The deal set is {x in P, S'x in A, cost <= 0, |S'x|_inf <= 1} or its
    recession analogue.  Returns (margin, witness payoff or None).
    """
    prog = build_region(market, acc, np.zeros(market.n_states), recession=recession)
    rows, rhs, oracles = _cost_leq_rows(prog, 0.0, recession=recession)
    s_t = market.securities.T
    ball_rows, ball_rhs = [], []
    for i in range(market.n_states):
        for sign in (1.0, -1.0):
            r = np.zeros(prog.nvar)
            r[:prog.nx] = sign * s_t[i]
            ball_rows.append(r)
            ball_rhs.append(1.0)
    best, best_payoff = 0.0, None
    for i in range(market.n_states):
        for sign in (1.0, -1.0):
            c = np.zeros(prog.nvar)
            c[:prog.nx] = -sign * s_t[i]
            res = _run(prog, ("linear", c),
                       extra_rows=rows + ball_rows, extra_rhs=rhs + ball_rhs,
                       extra_oracles=oracles, box_scale=8.0)
            if res.status not in (OPTIMAL, "tolerance_reached") or res.x is None:
                continue
            val = -res.value if res.status == OPTIMAL else -res.value
            if val > best:
                best = val
                best_payoff = s_t @ res.x[:prog.nx]
    return best, best_payoff


def find_good_deal(market: Market, acc) -> GoodDealReport:
    """Largest-margin nonzero acceptable attainable payoff with cost <= 0."""
    margin, witness = _margin_scan(market, acc, recession=False)
    if margin > MARGIN_TOL:
        return GoodDealReport(GOOD_DEAL, witness, margin)
    return GoodDealReport(NONE, margin=margin)


def find_scalable_good_deal(market: Market, acc) -> GoodDealReport:
    """Largest-margin direction in the recession deal set."""
    margin, witness = _margin_scan(market, acc, recession=True)
    if margin > MARGIN_TOL:
        return GoodDealReport(SCALABLE, witness, margin)
    return GoodDealReport(NONE, margin=margin)


# ---------------------------------------------------------------------------
# Strong scalable good deals via the vector-space test
# ---------------------------------------------------------------------------

def _deal_cone_rows(market: Market, acc):
    """Homogeneous lifted rows of the scalable-deal cone in portfolio space,
    or None when a scripted piece forces the numeric path."""
    prog = build_region(market, acc, np.zeros(market.n_states), recession=True)
    if prog.oracles:
        return None, prog
    rows, rhs, oracles = _cost_leq_rows(prog, 0.0, recession=True)
    if oracles:
        return None, prog
    all_rows = list(prog.a_ub) + rows
    if not all_rows:
        return np.zeros((0, prog.nvar)), prog
    return np.array(all_rows), prog


def _in_deal_cone(market: Market, acc, x_port) -> bool:
    """Membership of a portfolio direction in the scalable-deal cone."""
    prog = build_region(market, acc, np.zeros(market.n_states), recession=True)
    rows, rhs, oracles = _cost_leq_rows(prog, 0.0, recession=True)
    all_rows = list(prog.a_ub) + rows
    all_rhs = list(prog.b_ub) + rhs
    nvar = prog.nvar
    a_eq = np.zeros((prog.nx, nvar))
    a_eq[:, :prog.nx] = np.eye(prog.nx)
    b_eq = np.asarray(x_port, dtype=float)
    all_oracles = list(prog.oracles) + oracles
    if not all_oracles:
        res = solve_lp(np.zeros(nvar),
                       a_ub=np.array(all_rows) if all_rows else None,
                       b_ub=np.array(all_rhs) if all_rhs else None,
                       a_eq=a_eq, b_eq=b_eq)
        return res.status == OPTIMAL
    from .solver import feasibility_cp
    ok, _ = feasibility_cp(nvar, tuple(all_oracles),
                           a_ub=np.array(all_rows) if all_rows else None,
                           b_ub=np.array(all_rhs) if all_rhs else None,
                           a_eq=a_eq, b_eq=b_eq,
                           anchor=np.concatenate([b_eq, np.zeros(nvar - prog.nx)]),
                           box=(np.concatenate([b_eq, -np.full(nvar - prog.nx, 64.0)]),
                                np.concatenate([b_eq, np.full(nvar - prog.nx, 64.0)])))
    return ok


def find_strong_scalable_good_deal(market: Market, acc) -> GoodDealReport:
    """Vector-space test on N = acceptable recession deals.

    Polyhedral data: enumerate generators of N (lifted double description),
    then N is a vector space iff every generator's negative stays in N.
    Scripted pieces fall back to checking the margin-scan witness only.
    """
    margin, witness = _margin_scan(market, acc, recession=True)
    if margin <= MARGIN_TOL:
        return GoodDealReport(NONE, margin=margin, lineality=[])
    rows, prog = _deal_cone_rows(market, acc)
    s_t = market.securities.T
    if rows is not None:
        rays, lineality = cone_generators(-rows)
        rays, lineality = project_generators(rays, lineality, prog.nx)
        for g in rays:
            if not _in_deal_cone(market, acc, -np.asarray(g)):
                pay = s_t @ np.asarray(g)
                return GoodDealReport(STRONG_SCALABLE, pay, margin)
        span_rows = [np.asarray(g) for g in rays] + [np.asarray(v) for v in lineality]
        basis = row_space(np.array(span_rows)) if span_rows else np.zeros((prog.nx, 0))
        lin_payoffs = [s_t @ basis[:, j] for j in range(basis.shape[1])]
        return GoodDealReport(NONE, margin=margin, lineality=lin_payoffs)
    # numeric path: only the scan witness is testable
    x_port = np.linalg.lstsq(s_t, witness, rcond=None)[0]
    if not _in_deal_cone(market, acc, -x_port):
        return GoodDealReport(STRONG_SCALABLE, witness, margin)
    return GoodDealReport(NONE, margin=margin,
                          lineality=[witness / max(1.0, float(np.max(np.abs(witness))))])


# ---------------------------------------------------------------------------
# Sufficient conditions for the absence of scalable good deals
# ---------------------------------------------------------------------------

COND_I = "cond_i"      # recession acceptance is the positive cone, no scalable arbitrage
COND_II = "cond_ii"    # attainable recession payoffs positive, no scalable arbitrage
COND_III = "cond_iii"  # bounded admissible portfolios
INCONCLUSIVE = "inconclusive"


def _portfolio_cone_bounded(market: Market) -> bool:
    rows, _ = market.constraints.recession_rows(market.n_assets)
    if rows.shape[0] == 0:
        return market.n_assets == 0
    rays, lineality = cone_generators(-rows)
    return not rays and not lineality


def _recession_payoffs_positive(market: Market) -> bool:
    rows, _ = market.constraints.recession_rows(market.n_assets)
    rays, lineality = cone_generators(-rows)
    s_t = market.securities.T
    dirs = [np.asarray(r) for r in rays] + [v for b in lineality for v in (b, -b)]
    return all(bool(np.all(s_t @ d >= -1e-9)) for d in dirs)


def _recession_acceptance_is_positive_cone(market: Market, acc) -> bool:
    block = acc_mod.recession_block(acc, market.space)
    if block is None:
        return False  # scripted: cannot certify the equality
    n = market.n_states
    nvar = n + block.n_lift
    a = np.hstack([block.a_x, block.a_u])
    rows = np.vstack([a, np.hstack([np.eye(n), np.zeros((n, block.n_lift))]),
                      np.hstack([-np.eye(n), np.zeros((n, block.n_lift))])])
    rhs = np.concatenate([block.b, np.ones(n), np.ones(n)])
    for i in range(n):
        c = np.zeros(nvar)
        c[i] = 1.0  # minimize X_i over the recession set ball
        res = solve_lp(c, a_ub=rows, b_ub=rhs)
        if res.status == OPTIMAL and res.value < -MARGIN_TOL:
            return False
    return True


def no_scalable_sufficient_conditions(market: Market, acc) -> str:
    """First matching sufficient condition ruling out scalable good deals.

    Boundedness of the admissible portfolios is checked first: it needs no
    arbitrage scan and subsumes the positivity test trivially.
    """
    if _portfolio_cone_bounded(market):
        return COND_III
    if _recession_acceptance_is_positive_cone(market, acc):
        if find_scalable_good_deal(market, acc_mod.PositiveCone()).kind == NONE:
            return COND_I
    if _recession_payoffs_positive(market):
        if find_scalable_good_deal(market, acc_mod.PositiveCone()).kind == NONE:
            return COND_II
    return INCONCLUSIVE
