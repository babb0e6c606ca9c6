"""Convex optimization engine: dense two-phase simplex and Kelley cutting planes.

Every higher module funnels its optimization through the two entry points
here.  The simplex is deliberately in-house (problem dimensions stay tiny)
and uses Bland's rule throughout, so identical inputs produce identical
results bit for bit.  The cutting-plane solver handles scripted convex
pieces via value/subgradient oracles on top of exact linear rows, with a
localization box that doubles itself when the optimum pins to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoxTooSmall, ExprDomainError

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
CP_TOL = 1e-6
PIVOT_TOL = 1e-10

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"
TOLERANCE = "tolerance_reached"


@dataclass
class SolveResult:
    status: str
    value: float
    x: np.ndarray | None = None
    attained: bool = False
    dual_ub: np.ndarray | None = None
    dual_eq: np.ndarray | None = None
    ray: np.ndarray | None = None
    iterations: int = 0
    note: str = ""

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _as2d(a, ncols):
    if a is None or (hasattr(a, "__len__") and len(a) == 0):
        return np.zeros((0, ncols))
    return np.atleast_2d(np.asarray(a, dtype=float))


def _as1d(b):
    if b is None:
        return np.zeros(0)
    return np.atleast_1d(np.asarray(b, dtype=float))


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, bounds=None):
    """Minimize c.x subject to a_ub x <= b_ub, a_eq x = b_eq, optional bounds.

    Variables are free unless `bounds` (list of (lo, hi), None entries = free)
    says otherwise.  Dual sign convention: value = dual_ub.b_ub + dual_eq.b_eq
    with dual_ub <= 0 componentwise.
    """
    c = np.asarray(c, dtype=float)
    nvar = c.size
    a_ub = _as2d(a_ub, nvar)
    b_ub = _as1d(b_ub)
    a_eq = _as2d(a_eq, nvar)
    b_eq = _as1d(b_eq)
    n_ub_orig = a_ub.shape[0]

    if bounds is not None:
        extra_a, extra_b = [], []
        for j, bd in enumerate(bounds):
            if bd is None:
                continue
            lo, hi = bd
            if lo is not None and np.isfinite(lo):
                row = np.zeros(nvar)
                row[j] = -1.0
                extra_a.append(row)
                extra_b.append(-lo)
            if hi is not None and np.isfinite(hi):
                row = np.zeros(nvar)
                row[j] = 1.0
                extra_a.append(row)
                extra_b.append(hi)
        if extra_a:
            a_ub = np.vstack([a_ub, np.array(extra_a)])
            b_ub = np.concatenate([b_ub, np.array(extra_b)])

    res = _simplex(c, a_ub, b_ub, a_eq, b_eq)
    if res.dual_ub is not None:
        res.dual_ub = res.dual_ub[:n_ub_orig]
    return res


def _simplex(c, a_ub, b_ub, a_eq, b_eq):
    nvar = c.size
    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq

    # split free variables: x = z_plus - z_minus
    a_full = np.vstack([a_ub, a_eq]) if m else np.zeros((0, nvar))
    b_full = np.concatenate([b_ub, b_eq])
    ncols_struct = 2 * nvar
    cols = [np.hstack([a_full, -a_full])]
    # slack columns for ub rows
    slack = np.zeros((m, m_ub))
    for i in range(m_ub):
        slack[i, i] = 1.0
    cols.append(slack)
    a_std = np.hstack(cols)
    c_std = np.concatenate([c, -c, np.zeros(m_ub)])

    # basis: slack where usable, artificial otherwise
    n_pre = a_std.shape[1]
    basis = [-1] * m
    art_cols, art_sign, art_row = [], [], []
    for i in range(m):
        if i < m_ub and b_full[i] >= 0:
            basis[i] = ncols_struct + i
        else:
            col = np.zeros(m)
            col[i] = 1.0 if b_full[i] >= 0 else -1.0
            art_cols.append(col)
            art_sign.append(col[i])
            art_row.append(i)
    n_art = len(art_cols)
    if n_art:
        a_std = np.hstack([a_std, np.array(art_cols).T])
        c_std = np.concatenate([c_std, np.zeros(n_art)])
        for k, i in enumerate(art_row):
            basis[i] = n_pre + k
    ntot = a_std.shape[1]

    # tableau: rows = constraints, last col = rhs; make basis columns unit
    t = np.hstack([a_std, b_full.reshape(-1, 1)])
    for i in range(m):
        piv = t[i, basis[i]]
        if abs(piv - 1.0) > PIVOT_TOL:
            t[i] /= piv

    artificial = np.zeros(ntot, dtype=bool)
    artificial[n_pre:] = True

    def run_phase(cost, allow, max_iter=20000):
        """Bland-rule simplex on the shared tableau; returns status."""
        nonlocal t, basis
        it = 0
        while True:
            it += 1
            if it > max_iter:
                return TOLERANCE, it
            y_like = cost[basis] @ t[:, :ntot]
            rc = cost[:ntot] - y_like
            enter = -1
            for j in range(ntot):
                if allow[j] and j not in basis and rc[j] < -OPT_TOL:
                    enter = j
                    break
            if enter < 0:
                return OPTIMAL, it
            col = t[:, enter]
            leave, best = -1, np.inf
            for i in range(m):
                if col[i] > PIVOT_TOL:
                    ratio = t[i, -1] / col[i]
                    if ratio < best - 1e-12 or (
                        abs(ratio - best) <= 1e-12
                        and (leave < 0 or basis[i] < basis[leave])
                    ):
                        best, leave = ratio, i
            if leave < 0:
                return UNBOUNDED, enter
            piv = t[leave, enter]
            t[leave] /= piv
            for i in range(m):
                if i != leave and abs(t[i, enter]) > PIVOT_TOL:
                    t[i] -= t[i, enter] * t[leave]
            basis[leave] = enter

    iterations = 0
    if n_art:
        cost1 = np.zeros(ntot)
        cost1[artificial] = 1.0
        allow1 = np.ones(ntot, dtype=bool)
        status, it = run_phase(cost1, allow1)
        iterations += it if isinstance(it, int) else 0
        phase1_val = float(cost1[basis] @ t[:, -1])
        if phase1_val > 1e-7:
            return SolveResult(INFEASIBLE, np.inf, iterations=iterations)
        # drive artificials out of the basis where possible
        for i in range(m):
            if artificial[basis[i]]:
                pivoted = False
                for j in range(n_pre):
                    if abs(t[i, j]) > 1e-7 and not artificial[j]:
                        piv = t[i, j]
                        t[i] /= piv
                        for k in range(m):
                            if k != i and abs(t[k, j]) > PIVOT_TOL:
                                t[k] -= t[k, j] * t[i]
                        basis[i] = j
                        pivoted = True
                        break
                if not pivoted:
                    t[i, -1] = 0.0  # redundant row

    allow2 = ~artificial
    status, info = run_phase(c_std, allow2)
    if status == UNBOUNDED:
        enter = info
        ray_std = np.zeros(ntot)
        ray_std[enter] = 1.0
        for i in range(m):
            ray_std[basis[i]] = -t[i, enter]
        ray = ray_std[:nvar] - ray_std[nvar:2 * nvar]
        x = _extract_x(t, basis, nvar)
        return SolveResult(UNBOUNDED, -np.inf, x=x, ray=ray, iterations=iterations)
    x = _extract_x(t, basis, nvar)
    value = float(c @ x)
    # dual multipliers from reduced costs of slack / artificial witnesses
    y_like = c_std[basis] @ t[:, :ntot]
    rc = c_std[:ntot] - y_like
    dual = np.zeros(m)
    for i in range(m_ub):
        dual[i] = -rc[ncols_struct + i]
    for k, i in enumerate(art_row):
        if i >= m_ub:
            dual[i] = -rc[n_pre + k] * art_sign[k]
    res = SolveResult(
        OPTIMAL if status == OPTIMAL else TOLERANCE,
        value,
        x=x,
        attained=status == OPTIMAL,
        dual_ub=dual[:m_ub],
        dual_eq=dual[m_ub:],
        iterations=iterations,
    )
    return res


def _extract_x(t, basis, nvar):
    ntot = t.shape[1] - 1
    z = np.zeros(ntot)
    for i, j in enumerate(basis):
        z[j] = t[i, -1]
    return z[:nvar] - z[nvar:2 * nvar]


# ---------------------------------------------------------------------------
# Cutting planes
# ---------------------------------------------------------------------------

@dataclass
class CutProgram:
    """Convex program over `dim` variables with exact rows plus oracle pieces.

    objective: either ("linear", c) or ("oracle", fn) with fn(v) -> (val, grad).
    oracles: constraint callables, each fn(v) -> (val, grad), feasible iff
    val <= 0.  Oracles may raise ExprDomainError outside their domain.
    """

    dim: int
    objective: tuple
    oracles: tuple = ()
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    anchor: np.ndarray | None = None
    box: tuple | None = None  # (lo, hi) hint, defaults to [-16, 16]^dim


@dataclass
class _Cuts:
    rows: list = field(default_factory=list)
    rhs: list = field(default_factory=list)

    def add(self, row, rhs):
        self.rows.append(np.asarray(row, dtype=float))
        self.rhs.append(float(rhs))


def solve_cutting_plane(prog: CutProgram, cp_tol=1e-9, feas_tol=FEAS_TOL,
                        max_iter=10000, max_doublings=10):
    """Kelley outer approximation with an auto-doubling localization box.

    Returns value within tolerance of the optimum; attainment is reported
    true only when the improving iterates settle on a point instead of
    escaping along the (repeatedly doubled) box.
    """
    dim = prog.dim
    lo, hi = prog.box if prog.box is not None else (-np.full(dim, 16.0), np.full(dim, 16.0))
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    linear_obj = prog.objective[0] == "linear"
    obj_fn = None if linear_obj else prog.objective[1]
    c_lin = np.asarray(prog.objective[1], dtype=float) if linear_obj else None

    anchor = prog.anchor
    if anchor is None:
        anchor = np.clip(np.zeros(dim), lo, hi)
    anchor = np.asarray(anchor, dtype=float)

    obj_cuts, feas_cuts = _Cuts(), _Cuts()

    def eval_all(v):
        """Constraint values/cuts at v; returns (ok, max_violation)."""
        worst = -np.inf
        for fn in prog.oracles:
            val, g = fn(v)
            worst = max(worst, val)
            if val > -np.inf:
                feas_cuts.add(np.append(g, 0.0) if not linear_obj else g,
                              float(g @ v) - val)
        return worst

    def objective_at(v):
        if linear_obj:
            return float(c_lin @ v)
        val, g = obj_fn(v)
        obj_cuts.add(np.append(g, -1.0), float(g @ v) - val)
        return val

    def masked(v):
        """True if every oracle (objective included) is finite at v."""
        try:
            for fn in prog.oracles:
                fn(v)
            if not linear_obj:
                obj_fn(v)
            return True
        except ExprDomainError:
            return False

    if not masked(anchor):
        for cand in (np.zeros(dim), 0.5 * (lo + hi)):
            if masked(cand):
                anchor = cand
                break
        else:
            raise ExprDomainError("no in-domain anchor point for cutting planes")

    nvar = dim if linear_obj else dim + 1

    def master(lo_b, hi_b):
        a_rows, b_rows = [], []
        if prog.a_ub is not None and len(prog.a_ub):
            for row, rb in zip(np.atleast_2d(prog.a_ub), np.atleast_1d(prog.b_ub)):
                a_rows.append(np.append(row, 0.0) if not linear_obj else np.asarray(row, float))
                b_rows.append(float(rb))
        for row, rb in zip(feas_cuts.rows, feas_cuts.rhs):
            a_rows.append(row)
            b_rows.append(rb)
        for row, rb in zip(obj_cuts.rows, obj_cuts.rhs):
            a_rows.append(row)
            b_rows.append(rb)
        a_eq = b_eq = None
        if prog.a_eq is not None and len(prog.a_eq):
            a_eq = np.hstack([np.atleast_2d(prog.a_eq),
                              np.zeros((len(np.atleast_2d(prog.a_eq)), nvar - dim))])
            b_eq = np.atleast_1d(prog.b_eq)
        c = np.zeros(nvar)
        if linear_obj:
            c[:] = c_lin
        else:
            c[-1] = 1.0
        bounds = [(lo_b[j], hi_b[j]) for j in range(dim)]
        if not linear_obj:
            bounds.append(None)
        return solve_lp(c, a_ub=np.array(a_rows) if a_rows else None,
                        b_ub=np.array(b_rows) if b_rows else None,
                        a_eq=a_eq, b_eq=b_eq, bounds=bounds)

    # seed one objective cut so the epigraph variable is bounded below
    try:
        objective_at(anchor)
        eval_all(anchor)
    except ExprDomainError:
        pass

    best_val, best_pt = np.inf, None
    incumbents = []
    doubles = 0
    total_iter = 0
    record = None   # (best_val, best_pt, box_width) at the last doubling
    history = []    # best values at doubling times, for drift classification
    escaped = False  # a doubling happened, so settling means little

    while True:
        polish_left = 80
        prev_master = None
        last_master = None
        for _ in range(max(140, max_iter // (max_doublings + 1))):
            total_iter += 1
            if total_iter > max_iter:
                return SolveResult(TOLERANCE, best_val, x=best_pt,
                                   attained=False, iterations=total_iter)
            res = master(lo, hi)
            if res.status == INFEASIBLE:
                return SolveResult(INFEASIBLE, np.inf, iterations=total_iter)
            v = res.x[:dim]
            last_master = v
            lb = res.value
            try:
                worst = eval_all(v)
                violated = worst > feas_tol
                if not violated:
                    fv = objective_at(v)
                    if fv < best_val - 1e-15:
                        best_val, best_pt = fv, v.copy()
                        incumbents.append(v.copy())
            except ExprDomainError:
                vb = _bisect_to_domain(anchor, v, masked)
                eval_all(vb)
                if not linear_obj:
                    try:
                        fvb = objective_at(vb)
                        if fvb < best_val and _violation(prog, vb) <= feas_tol:
                            best_val, best_pt = fvb, vb.copy()
                            incumbents.append(vb.copy())
                    except ExprDomainError:
                        pass
                continue
            if not violated and best_val - lb <= cp_tol * (1.0 + abs(best_val)):
                if _pinned(v, lo, hi) or _pinned(best_pt, lo, hi):
                    break  # converged on this box but pinned: expand
                # polish until the master optimizer settles; attainment means
                # the iterates converged to a point rather than having fled
                # to the box during earlier expansions
                if prev_master is not None and \
                        float(np.max(np.abs(v - prev_master))) < 1e-6:
                    att = not (escaped or _fled_since(record, best_val, v, cp_tol))
                    return SolveResult(OPTIMAL, best_val, x=best_pt,
                                       attained=att, iterations=total_iter)
                polish_left -= 1
                if polish_left <= 0:
                    att = _settled(incumbents) and \
                        not (escaped or _fled_since(record, best_val, v, cp_tol))
                    return SolveResult(OPTIMAL, best_val, x=best_pt,
                                       attained=att, iterations=total_iter)
            prev_master = v.copy()
            if not violated and abs(lb) > 1e14:
                break  # runaway, treat like pinning
        # box handling
        pinned = best_pt is None or _pinned(best_pt, lo, hi) or (
            last_master is not None and _pinned(last_master, lo, hi))
        if not pinned:
            # iteration budget exhausted without pinning
            return SolveResult(TOLERANCE, best_val, x=best_pt,
                               attained=False, iterations=total_iter)
        if record is not None and best_val < np.inf:
            v_old, p_old, w_old = record
            stalled = abs(best_val - v_old) <= max(10 * cp_tol, 1e-7) * (1 + abs(best_val))
            if stalled:
                return SolveResult(OPTIMAL, best_val, x=best_pt,
                                   attained=False, iterations=total_iter,
                                   note="value stabilized, minimizer escapes box")
        if doubles >= max_doublings:
            if best_val == np.inf:
                raise BoxTooSmall("no feasible point within the expanded box")
            impr_last = record[0] - best_val if record is not None else np.inf
            impr_prev = history[-2] - history[-1] if len(history) >= 2 else None
            shrinking = impr_prev is not None and impr_last <= 0.75 * impr_prev
            if not shrinking and impr_last > 1e-6 * (1 + abs(best_val)):
                ray = None
                if len(incumbents) >= 2:
                    d = incumbents[-1] - incumbents[-2]
                    nrm = np.max(np.abs(d))
                    ray = d / nrm if nrm > 0 else None
                return SolveResult(UNBOUNDED, -np.inf, x=best_pt, ray=ray,
                                   iterations=total_iter)
            return SolveResult(OPTIMAL, best_val, x=best_pt, attained=False,
                               iterations=total_iter,
                               note="value still drifting at box cap")
        if record is not None and best_pt is not None and record[1] is not None:
            v_old, p_old, w_old = record
            little = abs(best_val - v_old) <= 1e-3 * (1 + abs(best_val))
            fled = float(np.max(np.abs(best_pt - p_old))) >= 0.2 * w_old
            if little and fled:
                escaped = True  # latched: point flees the box for no gain
        record = (best_val, None if best_pt is None else best_pt.copy(),
                  float(np.max(hi - lo)))
        history.append(best_val)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        lo = center - 2 * half
        hi = center + 2 * half
        doubles += 1


def _fled_since(record, best_val, master_pt, cp_tol):
    """After a box doubling: no value progress while the minimizer relocated
    at the scale of the old box means the optimum is escaping, not attained."""
    if record is None:
        return False
    v_old, p_old, w_old = record
    stalled = v_old - best_val <= max(10 * cp_tol, 1e-7) * (1 + abs(best_val))
    moved = p_old is not None and master_pt is not None and \
        float(np.max(np.abs(np.asarray(master_pt) - p_old))) >= 0.2 * w_old
    return stalled and moved


def _violation(prog, v):
    worst = -np.inf
    for fn in prog.oracles:
        val, _ = fn(v)
        worst = max(worst, val)
    if prog.a_ub is not None and len(prog.a_ub):
        worst = max(worst, float(np.max(np.atleast_2d(prog.a_ub) @ v - np.atleast_1d(prog.b_ub))))
    if prog.a_eq is not None and len(prog.a_eq):
        worst = max(worst, float(np.max(np.abs(np.atleast_2d(prog.a_eq) @ v - np.atleast_1d(prog.b_eq)))))
    return worst if worst > -np.inf else 0.0


def _pinned(v, lo, hi, rel=1e-6):
    width = np.maximum(hi - lo, 1.0)
    return bool(np.any(v <= lo + rel * width) or np.any(v >= hi - rel * width))


def _settled(incumbents, eps=1e-6):
    if len(incumbents) == 0:
        return False
    if len(incumbents) == 1:
        return True
    tail = incumbents[-3:]
    dia = max(float(np.max(np.abs(a - b))) for a in tail for b in tail)
    return dia < eps


def _bisect_to_domain(anchor, target, masked, iters=60):
    """Largest point toward `target` from `anchor` still inside the domain."""
    t_lo, t_hi = 0.0, 1.0
    if masked(target):
        return target
    for _ in range(iters):
        mid = 0.5 * (t_lo + t_hi)
        if masked(anchor + mid * (target - anchor)):
            t_lo = mid
        else:
            t_hi = mid
    return anchor + t_lo * (target - anchor)


def feasibility_cp(dim, oracles, a_ub=None, b_ub=None, a_eq=None, b_eq=None,
                   anchor=None, box=None, tol=FEAS_TOL):
    """Feasibility of {v : oracles(v) <= 0, rows} via min-max-violation."""

    def combined(v):
        vals = []
        grads = []
        for fn in oracles:
            val, g = fn(v)
            vals.append(val)
            grads.append(g)
        k = int(np.argmax(vals))
        return vals[k], grads[k]

    prog = CutProgram(dim=dim, objective=("oracle", combined), oracles=(),
                      a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq,
                      anchor=anchor, box=box)
    try:
        res = solve_cutting_plane(prog, cp_tol=1e-10)
    except BoxTooSmall:
        return False, None
    if res.status == INFEASIBLE:
        return False, None
    if res.status == UNBOUNDED:
        return True, res.x
    if res.value is None or not np.isfinite(res.value):
        return False, None
    return bool(res.value <= tol), res.x
