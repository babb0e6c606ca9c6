"""Polyhedral helpers: H-form blocks and double-description ray enumeration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVE_TOL = 1e-9


@dataclass(frozen=True)
class LinearBlock:
    """Convex set {y : exists u : a_x y + a_u u <= b} in payoff coordinates.

    The lifted columns u carry epigraph variables for piecewise-linear
    functionals (shortfall tails, utility levels, ...).
    """

    a_x: np.ndarray
    a_u: np.ndarray
    b: np.ndarray

    @staticmethod
    def rows(a_x, b):
        a_x = np.atleast_2d(np.asarray(a_x, dtype=float))
        return LinearBlock(a_x, np.zeros((a_x.shape[0], 0)), np.asarray(b, dtype=float))

    @property
    def n(self):
        return self.a_x.shape[1]

    @property
    def n_lift(self):
        return self.a_u.shape[1]

    def member(self, y, tol=1e-9):
        """Membership via LP feasibility when lifted, direct check otherwise."""
        y = np.asarray(y, dtype=float)
        scale = 1.0 + np.abs(self.a_x).sum(axis=1) * max(1.0, float(np.max(np.abs(y), initial=0.0)))
        if self.n_lift == 0:
            return bool(np.all(self.a_x @ y <= self.b + tol * scale))
        from .solver import solve_lp
        res = solve_lp(np.zeros(self.n_lift), a_ub=self.a_u,
                       b_ub=self.b - self.a_x @ y + tol * scale)
        return res.status == "optimal"

    def shifted_rows(self, c, d, nvar, col0, lift0):
        """Rows over a bigger variable vector v for {v : C v[cols] + d in set}.

        c maps the first block of structural variables (starting at col0,
        width c.shape[1]) into payoff space; lifted columns are placed at
        lift0.  Returns (rows, rhs).
        """
        c = np.atleast_2d(c)
        m = self.a_x.shape[0]
        rows = np.zeros((m, nvar))
        rows[:, col0:col0 + c.shape[1]] = self.a_x @ c
        if self.n_lift:
            rows[:, lift0:lift0 + self.n_lift] = self.a_u
        rhs = self.b - self.a_x @ d
        return rows, rhs


def null_space(a, tol=1e-9):
    """Orthonormal basis of ker(a) as columns."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    _, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return vt[rank:].T


def row_space(a, tol=1e-9):
    """Orthonormal basis of the row space as columns."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] == 0:
        return np.zeros((a.shape[1], 0))
    _, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return vt[:rank].T


def cone_generators(w):
    """Extreme rays and lineality basis of {z : w z >= 0}.

    Returns (rays, lineality): lists of vectors; the cone equals
    cone(rays) + span(lineality).  Rays are unit max-norm, deterministic
    order.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    d = w.shape[1]
    w = w[np.any(np.abs(w) > ACTIVE_TOL, axis=1)]
    if w.shape[0] == 0:
        return [], [e.copy() for e in np.eye(d)]
    lin = null_space(w)
    q = row_space(w)
    r = q.shape[1]
    wq = w @ q  # pointed cone {v in R^r : wq v >= 0}
    rays_r = _dd_pointed(wq)
    rays = [q @ v for v in rays_r]
    rays = _normalize_rays(rays)
    lineality = [lin[:, j].copy() for j in range(lin.shape[1])]
    return rays, lineality


def _dd_pointed(w):
    """Double description for a pointed cone {v : w v >= 0}, rank(w) full."""
    m, r = w.shape
    if r == 0:
        return []
    # seed with r independent rows: simplicial cone has rays = inverse columns
    idx = _independent_rows(w, r)
    b = w[idx]
    rays = [c.copy() for c in np.linalg.inv(b).T]
    processed = list(idx)
    scale = np.maximum(np.abs(w).sum(axis=1), 1.0)
    for i in range(m):
        if i in processed:
            continue
        a = w[i]
        vals = [float(a @ ray) for ray in rays]
        plus = [k for k, v in enumerate(vals) if v > ACTIVE_TOL]
        zero = [k for k, v in enumerate(vals) if abs(v) <= ACTIVE_TOL]
        minus = [k for k, v in enumerate(vals) if v < -ACTIVE_TOL]
        if not minus:
            processed.append(i)
            continue
        active = _active_sets(w, processed, rays, scale)
        new_rays = []
        for kp in plus:
            for km in minus:
                if not _adjacent(active, kp, km, len(rays), r):
                    continue
                nr = vals[kp] * np.asarray(rays[km]) - vals[km] * np.asarray(rays[kp])
                nrm = float(np.max(np.abs(nr)))
                if nrm > ACTIVE_TOL:
                    new_rays.append(nr / nrm)
        rays = [rays[k] for k in plus + zero] + new_rays
        processed.append(i)
    return _normalize_rays(rays)


def _independent_rows(w, r):
    idx = []
    for i in range(w.shape[0]):
        cand = idx + [i]
        if np.linalg.matrix_rank(w[cand], tol=1e-9) == len(cand):
            idx.append(i)
        if len(idx) == r:
            return idx
    raise ValueError("constraint matrix is rank deficient")


def _active_sets(w, processed, rays, scale):
    act = np.zeros((len(rays), len(processed)), dtype=bool)
    for k, ray in enumerate(rays):
        vals = w[processed] @ ray
        act[k] = np.abs(vals) <= ACTIVE_TOL * scale[processed] * max(1.0, float(np.max(np.abs(ray))))
    return act


def _adjacent(active, kp, km, n_rays, r):
    common = active[kp] & active[km]
    if int(common.sum()) < r - 2:
        return False
    for k in range(n_rays):
        if k in (kp, km):
            continue
        if np.all(common <= active[k]):
            return False
    return True


def _normalize_rays(rays):
    out = []
    seen = set()
    for ray in rays:
        ray = np.asarray(ray, dtype=float)
        nrm = float(np.max(np.abs(ray)))
        if nrm <= ACTIVE_TOL:
            continue
        ray = ray / nrm
        key = tuple(np.round(ray, 9))
        if key not in seen:
            seen.add(key)
            out.append(ray)
    return sorted(out, key=lambda v: tuple(np.round(v, 9)))


def project_generators(rays, lineality, d):
    """Project lifted generators onto the first d coordinates."""
    prays = _normalize_rays([r[:d] for r in rays])
    plin = [v[:d] for v in lineality]
    basis = row_space(np.array(plin)) if plin else np.zeros((d, 0))
    lin_out = [basis[:, j] for j in range(basis.shape[1])]
    # lineality directions re-enter the ray list as +/- pairs downstream
    return prays, lin_out
