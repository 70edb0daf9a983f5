"""Stationary points (u, 0, 0, 0, 0) of the plate system.

They solve beta A^2 u + M(|A^{1/2}u|^2) A u = p.  Because the nonlinearity
only sees the scalar m = |A^{1/2}u|^2, fixing m turns the problem into a
diagonal linear one, which reduces everything to scalar root finding in m.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import (BergerNonlinearity, ModelParams, UnsupportedConfiguration,
                       stretch)
from .spectral import InvalidArgument

RESIDUAL_TOLERANCE = 1e-10
M_XTOL = 1e-13


@dataclass
class EquilibriumSet:
    points: list
    residuals: list
    residual_tolerance: float
    method_tag: str
    diagnostics: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points)

    def nearest(self, u) -> tuple[int, float]:
        """Index and plain Euclidean distance of the point closest to u."""
        d = [float(np.linalg.norm(np.asarray(u) - q)) for q in self.points]
        i = int(np.argmin(d))
        return i, d[i]

    def to_csv(self, path, model=None):
        n = len(self.points[0]) if self.points else 0
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["index"] + [f"u_{k + 1}" for k in range(n)] + ["residual"])
            for i, (q, r) in enumerate(zip(self.points, self.residuals)):
                wr.writerow([i] + [repr(float(x)) for x in q] + [repr(float(r))])


def stationary_residual(params: ModelParams, u) -> float:
    """|beta A^2 u + M(m) A u - p| in F_0."""
    u = params.model.vector(u)
    lam = params.lam
    m = stretch(params, u)
    r = params.beta * lam ** 2 * u + float(params.nonlinearity.M(m)) * lam * u - params.load
    return float(np.linalg.norm(r))


def _f1_norm(params, x) -> float:
    return float(np.linalg.norm(params.lam * x))


def _finalize(params, pts, tag, tol, diagnostics) -> EquilibriumSet:
    pts = sorted(pts, key=lambda q: (round(stretch(params, q), 12), tuple(-np.round(q, 12))))
    kept = []
    for q in pts:
        if all(_f1_norm(params, q - k) > 2 * tol for k in kept):
            kept.append(q)
    res = [stationary_residual(params, q) for q in kept]
    return EquilibriumSet(kept, res, tol, tag, diagnostics)


def enumerate_berger_equilibria(params: ModelParams,
                                tol: float = RESIDUAL_TOLERANCE) -> EquilibriumSet:
    """All stationary points for M(z) = z - Gamma and p = 0.

    u = 0, and u = +-c_k e_k with c_k = sqrt((Gamma - beta lambda_k) / lambda_k)
    for every mode with beta lambda_k < Gamma.  A mode with
    beta lambda_k = Gamma gives c_k = 0, which merges with the origin.
    """
    nl = params.nonlinearity
    if not isinstance(nl, BergerNonlinearity):
        raise UnsupportedConfiguration("closed-form enumeration needs M(z) = z - Gamma")
    if np.any(params.load != 0):
        raise UnsupportedConfiguration("closed-form enumeration needs zero load")
    n = params.model.mode_count
    pts = [np.zeros(n)]
    for k, lam in enumerate(params.lam):
        gap = nl.gamma - params.beta * lam
        if gap < 0:
            continue
        c = math.sqrt(gap / lam)
        for sign in (1.0, -1.0):
            q = np.zeros(n)
            q[k] = sign * c
            pts.append(q)
    return _finalize(params, pts, "explicit", tol, [])


def radius_bound(params: ModelParams) -> float:
    """Upper bound on |A u*| over stationary points.

    Pairing the stationarity equation with u gives
    beta |Au|^2 + M(m) m = (p, u).  When M is nondecreasing the
    antiderivative is convex, so M(m) m >= script-M(m) >= -a m - b with the
    coercivity witness (a, b); with m <= |Au|^2 / lambda1 and
    |u| <= |Au| / lambda1 this leaves a quadratic inequality in |Au|.
    """
    lam1 = params.model.lambda1
    a, b = params.nonlinearity.witness(lam1, params.beta)
    c2 = params.beta - a / lam1
    if c2 <= 0:
        raise InvalidArgument("coercivity witness too weak for a radius bound")
    c1 = float(np.linalg.norm(params.load)) / lam1
    return (c1 + math.sqrt(c1 * c1 + 4.0 * c2 * b)) / (2.0 * c2)


def _scan_roots(f, grid) -> list:
    vals = np.array([f(x) for x in grid])
    roots = [float(x) for x, y in zip(grid, vals) if y == 0.0]
    for x0, x1, y0, y1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.isfinite(y0) and np.isfinite(y1) and y0 * y1 < 0:
            roots.append(float(brentq(f, x0, x1, xtol=M_XTOL, rtol=4 * np.finfo(float).eps)))
    return roots


def _newton_polish(params: ModelParams, u: np.ndarray, iters: int = 3) -> np.ndarray:
    lam = params.lam
    nl = params.nonlinearity
    for _ in range(iters):
        m = stretch(params, u)
        r = params.beta * lam ** 2 * u + float(nl.M(m)) * lam * u - params.load
        if np.linalg.norm(r) < 1e-15 * (1 + np.linalg.norm(params.load)):
            break
        J = np.diag(params.beta * lam ** 2 + float(nl.M(m)) * lam)
        J += 2.0 * float(nl.dM(m)) * np.outer(lam * u, lam * u)
        try:
            du = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        cand = u - du
        if stationary_residual(params, cand) < stationary_residual(params, u):
            u = cand
        else:
            break
    return u


def solve_equilibria_general(params: ModelParams, scan_range: tuple | None = None,
                             scan_points: int = 2001,
                             tol: float = RESIDUAL_TOLERANCE) -> EquilibriumSet:
    """Stationary points by scanning the scalar reduction in m.

    Regular branch: u_k(m) = p_k / (beta lambda_k^2 + M(m) lambda_k) and
    g(m) = sum lambda_k u_k(m)^2 - m; sign changes of g are bisected.

    Degenerate branches: where M(m) = -beta lambda_k, modes with p = 0 at that
    eigenvalue may carry a free amplitude c fixed by
    lambda_k c^2 = m - sum_regular lambda_j u_j^2.  For a repeated eigenvalue
    the solutions form a sphere; only its coordinate points are returned.

    Completeness is guaranteed only when roots are separated on the scan
    grid, which holds for the Berger form.
    """
    lam = params.lam
    beta = params.beta
    nl = params.nonlinearity
    p = params.load
    if scan_range is None:
        r = radius_bound(params)
        scan_range = (0.0, 1.1 * r * r / params.model.lambda1 + 1.0)
    lo, hi = map(float, scan_range)
    if lo < 0 or hi <= lo:
        raise InvalidArgument("scan range must be an interval inside [0, inf)")
    grid = np.linspace(lo, hi, int(scan_points))
    forced = p != 0
    diagnostics = []

    def regular_u(m, mask=forced):
        den = beta * lam ** 2 + float(nl.M(m)) * lam
        u = np.zeros_like(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            u[mask] = p[mask] / den[mask]
        return u

    def g(m):
        u = regular_u(m)
        val = float(np.sum(lam * u * u)) - m
        return val if np.isfinite(val) else math.nan

    pts = []
    for m in _scan_roots(g, grid):
        u = regular_u(m)
        if np.all(np.isfinite(u)):
            pts.append(_newton_polish(params, u))

    for lam_k in np.unique(lam):
        modes = np.flatnonzero(lam == lam_k)

        def h(m, lam_k=lam_k):
            return float(nl.M(m)) + beta * lam_k

        for m_star in _scan_roots(h, grid):
            if np.any(forced[modes]):
                diagnostics.append({"kind": "branch-point", "m": m_star,
                                    "eigenvalue": float(lam_k),
                                    "detail": "forced mode with vanishing denominator"})
                continue
            u_reg = regular_u(m_star)
            if not np.all(np.isfinite(u_reg)):
                diagnostics.append({"kind": "branch-point", "m": m_star,
                                    "eigenvalue": float(lam_k),
                                    "detail": "regular branch singular at this m"})
                continue
            rest = m_star - float(np.sum(lam * u_reg * u_reg))
            if rest < -M_XTOL:
                continue
            c = math.sqrt(max(rest, 0.0) / lam_k)
            for k in modes:
                for sign in (1.0, -1.0):
                    q = u_reg.copy()
                    q[k] = sign * c
                    pts.append(_newton_polish(params, q))

    pts = [q for q in pts if stationary_residual(params, q) < tol]
    return _finalize(params, pts, "scalar-reduction", tol, diagnostics)


def distance_to_set(params: ModelParams, U, eqset: EquilibriumSet) -> tuple[int, float]:
    """Phase-space distance from U to the nearest (u*, 0, 0, 0, 0)."""
    from .kernels import history_norm_sq

    model = params.model
    base = (float(U.w @ U.w) + float(U.v @ U.v)
            + history_norm_sq(model, params.kernel1, U.etabar, 1.0)
            + history_norm_sq(model, params.kernel2, U.eta, 0.5))
    best = (-1, math.inf)
    for i, q in enumerate(eqset.points):
        d = math.sqrt(max(params.beta * float(np.sum((params.lam * (U.u - q)) ** 2)) + base, 0.0))
        if d < best[1]:
            best = (i, d)
    return best
