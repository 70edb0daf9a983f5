"""Verification instruments: Lyapunov functional, energy audit and friends."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import (ModelParams, PhaseState, TrajectoryRecord, initial_state, stretch,
                       tangent_step)
from .kernels import ExpPoly, MemoryKernel, history_norm_sq, transport_quadratic_form
from .spectral import InvalidArgument, fractional_norm_sq, phase_norm_sq

SCHEMA_VERSION = 1


class HypothesisViolated(RuntimeError):
    """Input trajectories leave the region where an estimate is asserted."""


def lyapunov(params: ModelParams, U: PhaseState) -> float:
    """Phi(U) = 1/2 |U|^2 + 1/2 script-M(|A^{1/2}u|^2) - (p, u).

    The factor 1/2 on script-M makes dPhi/dt equal the dissipation exactly,
    because d/dt script-M(m) = 2 M(m) (Au, u_t).
    """
    m = stretch(params, U.u)
    return (0.5 * phase_norm_sq(params.model, params, U)
            + 0.5 * float(params.nonlinearity.antiderivative(m))
            - float(params.load @ U.u))


def state_diagnostics(params: ModelParams, U: PhaseState) -> dict:
    model = params.model
    hb = history_norm_sq(model, params.kernel1, U.etabar, 1.0)
    he = history_norm_sq(model, params.kernel2, U.eta, 0.5)
    norm_sq = (params.beta * fractional_norm_sq(model, U.u, 1.0)
               + float(U.w @ U.w) + float(U.v @ U.v) + hb + he)
    m = stretch(params, U.u)
    phi = (0.5 * norm_sq + 0.5 * float(params.nonlinearity.antiderivative(m))
           - float(params.load @ U.u))
    return {
        "phi": phi,
        "norm_sq": norm_sq,
        "diss_v": -params.omega * fractional_norm_sq(model, U.v, 0.5),
        "diss_etabar": transport_quadratic_form(model, params.kernel1, U.etabar, 1.0),
        "diss_eta": transport_quadratic_form(model, params.kernel2, U.eta, 0.5),
        "hist_etabar": hb,
        "hist_eta": he,
        "a32_u": float(np.sqrt(fractional_norm_sq(model, U.u, 1.5))),
    }


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


# --------------------------------------------------------------------------
# energy audit
# --------------------------------------------------------------------------

@dataclass
class EnergyAudit:
    times: np.ndarray
    phi: np.ndarray
    diss_v: np.ndarray
    diss_etabar: np.ndarray
    diss_eta: np.ndarray
    interval_residual: np.ndarray
    cumulative_residual: np.ndarray
    max_increase: float
    scheme_tolerance: float
    inequality_excess: float
    monotone: bool

    def to_dict(self) -> dict:
        return {"max_abs_cumulative_residual": float(np.max(np.abs(self.cumulative_residual))),
                "max_increase": self.max_increase,
                "scheme_tolerance": self.scheme_tolerance,
                "inequality_excess": self.inequality_excess,
                "monotone": self.monotone}


def energy_audit(params: ModelParams, traj: TrajectoryRecord) -> EnergyAudit:
    """Compare Phi(t) - Phi(tau) with the integrated dissipation.

    Integration over sample times uses the trapezoid rule, so the audit is
    only as accurate as the sampling; record with stride 1 for per-step
    statements.  ``scheme_tolerance`` is the largest per-interval defect
    of the energy identity: Phi may rise by no more than that amount.
    ``inequality_excess`` is the worst value over all pairs tau < t of
    Phi(t) - Phi(tau) + int (omega |A^{1/2}v|^2 + delta1/2 |etabar|^2
    + delta2/2 |eta|^2), which must not exceed the scheme tolerance.
    """
    t = traj.time_array()
    phi = traj.channel("phi")
    dv = traj.channel("diss_v")
    db = traj.channel("diss_etabar")
    de = traj.channel("diss_eta")
    total = dv + db + de
    cum_d = _cumtrapz(total, t)
    cum_res = phi - phi[0] - cum_d
    interval = np.diff(cum_res)
    d1 = params.kernel1.decay_rate
    d2 = params.kernel2.decay_rate
    lower = (-dv + 0.5 * d1 * traj.channel("hist_etabar")
             + 0.5 * d2 * traj.channel("hist_eta"))
    G = phi + _cumtrapz(lower, t)
    # worst G(t) - G(tau) over tau <= t
    running_min = np.minimum.accumulate(G)
    excess = float(np.max(G - running_min)) if G.size else 0.0
    tol = float(np.max(np.abs(interval))) if interval.size else 0.0
    inc = float(np.max(np.diff(phi))) if phi.size > 1 else 0.0
    return EnergyAudit(t, phi, dv, db, de, interval, cum_res, inc, tol, excess,
                       monotone=bool(inc <= tol))


# --------------------------------------------------------------------------
# stabilizability inequality
# --------------------------------------------------------------------------

@dataclass
class PairSeries:
    times: np.ndarray
    Z_sq: np.ndarray
    z_sq: np.ndarray
    norm1: np.ndarray
    norm2: np.ndarray


def pair_series(params: ModelParams, traj1: TrajectoryRecord,
                traj2: TrajectoryRecord) -> PairSeries:
    """|Z(t)|^2 = |U1 - U2|^2 in the phase norm and |z(t)|^2 = |u1 - u2|^2."""
    if traj1.dt != traj2.dt or len(traj1.states) != len(traj2.states):
        raise InvalidArgument("trajectories must share step, stride and horizon")
    t = traj1.time_array()
    if not np.allclose(t, traj2.time_array(), rtol=0, atol=1e-12):
        raise InvalidArgument("trajectories are sampled at different times")
    Z, z, n1, n2 = [], [], [], []
    for a, b in zip(traj1.states, traj2.states):
        Z.append(phase_norm_sq(params.model, params, a - b))
        z.append(float(np.sum((a.u - b.u) ** 2)))
        n1.append(phase_norm_sq(params.model, params, a))
        n2.append(phase_norm_sq(params.model, params, b))
    return PairSeries(t, *(np.array(x) for x in (Z, z, n1, n2)))


@dataclass
class StabilizabilityReport:
    C_R: float
    gamma: float
    success: bool
    degenerate: bool
    min_slack: float
    pair_gammas: list
    slack: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = [list(map(float, s)) for s in self.slack]
        return d


def fit_decay_rate(t, y, window=(0.1, 0.6)) -> float | None:
    """-slope of a least-squares fit of log y over the fractional window of [0, T]."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    T = t[-1]
    sel = (t >= window[0] * T) & (t <= window[1] * T) & (y > 0)
    if np.count_nonzero(sel) < 3:
        return None
    slope = np.polyfit(t[sel], np.log(y[sel]), 1)[0]
    return float(-slope) if slope < 0 else None


def stabilizability_fit(params: ModelParams, pairs, window=(0.1, 0.6), radius: float | None = None,
                        gamma_min: float = 0.01, c_max: float = 1e4) -> StabilizabilityReport:
    """One (C_R, gamma) for |Z(t)|^2 <= C_R |Z(0)|^2 e^{-gamma t} + C_R sup_{tau<=t} |z|^2.

    ``pairs`` holds (traj1, traj2) tuples or precomputed :class:`PairSeries`.
    gamma is the smallest positive per-pair log-linear decay estimate
    (floored at gamma_min); C_R is then the least constant giving
    nonnegative slack at every sample of every pair.
    """
    series = [p if isinstance(p, PairSeries) else pair_series(params, *p) for p in pairs]
    if radius is not None:
        worst = max(float(np.max(np.sqrt(np.maximum(s.norm1, s.norm2)))) for s in series)
        if worst > radius:
            raise HypothesisViolated(f"trajectory norm {worst:.4g} leaves the ball R = {radius:g}")
    live = [s for s in series if np.max(s.Z_sq) > 0]
    if not live:
        return StabilizabilityReport(0.0, gamma_min, True, True, 0.0, [], [],
                                     {"pairs": len(series)})
    gammas = [fit_decay_rate(s.times, s.Z_sq, window) for s in live]
    positive = [g for g in gammas if g is not None]
    gamma = max(gamma_min, min(positive)) if positive else gamma_min
    C = 0.0
    for s in live:
        sup_z = np.maximum.accumulate(s.z_sq)
        denom = s.Z_sq[0] * np.exp(-gamma * s.times) + sup_z
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(denom > 0, s.Z_sq / denom, np.where(s.Z_sq > 0, np.inf, 0.0))
        C = max(C, float(np.max(ratio)))
    C *= 1.0 + 1e-12  # the binding sample would otherwise sit at -1 ulp
    slack = []
    for s in live:
        sup_z = np.maximum.accumulate(s.z_sq)
        slack.append(C * (s.Z_sq[0] * np.exp(-gamma * s.times) + sup_z) - s.Z_sq)
    min_slack = min(float(np.min(x)) for x in slack)
    ok = bool(np.isfinite(C) and C <= c_max and gamma >= gamma_min)
    return StabilizabilityReport(C, gamma, ok, False, min_slack, gammas, slack,
                                 {"pairs": len(series)})


# --------------------------------------------------------------------------
# Volterra equation
# --------------------------------------------------------------------------

@dataclass
class VolterraResult:
    times: np.ndarray
    solution: np.ndarray
    q: float
    increments: list
    ratios: list
    residual: float
    iterations: int


def volterra_operator(kernel: MemoryKernel, beta: float, n: int, dt: float) -> np.ndarray:
    """Trapezoid discretization of (K w)(t) = (kappa + beta)^{-1} int_0^t mu(t - y) w(y) dy."""
    lags = kernel(dt * np.arange(n)) * dt / (kernel.mass() + beta)
    K = np.zeros((n, n))
    for i in range(1, n):
        K[i, :i + 1] = lags[i::-1]
        K[i, 0] *= 0.5
        K[i, i] *= 0.5
    return K


def volterra_solve(kernel1: MemoryKernel, beta: float, F, dt: float, iterations: int = 60,
                   model=None, s_exponent: float = 1.5, tol: float = 0.0,
                   noise_floor: float = 1e-13) -> VolterraResult:
    """Picard iteration w_n = F + K w_{n-1}, w_0 = 0, on a uniform grid.

    F has shape (T, N) (or (T,) for a scalar equation).  Norms are the sup
    over time of the F_{s_exponent} norm when a model is given, else of the
    Euclidean norm.  Iteration stops once an increment drops below
    max(tol, noise_floor * |F|); increments at that level are rounding
    noise, so contraction ratios are reported only above it.
    """
    if iterations < 2:
        raise InvalidArgument("need at least two iterations")
    F = np.asarray(F, dtype=float)
    scalar = F.ndim == 1
    if scalar:
        F = F[:, None]
    weights = np.ones(F.shape[1]) if model is None else model.power(2 * s_exponent)

    def sup_norm(x):
        return float(np.max(np.sqrt(np.sum(weights * x * x, axis=1)))) if x.size else 0.0

    floor = noise_floor * sup_norm(F)
    K = volterra_operator(kernel1, beta, F.shape[0], dt)
    w_prev = np.zeros_like(F)
    incs = []
    it = 0
    for it in range(1, iterations + 1):
        w = F + K @ w_prev
        incs.append(sup_norm(w - w_prev))
        w_prev = w
        if incs[-1] <= max(tol, floor):
            break
    ratios = [incs[i + 1] / incs[i] for i in range(len(incs) - 1) if incs[i + 1] > floor]
    residual = sup_norm(w_prev - F - K @ w_prev)
    sol = w_prev[:, 0] if scalar else w_prev
    q = kernel1.mass() / (kernel1.mass() + beta)
    return VolterraResult(dt * np.arange(F.shape[0]), sol, q, incs, ratios, residual, it)


# --------------------------------------------------------------------------
# representation formulas
# --------------------------------------------------------------------------

@dataclass
class RepresentationReport:
    max_error_etabar: float
    max_error_eta: float
    samples: int

    @property
    def max_error(self) -> float:
        return max(self.max_error_etabar, self.max_error_eta)


def representation_check(params: ModelParams, traj: TrajectoryRecord, etabar_past: ExpPoly,
                         eta_past: ExpPoly, s_max: float | None = None) -> RepresentationReport:
    """Compare stored histories with the formulas built from the trajectory.

    etabar^t(s) = u(t) - u(t - s)                       (s < t)
                = etabar_0(s - t) + u(t) - u(0)         (s >= t)
    eta^t(s)    = int_0^s v(t - y) dy                   (s < t)
                = eta_0(s - t) + int_0^t v              (s >= t)

    Past values of u and of the running integral of v (trapezoid in time)
    are interpolated linearly from the per-step path.  Nodes: the s-grid
    for the s-grid backend, the buffer lags j dt otherwise; ``s_max``
    restricts the nodes checked.
    """
    if not traj.has_path():
        raise InvalidArgument("representation check needs a trajectory recorded with keep_path")
    dt = traj.dt
    u_path = np.array(traj.u_path)
    v_path = np.array(traj.v_path)
    V_path = np.zeros_like(v_path)
    V_path[1:] = np.cumsum(0.5 * dt * (v_path[1:] + v_path[:-1]), axis=0)
    grid_t = dt * np.arange(u_path.shape[0])

    def at(path, times):
        out = np.empty((times.size, path.shape[1]))
        for k in range(path.shape[1]):
            out[:, k] = np.interp(times, grid_t, path[:, k])
        return out

    err_b = err_e = 0.0
    count = 0
    for U in traj.states:
        t = U.time
        n_t = int(round(t / dt))
        if U.backend == "sgrid":
            sb, se = params.kernel1.s_grid, params.kernel2.s_grid
            stored_b, stored_e = U.etabar.values, U.eta.values
        else:
            sb = dt * np.arange(U.etabar.window + 1)
            se = dt * np.arange(U.eta.window + 1)
            stored_b, stored_e = U.etabar.values_at(sb), U.eta.values_at(se)
        for s, stored, path, past, which in ((sb, stored_b, u_path, etabar_past, "b"),
                                              (se, stored_e, V_path, eta_past, "e")):
            sel = np.ones(s.size, bool) if s_max is None else s <= s_max
            s_sel = s[sel]
            expect = np.empty((s_sel.size, path.shape[1]))
            x_now = path[n_t]
            inside = s_sel < t
            if np.any(inside):
                expect[inside] = x_now - at(path, t - s_sel[inside])
            if np.any(~inside):
                expect[~inside] = past(s_sel[~inside] - t) + (x_now - path[0])
            e = float(np.max(np.abs(stored[sel] - expect))) if s_sel.size else 0.0
            if which == "b":
                err_b = max(err_b, e)
            else:
                err_e = max(err_e, e)
        count += 1
    return RepresentationReport(err_b, err_e, count)


# --------------------------------------------------------------------------
# linearized flow
# --------------------------------------------------------------------------

@dataclass
class LinearizedTrajectory:
    times: np.ndarray
    states: list
    norms: np.ndarray

    @property
    def final(self) -> PhaseState:
        return self.states[-1]

    def growth_exponent(self) -> float:
        """max_t log(|W(t)| / |W(0)|), the monitored a_{R,T}."""
        if self.norms[0] == 0:
            return 0.0
        with np.errstate(divide="ignore"):
            return float(np.max(np.log(self.norms / self.norms[0])))


def linearized_evolve(params: ModelParams, base: TrajectoryRecord, W0: PhaseState,
                      stride: int | None = None) -> LinearizedTrajectory:
    """Evolve a perturbation with the derivative of the discrete flow along ``base``.

    The base trajectory must be recorded with ``keep_path`` so that the
    displacement at every step and predictor stage is available.
    """
    if not base.has_path() or len(base.u_stage) != len(base.u_path) - 1:
        raise InvalidArgument("base trajectory lacks per-step samples (record with keep_path)")
    stride = base.stride if stride is None else stride
    dt = base.dt
    W = W0.snapshot()
    states, times, norms = [W.snapshot()], [W.time], [math.sqrt(phase_norm_sq(params.model, params, W))]
    n_steps = len(base.u_stage)
    for n in range(n_steps):
        W = tangent_step(params, W, dt, base.u_path[n], base.u_stage[n])
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            states.append(W.snapshot())
            times.append(W.time)
            norms.append(math.sqrt(phase_norm_sq(params.model, params, W)))
    return LinearizedTrajectory(np.array(times), states, np.array(norms))


def perturbed_initial_state(params: ModelParams, base: dict, direction: dict, eps: float, *,
                            backend: str = "buffer", dt: float | None = None) -> PhaseState:
    """initial_state of base + eps * direction; both dicts hold u0, w0, v0 and pasts."""
    n = params.model.mode_count

    def comb(key, default):
        a = base.get(key, default)
        b = direction.get(key, default)
        if isinstance(a, ExpPoly):
            return a.axpby(1.0, b, eps)
        return np.asarray(a, float) + eps * np.asarray(b, float)

    v0 = comb("v0", np.zeros(n))
    eta_b = base.get("eta_past", ExpPoly.linear(np.asarray(base.get("v0", np.zeros(n)), float)))
    eta_d = direction.get("eta_past",
                          ExpPoly.linear(np.asarray(direction.get("v0", np.zeros(n)), float)))
    return initial_state(params, comb("u0", np.zeros(n)), comb("w0", np.zeros(n)), v0,
                         backend=backend, dt=dt,
                         etabar_past=comb("etabar_past", ExpPoly.zero(n)),
                         eta_past=eta_b.axpby(1.0, eta_d, eps))


# --------------------------------------------------------------------------
# tails, Gronwall, reports
# --------------------------------------------------------------------------

@dataclass
class TailFit:
    slope: float
    intercept: float
    r_squared: float


def exponential_tail_fit(times, distances, window: tuple) -> TailFit:
    """Least-squares fit of log(distance) = slope t + intercept on [t0, t1]."""
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    sel = (t >= window[0]) & (t <= window[1]) & (d > 0)
    if np.count_nonzero(sel) < 3:
        return TailFit(math.nan, math.nan, math.nan)
    x, y = t[sel], np.log(d[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return TailFit(float(slope), float(intercept), r2)


@dataclass
class GronwallCheck:
    hypothesis_holds: bool
    constant: float
    conclusion_holds: bool
    worst_ratio: float


def gronwall_check(t, phi, phi1, phi2, c1: float, rtol: float = 1e-9) -> GronwallCheck:
    """Audit phi <= phi1 + c1 int_0^t phi2 phi  =>  phi <= C phi1.

    Requires phi1 nondecreasing and phi2 integrable; the constant used is
    C = exp(c1 int phi2) over the sampled range, trapezoid quadrature.
    """
    t, phi, phi1, phi2 = (np.asarray(x, dtype=float) for x in (t, phi, phi1, phi2))
    if np.any(np.diff(phi1) < -rtol * np.abs(phi1[1:])):
        raise InvalidArgument("phi1 must be nondecreasing")
    hyp_rhs = phi1 + c1 * _cumtrapz(phi2 * phi, t)
    hyp = bool(np.all(phi <= hyp_rhs * (1 + rtol)))
    C = math.exp(c1 * float(_cumtrapz(phi2, t)[-1]))
    ratio = float(np.max(phi / phi1))
    return GronwallCheck(hyp, C, bool(ratio <= C * (1 + rtol)), ratio)


def report_json(payload: dict) -> str:
    """Schema-versioned JSON text for analysis reports."""

    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.bool_):
            return bool(o)
        raise TypeError(type(o).__name__)

    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True,
                      default=default)
