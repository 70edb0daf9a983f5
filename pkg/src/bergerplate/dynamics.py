"""Galerkin-truncated plate/heat/memory system and its time stepper.

Per mode k (lambda = lambda_k, m = sum_j lambda_j u_j^2):

    u' = w
    w' = -beta lambda^2 u - lambda^2 int mu1 etabar + nu lambda v + p - M(m) lambda u
    v' = -omega lambda v - lambda int mu2 eta - nu lambda w
    etabar_t = -etabar_s + w,    eta_t = -eta_s + v

The stepper is a second-order exponential Runge-Kutta scheme (ETDRK2).  The
per-mode block in (u, w, v) with the instantaneous part kappa1 lambda^2 u of
the viscoelastic memory is propagated exactly; the remaining memory terms,
the load and the Berger force enter explicitly.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .kernels import (BufferHistory, ExpPoly, InvalidArgument, MemoryKernel, SGridHistory,
                      convolution_moment)
from .spectral import SpectralModel


class RejectedStep(RuntimeError):
    """The requested step violates the stability bound or produced non-finite values."""


class UnsupportedConfiguration(ValueError):
    pass


class SimulationAborted(RuntimeError):
    def __init__(self, message: str, record: "TrajectoryRecord"):
        super().__init__(message)
        self.record = record


# --------------------------------------------------------------------------
# nonlinearity
# --------------------------------------------------------------------------

class Nonlinearity:
    """M(z) with derivatives and antiderivative script-M(z) = int_0^z M."""

    kind = "abstract"

    def M(self, z):
        raise NotImplementedError

    def dM(self, z):
        raise NotImplementedError

    def d2M(self, z):
        raise NotImplementedError

    def antiderivative(self, z):
        raise NotImplementedError

    def witness(self, lambda1: float, beta: float = 1.0) -> tuple[float, float]:
        """(a, b) with script-M(z) >= -a z - b and 0 < a < lambda1."""
        a = 0.5 * lambda1 * min(1.0, beta)
        z = np.linspace(0.0, self.witness_range(lambda1), 2001)
        b = max(0.0, float(np.max(-self.antiderivative(z) - a * z)))
        return a, b

    def witness_range(self, lambda1: float) -> float:
        return 100.0 * lambda1

    def envelope(self, zmax: float) -> float:
        z = np.linspace(0.0, zmax, 257)
        return float(np.max(np.abs(self.M(z))))

    @property
    def is_constant(self) -> bool:
        return False

    def to_config(self) -> dict:
        raise NotImplementedError


class BergerNonlinearity(Nonlinearity):
    """M(z) = z - Gamma, script-M(z) = z^2/2 - Gamma z."""

    kind = "berger"

    def __init__(self, gamma: float):
        self.gamma = float(gamma)

    def M(self, z):
        return np.asarray(z, dtype=float) - self.gamma

    def dM(self, z):
        return np.ones_like(np.asarray(z, dtype=float))

    def d2M(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def antiderivative(self, z):
        z = np.asarray(z, dtype=float)
        return 0.5 * z * z - self.gamma * z

    def witness(self, lambda1, beta=1.0):
        a = 0.5 * lambda1 * min(1.0, beta)
        return a, 0.5 * max(0.0, self.gamma - a) ** 2

    def to_config(self):
        return {"kind": "berger", "gamma": self.gamma}


class ConstantNonlinearity(Nonlinearity):
    """M(z) = c; c = 0 switches the nonlinearity off."""

    kind = "constant"

    def __init__(self, c: float = 0.0):
        self.c = float(c)

    def M(self, z):
        return np.full_like(np.asarray(z, dtype=float), self.c)

    def dM(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    d2M = dM

    def antiderivative(self, z):
        return self.c * np.asarray(z, dtype=float)

    def witness(self, lambda1, beta=1.0):
        a = 0.5 * lambda1 * min(1.0, beta)
        if self.c < -a:
            a = 0.5 * (lambda1 * min(1.0, beta) - self.c)
        return a, 0.0

    @property
    def is_constant(self):
        return True

    def to_config(self):
        return {"kind": "constant", "c": self.c}


class TabulatedNonlinearity(Nonlinearity):
    """M given at nodes z_i >= 0 and interpolated by a C^2 cubic spline."""

    kind = "table"

    def __init__(self, z, values):
        z = np.asarray(z, dtype=float)
        values = np.asarray(values, dtype=float)
        if z.ndim != 1 or z.size < 4 or z[0] != 0.0 or np.any(np.diff(z) <= 0):
            raise InvalidArgument("table nodes must start at 0, increase, and number >= 4")
        if values.shape != z.shape:
            raise InvalidArgument("table values must match the nodes")
        self.z, self.values = z, values
        self._spline = CubicSpline(z, values, bc_type="natural")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self._anti = self._spline.antiderivative(1)

    def M(self, z):
        return self._spline(z)

    def dM(self, z):
        return self._d1(z)

    def d2M(self, z):
        return self._d2(z)

    def antiderivative(self, z):
        return self._anti(z)

    def witness_range(self, lambda1):
        return float(self.z[-1])

    def to_config(self):
        return {"kind": "table", "z": self.z.tolist(), "values": self.values.tolist()}


def nonlinearity_from_config(cfg: dict) -> Nonlinearity:
    kind = cfg.get("kind", "berger")
    if kind == "berger":
        return BergerNonlinearity(float(cfg["gamma"]))
    if kind == "constant":
        return ConstantNonlinearity(float(cfg.get("c", 0.0)))
    if kind == "table":
        return TabulatedNonlinearity(cfg["z"], cfg["values"])
    raise InvalidArgument(f"unknown nonlinearity kind {kind!r}")


def check_coercivity(nl: Nonlinearity, a: float, b: float, lambda1: float,
                     zmax: float, samples: int = 2001) -> bool:
    if not 0 < a < lambda1:
        return False
    z = np.linspace(0.0, zmax, samples)
    return bool(np.all(nl.antiderivative(z) + a * z + b >= -1e-12 * (1 + abs(b))))


# --------------------------------------------------------------------------
# parameters and state
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelParams:
    model: SpectralModel
    beta: float
    omega: float
    nu: float
    kernel1: MemoryKernel
    kernel2: MemoryKernel
    nonlinearity: Nonlinearity
    load: np.ndarray | None = None
    stability_factor: float = 0.5

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidArgument("beta must be positive")
        if not self.nu > 0:
            raise InvalidArgument("nu must be positive")
        if not 0 <= self.omega < 1:
            raise InvalidArgument("omega must lie in [0, 1)")
        load = np.zeros(self.model.mode_count) if self.load is None else self.model.vector(self.load)
        load = np.array(load, dtype=float)
        load.setflags(write=False)
        object.__setattr__(self, "load", load)
        a, b = self.nonlinearity.witness(self.model.lambda1, self.beta)
        zmax = self.nonlinearity.witness_range(self.model.lambda1)
        if not check_coercivity(self.nonlinearity, a, b, self.model.lambda1, zmax):
            raise InvalidArgument("nonlinearity fails the coercivity condition")

    @property
    def lam(self) -> np.ndarray:
        return self.model.eigenvalues

    @property
    def kappa1(self) -> float:
        return self.kernel1.mass()

    @property
    def kappa2(self) -> float:
        return self.kernel2.mass()

    def to_config(self) -> dict:
        return {"model": self.model.to_config(), "beta": self.beta, "omega": self.omega,
                "nu": self.nu, "kernel1": self.kernel1.to_config(),
                "kernel2": self.kernel2.to_config(),
                "nonlinearity": self.nonlinearity.to_config(),
                "load": [float(x) for x in self.load],
                "stability_factor": self.stability_factor}

    def digest(self) -> str:
        blob = json.dumps(self.to_config(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "ModelParams":
        fields = dict(model=self.model, beta=self.beta, omega=self.omega, nu=self.nu,
                      kernel1=self.kernel1, kernel2=self.kernel2,
                      nonlinearity=self.nonlinearity, load=self.load,
                      stability_factor=self.stability_factor)
        fields.update(changes)
        return ModelParams(**fields)


@dataclass(frozen=True, eq=False)
class PhaseState:
    """U = (u, w, v, etabar, eta) at ``time``."""

    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    etabar: SGridHistory | BufferHistory
    eta: SGridHistory | BufferHistory
    time: float = 0.0

    @property
    def backend(self) -> str:
        return self.etabar.backend

    def axpby(self, alpha: float, other: "PhaseState", beta: float) -> "PhaseState":
        return PhaseState(alpha * self.u + beta * other.u, alpha * self.w + beta * other.w,
                          alpha * self.v + beta * other.v,
                          self.etabar.axpby(alpha, other.etabar, beta),
                          self.eta.axpby(alpha, other.eta, beta), self.time)

    def __sub__(self, other: "PhaseState") -> "PhaseState":
        return self.axpby(1.0, other, -1.0)

    def __add__(self, other: "PhaseState") -> "PhaseState":
        return self.axpby(1.0, other, 1.0)

    def scaled(self, alpha: float) -> "PhaseState":
        return self.axpby(alpha, self, 0.0)

    def snapshot(self) -> "PhaseState":
        """Deep copy, independent of any buffer the simulation keeps writing."""
        return PhaseState(self.u.copy(), self.w.copy(), self.v.copy(), self.etabar.copy(),
                          self.eta.copy(), self.time)


def initial_state(params: ModelParams, u0, w0=None, v0=None, *, backend: str = "buffer",
                  dt: float | None = None, etabar_past: ExpPoly | None = None,
                  eta_past: ExpPoly | None = None) -> PhaseState:
    """Build U(0) from (u, w, v) and closed-form pasts.

    Defaults: constant past displacement (etabar_0 = 0) and constant past
    temperature (eta_0(s) = s v(0)).
    """
    model = params.model
    n = model.mode_count
    u0 = np.array(model.vector(u0), dtype=float)
    w0 = np.zeros(n) if w0 is None else np.array(model.vector(w0), dtype=float)
    v0 = np.zeros(n) if v0 is None else np.array(model.vector(v0), dtype=float)
    etabar_past = ExpPoly.zero(n) if etabar_past is None else etabar_past
    eta_past = ExpPoly.linear(v0) if eta_past is None else eta_past
    if etabar_past.size != n or eta_past.size != n:
        raise InvalidArgument("closed-form past has the wrong mode count")
    if backend == "buffer":
        if dt is None:
            raise InvalidArgument("the buffer backend needs the simulation step dt")
        etabar = BufferHistory.start(params.kernel1, dt, u0, etabar_past)
        eta = BufferHistory.start(params.kernel2, dt, np.zeros(n), eta_past)
    elif backend == "sgrid":
        etabar = SGridHistory.from_past(params.kernel1, etabar_past)
        eta = SGridHistory.from_past(params.kernel2, eta_past)
        etabar.check_origin(1e-14)
        eta.check_origin(1e-14)
    else:
        raise InvalidArgument(f"unknown history backend {backend!r}")
    return PhaseState(u0, w0, v0, etabar, eta, 0.0)


def check_conformance(params: ModelParams, U: PhaseState):
    n = params.model.mode_count
    for name in ("u", "w", "v"):
        params.model.vector(getattr(U, name))
    U.etabar.conform(params.kernel1, n)
    U.eta.conform(params.kernel2, n)
    if U.etabar.backend != U.eta.backend:
        raise InvalidArgument("history components use different backends")


# --------------------------------------------------------------------------
# right-hand side
# --------------------------------------------------------------------------

def stretch(params: ModelParams, u) -> float:
    """m = |A^{1/2} u|^2."""
    return float(np.sum(params.lam * u * u))


def nonlinear_force(params: ModelParams, u) -> np.ndarray:
    """p - M(|A^{1/2}u|^2) A u."""
    u = params.model.vector(u)
    m = stretch(params, u)
    return params.load - float(params.nonlinearity.M(m)) * params.lam * u


def nonlinear_force_derivative(params: ModelParams, u, du) -> np.ndarray:
    """Derivative of :func:`nonlinear_force` at u in direction du."""
    lam = params.lam
    m = stretch(params, u)
    nl = params.nonlinearity
    dm = 2.0 * float(np.sum(lam * u * du))
    return -float(nl.dM(m)) * dm * lam * u - float(nl.M(m)) * lam * du


def _moments(params: ModelParams, U: PhaseState):
    m1 = convolution_moment(params.model, params.kernel1, U.etabar)
    m2 = convolution_moment(params.model, params.kernel2, U.eta)
    return m1, m2


@dataclass
class Tangent:
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    etabar: np.ndarray
    eta: np.ndarray


def rhs(params: ModelParams, U: PhaseState) -> Tangent:
    """Time derivative of U.

    For the s-grid backend the history components are -eta_s + source at the
    nodes; for the buffer backend they are the rates of the buffered primary
    fields (w for u, v for the running temperature integral).
    """
    check_conformance(params, U)
    lam = params.lam
    m1, m2 = _moments(params, U)
    du = U.w.copy()
    dw = (-params.beta * lam ** 2 * U.u - lam ** 2 * m1 + params.nu * lam * U.v
          + nonlinear_force(params, U.u))
    dv = -params.omega * lam * U.v - lam * m2 - params.nu * lam * U.w
    if U.backend == "sgrid":
        detabar = U.etabar.formal_derivative(params.kernel1, U.w)
        deta = U.eta.formal_derivative(params.kernel2, U.v)
    else:
        detabar, deta = U.w.copy(), U.v.copy()
    return Tangent(du, dw, dv, detabar, deta)


# --------------------------------------------------------------------------
# time stepping
# --------------------------------------------------------------------------

def local_block(params: ModelParams) -> np.ndarray:
    """Per-mode 3x3 matrices acting on (u, w, v), shape (N, 3, 3)."""
    lam = params.lam
    n = lam.size
    L = np.zeros((n, 3, 3))
    L[:, 0, 1] = 1.0
    L[:, 1, 0] = -(params.beta + params.kappa1) * lam ** 2
    L[:, 1, 2] = params.nu * lam
    L[:, 2, 1] = -params.nu * lam
    L[:, 2, 2] = -params.omega * lam
    return L


@lru_cache(maxsize=32)
def propagators(params: ModelParams, dt: float):
    """(exp(dt L), phi1(dt L), phi2(dt L)) per mode."""
    L = local_block(params)
    n = L.shape[0]
    E, P1, P2 = (np.empty((n, 3, 3)) for _ in range(3))
    big = np.zeros((9, 9))
    for k in range(n):
        big[:] = 0.0
        big[0:3, 0:3] = dt * L[k]
        big[0:3, 3:6] = np.eye(3)
        big[3:6, 6:9] = np.eye(3)
        X = expm(big)
        E[k], P1[k], P2[k] = X[0:3, 0:3], X[0:3, 3:6], X[0:3, 6:9]
    for a in (E, P1, P2):
        a.setflags(write=False)
    return E, P1, P2


def _apply(mats, y):
    return np.einsum("kij,kj->ki", mats, y)


def max_stable_step(params: ModelParams, U: PhaseState) -> float:
    """Explicit-term bound c_stab / (lambda_N |M(m)|) (and the s-grid CFL bound)."""
    lam_max = float(params.lam[-1])
    env = abs(float(params.nonlinearity.M(stretch(params, U.u))))
    bound = math.inf if env == 0 else params.stability_factor / (lam_max * env)
    if U.backend == "sgrid":
        bound = min(bound, float(np.min(np.diff(params.kernel1.s_grid))),
                    float(np.min(np.diff(params.kernel2.s_grid))))
    return bound


class _Stage:
    __slots__ = ("y", "m1", "m2")

    def __init__(self, y, m1, m2):
        self.y, self.m1, self.m2 = y, m1, m2


def _explicit_part(params: ModelParams, st: _Stage, force: np.ndarray) -> np.ndarray:
    lam = params.lam
    g = np.zeros_like(st.y)
    g[:, 1] = lam ** 2 * (params.kappa1 * st.y[:, 0] - st.m1) + force
    g[:, 2] = -lam * st.m2
    return g


def _advance(params: ModelParams, U: PhaseState, dt: float,
             force: Callable[[np.ndarray, int], np.ndarray]):
    """One ETDRK2 step; returns (new state, predictor-stage u).

    ``force(u, stage)`` is the explicit non-memory forcing of the w-equation.
    """
    E, P1, P2 = propagators(params, dt)
    y0 = np.stack([U.u, U.w, U.v], axis=1)
    k1, k2 = params.kernel1, params.kernel2
    sgrid = U.backend == "sgrid"
    if sgrid:
        m1 = convolution_moment(params.model, k1, U.etabar)
        m2 = convolution_moment(params.model, k2, U.eta)
    else:
        m1 = U.etabar.integrals(k1, want_quad=False)[0]
        m2 = U.eta.integrals(k2, want_quad=False)[0]
    g0 = _explicit_part(params, _Stage(y0, m1, m2), force(y0[:, 0], 0))
    ya = _apply(E, y0) + dt * _apply(P1, g0)

    def histories(y):
        du = y[:, 0] - y0[:, 0]
        dV = 0.5 * dt * (y0[:, 2] + y[:, 2])
        if sgrid:
            return (U.etabar.transported(k1, dt, du), U.eta.transported(k2, dt, dV))
        return None, U.eta.latest + dV

    if sgrid:
        hb, he = histories(ya)
        ma1 = hb.integrals(k1)[0]
        ma2 = he.integrals(k2)[0]
    else:
        _, Va = histories(ya)
        ma1 = U.etabar.integrals(k1, x_new=ya[:, 0], want_quad=False)[0]
        ma2 = U.eta.integrals(k2, x_new=Va, want_quad=False)[0]
    ga = _explicit_part(params, _Stage(ya, ma1, ma2), force(ya[:, 0], 1))
    y1 = ya + dt * _apply(P2, ga - g0)
    if not np.all(np.isfinite(y1)):
        raise RejectedStep(f"non-finite state after step at t = {U.time:.6g}")
    if sgrid:
        etabar, eta = histories(y1)
    else:
        _, V1 = histories(y1)
        etabar = U.etabar.pushed(y1[:, 0])
        eta = U.eta.pushed(V1)
    new = PhaseState(y1[:, 0].copy(), y1[:, 1].copy(), y1[:, 2].copy(), etabar, eta,
                     U.time + dt)
    return new, ya[:, 0].copy()


def _check_step(params: ModelParams, U: PhaseState, dt: float):
    if not dt > 0:
        raise RejectedStep("dt must be positive")
    if U.backend == "buffer" and abs(U.etabar.dt - dt) > 1e-15 * dt:
        raise RejectedStep(f"buffer spacing {U.etabar.dt} differs from dt = {dt}")
    bound = max_stable_step(params, U)
    if dt > bound * (1 + 1e-12):
        raise RejectedStep(f"dt = {dt:g} exceeds the stability bound {bound:.4g}")


def step(params: ModelParams, U: PhaseState, dt: float) -> PhaseState:
    """Advance U by one step of size dt."""
    _check_step(params, U, dt)
    new, _ = _advance(params, U, dt, lambda u, _: nonlinear_force(params, u))
    return new


def tangent_step(params: ModelParams, W: PhaseState, dt: float, base_u: np.ndarray,
                 base_stage_u: np.ndarray) -> PhaseState:
    """Derivative of :func:`step` at the base point applied to W."""
    stages = (base_u, base_stage_u)
    return _advance(params, W, dt,
                    lambda du, i: nonlinear_force_derivative(params, stages[i], du))[0]


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

DIAGNOSTIC_CHANNELS = ("phi", "norm_sq", "diss_v", "diss_etabar", "diss_eta",
                       "hist_etabar", "hist_eta", "a32_u")


@dataclass
class TrajectoryRecord:
    dt: float
    stride: int
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=lambda: {c: [] for c in DIAGNOSTIC_CHANNELS})
    u_path: list = field(default_factory=list)
    v_path: list = field(default_factory=list)
    u_stage: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> PhaseState:
        return self.states[-1]

    def channel(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name], dtype=float)

    def time_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def has_path(self) -> bool:
        return len(self.u_path) > 0


def evolve(params: ModelParams, U0: PhaseState, horizon: float, dt: float,
           observers: Sequence[Callable] = (), stride: int = 1, keep_path: bool = False,
           diagnostics: bool = True, keep_states: bool = True,
           meta: dict | None = None) -> TrajectoryRecord:
    """Integrate from U0 over [0, horizon] with fixed step dt.

    Samples every ``stride`` steps (plus the final state): diagnostics are
    always recorded, full state snapshots only with ``keep_states`` (the
    final state is always kept).  ``keep_path`` stores u, v and the
    predictor-stage u at every step, which the linearized flow and the
    representation checks require.
    """
    from .analysis import state_diagnostics

    if horizon < 0:
        raise InvalidArgument("horizon must be nonnegative")
    check_conformance(params, U0)
    n_steps = int(round(horizon / dt)) if horizon > 0 else 0
    if n_steps and abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise InvalidArgument("horizon must be an integer multiple of dt")
    if stride < 1:
        raise InvalidArgument("stride must be >= 1")
    rec = TrajectoryRecord(dt=dt, stride=stride)
    rec.meta = {"params_digest": params.digest(), "dt": dt, "stride": stride,
                "horizon": horizon, "backend": U0.backend, **(meta or {})}

    def sample(U, last=False):
        rec.times.append(U.time)
        if keep_states or last:
            rec.states.append(U.snapshot())
        diag = state_diagnostics(params, U) if diagnostics else {}
        for c in DIAGNOSTIC_CHANNELS:
            rec.diagnostics[c].append(diag.get(c, math.nan))
        for obs in observers:
            obs(U, diag)

    U = U0.snapshot()
    sample(U, last=n_steps == 0)
    if keep_path:
        rec.u_path.append(U.u.copy())
        rec.v_path.append(U.v.copy())
    force = lambda u, _: nonlinear_force(params, u)  # noqa: E731
    for n in range(1, n_steps + 1):
        try:
            _check_step(params, U, dt)
            U, stage_u = _advance(params, U, dt, force)
        except RejectedStep as exc:
            rec.meta["aborted"] = str(exc)
            if not keep_states:
                rec.states.append(U.snapshot())
            raise SimulationAborted(str(exc), rec) from exc
        if keep_path:
            rec.u_path.append(U.u.copy())
            rec.v_path.append(U.v.copy())
            rec.u_stage.append(stage_u)
        if n % stride == 0 or n == n_steps:
            sample(U, last=n == n_steps)
    return rec


# --------------------------------------------------------------------------
# Markovian reference for single-exponential kernels
# --------------------------------------------------------------------------

@dataclass
class OracleTrajectory:
    times: np.ndarray
    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray


def markovian_oracle_evolve(params: ModelParams, u0, w0, v0, etabar_past: ExpPoly | None,
                            eta_past: ExpPoly | None, horizon: float, dt_ref: float,
                            sample_every: int = 1) -> OracleTrajectory:
    """Reference (u, w, v) for kernels mu_i = a_i exp(-delta_i s).

    With xi = int mu1 etabar and zeta = int mu2 eta, integrating by parts
    (etabar(0) = eta(0) = 0, mu_i' = -delta_i mu_i) closes the memory:

        xi'   = -delta1 xi   + kappa1 w
        zeta' = -delta2 zeta + kappa2 v

    The resulting 5N system is propagated exactly when M is constant and
    by classical RK4 with step dt_ref otherwise.
    """
    k1, k2 = params.kernel1, params.kernel2
    if not (k1.is_single_term and k2.is_single_term):
        raise UnsupportedConfiguration("the Markovian reference needs single-term kernels")
    model = params.model
    n = model.mode_count
    lam = params.lam
    u0 = model.vector(u0)
    w0 = np.zeros(n) if w0 is None else model.vector(w0)
    v0 = np.zeros(n) if v0 is None else model.vector(v0)
    etabar_past = ExpPoly.zero(n) if etabar_past is None else etabar_past
    eta_past = ExpPoly.linear(v0) if eta_past is None else eta_past
    xi0 = k1.shifted_laplace(etabar_past, 0.0)
    zeta0 = k2.shifted_laplace(eta_past, 0.0)
    y = np.stack([u0, w0, v0, xi0, zeta0], axis=1).astype(float)
    n_steps = int(round(horizon / dt_ref))

    B = _oracle_blocks(params)

    out = [y.copy()]
    if params.nonlinearity.is_constant:
        c = float(params.nonlinearity.M(0.0))
        aug = np.zeros((n, 6, 6))
        aug[:, :5, :5] = B
        aug[:, 1, 0] -= c * lam
        aug[:, 1, 5] = params.load
        prop = np.stack([expm(dt_ref * aug[k]) for k in range(n)])
        z = np.concatenate([y, np.ones((n, 1))], axis=1)
        for i in range(1, n_steps + 1):
            z = np.einsum("kij,kj->ki", prop, z)
            if i % sample_every == 0:
                out.append(z[:, :5].copy())
    else:
        def f(y):
            dy = np.einsum("kij,kj->ki", B, y)
            dy[:, 1] += nonlinear_force(params, y[:, 0])
            return dy
        h = dt_ref
        for i in range(1, n_steps + 1):
            s1 = f(y)
            s2 = f(y + 0.5 * h * s1)
            s3 = f(y + 0.5 * h * s2)
            s4 = f(y + h * s3)
            y = y + h / 6.0 * (s1 + 2 * s2 + 2 * s3 + s4)
            if i % sample_every == 0:
                out.append(y.copy())
    arr = np.array(out)
    times = dt_ref * sample_every * np.arange(arr.shape[0])
    return OracleTrajectory(times, arr[:, :, 0], arr[:, :, 1], arr[:, :, 2], arr[:, :, 3],
                            arr[:, :, 4])


def _oracle_blocks(params: ModelParams) -> np.ndarray:
    """Per-mode 5x5 matrices on (u, w, v, xi, zeta) without the force term."""
    lam = params.lam
    B = np.zeros((lam.size, 5, 5))
    B[:, 0, 1] = 1.0
    B[:, 1, 0] = -params.beta * lam ** 2
    B[:, 1, 3] = -lam ** 2
    B[:, 1, 2] = params.nu * lam
    B[:, 2, 1] = -params.nu * lam
    B[:, 2, 2] = -params.omega * lam
    B[:, 2, 4] = -lam
    B[:, 3, 3] = -params.kernel1.rates[0]
    B[:, 3, 1] = params.kappa1
    B[:, 4, 4] = -params.kernel2.rates[0]
    B[:, 4, 2] = params.kappa2
    return B


def oracle_system_matrix(params: ModelParams, k: int) -> np.ndarray:
    """The closed 5x5 linear system of mode k when M = 0."""
    return _oracle_blocks(params)[k]
