"""Prony memory kernels, weighted history spaces and convolution quadrature.

A kernel is mu(s) = sum_j a_j exp(-delta_j s).  History fields (the summed
past of u or of the temperature) live in L^2_mu(R_+; F_e) and come in two
layouts:

* :class:`SGridHistory` stores eta(s_m) on a nonuniform s-grid and is
  transported by first-order upwinding.
* :class:`BufferHistory` stores past samples X(t - j dt) of the primary
  field (u, or the running integral of v) and reconstructs
  eta^t(s) = X(t) - X(t - s); beyond the recorded past it falls back on a
  closed-form initial history.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .spectral import InvalidArgument, SpectralModel


class DomainViolation(ValueError):
    """A history field does not vanish at s = 0."""


# --------------------------------------------------------------------------
# closed-form histories
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExpPoly:
    """Per-mode function f(r) = sum_i c_i r^k_i exp(-a_i r), c_i in R^N."""

    terms: tuple = ()
    size: int = 0

    @classmethod
    def zero(cls, n: int) -> "ExpPoly":
        return cls((), n)

    @classmethod
    def linear(cls, slope) -> "ExpPoly":
        slope = np.asarray(slope, dtype=float)
        return cls(((1, 0.0, slope),), slope.size)

    @classmethod
    def saturating(cls, amplitude, rate: float) -> "ExpPoly":
        """amplitude * (1 - exp(-rate r))."""
        amp = np.asarray(amplitude, dtype=float)
        if not rate > 0:
            raise InvalidArgument("saturation rate must be positive")
        return cls(((0, 0.0, amp), (0, float(rate), -amp)), amp.size)

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        _check_size(self, other)
        return ExpPoly(self.terms + other.terms, self.size).simplified()

    def scaled(self, factor: float) -> "ExpPoly":
        return ExpPoly(tuple((k, a, factor * c) for k, a, c in self.terms), self.size)

    def axpby(self, alpha: float, other: "ExpPoly", beta: float) -> "ExpPoly":
        return self.scaled(alpha) + other.scaled(beta)

    def plus_constant(self, const) -> "ExpPoly":
        const = np.asarray(const, dtype=float)
        return self + ExpPoly(((0, 0.0, const),), self.size)

    def times(self, other: "ExpPoly") -> "ExpPoly":
        """Mode-wise product."""
        _check_size(self, other)
        out = [(k1 + k2, a1 + a2, c1 * c2)
               for k1, a1, c1 in self.terms for k2, a2, c2 in other.terms]
        return ExpPoly(tuple(out), self.size).simplified()

    def simplified(self) -> "ExpPoly":
        merged: dict = {}
        for k, a, c in self.terms:
            key = (int(k), float(a))
            merged[key] = merged[key] + c if key in merged else np.array(c, dtype=float)
        return ExpPoly(tuple((k, a, c) for (k, a), c in sorted(merged.items())), self.size)

    def __call__(self, r) -> np.ndarray:
        """Values at the points r, shape (len(r), N)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros((r.size, self.size))
        for k, a, c in self.terms:
            out += np.outer(r ** k * np.exp(-a * r), c)
        return out

    def laplace(self, p: float) -> np.ndarray:
        """int_0^inf exp(-p r) f(r) dr for p > 0."""
        out = np.zeros(self.size)
        for k, a, c in self.terms:
            out += c * math.factorial(k) / (p + a) ** (k + 1)
        return out

    def at_origin(self) -> np.ndarray:
        out = np.zeros(self.size)
        for k, _, c in self.terms:
            if k == 0:
                out += c
        return out

    def to_config(self) -> list:
        return [[int(k), float(a), [float(x) for x in c]] for k, a, c in self.terms]

    @classmethod
    def from_config(cls, data, size: int) -> "ExpPoly":
        terms = tuple((int(k), float(a), np.asarray(c, dtype=float)) for k, a, c in data)
        return cls(terms, size)


def _check_size(f: ExpPoly, g: ExpPoly):
    if f.size != g.size:
        raise InvalidArgument("closed-form histories have different mode counts")


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Linear start of ``n_linear`` cells of width ``h0``, then geometric growth."""

    h0: float = 0.02
    n_linear: int = 25
    ratio: float = 1.06
    max_nodes: int = 256


@dataclass(frozen=True, eq=False)
class MemoryKernel:
    """mu(s) = sum_j weights[j] * exp(-rates[j] * s)."""

    weights: tuple
    rates: tuple
    tail_tolerance: float = 1e-10
    s_grid: np.ndarray | None = None
    grid_spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        a = tuple(float(x) for x in np.atleast_1d(self.weights))
        d = tuple(float(x) for x in np.atleast_1d(self.rates))
        if len(a) == 0 or len(a) != len(d):
            raise InvalidArgument("kernel needs matching, nonempty weight and rate lists")
        if any(not (x > 0 and math.isfinite(x)) for x in a):
            raise InvalidArgument("kernel weights a_j must be positive")
        if any(not (x > 0 and math.isfinite(x)) for x in d):
            raise InvalidArgument("kernel rates delta_j must be positive")
        if not 0 < self.tail_tolerance < 1:
            raise InvalidArgument("tail_tolerance must lie in (0, 1)")
        object.__setattr__(self, "weights", a)
        object.__setattr__(self, "rates", d)
        grid = self.s_grid
        if grid is None:
            grid = make_s_grid(self.cutoff(), self.grid_spec)
        grid = np.array(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise InvalidArgument("s_grid must start at 0 and be strictly increasing")
        if self(grid[-1])[0] > self.tail_tolerance * self(0.0)[0] * (1 + 1e-9):
            raise InvalidArgument("s_grid ends before mu has decayed to tail_tolerance")
        grid.setflags(write=False)
        object.__setattr__(self, "s_grid", grid)

    @classmethod
    def single(cls, a: float, delta: float, **kw) -> "MemoryKernel":
        return cls((a,), (delta,), **kw)

    def with_grid(self, grid) -> "MemoryKernel":
        return MemoryKernel(self.weights, self.rates, self.tail_tolerance, grid, self.grid_spec)

    @property
    def is_single_term(self) -> bool:
        return len(self.weights) == 1

    @property
    def decay_rate(self) -> float:
        """Largest delta with mu' + delta mu <= 0, i.e. min_j delta_j."""
        return min(self.rates)

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return sum(a * np.exp(-d * s) for a, d in zip(self.weights, self.rates))

    def derivative(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return sum(-a * d * np.exp(-d * s) for a, d in zip(self.weights, self.rates))

    def mass(self) -> float:
        return kernel_mass(self)

    def tail_mass(self, s: float) -> float:
        """int_s^inf mu."""
        return float(sum(a / d * math.exp(-d * s) for a, d in zip(self.weights, self.rates)))

    def cutoff(self) -> float:
        """Point s_M where mu(s_M) = tail_tolerance * mu(0)."""
        cached = self.__dict__.get("_cutoff")
        if cached is None:
            target = self.tail_tolerance * float(self(0.0)[0])
            hi = math.log(1.0 / self.tail_tolerance) / self.decay_rate
            cached = brentq(lambda s: float(self(s)[0]) - target, 0.0,
                            hi * 1.000001 + 1e-12, xtol=1e-14)
            object.__setattr__(self, "_cutoff", cached)
        return cached

    def shifted_laplace(self, f: ExpPoly, t: float, derivative: bool = False) -> np.ndarray:
        """int_t^inf rho(s) f(s - t) ds with rho = mu (or mu')."""
        out = np.zeros(f.size)
        for a, d in zip(self.weights, self.rates):
            coef = -a * d if derivative else a
            out += coef * math.exp(-d * t) * f.laplace(d)
        return out

    def to_config(self) -> dict:
        return {"terms": [[a, d] for a, d in zip(self.weights, self.rates)],
                "tail_tolerance": self.tail_tolerance,
                "s_grid": [float(x) for x in self.s_grid]}


def make_s_grid(cutoff: float, spec: GridSpec = GridSpec()) -> np.ndarray:
    nodes = [spec.h0 * m for m in range(spec.n_linear + 1)]
    step = spec.h0
    while nodes[-1] < cutoff:
        step *= spec.ratio
        nodes.append(nodes[-1] + step)
        if len(nodes) > spec.max_nodes:
            raise InvalidArgument(
                f"s-grid needs more than {spec.max_nodes} nodes to reach s = {cutoff:.3g}")
    return np.array(nodes)


def uniform_s_grid(cutoff: float, n_cells: int) -> np.ndarray:
    return np.linspace(0.0, cutoff, n_cells + 1)


def refine_grid(grid) -> np.ndarray:
    """Insert the midpoint of every cell."""
    grid = np.asarray(grid, dtype=float)
    out = np.empty(2 * grid.size - 1)
    out[0::2] = grid
    out[1::2] = 0.5 * (grid[:-1] + grid[1:])
    return out


def trapezoid_weights(grid) -> np.ndarray:
    h = np.diff(grid)
    w = np.zeros(grid.size)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def prony_kernel_from_relaxation(terms, scale: float = 1.0, **kw) -> MemoryKernel:
    """mu = -scale * k' for k(s) = k(inf) + sum_j b_j exp(-delta_j s).

    Use ``scale = 1 - omega`` for the thermal kernel.
    """
    b = [float(t[0]) for t in terms]
    d = [float(t[1]) for t in terms]
    if not scale > 0:
        raise InvalidArgument("relaxation scale must be positive")
    return MemoryKernel(tuple(scale * bj * dj for bj, dj in zip(b, d)), tuple(d), **kw)


@dataclass
class AdmissibilityReport:
    passed: bool
    worst_violation: float
    worst_at: float
    mass: float
    detail: str = ""

    def __bool__(self):
        return self.passed


def check_admissibility(kernel: MemoryKernel, delta: float, samples: int = 4001) -> AdmissibilityReport:
    """Check mu >= 0, mu' + delta mu <= 0 and integrability on a dense grid."""
    s = np.linspace(0.0, 2.0 * kernel.cutoff(), samples)
    mu = kernel(s)
    excess = kernel.derivative(s) + delta * mu
    scale = float(mu[0])
    i = int(np.argmax(excess))
    worst = float(excess[i])
    neg = float(mu.min())
    ok_sign = neg >= 0
    ok_decay = worst <= 1e-13 * scale
    mass = kernel_mass(kernel)
    ok_mass = math.isfinite(mass)
    detail = []
    if not ok_sign:
        detail.append(f"mu negative ({neg:.3g})")
    if not ok_decay:
        detail.append(f"mu' + {delta:g} mu = {worst:.3g} > 0 at s = {s[i]:.4g}")
    return AdmissibilityReport(ok_sign and ok_decay and ok_mass, worst, float(s[i]), mass,
                               "; ".join(detail))


def kernel_mass(kernel: MemoryKernel) -> float:
    """kappa = int_0^inf mu = sum_j a_j / delta_j."""
    return float(sum(a / d for a, d in zip(kernel.weights, kernel.rates)))


# --------------------------------------------------------------------------
# history fields
# --------------------------------------------------------------------------

class SGridHistory:
    """eta(s_m) per mode on the kernel's s-grid, shape (M + 1, N)."""

    backend = "sgrid"

    def __init__(self, values):
        self.values = np.array(values, dtype=float)

    @classmethod
    def from_past(cls, kernel: MemoryKernel, past: ExpPoly) -> "SGridHistory":
        return cls(past(kernel.s_grid))

    @classmethod
    def zeros(cls, kernel: MemoryKernel, n: int) -> "SGridHistory":
        return cls(np.zeros((kernel.s_grid.size, n)))

    @property
    def mode_count(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "SGridHistory":
        return SGridHistory(self.values.copy())

    def axpby(self, alpha: float, other: "SGridHistory", beta: float) -> "SGridHistory":
        return SGridHistory(alpha * self.values + beta * other.values)

    def conform(self, kernel: MemoryKernel, n: int):
        if self.values.shape != (kernel.s_grid.size, n):
            raise InvalidArgument(
                f"s-grid history has shape {self.values.shape}, "
                f"expected {(kernel.s_grid.size, n)}")

    def check_origin(self, atol: float = 0.0):
        if np.max(np.abs(self.values[0])) > atol:
            raise DomainViolation("history does not vanish at s = 0")

    def integrals(self, kernel: MemoryKernel, derivative: bool = False):
        """(int rho eta, int rho eta^2) per mode, rho = mu or mu'."""
        grid = kernel.s_grid
        rho = kernel.derivative(grid) if derivative else kernel(grid)
        wq = trapezoid_weights(grid) * rho
        last = self.values[-1]
        tail = -float(kernel(grid[-1])[0]) if derivative else kernel.tail_mass(grid[-1])
        lin = wq @ self.values + tail * last
        quad = wq @ self.values ** 2 + tail * last ** 2
        return lin, quad

    def values_at(self, s) -> np.ndarray:
        raise NotImplementedError  # grid backend is compared node-wise

    def transported(self, kernel: MemoryKernel, dt: float, increment) -> "SGridHistory":
        """One explicit upwind step of eta_t = -eta_s + source.

        ``increment`` is the source integrated over the step, so the
        inflow node stays at zero and a constant source is carried exactly.
        """
        grid = kernel.s_grid
        courant = dt / np.diff(grid)
        old = self.values
        new = old.copy()
        new[1:] -= courant[:, None] * (old[1:] - old[:-1])
        new[1:] += increment
        new[0] = 0.0
        return SGridHistory(new)

    def formal_derivative(self, kernel: MemoryKernel, source) -> np.ndarray:
        """-eta_s + source at the nodes (one-sided differences)."""
        grid = kernel.s_grid
        d = np.empty_like(self.values)
        d[1:] = (self.values[1:] - self.values[:-1]) / np.diff(grid)[:, None]
        d[0] = (self.values[1] - self.values[0]) / (grid[1] - grid[0])
        return -d + source


class StaleHistory(RuntimeError):
    """A buffer view was used after its ring advanced past it."""


class _Ring:
    """Shared storage of length 2 * cap; ``head`` is the newest sample index."""

    __slots__ = ("data", "head")

    def __init__(self, data, head):
        self.data = data
        self.head = head


class BufferHistory:
    """Ring buffer of X(t - j dt), j = 0..J, plus the closed-form initial past.

    eta^t(s) = X(t) - X(t - s)                      for s < t,
    eta^t(s) = past(s - t) + X(t) - X(0)            for s >= t.

    Sample n sits at positions n % cap and n % cap + cap, so the last cap
    samples are always one contiguous slice.  cap = J + 2: pushing onto a
    view leaves its predecessor readable (single writer), anything older
    must be snapshotted with :meth:`copy` first.
    """

    backend = "buffer"

    def __init__(self, ring: _Ring, count: int, dt: float, past: ExpPoly, origin):
        self._ring = ring
        self.count = int(count)
        self.dt = float(dt)
        self.past = past
        self.origin = np.asarray(origin, dtype=float)

    @classmethod
    def start(cls, kernel: MemoryKernel, dt: float, x0, past: ExpPoly) -> "BufferHistory":
        if not dt > 0:
            raise InvalidArgument("buffer spacing must be positive")
        x0 = np.asarray(x0, dtype=float)
        if np.max(np.abs(past.at_origin()), initial=0.0) > 1e-14:
            raise DomainViolation("closed-form past does not vanish at s = 0")
        cap = window_steps(kernel, dt) + 2
        data = np.zeros((2 * cap, x0.size))
        data[0] = x0
        data[cap] = x0
        return cls(_Ring(data, 0), 0, dt, past, x0.copy())

    @property
    def data(self) -> np.ndarray:
        self._check_live()
        return self._ring.data

    @property
    def capacity(self) -> int:
        return self._ring.data.shape[0] // 2

    @property
    def window(self) -> int:
        return self.capacity - 2

    @property
    def mode_count(self) -> int:
        return self._ring.data.shape[1]

    @property
    def time(self) -> float:
        return self.count * self.dt

    def _check_live(self):
        if not 0 <= self._ring.head - self.count <= 1:
            raise StaleHistory("buffer view is stale; snapshot states with copy() before stepping on")

    @property
    def latest(self) -> np.ndarray:
        self._check_live()
        return self._ring.data[self.count % self.capacity]

    def recent(self) -> np.ndarray:
        """Valid samples newest first: X_n, X_{n-1}, ..., shape (min(n, J) + 1, N)."""
        self._check_live()
        cap = self.capacity
        pos = self.count % cap
        window = self._ring.data[pos + 1:pos + cap + 1][::-1]
        return window[:min(self.count, self.window) + 1]

    def copy(self) -> "BufferHistory":
        self._check_live()
        return BufferHistory(_Ring(self._ring.data.copy(), self.count), self.count, self.dt,
                             self.past, self.origin.copy())

    def pushed(self, x_new) -> "BufferHistory":
        self._check_live()
        ring = self._ring if self._ring.head == self.count else self.copy()._ring
        count = self.count + 1
        cap = self.capacity
        pos = count % cap
        ring.data[pos] = x_new
        ring.data[pos + cap] = x_new
        ring.head = count
        return BufferHistory(ring, count, self.dt, self.past, self.origin)

    def axpby(self, alpha: float, other: "BufferHistory", beta: float) -> "BufferHistory":
        if (self.count, self.dt, self.capacity) != (other.count, other.dt, other.capacity):
            raise InvalidArgument("buffers are not aligned")
        data = alpha * self.data + beta * other.data
        return BufferHistory(_Ring(data, self.count), self.count, self.dt,
                             self.past.axpby(alpha, other.past, beta),
                             alpha * self.origin + beta * other.origin)

    def conform(self, kernel: MemoryKernel, n: int):
        if self.mode_count != n or self.window != window_steps(kernel, self.dt):
            raise InvalidArgument("buffer history does not conform to kernel/model")

    def check_origin(self, atol: float = 0.0):
        if np.max(np.abs(self.past.at_origin()), initial=0.0) > max(atol, 1e-14):
            raise DomainViolation("closed-form past does not vanish at s = 0")

    def differences(self, x_new=None) -> np.ndarray:
        """eta at s_j = j dt for j = 0..min(n, J), newest first."""
        rec = self.recent()
        if x_new is None:
            return rec[0] - rec
        x_new = np.asarray(x_new, dtype=float)
        # samples as they would read after pushing x_new
        out = np.empty((min(rec.shape[0] + 1, self.window + 1), rec.shape[1]))
        out[0] = 0.0
        np.subtract(x_new, rec[:out.shape[0] - 1], out=out[1:])
        return out

    def integrals(self, kernel: MemoryKernel, derivative: bool = False, x_new=None,
                  want_quad: bool = True):
        """(int rho eta, int rho eta^2) per mode, rho = mu or mu'.

        Trapezoid on the buffered window; the part s >= t is integrated in
        closed form while t is inside the window and dropped (below the
        kernel's tail tolerance) afterwards.  ``x_new`` evaluates the
        field as if x_new had been pushed, without mutating the buffer.
        """
        count = self.count + (0 if x_new is None else 1)
        diffs = self.differences(x_new)
        jmax = diffs.shape[0] - 1
        rho = _buffer_weights(kernel, self.dt, derivative)
        w = rho[:jmax + 1].copy()
        w[0] *= 0.5
        w[jmax] *= 0.5
        if jmax == 0:
            w[0] = 0.0
        lin = w @ diffs
        quad = w @ diffs ** 2 if want_quad else None
        if count <= self.window:
            t = count * self.dt
            x_now = self.latest if x_new is None else x_new
            shifted = self.past.plus_constant(x_now - self.origin)
            lin = lin + kernel.shifted_laplace(shifted, t, derivative)
            if want_quad:
                quad = quad + kernel.shifted_laplace(shifted.times(shifted), t, derivative)
        return lin, quad

    def values_at(self, s) -> np.ndarray:
        """eta^t at arbitrary s >= 0, shape (len(s), N)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = self.time
        rec = self.recent()
        x_now = rec[0]
        out = np.empty((s.size, self.mode_count))
        inside = s < t
        if np.any(inside):
            jpos = s[inside] / self.dt
            if np.any(jpos > rec.shape[0] - 1):
                raise InvalidArgument("requested s lies beyond the buffered window")
            j0 = np.floor(jpos).astype(int)
            j1 = np.minimum(j0 + 1, rec.shape[0] - 1)
            frac = (jpos - j0)[:, None]
            past_x = (1 - frac) * rec[j0] + frac * rec[j1]
            out[inside] = x_now - past_x
        if np.any(~inside):
            out[~inside] = self.past(s[~inside] - t) + (x_now - self.origin)
        return out


def window_steps(kernel: MemoryKernel, dt: float) -> int:
    return int(math.ceil(kernel.cutoff() / dt - 1e-9))


@lru_cache(maxsize=64)
def _buffer_weights_cached(weights: tuple, rates: tuple, dt: float, n: int, derivative: bool):
    s = dt * np.arange(n)
    if derivative:
        rho = sum(-a * d * np.exp(-d * s) for a, d in zip(weights, rates))
    else:
        rho = sum(a * np.exp(-d * s) for a, d in zip(weights, rates))
    rho = dt * rho
    rho.setflags(write=False)
    return rho


def _buffer_weights(kernel: MemoryKernel, dt: float, derivative: bool) -> np.ndarray:
    n = window_steps(kernel, dt) + 1
    return _buffer_weights_cached(kernel.weights, kernel.rates, float(dt), n, derivative)


# --------------------------------------------------------------------------
# operations on history fields
# --------------------------------------------------------------------------

def _conform(model: SpectralModel, kernel: MemoryKernel, eta):
    eta.conform(kernel, model.mode_count)


def history_norm_sq(model: SpectralModel, kernel: MemoryKernel, eta, s_exponent: float) -> float:
    """int_0^inf mu(s) |eta(s)|^2_{s_exponent} ds."""
    _conform(model, kernel, eta)
    _, quad = eta.integrals(kernel)
    return float(np.sum(model.power(2.0 * s_exponent) * quad))


def transport_quadratic_form(model: SpectralModel, kernel: MemoryKernel, eta,
                             s_exponent: float) -> float:
    """(T eta, eta) = 1/2 int mu'(s) |eta(s)|^2 ds, valid for eta(0) = 0."""
    _conform(model, kernel, eta)
    eta.check_origin()
    _, quad = eta.integrals(kernel, derivative=True)
    return 0.5 * float(np.sum(model.power(2.0 * s_exponent) * quad))


def convolution_moment(model: SpectralModel, kernel: MemoryKernel, eta) -> np.ndarray:
    """Per-mode int_0^inf mu(s) eta_k(s) ds."""
    _conform(model, kernel, eta)
    lin, _ = eta.integrals(kernel)
    return lin
