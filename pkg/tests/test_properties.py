import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bergerplate import (BergerNonlinearity, BufferHistory, ExpPoly, MemoryKernel, SpectralModel,
                         dirichlet_rectangle_spectrum, enumerate_berger_equilibria,
                         fractional_inner, history_norm_sq, initial_state, phase_norm_sq,
                         solve_equilibria_general, stationary_residual,
                         transport_quadratic_form)
from bergerplate.analysis import volterra_solve

from conftest import make_params

finite = st.floats(-10, 10, allow_nan=False)
rates = st.floats(0.2, 5.0)
weights = st.floats(0.1, 5.0)


@st.composite
def spectra(draw, max_modes=5):
    n = draw(st.integers(1, max_modes))
    lam = np.sort(np.array(draw(st.lists(st.floats(0.5, 50.0), min_size=n, max_size=n))))
    return SpectralModel(lam)


@st.composite
def kernels(draw):
    n = draw(st.integers(1, 3))
    return MemoryKernel(tuple(draw(st.lists(weights, min_size=n, max_size=n))),
                        tuple(draw(st.lists(rates, min_size=n, max_size=n))))


@st.composite
def pasts(draw, n):
    """Random closed-form fields vanishing at s = 0."""
    amp = np.array(draw(st.lists(finite, min_size=n, max_size=n)))
    slope = np.array(draw(st.lists(finite, min_size=n, max_size=n)))
    return ExpPoly.saturating(amp, draw(rates)) + ExpPoly(((1, draw(rates), slope),), n)


@given(spectra(), st.data(), st.floats(-1, 2))
def test_fractional_inner_symmetric_and_bilinear(model, data, s):
    n = model.mode_count
    vec = arrays(float, n, elements=finite)
    x, y, z = data.draw(vec), data.draw(vec), data.draw(vec)
    a = data.draw(finite)
    assert np.isclose(fractional_inner(model, x, y, s), fractional_inner(model, y, x, s))
    lhs = fractional_inner(model, a * x + z, y, s)
    rhs = a * fractional_inner(model, x, y, s) + fractional_inner(model, z, y, s)
    assert np.isclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + abs(lhs)) * model.eigenvalues[-1] ** 4)
    assert fractional_inner(model, x, x, s) >= 0


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.5, 4), st.floats(0.5, 4))
def test_rectangle_spectrum_sorted_and_complete(nx, ny, lx, ly):
    lam = dirichlet_rectangle_spectrum(nx, ny, lx, ly).eigenvalues
    assert lam.size == nx * ny and np.all(np.diff(lam) >= 0)
    assert np.isclose(lam[0], (np.pi / lx) ** 2 + (np.pi / ly) ** 2)


@settings(deadline=None, max_examples=60)
@given(kernels(), st.data(), st.floats(0.0, 1.0))
def test_transport_dissipation_inequality(kernel, data, s_exp):
    model = SpectralModel(np.array([1.0, 3.0]))
    eta = BufferHistory.start(kernel, 0.05, np.zeros(2), data.draw(pasts(2)))
    q = transport_quadratic_form(model, kernel, eta, s_exp)
    norm = history_norm_sq(model, kernel, eta, s_exp)
    assert q <= -0.5 * kernel.decay_rate * norm + 1e-10 * (1 + norm)


@given(kernels())
def test_kernel_mass_is_integral(kernel):
    f = ExpPoly(((0, 0.0, np.ones(1)),), 1)
    assert np.isclose(kernel.shifted_laplace(f, 0.0)[0], kernel.mass())


@settings(deadline=None, max_examples=40)
@given(st.data(), st.floats(0.1, 10))
def test_phase_norm_is_quadratic(data, c):
    p = make_params(n=3)
    vec = arrays(float, 3, elements=st.floats(-3, 3))
    U = initial_state(p, data.draw(vec), data.draw(vec), data.draw(vec), dt=0.05,
                      etabar_past=data.draw(pasts(3)))
    base = phase_norm_sq(p.model, p, U)
    assert base >= 0
    assert np.isclose(phase_norm_sq(p.model, p, U.scaled(c)), c * c * base, rtol=1e-9)


@settings(deadline=None, max_examples=25)
@given(st.floats(0.3, 30.0), st.floats(0.3, 3.0), st.integers(1, 4))
def test_berger_equilibria_are_stationary_and_complete(gamma, beta, n):
    p = make_params(n=n, beta=beta, nonlinearity=BergerNonlinearity(gamma))
    eq = enumerate_berger_equilibria(p)
    assert len(eq) == 1 + 2 * int(np.sum(beta * p.lam < gamma))
    assert all(stationary_residual(p, q) < 1e-10 for q in eq.points)
    general = solve_equilibria_general(p)
    assert len(general) == len(eq)


@settings(deadline=None, max_examples=30)
@given(weights, rates, st.floats(0.1, 5.0), st.data())
def test_picard_ratio_bounded_by_discrete_gain(a, delta, beta, data):
    kernel = MemoryKernel.single(a, delta)
    dt = 0.02
    F = np.array(data.draw(st.lists(finite, min_size=101, max_size=101)))
    res = volterra_solve(kernel, beta, F, dt, iterations=30)
    gain = (kernel.mass() + 0.5 * dt * a) / (kernel.mass() + beta)
    assert all(r <= gain * (1 + 1e-9) for r in res.ratios)
