import numpy as np
import pytest

from bergerplate import (ConstantNonlinearity, ExpPoly, InvalidArgument, MemoryKernel, evolve,
                         enumerate_berger_equilibria, initial_state, markovian_oracle_evolve,
                         nonlinear_force, rhs, step)
from bergerplate.analysis import lyapunov
from bergerplate.dynamics import (RejectedStep, SimulationAborted, UnsupportedConfiguration,
                                  max_stable_step, nonlinear_force_derivative)

from conftest import make_params


def test_force_at_zero_is_load():
    p = make_params(load=[1.0, -2.0, 0.5])
    assert np.allclose(nonlinear_force(p, np.zeros(3)), [1.0, -2.0, 0.5])


def test_force_berger_single_mode():
    p = make_params([1.0])
    assert nonlinear_force(p, np.array([2.0]))[0] == pytest.approx(2.0)


def test_force_balances_plate_term_at_equilibria(berger3):
    for u in enumerate_berger_equilibria(berger3).points:
        assert np.allclose(nonlinear_force(berger3, u), berger3.beta * berger3.lam ** 2 * u,
                           atol=1e-10)


def test_force_derivative_matches_finite_difference(berger3):
    rng = np.random.default_rng(1)
    u, du = rng.standard_normal(3), rng.standard_normal(3)
    h = 1e-6
    fd = (nonlinear_force(berger3, u + h * du) - nonlinear_force(berger3, u - h * du)) / (2 * h)
    assert np.allclose(nonlinear_force_derivative(berger3, u, du), fd, rtol=1e-7, atol=1e-8)


def test_rhs_single_mode_example():
    p = make_params([1.0], omega=0.0, nonlinearity=ConstantNonlinearity(0.0))
    U = initial_state(p, [0.0], [1.0], [0.0], backend="sgrid")
    d = rhs(p, U)
    assert d.u[0] == 1.0 and d.w[0] == 0.0 and d.v[0] == -1.0
    assert np.allclose(d.etabar, 1.0)
    assert np.allclose(d.eta, 0.0)


@pytest.mark.parametrize("backend", ["buffer", "sgrid"])
def test_equilibrium_is_fixed(berger3, backend):
    dt = 0.005
    for u in enumerate_berger_equilibria(berger3).points:
        U = initial_state(berger3, u, backend=backend, dt=dt if backend == "buffer" else None)
        d = rhs(berger3, U)
        assert max(np.max(np.abs(x)) for x in (d.u, d.w, d.v, d.etabar, d.eta)) < 1e-10
        V = step(berger3, U, dt)
        assert np.allclose(V.u, u, atol=1e-12) and np.allclose(V.w, 0.0, atol=1e-12)


def test_step_rejects_unstable_dt(berger3):
    U = initial_state(berger3, np.array([3.0, 1.0, 0.5]), dt=1.0)
    assert max_stable_step(berger3, U) < 1.0
    with pytest.raises(RejectedStep):
        step(berger3, U, 1.0)


def test_local_error_against_oracle():
    p = make_params(n=2, nonlinearity=ConstantNonlinearity(0.0))
    u0, w0, v0 = np.array([0.3, -0.1]), np.array([0.2, 0.4]), np.array([-0.5, 0.1])
    past = ExpPoly.saturating([0.1, -0.2], 1.3)
    errs = []
    for dt in (0.02, 0.01, 0.005):
        U = initial_state(p, u0, w0, v0, dt=dt, etabar_past=past)
        V = step(p, U, dt)
        ref = markovian_oracle_evolve(p, u0, w0, v0, past, None, dt, dt)
        errs.append(np.max(np.abs(V.u - ref.u[-1])) + np.max(np.abs(V.w - ref.w[-1]))
                    + np.max(np.abs(V.v - ref.v[-1])))
    # one step of a second-order scheme: local error O(dt^3)
    assert errs[0] / errs[1] > 6 and errs[1] / errs[2] > 6


def test_horizon_zero_keeps_initial_state(berger3):
    U0 = initial_state(berger3, np.array([0.1, 0.0, 0.0]), dt=0.01)
    rec = evolve(berger3, U0, 0.0, 0.01)
    assert rec.times == [0.0] and len(rec.states) == 1
    assert np.array_equal(rec.final.u, U0.u)


def test_linear_dissipative_phi_decreases():
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    rng = np.random.default_rng(7)
    U0 = initial_state(p, rng.standard_normal(3) / 4, rng.standard_normal(3),
                       rng.standard_normal(3), dt=0.01)
    rec = evolve(p, U0, 3.0, 0.01)
    assert np.all(np.diff(rec.channel("phi")) < 0)
    assert rec.channel("phi")[0] == pytest.approx(lyapunov(p, U0))


def test_semigroup_is_exact(berger3):
    U0 = initial_state(berger3, np.array([0.5, -0.2, 0.1]), [0.1, 0.0, 0.3], dt=0.01)
    whole = evolve(berger3, U0, 2.0, 0.01).final
    half = evolve(berger3, U0, 1.0, 0.01).final
    again = evolve(berger3, half, 1.0, 0.01).final
    for name in ("u", "w", "v"):
        assert np.array_equal(getattr(whole, name), getattr(again, name))
    assert np.array_equal(whole.etabar.recent(), again.etabar.recent())


def test_observers_and_stride(berger3):
    seen = []
    U0 = initial_state(berger3, np.array([0.5, 0.0, 0.0]), dt=0.01)
    rec = evolve(berger3, U0, 0.1, 0.01, observers=[lambda U, d: seen.append(U.time)], stride=3)
    assert seen == pytest.approx([0.0, 0.03, 0.06, 0.09, 0.1])
    assert len(rec.states) == len(seen)


def test_abort_keeps_partial_record():
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    U0 = initial_state(p, np.array([1.0, 0.0, 0.0]), dt=0.6)
    with pytest.raises(SimulationAborted) as info:
        evolve(make_params(), U0, 1.2, 0.6)
    assert len(info.value.record.states) >= 1


def test_evolve_rejects_bad_horizon(berger3):
    U0 = initial_state(berger3, np.zeros(3), dt=0.01)
    with pytest.raises(InvalidArgument):
        evolve(berger3, U0, -1.0, 0.01)
    with pytest.raises(InvalidArgument):
        evolve(berger3, U0, 0.015, 0.01)


def test_oracle_zero_data_stays_zero():
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    ref = markovian_oracle_evolve(p, np.zeros(3), None, None, None, None, 1.0, 0.01)
    assert np.all(ref.u == 0) and np.all(ref.w == 0) and np.all(ref.v == 0)


def test_oracle_rejects_multi_term_kernel():
    p = make_params(kernel1=MemoryKernel((1.0, 1.0), (1.0, 2.0)),
                    nonlinearity=ConstantNonlinearity(0.0))
    with pytest.raises(UnsupportedConfiguration):
        markovian_oracle_evolve(p, np.zeros(3), None, None, None, None, 1.0, 0.01)


def test_initial_state_conformance(berger3):
    with pytest.raises(InvalidArgument):
        initial_state(berger3, np.zeros(2), dt=0.01)
    with pytest.raises(InvalidArgument):
        initial_state(berger3, np.zeros(3))  # buffer backend needs dt
    with pytest.raises(InvalidArgument):
        initial_state(berger3, np.zeros(3), backend="other")


def test_params_validation():
    with pytest.raises(InvalidArgument):
        make_params(beta=0.0)
    with pytest.raises(InvalidArgument):
        make_params(omega=1.0)
    p = make_params()
    assert p.replace(beta=2.0).digest() != p.digest()
    assert p.replace().digest() == p.digest()
