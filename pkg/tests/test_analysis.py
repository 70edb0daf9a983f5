import json
import math

import numpy as np
import pytest

from bergerplate import (ConstantNonlinearity, ExpPoly, MemoryKernel, enumerate_berger_equilibria,
                         evolve, initial_state, phase_norm_sq)
from bergerplate.analysis import (HypothesisViolated, energy_audit, exponential_tail_fit,
                                  gronwall_check, linearized_evolve, lyapunov,
                                  perturbed_initial_state, report_json, representation_check,
                                  stabilizability_fit, volterra_solve)
from bergerplate.spectral import dirichlet_interval_spectrum

from conftest import make_params


def test_lyapunov_zero_state(berger3):
    assert lyapunov(berger3, initial_state(berger3, np.zeros(3), dt=0.01)) == 0.0


def test_lyapunov_berger_single_mode():
    p = make_params([1.0])
    U = initial_state(p, [2.0], dt=0.01)
    # 1/2 beta |Au|^2 = 2 and 1/2 * (m^2/2 - Gamma m) at m = 4 gives -6
    assert lyapunov(p, U) == pytest.approx(-4.0)


def test_lyapunov_load_term():
    p = make_params([1.0], nonlinearity=ConstantNonlinearity(0.0), load=[3.0])
    U = initial_state(p, [2.0], dt=0.01)
    assert lyapunov(p, U) == pytest.approx(2.0 - 6.0)


def test_energy_audit_stationary(berger3):
    u = enumerate_berger_equilibria(berger3).points[1]
    rec = evolve(berger3, initial_state(berger3, u, dt=0.01), 1.0, 0.01)
    audit = energy_audit(berger3, rec)
    assert np.max(np.abs(audit.cumulative_residual)) < 1e-12
    assert np.max(np.abs(audit.diss_v)) == 0.0
    assert audit.monotone


def test_energy_audit_linear_residual_small():
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    U0 = initial_state(p, [0.2, 0.1, 0.0], [0.5, 0.0, -0.2], [0.3, 0.1, 0.0], dt=0.005)
    rec = evolve(p, U0, 2.0, 0.005)
    audit = energy_audit(p, rec)
    assert np.max(np.abs(audit.cumulative_residual)) < 1e-4
    assert audit.monotone
    # the inequality accumulates at most one scheme defect per step
    assert audit.inequality_excess <= (len(rec.times) - 1) * audit.scheme_tolerance


def _pair(p, U1, U2, horizon=10.0, dt=0.01):
    return (evolve(p, U1, horizon, dt, stride=10), evolve(p, U2, horizon, dt, stride=10))


def test_stabilizability_identical_trajectories_degenerate(berger3):
    U = initial_state(berger3, [0.3, 0.0, 0.1], dt=0.01)
    rep = stabilizability_fit(berger3, [_pair(berger3, U, U, horizon=1.0)])
    assert rep.success and rep.degenerate


def test_stabilizability_history_only_difference():
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    u0, w0, v0 = [0.2, 0.0, 0.1], [0.1, 0.2, 0.0], [0.0, 0.1, 0.0]
    U1 = initial_state(p, u0, w0, v0, dt=0.01)
    U2 = initial_state(p, u0, w0, v0, dt=0.01, etabar_past=ExpPoly.saturating([0.3, 0.1, 0.0], 1.0))
    rep = stabilizability_fit(p, [_pair(p, U1, U2)])
    assert rep.pair_gammas[0] is not None and rep.pair_gammas[0] > 0
    assert rep.success and rep.min_slack >= 0


def test_stabilizability_ball_violation(berger3):
    U1 = initial_state(berger3, [0.3, 0.0, 0.1], dt=0.01)
    U2 = initial_state(berger3, [0.0, 0.0, 0.1], dt=0.01)
    with pytest.raises(HypothesisViolated):
        stabilizability_fit(berger3, [_pair(berger3, U1, U2, horizon=0.5)], radius=1e-3)


def test_volterra_zero_forcing():
    res = volterra_solve(MemoryKernel.single(1.0, 1.0), 1.0, np.zeros((50, 2)), 0.01)
    assert res.iterations == 1 and np.all(res.solution == 0)


def test_volterra_contraction_ratio():
    model = dirichlet_interval_spectrum(3)
    t = 0.01 * np.arange(1001)
    F = np.outer(1.0 + np.sin(t), [1.0, -0.5, 0.25]) / model.power(1.5)
    res = volterra_solve(MemoryKernel.single(1.0, 1.0), 1.0, F, 0.01, model=model)
    assert res.q == pytest.approx(0.5)
    assert max(res.ratios[1:]) <= 0.55
    assert res.residual < 1e-10


def test_volterra_matches_closed_form_resolvent():
    # w = c + (kappa + beta)^{-1} int_0^t a e^{-delta (t - y)} w(y) dy with constant c
    a, delta, beta, c = 1.0, 1.0, 1.0, 2.0
    kernel = MemoryKernel.single(a, delta)
    dt = 0.005
    t = dt * np.arange(2001)
    res = volterra_solve(kernel, beta, np.full(t.size, c), dt, iterations=200)
    gain = a / (kernel.mass() + beta)
    r = gain - delta
    integral = a * c * np.expm1(r * t) / r
    exact = c + integral / (kernel.mass() + beta)
    assert np.max(np.abs(res.solution - exact)) < 1e-5


@pytest.mark.parametrize("backend", ["buffer", "sgrid"])
def test_representation_exact_at_time_zero(backend):
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    past = ExpPoly.saturating([0.2, 0.1, 0.0], 2.0)
    dt = 0.01
    U0 = initial_state(p, [0.1, 0.0, 0.0], [0.4, 0.0, 0.0], backend=backend,
                       dt=dt if backend == "buffer" else None, etabar_past=past)
    rec = evolve(p, U0, 0.0, dt, keep_path=True, diagnostics=False)
    rep = representation_check(p, rec, past, ExpPoly.linear(np.zeros(3)))
    assert rep.max_error < 1e-14


def test_representation_buffer_exact():
    p = make_params(nonlinearity=ConstantNonlinearity(0.0))
    past = ExpPoly.saturating([0.2, 0.1, 0.0], 2.0)
    eta_past = ExpPoly.linear([0.1, 0.0, 0.3])
    U0 = initial_state(p, [0.1, 0.0, 0.0], [0.4, 0.0, 0.0], [0.1, 0.0, 0.3], dt=0.01,
                       etabar_past=past, eta_past=eta_past)
    rec = evolve(p, U0, 3.0, 0.01, stride=50, keep_path=True, diagnostics=False)
    assert representation_check(p, rec, past, eta_past).max_error <= 1e-12


def test_linearized_zero_perturbation(berger3):
    U0 = initial_state(berger3, [0.5, 0.1, 0.0], dt=0.01)
    base = evolve(berger3, U0, 1.0, 0.01, keep_path=True, diagnostics=False, stride=10)
    W0 = initial_state(berger3, np.zeros(3), dt=0.01)
    lin = linearized_evolve(berger3, base, W0)
    assert all(n == 0.0 for n in lin.norms)


def test_linearized_needs_path(berger3):
    U0 = initial_state(berger3, [0.5, 0.1, 0.0], dt=0.01)
    base = evolve(berger3, U0, 0.1, 0.01)
    with pytest.raises(ValueError):
        linearized_evolve(berger3, base, U0)


def test_linearization_predicts_small_perturbations(berger3):
    dt = 0.01
    base = {"u0": [0.5, 0.1, -0.05], "w0": [0.0, 0.3, 0.0]}
    direction = {"u0": [0.1, -0.2, 0.05], "v0": [0.2, 0.0, 0.1]}
    rb = evolve(berger3, perturbed_initial_state(berger3, base, direction, 0.0, dt=dt), 2.0, dt,
                stride=20, keep_path=True, diagnostics=False)
    lin = linearized_evolve(berger3, rb, perturbed_initial_state(berger3, {}, direction, 1.0, dt=dt))
    ratios = []
    for eps in (1e-2, 1e-3):
        re = evolve(berger3, perturbed_initial_state(berger3, base, direction, eps, dt=dt), 2.0,
                    dt, stride=20, diagnostics=False)
        ratios.append(max(math.sqrt(phase_norm_sq(berger3.model, berger3,
                                                  a - b - w.scaled(eps))) / eps ** 2
                          for a, b, w in zip(re.states, rb.states, lin.states)))
    assert 0.5 < ratios[0] / ratios[1] < 2.0


def test_gronwall_synthetic():
    t = np.linspace(0.0, 2.0, 2001)
    phi1 = np.full_like(t, 1.5)
    phi2 = 1.0 + np.cos(t) ** 2
    c1 = 0.7
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (phi2[1:] + phi2[:-1]))])
    phi = phi1 * np.exp(c1 * integral) * 0.999
    chk = gronwall_check(t, phi, phi1, phi2, c1, rtol=1e-6)
    assert chk.hypothesis_holds and chk.conclusion_holds
    assert chk.worst_ratio <= chk.constant


def test_gronwall_rejects_decreasing_phi1():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        gronwall_check(t, np.ones(11), np.linspace(2, 1, 11), np.ones(11), 1.0)


def test_tail_fit_recovers_rate():
    t = np.linspace(0, 10, 101)
    fit = exponential_tail_fit(t, 3.0 * np.exp(-0.4 * t), (5.0, 10.0))
    assert fit.slope == pytest.approx(-0.4) and fit.r_squared == pytest.approx(1.0)


def test_report_json_is_versioned():
    body = json.loads(report_json({"x": np.arange(3), "ok": np.bool_(True)}))
    assert body["schema_version"] >= 1 and body["x"] == [0, 1, 2] and body["ok"] is True
