import numpy as np
import pytest

from bergerplate import (BergerNonlinearity, ConstantNonlinearity, InvalidArgument,
                         TabulatedNonlinearity, enumerate_berger_equilibria, initial_state,
                         solve_equilibria_general, stationary_residual)
from bergerplate.dynamics import UnsupportedConfiguration
from bergerplate.equilibria import distance_to_set, radius_bound

from conftest import make_params


def test_residual_zero_at_origin(berger3):
    assert stationary_residual(berger3, np.zeros(3)) == 0.0


def test_residual_per_mode_formula(berger3):
    # beta lambda^2 u + M(m) lambda u with m = lambda u^2
    assert stationary_residual(berger3, [1.0, 0.0, 0.0]) == pytest.approx(abs(1 + (1 - 5) * 1))
    assert stationary_residual(berger3, [2.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-14)
    assert stationary_residual(berger3, [0.0, 1.0, 0.0]) == pytest.approx(abs(16 + (4 - 5) * 4))


def test_berger_enumeration_n3(berger3):
    eq = enumerate_berger_equilibria(berger3)
    assert len(eq) == 5
    pts = {tuple(np.round(q, 12)) for q in eq.points}
    expect = {(0.0, 0.0, 0.0), (2.0, 0.0, 0.0), (-2.0, 0.0, 0.0),
              (0.0, 0.5, 0.0), (0.0, -0.5, 0.0)}
    assert pts == expect
    assert max(eq.residuals) < 1e-12


def test_enumeration_needs_berger_form():
    with pytest.raises(UnsupportedConfiguration):
        enumerate_berger_equilibria(make_params(nonlinearity=ConstantNonlinearity(0.0)))
    with pytest.raises(UnsupportedConfiguration):
        enumerate_berger_equilibria(make_params(load=[1.0, 0.0, 0.0]))


@pytest.mark.parametrize("n", [3, 8])
def test_general_solver_reproduces_enumeration(n):
    p = make_params(n=n)
    explicit = enumerate_berger_equilibria(p)
    general = solve_equilibria_general(p)
    assert len(general) == len(explicit)
    for q in explicit.points:
        _, d = general.nearest(q)
        assert d < 1e-10


def test_general_solver_constant_nonlinearity_with_load():
    p = make_params([1.0], nonlinearity=ConstantNonlinearity(1.0), load=[2.0])
    eq = solve_equilibria_general(p)
    assert len(eq) == 1
    assert eq.points[0] == pytest.approx([1.0])


def test_general_solver_large_load_nonempty():
    p = make_params(load=[50.0, -40.0, 30.0])
    eq = solve_equilibria_general(p)
    assert len(eq) >= 1
    assert max(eq.residuals) < 1e-10
    bound = radius_bound(p)
    assert all(np.linalg.norm(p.lam * q) <= bound * (1 + 1e-9) for q in eq.points)


def test_general_solver_tabulated_nonlinearity():
    z = np.linspace(0.0, 20.0, 41)
    p = make_params(nonlinearity=TabulatedNonlinearity(z, z - 5.0))
    eq = solve_equilibria_general(p)
    assert len(eq) == 5


def test_small_gamma_has_only_origin():
    p = make_params(n=3, nonlinearity=BergerNonlinearity(1.0))
    assert len(enumerate_berger_equilibria(p)) == 1
    assert len(solve_equilibria_general(p)) == 1


def test_bad_scan_range(berger3):
    with pytest.raises(InvalidArgument):
        solve_equilibria_general(berger3, scan_range=(2.0, 1.0))


def test_distance_to_set(berger3):
    eq = enumerate_berger_equilibria(berger3)
    U = initial_state(berger3, [2.0, 0.0, 0.0], dt=0.01)
    idx, d = distance_to_set(berger3, U, eq)
    assert d == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(eq.points[idx], [2.0, 0.0, 0.0])
    U = initial_state(berger3, [2.0, 0.0, 0.0], [0.3, 0.0, 0.4], dt=0.01)
    _, d = distance_to_set(berger3, U, eq)
    assert d >= 0.5  # w and v alone contribute 0.5


def test_csv_export(tmp_path, berger3):
    eq = enumerate_berger_equilibria(berger3)
    eq.to_csv(tmp_path / "eq.csv")
    lines = (tmp_path / "eq.csv").read_text().splitlines()
    assert len(lines) == 1 + len(eq)
