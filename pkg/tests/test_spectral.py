import numpy as np
import pytest

from bergerplate import (ConstantNonlinearity, InvalidArgument, SpectralModel, ExpPoly,
                         dirichlet_interval_spectrum, dirichlet_rectangle_spectrum,
                         fractional_inner, initial_state, phase_norm_sq)
from bergerplate.spectral import fractional_norm_sq

from conftest import make_params


@pytest.mark.parametrize("args, expected", [
    ((1, 1, np.pi, np.pi), [2.0]),
    ((2, 1, np.pi, np.pi), [2.0, 5.0]),
    ((2, 2, np.pi, np.pi), [2.0, 5.0, 5.0, 8.0]),
])
def test_rectangle_spectrum_examples(args, expected):
    assert np.allclose(dirichlet_rectangle_spectrum(*args).eigenvalues, expected)


def test_rectangle_spectrum_general_sides():
    lam = dirichlet_rectangle_spectrum(3, 2, 2.0, 1.0).eigenvalues
    j, k = np.meshgrid(np.arange(1, 4), np.arange(1, 3), indexing="ij")
    ref = np.sort(((j * np.pi / 2.0) ** 2 + (k * np.pi) ** 2).ravel())
    assert np.allclose(lam, ref)
    assert np.all(np.diff(lam) >= 0)


@pytest.mark.parametrize("args", [(0, 1, 1.0, 1.0), (1, 0, 1.0, 1.0), (1, 1, -1.0, 1.0),
                                  (1, 1, 1.0, 0.0)])
def test_rectangle_rejects_bad_dimensions(args):
    with pytest.raises(InvalidArgument):
        dirichlet_rectangle_spectrum(*args)


def test_interval_spectrum_is_squares():
    assert np.allclose(dirichlet_interval_spectrum(4).eigenvalues, [1, 4, 9, 16])


def test_model_rejects_nonpositive_or_unsorted():
    with pytest.raises(InvalidArgument):
        SpectralModel(np.array([0.0, 1.0]))
    with pytest.raises(InvalidArgument):
        SpectralModel(np.array([2.0, 1.0]))


@pytest.mark.parametrize("lam, x, y, s, expected", [
    ([1, 4], [1, 0], [1, 0], 1.0, 1.0),
    ([1, 4], [1, 1], [1, 1], 0.5, 5.0),
    ([2, 5], [1, 2], [3, -1], 0.0, 1.0),
])
def test_fractional_inner_examples(lam, x, y, s, expected):
    model = SpectralModel(np.array(lam, dtype=float))
    assert fractional_inner(model, x, y, s) == pytest.approx(expected)


def test_fractional_inner_length_mismatch():
    model = SpectralModel(np.array([1.0, 4.0]))
    with pytest.raises(InvalidArgument):
        fractional_inner(model, [1.0], [1.0, 2.0], 1.0)


def test_phase_norm_zero_state(berger3):
    U = initial_state(berger3, np.zeros(3), dt=0.01)
    assert phase_norm_sq(berger3.model, berger3, U) == 0.0


def test_phase_norm_single_mode():
    p = make_params([1.0], nonlinearity=ConstantNonlinearity(0.0))
    U = initial_state(p, [1.0], dt=0.01)
    assert phase_norm_sq(p.model, p, U) == pytest.approx(1.0)


@pytest.mark.parametrize("backend", ["buffer", "sgrid"])
def test_phase_norm_weighted_sum(backend):
    p = make_params([1.0, 4.0], beta=2.0, nonlinearity=ConstantNonlinearity(0.0))
    U = initial_state(p, [1.0, 1.0], [3.0, 0.0], [0.0, 0.0], backend=backend,
                      dt=0.01 if backend == "buffer" else None)
    assert phase_norm_sq(p.model, p, U) == pytest.approx(43.0)


def test_phase_norm_includes_histories():
    p = make_params([1.0], nonlinearity=ConstantNonlinearity(0.0))
    # etabar_0(s) = s contributes lambda^2 * int e^{-s} s^2 = 2
    U = initial_state(p, [0.0], dt=0.01, etabar_past=ExpPoly.linear([1.0]))
    assert phase_norm_sq(p.model, p, U) == pytest.approx(2.0)


def test_fractional_norm_matches_inner():
    model = dirichlet_interval_spectrum(3)
    x = np.array([1.0, -2.0, 0.5])
    assert fractional_norm_sq(model, x, 0.75) == pytest.approx(fractional_inner(model, x, x, 0.75))
