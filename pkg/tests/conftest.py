import numpy as np
import pytest

from bergerplate import (BergerNonlinearity, ConstantNonlinearity, MemoryKernel, ModelParams,
                         SpectralModel, dirichlet_interval_spectrum)


def make_params(eigenvalues=None, n=3, beta=1.0, omega=0.5, nu=1.0, nonlinearity=None,
                kernel1=None, kernel2=None, load=None):
    model = (dirichlet_interval_spectrum(n) if eigenvalues is None
             else SpectralModel(np.asarray(eigenvalues, dtype=float)))
    return ModelParams(model, beta, omega, nu,
                       kernel1 or MemoryKernel.single(1.0, 1.0),
                       kernel2 or MemoryKernel.single(1.0, 1.0),
                       nonlinearity or BergerNonlinearity(5.0), load=load)


@pytest.fixture
def berger3():
    return make_params()


@pytest.fixture
def linear3():
    return make_params(nonlinearity=ConstantNonlinearity(0.0))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
