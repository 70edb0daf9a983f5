"""Spectral Galerkin simulator for a thermoviscoelastic Berger plate with memory."""

__version__ = "0.1.0"

from .spectral import (InvalidArgument, SpectralModel, dirichlet_interval_spectrum,
                       dirichlet_rectangle_spectrum, fractional_inner, phase_norm_sq)
from .kernels import (BufferHistory, ExpPoly, MemoryKernel, SGridHistory, check_admissibility,
                      convolution_moment, history_norm_sq, kernel_mass,
                      transport_quadratic_form)
from .dynamics import (BergerNonlinearity, ConstantNonlinearity, ModelParams, PhaseState,
                       TabulatedNonlinearity, TrajectoryRecord, evolve, initial_state,
                       markovian_oracle_evolve, nonlinear_force, rhs, step)
from .equilibria import (EquilibriumSet, enumerate_berger_equilibria, solve_equilibria_general,
                         stationary_residual)
from .analysis import (energy_audit, linearized_evolve, lyapunov, representation_check,
                       stabilizability_fit, volterra_solve)
