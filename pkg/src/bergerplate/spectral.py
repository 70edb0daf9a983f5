"""Spectral representation of the positive operator A and the scale of spaces F_s.

Every field in the package is stored by its coefficients against the
orthonormal eigenbasis {e_k} of A, so A^s acts diagonally as lambda_k^s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .dynamics import ModelParams, PhaseState

MODE_CAP = 4096


class InvalidArgument(ValueError):
    """Input does not conform to the model or violates a precondition."""


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Truncated spectrum lambda_1 <= ... <= lambda_N of A."""

    eigenvalues: np.ndarray
    domain_tag: str = "abstract"
    shape: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).ravel()
        if lam.size < 1:
            raise InvalidArgument("a spectral model needs at least one mode")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise InvalidArgument("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(lam) < 0):
            raise InvalidArgument("eigenvalues must be nondecreasing")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    def __eq__(self, other):
        if not isinstance(other, SpectralModel):
            return NotImplemented
        return np.array_equal(self.eigenvalues, other.eigenvalues)

    def __hash__(self):
        return hash(self.eigenvalues.tobytes())

    @property
    def mode_count(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def power(self, s: float) -> np.ndarray:
        """Diagonal of A^s."""
        return self.eigenvalues ** s

    def vector(self, coefficients) -> np.ndarray:
        """Validate and return a coefficient vector conforming to this model."""
        x = np.asarray(coefficients, dtype=float)
        if x.shape != (self.mode_count,):
            raise InvalidArgument(
                f"expected {self.mode_count} coefficients, got shape {x.shape}")
        return x

    def basis(self, k: int) -> np.ndarray:
        e = np.zeros(self.mode_count)
        e[k] = 1.0
        return e

    def to_config(self) -> dict:
        if self.shape is not None:
            nx, ny, lx, ly = self.shape
            return {"kind": "rectangle", "nx": nx, "ny": ny, "lx": lx, "ly": ly}
        return {"kind": "list", "eigenvalues": [float(x) for x in self.eigenvalues]}

    @classmethod
    def from_config(cls, cfg: dict) -> "SpectralModel":
        kind = cfg.get("kind", "list")
        if kind == "rectangle":
            return dirichlet_rectangle_spectrum(
                int(cfg["nx"]), int(cfg["ny"]), float(cfg["lx"]), float(cfg["ly"]))
        if kind == "dirichlet1d":
            n, length = int(cfg["n"]), float(cfg.get("length", np.pi))
            return dirichlet_interval_spectrum(n, length)
        if kind == "list":
            return cls(np.asarray(cfg["eigenvalues"], dtype=float))
        raise InvalidArgument(f"unknown spectrum kind {kind!r}")


def dirichlet_rectangle_spectrum(nx: int, ny: int, Lx: float, Ly: float,
                                 mode_cap: int = MODE_CAP) -> SpectralModel:
    """Eigenvalues of -Laplace with Dirichlet conditions on [0, Lx] x [0, Ly].

    Returns the ``nx * ny`` values (j pi/Lx)^2 + (k pi/Ly)^2 sorted
    nondecreasing; equal values keep their (j, k) lexicographic order.
    """
    if nx < 1 or ny < 1:
        raise InvalidArgument("nx and ny must be positive")
    if not (Lx > 0 and Ly > 0):
        raise InvalidArgument("rectangle side lengths must be positive")
    if nx * ny > mode_cap:
        raise InvalidArgument(f"nx*ny = {nx * ny} exceeds the mode cap {mode_cap}")
    j = np.arange(1, nx + 1)[:, None]
    k = np.arange(1, ny + 1)[None, :]
    lam = ((j * np.pi / Lx) ** 2 + (k * np.pi / Ly) ** 2).ravel()
    # stable sort keeps lexicographic (j, k) order among ties
    lam = lam[np.argsort(lam, kind="stable")]
    return SpectralModel(lam, domain_tag="dirichlet-rectangle", shape=(nx, ny, Lx, Ly))


def dirichlet_interval_spectrum(n: int, length: float = np.pi) -> SpectralModel:
    """lambda_k = (k pi / length)^2, k = 1..n; {k^2} for the default length."""
    if n < 1 or not length > 0:
        raise InvalidArgument("need n >= 1 and positive length")
    lam = (np.arange(1, n + 1) * np.pi / length) ** 2
    return SpectralModel(lam, domain_tag="dirichlet-interval")


def fractional_inner(model: SpectralModel, x, y, s: float) -> float:
    """(x, y)_s = sum_k lambda_k^(2s) x_k y_k."""
    x = model.vector(x)
    y = model.vector(y)
    return float(np.sum(model.power(2.0 * s) * x * y))


def fractional_norm_sq(model: SpectralModel, x, s: float) -> float:
    return fractional_inner(model, x, x, s)


def phase_norm_sq(model: SpectralModel, params: "ModelParams", U: "PhaseState") -> float:
    """Squared norm of U = (u, w, v, etabar, eta) in the renormed phase space.

    beta |Au|^2 + |w|^2 + |v|^2 + |etabar|^2_{mu1, F_1} + |eta|^2_{mu2, F_1/2}.
    """
    from .kernels import history_norm_sq

    if model != params.model:
        raise InvalidArgument("state and parameters refer to different spectral models")
    total = params.beta * fractional_norm_sq(model, U.u, 1.0)
    total += fractional_norm_sq(model, U.w, 0.0)
    total += fractional_norm_sq(model, U.v, 0.0)
    total += history_norm_sq(model, params.kernel1, U.etabar, 1.0)
    total += history_norm_sq(model, params.kernel2, U.eta, 0.5)
    return float(total)
