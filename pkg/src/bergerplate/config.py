"""Run configuration: INI text with typed sections plus environment overrides.

Every key can be overridden from the environment as
``BERGERPLATE_<SECTION>__<KEY>`` (for example ``BERGERPLATE_NONLINEARITY__GAMMA=3``).
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import ModelParams, PhaseState, initial_state, nonlinearity_from_config
from .kernels import ExpPoly, GridSpec, MemoryKernel, prony_kernel_from_relaxation
from .spectral import SpectralModel

ENV_PREFIX = "BERGERPLATE_"

DEFAULTS = {
    "model": {"kind": "dirichlet1d", "n": "3"},
    "params": {"beta": "1.0", "omega": "0.5", "nu": "1.0", "stability_factor": "0.5"},
    "nonlinearity": {"kind": "berger", "gamma": "5.0"},
    "kernel1": {"terms": "1.0:1.0", "style": "mu", "tail_tolerance": "1e-10"},
    "kernel2": {"terms": "1.0:1.0", "style": "mu", "tail_tolerance": "1e-10"},
    "run": {"dt": "0.01", "horizon": "10.0", "stride": "10", "backend": "buffer", "seed": "0"},
    "initial": {"mode": "random", "radius": "1.0"},
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


def _pairs(text: str) -> list:
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        a, _, d = item.partition(":")
        out.append((float(a), float(d)))
    return out


@dataclass
class RunConfig:
    raw: dict
    params: ModelParams
    dt: float
    horizon: float
    stride: int
    backend: str
    seed: int
    declared_delta: tuple
    source: str = "<defaults>"
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)

    def with_override(self, key: str, value) -> "RunConfig":
        raw = {s: dict(v) for s, v in self.raw.items()}
        section, _, name = key.partition(".")
        raw.setdefault(section, {})[name] = str(value)
        return build_config(raw, self.source)

    def initial_state(self, index: int = 0) -> PhaseState:
        return initial_state_from_config(self, index)


def read_raw(path=None, text: str | None = None, env=None) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str.lower
    cp.read_dict(DEFAULTS)
    try:
        if path is not None:
            with open(path) as fh:
                cp.read_file(fh, source=str(path))
        if text is not None:
            cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    raw = {s: dict(cp.items(s)) for s in cp.sections()}
    env = os.environ if env is None else env
    for key, value in env.items():
        if key.startswith(ENV_PREFIX) and "__" in key:
            section, _, name = key[len(ENV_PREFIX):].partition("__")
            raw.setdefault(section.lower(), {})[name.lower()] = value
    return raw


def _field(raw, section, key, conv, default=None):
    try:
        val = raw.get(section, {}).get(key)
        if val is None:
            if default is None:
                raise ConfigError(f"{section}.{key}: missing")
            return default
        return conv(val)
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001 - attach the field name to any parse error
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def _model(raw) -> SpectralModel:
    sec = raw.get("model", {})
    kind = sec.get("kind", "dirichlet1d")
    try:
        if kind == "dirichlet1d":
            return SpectralModel.from_config({"kind": kind, "n": int(sec["n"]),
                                              "length": float(sec.get("length", math.pi))})
        if kind == "rectangle":
            return SpectralModel.from_config({k: sec[k] for k in ("nx", "ny", "lx", "ly")}
                                             | {"kind": kind})
        if kind == "list":
            return SpectralModel(np.array(_floats(sec["eigenvalues"])))
    except KeyError as exc:
        raise ConfigError(f"model.{exc.args[0]}: missing") from exc
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    raise ConfigError(f"model.kind: unknown spectrum kind {kind!r}")


def _kernel(raw, name: str, omega: float) -> tuple[MemoryKernel, float | None]:
    sec = raw.get(name, {})
    terms = _field(raw, name, "terms", _pairs)
    if not terms:
        raise ConfigError(f"{name}.terms: no (a:delta) pairs given")
    tol = _field(raw, name, "tail_tolerance", float, 1e-10)
    spec = GridSpec(h0=_field(raw, name, "grid_h0", float, 0.02),
                    n_linear=_field(raw, name, "grid_n_linear", int, 25),
                    ratio=_field(raw, name, "grid_ratio", float, 1.06),
                    max_nodes=_field(raw, name, "grid_max_nodes", int, 256))
    style = sec.get("style", "mu")
    try:
        if style == "mu":
            k = MemoryKernel(tuple(a for a, _ in terms), tuple(d for _, d in terms),
                             tail_tolerance=tol, grid_spec=spec)
        elif style == "relaxation":
            scale = 1.0 - omega if name == "kernel2" else 1.0
            k = prony_kernel_from_relaxation(terms, scale, tail_tolerance=tol, grid_spec=spec)
        else:
            raise ConfigError(f"{name}.style: expected 'mu' or 'relaxation', got {style!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{name}.terms: {exc}") from exc
    delta = _field(raw, name, "delta", float, -1.0)
    return k, (None if delta < 0 else delta)


def _nonlinearity(raw):
    sec = raw.get("nonlinearity", {})
    kind = sec.get("kind", "berger")
    try:
        if kind == "berger":
            return nonlinearity_from_config({"kind": kind, "gamma": float(sec["gamma"])})
        if kind == "constant":
            return nonlinearity_from_config({"kind": kind, "c": float(sec.get("c", 0.0))})
        if kind == "table":
            return nonlinearity_from_config({"kind": kind, "z": _floats(sec["z"]),
                                             "values": _floats(sec["values"])})
    except KeyError as exc:
        raise ConfigError(f"nonlinearity.{exc.args[0]}: missing") from exc
    except ValueError as exc:
        raise ConfigError(f"nonlinearity: {exc}") from exc
    raise ConfigError(f"nonlinearity.kind: unknown kind {kind!r}")


def build_config(raw: dict, source: str = "<memory>") -> RunConfig:
    model = _model(raw)
    beta = _field(raw, "params", "beta", float)
    omega = _field(raw, "params", "omega", float)
    nu = _field(raw, "params", "nu", float)
    sf = _field(raw, "params", "stability_factor", float, 0.5)
    load = _field(raw, "params", "load", _floats, [])
    if load and len(load) != model.mode_count:
        raise ConfigError(f"params.load: expected {model.mode_count} values, got {len(load)}")
    k1, d1 = _kernel(raw, "kernel1", omega)
    k2, d2 = _kernel(raw, "kernel2", omega)
    nl = _nonlinearity(raw)
    try:
        params = ModelParams(model, beta, omega, nu, k1, k2, nl,
                             load=np.array(load) if load else None, stability_factor=sf)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc
    dt = _field(raw, "run", "dt", float)
    horizon = _field(raw, "run", "horizon", float)
    stride = _field(raw, "run", "stride", int)
    backend = raw.get("run", {}).get("backend", "buffer")
    seed = _field(raw, "run", "seed", int, 0)
    if not dt > 0:
        raise ConfigError("run.dt: must be positive")
    if horizon < 0:
        raise ConfigError("run.horizon: must be nonnegative")
    if stride < 1:
        raise ConfigError("run.stride: must be >= 1")
    if backend not in ("buffer", "sgrid"):
        raise ConfigError(f"run.backend: expected buffer or sgrid, got {backend!r}")
    n_steps = round(horizon / dt)
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ConfigError("run.horizon: must be an integer multiple of run.dt")
    axis = raw.get("sweep", {}).get("axis")
    values = _field(raw, "sweep", "values", _floats, []) if axis else []
    return RunConfig(raw, params, dt, horizon, stride, backend, seed,
                     (k1.decay_rate if d1 is None else d1, k2.decay_rate if d2 is None else d2),
                     source, axis or None, values)


def load_config(path=None, text: str | None = None, env=None) -> RunConfig:
    if path is not None and not Path(path).exists():
        raise ConfigError(f"config: file {path} not found")
    return build_config(read_raw(path, text, env), str(path) if path else "<text>")


def initial_state_from_config(cfg: RunConfig, index: int = 0) -> PhaseState:
    """U(0) from the [initial] section; random data is keyed by (seed, index)."""
    from .verification import random_initial_data

    p = cfg.params
    n = p.model.mode_count
    sec = cfg.raw.get("initial", {})
    mode = sec.get("mode", "random")
    kw = dict(backend=cfg.backend, dt=cfg.dt if cfg.backend == "buffer" else None)
    if mode == "random":
        radius = _field(cfg.raw, "initial", "radius", float, 1.0)
        data = random_initial_data(p, cfg.seed, index, radius)
        return initial_state(p, data["u0"], data["w0"], data["v0"],
                             etabar_past=data["etabar_past"], eta_past=data["eta_past"], **kw)
    if mode == "given":
        vec = {}
        for key in ("u0", "w0", "v0"):
            vals = _field(cfg.raw, "initial", key, _floats, [0.0] * n)
            if len(vals) != n:
                raise ConfigError(f"initial.{key}: expected {n} values, got {len(vals)}")
            vec[key] = np.array(vals)
        past = None
        amp = _field(cfg.raw, "initial", "etabar_amplitude", _floats, [])
        if amp:
            if len(amp) != n:
                raise ConfigError(f"initial.etabar_amplitude: expected {n} values")
            past = ExpPoly.saturating(amp, _field(cfg.raw, "initial", "etabar_rate", float, 1.0))
        return initial_state(p, vec["u0"], vec["w0"], vec["v0"], etabar_past=past, **kw)
    raise ConfigError(f"initial.mode: expected random or given, got {mode!r}")
