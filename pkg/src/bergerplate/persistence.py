"""Trajectory CSV export, JSON sidecars and exact-restart checkpoints."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .dynamics import DIAGNOSTIC_CHANNELS, ModelParams, PhaseState, TrajectoryRecord
from .kernels import BufferHistory, ExpPoly, SGridHistory, _Ring
from .spectral import InvalidArgument

SCHEMA_VERSION = 1


def trajectory_columns(n_modes: int, audit: bool = False) -> list:
    cols = ["time"]
    for name in ("u", "w", "v"):
        cols += [f"{name}_{k + 1}" for k in range(n_modes)]
    cols += list(DIAGNOSTIC_CHANNELS)
    if audit:
        cols.append("energy_residual")
    return cols


def _fmt(x) -> str:
    return repr(float(x))


def trajectory_csv_text(rec: TrajectoryRecord, audit=None) -> str:
    """CSV text, one row per sampled state; floats in shortest round-trip form."""
    if len(rec.states) != len(rec.times):
        raise InvalidArgument("CSV export needs a record with every sampled state (keep_states)")
    n = rec.states[0].u.size if rec.states else 0
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(trajectory_columns(n, audit is not None))
    for i, (t, U) in enumerate(zip(rec.times, rec.states)):
        row = [_fmt(t)] + [_fmt(x) for x in np.concatenate([U.u, U.w, U.v])]
        row += [_fmt(rec.diagnostics[c][i]) for c in DIAGNOSTIC_CHANNELS]
        if audit is not None:
            row.append(_fmt(audit.cumulative_residual[i]))
        wr.writerow(row)
    return buf.getvalue()


def write_trajectory_csv(path, rec: TrajectoryRecord, audit=None):
    Path(path).write_text(trajectory_csv_text(rec, audit))


def write_json(path, payload: dict):
    body = {"schema_version": SCHEMA_VERSION, **payload}
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


def trajectory_metadata(params: ModelParams, rec: TrajectoryRecord, **extra) -> dict:
    return {"params": params.to_config(), "params_digest": params.digest(),
            "samples": len(rec.times), **rec.meta, **extra}


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def _history_arrays(prefix: str, h) -> dict:
    if isinstance(h, SGridHistory):
        return {f"{prefix}_values": h.values}
    h._check_live()
    return {f"{prefix}_ring": h._ring.data, f"{prefix}_count": np.array(h.count),
            f"{prefix}_head": np.array(h._ring.head), f"{prefix}_dt": np.array(h.dt),
            f"{prefix}_origin": h.origin,
            f"{prefix}_past": np.array(json.dumps(h.past.to_config()))}


def _history_from(prefix: str, z, n: int):
    if f"{prefix}_values" in z:
        return SGridHistory(z[f"{prefix}_values"])
    ring = _Ring(np.array(z[f"{prefix}_ring"]), int(z[f"{prefix}_head"]))
    past = ExpPoly.from_config(json.loads(str(z[f"{prefix}_past"])), n)
    return BufferHistory(ring, int(z[f"{prefix}_count"]), float(z[f"{prefix}_dt"]), past,
                         np.array(z[f"{prefix}_origin"]))


def save_checkpoint(path, params: ModelParams, U: PhaseState, **meta):
    arrays = {"u": U.u, "w": U.w, "v": U.v, "time": np.array(U.time),
              "backend": np.array(U.backend), "params_digest": np.array(params.digest()),
              "meta": np.array(json.dumps(meta, sort_keys=True, default=_json_default))}
    arrays.update(_history_arrays("etabar", U.etabar))
    arrays.update(_history_arrays("eta", U.eta))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path, params: ModelParams | None = None) -> tuple[PhaseState, dict]:
    """Restore a state saved by :func:`save_checkpoint` bit for bit."""
    with np.load(path, allow_pickle=False) as z:
        if params is not None and str(z["params_digest"]) != params.digest():
            raise InvalidArgument("checkpoint was written for different parameters")
        n = z["u"].size
        U = PhaseState(np.array(z["u"]), np.array(z["w"]), np.array(z["v"]),
                       _history_from("etabar", z, n), _history_from("eta", z, n),
                       float(z["time"]))
        meta = json.loads(str(z["meta"]))
    return U, meta
