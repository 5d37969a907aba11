"""CSV/JSON artifact writers.  Floats are written with 17 significant digits."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ssa.analysis import occupation_density, quantile_data
from .ssa.simulate import SwitchEvent, Trajectory

SCHEMA_VERSION = 1


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def write_rows(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_trajectory(path, traj: Trajectory):
    if traj.events is not None and traj.events.times.size <= traj.snapshot_times.size:
        times, states = traj.events.times, traj.events.states
    else:
        times, states = traj.snapshot_times, traj.snapshot_states
    write_rows(path, ("time", "state"), zip(times, (int(s) for s in states)))


def write_occupation(path, traj: Trajectory, bins: int):
    edges, mass = occupation_density(traj, bins)
    write_rows(path, ("bin_left", "bin_right", "mass"), zip(edges[:-1], edges[1:], mass))


def write_switches(path, switches: list[SwitchEvent]):
    write_rows(
        path,
        ("index", "kind", "time", "delta_since_last"),
        ((s.index, s.kind, s.time, s.delta_since_last) for s in switches),
    )


def write_quantiles(path, times):
    rows = quantile_data(times) if len(times) else []
    write_rows(path, ("t", "fraction"), rows)


def write_json(path, payload: dict):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
