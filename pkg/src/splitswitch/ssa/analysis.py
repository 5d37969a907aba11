"""Post-processing of trajectories: occupation densities, switch times, empirical CDFs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulate import SwitchEvent, SwitchMode, Trajectory

__all__ = ["occupation_density", "extract_switch_times", "quantile_data", "SwitchStats", "switch_statistics", "ks_exponential"]


def occupation_density(traj: Trajectory, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Time-weighted histogram of ``X/N`` on ``bins`` equal bins of [0, 1].

    Returns ``(edges, mass)`` with ``mass.sum() == 1``.  State ``x`` goes to bin
    ``floor(bins * x / N)``, with ``x = N`` in the last bin.
    """
    if bins < 1:
        raise ValueError("bins must be positive")
    N = traj.N
    frac = traj.occupation_fraction()
    idx = np.minimum((np.arange(N + 1) * bins) // N, bins - 1)
    mass = np.bincount(idx, weights=frac, minlength=bins)
    mass /= mass.sum()
    return np.linspace(0.0, 1.0, bins + 1), mass


def extract_switch_times(traj: Trajectory, mode: SwitchMode) -> list[SwitchEvent]:
    """Alternating first-entrance times into the two wells of ``mode``.

    Uses the full event log when present; otherwise only the online record made
    with the same mode is available.
    """
    if traj.events is None:
        if traj.switch_mode == mode:
            return list(traj.switches)
        raise ValueError("trajectory has no event log and was not tracked with this switch mode")
    wells = mode.wells(traj.N)
    names = mode.labels()
    label = -1
    last = 0.0
    out: list[SwitchEvent] = []
    for t, x in zip(traj.events.times, traj.events.states):
        if wells[0, 0] <= x <= wells[0, 1]:
            w = 0
        elif wells[1, 0] <= x <= wells[1, 1]:
            w = 1
        else:
            continue
        if label < 0:
            label, last = w, float(t)
        elif w != label:
            out.append(SwitchEvent(len(out), mode.kind, float(t), names[label], names[w], float(t) - last))
            label, last = w, float(t)
    return out


def quantile_data(times) -> list[tuple[float, float]]:
    """Empirical CDF points ``(t_(k), k/n)`` over the sorted sample."""
    t = np.sort(np.asarray(times, dtype=np.float64))
    if t.size == 0:
        raise ValueError("quantile_data needs at least one time")
    n = t.size
    return [(float(v), (k + 1) / n) for k, v in enumerate(t)]


@dataclass(frozen=True)
class SwitchStats:
    n: int
    mean: float
    std: float
    insufficient: bool


def switch_statistics(events: list[SwitchEvent]) -> SwitchStats:
    """Summary of inter-switch times; flagged ``insufficient`` below 2 switches."""
    d = np.array([e.delta_since_last for e in events])
    if d.size < 2:
        return SwitchStats(int(d.size), float("nan"), float("nan"), True)
    return SwitchStats(int(d.size), float(d.mean()), float(d.std(ddof=1)), False)


def ks_exponential(times, mean: float = 1.0) -> float:
    """Kolmogorov-Smirnov distance between the sample and Exp(mean)."""
    t = np.sort(np.asarray(times, dtype=np.float64))
    n = t.size
    F = 1.0 - np.exp(-t / mean)
    k = np.arange(1, n + 1)
    return float(max(np.max(k / n - F), np.max(F - (k - 1) / n)))
