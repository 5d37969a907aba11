"""Exact simulation of the combined reaction + splitting jump process."""
from __future__ import annotations

import time as _time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .._jit import backend_name
from ..reaction_net import SSA_CHECKS, ReactionNetwork, propensity_table, validate
from ..splitting import SplitRateSpec, SplittingKernel
from . import _kernels as K

__all__ = [
    "SwitchMode",
    "SwitchEvent",
    "EventLog",
    "Trajectory",
    "simulate",
    "simulate_replicates",
    "endpoint_distribution",
    "replicate_seeds",
    "FrozenTrajectory",
]

DEFAULT_CHUNK = 1 << 18


class FrozenTrajectory(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SwitchMode:
    """How switches are detected.

    ``slow``: wells are the closed balls ``B_c(x1)`` and ``B_c(x3)`` in ``X/N``.
    ``fast``: wells are the boundary states ``{0}`` and ``{N}``.
    """

    kind: str = "fast"
    c: float = 0.1
    x1: float | None = None
    x3: float | None = None

    def __post_init__(self):
        if self.kind not in ("slow", "fast"):
            raise ValueError(f"switch mode must be 'slow' or 'fast', not {self.kind!r}")
        if self.kind == "slow":
            if self.x1 is None or self.x3 is None:
                raise ValueError("slow switch mode needs x1 and x3")
            if not self.c > 0:
                raise ValueError("switch radius c must be positive")
            if self.x1 + self.c >= self.x3 - self.c:
                raise ValueError("balls around x1 and x3 overlap")

    @classmethod
    def slow(cls, x1: float, x3: float, c: float = 0.1) -> "SwitchMode":
        return cls("slow", c, x1, x3)

    def wells(self, N: int) -> np.ndarray:
        if self.kind == "fast":
            return np.array([[0, 0], [N, N]], dtype=np.int64)
        tol = 1e-9
        out = np.empty((2, 2), dtype=np.int64)
        for i, x in enumerate((self.x1, self.x3)):
            out[i, 0] = max(0, int(np.ceil(N * (x - self.c) - tol)))
            out[i, 1] = min(N, int(np.floor(N * (x + self.c) + tol)))
        return out

    def labels(self) -> tuple[str, str]:
        if self.kind == "fast":
            return ("0", "N")
        return (f"B({self.x1:g})", f"B({self.x3:g})")


_NO_WELLS = np.array([[1, 0], [1, 0]], dtype=np.int64)


@dataclass(frozen=True)
class SwitchEvent:
    index: int
    kind: str
    time: float
    from_state: str
    to_state: str
    delta_since_last: float


@dataclass
class EventLog:
    """Full path: ``states[i]`` holds on ``[times[i], times[i+1])``; ``tags[0] = -1``."""

    times: np.ndarray
    states: np.ndarray
    tags: np.ndarray


@dataclass
class Trajectory:
    N: int
    x0: int
    t_max: float
    t_end: float
    snapshot_times: np.ndarray
    snapshot_states: np.ndarray
    occupation_time: np.ndarray  # total time spent in each state 0..N
    channel_labels: tuple[str, ...]
    channel_counts: np.ndarray
    n_events: int
    frozen: bool = False
    switch_mode: SwitchMode | None = None
    switches: list[SwitchEvent] = field(default_factory=list)
    initial_label_time: float | None = None
    events: EventLog | None = None
    seed: int | None = None
    backend: str = ""
    wall_time: float = 0.0
    x_end: int | None = None

    @property
    def final_state(self) -> int:
        if self.x_end is not None:
            return int(self.x_end)
        if self.events is not None:
            return int(self.events.states[-1])
        return int(self.snapshot_states[-1])

    def occupation_fraction(self) -> np.ndarray:
        total = self.occupation_time.sum()
        if total <= 0:
            out = np.zeros(self.N + 1)
            out[self.x0] = 1.0
            return out
        return self.occupation_time / total

    def mass_within(self, centers, radius: float) -> float:
        """Fraction of time with ``|X/N - c| <= radius`` for some ``c`` in ``centers``."""
        z = np.arange(self.N + 1) / self.N
        hit = np.zeros(self.N + 1, dtype=bool)
        for c in np.atleast_1d(centers):
            hit |= np.abs(z - c) <= radius + 1e-12
        return float(self.occupation_fraction()[hit].sum())

    def inter_switch_times(self) -> np.ndarray:
        return np.array([s.delta_since_last for s in self.switches])

    @classmethod
    def from_path(cls, times, states, N: int, t_end: float | None = None, tags=None) -> "Trajectory":
        """Build a trajectory from an explicit piecewise-constant path (useful for synthetic data)."""
        times = np.asarray(times, dtype=np.float64)
        states = np.asarray(states, dtype=np.int64)
        if times.ndim != 1 or times.shape != states.shape or times.size == 0:
            raise ValueError("times and states must be equal-length nonempty 1-d arrays")
        if np.any(np.diff(times) < 0):
            raise ValueError("event times must be nondecreasing")
        if np.any(states < 0) or np.any(states > N):
            raise ValueError("states outside [0, N]")
        t_end = float(times[-1] if t_end is None else t_end)
        occ = np.zeros(N + 1)
        hold = np.diff(np.append(times, t_end))
        np.add.at(occ, states, np.clip(hold, 0.0, None))
        tags = np.full(times.shape, -1, dtype=np.int64) if tags is None else np.asarray(tags, dtype=np.int64)
        return cls(
            N=N,
            x0=int(states[0]),
            t_max=t_end,
            t_end=t_end,
            snapshot_times=times.copy(),
            snapshot_states=states.copy(),
            occupation_time=occ,
            channel_labels=(),
            channel_counts=np.zeros(0, dtype=np.int64),
            n_events=int(times.size - 1),
            events=EventLog(times.copy(), states.copy(), tags),
        )


def _channel_labels(network: ReactionNetwork, has_split: bool) -> tuple[str, ...]:
    labels = [str(r) for r in network]
    if has_split:
        labels.append("split")
    return tuple(labels)


@dataclass
class _Compiled:
    cum: np.ndarray
    deltas: np.ndarray
    has_split: bool
    split_kind: int
    split_cdf: np.ndarray
    labels: tuple[str, ...]


def _compile(network, kernel, rate, N, check) -> _Compiled:
    if check:
        report = validate(network, N)
        if not report.usable_for_ssa:
            failed = [c.name for c in report.checks if not c.passed and c.name in SSA_CHECKS]
            raise ValueError(f"network fails {', '.join(failed)} at N={N}; refusing to simulate")
    has_split = kernel is not None and rate is not None
    split_rates = None
    split_kind = 0
    split_cdf = np.zeros((1, 1))
    if has_split:
        kernel.check_N(N)
        split_rates = rate.rates(N, kernel)
        split_kind = kernel.code
        split_cdf = kernel.cdf_table()
    table = propensity_table(network, N)
    if table.shape[1] == 0 and not has_split:
        table = np.zeros((N + 1, 1))
        deltas = np.zeros(1, dtype=np.int64)
    else:
        deltas = network.net_changes()
    cum = K.build_rate_table(table, split_rates)
    return _Compiled(cum, deltas, has_split, split_kind, split_cdf, _channel_labels(network, has_split))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def simulate(
    network: ReactionNetwork,
    kernel: SplittingKernel | None,
    rate: SplitRateSpec | None,
    x0: int,
    t_max: float,
    seed,
    *,
    N: int,
    switch_mode: SwitchMode | None = None,
    n_snapshots: int = 10_000,
    record_events: bool = False,
    max_events: int = 0,
    chunk: int = DEFAULT_CHUNK,
    check: bool = True,
) -> Trajectory:
    """Direct-method simulation of ``X_A`` on ``{0..N}`` up to ``t_max``.

    Occupation times, ``n_snapshots`` evenly spaced snapshots and switch times
    (for ``switch_mode``) are accumulated online.  ``record_events`` keeps the
    full path as well, which is only sensible for short runs.  ``seed`` is an
    int, a ``SeedSequence`` or a ``Generator``.
    """
    N = int(N)
    x0 = int(x0)
    if not 0 <= x0 <= N:
        raise ValueError(f"x0={x0} outside [0, {N}]")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_snapshots < 2:
        raise ValueError("need at least 2 snapshots")
    comp = _compile(network, kernel, rate, N, check)
    rng = _rng(seed)

    n_ch = comp.cum.shape[1]
    fs = np.zeros(3)
    ist = np.zeros(7, dtype=np.int64)
    ist[K.I_X] = x0
    ist[K.I_LABEL] = -1
    occ = np.zeros(N + 1)
    snap_dt = t_max / (n_snapshots - 1)
    snap_states = np.full(n_snapshots, -1, dtype=np.int64)
    counts = np.zeros(n_ch, dtype=np.int64)
    wells = _NO_WELLS if switch_mode is None else switch_mode.wells(N)
    w0 = K._well(x0, wells)
    if w0 >= 0:
        ist[K.I_LABEL] = w0
    label_t0 = 0.0 if w0 >= 0 else None

    cap = 64
    sw_time = np.zeros(cap)
    sw_from = np.zeros(cap, dtype=np.int64)
    sw_to = np.zeros(cap, dtype=np.int64)
    sw_delta = np.zeros(cap)
    log_cap = 4096 if record_events else 1
    log_t = np.zeros(log_cap)
    log_x = np.zeros(log_cap, dtype=np.int64)
    log_tag = np.zeros(log_cap, dtype=np.int64)

    u = rng.random(chunk)
    start = _time.perf_counter()
    while True:
        status = K.run_chunk(
            comp.cum, comp.deltas, comp.has_split, comp.split_kind, comp.split_cdf, N, float(t_max),
            int(max_events), u, fs, ist, occ, snap_dt, snap_states, counts, wells,
            sw_time, sw_from, sw_to, sw_delta, record_events, log_t, log_x, log_tag,
        )
        if label_t0 is None and ist[K.I_LABEL] >= 0:
            label_t0 = float(fs[K.F_LABEL_T])
        if status == K.NEED_UNIFORMS:
            u = rng.random(chunk)
            ist[K.I_UIDX] = 0
        elif status == K.SWITCH_FULL:
            sw_time, sw_from, sw_to, sw_delta = (np.concatenate([a, np.zeros_like(a)]) for a in (sw_time, sw_from, sw_to, sw_delta))
        elif status == K.LOG_FULL:
            log_t, log_x, log_tag = (np.concatenate([a, np.zeros_like(a)]) for a in (log_t, log_x, log_tag))
        else:
            break
    wall = _time.perf_counter() - start

    frozen = status == K.FROZEN
    t_end = float(fs[K.F_T]) if status != K.DONE else float(t_max)
    if frozen:
        warnings.warn(f"total rate is zero at x={int(ist[K.I_X])}; trajectory ends at t={t_end:.6g}", FrozenTrajectory, stacklevel=2)
    n_snap = int(ist[K.I_SNAP])
    snap_times = np.arange(n_snap) * snap_dt
    nsw = int(ist[K.I_NSW])
    switches = []
    if switch_mode is not None:
        names = switch_mode.labels()
        switches = [
            SwitchEvent(i, switch_mode.kind, float(sw_time[i]), names[sw_from[i]], names[sw_to[i]], float(sw_delta[i]))
            for i in range(nsw)
        ]
    events = None
    if record_events:
        nlog = int(ist[K.I_NLOG])
        events = EventLog(
            np.concatenate([[0.0], log_t[:nlog]]),
            np.concatenate([[x0], log_x[:nlog]]).astype(np.int64),
            np.concatenate([[-1], log_tag[:nlog]]).astype(np.int64),
        )
    seed_val = seed if isinstance(seed, (int, np.integer)) else None
    return Trajectory(
        N=N,
        x0=x0,
        t_max=float(t_max),
        t_end=t_end,
        snapshot_times=snap_times,
        snapshot_states=snap_states[:n_snap].copy(),
        occupation_time=occ,
        channel_labels=comp.labels,
        channel_counts=counts,
        n_events=int(ist[K.I_EVENTS]),
        frozen=frozen,
        switch_mode=switch_mode,
        switches=switches,
        initial_label_time=label_t0,
        events=events,
        seed=None if seed_val is None else int(seed_val),
        backend=backend_name(),
        wall_time=wall,
        x_end=int(ist[K.I_X]),
    )


def replicate_seeds(master_seed: int, n: int) -> list[np.random.SeedSequence]:
    """Per-replicate seeds: ``SeedSequence(master_seed).spawn(n)``."""
    return np.random.SeedSequence(master_seed).spawn(n)


def simulate_replicates(network, kernel, rate, x0, t_max, master_seed: int, n_replicates: int, *, workers: int = 1, **kw) -> list[Trajectory]:
    """Independent replicates; replicate ``i`` uses ``replicate_seeds(master_seed, n)[i]``.

    Results do not depend on ``workers`` (the kernels release the GIL).
    """
    seeds = replicate_seeds(master_seed, n_replicates)

    def one(s):
        return simulate(network, kernel, rate, x0, t_max, s, **kw)

    if workers <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, seeds))


def endpoint_distribution(
    network, kernel, rate, x0: int, t: float, n_replicates: int, seed, *, N: int, chunk: int = DEFAULT_CHUNK, check: bool = True
) -> np.ndarray:
    """States ``X_A(t)`` of ``n_replicates`` independent runs from ``x0`` (one RNG stream)."""
    N = int(N)
    comp = _compile(network, kernel, rate, N, check)
    rng = _rng(seed)
    out = np.empty(n_replicates, dtype=np.int64)
    ist = np.array([0, x0, 0], dtype=np.int64)
    ft = np.zeros(1)
    while True:
        u = rng.random(chunk)
        done = K.endpoints_chunk(
            comp.cum, comp.deltas, comp.has_split, comp.split_kind, comp.split_cdf, N, float(t), int(x0), u, out, ist, ft
        )
        if done:
            return out
