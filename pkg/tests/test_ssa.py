import hashlib
import json
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitswitch.dsl import parse_network
from splitswitch.ssa import (
    SwitchMode,
    Trajectory,
    endpoint_distribution,
    extract_switch_times,
    ks_exponential,
    occupation_density,
    quantile_data,
    simulate,
    simulate_diffusion,
    simulate_replicates,
    switch_statistics,
    transient_distribution,
)
from splitswitch.splitting import SplitRateSpec, SplittingKernel

DW_PHI = [1, -22 / 3, 16, -32 / 3]
HALF_X1MX = [0, 0.5, -0.5]


# single-channel exponential

def test_single_channel_first_jump():
    net = parse_network("B -> A @ 1")
    first = np.empty(100_000)
    for s in range(first.size):
        tr = simulate(net, None, None, 0, 10.0, s, N=10, check=False, record_events=True, n_snapshots=2, max_events=1, chunk=64)
        assert tr.events.states[1] == 1
        first[s] = tr.events.times[1]
    # mean 1/10 with standard error 0.1/sqrt(n)
    assert abs(first.mean() - 0.1) < 3 * 0.1 / np.sqrt(first.size)


def test_single_channel_survival():
    net = parse_network("B -> A @ 1")
    for t in (0.05, 0.1, 0.3):
        x = endpoint_distribution(net, None, None, 0, t, 100_000, 11, N=10, check=False)
        p = np.mean(x == 0)
        ref = np.exp(-10 * t)
        assert abs(p - ref) < 4 * np.sqrt(ref * (1 - ref) / x.size)


def test_validation_gate():
    with pytest.raises(ValueError):
        simulate(parse_network("B -> A @ 1"), None, None, 0, 1.0, 0, N=10)


def test_frozen_trajectory_is_flagged():
    net = parse_network("B -> A @ 1")
    with pytest.warns(RuntimeWarning):
        tr = simulate(net, None, None, 0, 100.0, 1, N=5, check=False)
    assert tr.frozen and tr.final_state == 5 and tr.t_end < 100
    assert tr.n_events == 5


# structural invariants

def test_path_consistency_with_event_tags(dw):
    kern, rate = SplittingKernel("hg"), SplitRateSpec("N")
    tr = simulate(dw, kern, rate, 20, 1e9, 3, N=40, record_events=True, max_events=1_000_000)
    ev = tr.events
    assert tr.n_events == 1_000_000
    assert ev.states.min() >= 0 and ev.states.max() <= 40
    d = np.diff(ev.states)
    tags = ev.tags[1:]
    zeta = np.array([r.zeta for r in dw])
    react = tags < len(dw)
    assert np.all(d[react] == zeta[tags[react]])
    assert np.all(np.diff(ev.times) > 0)
    assert np.array_equal(np.bincount(tags, minlength=len(dw) + 1), tr.channel_counts)


def test_bounds_over_ten_million_events(dw):
    kern, rate = SplittingKernel("bin"), SplitRateSpec("N")
    tr = simulate(dw, kern, rate, 0, 1e9, 8, N=30, max_events=10_000_000, n_snapshots=100_000)
    assert tr.n_events == 10_000_000
    s = tr.snapshot_states
    assert s.min() >= 0 and s.max() <= 30
    assert tr.occupation_time.sum() == pytest.approx(tr.t_end, rel=1e-9)


def test_determinism(dw):
    kern, rate = SplittingKernel("bern"), SplitRateSpec("1/2*N^2", epsilon_sq=0.02)
    a = simulate(dw, kern, rate, 50, 20.0, 42, N=200, record_events=True)
    b = simulate(dw, kern, rate, 50, 20.0, 42, N=200, record_events=True)
    assert np.array_equal(a.events.times, b.events.times)
    assert np.array_equal(a.events.states, b.events.states)
    assert np.array_equal(a.occupation_time, b.occupation_time)
    c = simulate(dw, kern, rate, 50, 20.0, 43, N=200, record_events=True)
    assert not np.array_equal(a.events.times[:100], c.events.times[:100])


def test_replicates_independent_of_worker_count(dw):
    kern, rate = SplittingKernel("bern"), SplitRateSpec("1/2*N^3")
    one = simulate_replicates(dw, kern, rate, 0, 5.0, 7, 4, N=50, workers=1)
    many = simulate_replicates(dw, kern, rate, 0, 5.0, 7, 4, N=50, workers=4)
    for a, b in zip(one, many):
        assert np.array_equal(a.occupation_time, b.occupation_time)
    assert len({tuple(t.occupation_time[:5]) for t in one}) == 4


_BACKEND_SCRIPT = textwrap.dedent(
    """
    import hashlib, json, sys
    from splitswitch._jit import backend_name
    from splitswitch.dsl import load_network
    from splitswitch.splitting import SplittingKernel, SplitRateSpec
    from splitswitch.ssa import SwitchMode, simulate
    net = load_network(sys.argv[1])
    out = {"backend": backend_name()}
    for kind, g in (("bern", "1/2*N^3"), ("hg", "N"), ("bin", "N")):
        tr = simulate(net, SplittingKernel(kind), SplitRateSpec(g), 3, 2.0, 99, N=30,
                      switch_mode=SwitchMode("fast"), record_events=True, max_events=20000, chunk=4096)
        h = hashlib.sha256()
        for a in (tr.events.times, tr.events.states, tr.occupation_time, tr.snapshot_states, tr.channel_counts):
            h.update(a.tobytes())
        h.update(repr([(s.time, s.from_state) for s in tr.switches]).encode())
        out[kind] = h.hexdigest()
    print(json.dumps(out))
    """
)


def _run_backend(no_jit: bool, path):
    env = dict(os.environ)
    env.pop("SPLITSWITCH_NO_JIT", None)
    if no_jit:
        env["SPLITSWITCH_NO_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", _BACKEND_SCRIPT, str(path)], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def test_jit_and_fallback_bit_identical():
    from conftest import EXPERIMENTS

    jit = _run_backend(False, EXPERIMENTS / "dw.crn")
    py = _run_backend(True, EXPERIMENTS / "dw.crn")
    assert py["backend"] == "python"
    for k in ("bern", "hg", "bin"):
        assert jit[k] == py[k]


# occupation

def test_occupation_constant_at_N():
    tr = Trajectory.from_path([0.0], [10], 10, t_end=3.0)
    _, mass = occupation_density(tr, 5)
    assert mass[-1] == 1.0 and mass[:-1].sum() == 0


def test_occupation_two_state():
    tr = Trajectory.from_path([0.0, 1.0], [0, 10], 10, t_end=2.0)
    edges, mass = occupation_density(tr, 10)
    assert mass[0] == 0.5 and mass[-1] == 0.5
    assert edges[0] == 0 and edges[-1] == 1


@settings(max_examples=40)
@given(st.lists(st.tuples(st.floats(1e-3, 10), st.integers(0, 25)), min_size=1, max_size=50), st.integers(1, 40))
def test_occupation_sums_to_one(path, bins):
    holds, states = zip(*path)
    times = np.concatenate([[0.0], np.cumsum(holds)[:-1]])
    tr = Trajectory.from_path(times, states, 25, t_end=float(np.sum(holds)))
    _, mass = occupation_density(tr, bins)
    assert abs(mass.sum() - 1) < 1e-12 and np.all(mass >= 0)


# switch extraction

def test_never_leaving_well_has_no_switches():
    mode = SwitchMode.slow(0.25, 0.75)
    tr = Trajectory.from_path([0, 1, 2, 3], [25, 30, 20, 26], 100, t_end=4)
    assert extract_switch_times(tr, mode) == []
    stats = switch_statistics([])
    assert stats.insufficient


def test_square_wave():
    tr = Trajectory.from_path([0, 1, 2], [0, 10, 0], 10, t_end=3)
    ev = extract_switch_times(tr, SwitchMode("fast"))
    assert [e.time for e in ev] == [1, 2]
    assert [(e.from_state, e.to_state) for e in ev] == [("0", "N"), ("N", "0")]


def test_slow_mode_needs_alternation():
    mode = SwitchMode.slow(0.25, 0.75)
    # visits B(0.25), wanders, re-enters B(0.25), then B(0.75), then back
    tr = Trajectory.from_path([0, 1, 2, 3, 4, 5], [25, 50, 30, 50, 70, 34], 100, t_end=6)
    ev = extract_switch_times(tr, mode)
    assert [e.time for e in ev] == [4, 5]
    assert [e.delta_since_last for e in ev] == [4, 1]


def test_online_and_offline_switches_agree(dw):
    kern, rate = SplittingKernel("bern"), SplitRateSpec("1/2*N^3")
    mode = SwitchMode("fast")
    tr = simulate(dw, kern, rate, 0, 30.0, 5, N=60, switch_mode=mode, record_events=True)
    off = extract_switch_times(tr, mode)
    assert len(off) == len(tr.switches) > 5
    for a, b in zip(off, tr.switches):
        assert (a.time, a.from_state, a.to_state) == (b.time, b.from_state, b.to_state)
        assert a.delta_since_last == pytest.approx(b.delta_since_last, rel=1e-12)
    labels = [s.to_state for s in tr.switches]
    assert all(x != y for x, y in zip(labels, labels[1:]))


def test_switch_requires_log_or_matching_mode(dw):
    tr = simulate(dw, SplittingKernel("bern"), SplitRateSpec("1/2*N^3"), 0, 1.0, 5, N=20)
    with pytest.raises(ValueError):
        extract_switch_times(tr, SwitchMode("fast"))


# quantiles and KS

def test_quantile_examples():
    assert quantile_data([1.0]) == [(1.0, 1.0)]
    assert [f for _, f in quantile_data([4, 2, 3, 1])] == [0.25, 0.5, 0.75, 1.0]
    assert [t for t, _ in quantile_data([4, 2, 3, 1])] == [1, 2, 3, 4]


def test_ks_on_exponential_sample():
    t = np.random.default_rng(123).exponential(1.0, 10_000)
    assert ks_exponential(t) < 1.63 / np.sqrt(t.size)


def test_ks_detects_wrong_mean():
    t = np.random.default_rng(123).exponential(1.3, 10_000)
    assert ks_exponential(t) > 1.63 / np.sqrt(t.size)


# SSA vs master equation on a small chain

def test_ssa_matches_master_equation_with_hg_splitting(dw):
    kern, rate = SplittingKernel("hg"), SplitRateSpec("N")
    N, t = 20, 0.5
    p = transient_distribution(dw, kern, rate, N, 5, t)
    x = endpoint_distribution(dw, kern, rate, 5, t, 40_000, 17, N=N)
    emp = np.bincount(x, minlength=N + 1) / x.size
    assert 0.5 * np.abs(emp - p).sum() < 0.02


# Euler-Maruyama

def test_em_zero_noise_stays_at_equilibrium():
    path = simulate_diffusion(DW_PHI, HALF_X1MX, 0.0, 0.25, 5.0, dt=1e-3)
    assert np.max(np.abs(path.states - 0.25)) < 1e-12


def test_em_zero_noise_monotone_to_upper_well():
    path = simulate_diffusion(DW_PHI, HALF_X1MX, 0.0, 0.6, 20.0, dt=1e-3)
    assert np.all(np.diff(path.states) >= 0)
    assert abs(path.states[-1] - 0.75) < 1e-6


def test_em_error_halves_with_dt():
    # deterministic path: Euler is first order; compare x(1) to a fine RK reference
    from scipy.integrate import solve_ivp

    ref = solve_ivp(lambda t, x: np.polyval(DW_PHI[::-1], x), (0, 1), [0.6], rtol=1e-12, atol=1e-14).y[0, -1]
    errs = [abs(simulate_diffusion(DW_PHI, HALF_X1MX, 0.0, 0.6, 1.0, dt=dt).states[-1] - ref) for dt in (1e-2, 5e-3, 2.5e-3)]
    for a, b in zip(errs, errs[1:]):
        assert 1.7 < a / b < 2.3


def test_em_bimodal_with_noise():
    # at eps^2 = 0.02 the mean switching time is ~1e4-1e5; eps^2 = 0.05 shows both wells within t = 4000
    path = simulate_diffusion(DW_PHI, HALF_X1MX, np.sqrt(0.05), 0.25, 4000.0, dt=1e-3, seed=4)
    assert path.mass_within([0.25, 0.75], 0.1) > 0.8
    assert path.mass_within([0.75], 0.1) > 0.05 and path.mass_within([0.25], 0.1) > 0.05
    assert path.states.min() >= 0 and path.states.max() <= 1


def test_em_clamps_and_validates():
    with pytest.raises(ValueError):
        simulate_diffusion(DW_PHI, HALF_X1MX, 0.1, 1.5, 1.0)
    path = simulate_diffusion(DW_PHI, HALF_X1MX, 3.0, 0.01, 5.0, dt=1e-3, seed=1)
    assert path.states.min() >= 0 and path.states.max() <= 1
