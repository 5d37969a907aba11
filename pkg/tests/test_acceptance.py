"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line in ``RESULTS``; the lines are printed in
the pytest terminal summary, or directly when the file is run as a script.
"""
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import EXPERIMENTS  # noqa: E402

from splitswitch import _sampling, cli  # noqa: E402
from splitswitch.bd_analysis import (  # noqa: E402
    BirthDeathModel,
    build,
    expected_hitting_time,
    hitting_prob,
    oracle_solve,
)
from splitswitch.config import apply_overrides, load_config  # noqa: E402
from splitswitch.dsl import load_network  # noqa: E402
from splitswitch.quasipotential import compare_barriers, find_equilibria, g_transform  # noqa: E402
from splitswitch.reaction_net import limiting_drift  # noqa: E402
from splitswitch.splitting import SplitRateSpec, SplittingKernel, pmf_counts, variance_exact  # noqa: E402
from splitswitch.ssa import SwitchMode, endpoint_distribution, ks_exponential, simulate_replicates, transient_distribution  # noqa: E402

RESULTS: dict[int, str] = {}

DW = load_network(EXPERIMENTS / "dw.crn")
BERN = SplittingKernel("bern")


def record(n: int, title: str, ok: bool, detail: str):
    RESULTS[n] = f"{'PASS' if ok else 'FAIL'} criterion {n:2d} {title}: {detail}"
    assert ok, RESULTS[n]


def test_criterion_01_barrier_constants(tmp_path):
    cfg = apply_overrides(load_config(EXPERIMENTS / "barriers.toml"), {"output": str(tmp_path)})
    t0 = time.perf_counter()
    d = cli.run_quasipotential(cfg)
    wall = time.perf_counter() - t0
    b, rate = d["barriers"], d["predictions"]["slow_rate"]["from_x1"]
    ok = (
        abs(b["A_y2"] - 0.0913) <= 1e-4
        and abs(b["iota12"] - 0.006713) <= 1e-5
        and abs(b["iota32"] - 0.005534) <= 1e-5
        and abs(rate / 0.0001083 - 1) <= 0.01
        and wall < 1.0
    )
    record(1, "barrier constants", ok,
           f"A(y2)={b['A_y2']:.7f} iota12={b['iota12']:.7f} iota32={b['iota32']:.7f} rate={rate:.5e} in {wall:.2f}s")


def test_criterion_02_equilibria():
    eq = find_equilibria(limiting_drift(DW))
    err = max(abs(eq.x1 - 0.25), abs(eq.x2 - 0.5), abs(eq.x3 - 0.75))
    record(2, "equilibria", err <= 1e-10, f"({eq.x1!r}, {eq.x2!r}, {eq.x3!r}) max error {err:.1e}")


def test_criterion_03_g_transform():
    gt = g_transform(lambda x: x * (1 - x))
    y = np.linspace(-1.4, 1.4, 28001)
    sup = float(np.max(np.abs(gt.g(y) - np.cos(y / 2 - np.pi / 4) ** 2)))
    e1, e3 = abs(gt.h(0.25) + np.pi / 6), abs(gt.h(0.75) - np.pi / 6)
    record(3, "g-transform closed form", sup <= 1e-6 and e1 <= 1e-6 and e3 <= 1e-6,
           f"sup|g - cos^2| = {sup:.1e}, |h(1/4)+pi/6| = {e1:.1e}, |h(3/4)-pi/6| = {e3:.1e}")


def test_criterion_04_oracle_equivalence():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        m = BirthDeathModel.from_interior(rng.uniform(0.1, 10, 50), rng.uniform(0.1, 10, 50))
        pi_o, e_o = oracle_solve(m, method="dense")
        for j in range(1, 50):
            worst = max(worst, abs(hitting_prob(m, j) / pi_o[j] - 1), abs(expected_hitting_time(m, j) / e_o[j] - 1))
    wall = time.perf_counter() - t0
    record(4, "oracle equivalence", worst <= 1e-9 and wall < 10, f"max relative gap {worst:.1e} over 100 models in {wall:.2f}s")


def test_criterion_05_hitting_trends():
    t0 = time.perf_counter()
    rate = SplitRateSpec("1/2*N^3")
    gaps, ne = [], []
    for N in (100, 200, 400):
        m = build(DW, BERN, rate, N)
        gaps.append(abs(N * hitting_prob(m, 1) - 1))
        ne.append(N * expected_hitting_time(m, 1))
    wall = time.perf_counter() - t0
    ok = gaps[0] > gaps[1] > gaps[2] and ne[0] > ne[1] > ne[2] and wall < 5
    record(5, "hitting trends", ok,
           f"|N pi_1N - 1| = {', '.join(f'{g:.4f}' for g in gaps)}; N e_1 = {', '.join(f'{v:.4f}' for v in ne)}; {wall:.2f}s")


def test_criterion_06_fast_switching():
    cfg = load_config(EXPERIMENTS / "fig3_fast.toml")
    kern, rate = cfg.build_splitting()
    # replicate 0 of the config's seed, exactly as `splitswitch simulate` runs it
    (tr,) = simulate_replicates(DW, kern, rate, cfg.initial_state(), cfg.t_max, cfg.seed, 1, N=cfg.N, switch_mode=SwitchMode("fast"))
    d = tr.inter_switch_times()
    z = np.arange(cfg.N + 1) / cfg.N
    mass = float(tr.occupation_fraction()[(z <= 0.02) | (z >= 0.98)].sum())
    ks = ks_exponential(d, 1.0)
    crit = 1.63 / math.sqrt(len(d))
    ok = len(d) >= 500 and mass > 0.9 and ks < crit and cfg.N == 200
    record(6, "fast-regime switching", ok,
           f"{len(d)} switches, boundary mass {mass:.3f}, KS {ks:.4f} < {crit:.4f}, mean {d.mean():.3f}, {tr.n_events} events")


def test_criterion_07_slow_switching():
    cfg = load_config(EXPERIMENTS / "fig1_slow.toml")
    kern, rate = cfg.build_splitting()
    eq = find_equilibria(limiting_drift(DW))
    t0 = time.perf_counter()
    (tr,) = simulate_replicates(
        DW, kern, rate, cfg.initial_state(), cfg.t_max, cfg.seed, 1, N=cfg.N, switch_mode=SwitchMode.slow(eq.x1, eq.x3, 0.1)
    )
    wall = time.perf_counter() - t0
    mass = tr.mass_within([0.25, 0.75], 0.1)
    ok = mass > 0.8 and len(tr.switches) >= 1 and cfg.N == 1500 and cfg.t_max == 2500 and rate.epsilon_sq == 0.02
    record(7, "slow-regime switching", ok,
           f"well mass {mass:.3f}, {len(tr.switches)} switches, {tr.n_events} events in {wall:.1f}s")


def test_criterion_08_finite_size_asymmetry():
    cfg = load_config(EXPERIMENTS / "fig2_finite_size.toml")
    kern, rate = cfg.build_splitting()
    trs = simulate_replicates(DW, kern, rate, cfg.initial_state(), cfg.t_max, cfg.seed, 5, N=cfg.N, workers=5)
    pairs = [(t.mass_within([0.25], 0.1), t.mass_within([0.75], 0.1)) for t in trs]
    wins = sum(a > b for a, b in pairs)
    ok = wins >= 3 and cfg.N == 500 and cfg.t_max == 4000 and rate.epsilon_sq == 2e-4
    record(8, "finite-size asymmetry", ok,
           f"{wins}/5 seeds favour x1; masses " + ", ".join(f"{a:.2f}/{b:.2f}" for a, b in pairs))


def test_criterion_09_ssa_exactness():
    N, x0, t = 50, 12, 1.0
    rate = SplitRateSpec("1/2*N^2", epsilon_sq=0.02)
    t0 = time.perf_counter()
    p = transient_distribution(DW, BERN, rate, N, x0, t)
    x = endpoint_distribution(DW, BERN, rate, x0, t, 100_000, 9, N=N)
    wall = time.perf_counter() - t0
    emp = np.bincount(x, minlength=N + 1) / x.size
    tv = 0.5 * float(np.abs(emp - p).sum())
    record(9, "SSA exactness", tv < 0.02 and wall < 30, f"total variation {tv:.4f} over 1e5 replicates in {wall:.1f}s")


def test_criterion_10_barrier_ordering():
    c = compare_barriers(DW, BERN)
    record(10, "barrier ordering", c.ordered and c.sandwich, c.statement())


def test_criterion_11_kernel_exactness():
    t0 = time.perf_counter()
    bad = []
    for kind in ("hg", "bin", "bern"):
        k = SplittingKernel(kind)
        for N in range(1, 201):
            for x in range(N + 1):
                w, den = pmf_counts(k, x, N)
                lo = next(i for i, v in enumerate(w) if v)
                if sum(w) != den or sum(y * v for y, v in enumerate(w)) != x * den:
                    bad.append((kind, N, x))
                if x in (0, N) and (w[x] != den or sum(w) != den):
                    bad.append((kind, N, x, "absorb"))
                if x in (0, N) and _sampling.draw_split(k.code, x, N, 0.999, k.cdf_table()) != x:
                    bad.append((kind, N, x, "sampler"))
                if kind == "hg":
                    # sum (y-x)^2 w_y (2N-1) == x(N-x) d, i.e. variance x(N-x)/(2N-1) exactly
                    if sum((y - x) ** 2 * v for y, v in enumerate(w[lo:], lo)) * (2 * N - 1) != x * (N - x) * den:
                        bad.append((kind, N, x, "variance"))
                    if N <= 40 and variance_exact(k, x, N) != Fraction(x * (N - x), 2 * N - 1):
                        bad.append((kind, N, x, "variance_exact"))
    wall = time.perf_counter() - t0
    record(11, "kernel exactness", not bad, f"{'no violations' if not bad else bad[:3]} over N <= 200 in {wall:.1f}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
