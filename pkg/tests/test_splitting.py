import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from splitswitch import _sampling
from splitswitch.splitting import (
    GammaExpr,
    SplitRateSpec,
    SplittingKernel,
    variance_limit_gap,
    limiting_variance_profile,
    pmf,
    pmf_exact,
    sample,
    upper_tail_mass,
    variance,
    variance_exact,
)

HG, BIN, BERN = SplittingKernel("hg"), SplittingKernel("bin"), SplittingKernel("bern")


def _draws(kernel, x, N, n, seed=0):
    u = np.random.default_rng(seed).random(n)
    cdf = kernel.cdf_table()
    return np.array([_sampling.draw_split(kernel.code, x, N, ui, cdf) for ui in u])


def test_hg_small_pmf():
    assert pmf_exact(HG, 1, 2) == [Fraction(1, 6), Fraction(4, 6), Fraction(1, 6)]
    assert np.allclose(pmf(HG, 1, 2), [1 / 6, 4 / 6, 1 / 6], atol=1e-15)


def test_closed_form_variances():
    assert variance_exact(HG, 2, 4) == Fraction(4, 7)
    assert variance(HG, 2, 4) == pytest.approx(4 / 7, rel=1e-15)
    assert variance_exact(BIN, 3, 6) == Fraction(3, 2)
    assert variance(BIN, 3, 6) == 1.5


@settings(max_examples=40)
@given(N=st.integers(2, 40), data=st.data(), kind=st.sampled_from(["hg", "bin", "bern"]))
def test_variance_closed_form_matches_exact_sum(N, data, kind):
    k = SplittingKernel(kind)
    x = data.draw(st.integers(0, N))
    assert abs(variance(k, x, N) - float(variance_exact(k, x, N))) < 1e-12 * max(1.0, N)


def test_bern_mean_over_many_draws():
    y = _draws(BERN, 37, 100, 10**6, seed=1)
    assert abs(y.mean() - 37) < 0.005
    assert set(np.unique(y)) == {36, 38}


@pytest.mark.parametrize("kind, x, N", [("hg", 7, 20), ("bin", 13, 30), ("hg", 400, 1000), ("bin", 3, 500)])
def test_sampler_matches_pmf(kind, x, N):
    k = SplittingKernel(kind)
    y = _draws(k, x, N, 200_000, seed=2)
    p = pmf(k, x, N)
    keep = p * y.size >= 5
    obs = np.bincount(y, minlength=N + 1)
    f_obs = np.append(obs[keep], obs[~keep].sum())
    f_exp = np.append(p[keep], p[~keep].sum()) * y.size
    if f_exp[-1] == 0:
        f_obs, f_exp = f_obs[:-1], f_exp[:-1]
    assert stats.chisquare(f_obs, f_exp).pvalue > 1e-3


@settings(max_examples=30)
@given(N=st.integers(1, 60), data=st.data(), kind=st.sampled_from(["hg", "bin", "bern"]))
def test_pmf_is_unbiased_and_absorbing(N, data, kind):
    k = SplittingKernel(kind)
    x = data.draw(st.integers(0, N))
    row = pmf_exact(k, x, N)
    assert sum(row) == 1
    assert sum(y * p for y, p in enumerate(row)) == x
    if x in (0, N):
        assert row[x] == 1


@pytest.mark.parametrize("kernel", [HG, BIN, BERN])
def test_variance_limit_gap_shrinks(kernel):
    g1, g2 = variance_limit_gap(kernel, 100), variance_limit_gap(kernel, 200)
    assert g1 / g2 >= 1.5 or g2 < 1e-14


def test_limits_share_half_x1mx():
    for k in (HG, BIN, BERN):
        assert limiting_variance_profile(k).sigma_sq(0.5) == 0.125


def test_hg_tail_bound():
    N, delta = 100, 0.2
    assert upper_tail_mass(HG, N, delta) <= 2 * math.exp(-2 * delta**2 * N)


def test_sample_reproducible_and_one_uniform():
    a = [sample(HG, 30, 60, np.random.default_rng(5)) for _ in range(3)]
    assert len(set(a)) == 1
    rng = np.random.default_rng(9)
    sample(BIN, 3, 10, rng)
    ref = np.random.default_rng(9)
    ref.random()
    assert rng.random() == ref.random()


def test_sample_boundary_absorbs():
    rng = np.random.default_rng(0)
    for k in (HG, BIN, BERN):
        assert sample(k, 0, 10, rng) == 0 and sample(k, 10, 10, rng) == 10


def test_kind_aliases():
    assert SplittingKernel("moran").kind == "bern"
    assert SplittingKernel("WF").kind == "bin"
    with pytest.raises(ValueError):
        SplittingKernel("poisson")


def _table(N, rows):
    t = np.zeros((N + 1, N + 1))
    t[0, 0] = t[N, N] = 1
    for x, r in rows.items():
        t[x] = r
    return t


def test_custom_kernel_accepted_and_sampled():
    t = _table(2, {1: [0.25, 0.5, 0.25]})
    k = SplittingKernel("custom", table=t)
    assert k.unit_step and k.N == 2
    y = _draws(k, 1, 2, 40_000, seed=3)
    assert abs(np.mean(y == 1) - 0.5) < 0.01


def test_custom_kernel_rejections():
    with pytest.raises(ValueError, match="biased"):
        SplittingKernel("custom", table=_table(2, {1: [0.5, 0.25, 0.25]}))
    with pytest.raises(ValueError, match="sum to 1"):
        SplittingKernel("custom", table=_table(2, {1: [0.3, 0.5, 0.3]}))
    bad = _table(2, {1: [0.25, 0.5, 0.25]})
    bad[0] = [0.5, 0.5, 0]
    with pytest.raises(ValueError, match="absorb"):
        SplittingKernel("custom", table=bad)
    with pytest.raises(ValueError, match="N=2"):
        pmf(SplittingKernel("custom", table=_table(2, {1: [0.25, 0.5, 0.25]})), 1, 3)
    with pytest.raises(NotImplementedError):
        limiting_variance_profile(SplittingKernel("custom", table=_table(2, {1: [0.25, 0.5, 0.25]})))


@pytest.mark.parametrize(
    "text, c, p, lg",
    [
        ("2", Fraction(2), 0, 0),
        ("1/2*N", Fraction(1, 2), 1, 0),
        ("0.5*N^2", Fraction(1, 2), 2, 0),
        ("3*N^2*log(N)", Fraction(3), 2, 1),
        ("1/2 * N^3", Fraction(1, 2), 3, 0),
        ("N^2", Fraction(1), 2, 0),
        ("N", Fraction(1), 1, 0),
        ("2e-4*N", Fraction(1, 5000), 1, 0),
    ],
)
def test_gamma_grammar(text, c, p, lg):
    g = GammaExpr.parse(text)
    assert (g.c, g.power, g.log_power) == (c, p, lg)
    assert GammaExpr.parse(str(g)) == g


@pytest.mark.parametrize("text", ["0*N", "-1*N", "2*M", "2*N^2*exp(N)", "", "2*log(N)", "N*2"])
def test_gamma_grammar_rejects(text):
    with pytest.raises(ValueError):
        GammaExpr.parse(text)


def test_rate_spec_shapes():
    r = SplitRateSpec("1/2*N^2", epsilon_sq=0.02)
    rates = r.rates(10, BERN)
    assert rates[0] == rates[10] == 0
    assert rates[5] == pytest.approx(0.02 * 50 * 0.25)
    assert np.all(SplitRateSpec("2*N").rates(10, HG) == 20)
