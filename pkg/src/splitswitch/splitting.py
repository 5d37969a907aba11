"""
Unbiased splitting / resampling kernels and their rates.

A kernel is a family of distributions ``p[x, y] = P(X_A jumps from x to y)``
on ``{0..N}`` with ``sum_y y p[x, y] = x`` and absorbing boundaries.  Built-in
kernels:

``hg``
    hypergeometric: the doubled content ``(2x, 2N-2x)`` is split into two
    halves of ``N`` and one daughter is kept.
``bin``
    binomial (Wright-Fisher resampling).
``bern``
    single-molecule error, ``x -> x +/- 1`` with probability 1/2 (Moran).

The rate is factorised as ``gamma(x, N) = epsilon_sq * gamma(N) * shape(x/N)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import _sampling
from .reaction_net import as_fraction

__all__ = [
    "SplittingKernel",
    "GammaExpr",
    "SplitRateSpec",
    "LimitProfile",
    "pmf",
    "pmf_exact",
    "pmf_counts",
    "variance",
    "variance_exact",
    "variance_profile",
    "limiting_variance_profile",
    "sample",
    "variance_limit_gap",
    "upper_tail_mass",
]

KINDS = {"bern": _sampling.BERN, "bin": _sampling.BIN, "hg": _sampling.HG, "custom": _sampling.CUSTOM}
_ALIASES = {
    "bernoulli": "bern",
    "bernoullistep": "bern",
    "moran": "bern",
    "binomial": "bin",
    "wf": "bin",
    "hypergeometric": "hg",
}


@dataclass(frozen=True)
class SplittingKernel:
    """A splitting distribution family.

    ``kind`` is ``"hg"``, ``"bin"``, ``"bern"`` or ``"custom"``.  A custom kernel
    carries a full ``(N+1, N+1)`` pmf ``table`` for one fixed ``N`` and may carry
    its own limiting variance profile and the matching rate normalisation.
    """

    kind: str
    table: np.ndarray | None = field(default=None, repr=False, compare=False)
    sigma_sq_limit: Callable | None = field(default=None, repr=False, compare=False)
    rate_normalization: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in KINDS:
            raise ValueError(f"unknown splitting kind {self.kind!r}; expected one of {sorted(KINDS)}")
        object.__setattr__(self, "kind", kind)
        if kind == "custom":
            if self.table is None:
                raise ValueError("custom kernel needs a pmf table")
            t = np.array(self.table, dtype=np.float64)
            _check_custom_table(t)
            t.setflags(write=False)
            object.__setattr__(self, "table", t)

    @property
    def code(self) -> int:
        return KINDS[self.kind]

    @property
    def N(self) -> int | None:
        return None if self.table is None else self.table.shape[0] - 1

    @property
    def unit_step(self) -> bool:
        """Whether every split moves the state by at most one."""
        if self.kind == "bern":
            return True
        if self.kind == "custom":
            n = self.table.shape[0]
            i, j = np.nonzero(self.table)
            return bool(np.all(np.abs(i - j) <= 1)) and n > 0
        return False

    @property
    def default_shape(self) -> str:
        return "moran" if self.kind == "bern" else "constant"

    def check_N(self, N: int):
        if self.kind == "custom" and N != self.N:
            raise ValueError(f"custom kernel table is for N={self.N}, not N={N}")

    def cdf_table(self) -> np.ndarray:
        if self.kind != "custom":
            return np.zeros((1, 1))
        cdf = np.cumsum(self.table, axis=1)
        cdf[:, -1] = np.inf  # guard against rows summing to 1 - ulp
        return cdf


def _check_custom_table(t: np.ndarray):
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 2:
        raise ValueError("custom pmf table must be square (N+1, N+1) with N >= 1")
    if np.any(t < 0):
        raise ValueError("custom pmf table has negative entries")
    rows = t.sum(axis=1)
    bad = np.nonzero(np.abs(rows - 1.0) > 1e-12)[0]
    if bad.size:
        raise ValueError(f"custom pmf rows do not sum to 1 (first bad row x={bad[0]}, sum={rows[bad[0]]!r})")
    N = t.shape[0] - 1
    if t[0, 0] != 1.0 or t[N, N] != 1.0:
        raise ValueError("custom kernel must absorb at 0 and N (p[0,0] = p[N,N] = 1)")
    y = np.arange(N + 1, dtype=np.float64)
    mean = t @ y
    drift = np.abs(mean - y)
    worst = int(np.argmax(drift))
    # only exact unbiasedness is supported; float tables get a rounding allowance
    if drift[worst] > 1e-9 * max(1.0, float(N)):
        raise ValueError(
            f"custom kernel is biased at x={worst}: mean {mean[worst]!r}; "
            "asymptotically unbiased kernels are not supported"
        )


def _log_pmf_row(kind: str, x: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    if kind == "bin":
        y = np.arange(N + 1)
        q = x / N
        logp = gammaln(N + 1) - gammaln(y + 1) - gammaln(N - y + 1) + y * np.log(q) + (N - y) * np.log1p(-q)
        return y, logp
    lo, hi = max(0, 2 * x - N), min(2 * x, N)
    y = np.arange(lo, hi + 1)
    logp = (
        gammaln(2 * x + 1)
        - gammaln(y + 1)
        - gammaln(2 * x - y + 1)
        + gammaln(2 * (N - x) + 1)
        - gammaln(N - y + 1)
        - gammaln(2 * (N - x) - (N - y) + 1)
        - (gammaln(2 * N + 1) - 2 * gammaln(N + 1))
    )
    return y, logp


def pmf(kernel: SplittingKernel, x: int, N: int) -> np.ndarray:
    """Full pmf row ``p[x, 0..N]`` (log-gamma evaluation, safe for large N)."""
    _check_state(x, N)
    kernel.check_N(N)
    out = np.zeros(N + 1)
    if x == 0 or x == N:
        out[x] = 1.0
        return out
    if kernel.kind == "custom":
        return kernel.table[x].copy()
    if kernel.kind == "bern":
        out[x - 1] = out[x + 1] = 0.5
        return out
    y, logp = _log_pmf_row(kernel.kind, x, N)
    out[y] = np.exp(logp)
    return out


def pmf_counts(kernel: SplittingKernel, x: int, N: int) -> tuple[list[int], int]:
    """Integer weights ``w`` and common denominator ``d`` with ``p[x, y] = w[y] / d``."""
    _check_state(x, N)
    w = [0] * (N + 1)
    if kernel.kind == "bern":
        den = 2
        if x == 0 or x == N:
            w[x] = den
        else:
            w[x - 1] = w[x + 1] = 1
    elif kernel.kind == "bin":
        den = N**N
        for y in range(N + 1):
            w[y] = math.comb(N, y) * x**y * (N - x) ** (N - y)
    elif kernel.kind == "hg":
        den = math.comb(2 * N, N)
        for y in range(max(0, 2 * x - N), min(2 * x, N) + 1):
            w[y] = math.comb(2 * x, y) * math.comb(2 * N - 2 * x, N - y)
    else:
        raise ValueError("exact pmf is only available for built-in kernels")
    return w, den


def pmf_exact(kernel: SplittingKernel, x: int, N: int) -> list[Fraction]:
    """Exact rational pmf row for the built-in kernels."""
    w, den = pmf_counts(kernel, x, N)
    return [Fraction(v, den) for v in w]


def variance(kernel: SplittingKernel, x: int, N: int) -> float:
    """Second central moment ``sigma_N^2(x) = sum_y (y-x)^2 p[x, y]``."""
    _check_state(x, N)
    if x == 0 or x == N:
        return 0.0
    if kernel.kind == "hg":
        return x * (N - x) / (2 * N - 1)
    if kernel.kind == "bin":
        return x * (N - x) / N
    if kernel.kind == "bern":
        return 1.0
    kernel.check_N(N)
    y = np.arange(N + 1)
    return float(np.dot((y - x) ** 2, kernel.table[x]))


def variance_exact(kernel: SplittingKernel, x: int, N: int) -> Fraction:
    """Variance by exact summation over the rational pmf."""
    return sum(((y - x) ** 2 * p for y, p in enumerate(pmf_exact(kernel, x, N)) if p), Fraction(0))


def variance_profile(kernel: SplittingKernel, N: int) -> np.ndarray:
    """``sigma_N^2(x)`` for ``x = 0..N``."""
    x = np.arange(N + 1, dtype=np.float64)
    if kernel.kind == "hg":
        v = x * (N - x) / (2 * N - 1)
    elif kernel.kind == "bin":
        v = x * (N - x) / N
    elif kernel.kind == "bern":
        v = np.ones(N + 1)
    else:
        kernel.check_N(N)
        y = np.arange(N + 1, dtype=np.float64)
        v = ((y[None, :] - x[:, None]) ** 2 * kernel.table).sum(axis=1)
    v[0] = v[N] = 0.0
    return v


@dataclass(frozen=True)
class LimitProfile:
    """Limiting variance ``sigma_tilde^2`` and the rate that makes the rescaled variance converge to it."""

    sigma_sq: Callable[[np.ndarray], np.ndarray]
    rate: Callable[[float, int, int], float]  # (gamma_tilde_sq, x, N) -> gamma(x, N)
    rate_text: str


def _half_x1mx(x):
    if not isinstance(x, float):
        x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 - x)


def limiting_variance_profile(kernel: SplittingKernel) -> LimitProfile:
    """``sigma_tilde^2(x) = x(1-x)/2`` for all built-ins, plus the matching rate."""
    if kernel.kind == "hg":
        return LimitProfile(_half_x1mx, lambda g2, x, N: g2 * N, "gamma_tilde^2 * N")
    if kernel.kind == "bin":
        return LimitProfile(_half_x1mx, lambda g2, x, N: 0.5 * g2 * N, "gamma_tilde^2 * N / 2")
    if kernel.kind == "bern":
        return LimitProfile(
            _half_x1mx,
            lambda g2, x, N: 0.5 * g2 * N * N * (x / N) * (1 - x / N),
            "gamma_tilde^2 * N^2 * (x/N)(1-x/N) / 2",
        )
    if kernel.sigma_sq_limit is None or kernel.rate_normalization is None:
        raise NotImplementedError("custom kernels must supply sigma_sq_limit and rate_normalization")
    return LimitProfile(kernel.sigma_sq_limit, kernel.rate_normalization, "user supplied")


def sample(kernel: SplittingKernel, x: int, N: int, rng: np.random.Generator) -> int:
    """One post-split state; consumes exactly one uniform from ``rng``."""
    _check_state(x, N)
    kernel.check_N(N)
    u = rng.random()
    return int(_sampling.draw_split(kernel.code, int(x), int(N), u, kernel.cdf_table()))


def variance_limit_gap(kernel: SplittingKernel, N: int, gamma_tilde_sq: float = 1.0) -> float:
    """``max_x |gamma(x,N) N^-2 sigma_N^2(x) - gamma_tilde^2 sigma_tilde^2(x/N)|``."""
    prof = limiting_variance_profile(kernel)
    x = np.arange(N + 1, dtype=np.float64)
    rate = np.array([prof.rate(gamma_tilde_sq, xi, N) for xi in x])
    lhs = rate * variance_profile(kernel, N) / N**2
    return float(np.max(np.abs(lhs - gamma_tilde_sq * prof.sigma_sq(x / N))))


def upper_tail_mass(kernel: SplittingKernel, N: int, delta: float) -> float:
    """``max_x sum_{y >= x + N delta} p[x, y]``."""
    worst = 0.0
    for x in range(1, N):
        row = pmf(kernel, x, N)
        start = int(math.ceil(x + N * delta - 1e-12))
        if start <= N:
            worst = max(worst, float(row[start:].sum()))
    return worst


def _check_state(x, N):
    if not 0 <= x <= N:
        raise ValueError(f"state {x} outside [0, {N}]")


_GAMMA = re.compile(
    r"^\s*(?:(?P<c>[0-9]*\.?[0-9]+(?:[eE][+-]?\d+)?(?:/[0-9]+)?)\s*\*\s*)?"
    r"(?P<n>N(?:\s*\^\s*(?P<p>\d+))?)?"
    r"(?P<log>\s*\*\s*log\(\s*N\s*\))?\s*$"
)
_CONST = re.compile(r"^\s*[0-9]*\.?[0-9]+(?:[eE][+-]?\d+)?(?:/[0-9]+)?\s*$")


@dataclass(frozen=True)
class GammaExpr:
    """State-independent rate factor ``c * N**power * log(N)**log_power``."""

    c: Fraction
    power: int = 0
    log_power: int = 0

    @classmethod
    def parse(cls, text) -> "GammaExpr":
        if isinstance(text, GammaExpr):
            return text
        if isinstance(text, (int, float, Fraction)):
            return cls(as_fraction(text))
        text = str(text)
        if _CONST.match(text):
            cs, power, log_power = text.strip(), 0, 0
        else:
            m = _GAMMA.match(text)
            if m is None or m.group("n") is None:
                raise ValueError(
                    f"cannot parse gamma_N {text!r}; expected c, c*N, c*N^2, c*N^2*log(N) or c*N^3"
                )
            cs = m.group("c") or "1"
            power = int(m.group("p")) if m.group("p") else 1
            log_power = 1 if m.group("log") else 0
        c = Fraction(cs.split("/")[0]) / int(cs.split("/")[1]) if "/" in cs else as_fraction(cs)
        if c <= 0:
            raise ValueError("gamma_N coefficient must be positive")
        return cls(c, power, log_power)

    def __call__(self, N) -> float:
        return float(self.c) * float(N) ** self.power * math.log(N) ** self.log_power

    def __str__(self):
        c = str(self.c.numerator) if self.c.denominator == 1 else f"{self.c.numerator}/{self.c.denominator}"
        s = c
        if self.power == 1:
            s += "*N"
        elif self.power > 1:
            s += f"*N^{self.power}"
        if self.log_power:
            s += "*log(N)"
        return s


@dataclass(frozen=True)
class SplitRateSpec:
    """``gamma(x, N) = epsilon_sq * gamma_N(N) * shape(x/N)``.

    ``shape`` is ``"constant"`` (1) or ``"moran"`` (``(x/N)(1-x/N)``); ``None``
    picks the kernel's natural shape when the spec is bound to a kernel.
    """

    gamma_N: GammaExpr
    shape: str | None = None
    epsilon_sq: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "gamma_N", GammaExpr.parse(self.gamma_N))
        if self.shape not in (None, "constant", "moran"):
            raise ValueError(f"unknown rate shape {self.shape!r}")
        if not self.epsilon_sq > 0:
            raise ValueError("epsilon_sq must be positive")

    def resolved_shape(self, kernel: SplittingKernel) -> str:
        return self.shape or kernel.default_shape

    def factor(self, N) -> float:
        """State-independent part ``epsilon_sq * gamma_N(N)``."""
        return float(self.epsilon_sq) * self.gamma_N(N)

    def shape_profile(self, N: int, kernel: SplittingKernel) -> np.ndarray:
        """``p_i`` for ``i = 0..N``."""
        i = np.arange(N + 1, dtype=np.float64)
        if self.resolved_shape(kernel) == "moran":
            return (i / N) * (1.0 - i / N)
        return np.ones(N + 1)

    def rates(self, N: int, kernel: SplittingKernel) -> np.ndarray:
        """``gamma(x, N)`` for ``x = 0..N``."""
        return self.factor(N) * self.shape_profile(N, kernel)
