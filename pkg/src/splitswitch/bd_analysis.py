"""
Exact finite-N birth-death analysis.

When every reaction changes ``X_A`` by one and splitting is a +/-1 step, ``X_A``
is a birth-death chain on ``{0..N}`` with up rate ``r_plus[i]`` and down rate
``r_minus[i]``.  Hitting probabilities use the scale function
``phi(x) = sum_{i=1}^{x} prod_{j<i} r_minus[j]/r_plus[j]``; expected exit
times come from the first-difference recursion on ``f(i) = e_i - e_{i-1}``,
summed by parts into a subtraction-free form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .reaction_net import ReactionNetwork, propensity_table
from .splitting import SplitRateSpec, SplittingKernel, pmf

__all__ = [
    "DegenerateChain",
    "BirthDeathModel",
    "build",
    "hitting_prob",
    "hitting_probs",
    "expected_hitting_time",
    "expected_hitting_times",
    "oracle_solve",
    "bias_profile",
    "flip",
    "FastConditionRow",
    "FastConditionReport",
    "check_fast_conditions",
    "corcond_sums",
]


class DegenerateChain(ValueError):
    """An interior state cannot move (zero rate), or the linear system is singular."""


@dataclass(frozen=True)
class BirthDeathModel:
    """Rates over the full state range; ``r_plus[N] = r_minus[0] = 0``."""

    N: int
    r_plus: np.ndarray
    r_minus: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rp = np.asarray(self.r_plus, dtype=np.float64)
        rm = np.asarray(self.r_minus, dtype=np.float64)
        if rp.shape != (self.N + 1,) or rm.shape != (self.N + 1,):
            raise ValueError(f"rate vectors must have length N+1={self.N + 1}")
        if np.any(rp < 0) or np.any(rm < 0):
            raise ValueError("rates must be nonnegative")
        if rp[self.N] != 0 or rm[0] != 0:
            raise ValueError("r_plus[N] and r_minus[0] must be zero")
        object.__setattr__(self, "r_plus", rp)
        object.__setattr__(self, "r_minus", rm)

    @classmethod
    def from_interior(cls, r_plus, r_minus, **kw) -> "BirthDeathModel":
        """From ``r_plus[0..N-1]`` and ``r_minus[1..N]``."""
        rp = np.append(np.asarray(r_plus, dtype=np.float64), 0.0)
        rm = np.insert(np.asarray(r_minus, dtype=np.float64), 0, 0.0)
        return cls(len(rp) - 1, rp, rm, **kw)

    def check_interior(self):
        i = np.arange(1, self.N)
        bad = i[(self.r_plus[1 : self.N] <= 0) | (self.r_minus[1 : self.N] <= 0)]
        if bad.size:
            raise DegenerateChain(f"interior state {int(bad[0])} has a zero rate")


def build(network: ReactionNetwork, kernel: SplittingKernel | None, rate: SplitRateSpec | None, N: int) -> BirthDeathModel:
    """Combine reactions and +/-1 splitting into birth-death rates.

    ``r_plus(i) = sum_{zeta=+1} lambda(i) + gamma(i,N)/2`` and likewise for
    ``r_minus``; splitting does not act at ``0`` and ``N``.
    """
    bad = [str(r) for r in network if abs(r.zeta) != 1]
    if bad:
        raise ValueError(f"birth-death analysis needs unit steps; offending reaction(s): {'; '.join(bad)}")
    N = int(N)
    table = propensity_table(network, N)
    zeta = network.net_changes()
    rp = table[:, zeta == 1].sum(axis=1) if len(network) else np.zeros(N + 1)
    rm = table[:, zeta == -1].sum(axis=1) if len(network) else np.zeros(N + 1)
    split_up = np.zeros(N + 1)
    split_down = np.zeros(N + 1)
    if kernel is not None and rate is not None:
        if not kernel.unit_step:
            raise ValueError(
                f"splitting kernel {kernel.kind!r} makes multi-step jumps; "
                "birth-death analysis supports only the Bernoulli step kernel or custom +/-1 kernels"
            )
        g = rate.rates(N, kernel)
        for i in range(1, N):
            row = pmf(kernel, i, N)
            split_up[i] = g[i] * row[i + 1]
            split_down[i] = g[i] * row[i - 1]
    rp = rp + split_up
    rm = rm + split_down
    rp[N] = 0.0
    rm[0] = 0.0
    prov = {
        "reactions_up": [str(r) for r in network if r.zeta == 1],
        "reactions_down": [str(r) for r in network if r.zeta == -1],
        "splitting": None if kernel is None or rate is None else f"{kernel.kind}, gamma_N={rate.gamma_N}, eps^2={rate.epsilon_sq:g}",
    }
    return BirthDeathModel(N, rp, rm, prov)


def _kahan_cumsum(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    s = 0.0
    c = 0.0
    for k, v in enumerate(values):
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
        out[k] = s
    return out


def _log_ratios(model: BirthDeathModel) -> np.ndarray:
    """``L[i] = sum_{j=1}^{i-1} log(r_minus[j]/r_plus[j])`` for ``i = 1..N`` (index 0 unused)."""
    model.check_interior()
    N = model.N
    lr = np.log(model.r_minus[1:N]) - np.log(model.r_plus[1:N])
    L = np.zeros(N + 1)
    L[2:] = _kahan_cumsum(lr)
    return L


def _scale_terms(model: BirthDeathModel) -> tuple[np.ndarray, float]:
    """Terms ``w[i] = prod_{j<i} r_minus/r_plus`` scaled by ``exp(-shift)`` to avoid overflow."""
    L = _log_ratios(model)
    shift = float(L[1:].max())
    w = np.zeros(model.N + 1)
    w[1:] = np.exp(L[1:] - shift)
    return w, shift


def hitting_probs(model: BirthDeathModel) -> np.ndarray:
    """``pi[j] = P(hit N before 0 | X(0) = j)`` for ``j = 0..N``."""
    w, _ = _scale_terms(model)
    phi = np.zeros(model.N + 1)
    phi[1:] = _kahan_cumsum(w[1:])
    return phi / phi[model.N]


def hitting_prob(model: BirthDeathModel, j: int) -> float:
    if not 0 <= j <= model.N:
        raise ValueError(f"state {j} outside [0, {model.N}]")
    return float(hitting_probs(model)[j])


def _expected_times_recursion(model: BirthDeathModel) -> np.ndarray:
    """Direct first-difference recursion ``f(k) = f(1) P_k - S_k`` (cancels badly under strong bias)."""
    N = model.N
    L = _log_ratios(model)
    P = np.exp(L[1:])  # P_k, k = 1..N
    rp = model.r_plus
    S = np.zeros(N)
    for k in range(1, N):
        S[k] = S[k - 1] * model.r_minus[k] / rp[k] + 1.0 / rp[k]
    f = P * (S.sum() / P.sum()) - S
    e = np.zeros(N + 1)
    e[1:] = _kahan_cumsum(f)
    e[N] = 0.0
    return e


def expected_hitting_times(model: BirthDeathModel) -> np.ndarray:
    """``e[j] = E[time to reach {0, N} | X(0) = j]``.

    Solving the first-difference recursion ``f(k) = e_k - e_{k-1} = f(1) P_k - S_k``
    with the closure ``sum_k f(k) = 0`` gives ``f(1) = sum S_k / sum P_k``.
    Summed by parts this is the Green's-function form
    ``e_j = [t(j) sum_{k<=j} m_k s(k) + s(j) sum_{k>j} m_k t(k)] / s(N)`` with the
    scale ``s(k) = sum_{i<=k} P_i``, its tail ``t(k) = s(N) - s(k)`` and speed
    ``m_k = 1/(r_plus[k] P_{k+1})``.  All its terms are positive, so it is
    evaluated in log space without the cancellation of the raw recursion.
    """
    N = model.N
    if N == 1:
        return np.zeros(2)
    L = _log_ratios(model)
    logP = L[1:]  # log P_k for k = 1..N
    log_s = np.logaddexp.accumulate(logP)  # log s(k), k = 1..N
    log_t = np.full(N, -np.inf)  # log t(k), k = 1..N; t(N) = 0
    log_t[: N - 1] = np.logaddexp.accumulate(logP[:0:-1])[::-1]
    k = np.arange(1, N)
    log_m = -np.log(model.r_plus[1:N]) - L[2 : N + 1]
    a = log_m + log_s[k - 1]
    b = log_m + log_t[k - 1]
    pre = np.logaddexp.accumulate(a)  # sum over k <= j, j = 1..N-1
    post = np.full(N - 1, -np.inf)  # sum over j < k <= N-1
    if N > 2:
        post[:-1] = np.logaddexp.accumulate(b[:0:-1])[::-1]
    e = np.zeros(N + 1)
    e[1:N] = np.exp(log_t[k - 1] + pre - log_s[N - 1]) + np.exp(log_s[k - 1] + post - log_s[N - 1])
    return e


def expected_hitting_time(model: BirthDeathModel, j: int) -> float:
    if not 0 <= j <= model.N:
        raise ValueError(f"state {j} outside [0, {model.N}]")
    return float(expected_hitting_times(model)[j])


def _refined_solve(G, lu, b, max_iter=10):
    """LU solve plus iterative refinement with residuals in extended precision.

    Plain partial-pivoting LU is only normwise accurate, which leaves tiny
    hitting probabilities with ~1e-8 relative error; refining against a
    ``longdouble`` residual recovers them componentwise.
    """
    x = scipy.linalg.lu_solve(lu, b, check_finite=False)
    Gl = G.astype(np.longdouble)
    bl = b.astype(np.longdouble)
    for _ in range(max_iter):
        r = (bl - Gl @ x.astype(np.longdouble)).astype(np.float64)
        dx = scipy.linalg.lu_solve(lu, r, check_finite=False)
        x = x + dx
        if np.all(np.abs(dx) <= 1e-17 * np.abs(x)):
            break
    return x


def oracle_solve(model: BirthDeathModel, method: str = "gth") -> tuple[np.ndarray, np.ndarray]:
    """Hitting probabilities and exit times by directly solving the generator equations.

    ``G pi = 0`` (``pi_0 = 0``, ``pi_N = 1``) and ``G e = -1`` (``e_0 = e_N = 0``)
    on the interior.  ``method="gth"`` eliminates the tridiagonal system while
    computing each pivot as a sum of rates (no subtraction), which keeps tiny
    components accurate; ``method="dense"`` assembles the full matrix and uses
    a partial-pivoting LU solve with iterative refinement.  Limited to
    ``N <= 2000``.
    """
    N = model.N
    if N > 2000:
        raise ValueError("oracle_solve is limited to N <= 2000")
    model.check_interior()
    pi = np.zeros(N + 1)
    pi[N] = 1.0
    e = np.zeros(N + 1)
    if N < 2:
        return pi, e
    rp = model.r_plus
    rm = model.r_minus
    if method == "dense":
        n = N - 1
        G = np.zeros((n, n))
        idx = np.arange(n)
        G[idx, idx] = -(rp[1:N] + rm[1:N])
        G[idx[:-1], idx[:-1] + 1] = rp[1 : N - 1]
        G[idx[1:], idx[1:] - 1] = rm[2:N]
        b_pi = np.zeros(n)
        b_pi[-1] = -rp[N - 1]
        try:
            lu = scipy.linalg.lu_factor(G, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise DegenerateChain(f"singular generator: {exc}") from None
        if np.any(np.diag(lu[0]) == 0):
            raise DegenerateChain("singular generator")
        pi[1:N] = _refined_solve(G, lu, b_pi)
        e[1:N] = _refined_solve(G, lu, -np.ones(n))
        return pi, e
    if method != "gth":
        raise ValueError(f"unknown oracle method {method!r}")
    # forward elimination of -G: pivot d_i = r_plus(i) + leak_i, where leak_i is the
    # rate from i into the absorbing state 0 once states 1..i-1 are eliminated
    d = np.zeros(N)
    rhs_pi = np.zeros(N)
    rhs_e = np.zeros(N)
    leak = rm[1]
    d[1] = rp[1] + leak
    rhs_e[1] = 1.0
    for i in range(2, N):
        leak = rm[i] * leak / d[i - 1]
        d[i] = rp[i] + leak
        rhs_e[i] = 1.0 + rm[i] * rhs_e[i - 1] / d[i - 1]
    rhs_pi[N - 1] = rp[N - 1]
    # back substitution: d_i x_i - r_plus(i) x_{i+1} = rhs_i (x_N = 0 for both systems)
    xp = 0.0
    xe = 0.0
    for i in range(N - 1, 0, -1):
        xp = (rhs_pi[i] + (rp[i] * xp if i < N - 1 else 0.0)) / d[i]
        xe = (rhs_e[i] + rp[i] * xe) / d[i]
        pi[i] = xp
        e[i] = xe
    return pi, e


def bias_profile(model: BirthDeathModel) -> tuple[np.ndarray, float]:
    """``eps_N(i) = r_minus(i)/r_plus(i) - 1`` on the interior and ``sum |eps_N(i)|``."""
    model.check_interior()
    N = model.N
    eps = np.zeros(N + 1)
    eps[1:N] = model.r_minus[1:N] / model.r_plus[1:N] - 1.0
    return eps, float(np.abs(eps).sum())


def flip(model: BirthDeathModel) -> BirthDeathModel:
    """Relabel ``i -> N - i`` (up and down rates swap)."""
    return BirthDeathModel(model.N, model.r_minus[::-1].copy(), model.r_plus[::-1].copy(), dict(model.provenance))


def corcond_sums(shape: np.ndarray, gamma_N: float) -> tuple[float, float, float]:
    """The three fast-regime sums for a rate ``gamma_N * p_i``.

    ``(N/gamma) sum 1/p_i``, ``(1/gamma) sum i/p_i``, ``(1/gamma) sum (N-i)/p_i``
    over ``i = 1..N-1``.
    """
    N = len(shape) - 1
    i = np.arange(1, N, dtype=np.float64)
    inv = 1.0 / np.asarray(shape[1:N], dtype=np.float64)
    return (
        float(math.fsum(inv)) * N / gamma_N,
        float(math.fsum(i * inv)) / gamma_N,
        float(math.fsum((N - i) * inv)) / gamma_N,
    )


@dataclass(frozen=True)
class FastConditionRow:
    N: int
    sum1: float
    sum2: float
    sum3: float
    sum_abs_eps: float
    N_pi_1N: float
    N_pi_Nm1_0: float
    N_e_1: float
    r01_pred: float
    r10_pred: float


@dataclass
class FastConditionReport:
    rows: list[FastConditionRow]
    decreasing: dict[str, bool]
    to_zero: bool

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "rows": [r.__dict__ for r in self.rows],
            "decreasing": self.decreasing,
            "conditions_trend_to_zero": self.to_zero,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, default=float)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def boundary_rates(network: ReactionNetwork) -> tuple[float, float]:
    """Limit escape rates: sum of ``kappa_tilde`` over ``(0, b, +1)`` and over ``(a, 0, -1)`` reactions."""
    r01 = float(sum(r.kappa_tilde for r in network if r.a == 0 and r.zeta == 1))
    r10 = float(sum(r.kappa_tilde for r in network if r.b == 0 and r.zeta == -1))
    return r01, r10


def check_fast_conditions(network: ReactionNetwork, kernel: SplittingKernel, rate: SplitRateSpec, N_list) -> FastConditionReport:
    """Evaluate the fast-splitting sufficient conditions on an ``N`` ladder."""
    N_list = [int(n) for n in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N ladder must be strictly increasing")
    r01, r10 = boundary_rates(network)
    rows = []
    for N in N_list:
        s1, s2, s3 = corcond_sums(rate.shape_profile(N, kernel), rate.factor(N))
        model = build(network, kernel, rate, N)
        _, sabs = bias_profile(model)
        pi = hitting_probs(model)
        e = expected_hitting_times(model)
        rows.append(
            FastConditionRow(
                N=N, sum1=s1, sum2=s2, sum3=s3, sum_abs_eps=sabs,
                N_pi_1N=N * float(pi[1]), N_pi_Nm1_0=N * float(1.0 - pi[N - 1]),
                N_e_1=N * float(e[1]), r01_pred=r01, r10_pred=r10,
            )
        )
    dec = {}
    for name in ("sum1", "sum2", "sum3", "sum_abs_eps", "N_e_1"):
        vals = [getattr(r, name) for r in rows]
        dec[name] = all(b < a for a, b in zip(vals, vals[1:]))
    gaps = [abs(r.N_pi_1N - 1.0) for r in rows]
    dec["abs_N_pi_1N_minus_1"] = all(b < a for a, b in zip(gaps, gaps[1:]))
    to_zero = len(rows) >= 2 and all(dec[k] for k in ("sum1", "sum2", "sum3"))
    return FastConditionReport(rows, dec, to_zero)
