"""Transient master-equation solution for small chains (test oracle)."""
from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import expm_multiply

from ..reaction_net import ReactionNetwork, propensity_table
from ..splitting import SplitRateSpec, SplittingKernel, pmf

__all__ = ["generator_matrix", "transient_distribution"]


def generator_matrix(network: ReactionNetwork, kernel: SplittingKernel | None, rate: SplitRateSpec | None, N: int) -> np.ndarray:
    """Dense CTMC generator ``Q`` with ``Q[i, j]`` the rate ``i -> j``."""
    Q = np.zeros((N + 1, N + 1))
    table = propensity_table(network, N)
    for k, r in enumerate(network):
        for x in range(N + 1):
            if table[x, k] > 0:
                Q[x, x + r.zeta] += table[x, k]
    if kernel is not None and rate is not None:
        g = rate.rates(N, kernel)
        for x in range(1, N):
            Q[x] += g[x] * pmf(kernel, x, N)
    np.fill_diagonal(Q, 0.0)
    Q[np.diag_indices(N + 1)] = -Q.sum(axis=1)
    return Q


def transient_distribution(network, kernel, rate, N: int, x0: int, t: float) -> np.ndarray:
    """Law of ``X_A(t)`` from ``X_A(0) = x0``: ``p(t) = p(0) exp(Q t)``."""
    Q = generator_matrix(network, kernel, rate, N)
    p0 = np.zeros(N + 1)
    p0[x0] = 1.0
    p = expm_multiply(csr_matrix(Q.T) * t, p0)
    p = np.clip(p, 0.0, None)
    return p / p.sum()
