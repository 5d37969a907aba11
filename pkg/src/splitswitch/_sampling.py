"""JIT-able draws from the splitting distributions, driven by a supplied uniform."""
import math

from ._jit import njit

BERN = 0
BIN = 1
HG = 2
CUSTOM = 3


@njit(cache=True)
def lchoose(n, k):
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


@njit(cache=True)
def logpmf(kind, x, N, y):
    if kind == BIN:
        q = x / N
        return lchoose(N, y) + y * math.log(q) + (N - y) * math.log1p(-q)
    # hypergeometric split of the doubled content 2x, 2(N-x) into halves of N
    return lchoose(2 * x, y) + lchoose(2 * (N - x), N - y) - lchoose(2 * N, N)


@njit(cache=True)
def support(kind, x, N):
    if kind == BIN:
        return 0, N
    return max(0, 2 * x - N), min(2 * x, N)


@njit(cache=True)
def mode(kind, x, N):
    lo, hi = support(kind, x, N)
    if kind == BIN:
        m = int(math.floor((N + 1) * (x / N)))
    else:
        m = int(math.floor((N + 1.0) * (2 * x + 1.0) / (2 * N + 2.0)))
    return min(max(m, lo), hi)


@njit(cache=True)
def draw_multistep(kind, x, N, u):
    """Inverse-CDF draw over the support enumerated outward from the mode.

    Mass is accumulated in a fixed order (always the heavier neighbour next),
    so the draw is exact and costs O(sd) pmf evaluations instead of O(N).
    Near-ties (relative gap below 1e-12) go downward first; the HG pmf is
    symmetric about x, and an exact comparison would let last-ulp differences
    between libm implementations change the order.
    """
    if x <= 0 or x >= N:
        return x
    lo, hi = support(kind, x, N)
    m = mode(kind, x, N)
    acc = math.exp(logpmf(kind, x, N, m))
    if u < acc:
        return m
    dn = m - 1
    up = m + 1
    pd = math.exp(logpmf(kind, x, N, dn)) if dn >= lo else -1.0
    pu = math.exp(logpmf(kind, x, N, up)) if up <= hi else -1.0
    last = m
    while pd >= 0.0 or pu >= 0.0:
        if pu > pd * (1.0 + 1e-12):
            acc += pu
            last = up
            if u < acc:
                return up
            up += 1
            pu = math.exp(logpmf(kind, x, N, up)) if up <= hi else -1.0
        else:
            acc += pd
            last = dn
            if u < acc:
                return dn
            dn -= 1
            pd = math.exp(logpmf(kind, x, N, dn)) if dn >= lo else -1.0
    # rounding left u above the accumulated mass
    return last


@njit(cache=True)
def draw_custom(cdf, x, u):
    row = cdf[x]
    lo = 0
    hi = row.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if row[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def draw_split(kind, x, N, u, cdf):
    if x <= 0 or x >= N:
        return x
    if kind == BERN:
        return x - 1 if u < 0.5 else x + 1
    if kind == CUSTOM:
        return draw_custom(cdf, x, u)
    return draw_multistep(kind, x, N, u)
