"""
Event-loop kernels for the direct-method SSA.

All kernels read uniforms from a caller-supplied buffer and return when it is
nearly exhausted, so the Python driver owns the RNG and the numba and plain
Python paths see the same stream.  An event consumes two uniforms (waiting time
and channel), plus one more when a split fires.

Channel layout: columns ``0..R-1`` of ``cum`` are the reactions, column ``R``
(present iff ``has_split``) is splitting.  ``cum[x, k]`` is the cumulative rate
up to and including channel ``k`` in state ``x``.
"""
import math

import numpy as np

from .._jit import njit
from .._sampling import draw_split

# status codes returned by run_chunk
DONE = 0
NEED_UNIFORMS = 1
SWITCH_FULL = 2
LOG_FULL = 3
FROZEN = 4
MAX_EVENTS = 5

# indices into the float state vector
F_T = 0
F_LABEL_T = 1
F_LAST_SWITCH = 2
# indices into the int state vector
I_X = 0
I_EVENTS = 1
I_UIDX = 2
I_SNAP = 3
I_LABEL = 4
I_NSW = 5
I_NLOG = 6


@njit(cache=True)
def _well(x, wells):
    if wells[0, 0] <= x <= wells[0, 1]:
        return 0
    if wells[1, 0] <= x <= wells[1, 1]:
        return 1
    return -1


@njit(cache=True)
def pick_channel(cum, x, target):
    K = cum.shape[1]
    for k in range(K):
        if target < cum[x, k]:
            return k
    # rounding: fall back on the last channel with positive rate
    for k in range(K - 1, -1, -1):
        prev = cum[x, k - 1] if k > 0 else 0.0
        if cum[x, k] > prev:
            return k
    return K - 1


@njit(cache=True, nogil=True)
def run_chunk(
    cum, deltas, has_split, split_kind, split_cdf, N, t_max, max_events,
    u, fs, ist, occ, snap_dt, snap_states, counts, wells,
    sw_time, sw_from, sw_to, sw_delta,
    log_on, log_t, log_x, log_tag,
):
    """Advance the chain until ``t_max`` or until a buffer needs servicing.

    ``fs``/``ist`` hold the resumable scalar state (see the ``F_*``/``I_*``
    indices).  Returns a status code.
    """
    t = fs[F_T]
    x = ist[I_X]
    ev = ist[I_EVENTS]
    ui = ist[I_UIDX]
    snap = ist[I_SNAP]
    label = ist[I_LABEL]
    nsw = ist[I_NSW]
    nlog = ist[I_NLOG]
    n_u = u.shape[0]
    n_snap = snap_states.shape[0]
    n_swcap = sw_time.shape[0]
    n_logcap = log_t.shape[0]
    K = cum.shape[1]
    R = K - 1 if has_split else K
    status = DONE

    while True:
        if t >= t_max:
            status = DONE
            break
        if max_events > 0 and ev >= max_events:
            status = MAX_EVENTS
            break
        if ui + 3 > n_u:
            status = NEED_UNIFORMS
            break
        if nsw >= n_swcap:
            status = SWITCH_FULL
            break
        if log_on and nlog >= n_logcap:
            status = LOG_FULL
            break
        total = cum[x, K - 1]
        if total <= 0.0:
            status = FROZEN
            break
        tau = -math.log1p(-u[ui]) / total
        target = u[ui + 1] * total
        ui += 2
        t_new = t + tau
        t_stop = t_new if t_new < t_max else t_max
        occ[x] += t_stop - t
        while snap < n_snap and snap * snap_dt < t_stop:
            snap_states[snap] = x
            snap += 1
        if t_new >= t_max:
            t = t_max
            status = DONE
            break
        k = pick_channel(cum, x, target)
        if k < R:
            y = x + deltas[k]
        else:
            y = draw_split(split_kind, x, N, u[ui], split_cdf)
            ui += 1
        t = t_new
        x = y
        ev += 1
        counts[k] += 1
        if log_on:
            log_t[nlog] = t
            log_x[nlog] = x
            log_tag[nlog] = k
            nlog += 1
        w = _well(x, wells)
        if w >= 0:
            if label < 0:
                label = w
                fs[F_LABEL_T] = t
                fs[F_LAST_SWITCH] = t
            elif w != label:
                sw_time[nsw] = t
                sw_from[nsw] = label
                sw_to[nsw] = w
                sw_delta[nsw] = t - fs[F_LAST_SWITCH]
                fs[F_LAST_SWITCH] = t
                nsw += 1
                label = w

    # snapshots at exactly t_max (and beyond the freeze point) hold the last state
    if status == DONE or status == FROZEN:
        while snap < n_snap and snap * snap_dt <= t_max * (1.0 + 1e-15):
            if status == FROZEN and snap * snap_dt > t:
                break
            snap_states[snap] = x
            snap += 1

    fs[F_T] = t
    ist[I_X] = x
    ist[I_EVENTS] = ev
    ist[I_UIDX] = ui
    ist[I_SNAP] = snap
    ist[I_LABEL] = label
    ist[I_NSW] = nsw
    ist[I_NLOG] = nlog
    return status


@njit(cache=True, nogil=True)
def endpoints_chunk(cum, deltas, has_split, split_kind, split_cdf, N, t_end, x0, u, out, ist, ft):
    """States at ``t_end`` for independent replicates drawn from one stream.

    ``ist = [replicate, x, uidx]`` and ``ft = [t]`` carry progress across
    refills.  Returns True once ``out`` is filled.
    """
    rep = ist[0]
    x = ist[1]
    ui = 0
    t = ft[0]
    n_u = u.shape[0]
    K = cum.shape[1]
    R = K - 1 if has_split else K
    n_rep = out.shape[0]
    finished = False
    while rep < n_rep:
        if ui + 3 > n_u:
            break
        total = cum[x, K - 1]
        if total <= 0.0:
            out[rep] = x
            rep += 1
            x = x0
            t = 0.0
            continue
        t += -math.log1p(-u[ui]) / total
        target = u[ui + 1] * total
        ui += 2
        if t >= t_end:
            out[rep] = x
            rep += 1
            x = x0
            t = 0.0
            continue
        k = pick_channel(cum, x, target)
        if k < R:
            x = x + deltas[k]
        else:
            x = draw_split(split_kind, x, N, u[ui], split_cdf)
            ui += 1
    if rep >= n_rep:
        finished = True
    ist[0] = rep
    ist[1] = x
    ft[0] = t
    return finished


@njit(cache=True, nogil=True)
def euler_maruyama(phi_c, sig2_c, scale, x, dt, i0, z, record_every, rec, r, bins, occ):
    """Clamped Euler-Maruyama for ``dX = phi(X)dt + scale*sqrt(sig2(X))dB``.

    ``phi_c``/``sig2_c`` are ascending polynomial coefficients, ``z`` a chunk
    of standard normals for steps ``i0, i0+1, ...``.  Every ``record_every``-th
    state is stored in ``rec`` at position ``r``; the time of each step is added
    to the occupation histogram ``occ``.  Returns the final state and ``r``.
    """
    sq = math.sqrt(dt)
    for i in range(z.shape[0]):
        b = min(int(x * bins), bins - 1)
        occ[b] += dt
        p = 0.0
        for c in range(phi_c.shape[0] - 1, -1, -1):
            p = p * x + phi_c[c]
        s2 = 0.0
        for c in range(sig2_c.shape[0] - 1, -1, -1):
            s2 = s2 * x + sig2_c[c]
        s = math.sqrt(s2) if s2 > 0.0 else 0.0
        x = x + p * dt + scale * s * sq * z[i]
        if x < 0.0:
            x = 0.0
        elif x > 1.0:
            x = 1.0
        if (i0 + i + 1) % record_every == 0 and r < rec.shape[0]:
            rec[r] = x
            r += 1
    return x, r


def build_rate_table(rates_reactions, split_rates):
    """Cumulative table from per-state reaction rates ``(N+1, R)`` and split rates ``(N+1,)`` or None."""
    if split_rates is None:
        full = np.asarray(rates_reactions, dtype=np.float64)
    else:
        sr = np.asarray(split_rates, dtype=np.float64).copy()
        sr[0] = sr[-1] = 0.0  # the kernel absorbs, so boundary splits are no-ops
        full = np.column_stack([rates_reactions, sr])
    return np.ascontiguousarray(np.cumsum(full, axis=1))
