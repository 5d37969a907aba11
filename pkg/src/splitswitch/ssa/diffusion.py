"""Euler-Maruyama integration of the limiting diffusion (comparison tool)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from . import _kernels as K

__all__ = ["DiffusionPath", "simulate_diffusion"]


@dataclass
class DiffusionPath:
    times: np.ndarray
    states: np.ndarray
    bin_edges: np.ndarray
    occupation: np.ndarray  # time-weighted mass per bin
    dt: float

    def mass_within(self, centers, radius: float) -> float:
        mid = 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])
        hit = np.zeros(mid.shape, dtype=bool)
        for c in np.atleast_1d(centers):
            hit |= np.abs(mid - c) <= radius
        return float(self.occupation[hit].sum())


def _coeffs(p) -> np.ndarray:
    if isinstance(p, Polynomial):
        return np.asarray(p.coef, dtype=np.float64)
    return np.atleast_1d(np.asarray(p, dtype=np.float64))


def simulate_diffusion(
    phi,
    sigma_sq,
    epsilon: float,
    x0: float,
    t_max: float,
    dt: float = 1e-4,
    seed=0,
    *,
    gamma_tilde: float = 1.0,
    n_records: int = 10_000,
    bins: int = 100,
    chunk: int = 1 << 20,
) -> DiffusionPath:
    """``dX = phi(X) dt + epsilon * gamma_tilde * sqrt(sigma_sq(X)) dB`` clamped to [0, 1].

    ``phi`` and ``sigma_sq`` are polynomials (``Polynomial`` or ascending
    coefficients).  States are recorded on an even grid of about ``n_records``
    points.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0, 1]")
    phi_c = _coeffs(phi)
    sig_c = _coeffs(sigma_sq)
    n_steps = int(round(t_max / dt))
    every = max(1, n_steps // max(1, n_records - 1))
    n_rec = n_steps // every + 1
    rec = np.empty(n_rec)
    rec[0] = x0
    r = 1
    occ = np.zeros(bins)
    rng = np.random.Generator(np.random.PCG64(seed))
    x = float(x0)
    scale = float(epsilon) * float(gamma_tilde)
    done = 0
    while done < n_steps:
        m = min(chunk, n_steps - done)
        z = rng.standard_normal(m) if scale != 0.0 else np.zeros(m)
        x, r = K.euler_maruyama(phi_c, sig_c, scale, x, float(dt), done, z, every, rec, r, bins, occ)
        done += m
    total = occ.sum()
    return DiffusionPath(
        times=np.arange(r) * every * dt,
        states=rec[:r].copy(),
        bin_edges=np.linspace(0.0, 1.0, bins + 1),
        occupation=occ / total if total > 0 else occ,
        dt=float(dt),
    )
