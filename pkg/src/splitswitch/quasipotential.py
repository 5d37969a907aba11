"""
Regime classification and switching-barrier computations.

Two barrier predictors are computed for a double-well limiting drift:

* the diffusion barrier ``I = 2(A(y2) - A(yi)) = -int_{xi}^{x2} phi/(gamma~^2 sigma~^2 / 2)``,
  obtained either directly or through the change of variables ``g`` with
  ``g' = gamma~ sigma~(g)``, ``g(0) = 1/2``;
* the jump barrier ``iota = int_{xi}^{x2} log(r~_-/r~_+)`` of the birth-death chain.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .bd_analysis import boundary_rates, corcond_sums
from .reaction_net import ReactionNetwork, limiting_drift
from .splitting import SplitRateSpec, SplittingKernel, limiting_variance_profile, variance_profile

__all__ = [
    "NotDoubleWell",
    "QuadratureError",
    "EquilibriumSet",
    "find_equilibria",
    "GTransform",
    "g_transform",
    "DiffusionBarrier",
    "barrier_diffusion",
    "JumpBarrier",
    "barrier_jump",
    "limit_rates",
    "BarrierComparison",
    "compare_barriers",
    "epsilon_A",
    "RegimeResult",
    "classify_regime",
    "QuasipotentialReport",
    "analyze_quasipotential",
    "REGIME_ORDER",
]

QUAD_TOL = 1e-9
REGIME_ORDER = {"slow": 0, "diffusive": 1, "indeterminate": 2, "fast": 3}


def _HALF_X1MX(x):
    return 0.5 * x * (1 - x)


class NotDoubleWell(ValueError):
    def __init__(self, message, roots=()):
        self.roots = tuple(roots)
        super().__init__(f"{message}; roots in (0,1): {[float(r) for r in self.roots]}")


class QuadratureError(RuntimeError):
    pass


def _as_poly(phi) -> Polynomial:
    if isinstance(phi, Polynomial):
        return phi
    return Polynomial(np.asarray(phi, dtype=np.float64))


def _integrate(f, a, b, what: str) -> float:
    val, err = quad(f, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if not err <= 10 * QUAD_TOL * max(1.0, abs(val)):
        raise QuadratureError(f"{what}: quadrature did not converge (estimated error {err:.3g})")
    return float(val)


@dataclass(frozen=True)
class EquilibriumSet:
    x1: float
    x2: float
    x3: float
    slopes: tuple[float, float, float]


def _real_roots(p: Polynomial, grid: int = 4096) -> list[float]:
    """Roots in (0, 1) from sign changes on a grid, refined by bisection and Newton.

    Real critical points are added to the grid, so ``p`` is monotone on every
    cell and close roots cannot hide inside one cell.
    """
    dp = p.deriv()
    crit = [c.real for c in dp.roots() if abs(c.imag) < 1e-12 and 0.0 < c.real < 1.0] if dp.degree() > 0 else []
    xs = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid + 1), crit]))
    v = p(xs)
    roots = []
    for i in range(len(xs) - 1):
        a, b = xs[i], xs[i + 1]
        if v[i] == 0.0 and 0.0 < a < 1.0:
            roots.append(float(a))
            continue
        if v[i] * v[i + 1] < 0:
            r = brentq(p, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            for _ in range(3):
                d = dp(r)
                if d == 0:
                    break
                step = p(r) / d
                if not a <= r - step <= b:
                    break
                r -= step
            roots.append(float(r))
    # even-multiplicity roots do not change sign; look for them among critical points
    for c in dp.roots():
        if abs(c.imag) < 1e-12 and 0.0 < c.real < 1.0 and abs(p(c.real)) < 1e-12:
            if all(abs(c.real - r) > 1e-9 for r in roots):
                roots.append(float(c.real))
    return sorted(roots)


def find_equilibria(phi) -> EquilibriumSet:
    """Return ``x1 < x2 < x3`` with slopes ``(-, +, -)``, or raise :class:`NotDoubleWell`."""
    p = _as_poly(phi)
    roots = _real_roots(p)
    if len(roots) != 3:
        raise NotDoubleWell(f"expected 3 equilibria, found {len(roots)}", roots)
    dp = p.deriv()
    slopes = tuple(float(dp(r)) for r in roots)
    if not (slopes[0] < 0 < slopes[1] and slopes[2] < 0):
        raise NotDoubleWell(f"slope pattern {tuple(np.sign(slopes))} is not (-, +, -)", roots)
    return EquilibriumSet(roots[0], roots[1], roots[2], slopes)


@dataclass
class GTransform:
    """Tabulated solution of ``g' = gamma~ sigma~(g)``, ``g(0) = 1/2``, and its inverse ``h``."""

    y: np.ndarray
    gv: np.ndarray
    dg: np.ndarray
    step: float
    richardson_error: float
    _g: CubicHermiteSpline = field(repr=False)
    _h: CubicHermiteSpline = field(repr=False)

    def g(self, y):
        y = np.asarray(y, dtype=np.float64)
        if np.any(y < self.y[0]) or np.any(y > self.y[-1]):
            raise ValueError(f"y outside tabulated range [{self.y[0]:.6g}, {self.y[-1]:.6g}]")
        out = self._g(y)
        return out if out.ndim else float(out)

    def h(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self.gv[0]) or np.any(x > self.gv[-1]):
            raise ValueError(f"x outside tabulated range [{self.gv[0]:.3g}, {self.gv[-1]:.3g}]")
        out = self._h(x)
        return out if out.ndim else float(out)


def _rk4_branch(f, h, lo, hi, max_y):
    ys = [0.0]
    gs = [0.5]
    y, g = 0.0, 0.5
    while True:
        k1 = f(g)
        if k1 <= 0.0:
            raise ValueError(f"sigma vanishes at interior point g={g:.6g}; g would not be strictly increasing")
        k2 = f(g + 0.5 * h * k1)
        k3 = f(g + 0.5 * h * k2)
        k4 = f(g + h * k3)
        g_new = g + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if not lo <= g_new <= hi:
            break
        if g_new == g:
            # sigma decays to zero before the domain end: g stalls at an interior zero
            raise ValueError(f"sigma vanishes at interior point g={g:.6g}; g would not be strictly increasing")
        y += h
        g = g_new
        ys.append(y)
        gs.append(g)
        if abs(y) > max_y:
            raise ValueError("g did not reach the domain ends; sigma is too small somewhere")
    return np.array(ys), np.array(gs)


def g_transform(
    sigma_sq: Callable[[float], float],
    gamma_tilde: float = 1.0,
    domain: tuple[float, float] = (1e-6, 1 - 1e-6),
    step: float = 1e-4,
    max_y: float = 1e3,
) -> GTransform:
    """Integrate ``g' = gamma_tilde * sqrt(sigma_sq(g))`` from ``g(0) = 1/2`` with fixed-step RK4.

    The table stops where ``g`` would leave ``domain``.  A second pass at step
    ``2*step`` gives the Richardson estimate of the integration error.
    """
    lo, hi = domain
    gt = float(gamma_tilde)

    def f(x):
        s = sigma_sq(x)
        return gt * math.sqrt(s) if s > 0 else 0.0

    def table(h):
        yu, gu = _rk4_branch(f, h, lo, hi, max_y)
        yd, gd = _rk4_branch(f, -h, lo, hi, max_y)
        return np.concatenate([yd[:0:-1], yu]), np.concatenate([gd[:0:-1], gu])

    y, gv = table(step)
    y2, g2 = table(2 * step)
    # common nodes: every other point of the fine table, centred on y = 0
    i0 = int(np.argmin(np.abs(y)))
    j0 = int(np.argmin(np.abs(y2)))
    m = min(i0 // 2, j0, (len(y) - 1 - i0) // 2, len(y2) - 1 - j0)
    fine = gv[i0 - 2 * m : i0 + 2 * m + 1 : 2]
    coarse = g2[j0 - m : j0 + m + 1]
    rich = float(np.max(np.abs(fine - coarse)) / 15.0) if m > 0 else float("nan")
    dg = np.array([f(v) for v in gv])
    return GTransform(y, gv, dg, step, rich, CubicHermiteSpline(y, gv, dg), CubicHermiteSpline(gv, y, 1.0 / dg))


@dataclass(frozen=True)
class DiffusionBarrier:
    """``dA_i = A(y2) - A(yi)``; the rate functions are ``I_i = 2 dA_i``."""

    dA_1: float
    dA_3: float
    I_12: float
    I_32: float
    dA_1_gpath: float | None = None
    dA_3_gpath: float | None = None

    @property
    def A_y2(self) -> float:
        """``A(y2)`` with the convention ``A(y1) = 0``."""
        return self.dA_1

    def slow_rate(self, epsilon_sq: float, well: int = 1) -> float:
        """Predicted switching rate ``exp(-I_i / epsilon^2)`` out of well ``i``."""
        I = self.I_12 if well == 1 else self.I_32
        return math.exp(-I / epsilon_sq)


def barrier_diffusion(
    phi,
    sigma_sq: Callable[[float], float],
    gamma_tilde: float = 1.0,
    eq: EquilibriumSet | None = None,
    *,
    via_g: bool = True,
) -> DiffusionBarrier:
    """Diffusion barriers by direct quadrature and (optionally) along the g-transform."""
    p = _as_poly(phi)
    eq = eq or find_equilibria(p)
    g2 = float(gamma_tilde) ** 2

    def integrand(x):
        return p(x) / (g2 * sigma_sq(x))

    dA1 = -_integrate(integrand, eq.x1, eq.x2, "A(y2)-A(y1)")
    dA3 = -_integrate(integrand, eq.x3, eq.x2, "A(y2)-A(y3)")
    gp1 = gp3 = None
    if via_g:
        gt = g_transform(sigma_sq, gamma_tilde)

        def alpha(y):
            x = gt._g(y)
            return p(x) / (gamma_tilde * math.sqrt(sigma_sq(x)))

        y1, y2, y3 = (float(gt.h(v)) for v in (eq.x1, eq.x2, eq.x3))
        gp1 = -_integrate(alpha, y1, y2, "g-path A(y2)-A(y1)")
        gp3 = -_integrate(alpha, y3, y2, "g-path A(y2)-A(y3)")
    return DiffusionBarrier(dA1, dA3, 2 * dA1, 2 * dA3, gp1, gp3)


@dataclass(frozen=True)
class JumpBarrier:
    iota_12: float
    iota_32: float

    def jump_rate(self, N: int, well: int = 1) -> float:
        """Predicted rate ``exp(-N iota)`` of leaving well ``i``."""
        return math.exp(-N * (self.iota_12 if well == 1 else self.iota_32))


def barrier_jump(r_plus: Callable, r_minus: Callable, eq: EquilibriumSet) -> JumpBarrier:
    """``iota_i = int_{xi}^{x2} log(r_minus/r_plus) dx`` for ``i = 1, 3``."""

    def f(x):
        return math.log(r_minus(x) / r_plus(x))

    return JumpBarrier(_integrate(f, eq.x1, eq.x2, "iota_12"), _integrate(f, eq.x3, eq.x2, "iota_32"))


def _poly_sum(reactions) -> Callable[[float], float]:
    terms = [(float(r.kappa_tilde), r.a, r.b) for r in reactions]
    return lambda x: sum(k * x**a * (1 - x) ** b for k, a, b in terms)


def limit_rates(
    network: ReactionNetwork,
    kernel: SplittingKernel | None = None,
    gamma_tilde: float = 0.0,
) -> tuple[Callable, Callable]:
    """Limits of ``r_+(Nx)/N`` and ``r_-(Nx)/N``.

    Reaction terms are ``sum kappa~ x^a (1-x)^b`` over ``zeta = +1`` (resp. -1).
    With ``gamma_tilde > 0`` each side gains ``gamma~^2 sigma~^2(x) / 2``, the
    contribution of +/-1 splitting at ``N eps_N^2 -> 1``.
    """
    if not network.unit_steps:
        raise ValueError("limit birth-death rates need unit-step reactions")
    if any(not r.is_standard for r in network):
        raise ValueError("limit birth-death rates need standard scaling")
    up = _poly_sum([r for r in network if r.zeta == 1])
    down = _poly_sum([r for r in network if r.zeta == -1])
    if gamma_tilde and kernel is not None:
        s2 = limiting_variance_profile(kernel).sigma_sq
        half = 0.5 * gamma_tilde**2

        return (lambda x: up(x) + half * float(s2(x))), (lambda x: down(x) + half * float(s2(x)))
    return up, down


@dataclass(frozen=True)
class BarrierComparison:
    iota: tuple[float, float]
    I: tuple[float, float]
    lower: tuple[float, float]
    upper: tuple[float, float]
    ordered: bool
    sandwich: bool

    def statement(self) -> str:
        parts = []
        for k, name in enumerate(("x1", "x3")):
            parts.append(
                f"{name}: iota={self.iota[k]:.6g} <= I={self.I[k]:.6g} "
                f"({'ok' if self.iota[k] <= self.I[k] + 1e-8 else 'VIOLATED'}); "
                f"bounds [{self.lower[k]:.6g}, {self.upper[k]:.6g}]"
            )
        return "; ".join(parts)


def compare_barriers(network: ReactionNetwork, kernel: SplittingKernel, gamma_tilde: float = 1.0, tol: float = 1e-8) -> BarrierComparison:
    """Compare jump and diffusion barriers at ``N eps_N^2 -> 1``.

    Both use ``r~_+-`` with the splitting term ``gamma~^2 sigma~^2 / 2``.  The
    sandwich bounds replace ``log(1 - omega)`` by its elementary bounds; because
    the integral runs backwards from ``x3`` the two bounds swap roles there, so
    ``min(bounds) <= iota <= max(bounds)`` is what is checked.
    """
    phi = limiting_drift(network)
    eq = find_equilibria(phi)
    s2 = limiting_variance_profile(kernel).sigma_sq
    half = 0.5 * gamma_tilde**2
    rp, rm = limit_rates(network, kernel, gamma_tilde)
    jb = barrier_jump(rp, rm, eq)
    db = barrier_diffusion(phi, lambda x: float(s2(x)), gamma_tilde, eq, via_g=False)
    up = _poly_sum([r for r in network if r.zeta == 1])
    down = _poly_sum([r for r in network if r.zeta == -1])
    iotas = (jb.iota_12, jb.iota_32)
    Is = (db.I_12, db.I_32)
    lows, ups = [], []
    for xi in (eq.x1, eq.x3):
        b_minus = -_integrate(lambda x: phi(x) / (down(x) + half * float(s2(x))), xi, eq.x2, "sandwich (-1)")
        b_plus = -_integrate(lambda x: phi(x) / (up(x) + half * float(s2(x))), xi, eq.x2, "sandwich (+1)")
        lows.append(min(b_minus, b_plus))
        ups.append(max(b_minus, b_plus))
    ordered = all(i <= I + tol for i, I in zip(iotas, Is))
    sandwich = all(lo - tol <= i <= hi + tol for i, lo, hi in zip(iotas, lows, ups))
    return BarrierComparison(iotas, Is, tuple(lows), tuple(ups), ordered, sandwich)


def epsilon_A(network: ReactionNetwork, kernel: SplittingKernel | None, rate: SplitRateSpec | None, N: int) -> float:
    """Noise-to-drift ratio ``c_sigma2(N) / c_mu(N)``.

    ``c_sigma2 = sum_bal N^(a+b-2) kappa(N) + max_x gamma(x,N) N^-2 sigma_N^2(x)``,
    ``c_mu = sum_bia N^(a+b-1) kappa(N)``.  Raises if there are no biased reactions.
    """
    N = int(N)
    biased = network.biased
    if not biased:
        raise ZeroDivisionError("no biased reactions: c_mu = 0 and epsilon_A is undefined")
    c_mu = sum(N ** (r.a + r.b - 1) * r.kappa(N) for r in biased)
    c_s = sum(N ** (r.a + r.b - 2) * r.kappa(N) for r in network.balanced)
    if kernel is not None and rate is not None:
        c_s += float(np.max(rate.rates(N, kernel) * variance_profile(kernel, N))) / N**2
    return float(c_s / c_mu)


def _slope(Ns, vals) -> float:
    x = np.log(np.asarray(Ns, dtype=np.float64))
    with np.errstate(divide="ignore"):
        y = np.log(np.asarray(vals, dtype=np.float64))
    if not np.all(np.isfinite(y)):
        return float("-inf") if np.all(np.asarray(vals) == 0) else float("nan")
    return float(np.polyfit(x, y, 1)[0])


SLOPE_TOL = 0.1


@dataclass
class RegimeResult:
    regime: str
    eps_A: list[tuple[int, float]]
    eps_A_slope: float
    corcond_slopes: tuple[float, float, float] | None
    switching_states: str
    time_scale: str
    rationale: str

    def to_dict(self) -> dict:
        return asdict(self)


def classify_regime(network, kernel, rate, N_list: Sequence[int] = (100, 200, 400, 800)) -> RegimeResult:
    """Label the splitting regime from the log-log trend of ``epsilon_A`` across ``N_list``."""
    Ns = [int(n) for n in N_list]
    if len(Ns) < 3:
        raise ValueError("need at least 3 values of N to estimate a trend")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("N ladder must be strictly increasing")
    eps = [(n, epsilon_A(network, kernel, rate, n)) for n in Ns]
    slope = _slope(Ns, [v for _, v in eps])
    cc = None
    if slope == float("-inf") or slope < -SLOPE_TOL:
        regime = "slow"
        why = f"epsilon_A decreases (log-log slope {slope:.3g})"
    elif abs(slope) <= SLOPE_TOL:
        regime = "diffusive"
        why = f"epsilon_A is asymptotically constant (log-log slope {slope:.3g})"
    elif slope > SLOPE_TOL and kernel is not None and rate is not None:
        sums = np.array([corcond_sums(rate.shape_profile(n, kernel), rate.factor(n)) for n in Ns])
        cc = tuple(_slope(Ns, sums[:, k]) for k in range(3))
        if all(s <= -SLOPE_TOL for s in cc):
            regime = "fast"
            why = f"epsilon_A grows (slope {slope:.3g}) and the fast-regime sums decay (slopes {', '.join(f'{s:.3g}' for s in cc)})"
        else:
            regime = "indeterminate"
            why = f"epsilon_A grows (slope {slope:.3g}) but the fast-regime sums do not decay (slopes {', '.join(f'{s:.3g}' for s in cc)})"
    else:
        regime = "indeterminate"
        why = f"epsilon_A trend unclear (slope {slope:.3g})"
    if regime in ("slow", "diffusive"):
        states, scale = "interior equilibria {x1, x3}", "exponential in 1/eps^2 or N"
    elif regime == "fast":
        states, scale = "boundaries {0, 1}", "order one (boundary escape rates)"
    else:
        states, scale = "unknown", "unknown"
    return RegimeResult(regime, eps, slope, cc, states, scale, why)


@dataclass
class QuasipotentialReport:
    regime: RegimeResult
    equilibria: EquilibriumSet | None
    diffusion: DiffusionBarrier | None
    jump: JumpBarrier | None
    comparison: BarrierComparison | None
    epsilon_sq: float | None
    N: int | None
    fast_r01: float
    fast_r10: float
    note: str = ""

    def to_dict(self) -> dict:
        barriers = None
        preds: dict = {"fast_r01": self.fast_r01, "fast_r10": self.fast_r10}
        if self.diffusion is not None and self.jump is not None:
            barriers = {
                "I12": self.diffusion.I_12,
                "I32": self.diffusion.I_32,
                "iota12": self.jump.iota_12,
                "iota32": self.jump.iota_32,
                "A_y2": self.diffusion.A_y2,
                "A_y2_minus_A_y3": self.diffusion.dA_3,
            }
            if self.epsilon_sq is not None:
                preds["slow_rate"] = {
                    "epsilon_sq": self.epsilon_sq,
                    "from_x1": self.diffusion.slow_rate(self.epsilon_sq, 1),
                    "from_x3": self.diffusion.slow_rate(self.epsilon_sq, 3),
                }
            if self.N is not None:
                preds["jump_rate"] = {
                    "N": self.N,
                    "from_x1": self.jump.jump_rate(self.N, 1),
                    "from_x3": self.jump.jump_rate(self.N, 3),
                }
        out = {
            "schema_version": 1,
            "regime": self.regime.regime,
            "regime_detail": self.regime.to_dict(),
            "eps_A": [{"N": n, "value": v} for n, v in self.regime.eps_A],
            "equilibria": None if self.equilibria is None else asdict(self.equilibria),
            "barriers": barriers,
            "predictions": preds,
        }
        if self.comparison is not None:
            c = self.comparison
            out["comparison"] = {
                "iota": list(c.iota), "I": list(c.I), "lower": list(c.lower), "upper": list(c.upper),
                "iota_le_I": c.ordered, "sandwich_holds": c.sandwich, "statement": c.statement(),
            }
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def analyze_quasipotential(
    network: ReactionNetwork,
    kernel: SplittingKernel | None,
    rate: SplitRateSpec | None,
    N_list: Sequence[int] = (100, 200, 400, 800),
    *,
    gamma_tilde: float = 1.0,
    epsilon_sq: float | None = None,
    N: int | None = None,
    via_g: bool = True,
) -> QuasipotentialReport:
    """Regime label plus, for double-well drifts, both barrier sets and their comparison.

    The diffusion barrier uses the kernel's limiting variance (``x(1-x)/2`` for
    the built-ins) with ``gamma_tilde``; the jump barrier uses reaction rates
    only, i.e. the finite-size regime ``eps^2 << 1/N``.
    """
    regime = classify_regime(network, kernel, rate, N_list)
    r01, r10 = boundary_rates(network)
    if epsilon_sq is None and rate is not None:
        epsilon_sq = float(rate.epsilon_sq)
    note = ""
    eq = db = jb = cmp = None
    try:
        phi = limiting_drift(network)
        eq = find_equilibria(phi)
    except NotDoubleWell as exc:
        note = f"not double-well: {exc}"
    if eq is not None:
        try:
            s2 = limiting_variance_profile(kernel).sigma_sq
        except (NotImplementedError, AttributeError):
            # no kernel: use the limit shared by all built-in kernels
            s2 = _HALF_X1MX
        db = barrier_diffusion(phi, s2, gamma_tilde, eq, via_g=via_g)
        if network.unit_steps:
            rp, rm = limit_rates(network)
            jb = barrier_jump(rp, rm, eq)
            if kernel is not None and kernel.unit_step:
                cmp = compare_barriers(network, kernel, gamma_tilde)
        else:
            note = "jump barrier needs unit-step reactions"
    return QuasipotentialReport(regime, eq, db, jb, cmp, epsilon_sq, N, r01, r10, note)
