"""
Two-species conserved mass-action reaction systems.

Every reaction has the form ``aA + bB -> (a+zeta)A + (b-zeta)B`` with
``-a <= zeta <= b``, so the state is the single count ``x = X_A`` in ``0..N``
and ``X_B = N - x``.  The rate constant is ``kappa(N) = kappa_tilde * N**s``
where ``s`` defaults to the standard scaling ``1 - (a+b)``.

Rate constants and scaling exponents are kept as :class:`fractions.Fraction`
so that balanced-group detection and the limiting drift are exact.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "Reaction",
    "ReactionNetwork",
    "Partition",
    "BalanceError",
    "CheckResult",
    "ValidationReport",
    "SSA_CHECKS",
    "as_fraction",
    "scaled_falling_factorial",
    "falling_factorial",
    "propensity",
    "propensity_table",
    "classify",
    "limiting_drift",
    "limiting_drift_exact",
    "finite_drift",
    "validate",
]

# tolerance for balance sums when an input could not be represented exactly
BALANCE_TOL = 1e-12


class BalanceError(ValueError):
    """A declared balanced group does not cancel."""


def as_fraction(value) -> Fraction:
    """Convert ints, rational strings ("16/3"), decimals or floats to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a rate constant")
    if isinstance(value, (int, str)):
        return Fraction(value.strip() if isinstance(value, str) else value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        # shortest repr round-trips, so "0.1" stays 1/10 rather than the binary expansion
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class Reaction:
    """``aA + bB -> (a+zeta)A + (b-zeta)B`` at rate ``kappa_tilde * N**scale * (x)_a (N-x)_b``."""

    a: int
    b: int
    zeta: int
    kappa_tilde: Fraction
    scale: Fraction | None = None

    def __post_init__(self):
        for name in ("a", "b", "zeta"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.a < 0 or self.b < 0:
            raise ValueError("reactant counts must be nonnegative")
        if self.a + self.b == 0:
            raise ValueError("a reaction needs at least one reactant")
        if not -self.a <= self.zeta <= self.b:
            raise ValueError(
                f"zeta={self.zeta} outside {{-a..b}} = {{{-self.a}..{self.b}}}: "
                "products would violate the conservation law"
            )
        k = as_fraction(self.kappa_tilde)
        if k <= 0:
            raise ValueError(f"kappa_tilde must be positive, got {k}")
        object.__setattr__(self, "kappa_tilde", k)
        s = Fraction(1 - (self.a + self.b)) if self.scale is None else as_fraction(self.scale)
        object.__setattr__(self, "scale", s)

    @property
    def order(self) -> int:
        return self.a + self.b

    @property
    def standard_scale(self) -> Fraction:
        return Fraction(1 - self.order)

    @property
    def is_standard(self) -> bool:
        return self.scale == self.standard_scale

    def kappa(self, N) -> float:
        """Rate constant ``kappa(N) = kappa_tilde * N**s``."""
        return float(self.kappa_tilde) * float(N) ** float(self.scale)

    @property
    def key(self) -> tuple:
        return (self.a, self.b, self.zeta, self.scale)

    def __str__(self):
        from .dsl import format_reaction

        return format_reaction(self)


@dataclass(frozen=True)
class Partition:
    balanced: tuple[int, ...]
    biased: tuple[int, ...]
    # index groups, one per (a, b, scale) class that cancels
    groups: tuple[tuple[int, ...], ...] = ()


@dataclass(frozen=True)
class ReactionNetwork:
    """An ordered, immutable list of reactions.

    The capacity ``N`` is a run parameter and is passed to each operation.
    ``declared_balanced`` optionally lists index groups the user asserts to be
    balanced; :func:`classify` checks them.
    """

    reactions: tuple[Reaction, ...]
    declared_balanced: tuple[tuple[int, ...], ...] | None = None
    _partition: Partition | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "reactions", tuple(self.reactions))
        if self.declared_balanced is not None:
            object.__setattr__(
                self, "declared_balanced", tuple(tuple(int(i) for i in g) for g in self.declared_balanced)
            )

    def __len__(self):
        return len(self.reactions)

    def __iter__(self):
        return iter(self.reactions)

    def __getitem__(self, i):
        return self.reactions[i]

    @property
    def partition(self) -> Partition:
        if self._partition is None:
            object.__setattr__(self, "_partition", classify(self, self.declared_balanced))
        return self._partition

    @property
    def balanced(self) -> list[Reaction]:
        return [self.reactions[i] for i in self.partition.balanced]

    @property
    def biased(self) -> list[Reaction]:
        return [self.reactions[i] for i in self.partition.biased]

    @property
    def unit_steps(self) -> bool:
        return all(abs(r.zeta) == 1 for r in self.reactions)

    def net_changes(self) -> np.ndarray:
        return np.array([r.zeta for r in self.reactions], dtype=np.int64)


def falling_factorial(x, c: int):
    """Integer falling factorial ``x (x-1) ... (x-c+1)``; ``1`` for ``c = 0``.

    Exact for Python ints; broadcasts (as float64) for numpy arrays.
    """
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        out = 1
        for k in range(c):
            out *= int(x) - k
        return out
    x = np.asarray(x, dtype=np.float64)
    out = np.ones_like(x)
    for k in range(c):
        out = out * (x - k)
    return out


def scaled_falling_factorial(z, c: int, N: int):
    """``(z)_{c,N} = z (z - 1/N) ... (z - (c-1)/N)``, equal to ``N**-c (N z)_c``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if isinstance(z, Fraction):
        out = Fraction(1)
        for k in range(c):
            out *= z - Fraction(k, N)
        return out
    z = np.asarray(z, dtype=np.float64)
    out = np.ones_like(z)
    for k in range(c):
        out = out * (z - k / N)
    return out if out.ndim else float(out)


def propensity(r: Reaction, x, N: int):
    """Mass-action rate ``kappa(N) (x)_a (N-x)_b``; zero when ``x < a`` or ``N - x < b``."""
    if isinstance(x, (int, np.integer)):
        if not 0 <= x <= N:
            raise ValueError(f"state {x} outside [0, {N}]")
        return r.kappa(N) * float(falling_factorial(int(x), r.a)) * float(falling_factorial(N - int(x), r.b))
    x = np.asarray(x)
    # falling factorials of integers vanish automatically when x < a or N-x < b
    return r.kappa(N) * falling_factorial(x, r.a) * falling_factorial(N - x, r.b)


def propensity_table(network: ReactionNetwork, N: int) -> np.ndarray:
    """Rates of every reaction at every state, shape ``(N+1, R)``."""
    x = np.arange(N + 1, dtype=np.float64)
    table = np.empty((N + 1, len(network)), dtype=np.float64)
    for k, r in enumerate(network):
        table[:, k] = propensity(r, x, N)
    return table


def classify(network: ReactionNetwork, declared: Sequence[Sequence[int]] | None = None) -> Partition:
    """Split reactions into balanced and biased sets.

    Reactions are grouped by identical ``(a, b, scale)``; a group is balanced
    iff ``sum(zeta * kappa_tilde) == 0`` over the whole group (exact rationals).
    Reactions with different N-scaling can never cancel for all N, so the
    scaling exponent is part of the grouping key.

    Raises :class:`BalanceError` if a user-declared group does not cancel.
    """
    reactions = network.reactions
    if declared:
        for g in declared:
            members = [reactions[i] for i in g]
            keys = {(r.a, r.b, r.scale) for r in members}
            if len(keys) != 1:
                raise BalanceError(f"declared balanced group {tuple(g)} mixes reactant classes {sorted(keys)}")
            total = sum(r.zeta * r.kappa_tilde for r in members)
            if total != 0:
                raise BalanceError(f"declared balanced group {tuple(g)} has sum(zeta*kappa) = {total} != 0")

    classes: dict[tuple, list[int]] = defaultdict(list)
    for i, r in enumerate(reactions):
        classes[(r.a, r.b, r.scale)].append(i)

    balanced: set[int] = set()
    groups = []
    for key in sorted(classes, key=lambda k: (k[0], k[1], k[2])):
        idx = classes[key]
        total = sum(reactions[i].zeta * reactions[i].kappa_tilde for i in idx)
        if total == 0 and any(reactions[i].zeta != 0 for i in idx):
            balanced.update(idx)
            groups.append(tuple(idx))
    bal = tuple(sorted(balanced))
    bia = tuple(i for i in range(len(reactions)) if i not in balanced)
    return Partition(balanced=bal, biased=bia, groups=tuple(groups))


def _binomial_poly(a: int, b: int) -> list[Fraction]:
    """Ascending coefficients of ``x**a (1-x)**b``."""
    coef = [Fraction(0)] * (a + b + 1)
    for k in range(b + 1):
        coef[a + k] += Fraction(math.comb(b, k) * (-1) ** k)
    return coef


def limiting_drift_exact(network: ReactionNetwork) -> tuple[Fraction, ...]:
    """Exact ascending coefficients of ``sum_bia zeta kappa_tilde x**a (1-x)**b``."""
    biased = network.biased
    nonstd = [r for r in biased if not r.is_standard]
    if nonstd:
        raise ValueError(
            "limiting drift needs standard scaling s = 1-(a+b) on biased reactions; "
            f"nonstandard: {', '.join(str(r) for r in nonstd)}"
        )
    deg = max((r.order for r in biased), default=0)
    coef = [Fraction(0)] * (deg + 1)
    for r in biased:
        for k, c in enumerate(_binomial_poly(r.a, r.b)):
            coef[k] += r.zeta * r.kappa_tilde * c
    while len(coef) > 1 and coef[-1] == 0:
        coef.pop()
    return tuple(coef)


def limiting_drift(network: ReactionNetwork) -> Polynomial:
    """The N -> infinity drift of ``X_A / N`` as a numpy Polynomial on [0, 1]."""
    return Polynomial([float(c) for c in limiting_drift_exact(network)])


def finite_drift(network: ReactionNetwork, N: int, x):
    """Finite-N drift ``F_N(x) = sum_bia N**(a+b-1) zeta kappa(N) (x)_{a,N} (1-x)_{b,N}``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for r in network.biased:
        out = out + (
            float(N) ** (r.order - 1)
            * r.zeta
            * r.kappa(N)
            * scaled_falling_factorial(x, r.a, N)
            * scaled_falling_factorial(1.0 - x, r.b, N)
        )
    return out


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    witnesses: tuple[int, ...] = ()


# checks the simulator refuses to run without
SSA_CHECKS = frozenset({"boundary_closed", "escape_from_0", "escape_from_N"})


@dataclass(frozen=True)
class ValidationReport:
    N: int
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def usable_for_ssa(self) -> bool:
        return all(c.passed for c in self.checks if c.name in SSA_CHECKS)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "ok": self.ok,
            "usable_for_ssa": self.usable_for_ssa,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail, "witnesses": list(c.witnesses)}
                for c in self.checks
            ],
        }


def validate(network: ReactionNetwork, N: int | None = None) -> ValidationReport:
    """Check boundary behaviour and balanced groups with the exact finite-N rates.

    ``N`` defaults to the smallest capacity at which every reaction can fire.
    """
    if N is None:
        N = max((r.order for r in network), default=1)
    N = int(N)
    reactions = network.reactions
    checks = []

    # rates that would leave [0, N] must vanish on the boundary
    leaks = [
        i
        for i, r in enumerate(reactions)
        if (r.zeta < 0 and propensity(r, 0, N) > 0) or (r.zeta > 0 and propensity(r, N, N) > 0)
    ]
    checks.append(
        CheckResult(
            "boundary_closed",
            not leaks,
            "no reaction can leave [0, N]" if not leaks else "reactions fire outward at a boundary",
            tuple(leaks),
        )
    )

    active0 = [i for i, r in enumerate(reactions) if propensity(r, 0, N) > 0 and r.zeta != 0]
    drift0 = sum(reactions[i].zeta * propensity(reactions[i], 0, N) for i in active0)
    checks.append(
        CheckResult(
            "escape_from_0",
            drift0 > 0,
            f"drift at x=0 is {drift0:.17g}" + ("" if drift0 > 0 else " (no escape from 0)"),
            tuple(active0),
        )
    )
    activeN = [i for i, r in enumerate(reactions) if propensity(r, N, N) > 0 and r.zeta != 0]
    driftN = sum(reactions[i].zeta * propensity(reactions[i], N, N) for i in activeN)
    checks.append(
        CheckResult(
            "escape_from_N",
            driftN < 0,
            f"drift at x=N is {driftN:.17g}" + ("" if driftN < 0 else " (no escape from N)"),
            tuple(activeN),
        )
    )

    try:
        part = classify(network, network.declared_balanced)
        checks.append(CheckResult("balanced_groups_cancel", True, f"{len(part.groups)} balanced group(s)"))
        interior = [i for i in part.balanced if reactions[i].a == 0 or reactions[i].b == 0]
        checks.append(
            CheckResult(
                "balanced_reactants",
                not interior,
                "balanced reactions need a>0 and b>0",
                tuple(interior),
            )
        )
    except BalanceError as exc:
        checks.append(CheckResult("balanced_groups_cancel", False, str(exc)))
    return ValidationReport(N=N, checks=tuple(checks))
