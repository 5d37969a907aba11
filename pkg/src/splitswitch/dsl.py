"""
Plain-text reaction format.

One reaction per line::

    <lhs> -> <rhs> @ <kappa_tilde> [scale=<s>]

``lhs``/``rhs`` are sums of ``[k]A`` and ``[k]B`` terms; ``kappa_tilde`` and
``s`` are integers, rationals (``32/3``) or decimals.  ``s`` defaults to the
standard scaling ``1-(a+b)``.  Lines starting with ``#`` are comments.

    >>> net = parse_network("2A + B -> 3A @ 32/3")
    >>> net[0].a, net[0].b, net[0].zeta, net[0].kappa_tilde, net[0].scale
    (2, 1, 1, Fraction(32, 3), Fraction(-2, 1))
"""
from __future__ import annotations

import re
import warnings
from fractions import Fraction

from .reaction_net import Reaction, ReactionNetwork, as_fraction

__all__ = ["NetworkParseError", "parse_network", "format_network", "format_reaction", "load_network"]

_TERM = re.compile(r"\s*(\d*)\s*\*?\s*([AB])\s*$")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?$")


class NetworkParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)


def _parse_side(text: str, line: int, col0: int) -> tuple[int, int]:
    counts = {"A": 0, "B": 0}
    pos = 0
    for part in text.split("+"):
        m = _TERM.match(part)
        lead = len(part) - len(part.lstrip())
        if m is None:
            raise NetworkParseError(f"bad species term {part.strip()!r} (expected [k]A or [k]B)", line, col0 + pos + lead + 1)
        k = int(m.group(1)) if m.group(1) else 1
        if k == 0:
            raise NetworkParseError("zero stoichiometric multiplier", line, col0 + pos + lead + 1)
        counts[m.group(2)] += k
        pos += len(part) + 1
    return counts["A"], counts["B"]


def _parse_number(text: str, what: str, line: int, col: int) -> Fraction:
    t = text.strip()
    if not _NUMBER.match(t):
        raise NetworkParseError(f"cannot parse {what} {t!r}", line, col)
    try:
        if "/" in t:
            num, den = t.split("/")
            return as_fraction(num) / int(den)
        return as_fraction(t)
    except (ValueError, ZeroDivisionError) as exc:
        raise NetworkParseError(f"cannot parse {what} {t!r}: {exc}", line, col) from None


def parse_reaction(line_text: str, line: int = 1) -> Reaction:
    raw = line_text
    arrow = raw.find("->")
    if arrow < 0:
        raise NetworkParseError("missing '->'", line, 1)
    at = raw.find("@", arrow)
    if at < 0:
        raise NetworkParseError("missing '@ <rate constant>'", line, len(raw.rstrip()) + 1)
    lhs, rhs, tail = raw[:arrow], raw[arrow + 2 : at], raw[at + 1 :]
    if not lhs.strip():
        raise NetworkParseError("empty left-hand side", line, 1)
    if not rhs.strip():
        raise NetworkParseError("empty right-hand side", line, arrow + 3)
    a, b = _parse_side(lhs, line, 0)
    a2, b2 = _parse_side(rhs, line, arrow + 2)

    if a2 + b2 != a + b:
        raise NetworkParseError(
            f"conservation violated: {a + b} reactant(s) but {a2 + b2} product(s); "
            "every reaction must read aA + bB -> (a+zeta)A + (b-zeta)B",
            line,
            arrow + 3 + len(rhs) - len(rhs.lstrip()),
        )
    zeta = a2 - a

    fields = tail.split()
    if not fields:
        raise NetworkParseError("missing rate constant after '@'", line, at + 2)
    kcol = at + 2 + tail.find(fields[0])
    kappa = _parse_number(fields[0], "rate constant", line, kcol)
    if kappa <= 0:
        raise NetworkParseError(f"rate constant must be positive, got {kappa}", line, kcol)
    scale = None
    for extra in fields[1:]:
        col = at + 2 + tail.find(extra, len(fields[0]))
        if not extra.startswith("scale="):
            raise NetworkParseError(f"unexpected token {extra!r}", line, col)
        scale = _parse_number(extra[len("scale=") :], "scale exponent", line, col)
    if a + b == 0:
        raise NetworkParseError("a reaction needs at least one reactant", line, 1)
    return Reaction(a=a, b=b, zeta=zeta, kappa_tilde=kappa, scale=scale)


def parse_network(text: str) -> ReactionNetwork:
    """Parse the reaction format; identical reactions are merged (rates summed) with a warning."""
    reactions: list[Reaction] = []
    where: dict[tuple, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        r = parse_reaction(raw, lineno)
        if r.key in where:
            i = where[r.key]
            warnings.warn(
                f"line {lineno}: duplicate of reaction {i + 1}; merging rate constants",
                stacklevel=2,
            )
            old = reactions[i]
            reactions[i] = Reaction(old.a, old.b, old.zeta, old.kappa_tilde + r.kappa_tilde, old.scale)
        else:
            where[r.key] = len(reactions)
            reactions.append(r)
    return ReactionNetwork(tuple(reactions))


def load_network(path) -> ReactionNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def _side(na: int, nb: int) -> str:
    terms = []
    for n, s in ((na, "A"), (nb, "B")):
        if n == 1:
            terms.append(s)
        elif n > 1:
            terms.append(f"{n}{s}")
    return " + ".join(terms)


def _num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_reaction(r: Reaction) -> str:
    text = f"{_side(r.a, r.b)} -> {_side(r.a + r.zeta, r.b - r.zeta)} @ {_num(r.kappa_tilde)}"
    if not r.is_standard:
        text += f" scale={_num(r.scale)}"
    return text


def format_network(network: ReactionNetwork) -> str:
    return "".join(format_reaction(r) + "\n" for r in network)
