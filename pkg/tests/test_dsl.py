import warnings
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from splitswitch.dsl import NetworkParseError, format_network, parse_network
from splitswitch.reaction_net import Reaction, ReactionNetwork


def test_parse_double_well_line():
    r = parse_network("2A + B -> 3A @ 32/3")[0]
    assert (r.a, r.b, r.zeta, r.kappa_tilde, r.scale) == (2, 1, 1, Fraction(32, 3), Fraction(-2))


def test_comments_and_blank_lines():
    net = parse_network("# header\n\nA -> B @ 1\n   # indented comment\nB -> A @ 0.5\n")
    assert len(net) == 2 and net[1].kappa_tilde == Fraction(1, 2)


def test_explicit_scale():
    r = parse_network("A + B -> 2B @ 2 scale=-3/2")[0]
    assert r.scale == Fraction(-3, 2)


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("A -> B @ 1\nA -> 2B @ 1", 2, 6),  # conservation
        ("A -> B", 1, 7),  # missing rate
        ("A B @ 1", 1, 1),  # missing arrow
        ("A -> C @ 1", 1, 6),  # unknown species
        ("A -> B @ x", 1, 10),
        ("A -> B @ -1", 1, 10),
        ("A -> B @ 1 foo", 1, 12),
    ],
)
def test_parse_errors_carry_location(text, line, col):
    with pytest.raises(NetworkParseError) as exc:
        parse_network(text)
    assert exc.value.line == line
    assert exc.value.column == col
    assert f"line {line}" in str(exc.value)


def test_duplicate_reactions_merge_with_warning():
    with pytest.warns(UserWarning, match="duplicate"):
        net = parse_network("A -> B @ 1\nA -> B @ 1/2")
    assert len(net) == 1 and net[0].kappa_tilde == Fraction(3, 2)


reactions = st.builds(
    lambda a, b, t, num, den: Reaction(a, b, max(-a, min(b, t)), Fraction(num, den)),
    st.integers(0, 3).filter(lambda v: True),
    st.integers(1, 3),
    st.integers(-3, 3),
    st.integers(1, 50),
    st.integers(1, 12),
)


@given(st.lists(reactions, max_size=6))
def test_format_parse_round_trip(rs):
    uniq = {}
    for r in rs:
        uniq.setdefault(r.key, r)
    net = ReactionNetwork(tuple(uniq.values()))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = parse_network(format_network(net))
    assert back.reactions == net.reactions
