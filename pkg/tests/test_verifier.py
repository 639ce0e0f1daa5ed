from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import eps_below, eps_point, games, matching_pennies, profile, profiles_for, \
    weak_dominance
from thpe.game import Game, MixedProfile, ShapeError, is_eps_pe
from thpe.verifier import (check_certificate, check_delta_nearness, format_certificate,
                           parse_certificate)

EIGHTH = Fraction(1, 8)


def test_fixed_point_certificate_is_valid():
    cert, ok = check_certificate(weak_dominance(), eps_point(2, EIGHTH), EIGHTH)
    assert ok
    assert [e.exceeds_eps for e in cert.entries] == [True, False, True, False]
    assert [e.gap for e in cert.entries] == [0, 1 - EIGHTH, 0, 1 - EIGHTH]


def test_halving_eps_makes_it_invalid():
    cert, ok = check_certificate(weak_dominance(), eps_point(2, EIGHTH), EIGHTH / 2)
    assert not ok
    assert {(e.player, e.strategy) for e in cert.violations()} == {(0, 1), (1, 1)}


def test_uniform_matching_pennies_is_valid():
    for eps in (Fraction(1, 3), Fraction(1, 100)):
        assert check_certificate(matching_pennies(), MixedProfile.uniform((2, 2)), eps)[1]


def test_slack_relaxes_the_verdict():
    x = eps_point(2, EIGHTH)
    assert check_certificate(weak_dominance(), x, EIGHTH / 2, 1 - EIGHTH)[1]
    with pytest.raises(ValueError):
        check_certificate(weak_dominance(), x, 0)


def test_delta_nearness_examples():
    x = profile((1 - Fraction(1, 10 ** 4), Fraction(1, 10 ** 4)), (1, 0))
    y = profile((1, 0), (1, 0))
    assert check_delta_nearness(x, x, 0)
    assert check_delta_nearness(x, y, Fraction(1, 10 ** 3))
    assert not check_delta_nearness(x, y, Fraction(1, 10 ** 5))
    with pytest.raises(ShapeError):
        check_delta_nearness(x, MixedProfile.uniform((3, 2)), 1)


@given(st.data())
def test_agrees_with_is_eps_pe(data):
    g = data.draw(games())
    x = data.draw(profiles_for(g, positive=data.draw(st.booleans())))
    eps = data.draw(eps_below(g.m))
    assert check_certificate(g, x, eps)[1] == is_eps_pe(g, x, eps)[0]


@given(st.data())
def test_gaps_ignore_constant_payoff_shifts(data):
    g = data.draw(games())
    x = data.draw(profiles_for(g))
    eps = data.draw(eps_below(g.m))
    i = data.draw(st.integers(0, g.n - 1))
    shift = data.draw(st.fractions(-5, 5, max_denominator=7))
    h = Game.from_function(g.strategy_counts, lambda p: tuple(
        u + shift if k == i else u for k, u in enumerate(g.payoff(p))))
    a, _ = check_certificate(g, x, eps)
    b, _ = check_certificate(h, x, eps)
    assert [e.gap for e in a.entries] == [e.gap for e in b.entries]
    assert all(e.gap >= 0 for e in a.entries)


@given(st.data())
def test_certificate_table_round_trip(data):
    g = data.draw(games())
    x = data.draw(profiles_for(g))
    eps = data.draw(eps_below(g.m))
    cert, _ = check_certificate(g, x, eps)
    assert parse_certificate(format_certificate(cert)) == cert


def test_certificate_table_layout():
    cert, _ = check_certificate(weak_dominance(), eps_point(2, EIGHTH), EIGHTH)
    text = format_certificate(cert)
    assert text.splitlines() == [
        "eps 1/2^3 slack 0",
        "player strategy probability gap exceeds_eps",
        "1 1 7/2^3 0 yes",
        "1 2 1/2^3 7/2^3 no",
        "2 1 7/2^3 0 yes",
        "2 2 1/2^3 7/2^3 no",
        "fully_mixed yes",
        "verdict valid",
    ]
    with pytest.raises(ValueError):
        parse_certificate(text.replace("verdict valid", "verdict invalid"))
