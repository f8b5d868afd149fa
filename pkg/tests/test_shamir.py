"""Field arithmetic, share issuance, reconstruction, tags, subshares."""

import dataclasses
from itertools import combinations, product
from random import Random

import pytest
from hypothesis import given, strategies as st

from ratshare.shamir import (
    FieldElement,
    ReconstructionError,
    Share,
    ShareIssuer,
    combine_subshares,
    exhaustive_hiding_check,
    exhaustive_round_trip_check,
    is_prime,
    reconstruct,
)


def fe(v, p=13):
    return FieldElement(v, p)


@pytest.fixture
def issuer13():
    return ShareIssuer(b"test-key-13", modulus=13)


class ScriptRandom(Random):
    """randrange() returns scripted values; used to force splits."""

    def __new__(cls, values):
        return super().__new__(cls, 0)

    def __init__(self, values):
        super().__init__(0)
        self.values = list(values)

    def randrange(self, n):
        return self.values.pop(0) % n


# --- field ---------------------------------------------------------------


def test_field_element_range_checked():
    with pytest.raises(ValueError):
        FieldElement(13, 13)
    with pytest.raises(ValueError):
        FieldElement(-1, 13)


def test_field_rejects_composite_modulus():
    with pytest.raises(ValueError):
        FieldElement(1, 15)


def test_field_arithmetic():
    a, b = fe(8), fe(11)
    assert (a + b).value == 6
    assert (a - b).value == 10
    assert (a * b).value == (88 % 13)
    assert (a / a).value == 1
    assert (-a).value == 5
    assert (fe(1) / fe(2)).value == 7  # 2 * 7 = 14 = 1 mod 13


def test_field_modulus_mismatch():
    with pytest.raises(ValueError):
        fe(1, 13) + fe(1, 7)


def test_is_prime_small():
    primes = {2, 3, 5, 7, 11, 13, 101, 2**31 - 1}
    for p in primes:
        assert is_prime(p)
    for c in (1, 4, 9, 15, 21, 2**31 - 2):
        assert not is_prime(c)


# --- issuance ------------------------------------------------------------


def test_constant_polynomial_when_threshold_one(issuer13):
    shares = issuer13.issue_shares(fe(5), m=1, n=3, epoch=0, rng=Random(0))
    assert [s.y.value for s in shares] == [5, 5, 5]


def test_forced_coefficient_evaluation(issuer13):
    # f(x) = 5 + 3x mod 13 at x = 1, 2, 3.
    shares = issuer13.issue_shares(fe(5), m=2, n=3, epoch=0, rng=Random(0), coefficients=[3])
    assert [(s.x.value, s.y.value) for s in shares] == [(1, 8), (2, 11), (3, 1)]
    assert all(s.holder == s.x.value for s in shares)


def test_issue_validates_threshold_and_modulus(issuer13):
    with pytest.raises(ValueError):
        issuer13.issue_shares(fe(5), m=0, n=3, epoch=0, rng=Random(0))
    with pytest.raises(ValueError):
        issuer13.issue_shares(fe(5), m=4, n=3, epoch=0, rng=Random(0))
    with pytest.raises(ValueError):
        issuer13.issue_shares(fe(5, 7), m=2, n=3, epoch=0, rng=Random(0))
    with pytest.raises(ValueError):
        ShareIssuer(b"k", modulus=7).issue_shares(fe(5, 7), m=2, n=8, epoch=0, rng=Random(0))


# --- reconstruction --------------------------------------------------------


def test_hand_lagrange(issuer13):
    shares = issuer13.issue_shares(fe(5), m=2, n=3, epoch=0, rng=Random(0), coefficients=[3])
    # 8*2*(2-1)^-1 + 11*1*(1-2)^-1 = 16 - 11 = 5 mod 13
    assert reconstruct(shares[:2], m=2, issuer=issuer13).value == 5


def test_single_share_threshold_one(issuer13):
    shares = issuer13.issue_shares(fe(9), m=1, n=3, epoch=0, rng=Random(1))
    assert reconstruct([shares[0]], m=1, issuer=issuer13).value == 9


def test_round_trip_gf7_exhaustive():
    issuer = ShareIssuer(b"k7", modulus=7)
    rng = Random(2)
    for s in range(7):
        shares = issuer.issue_shares(FieldElement(s, 7), m=2, n=3, epoch=0, rng=rng)
        for subset in combinations(shares, 2):
            assert reconstruct(list(subset), 2, issuer).value == s


def test_round_trip_random_secrets_gf101():
    issuer = ShareIssuer(b"k101", modulus=101)
    rng = Random(3)
    for _ in range(100):
        s = rng.randrange(101)
        shares = issuer.issue_shares(FieldElement(s, 101), m=3, n=3, epoch=0, rng=rng)
        assert reconstruct(shares, 3, issuer).value == s


def test_reconstruct_uses_first_m_in_x_order(issuer13):
    shares = issuer13.issue_shares(fe(5), m=2, n=3, epoch=0, rng=Random(0), coefficients=[3])
    shuffled = [shares[2], shares[0], shares[1]]
    assert reconstruct(shuffled, 2, issuer13).value == 5


def test_reconstruct_errors(issuer13):
    shares = issuer13.issue_shares(fe(5), m=3, n=3, epoch=0, rng=Random(0))
    with pytest.raises(ReconstructionError):
        reconstruct(shares[:2], 3, issuer13)
    with pytest.raises(ReconstructionError):
        reconstruct([shares[0], shares[0], shares[1]], 3, issuer13)
    other = issuer13.issue_shares(fe(5), m=3, n=3, epoch=1, rng=Random(0))
    with pytest.raises(ReconstructionError):
        reconstruct([other[0], shares[1], shares[2]], 3, issuer13)
    forged = dataclasses.replace(shares[0], y=shares[0].y + 1)
    with pytest.raises(ReconstructionError):
        reconstruct([forged, shares[1], shares[2]], 3, issuer13)


# --- tags ------------------------------------------------------------------


def test_fresh_tags_verify(issuer13):
    for share in issuer13.issue_shares(fe(7), m=2, n=3, epoch=4, rng=Random(4)):
        assert issuer13.verify_tag(share)


def test_mutated_share_fails_verification(issuer13):
    share = issuer13.issue_shares(fe(7), m=2, n=3, epoch=4, rng=Random(4))[0]
    assert not issuer13.verify_tag(dataclasses.replace(share, y=share.y + 1))
    assert not issuer13.verify_tag(dataclasses.replace(share, epoch=5))
    assert not issuer13.verify_tag(
        dataclasses.replace(share, x=FieldElement(2, 13), holder=2)
    )


@given(
    field=st.sampled_from(["epoch", "x", "y"]),
    delta=st.integers(min_value=1, max_value=12),
    secret=st.integers(min_value=0, max_value=12),
)
def test_tag_soundness_under_mutation(field, delta, secret):
    issuer = ShareIssuer(b"prop-key", modulus=13)
    share = issuer.issue_shares(fe(secret), m=2, n=3, epoch=2, rng=Random(5))[0]
    if field == "epoch":
        mutant = dataclasses.replace(share, epoch=share.epoch + delta)
    elif field == "x":
        mutant = dataclasses.replace(share, x=share.x + delta)
    else:
        mutant = dataclasses.replace(share, y=share.y + delta)
    assert not issuer.verify_tag(mutant)


def test_other_key_rejects(issuer13):
    share = issuer13.issue_shares(fe(7), m=2, n=3, epoch=0, rng=Random(6))[0]
    assert not ShareIssuer(b"other-key", modulus=13).verify_tag(share)


# --- subshares --------------------------------------------------------------


def test_subshare_additive_complement(issuer13):
    share = issuer13.issue_shares(fe(9, 13), m=1, n=3, epoch=0, rng=Random(0))[0]
    assert share.y.value == 9
    subs = issuer13.split_subshares(share, count=2, rng=ScriptRandom([4]))
    assert [s.value.value for s in subs] == [4, 5]
    assert all(issuer13.verify_tag(s) for s in subs)


def test_subshare_sum_matches_parent(issuer13):
    rng = Random(7)
    for _ in range(100):
        secret = rng.randrange(13)
        share = issuer13.issue_shares(fe(secret), m=2, n=3, epoch=0, rng=rng)[0]
        subs = issuer13.split_subshares(share, count=4, rng=rng)
        assert sum(s.value.value for s in subs) % 13 == share.y.value
        assert combine_subshares(subs, 4, issuer13).value == share.y.value


def test_subshare_count_must_be_at_least_two(issuer13):
    share = issuer13.issue_shares(fe(5), m=2, n=3, epoch=0, rng=Random(0))[0]
    with pytest.raises(ValueError):
        issuer13.split_subshares(share, count=1, rng=Random(0))


def test_combine_subshares_requires_all(issuer13):
    share = issuer13.issue_shares(fe(5), m=2, n=3, epoch=0, rng=Random(8))[0]
    subs = issuer13.split_subshares(share, count=3, rng=Random(8))
    with pytest.raises(ReconstructionError):
        combine_subshares(subs[:2], 3, issuer13)


def test_partial_subshares_leave_parent_uniform():
    # Exhaustive at p=7: seeing all but one subshare says nothing about the
    # parent value, because the missing piece ranges over the whole field.
    p = 7
    issuer = ShareIssuer(b"sub7", modulus=7)
    for count in (2, 3):
        counts = {}
        for parent_y in range(p):
            share = Share(
                holder=1,
                x=FieldElement(1, p),
                y=FieldElement(parent_y, p),
                epoch=0,
                tag=issuer._share_tag(0, 1, parent_y),
            )
            for firsts in product(range(p), repeat=count - 1):
                subs = issuer.split_subshares(share, count, ScriptRandom(list(firsts)))
                for drop in range(count):
                    obs = tuple(s.value.value for i, s in enumerate(subs) if i != drop)
                    key = (count, drop, obs)
                    per_parent = counts.setdefault(key, {})
                    per_parent[parent_y] = per_parent.get(parent_y, 0) + 1
        for per_parent in counts.values():
            assert len(per_parent) == p
            assert len(set(per_parent.values())) == 1


# --- exhaustive verifiers ----------------------------------------------------


def test_exhaustive_round_trip_checker():
    assert exhaustive_round_trip_check(p=7, n=3, thresholds=(1, 2, 3)) == {1: 0, 2: 0, 3: 0}


def test_exhaustive_hiding_checker():
    assert exhaustive_hiding_check(p=7, m=2, n=3) == {1: True}
    assert exhaustive_hiding_check(p=7, m=3, n=3) == {1: True, 2: True}


def test_single_player_view_uniform_over_polynomials():
    # For each fixed secret, one player's share value over all slopes is a
    # permutation of the field.
    p = 7
    for secret in range(p):
        for player in (1, 2, 3):
            seen = sorted((secret + a * player) % p for a in range(p))
            assert seen == list(range(p))
