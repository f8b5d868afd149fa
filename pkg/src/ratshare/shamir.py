"""Prime-field Shamir sharing with issuer-authenticated shares.

A secret s is shared by sampling a uniform polynomial f of degree m-1
over GF(p) with f(0) = s; player i holds the point (i, f(i)).  Any m
distinct points recover f(0) by Lagrange interpolation, while fewer
leave the secret information-theoretically hidden.  A trusted issuer
tags every share (and every additive subshare) with a keyed MAC so
holders cannot substitute forged values.

The exhaustive small-field verifiers (reconstruction round-trip and
hiding-posterior uniformity) live here so the command-line `hiding`
report and the test suite share one implementation of the enumeration.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from itertools import combinations, product
from random import Random

DEFAULT_PRIME = 2**31 - 1

# Primality is verified by trial division only below this bound; the
# default modulus sits just under it.
_PRIMALITY_BOUND = 2**31
_checked_moduli: set[int] = set()


class ReconstructionError(ValueError):
    """A share set cannot be combined into a secret."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def _check_modulus(p: int) -> None:
    if p in _checked_moduli:
        return
    if p < 2:
        raise ValueError(f"modulus must be >= 2, got {p}")
    if p < _PRIMALITY_BOUND and not is_prime(p):
        raise ValueError(f"modulus {p} is not prime")
    _checked_moduli.add(p)


@dataclass(frozen=True)
class FieldElement:
    """An element of GF(p), p prime."""

    value: int
    modulus: int

    def __post_init__(self) -> None:
        _check_modulus(self.modulus)
        if not 0 <= self.value < self.modulus:
            raise ValueError(f"value {self.value} outside [0, {self.modulus})")

    def _coerce(self, other: "FieldElement | int") -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ValueError("modulus mismatch")
            return other
        return FieldElement(other % self.modulus, self.modulus)

    def __add__(self, other: "FieldElement | int") -> "FieldElement":
        o = self._coerce(other)
        return FieldElement((self.value + o.value) % self.modulus, self.modulus)

    def __sub__(self, other: "FieldElement | int") -> "FieldElement":
        o = self._coerce(other)
        return FieldElement((self.value - o.value) % self.modulus, self.modulus)

    def __mul__(self, other: "FieldElement | int") -> "FieldElement":
        o = self._coerce(other)
        return FieldElement((self.value * o.value) % self.modulus, self.modulus)

    def __neg__(self) -> "FieldElement":
        return FieldElement((-self.value) % self.modulus, self.modulus)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse")
        return FieldElement(pow(self.value, self.modulus - 2, self.modulus), self.modulus)

    def __truediv__(self, other: "FieldElement | int") -> "FieldElement":
        return self * self._coerce(other).inverse()

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class Share:
    """An authenticated point (x, y) of one sharing epoch.

    The evaluation point x doubles as the holder's player id.
    """

    holder: int
    x: FieldElement
    y: FieldElement
    epoch: int
    tag: bytes

    def to_record(self) -> dict:
        return {
            "epoch": self.epoch,
            "holder": self.holder,
            "x": self.x.value,
            "y": self.y.value,
            "tag": self.tag.hex(),
        }


@dataclass(frozen=True)
class Subshare:
    """One additive piece of a parent share's y value."""

    parent_holder: int
    index: int
    value: FieldElement
    epoch: int
    tag: bytes

    def to_record(self) -> dict:
        return {
            "epoch": self.epoch,
            "parent": self.parent_holder,
            "index": self.index,
            "value": self.value.value,
            "tag": self.tag.hex(),
        }


def _eval_poly(coefficients: list[int], x: int, p: int) -> int:
    """Evaluate a0 + a1*x + ... at x mod p (Horner)."""
    acc = 0
    for c in reversed(coefficients):
        acc = (acc * x + c) % p
    return acc


class ShareIssuer:
    """Trusted issuer: creates, tags, and verifies shares.

    Conceptually the issuer signs shares so holders cannot forge them; at
    desk scale a keyed MAC (HMAC-SHA256) gives simulated players the same
    integrity guarantee, with verification going through the issuer.
    """

    def __init__(self, key: bytes, modulus: int = DEFAULT_PRIME):
        _check_modulus(modulus)
        self._key = key
        self.modulus = modulus

    def _mac(self, *fields: int | str) -> bytes:
        msg = "|".join(str(f) for f in fields).encode()
        return hmac.new(self._key, msg, hashlib.sha256).digest()

    def _share_tag(self, epoch: int, x: int, y: int) -> bytes:
        return self._mac("share", self.modulus, epoch, x, y)

    def _subshare_tag(self, epoch: int, parent: int, index: int, value: int) -> bytes:
        return self._mac("subshare", self.modulus, epoch, parent, index, value)

    def issue_shares(
        self,
        secret: FieldElement,
        m: int,
        n: int,
        epoch: int,
        rng: Random,
        coefficients: list[int] | None = None,
    ) -> list[Share]:
        """Issue n tagged shares of `secret` with reconstruction threshold m.

        Coefficients a_1..a_{m-1} are drawn uniformly from the field unless
        `coefficients` pins them (deterministic tests).
        """
        p = self.modulus
        if secret.modulus != p:
            raise ValueError("secret modulus does not match issuer modulus")
        if not 1 <= m <= n:
            raise ValueError(f"threshold m={m} out of range for n={n}")
        if n >= p:
            raise ValueError(f"need n < p, got n={n}, p={p}")
        if epoch < 0:
            raise ValueError("epoch must be non-negative")
        if coefficients is None:
            coefficients = [rng.randrange(p) for _ in range(m - 1)]
        if len(coefficients) != m - 1:
            raise ValueError("need exactly m-1 coefficients")
        poly = [secret.value] + [c % p for c in coefficients]
        shares = []
        for i in range(1, n + 1):
            y = _eval_poly(poly, i, p)
            shares.append(
                Share(
                    holder=i,
                    x=FieldElement(i, p),
                    y=FieldElement(y, p),
                    epoch=epoch,
                    tag=self._share_tag(epoch, i, y),
                )
            )
        return shares

    def verify_tag(self, item: Share | Subshare) -> bool:
        """True iff the tag matches the issuer's keyed code over the fields."""
        if isinstance(item, Share):
            expected = self._share_tag(item.epoch, item.x.value, item.y.value)
        else:
            expected = self._subshare_tag(
                item.epoch, item.parent_holder, item.index, item.value.value
            )
        return hmac.compare_digest(item.tag, expected)

    def split_subshares(self, share: Share, count: int, rng: Random) -> list[Subshare]:
        """Split a share into `count` additive subshares summing to share.y.

        All but the last value are uniform; each piece carries its own tag
        (the tag substitutes for a proof that the split was done honestly).
        """
        if count < 2:
            raise ValueError(f"subshare count must be >= 2, got {count}")
        p = self.modulus
        values = [rng.randrange(p) for _ in range(count - 1)]
        values.append((share.y.value - sum(values)) % p)
        return [
            Subshare(
                parent_holder=share.holder,
                index=k,
                value=FieldElement(v, p),
                epoch=share.epoch,
                tag=self._subshare_tag(share.epoch, share.holder, k, v),
            )
            for k, v in enumerate(values, start=1)
        ]


def reconstruct(
    shares: list[Share] | set[Share] | tuple[Share, ...],
    m: int,
    issuer: ShareIssuer | None = None,
) -> FieldElement:
    """Recover f(0) from at least m shares of one epoch.

    Uses exactly the first m shares in increasing x order so transcripts
    reproduce; verifies every supplied tag when an issuer is given.
    """
    shares = sorted(shares, key=lambda s: s.x.value)
    if len(shares) < m:
        raise ReconstructionError(f"need at least {m} shares, got {len(shares)}")
    epochs = {s.epoch for s in shares}
    if len(epochs) != 1:
        raise ReconstructionError(f"shares span epochs {sorted(epochs)}")
    moduli = {s.x.modulus for s in shares} | {s.y.modulus for s in shares}
    if len(moduli) != 1:
        raise ReconstructionError("shares span different fields")
    xs = [s.x.value for s in shares]
    if len(set(xs)) != len(xs):
        raise ReconstructionError("duplicate x coordinates")
    if issuer is not None:
        for s in shares:
            if not issuer.verify_tag(s):
                raise ReconstructionError(f"tag verification failed for holder {s.holder}")
    p = moduli.pop()
    points = shares[:m]
    total = 0
    for i, si in enumerate(points):
        num, den = 1, 1
        for j, sj in enumerate(points):
            if i == j:
                continue
            num = (num * (-sj.x.value)) % p
            den = (den * (si.x.value - sj.x.value)) % p
        total = (total + si.y.value * num * pow(den, p - 2, p)) % p
    return FieldElement(total, p)


def combine_subshares(
    subshares: list[Subshare],
    count: int,
    issuer: ShareIssuer | None = None,
) -> FieldElement:
    """Recover a parent share's y value from all `count` of its subshares."""
    if len(subshares) != count:
        raise ReconstructionError(f"need all {count} subshares, got {len(subshares)}")
    parents = {s.parent_holder for s in subshares}
    epochs = {s.epoch for s in subshares}
    if len(parents) != 1 or len(epochs) != 1:
        raise ReconstructionError("subshares from mixed parents or epochs")
    if {s.index for s in subshares} != set(range(1, count + 1)):
        raise ReconstructionError("subshare indices are not 1..count")
    if issuer is not None:
        for s in subshares:
            if not issuer.verify_tag(s):
                raise ReconstructionError(f"tag verification failed for subshare {s.index}")
    p = subshares[0].value.modulus
    return FieldElement(sum(s.value.value for s in subshares) % p, p)


# --- exhaustive small-field verifiers ---------------------------------------


def exhaustive_round_trip_check(
    p: int = 7, n: int = 3, thresholds: tuple[int, ...] = (1, 2, 3)
) -> dict[int, int]:
    """Count reconstruction failures over every polynomial and k-subset.

    For each threshold m, every secret and every coefficient vector is
    shared and every subset of size m..n reconstructed.  Returns failures
    per threshold (all zero for a correct implementation).
    """
    issuer = ShareIssuer(b"round-trip-check", modulus=p)
    rng = Random(0)
    failures = {}
    for m in thresholds:
        bad = 0
        for secret in range(p):
            s = FieldElement(secret, p)
            for coeffs in product(range(p), repeat=m - 1):
                shares = issuer.issue_shares(s, m, n, epoch=0, rng=rng, coefficients=list(coeffs))
                for k in range(m, n + 1):
                    for subset in combinations(shares, k):
                        if reconstruct(list(subset), m, issuer).value != secret:
                            bad += 1
        failures[m] = bad
    return failures


def exhaustive_hiding_check(p: int = 7, m: int = 2, n: int = 3) -> dict[int, bool]:
    """Verify the posterior over secrets is exactly uniform below threshold.

    For every subset of fewer than m players and every observable value
    tuple, each secret must be consistent with the observation equally
    often (counting over all degree-(m-1) polynomials).  Returns, per
    subset size, whether uniformity held for every subset of that size.
    """
    results: dict[int, bool] = {}
    for size in range(1, m):
        uniform = True
        for subset in combinations(range(1, n + 1), size):
            counts: dict[tuple[int, ...], dict[int, int]] = {}
            for secret in range(p):
                for coeffs in product(range(p), repeat=m - 1):
                    poly = [secret, *coeffs]
                    obs = tuple(_eval_poly(poly, x, p) for x in subset)
                    per_secret = counts.setdefault(obs, {})
                    per_secret[secret] = per_secret.get(secret, 0) + 1
            for per_secret in counts.values():
                if len(per_secret) != p or len(set(per_secret.values())) != 1:
                    uniform = False
        results[size] = uniform
    return results
