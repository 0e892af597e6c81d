"""Finite-place combinatorics: the prime set S', the monoid N_S, and the varpi weights.

Every quantity here is an exact rational until it is handed to floating-point
consumers.  The weights make adelic integrals of norm-radial functions collapse
to weighted sums of real cosine integrals over frequencies ``l / k``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path


def primes_below(n: float) -> list[int]:
    """Primes p with p < n (sieve of Eratosthenes)."""
    top = math.ceil(n) - 1
    if top < 2:
        return []
    sieve = bytearray([1]) * (top + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(top) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [p for p in range(top + 1) if sieve[p] and p < n]


def factor_over(n: int, primes: tuple[int, ...]) -> dict[int, int] | None:
    """Exponents of n over ``primes``, or None if n has another prime factor."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    out: dict[int, int] = {}
    for p in primes:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out[p] = e
    return out if n == 1 else None


def mobius(n: int, primes: tuple[int, ...]) -> int:
    f = factor_over(n, primes)
    if f is None:
        raise ValueError(f"{n} is not supported on {primes}")
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


@dataclass(frozen=True)
class PlaceSet:
    """The primes below 1/mu together with rho_S = prod (1 - 1/p)."""

    mu: float
    primes: tuple[int, ...]

    @cached_property
    def rho_exact(self) -> Fraction:
        r = Fraction(1)
        for p in self.primes:
            r *= Fraction(p - 1, p)
        return r

    @property
    def rho(self) -> float:
        return float(self.rho_exact)

    @property
    def is_trivial(self) -> bool:
        return not self.primes

    def squarefree(self) -> list[int]:
        """All squarefree k built from S' (including 1), ascending."""
        ks = [1]
        for p in self.primes:
            ks += [k * p for k in ks]
        return sorted(ks)

    def label(self) -> str:
        return "{" + ",".join(map(str, self.primes)) + "}"


def compute_place_set(mu: float) -> PlaceSet:
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    return PlaceSet(float(mu), tuple(primes_below(1.0 / mu)))


def enumerate_ns(place_set: PlaceSet, bound: int) -> list[int]:
    """Ascending list of n <= bound whose prime factors all lie in S'."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    out = [1]
    for p in place_set.primes:
        grown = []
        for n in out:
            m = n * p
            while m <= bound:
                grown.append(m)
                m *= p
        out += grown
    return sorted(out)


def varpi_weight(place_set: PlaceSet, gamma: Fraction | int) -> Fraction:
    """Product over p in S' of the local weights of a rational gamma.

    Local weight: ``1 - 1/p`` if |gamma|_p <= 1, ``-1/p`` if |gamma|_p = p, and 0 otherwise.
    """
    gamma = Fraction(gamma)
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    num, den = abs(gamma.numerator), gamma.denominator
    fn = factor_over(num, place_set.primes)
    fd = factor_over(den, place_set.primes)
    if fn is None or fd is None:
        raise ValueError(f"{gamma} has prime support outside S' = {place_set.primes}")
    w = Fraction(1)
    for p in place_set.primes:
        e = fd.get(p, 0)
        if e == 0:
            w *= Fraction(p - 1, p)
        elif e == 1:
            w *= Fraction(-1, p)
        else:
            return Fraction(0)
    return w


def coprime_weight(place_set: PlaceSet, k: int) -> Fraction:
    """mu(k) / prod_{p | k}(p - 1) for squarefree k."""
    w = Fraction(mobius(k, place_set.primes))
    for p in place_set.primes:
        if k % p == 0:
            w /= p - 1
    return w


def dirichlet_tail(place_set: PlaceSet, bound: int, power: float = 1.0) -> float:
    """Sum of l^(-power) over l in N_S with l > bound.

    Uses the Euler product ``sum_{l in N_S} l^(-s) = prod 1/(1 - p^(-s))`` minus the
    enumerated head, so the value is exact up to rounding.
    """
    if place_set.is_trivial:
        return 0.0
    full = math.prod(1.0 / (1.0 - p ** (-power)) for p in place_set.primes)
    head = math.fsum(l ** (-power) for l in enumerate_ns(place_set, bound))
    return max(full - head, 0.0)


@dataclass(frozen=True)
class LatticePoint:
    k: int
    l: int
    weight: Fraction

    @property
    def ratio(self) -> float:
        return self.l / self.k


@dataclass(frozen=True)
class NSLattice:
    """Truncated Mobius-weighted frequency lattice {(k, l, weight)} with l <= bound.

    ``tail_bound`` is the Dirichlet tail ``sum_{l > bound} 1/l`` over N_S times the
    largest |weight| summed over k; consumers multiply it by the 1/omega constant of
    their inner integrals.
    """

    place_set: PlaceSet
    coprime_mode: bool
    bound: int
    points: tuple[LatticePoint, ...] = field(repr=False)
    tail_bound: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    def frequencies(self) -> list[float]:
        """2 pi l / k for each point."""
        return [2.0 * math.pi * pt.l / pt.k for pt in self.points]

    def weights(self) -> list[float]:
        return [float(pt.weight) for pt in self.points]

    def dirichlet(self, z: float) -> float:
        """sum weight * (k/l)^z (with the rho_S prefactor in coprime mode)."""
        s = math.fsum(float(pt.weight) * (pt.k / pt.l) ** z for pt in self.points)
        return self.place_set.rho * s if self.coprime_mode else s

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "l", "weight"])
            for pt in self.points:
                w.writerow([pt.k, pt.l, str(pt.weight)])


def build_lattice(place_set: PlaceSet, coprime_mode: bool = False, bound: int = 512) -> NSLattice:
    if bound < 1:
        raise ValueError("bound must be >= 1")
    ls = enumerate_ns(place_set, bound)
    pts = []
    for k in place_set.squarefree():
        if coprime_mode:
            w = coprime_weight(place_set, k)
            pts += [LatticePoint(k, l, w) for l in ls if math.gcd(k, l) == 1]
        else:
            w = Fraction(mobius(k, place_set.primes), k)
            pts += [LatticePoint(k, l, w) for l in ls]
    wsum = sum(abs(float(coprime_weight(place_set, k) if coprime_mode else Fraction(1, k)))
               for k in place_set.squarefree())
    tail = wsum * dirichlet_tail(place_set, bound)
    return NSLattice(place_set, coprime_mode, bound, tuple(pts), tail)


def euler_product(place_set: PlaceSet, z: float) -> float:
    """prod_{p in S'} (1 - p^(z-1)) / (1 - p^(-z))."""
    return math.prod((1.0 - p ** (z - 1.0)) / (1.0 - p ** (-z)) for p in place_set.primes)
