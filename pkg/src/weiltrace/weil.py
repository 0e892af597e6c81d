"""The Weil distribution: finite-place terms, the total prime sum, and the archimedean term.

The total over all places of the regularized local integrals is computed through
the Fourier route: the adelic Fourier transform of the norm-radial h is reduced to
weighted cosine transforms over the (k, l) lattice, and the outer log-weighted
integral over (0, inf) is done in closed form (see :mod:`weiltrace.kernels`).  The
archimedean term is defined as that total minus the closed-form finite-place terms.

Two evaluations of the same lattice sum are combined:

* the truncated lattice sum, pair by pair (``prime_sum_lattice``);
* the untruncated sum through the Euler product of the lattice Dirichlet series
  (:mod:`weiltrace.euler`), which is the reported total.

Their difference is the exact lattice tail.  As a consistency check the truncated
sum is also re-evaluated through the finite Dirichlet polynomial of the same lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .euler import euler_dirichlet, lattice_dirichlet, prime_sum_mellin
from .kernels import PairTable, QuadConfig, pair_table, prime_pair
from .places import NSLattice, compute_place_set, primes_below
from .quadrature import QuadratureError
from .testfn import HFunction, mellin_h


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


def finite_place_term(h: HFunction, p: int) -> float:
    """log p * sum_{m >= 1} [h(p^m) + p^(-m) h(p^(-m))].

    Only m with p^m < 1/mu contribute because h vanishes outside (mu, 1/mu); for
    p >= 1/mu the sum is empty and the result is exactly 0.
    """
    if not _is_prime(int(p)) or int(p) != p:
        raise ValueError(f"{p} is not prime")
    if h.is_zero:
        return 0.0
    p = int(p)
    xs = []
    m = 1
    while p**m < h.upper:
        xs.append(float(p) ** m)
        m += 1
    if not xs:
        return 0.0
    x = np.array(xs)
    vals = h(x) + h(1.0 / x) / x
    return math.log(p) * math.fsum(vals)


@dataclass(frozen=True)
class PrimeSum:
    """The prime sum with its truncated-lattice counterpart and error budget.

    ``value`` is the untruncated lattice sum; ``lattice_value`` is the direct pair-by-pair
    sum over the truncated lattice and ``lattice_tail = value - lattice_value``;
    ``consistency`` is the disagreement between the direct truncated sum and its
    Dirichlet-polynomial evaluation.
    """

    value: float
    lattice_value: float
    lattice_tail: float
    consistency: float
    quadrature_error_estimate: float
    lattice_bound: int

    def __float__(self) -> float:
        return self.value


def prime_sum_fourier(
    h: HFunction,
    lattice: NSLattice,
    quad: QuadConfig = QuadConfig(),
    tol: float = 1e-7,
    table: PairTable | None = None,
) -> PrimeSum:
    """-int_{A_S} (F_S h)(y) Psi_S(y) log|y| dy as ``-4 sum w1 w2 P(a, b)`` over the lattice.

    Raises QuadratureError when the two evaluations of the truncated sum disagree
    by more than ``tol * (1 + |value|)``; that disagreement bounds the error of the
    reported value.
    """
    if h.is_zero:
        return PrimeSum(0.0, 0.0, 0.0, 0.0, 0.0, lattice.bound)
    if table is None:
        table = pair_table(h, lattice, lattice, prime_pair, quad)
    direct = -table.total()
    full = prime_sum_mellin(h, euler_dirichlet(lattice.place_set))
    trunc = prime_sum_mellin(h, lattice_dirichlet(lattice))
    consistency = abs(direct - trunc.value)
    err = consistency + full.tail_estimate + full.quadrature_change + trunc.tail_estimate
    if consistency > tol * (1.0 + abs(full.value)):
        raise QuadratureError(
            f"truncated prime sum: direct {direct:.12g} vs Dirichlet polynomial {trunc.value:.12g}"
        )
    return PrimeSum(full.value, direct, full.value - direct, consistency, err, lattice.bound)


@dataclass
class WeilBreakdown:
    """Delta(h) = Re(h^(0) + h^(1)) - prime_sum_total, with the pieces it is made of."""

    h_hat_0: complex
    h_hat_1: complex
    finite_terms: dict[int, float]
    prime_sum_total: float
    archimedean: float
    delta: float
    quadrature_error_estimate: float
    prime_sum_lattice: float = 0.0
    delta_lattice: float = 0.0
    lattice_bound: int = 0
    place_set: tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h_hat_0"] = [self.h_hat_0.real, self.h_hat_0.imag]
        d["h_hat_1"] = [self.h_hat_1.real, self.h_hat_1.imag]
        d["finite_terms"] = {str(p): v for p, v in self.finite_terms.items()}
        d["place_set"] = list(self.place_set)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "WeilBreakdown":
        d = dict(d)
        d["h_hat_0"] = complex(*d["h_hat_0"])
        d["h_hat_1"] = complex(*d["h_hat_1"])
        d["finite_terms"] = {int(p): v for p, v in d["finite_terms"].items()}
        d["place_set"] = tuple(d["place_set"])
        return cls(**d)


def weil_distribution(
    h: HFunction,
    lattice: NSLattice,
    quad: QuadConfig = QuadConfig(),
    table: PairTable | None = None,
) -> WeilBreakdown:
    """Assemble Delta(h) from the Mellin values at 0 and 1, the finite places, and the prime sum."""
    primes = lattice.place_set.primes
    if h.is_zero:
        return WeilBreakdown(0j, 0j, {p: 0.0 for p in primes}, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, lattice.bound, primes)
    if compute_place_set(h.mu).primes != primes:
        raise ValueError("lattice was built for a different place set")
    hh = np.atleast_1d(mellin_h(h, np.array([0.0, 1.0])))
    finite = {p: finite_place_term(h, p) for p in primes}
    ps = prime_sum_fourier(h, lattice, quad, table=table)
    hsum = float((hh[0] + hh[1]).real)
    return WeilBreakdown(
        h_hat_0=complex(hh[0]),
        h_hat_1=complex(hh[1]),
        finite_terms=finite,
        prime_sum_total=ps.value,
        archimedean=ps.value - math.fsum(finite.values()),
        delta=hsum - ps.value,
        quadrature_error_estimate=ps.quadrature_error_estimate,
        prime_sum_lattice=ps.lattice_value,
        delta_lattice=hsum - ps.lattice_value,
        lattice_bound=lattice.bound,
        place_set=primes,
    )


def primes_above_cutoff(mu: float, count: int = 5) -> list[int]:
    """The ``count`` smallest primes p >= 1/mu."""
    top = 1.0 / mu
    n = max(16, int(top) * 4 + 64)
    while True:
        ps = [p for p in primes_below(n) if p >= top]
        if len(ps) >= count:
            return ps[:count]
        n *= 2
