"""Per-frequency-pair integrals behind the lattice sums.

Every adelic double integral used by the trace, the corrections and the prime sum
reduces to a weighted sum over pairs of lattice frequencies ``a = 2 pi l1 / k1``,
``b = 2 pi l2 / k2`` of one of the following real integrals (v is the outer
variable, u the inner one, ``U = 1/mu``)::

    term1:       O(a, b) = int_1^inf log v cos(a v) dv int_1^U h(u) cos(b u v) du
    correction:  C(a, b) = int_0^1   log v cos(a v) dv int_1^U h(u) cos(b u v) du
    prime sum:   P(a, b) = int_0^inf log v cos(a v) dv int_0^U h(u) cos(b u v) du

The outer integrals of O and P diverge and are taken in the Abel sense.  Swapping
the order of integration gives, with ``r = a / b`` and ``omega = b (u - r)``,

    Abel-int_1^inf log v cos(w v) dv  = -(pi/2 - Si(w)) / w                  (w != 0)
    Abel-int_0^inf log v cos(w v) dv  = -(pi/2) FP 1/|w| - gamma pi delta(w)  (as a distribution)
    int_0^1 log v cos(w v) dv         = -Si(w) / w

so each pair becomes proper u-integrals over [1, U] (or [mu, U]), plus
Hadamard finite parts at the resonance u = r.  Finite parts are evaluated by
subtracting h(r) and adding the logarithm of the interval length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.special import sici

from .quadrature import DEFAULT_ORDER, _rule as _gl, panels
from .special import EULER_GAMMA, si_tail_over
from .testfn import HFunction


@dataclass(frozen=True)
class QuadConfig:
    """Panel density for oscillatory u-integrals (panels per period of cos(b u))."""

    panels_per_period: float = 2.0
    min_panels: int = 16
    order: int = DEFAULT_ORDER

    def refined(self) -> "QuadConfig":
        return replace(self, panels_per_period=2 * self.panels_per_period, min_panels=2 * self.min_panels)


def _graded_breaks(lo: float, hi: float, anchor: float, scale: float) -> list[float]:
    """Geometric breakpoints accumulating at ``anchor`` (an endpoint) down to ``scale / 8``."""
    out = []
    length = hi - lo
    d = length / 2
    while d > scale / 8 and d > 1e-14 * max(1.0, abs(anchor)):
        out.append(anchor + d if anchor == lo else anchor - d)
        d /= 2
    return out


def rule(
    lo: float,
    hi: float,
    freq: float,
    q: QuadConfig,
    grade: tuple[float, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [lo, hi] resolving ``cos(freq * u)``.

    ``grade = (anchor, scale)`` adds geometric refinement towards an endpoint where
    the integrand varies on the length ``scale``.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    n = max(q.min_panels, int(math.ceil(q.panels_per_period * freq * (hi - lo) / (2 * np.pi))))
    if grade is None or grade[1] >= (hi - lo):
        return panels(lo, hi, n, q.order)
    breaks = np.unique(np.clip(np.concatenate([np.linspace(lo, hi, n + 1), _graded_breaks(lo, hi, *grade)]), lo, hi))
    x, w = _gl(q.order)
    left = breaks[:-1, None]
    half = (breaks[1:, None] - left) / 2
    return (left + half * (x + 1)).ravel(), (half * w).ravel()


def _quad(f, lo, hi, freq, q, grade=None) -> float:
    x, w = rule(lo, hi, freq, q, grade)
    if x.size == 0:
        return 0.0
    return float(np.dot(f(x), w))


def si_over(b: float, x: np.ndarray) -> np.ndarray:
    """Si(b x) / x, continuous through x = 0."""
    x = np.asarray(x, dtype=float)
    y = b * x
    small = np.abs(y) < 1e-6
    out = np.empty_like(x)
    out[small] = b * (1 - y[small] ** 2 / 18)
    xs = x[~small]
    out[~small] = sici(b * xs)[0] / xs
    return out


def neg_si_ratio(w: np.ndarray) -> np.ndarray:
    """-Si(w) / w, i.e. int_0^1 log v cos(w v) dv; even in w, value -1 at 0."""
    w = np.abs(np.asarray(w, dtype=float))
    out = np.full_like(w, -1.0)
    m = w > 1e-6
    out[m] = -sici(w[m])[0] / w[m]
    out[~m] = -(1 - w[~m] ** 2 / 18)
    return out


@dataclass(frozen=True)
class Pair:
    """Frequencies a = 2 pi n1 / d1 and b = 2 pi n2 / d2 with exact ratio r = a / b."""

    a: float
    b: float
    ratio: Fraction

    @classmethod
    def from_lattice(cls, k1: int, l1: int, k2: int, l2: int) -> "Pair":
        return cls(2 * np.pi * l1 / k1, 2 * np.pi * l2 / k2, Fraction(l1 * k2, k1 * l2))


def _finite_part(h: HFunction, lo: float, hi: float, r: float, b: float, q: QuadConfig):
    """Hadamard finite part of ``int h(u) / |u - r| du`` over [lo, hi] in the omega variable.

    Returns ``(fp, hbar)`` where ``fp = FP int phi(omega)/|omega| d omega`` with
    ``omega = b (u - r)`` and ``hbar`` is the mean of the one-sided limits of
    ``h`` at r restricted to [lo, hi] (the coefficient of the delta term).
    Outside the interval the integral is proper; near-singular endpoints are graded.
    """
    if r < lo:
        hl = float(h(np.array([lo]))[0])
        val = _quad(lambda u: (h(u) - hl) / (u - r), lo, hi, b, q, (lo, lo - r))
        return val + hl * math.log((hi - r) / (lo - r)), 0.0
    if r > hi:
        hr = float(h(np.array([hi]))[0])
        val = _quad(lambda u: (h(u) - hr) / (r - u), lo, hi, b, q, (hi, r - hi))
        return val + hr * math.log((r - lo) / (r - hi)), 0.0
    hr = float(h(np.array([r]))[0])
    fp = 0.0
    sides = 0
    if hi > r:
        fp += _quad(lambda u: (h(u) - hr) / (u - r), r, hi, b, q) + hr * math.log(b * (hi - r))
        sides += 1
    if r > lo:
        fp += _quad(lambda u: (h(u) - hr) / (r - u), lo, r, b, q) + hr * math.log(b * (r - lo))
        sides += 1
    return fp, hr * sides / 2


def term1_pair(h: HFunction, pair: Pair, q: QuadConfig = QuadConfig()) -> float:
    """O(a, b): regularized int_1^inf log v cos(a v) I(b v) dv with I(w) = int_1^U h cos(w u) du."""
    if h.is_zero:
        return 0.0
    a, b, U = pair.a, pair.b, h.upper
    r = float(pair.ratio)
    part1 = 0.5 * _quad(lambda u: -h(u) * si_tail_over(b * u + a), 1.0, U, b, q)
    brk = [1.0, U] if not 1.0 < r < U else [1.0, r, U]
    si_part = sum(_quad(lambda u: h(u) * si_over(b, u - r), lo, hi, b, q) for lo, hi in zip(brk[:-1], brk[1:]))
    fp, hbar = _finite_part(h, 1.0, U, r, b, q)
    return part1 + (-(np.pi / 2) * fp - EULER_GAMMA * np.pi * hbar + si_part) / (2 * b)


def prime_pair(h: HFunction, pair: Pair, q: QuadConfig = QuadConfig()) -> float:
    """P(a, b): regularized int_0^inf log v cos(a v) I_full(b v) dv, I_full(w) = int_0^U h cos(w u) du."""
    if h.is_zero:
        return 0.0
    a, b, U, mu = pair.a, pair.b, h.upper, h.mu
    r = float(pair.ratio)
    part1 = 0.5 * _quad(lambda u: h(u) * (-np.pi / (2 * (b * u + a))), mu, U, b, q)
    fp, hbar = _finite_part(h, mu, U, r, b, q)
    return part1 + (-(np.pi / 2) * fp - EULER_GAMMA * np.pi * hbar) / (2 * b)


def correction_pair(h: HFunction, pair: Pair, q: QuadConfig = QuadConfig()) -> float:
    """C(a, b) = int_0^1 log v cos(a v) I(b v) dv, evaluated as a u-integral (absolutely convergent)."""
    if h.is_zero:
        return 0.0
    a, b, U = pair.a, pair.b, h.upper
    return _quad(lambda u: h(u) * 0.5 * (neg_si_ratio(b * u + a) + neg_si_ratio(b * u - a)), 1.0, U, b, q)


def correction_pair_nested(h: HFunction, pair: Pair, q: QuadConfig = QuadConfig()) -> float:
    """C(a, b) by the nested order: outer v in (0, 1) graded towards the log singularity at 0."""
    if h.is_zero:
        return 0.0
    a, b, U = pair.a, pair.b, h.upper
    v, wv = rule(0.0, 1.0, a + b * U, q, (0.0, 1e-12))
    u, wu = rule(1.0, U, b, q)
    hu = h(u) * wu
    inner = np.cos(b * np.outer(v, u)) @ hu
    return float(np.dot(np.log(v) * np.cos(a * v) * inner, wv))


def inner_cos_transform(h: HFunction, omega: float, q: QuadConfig = QuadConfig()) -> float:
    """int_1^U h(u) cos(omega u) du (proper integral)."""
    if h.is_zero:
        return 0.0
    return _quad(lambda u: h(u) * np.cos(omega * u), 1.0, h.upper, omega, q)


@dataclass(frozen=True)
class InnerExpansion:
    """-h(1) sin w / w - h'(1) cos w / w^2 - w^(-2) int_1^U h'' cos(w u) du, term by term."""

    sine_term: float
    cosine_term: float
    remainder: float

    @property
    def total(self) -> float:
        return self.sine_term + self.cosine_term + self.remainder


def inner_cos_expansion(h: HFunction, omega: float, q: QuadConfig = QuadConfig()) -> InnerExpansion:
    """Two integrations by parts of the inner transform (boundary terms at u = 1 only; h is flat at U)."""
    if h.is_zero:
        return InnerExpansion(0.0, 0.0, 0.0)
    h1, d1, _ = (float(v[0]) for v in h.derivs(np.array([1.0])))
    rem = _quad(lambda u: h.derivs(u)[2] * np.cos(omega * u), 1.0, h.upper, omega, q)
    return InnerExpansion(-h1 * math.sin(omega) / omega, -d1 * math.cos(omega) / omega**2, -rem / omega**2)


def inner_bound_constant(h: HFunction, q: QuadConfig = QuadConfig()) -> float:
    """C with |int_1^U h cos(w u) du| <= C / w: |h(1)| + int_1^U |h'|."""
    if h.is_zero:
        return 0.0
    h1 = abs(float(h(np.array([1.0]))[0]))
    return h1 + _quad(lambda u: np.abs(h.derivs(u)[1]), 1.0, h.upper, 0.0, replace(q, min_panels=64))


# --------------------------------------------------------------------------------------
# lattice double sums
# --------------------------------------------------------------------------------------


def lattice_weights(lattice) -> list[float]:
    """Point weights with the rho_S factor attached in coprime mode."""
    rho = lattice.place_set.rho if lattice.coprime_mode else 1.0
    return [float(pt.weight) * rho for pt in lattice.points]


@dataclass(frozen=True)
class PairTable:
    """Per-(k1, l1, k2, l2) weighted terms of a double lattice sum, in a fixed order."""

    rows: np.ndarray  # columns: k1, l1, k2, l2, weight, value

    def total(self, bound: int | None = None, factor: float = 4.0) -> float:
        """``factor * sum weight * value`` over rows with l1, l2 <= bound (exactly rounded)."""
        r = self.rows
        if r.size == 0:
            return 0.0
        if bound is not None:
            r = r[(r[:, 1] <= bound) & (r[:, 3] <= bound)]
        return factor * math.fsum(r[:, 4] * r[:, 5])

    def max_l(self) -> int:
        return int(max(self.rows[:, 1].max(), self.rows[:, 3].max())) if self.rows.size else 0

    def halving_change(self, factor: float = 4.0) -> float:
        """|S(B) - S(B/2)|: the change from the last doubling of the lattice bound."""
        if self.rows.size == 0:
            return 0.0
        b = self.max_l()
        return abs(self.total(None, factor) - self.total(b // 2, factor))

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k1", "l1", "k2", "l2", "weight", "value"])
            for row in self.rows:
                w.writerow([int(row[0]), int(row[1]), int(row[2]), int(row[3]), repr(float(row[4])), repr(float(row[5]))])


def pair_table(h: HFunction, outer, inner, kernel, q: QuadConfig = QuadConfig()) -> PairTable:
    """Evaluate ``kernel(h, pair, q)`` for every (outer point, inner point) combination."""
    w1 = lattice_weights(outer)
    w2 = lattice_weights(inner)
    rows = []
    for p1, a1 in zip(outer.points, w1):
        for p2, a2 in zip(inner.points, w2):
            if a1 == 0.0 or a2 == 0.0:
                continue
            val = kernel(h, Pair.from_lattice(p1.k, p1.l, p2.k, p2.l), q)
            rows.append((p1.k, p1.l, p2.k, p2.l, a1 * a2, val))
    return PairTable(np.array(rows, dtype=float).reshape(-1, 6))
