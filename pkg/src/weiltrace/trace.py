"""trace(V(h) T) by the lattice series, the nonnegative quadruple sum, and the correction integrals.

Each adelic double integral is reduced to ``4 * sum w1 w2 K(a, b)`` over pairs of
lattice points, with ``K`` one of the per-pair kernels in :mod:`weiltrace.kernels`:
the regularized outer integral over v > 1 for the trace, and the absolutely
convergent one over 0 < v < 1 for the corrections.  The lattice tail of a sum is
estimated by the change from the last doubling of the lattice bound.

The two |u| >= 1 and |u| > 1 terms of the trace differ by a null set.  The second
is evaluated by the same reduction on a refined quadrature, so ``|term1 - term2|``
measures the quadrature error rather than being zero by construction.  The two
correction terms are handled the same way.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .kernels import (
    InnerExpansion,
    PairTable,
    QuadConfig,
    correction_pair,
    inner_bound_constant,
    inner_cos_expansion,
    inner_cos_transform,
    pair_table,
    term1_pair,
)
from .places import NSLattice
from .special import cosine_round_trip
from .testfn import HFunction, mellin_h
from .weil import WeilBreakdown

__all__ = [
    "InnerExpansion",
    "SeriesValue",
    "TraceReport",
    "Thm16Check",
    "corrections_thm16",
    "inner_bound_constant",
    "inner_cos_expansion",
    "inner_cos_transform",
    "log_reproducing_check",
    "term1_series",
    "trace_vht",
    "verify_thm16",
]

Lattices = NSLattice | Sequence[NSLattice]


def _pair(lattices: Lattices) -> tuple[NSLattice, NSLattice]:
    if isinstance(lattices, NSLattice):
        return lattices, lattices
    outer, inner = lattices
    if outer.place_set.primes != inner.place_set.primes:
        raise ValueError("both lattices must share one place set")
    return outer, inner


@dataclass(frozen=True)
class SeriesValue:
    """A lattice double sum with its lattice-tail estimate and per-pair terms."""

    value: float
    tail: float
    table: PairTable = field(repr=False)

    def __float__(self) -> float:
        return self.value


def _series(h, lattices, kernel, quad) -> SeriesValue:
    outer, inner = _pair(lattices)
    if h.is_zero:
        return SeriesValue(0.0, 0.0, PairTable(np.zeros((0, 6))))
    table = pair_table(h, outer, inner, kernel, quad)
    # with no finite places the lattice is the single point (1, 1) and nothing is truncated
    tail = 0.0 if outer.place_set.is_trivial else table.halving_change()
    return SeriesValue(table.total(), tail, table)


def term1_series(h: HFunction, lattices: Lattices, quad: QuadConfig = QuadConfig()) -> SeriesValue:
    """4 sum w1 w2 int_1^inf log v cos(a v) int_1^U h(u) cos(b u v) du dv (outer integral regularized).

    Coprime-mode lattices carry their rho_S factor in the weights, so both weight
    conventions give the same limit.
    """
    return _series(h, lattices, term1_pair, quad)


@dataclass
class TraceReport:
    term1: float
    term2: float
    trace: float
    corollary_sum: float
    corrections: tuple[float, float] = (0.0, 0.0)
    delta0: float = 0.0
    residual_thm16: float = 0.0
    tail_estimates: dict[str, float] = field(default_factory=dict)
    lattice_bound: int = 0
    place_set: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["corrections"] = list(self.corrections)
        d["place_set"] = list(self.place_set)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TraceReport":
        d = dict(d)
        d["corrections"] = tuple(d["corrections"])
        d["place_set"] = tuple(d["place_set"])
        return cls(**d)


def trace_vht(h: HFunction, lattices: Lattices, quad: QuadConfig = QuadConfig()) -> TraceReport:
    """term1, term2 (refined quadrature), trace = term1 + term2 and the quadruple sum term1 / 4."""
    outer, inner = _pair(lattices)
    t1 = term1_series(h, (outer, inner), quad)
    t2 = term1_series(h, (outer, inner), quad.refined())
    quad_err = abs(t1.value - t2.value)
    return TraceReport(
        term1=t1.value,
        term2=t2.value,
        trace=t1.value + t2.value,
        corollary_sum=t1.value / 4,
        tail_estimates={
            "term1": t1.tail,
            "term2": t2.tail,
            "trace": t1.tail + t2.tail,
            "corollary_sum": t1.tail / 4,
            "quadrature": quad_err,
        },
        lattice_bound=min(outer.bound, inner.bound),
        place_set=outer.place_set.primes,
    )


@dataclass(frozen=True)
class Corrections:
    c1: float
    c2: float
    tail: float

    def __iter__(self):
        return iter((self.c1, self.c2))


def corrections_thm16(h: HFunction, lattices: Lattices, quad: QuadConfig = QuadConfig()) -> Corrections:
    """4 sum w1 w2 int_0^1 log v cos(a v) int_1^U h(u) cos(b u v) du dv, twice (second on a refined rule)."""
    c1 = _series(h, lattices, correction_pair, quad)
    c2 = _series(h, lattices, correction_pair, quad.refined())
    return Corrections(c1.value, c2.value, max(c1.tail, c2.tail))


@dataclass(frozen=True)
class Thm16Check:
    """trace - (Delta - C1 - C2) with both sides on the same truncated lattice.

    ``residual_untruncated_delta`` uses the untruncated Delta instead; it differs from
    ``residual`` by the lattice tails of the trace and correction series.
    """

    residual: float
    residual_untruncated_delta: float
    bound: float
    passed: bool
    mellin_moments: float

    def __float__(self) -> float:
        return self.residual


def verify_thm16(
    h: HFunction,
    weil: WeilBreakdown,
    report: TraceReport,
    rtol: float = 1e-4,
    moment_tol: float = 1e-9,
    allow_unprojected: bool = False,
) -> Thm16Check:
    """Check the identity; fills ``delta0`` and ``residual_thm16`` of ``report``.

    The identity needs h^(0) = h^(1) = 0.  Input violating that beyond ``moment_tol``
    is rejected unless ``allow_unprojected``.
    """
    moments = abs(weil.h_hat_0) + abs(weil.h_hat_1)
    if moments > moment_tol and not allow_unprojected:
        raise ValueError(f"test function is not moment-projected: |h^(0)| + |h^(1)| = {moments:.3e}")
    if weil.lattice_bound != report.lattice_bound:
        raise ValueError("Weil breakdown and trace report were computed on different lattice bounds")
    c1, c2 = report.corrections
    delta0 = weil.delta_lattice
    residual = report.trace - (delta0 - c1 - c2)
    report.delta0 = delta0
    report.residual_thm16 = residual
    bound = rtol * (1.0 + abs(report.trace))
    return Thm16Check(
        residual=residual,
        residual_untruncated_delta=report.trace - (weil.delta - c1 - c2),
        bound=bound,
        passed=abs(residual) <= bound,
        mellin_moments=moments,
    )


def full_report(h: HFunction, lattice: NSLattice, weil: WeilBreakdown, quad: QuadConfig = QuadConfig()):
    """trace_vht plus the corrections and the identity check on one lattice."""
    report = trace_vht(h, lattice, quad)
    corr = corrections_thm16(h, lattice, quad)
    report.corrections = (corr.c1, corr.c2)
    report.tail_estimates["corrections"] = corr.tail
    check = verify_thm16(h, weil, report, allow_unprojected=True)
    return report, check


DEFAULT_SAMPLES = (0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0, 1.25)


def log_reproducing_check(
    h: HFunction,
    quad: QuadConfig = QuadConfig(),
    points: Sequence[float] = DEFAULT_SAMPLES,
    cutoff: float = 200.0,
) -> tuple[float, np.ndarray]:
    """Cosine round trip of f(l) = h(l) log max(1, 1/l) at sample points.

    In the real reduction the double additive Fourier transform of f is the
    cosine transform applied twice.  Returns the max pointwise residual and the
    reproduced values.  f is continuous at 1 with f(1) = 0.  The only kink is there,
    with left derivative -h(1).
    """
    y = np.asarray(points, dtype=float)
    if h.is_zero:
        return 0.0, np.zeros_like(y)

    def f(lam):
        return h(lam) * np.log(np.maximum(1.0, 1.0 / lam))

    ends = (0.0, 0.0, 0.0, -h.at_one)
    hi = 1.0 if h.mu < 1.0 else h.mu
    vals = cosine_round_trip(f, h.mu, hi, ends, y, cutoff=cutoff)
    return float(np.max(np.abs(vals - f(y)))), vals


def moments_certified(h: HFunction, tol: float = 1e-9) -> float:
    """|h^(0)| + |h^(1)|, raising if it exceeds ``tol``."""
    hh = np.atleast_1d(mellin_h(h, np.array([0.0, 1.0])))
    m = float(np.abs(hh).sum())
    if m > tol:
        raise ValueError(f"|h^(0)| + |h^(1)| = {m:.3e} exceeds {tol:g}")
    return m
