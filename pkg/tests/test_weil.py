"""The Weil distribution: finite-place terms, the prime sum, and route consistency."""

import json
import math

import numpy as np
import pytest

from weiltrace.kernels import Pair, prime_pair
from weiltrace.places import build_lattice, compute_place_set
from weiltrace.weil import (
    WeilBreakdown,
    finite_place_term,
    prime_sum_fourier,
    primes_above_cutoff,
    weil_distribution,
)


def archimedean_only(h):
    """The prime sum over the one-point lattice of the case without finite places."""
    return -4.0 * prime_pair(h, Pair(2 * math.pi, 2 * math.pi, 1))


@pytest.fixture(scope="module")
def weil04(hp04, lattice04):
    return weil_distribution(hp04, lattice04)


@pytest.fixture(scope="module")
def weil03(hp03, lattice_empty):
    return weil_distribution(hp03, lattice_empty)


class TestFinitePlaceTerm:
    def test_vanishes_above_cutoff(self, hp04):
        above = primes_above_cutoff(hp04.mu, 5)
        assert len(above) == 5 and min(above) >= 1 / hp04.mu
        assert above[0] == 3
        for p in above:
            assert finite_place_term(hp04, p) == 0.0

    def test_two_with_functional_equation(self, hp04):
        h2 = float(hp04(np.array([2.0]))[0])
        h_half = float(hp04(np.array([0.5]))[0])
        assert h_half == pytest.approx(2 * h2, rel=1e-10)
        direct = math.log(2) * (h2 + h_half / 2)
        assert finite_place_term(hp04, 2) == pytest.approx(direct, rel=1e-14)
        assert finite_place_term(hp04, 2) == pytest.approx(2 * math.log(2) * h2, rel=1e-10)

    def test_zero_function(self, zero_h):
        assert finite_place_term(zero_h, 2) == 0.0

    @pytest.mark.parametrize("p", [1, 4, 9, 2.5])
    def test_rejects_non_prime(self, hp04, p):
        with pytest.raises(ValueError):
            finite_place_term(hp04, p)


class TestPrimeSum:
    def test_zero_function(self, zero_h, lattice_empty):
        assert prime_sum_fourier(zero_h, lattice_empty).value == 0.0

    def test_no_finite_places_is_archimedean(self, hp03, lattice_empty, weil03):
        # with S' empty the lattice is the single point (1, 1) and has no tail
        assert lattice_empty.place_set.primes == ()
        ps = prime_sum_fourier(hp03, lattice_empty)
        assert ps.lattice_value == pytest.approx(archimedean_only(hp03), rel=1e-14)
        assert abs(ps.value - ps.lattice_value) <= 1e-10
        assert weil03.archimedean == weil03.prime_sum_total

    def test_attribution_stable_under_doubling(self, hp04):
        ps = compute_place_set(hp04.mu)
        vals = [prime_sum_fourier(hp04, build_lattice(ps, False, b)) for b in (32, 64, 128)]
        attributed = [v.value - finite_place_term(hp04, 2) for v in vals]
        assert max(attributed) - min(attributed) <= 1e-5
        for v in vals:
            assert v.consistency <= 1e-9

    def test_truncated_sum_converges_towards_total(self, hp04):
        ps = compute_place_set(hp04.mu)
        tails = [abs(prime_sum_fourier(hp04, build_lattice(ps, False, b)).lattice_tail) for b in (16, 32, 64)]
        assert tails[0] > tails[1] > tails[2]


class TestWeilDistribution:
    def test_zero_function(self, zero_h, lattice_empty):
        w = weil_distribution(zero_h, lattice_empty)
        assert w.delta == w.archimedean == w.prime_sum_total == 0.0
        assert w.h_hat_0 == w.h_hat_1 == 0

    def test_breakdown_invariants(self, weil04):
        w = weil04
        assert w.archimedean == w.prime_sum_total - math.fsum(w.finite_terms.values())
        assert w.delta == pytest.approx((w.h_hat_0 + w.h_hat_1).real - w.prime_sum_total, abs=1e-18)
        assert abs(w.h_hat_0) + abs(w.h_hat_1) <= 1e-9
        assert w.place_set == (2,)

    def test_projected_empty_set_delta_is_minus_archimedean(self, weil03):
        assert weil03.finite_terms == {}
        assert weil03.delta == pytest.approx(-weil03.archimedean, abs=1e-9)

    def test_golden_values(self, weil03, weil04):
        # frozen after the refinement study (bound doubling and quadrature doubling agree)
        assert weil03.delta == pytest.approx(0.025280769126354862, rel=1e-8)
        assert weil04.delta == pytest.approx(0.023835364913746077, rel=1e-8)
        assert weil04.finite_terms[2] == pytest.approx(1.0215696147631322e-05, rel=1e-9)

    def test_route_consistency(self, hp04, weil04):
        fourier = weil04.prime_sum_total - archimedean_only(hp04)
        closed = weil04.finite_terms[2]
        assert abs(fourier - closed) <= 1e-4 * abs(closed)

    def test_refinement_within_error_estimate(self, hp04, lattice04, weil04):
        from weiltrace.kernels import QuadConfig

        fine = weil_distribution(hp04, build_lattice(lattice04.place_set, False, 128), QuadConfig().refined())
        assert abs(fine.prime_sum_total - weil04.prime_sum_total) <= max(weil04.quadrature_error_estimate, 1e-12)

    def test_json_round_trip(self, weil04):
        text = weil04.to_json()
        data = json.loads(text)
        assert set(data) >= {"h_hat_0", "h_hat_1", "finite_terms", "prime_sum_total", "archimedean", "delta",
                             "quadrature_error_estimate"}
        back = WeilBreakdown.from_dict(data)
        assert back == weil04

    def test_place_set_mismatch(self, hp03, lattice04):
        with pytest.raises(ValueError):
            weil_distribution(hp03, lattice04)
