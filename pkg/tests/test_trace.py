"""The series trace, the quadruple sum, the corrections, and the identity tying them to Delta."""

import json
import math

import numpy as np
import pytest

import oracles
from weiltrace.kernels import QuadConfig
from weiltrace.places import build_lattice, compute_place_set
from weiltrace.testfn import autocorrelate, make_bump
from weiltrace.trace import (
    DEFAULT_SAMPLES,
    TraceReport,
    corrections_thm16,
    full_report,
    log_reproducing_check,
    moments_certified,
    term1_series,
    trace_vht,
    verify_thm16,
)
from weiltrace.weil import weil_distribution


@pytest.fixture(scope="module")
def full03(hp03, lattice_empty):
    w = weil_distribution(hp03, lattice_empty)
    return (w,) + full_report(hp03, lattice_empty, w)


@pytest.fixture(scope="module")
def full04(hp04, lattice04):
    w = weil_distribution(hp04, lattice04)
    return (w,) + full_report(hp04, lattice04, w)


class TestTermSeries:
    def test_zero(self, zero_h, lattice04):
        s = term1_series(zero_h, lattice04)
        assert s.value == 0.0 and s.tail == 0.0

    def test_empty_set_single_term_against_nested(self, h03, lattice_empty):
        h1, d1, d2 = (float(v[0]) for v in h03.derivs(np.array([1.0])))
        ref = 4 * oracles.term1_nested(h03, h1, d1, d2, h03.upper, 2 * math.pi, 2 * math.pi)
        s = term1_series(h03, lattice_empty)
        assert s.tail == 0.0
        assert abs(s.value - ref) <= 1e-5

    def test_weight_conventions_agree(self, hp04, lattice04):
        coprime = build_lattice(lattice04.place_set, True, lattice04.bound)
        a = term1_series(hp04, coprime)
        b = term1_series(hp04, lattice04)
        assert abs(a.value - b.value) <= a.tail + b.tail

    @pytest.mark.parametrize("fixture", ["full03", "full04"])
    def test_nonnegative(self, request, fixture):
        _, rep, _ = request.getfixturevalue(fixture)
        assert rep.term1 >= -rep.tail_estimates["term1"]
        assert rep.corollary_sum >= -rep.tail_estimates["corollary_sum"]

    def test_unprojected_nonnegative(self, h03, lattice_empty):
        assert term1_series(h03, lattice_empty).value >= 0.0


class TestTraceReport:
    def test_zero(self, zero_h, lattice04):
        rep = trace_vht(zero_h, lattice04)
        assert rep.term1 == rep.term2 == rep.trace == rep.corollary_sum == 0.0
        assert tuple(corrections_thm16(zero_h, lattice04)) == (0.0, 0.0)

    @pytest.mark.parametrize("fixture", ["full03", "full04"])
    def test_structure(self, request, fixture):
        _, rep, _ = request.getfixturevalue(fixture)
        assert abs(rep.term1 - rep.term2) <= 1e-8
        assert rep.trace == rep.term1 + rep.term2
        assert rep.corollary_sum == rep.term1 / 4
        assert abs(8 * rep.corollary_sum - rep.trace) <= 2 * rep.tail_estimates["quadrature"] + 1e-15
        c1, c2 = rep.corrections
        assert abs(c1 - c2) <= 1e-8

    def test_frozen_trace(self, full03):
        _, rep, _ = full03
        assert rep.trace == pytest.approx(0.024959632489376368, rel=1e-9)
        assert rep.corollary_sum == pytest.approx(0.0031199540611720478, rel=1e-9)

    def test_correction_stable_under_refinement(self, hp03, lattice_empty, full03):
        _, rep, _ = full03
        fine = corrections_thm16(hp03, lattice_empty, QuadConfig().refined().refined())
        assert abs(fine.c1 - rep.corrections[0]) <= 1e-6

    def test_json_round_trip(self, full04):
        _, rep, _ = full04
        data = json.loads(rep.to_json())
        assert TraceReport.from_dict(data) == rep

    def test_lattice_mismatch(self, hp04, lattice04):
        other = build_lattice(lattice04.place_set, False, 32)
        with pytest.raises(ValueError):
            trace_vht(hp04, (lattice04, build_lattice(compute_place_set(0.3), False, 8)))
        w = weil_distribution(hp04, other)
        with pytest.raises(ValueError):
            verify_thm16(hp04, w, trace_vht(hp04, lattice04))


class TestIdentity:
    @pytest.mark.parametrize("fixture", ["full03", "full04"])
    def test_residual(self, request, fixture):
        w, rep, chk = request.getfixturevalue(fixture)
        assert chk.mellin_moments <= 1e-9
        assert chk.passed
        assert abs(chk.residual) <= 1e-4 * (1 + abs(rep.trace))
        assert rep.residual_thm16 == chk.residual
        assert rep.delta0 == w.delta_lattice

    def test_zero(self, zero_h, lattice_empty):
        w = weil_distribution(zero_h, lattice_empty)
        rep = trace_vht(zero_h, lattice_empty)
        assert verify_thm16(zero_h, w, rep).residual == 0.0

    def test_unprojected_rejected(self, h03, lattice_empty):
        w = weil_distribution(h03, lattice_empty)
        rep = trace_vht(h03, lattice_empty)
        with pytest.raises(ValueError):
            verify_thm16(h03, w, rep)
        with pytest.raises(ValueError):
            moments_certified(h03)

    def test_moments_certified(self, hp04):
        assert moments_certified(hp04) <= 1e-9


@pytest.fixture(scope="module")
def result(h03):
    return log_reproducing_check(h03)


class TestLogReproducing:
    def test_value_at_one_is_zero(self, result):
        _, vals = result
        assert abs(vals[DEFAULT_SAMPLES.index(1.0)]) <= 1e-6

    def test_half(self, h03, result):
        _, vals = result
        expected = float(h03(np.array([0.5]))[0]) * math.log(2)
        assert abs(vals[DEFAULT_SAMPLES.index(0.5)] - expected) <= 1e-5

    def test_max_residual(self, result):
        res, vals = result
        assert len(vals) == 10
        assert res <= 1e-5

    def test_zero(self, zero_h):
        res, vals = log_reproducing_check(zero_h)
        assert res == 0.0 and np.all(vals == 0.0)

    def test_other_function(self):
        h = autocorrelate(make_bump(0.05, 0.25, 2.0))
        res, _ = log_reproducing_check(h)
        assert res <= 1e-5 * max(1.0, h.max_abs)
