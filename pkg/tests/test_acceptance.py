"""The eleven acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (visible with or without ``-s``) and
then asserts the same condition.
"""

import math

import numpy as np
import pytest

import oracles
from conftest import bump_tuples
from weiltrace import operators as ops
from weiltrace.kernels import Pair, prime_pair
from weiltrace.places import build_lattice, compute_place_set
from weiltrace.special import chi, cosine_moment, osc_log_cos_full, osc_log_cos_tail
from weiltrace.testfn import (
    autocorrelate,
    make_bump,
    mellin_g,
    mellin_h,
    project_vanishing_moment,
    random_test_function,
)
from weiltrace.trace import full_report, log_reproducing_check, moments_certified, term1_series, DEFAULT_SAMPLES
from weiltrace.weil import finite_place_term, primes_above_cutoff, weil_distribution

LAMBDA = 2.0
BOUND = 64


@pytest.fixture
def line(capsys):
    def emit(title: str, passed: bool, detail: str) -> bool:
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] {title}: {detail}")
        return passed

    return emit


def archimedean_only(h):
    return -4.0 * prime_pair(h, Pair(2 * math.pi, 2 * math.pi, 1))


# --------------------------------------------------------------------------------------


def test_autocorrelation_laws(line, gp04, hp04):
    rng = np.random.default_rng(1)
    mu = hp04.mu
    outside = np.concatenate([rng.uniform(1e-6, mu, 5000), rng.uniform(1 / mu, 50.0, 5000)])
    support_ok = bool(np.all(hp04(outside) == 0.0))
    x = np.exp(np.linspace(-1.0, 1.0, 2001))
    fe = float(np.max(np.abs(hp04(1 / x) - x * hp04(x))) / hp04.max_abs)
    s = rng.uniform(0, 1, 20) + 1j * rng.uniform(-10, 10, 20)
    prod = mellin_g(gp04, s) * mellin_g(gp04, 1 - s)
    mel = float(np.max(np.abs(mellin_h(hp04, s) - prod) / (1 + np.abs(prod))))
    ok = support_ok and fe <= 1e-10 and mel <= 1e-8
    assert line("autocorrelation laws", ok,
                f"support exact on 1e4 samples={support_ok}, functional eq {fe:.2e} <= 1e-10, Mellin {mel:.2e} <= 1e-8")


def test_finite_place_vanishing(line, hp03, hp04):
    vals = {}
    for h in (hp03, hp04):
        for p in primes_above_cutoff(h.mu, 5):
            vals[(round(h.mu, 4), p)] = finite_place_term(h, p)
    ok = all(v == 0.0 for v in vals.values()) and len(vals) == 10
    assert line("finite-place terms vanish above the cutoff", ok,
                f"5 primes >= 1/mu for mu in {{{hp03.mu:.4f}, {hp04.mu:.4f}}}, max |term| = {max(map(abs, vals.values()))}")


def test_route_consistency(line, hp04):
    ps = compute_place_set(hp04.mu)
    assert ps.primes == (2,)
    closed = finite_place_term(hp04, 2)
    arch = archimedean_only(hp04)
    rows = []
    for b in (64, 128):
        w = weil_distribution(hp04, build_lattice(ps, False, b))
        rows.append((b, w.prime_sum_total - arch, w.prime_sum_lattice - arch))
    rel = [abs(r[1] - closed) / abs(closed) for r in rows]
    drift = abs(rows[1][1] - rows[0][1]) / abs(closed)
    ok = max(rel) <= 1e-4 and drift <= 1e-4
    trunc = ", ".join(f"B={b}: {t:.3e}" for b, _, t in rows)
    assert line("p = 2 closed form vs prime-sum attribution", ok,
                f"closed {closed:.10e}, rel err {max(rel):.2e} <= 1e-4, doubling drift {drift:.2e}; "
                f"truncated-lattice attribution (informational) {trunc}")


IDENTITY_FUNCTIONS = {
    "empty": [("bump(0, 0.3)", lambda: make_bump(0.0, 0.3)),
              ("bump(0.05, 0.25, 1.7)", lambda: make_bump(0.05, 0.25, 1.7)),
              ("random:11", lambda: random_test_function(np.random.default_rng(11), 0.3))],
    "two": [("bump(0, 0.4)", lambda: make_bump(0.0, 0.4)),
            ("random:1", lambda: random_test_function(np.random.default_rng(1), 0.45)),
            ("random:2", lambda: random_test_function(np.random.default_rng(2), 0.45))],
}


@pytest.mark.parametrize("place_set", ["empty", "two"])
def test_trace_identity(line, place_set):
    expected = () if place_set == "empty" else (2,)
    worst, parts, ok = 0.0, [], True
    for name, make in IDENTITY_FUNCTIONS[place_set]:
        g = project_vanishing_moment(make())
        h = autocorrelate(g)
        ps = compute_place_set(h.mu)
        assert ps.primes == expected
        moments = moments_certified(h, 1e-9)
        lat = build_lattice(ps, False, BOUND)
        w = weil_distribution(h, lat)
        rep, chk = full_report(h, lat, w)
        tail = w.delta - w.delta_lattice
        ok &= chk.passed and moments <= 1e-9
        worst = max(worst, abs(chk.residual) / (1 + abs(rep.trace)))
        parts.append(f"{name}: residual {chk.residual:.1e} (untruncated Delta {chk.residual_untruncated_delta:.1e}, "
                     f"lattice tail {tail:.1e}), moments {moments:.0e}")
    assert line(f"trace = Delta - C1 - C2, S'={list(expected)}", ok,
                f"max |residual|/(1+|trace|) = {worst:.2e} <= 1e-4 on the lattice B={BOUND}; " + "; ".join(parts))


EXTENTS = {"empty": (0.25, ()), "two": (0.45, (2,)), "two_three": (0.65, (2, 3))}


@pytest.mark.parametrize("place_set", list(EXTENTS))
def test_quadruple_sum_nonnegative(line, place_set):
    extent, expected = EXTENTS[place_set]
    lattice = None
    worst_margin, worst_tail_ratio, ok = math.inf, 0.0, True
    for seed in range(10):
        g = random_test_function(np.random.default_rng(1000 + seed), extent)
        h = autocorrelate(g, n_grid=1024)
        ps = compute_place_set(h.mu)
        assert ps.primes == expected
        if lattice is None:
            lattice = build_lattice(ps, False, BOUND)
        s = term1_series(h, lattice)
        total, tail = s.value / 4, s.tail / 4
        ok &= total >= -tail and tail <= 1e-5 * (1 + abs(total))
        worst_margin = min(worst_margin, total + tail)
        worst_tail_ratio = max(worst_tail_ratio, tail / (1e-5 * (1 + abs(total))))
    assert line(f"quadruple sum nonnegative, S'={list(expected)}", ok,
                f"10 random functions, min(sum + tail) = {worst_margin:.3e} >= 0, max tail/(1e-5(1+|sum|)) = {worst_tail_ratio:.2f}")


@pytest.fixture(scope="module")
def positivity(hp03):
    grid = ops.default_grid(hp03.mu, LAMBDA, 600)
    return grid, ops.positivity_report(hp03, grid, LAMBDA)


def test_positivity_spectra(line, positivity):
    _, r = positivity
    sp = r.spectrum
    c = r.checks()
    ok = all(c.values())
    assert line("positivity spectra (n=600, Lambda=2)", ok,
                f"min eig T/|T| = {r.min_eig_T / r.norm_T:.1e} >= -1e-6, min eig V(h)/|V(h)| = {r.min_eig_Vh / r.norm_Vh:.1e} "
                f">= -1e-8, min Re eig V(h)T/rho = {sp.min_real / sp.spectral_radius:.1e} >= -1e-5, "
                f"max |Im|/rho = {sp.max_abs_imag / sp.spectral_radius:.1e} <= 1e-6")


def test_triple_trace(line, hp03, lattice_empty, positivity):
    grid, r = positivity
    series = full_report(hp03, lattice_empty, weil_distribution(hp03, lattice_empty))[0].trace
    diag = ops.trace_diagonal(hp03, LAMBDA)
    eig = r.spectrum.eigenvalue_sum
    coarse = float(np.trace(ops.vht_matrix(hp03, ops.default_grid(hp03.mu, LAMBDA, 300), LAMBDA).entries))
    rel = lambda a, b: abs(a - b) / max(abs(a), abs(b))
    pair = [rel(series, diag), rel(series, eig), rel(diag, eig)]
    gain = abs(coarse - diag) / abs(eig - diag)
    ok = max(pair) <= 1e-3 and gain >= 3
    assert line("series = diagonal = eigenvalue trace", ok,
                f"series {series:.10f}, diagonal {diag:.10f}, eigenvalues {eig:.10f}; max pairwise rel {max(pair):.1e} "
                f"<= 1e-3; halving-grid gain {gain:.1f} >= 3")


def test_factorization_and_decomposition(line, gp03, hp03):
    errs = [ops.factorization_error(gp03, hp03, ops.default_grid(hp03.mu, LAMBDA, n)) for n in (30, 60, 120, 240)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    dec = ops.decomposition_check(gp03, ops.symmetric_grid(40.0, 256, LAMBDA), LAMBDA)
    ok = all(o >= 1.8 for o in orders) and dec.residual <= errs[2]
    assert line("factorization and commutator decomposition as matrices", ok,
                f"V(g)V(g*) vs V(h) errors {', '.join(f'{e:.1e}' for e in errs)} (observed orders "
                f"{', '.join(f'{o:.2f}' for o in orders)}); decomposition residual {dec.residual:.1e} <= {errs[2]:.1e}")


def test_reproducing(line, gp03, hp03):
    res_g, ys, _ = ops.reproducing_check_44(1.0, LAMBDA, gp03)
    gmax = float(np.max(np.abs(oracles.bump_log(np.linspace(-0.3, 0.3, 4001), bump_tuples(gp03)))))
    res_log, vals = log_reproducing_check(hp03)
    at_one = float(vals[DEFAULT_SAMPLES.index(1.0)])
    ok = len(ys) == 10 and res_g <= 1e-4 * gmax and res_log <= 1e-5 and abs(at_one) <= 1e-5
    assert line("reproducing identities", ok,
                f"g-identity residual {res_g:.1e} <= {1e-4 * gmax:.1e} at 10 points; log-weighted residual "
                f"{res_log:.1e} <= 1e-5, value at y=1: {at_one:.1e}")


def test_regularization(line):
    omegas = [math.pi / 4, math.pi, 2 * math.pi, 10 * math.pi]
    tail = max(abs(osc_log_cos_tail(w) - oracles.abel_log_cos_tail(w)) for w in omegas)
    full = max(abs(osc_log_cos_full(w) - oracles.abel_log_cos_full(w)) for w in omegas)
    c = abs(chi(0.5) - 1.0)
    m = abs(cosine_moment(0.5) - math.sqrt(math.pi / 2))
    ok = tail <= 1e-6 and full <= 1e-6 and c <= 1e-12 and m <= 1e-10
    assert line("regularization cross-checks", ok,
                f"log-cos tail vs Abel {tail:.1e}, full vs Abel {full:.1e} (<= 1e-6, 4 frequencies each); "
                f"|chi(1/2)-1| = {c:.1e}; |cosine_moment(1/2)-sqrt(pi/2)| = {m:.1e}")


def test_decay_bound(line, g03, gp03):
    parts, ok = [], True
    for name, g in (("bump", g03), ("projected", gp03)):
        ratios = ops.decay_bound_check(1 / LAMBDA, None, LAMBDA, g).ratios()
        ok &= all(r <= 50 for r in ratios.values())
        parts.append(f"{name}: " + ", ".join(f"c={c}: {r:.1f}" for c, r in ratios.items()))
    assert line("decay bound over four decades", ok, "max/min ratios <= 50; " + "; ".join(parts))
