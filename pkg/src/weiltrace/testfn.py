"""Test functions g, their autocorrelations h, and Mellin transforms.

A test function is a finite sum of smooth bumps in the logarithmic coordinate
``t = log x``::

    g(x) = sum_i A_i * phi((log x - c_i) / w_i),   phi(z) = exp(-1 / (1 - z^2)),  |z| < 1

Its autocorrelation ``h(x) = int_0^inf g(x y) g(y) dy`` is tabulated on a uniform
grid in ``log x`` together with its first two log-derivatives and evaluated by
piecewise quintic Hermite interpolation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .quadrature import integrate, panels


class TestFunctionError(ValueError):
    """Invalid test-function construction."""

    __test__ = False  # not a pytest class


# integral of exp(-1/(1-z^2)) over (-1, 1)
_PHI_MASS = float(integrate(lambda z: np.exp(-1.0 / (1.0 - z * z)), -1.0, 1.0, rtol=1e-15, start_panels=4))


def _phi_derivs(z: np.ndarray):
    """phi, phi', phi'' of the standard mollifier, zero outside (-1, 1)."""
    z = np.asarray(z, dtype=float)
    p0 = np.zeros_like(z)
    p1 = np.zeros_like(z)
    p2 = np.zeros_like(z)
    m = np.abs(z) < 1.0
    if np.any(m):
        zm = z[m]
        q = 1.0 - zm * zm
        e = np.exp(-1.0 / q)
        p0[m] = e
        p1[m] = e * (-2.0 * zm / q**2)
        p2[m] = e * (6.0 * zm**4 - 2.0) / q**4
    return p0, p1, p2


@dataclass(frozen=True)
class Bump:
    center: float
    half_width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise TestFunctionError(f"half_width must be positive, got {self.half_width}")

    @property
    def log_extent(self) -> float:
        return abs(self.center) + self.half_width

    @property
    def log_mass(self) -> float:
        """``int g(u) du / u`` of this bump alone."""
        return self.amplitude * self.half_width * _PHI_MASS


@dataclass(frozen=True)
class TestFunction:
    """Finite sum of log-domain bumps; ``mu`` is derived from the bump extents."""

    __test__ = False  # not a pytest class

    bumps: tuple[Bump, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))

    @property
    def is_zero(self) -> bool:
        return all(b.amplitude == 0 for b in self.bumps)

    @property
    def mu(self) -> float:
        """Tightest mu with support(g) inside (sqrt(mu), 1/sqrt(mu))."""
        if not self.bumps:
            return math.exp(-2.0 * 0.25)
        return math.exp(-2.0 * max(b.log_extent for b in self.bumps))

    @property
    def log_support(self) -> tuple[float, float]:
        if not self.bumps:
            return (0.0, 0.0)
        return (min(b.center - b.half_width for b in self.bumps),
                max(b.center + b.half_width for b in self.bumps))

    def log_derivs(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """G(t) = g(e^t) and its first two t-derivatives."""
        t = np.asarray(t, dtype=float)
        g0 = np.zeros_like(t)
        g1 = np.zeros_like(t)
        g2 = np.zeros_like(t)
        for b in self.bumps:
            p0, p1, p2 = _phi_derivs((t - b.center) / b.half_width)
            g0 += b.amplitude * p0
            g1 += b.amplitude * p1 / b.half_width
            g2 += b.amplitude * p2 / b.half_width**2
        return g0, g1, g2

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = self.log_derivs(np.log(x[pos]))[0]
        return out

    def derivative(self, x, order: int = 1) -> np.ndarray:
        """d/dx or d^2/dx^2 of g at x > 0."""
        x = np.asarray(x, dtype=float)
        g0, g1, g2 = self.log_derivs(np.log(x))
        if order == 1:
            return g1 / x
        if order == 2:
            return (g2 - g1) / x**2
        raise ValueError("order must be 1 or 2")

    def star(self, x) -> np.ndarray:
        """g*(x) = g(1/x) / x."""
        x = np.asarray(x, dtype=float)
        return self(1.0 / x) / x

    def log_moment(self) -> float:
        """Exact ``int_0^inf g(u) du/u`` (the Mellin transform at s = 0)."""
        return sum(b.log_mass for b in self.bumps)

    def to_dict(self) -> dict:
        return {"bumps": [{"center": b.center, "half_width": b.half_width, "amplitude": b.amplitude}
                          for b in self.bumps]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "TestFunction":
        return cls(tuple(Bump(float(b["center"]), float(b["half_width"]), float(b.get("amplitude", 1.0)))
                         for b in data.get("bumps", [])))

    @classmethod
    def from_json(cls, text: str) -> "TestFunction":
        return cls.from_dict(json.loads(text))


def make_bump(center: float, half_width: float, amplitude: float = 1.0) -> TestFunction:
    return TestFunction((Bump(center, half_width, amplitude),))


def combine(*fns: TestFunction) -> TestFunction:
    return TestFunction(tuple(b for f in fns for b in f.bumps))


def project_vanishing_moment(g: TestFunction, tol: float = 1e-15) -> TestFunction:
    """Subtract a multiple of a reference bump so that ``int g(u) du/u = 0``.

    The reference bump is concentric with the occupied log-support and half as
    wide, so the support window (and hence mu and the place set) is unchanged.
    Since ``h^(s) = g^(s) g^(1-s)``, a vanishing ``g^(0)`` kills ``h^(0)`` and ``h^(1)``.
    """
    if g.is_zero:
        return g
    scale = sum(abs(b.log_mass) for b in g.bumps)
    m0 = g.log_moment()
    if abs(m0) <= tol * scale:
        return g
    lo, hi = g.log_support
    ref = Bump(0.5 * (lo + hi), 0.25 * (hi - lo), 1.0)
    if not ref.log_extent < -0.5 * math.log(g.mu):
        raise TestFunctionError("no room for a reference bump inside the support window")
    c = m0 / ref.log_mass
    return TestFunction(g.bumps + (Bump(ref.center, ref.half_width, -c),))


def random_test_function(rng: np.random.Generator, log_extent: float, n_bumps: int | None = None) -> TestFunction:
    """Random sum of bumps whose outermost log-extent is exactly ``log_extent``."""
    if n_bumps is None:
        n_bumps = int(rng.integers(1, 4))
    bumps = []
    for i in range(n_bumps):
        w = float(rng.uniform(0.25, 0.8)) * log_extent
        c = float(rng.uniform(-(log_extent - w), log_extent - w))
        bumps.append(Bump(c, w, float(rng.uniform(0.3, 1.5)) * (1 if rng.random() < 0.8 else -1)))
    # pin the extent so mu (and the place set) is predictable
    b0 = bumps[0]
    w0 = b0.half_width
    bumps[0] = Bump(log_extent - w0 if rng.random() < 0.5 else -(log_extent - w0), w0, abs(b0.amplitude))
    return TestFunction(tuple(bumps))


# --------------------------------------------------------------------------------------
# autocorrelation
# --------------------------------------------------------------------------------------


def _hermite_quintic(y0, d0, s0, y1, d1, s1, u, step):
    """Quintic Hermite interpolant on [0, 1] (values, first, second derivatives).

    Derivative data are w.r.t. the physical coordinate; ``step`` rescales them.
    Returns value, first and second physical derivatives.
    """
    d0 = d0 * step
    d1 = d1 * step
    s0 = s0 * step * step
    s1 = s1 * step * step
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    u5 = u4 * u
    h00 = 1 - 10 * u3 + 15 * u4 - 6 * u5
    h01 = 10 * u3 - 15 * u4 + 6 * u5
    h10 = u - 6 * u3 + 8 * u4 - 3 * u5
    h11 = -4 * u3 + 7 * u4 - 3 * u5
    h20 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5)
    h21 = 0.5 * (u3 - 2 * u4 + u5)
    val = h00 * y0 + h01 * y1 + h10 * d0 + h11 * d1 + h20 * s0 + h21 * s1
    dh00 = -30 * u2 + 60 * u3 - 30 * u4
    dh10 = 1 - 18 * u2 + 32 * u3 - 15 * u4
    dh11 = -12 * u2 + 28 * u3 - 15 * u4
    dh20 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4)
    dh21 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4)
    der = dh00 * (y0 - y1) + dh10 * d0 + dh11 * d1 + dh20 * s0 + dh21 * s1
    d2h00 = -60 * u + 180 * u2 - 120 * u3
    d2h10 = -36 * u + 96 * u2 - 60 * u3
    d2h11 = -24 * u + 84 * u2 - 60 * u3
    d2h20 = 0.5 * (2 - 18 * u + 36 * u2 - 20 * u3)
    d2h21 = 0.5 * (6 * u - 24 * u2 + 20 * u3)
    sec = d2h00 * (y0 - y1) + d2h10 * d0 + d2h11 * d1 + d2h20 * s0 + d2h21 * s1
    return val, der / step, sec / (step * step)


def _autocorr_log(g: TestFunction, tau: np.ndarray, n_panels: int, order: int = 24):
    """d^k/dtau^k h(e^tau) for k = 0, 1, 2 by Gauss-Legendre over each bump pair overlap."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros((3, tau.size))
    for bi in g.bumps:
        for bj in g.bumps:
            # integrand G_i(tau + t) G_j(t) e^t, t in supp G_j and tau + t in supp G_i
            lo = np.maximum(bj.center - bj.half_width, bi.center - bi.half_width - tau)
            hi = np.minimum(bj.center + bj.half_width, bi.center + bi.half_width - tau)
            ok = hi > lo
            if not np.any(ok):
                continue
            x, w = panels(0.0, 1.0, n_panels, order)
            a = lo[ok, None]
            L = (hi[ok] - lo[ok])[:, None]
            t = a + L * x
            wt = L * w
            gj = bj.amplitude * _phi_derivs((t - bj.center) / bj.half_width)[0]
            p0, p1, p2 = _phi_derivs((tau[ok, None] + t - bi.center) / bi.half_width)
            base = gj * np.exp(t) * wt * bi.amplitude
            out[0, ok] += np.sum(p0 * base, axis=1)
            out[1, ok] += np.sum(p1 * base, axis=1) / bi.half_width
            out[2, ok] += np.sum(p2 * base, axis=1) / bi.half_width**2
    return out


@dataclass(frozen=True)
class HFunction:
    """Autocorrelation h of a test function, tabulated in the log coordinate.

    ``tau`` is a uniform grid over [log mu, -log mu]; ``table[k]`` holds the k-th
    tau-derivative of ``h(e^tau)``.
    """

    source: TestFunction
    mu: float
    tau: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)
    quad_panels: int = 8

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def is_zero(self) -> bool:
        return self.source.is_zero

    @property
    def upper(self) -> float:
        """1/mu: h vanishes at and above this point."""
        return 1.0 / self.mu

    def log_eval(self, tau) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """h(e^tau) and its first two tau-derivatives, exactly zero off (log mu, -log mu)."""
        tau = np.asarray(tau, dtype=float)
        shape = tau.shape
        tau = tau.ravel()
        v = np.zeros_like(tau)
        d1 = np.zeros_like(tau)
        d2 = np.zeros_like(tau)
        lo, hi = self.tau[0], self.tau[-1]
        m = (tau > lo) & (tau < hi)
        if np.any(m):
            s = (tau[m] - lo) / self.step
            i = np.minimum(np.floor(s).astype(np.int64), self.tau.size - 2)
            u = s - i
            T = self.table
            v[m], d1[m], d2[m] = _hermite_quintic(T[0, i], T[1, i], T[2, i],
                                                  T[0, i + 1], T[1, i + 1], T[2, i + 1], u, self.step)
        return v.reshape(shape), d1.reshape(shape), d2.reshape(shape)

    @cached_property
    def _value_coefficients(self) -> np.ndarray:
        """Monomial coefficients (in the local coordinate u) of the quintic on each interval."""
        T, st = self.table, self.step
        y0, y1 = T[0, :-1], T[0, 1:]
        d0, d1 = T[1, :-1] * st, T[1, 1:] * st
        s0, s1 = T[2, :-1] * st * st, T[2, 1:] * st * st
        dy = y1 - y0
        return np.stack([
            y0,
            d0,
            0.5 * s0,
            10 * dy - 6 * d0 - 4 * d1 - 1.5 * s0 + 0.5 * s1,
            -15 * dy + 8 * d0 + 7 * d1 + 1.5 * s0 - s1,
            6 * dy - 3 * d0 - 3 * d1 - 0.5 * s0 + 0.5 * s1,
        ])

    def log_value(self, tau) -> np.ndarray:
        """h(e^tau) only (same interpolant as :meth:`log_eval`, without derivatives)."""
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        lo, hi = self.tau[0], self.tau[-1]
        m = (tau > lo) & (tau < hi)
        if np.any(m):
            s = (tau[m] - lo) / self.step
            i = np.minimum(np.floor(s).astype(np.int64), self.tau.size - 2)
            u = s - i
            c = self._value_coefficients[:, i]
            out[m] = c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))))
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = self.log_value(np.log(x[pos]))
        return out

    def derivs(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """h, h', h'' (x-derivatives) at x > 0."""
        x = np.asarray(x, dtype=float)
        v, d1, d2 = self.log_eval(np.log(x))
        return v, d1 / x, (d2 - d1) / x**2

    def direct(self, x) -> np.ndarray:
        """h(x) by direct quadrature of the defining integral (no interpolation)."""
        x = np.asarray(x, dtype=float)
        shape = x.shape
        out = np.zeros(x.size)
        pos = x.ravel() > 0
        out[pos] = _autocorr_log(self.source, np.log(x.ravel()[pos]), 2 * self.quad_panels)[0]
        return out.reshape(shape)

    @cached_property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.table[0]))) if self.table.size else 0.0

    @property
    def at_one(self) -> float:
        """h(1) = int g(y)^2 dy."""
        return float(self.log_eval(np.array([0.0]))[0][0])


def autocorrelate(g: TestFunction, n_grid: int = 4096, rtol: float = 1e-12, mu: float | None = None) -> HFunction:
    """Tabulate h(x) = int g(xy) g(y) dy on a uniform log grid.

    The per-node quadrature panel count is doubled until successive tables agree
    to ``rtol`` relative to max|h|.  ``mu`` widens the window to (mu, 1/mu); it may
    not be larger than the support parameter of g.
    """
    if mu is None:
        mu = g.mu
    elif not 0.0 < mu <= g.mu:
        raise TestFunctionError(f"mu override {mu} must lie in (0, {g.mu}]")
    if n_grid < 2 or n_grid % 2:
        raise TestFunctionError("n_grid must be a positive even number")
    tau = np.linspace(math.log(mu), -math.log(mu), n_grid + 1)
    if g.is_zero:
        return HFunction(g, mu, tau, np.zeros((3, tau.size)))
    # tabulate tau >= 0 only; the rest follows from h(1/x) = x h(x)
    half = n_grid // 2
    pos = tau[half:]
    n = 4
    prev = _autocorr_log(g, pos, n)
    for _ in range(8):
        n *= 2
        cur = _autocorr_log(g, pos, n)
        scale = np.max(np.abs(cur), axis=1, keepdims=True)
        if np.all(np.abs(cur - prev) <= rtol * np.maximum(scale, 1e-300)):
            break
        prev = cur
    else:
        raise TestFunctionError("autocorrelation quadrature did not converge")
    table = np.empty((3, tau.size))
    table[:, half:] = cur
    # H(-t) = e^t H(t), H'(-t) = -e^t (H + H'), H''(-t) = e^t (H + 2 H' + H'') at t = pos
    e = np.exp(pos[1:])[::-1]
    H, D1, D2 = cur[0, 1:][::-1], cur[1, 1:][::-1], cur[2, 1:][::-1]
    table[0, :half] = e * H
    table[1, :half] = -e * (H + D1)
    table[2, :half] = e * (H + 2 * D1 + D2)
    # the table ends are outside the open support: force exact zeros there
    table[:, 0] = 0.0
    table[:, -1] = 0.0
    return HFunction(g, mu, tau, table, quad_panels=n)


# --------------------------------------------------------------------------------------
# Mellin transforms
# --------------------------------------------------------------------------------------


def mellin_g(g: TestFunction, s) -> complex | np.ndarray:
    """g^(s) = int_0^inf g(u) u^(s-1) du  (= int G(t) e^(s t) dt)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.zeros(s_arr.shape, dtype=complex)
    for b in g.bumps:
        a, c = b.center - b.half_width, b.center + b.half_width
        out += integrate(
            lambda t: (b.amplitude * _phi_derivs((t[:, None] - b.center) / b.half_width)[0]
                       * np.exp(t[:, None] * s_arr[None, :])),
            a, c, rtol=1e-13, start_panels=2,
        )
    return out[0] if np.ndim(s) == 0 else out


def mellin_h(h: HFunction, s) -> complex | np.ndarray:
    """h^(s) = int_0^inf h(x) x^(s-1) dx over the compact support."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.zeros(s_arr.shape, dtype=complex)
    if not h.is_zero:
        out = log_mellin(lambda t: h.log_eval(t)[0], math.log(h.mu), -math.log(h.mu), s_arr)
    return out[0] if np.ndim(s) == 0 else out


def mellin_h_grid(h: HFunction, s, chunk: int = 2048) -> np.ndarray:
    """h^(s) by the trapezoid rule on the tabulation grid.

    ``h(e^tau)`` is smooth and flat at both ends of the grid, so the trapezoid rule
    is spectrally accurate for ``|Im s|`` well below the grid Nyquist frequency
    ``pi / step``.  This is the fast path for long vertical lines.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any(np.abs(s_arr.imag) > 0.25 * np.pi / h.step):
        raise ValueError("Im s too large for the tabulation grid")
    flat = s_arr.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    vals = h.table[0] * h.step
    for i in range(0, flat.size, chunk):
        out[i : i + chunk] = np.exp(np.outer(flat[i : i + chunk], h.tau)) @ vals
    out = out.reshape(s_arr.shape)
    return out[0] if np.ndim(s) == 0 else out


def mellin_h_vertical(h: HFunction, sigma: float, dt_max: float, n_t: int) -> tuple[float, np.ndarray]:
    """h^(sigma - i k dt) for k = 0..n_t-1 by one zero-padded FFT of the tabulated h.

    Returns the actual spacing ``dt`` (<= dt_max, set by the FFT length) and the
    values.  Trapezoid-rule accuracy is spectral for the reasons given in
    :func:`mellin_h_grid`.
    """
    step = h.step
    n_fft = 1 << max(int(math.ceil(math.log2(2 * np.pi / (dt_max * step)))), int(math.ceil(math.log2(h.tau.size))))
    dt = 2 * np.pi / (n_fft * step)
    if (n_t - 1) * dt > 0.25 * np.pi / step:
        raise ValueError("requested line extends beyond the grid resolution")
    a = h.table[0] * np.exp(sigma * h.tau) * step
    spec = np.fft.fft(a, n_fft)[:n_t]
    k = np.arange(n_t)
    return dt, spec * np.exp(-1j * k * dt * h.tau[0])


def log_mellin(F, lo: float, hi: float, s: np.ndarray, rtol: float = 1e-13, chunk: int = 256) -> np.ndarray:
    """int_lo^hi F(t) e^(s t) dt for an array of s, in chunks to bound memory.

    Chunks are ordered by |Im s| so the panel count adapts to the oscillation rate.
    """
    s = np.asarray(s, dtype=complex).ravel()
    out = np.zeros(s.shape, dtype=complex)
    order = np.argsort(np.abs(s.imag), kind="stable")
    for i in range(0, s.size, chunk):
        idx = order[i : i + chunk]
        sc = s[idx]
        start = max(4, int(np.max(np.abs(sc.imag)) * (hi - lo) / (2 * np.pi)) + 4)
        out[idx] = integrate(lambda t: F(t)[:, None] * np.exp(t[:, None] * sc[None, :]),
                             lo, hi, rtol=rtol, start_panels=start)
    return out


def bumps_from_iterable(items: Iterable[tuple[float, float, float]]) -> TestFunction:
    return TestFunction(tuple(Bump(*it) for it in items))
