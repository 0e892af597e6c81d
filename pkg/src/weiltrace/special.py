"""Special functions and regularized oscillatory integrals.

Divergent integrals of the form ``int_1^inf log v cos(w v) dv`` are understood in
the Abel sense (limit of ``exp(-eps v)``-damped integrals as eps -> 0+).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as sp

from .quadrature import QuadratureError, panels

EULER_GAMMA = float(np.euler_gamma)


class PoleError(ValueError):
    """Evaluation requested at a pole."""


def _is_nonpositive_int(s: complex) -> bool:
    return s.imag == 0 and s.real <= 0 and float(s.real).is_integer()


def gamma_complex(s) -> complex:
    """Gamma function for complex argument (exp of the principal log-gamma)."""
    s = complex(s)
    if _is_nonpositive_int(s):
        raise PoleError(f"Gamma has a pole at {s.real:g}")
    if s.imag == 0:
        return complex(sp.gamma(s.real))
    return complex(np.exp(sp.loggamma(s)))


def cosine_moment(s) -> complex:
    """Gamma(s) cos(pi s / 2), the regularized ``int_0^inf t^(s-1) cos t dt`` for 0 < Re s < 1."""
    s = complex(s)
    if not 0.0 < s.real < 1.0:
        raise ValueError(f"cosine_moment needs 0 < Re s < 1, got {s}")
    return gamma_complex(s) * complex(np.cos(np.pi * s / 2))


def gamma_cos(s) -> np.ndarray:
    """Vectorized Gamma(s) cos(pi s / 2), evaluated in log form so large |Im s| cannot overflow."""
    s = np.asarray(s, dtype=complex)
    sign = np.where(s.imag >= 0, 1.0, -1.0)
    # cos(pi s/2) = exp(-i sign pi s/2) (1 + exp(i sign pi s)) / 2
    log_cos = -1j * sign * np.pi * s / 2 - np.log(2.0) + np.log1p(np.exp(1j * sign * np.pi * s))
    return np.exp(sp.loggamma(s) + log_cos)


def chi_array(s) -> np.ndarray:
    """Vectorized chi(s), evaluated in log form so large |Im s| cannot overflow.

    Poles (s = 1, 3, 5, ...) come out as inf or nan; use :func:`chi` for checked scalars.
    """
    s = np.asarray(s, dtype=complex)
    sign = np.where(s.imag >= 0, 1.0, -1.0)
    # sin(pi s/2) = (i sign / 2) exp(-i sign pi s/2) (1 - exp(i sign pi s))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_sin = (np.log(0.5j * sign) - 1j * sign * np.pi * s / 2
                   + np.log(1 - np.exp(1j * sign * np.pi * s)))
        return np.exp(s * np.log(2.0) + (s - 1) * np.log(np.pi) + sp.loggamma(1 - s) + log_sin)


def chi(s) -> complex:
    """chi(s) = 2^s pi^(s-1) Gamma(1-s) sin(pi s / 2)."""
    s = complex(s)
    if _is_nonpositive_int(1 - s):
        raise PoleError(f"chi has a pole at s = {s.real:g} (Gamma(1-s))")
    if s.imag == 0:
        return 2.0**s * np.pi ** (s - 1) * gamma_complex(1 - s) * complex(np.sin(np.pi * s / 2))
    return complex(chi_array(s))


def sine_integral(x):
    """Si(x) = int_0^x sin t / t dt."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("sine_integral is defined here for x >= 0")
    out = sp.sici(x)[0]
    return float(out) if out.ndim == 0 else out


def _si_any(x):
    """Si on the whole real line (odd extension), used internally."""
    return sp.sici(np.asarray(x, dtype=float))[0]


def si_tail_over(x):
    """(pi/2 - Si(x)) / x for x > 0, with the large-x asymptotic series where cancellation bites."""
    x = np.asarray(x, dtype=float)
    si, ci = sp.sici(x)
    direct = (np.pi / 2 - si) / x
    # pi/2 - Si(x) = f(x) cos x + g(x) sin x with auxiliary functions f, g
    big = x > 1e4
    if np.any(big):
        xb = x[big] if x.ndim else x
        inv = 1.0 / xb
        inv2 = inv * inv
        f = inv * (1 - 2 * inv2 + 24 * inv2**2 - 720 * inv2**3)
        g = inv2 * (1 - 6 * inv2 + 120 * inv2**2 - 5040 * inv2**3)
        val = (f * np.cos(xb) + g * np.sin(xb)) / xb
        if x.ndim:
            direct = direct.copy()
            direct[big] = val
        else:
            direct = val
    return direct


def osc_log_cos_tail(omega):
    """Abel-regularized ``int_1^inf log v cos(omega v) dv = -(pi/2 - Si(omega)) / omega``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("osc_log_cos_tail needs omega > 0")
    out = -si_tail_over(w)
    return float(out) if np.ndim(out) == 0 else out


def osc_log_cos_full(omega):
    """Abel-regularized ``int_0^inf log t cos(omega t) dt = -pi / (2 omega)``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("osc_log_cos_full needs omega > 0")
    out = -np.pi / (2 * w)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------------------
# contour integrals on vertical lines
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourSpec:
    """Vertical line Re s = c, truncated to |Im s| <= height."""

    c: float = 0.4
    height: float = 60.0
    nodes: int = 512

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("contour abscissa must lie in (0, 1)")
        if not self.height > 0:
            raise ValueError("height must be positive")
        if self.nodes < 16:
            raise ValueError("need at least 16 nodes")


@dataclass(frozen=True)
class LineIntegral:
    value: complex
    tail_estimate: float
    quadrature_change: float
    height: float = 0.0


def mellin_line_integral(
    contour: ContourSpec,
    integrand: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-8,
    max_doublings: int = 10,
    max_height_doublings: int = 6,
) -> LineIntegral:
    """(1 / 2 pi i) int_{c - iH}^{c + iH} f(s) ds with an adaptive truncation height.

    The node count is doubled until the truncated integral is stable to ``tol``.
    The omitted tails are estimated from the envelope of ``|f|`` (see
    :func:`_envelope_tail`).  While that estimate exceeds ``tol`` the height is
    doubled, starting from ``contour.height``; QuadratureError is raised if
    ``max_height_doublings`` doublings do not suffice.
    """
    return _line_integral(contour.c, contour.height, contour.nodes, integrand, tol, max_doublings,
                          max_height_doublings)


def _envelope_tail(c, H, integrand, samples: int = 64) -> float:
    """Power-law tail estimate from the maxima of |f| over [H/4, H/2] and [H/2, H] on both half-lines.

    Maxima rather than point values keep the fit meaningful for oscillating integrands.
    """
    tail = 0.0
    for sign in (1.0, -1.0):
        t1 = sign * np.linspace(H / 4, H / 2, samples)
        t2 = sign * np.linspace(H / 2, H, samples)
        m1 = float(np.max(np.abs(np.asarray(integrand(c + 1j * t1), dtype=complex))))
        m2 = float(np.max(np.abs(np.asarray(integrand(c + 1j * t2), dtype=complex))))
        if m2 == 0.0:
            continue
        p = math.log(max(m1, 1e-300) / m2) / math.log(2.0)
        tail += math.inf if p <= 1.0 else m2 * H / (p - 1.0)
    return tail / (2 * np.pi)


def _line_integral(c, H, nodes, integrand, tol, max_doublings=10, max_height_doublings=0) -> LineIntegral:
    order = 16

    def run(n):
        t, w = panels(-H, H, n, order)
        return np.sum(np.asarray(integrand(c + 1j * t), dtype=complex) * w) / (2 * np.pi)

    for _ in range(max_height_doublings + 1):
        n_panels = max(1, nodes // order)
        prev = run(n_panels)
        change = math.inf
        for _ in range(max_doublings):
            n_panels *= 2
            cur = run(n_panels)
            change = abs(cur - prev)
            if change <= tol * max(1.0, abs(cur)):
                break
            prev = cur
        else:
            raise QuadratureError(f"line integral unstable: last change {change:.3e}")
        tail = _envelope_tail(c, H, integrand)
        if tail <= tol * max(1.0, abs(cur)):
            return LineIntegral(complex(cur), tail, change, H)
        H *= 2
        nodes *= 2
    raise QuadratureError(f"line-integral tail estimate {tail:.3e} exceeds tolerance at height {H / 2:g}")


def osc_log_cos_tail_mellin(omega: float, height: float = 1600.0) -> float:
    """The same regularized integral as :func:`osc_log_cos_tail`, via Mellin-Barnes.

    ``cos(omega v)`` is written as ``(1/2 pi i) int Gamma(s) cos(pi s/2) (omega v)^(-s) ds``
    on 0 < Re s < 1; the v-integral of ``log v * v^(-s)`` over (1, inf) continues to
    ``1 / (s - 1)^2``.  That continuation only matches the Abel value once the
    double pole at s = 1 is crossed, which adds its residue ``-pi / (2 omega)``.  The
    line is then moved to Re s = -3/2 (the pole of Gamma at s = -1 is cancelled by
    the cosine), collecting the residue 1 at s = 0; there the integrand decays like
    |t|^(-4).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")

    def f(s):
        return gamma_cos(s) * omega ** (-s) / (s - 1) ** 2

    line = _line_integral(-1.5, height, 8192, f, tol=1e-8).value.real
    return line + 1.0 - np.pi / (2 * omega)


# --------------------------------------------------------------------------------------
# cosine transform round trip
# --------------------------------------------------------------------------------------


def _sin_over_u_tail(k: np.ndarray, X: float) -> np.ndarray:
    """int_X^inf sin(k u) / u du (odd in k)."""
    k = np.asarray(k, dtype=float)
    return np.sign(k) * (np.pi / 2 - _si_any(np.abs(k) * X))


def _cos_over_u2_tail(k: np.ndarray, X: float) -> np.ndarray:
    """int_X^inf cos(k u) / u^2 du = cos(kX)/X - |k| (pi/2 - Si(|k| X))."""
    k = np.abs(np.asarray(k, dtype=float))
    return np.cos(k * X) / X - k * (np.pi / 2 - _si_any(k * X))


def cosine_round_trip(
    f: Callable[[np.ndarray], np.ndarray],
    alpha: float,
    beta: float,
    end_values: tuple[float, float, float, float],
    y: np.ndarray,
    cutoff: float = 200.0,
    breaks: tuple[float, ...] = (),
) -> np.ndarray:
    """2 int_0^inf F(u) cos(2 pi u y) du with F(u) = 2 int_alpha^beta f(l) cos(2 pi l u) dl.

    For f smooth on [alpha, beta] this reproduces f(y) inside the interval (the mean of
    the one-sided limits at a jump, 0 outside).  The u-integral is done by quadrature
    up to ``cutoff``; beyond it F is replaced by its two-term endpoint asymptotics,
    built from ``end_values = (f(alpha+), f'(alpha+), f(beta-), f'(beta-))``, whose
    products with the outer cosine integrate in closed form.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    fa, da, fb, db = end_values
    pts = sorted({alpha, beta, *[b for b in breaks if alpha < b < beta]})
    lam, wl = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        x, w = panels(lo, hi, max(8, int(math.ceil(1.5 * cutoff * (hi - lo)))), 24)
        lam.append(x)
        wl.append(w)
    lam, wl = np.concatenate(lam), np.concatenate(wl)
    fl = f(lam) * wl
    top = max(beta, float(np.max(y)) if y.size else 0.0)
    n_u = int(math.ceil(2.0 * cutoff * (beta + top))) + 8
    u, wu = panels(0.0, cutoff, n_u, 24)
    F = np.empty_like(u)
    for i in range(0, u.size, 2048):
        F[i : i + 2048] = 2.0 * (np.cos(2 * np.pi * np.outer(u[i : i + 2048], lam)) @ fl)
    head = 2.0 * (np.cos(2 * np.pi * np.outer(y, u)) @ (F * wu))
    # F(u) ~ [fb sin(2 pi beta u) - fa sin(2 pi alpha u)] / (pi u)
    #      + [db cos(2 pi beta u) - da cos(2 pi alpha u)] / (2 pi^2 u^2)
    tail = np.zeros_like(y)
    for coef_s, coef_c, e in ((fb, db, beta), (-fa, -da, alpha)):
        kp = 2 * np.pi * (e + y)
        km = 2 * np.pi * (e - y)
        # 2 cos(2 pi u y) sin(2 pi e u) = sin(kp u) + sin(km u); same with cos
        tail += coef_s / np.pi * (_sin_over_u_tail(kp, cutoff) + _sin_over_u_tail(km, cutoff))
        tail += coef_c / (2 * np.pi**2) * (_cos_over_u2_tail(kp, cutoff) + _cos_over_u2_tail(km, cutoff))
    return head + tail
