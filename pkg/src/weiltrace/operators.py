"""Matrix realizations of the operators in the case with no finite places.

With no finite places the idele class group is the positive half-line with measure
dx/x.  Functions are sampled on a geometric grid, ``x_i = exp((k0 + i + 1/2) delta)``,
so every quadrature weight is ``delta``.  The grid is aligned so that ``log Lambda``
and ``-log Lambda`` fall on cell edges, and no node ever sits on the jump of S_Lambda.

Realizations used here:

* ``V(f)``: Nystrom matrix ``f(x_i/x_j) sqrt(x_i/x_j) delta``.  V(h) is formed as
  ``V(g) V(g*)`` (so it is positive semidefinite by construction) over full columns only.
* The cosine transform conjugated by E, ``C F(x) = 2 sqrt(x) int F(t) t^(-1/2) cos(2 pi x t) dt``,
  is built in two ways.  One is a Nystrom matrix.  The other is a spectral matrix:
  in log coordinates C is a Hankel operator whose Mellin symbol is unimodular, and
  on an inversion-symmetric grid the spectral matrix is exactly orthogonal.
* ``Z_Lambda = C^t P_Lambda C`` has the closed-form kernel
  ``sqrt(xy) [sin(2 pi Lambda (x-y)) / (pi (x-y)) + sin(2 pi Lambda (x+y)) / (pi (x+y))]``,
  which is what :func:`build_T` uses by default.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.special import loggamma

from .kernels import QuadConfig, rule
from .quadrature import integrate, panels
from .special import cosine_round_trip
from .testfn import HFunction, TestFunction


class GridCoverageError(ValueError):
    """The grid does not contain the region the operator acts on."""


# --------------------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class LogGrid:
    """Geometric grid: nodes exp((k0 + i + 1/2) delta), i = 0..n-1, each with d^x x weight delta."""

    delta: float
    k0: int
    n: int

    def __post_init__(self):
        if self.n < 2 or not self.delta > 0:
            raise ValueError("grid needs n >= 2 and delta > 0")

    @property
    def log_nodes(self) -> np.ndarray:
        return (self.k0 + np.arange(self.n) + 0.5) * self.delta

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(self.log_nodes)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, self.delta)

    @property
    def x_min(self) -> float:
        return math.exp(self.k0 * self.delta)

    @property
    def x_max(self) -> float:
        return math.exp((self.k0 + self.n) * self.delta)

    @property
    def symmetric(self) -> bool:
        """x -> 1/x maps nodes onto nodes."""
        return 2 * self.k0 == -self.n

    def flip(self) -> np.ndarray:
        """Index permutation realizing x -> 1/x (inversion-symmetric grids only)."""
        if not self.symmetric:
            raise GridCoverageError("inversion needs a symmetric grid")
        return np.arange(self.n)[::-1].copy()

    def refined(self) -> "LogGrid":
        """Same span, half the spacing (cell edges are preserved)."""
        return LogGrid(self.delta / 2, 2 * self.k0, 2 * self.n)


def _aligned_delta(span: float, n: int, Lambda: float) -> float:
    m = max(1, round(math.log(Lambda) / (span / n)))
    return math.log(Lambda) / m


def log_grid(x_min: float, x_max: float, n: int, Lambda: float = 2.0) -> LogGrid:
    """n nodes starting at (or just below) x_min, spacing adjusted so log Lambda is a multiple of it."""
    if not 0 < x_min < x_max:
        raise ValueError("need 0 < x_min < x_max")
    _check_lambda(Lambda)
    delta = _aligned_delta(math.log(x_max / x_min), n, Lambda)
    return LogGrid(delta, math.floor(math.log(x_min) / delta + 1e-12), n)


def symmetric_grid(x_max: float, n: int, Lambda: float = 2.0) -> LogGrid:
    """Inversion-symmetric grid on about [1/x_max, x_max] with n (even) nodes."""
    if n % 2:
        raise ValueError("symmetric grid needs an even node count")
    _check_lambda(Lambda)
    delta = _aligned_delta(2 * math.log(x_max), n, Lambda)
    return LogGrid(delta, -n // 2, n)


DEFAULT_X_MAX = 16.0


def default_grid(mu: float, Lambda: float = 2.0, n: int = 600, x_max: float = DEFAULT_X_MAX) -> LogGrid:
    """Grid from mu/Lambda (the lowest point V(h)T can reach) up to ``x_max``."""
    return log_grid(mu / Lambda, x_max, n, Lambda)


def _check_lambda(Lambda: float) -> None:
    if not Lambda > 1:
        raise ValueError(f"Lambda must exceed 1, got {Lambda}")


# --------------------------------------------------------------------------------------
# matrices
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorMatrix:
    grid: LogGrid
    entries: np.ndarray = field(repr=False)
    label: str

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.entries @ other.entries, f"{self.label} {other.label}")

    def asymmetry(self) -> float:
        """max |A - A^t| / max |A| (0 for the zero matrix)."""
        scale = np.max(np.abs(self.entries))
        return 0.0 if scale == 0 else float(np.max(np.abs(self.entries - self.entries.T)) / scale)

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(path, self.entries, delimiter=",")


def selector(grid: LogGrid, Lambda: float, which: str) -> np.ndarray:
    """Diagonal of S_Lambda (x > 1/Lambda) or P_Lambda (x < Lambda) as a 0/1 vector."""
    x = grid.nodes
    if which == "S":
        return (x > 1.0 / Lambda).astype(float)
    if which == "P":
        return (x < Lambda).astype(float)
    raise ValueError("which must be 'S' or 'P'")


def _mu_of(f) -> float:
    return f.mu if not f.is_zero else 1.0


def build_vg(f: TestFunction | HFunction, grid: LogGrid, Lambda: float | None = None, label: str = "V") -> OperatorMatrix:
    """Nystrom matrix f(x_i / x_j) sqrt(x_i / x_j) delta.

    With ``Lambda`` given, the grid must reach down to mu / Lambda so the action on
    S_Lambda-supported functions is fully represented.
    """
    if Lambda is not None and not f.is_zero and grid.x_min > _mu_of(f) / Lambda * (1 + 1e-12):
        raise GridCoverageError(f"grid starts at {grid.x_min:.4g} > mu / Lambda = {_mu_of(f) / Lambda:.4g}")
    x = grid.nodes
    R = x[:, None] / x[None, :]
    vals = np.asarray(f(R.ravel())).reshape(R.shape)
    return OperatorMatrix(grid, vals * np.sqrt(R) * grid.delta, label)


def full_columns(grid: LogGrid, mu: float) -> np.ndarray:
    """Columns j whose V(g) support x_i in (x_j sqrt(mu), x_j / sqrt(mu)) lies below the grid top."""
    return grid.nodes <= grid.x_max * math.sqrt(mu)


def build_vh(g: TestFunction, grid: LogGrid, Lambda: float | None = None) -> OperatorMatrix:
    """V(h) = V(g) V(g*) as a product of Nystrom matrices, summed over full columns only.

    V(g*) is the transpose of V(g) (kernel symmetry), so the result is symmetric
    positive semidefinite exactly.
    """
    vg = build_vg(g, grid, Lambda, "V(g)").entries
    if g.is_zero:
        return OperatorMatrix(grid, np.zeros_like(vg), "V(h)")
    J = full_columns(grid, g.mu)
    return OperatorMatrix(grid, vg[:, J] @ vg[:, J].T, "V(h)")


def cosine_symbol(xi) -> np.ndarray:
    """Mellin symbol of C on the critical line: 2 (2 pi)^(-(1/2 - i xi)) Gamma(1/2 - i xi) cos(pi (1/2 - i xi) / 2).

    C maps x^(-1/2 + i xi) to symbol(xi) x^(-1/2 - i xi).  The symbol has modulus one.
    """
    s = 0.5 - 1j * np.asarray(xi, dtype=float)
    sign = np.where(np.imag(s) >= 0, 1.0, -1.0)
    log_cos = -1j * sign * np.pi * s / 2 - np.log(2.0) + np.log1p(np.exp(1j * sign * np.pi * s))
    return 2.0 * np.exp(-s * math.log(2 * np.pi) + loggamma(s) + log_cos)


def build_cosine_conjugated(grid: LogGrid, method: str = "nystrom") -> OperatorMatrix:
    """Matrix of C F(x) = 2 sqrt(x) int_0^inf F(t) t^(-1/2) cos(2 pi x t) dt.

    ``method="nystrom"`` samples the kernel 2 sqrt(x t) cos(2 pi x t) with weights delta.
    ``method="spectral"`` (symmetric grids) uses C = K R, where R is the index flip
    and K is the circulant whose eigenvalues are the symbol at the grid frequencies.
    That matrix is exactly orthogonal and an involution.
    """
    x = grid.nodes
    if method == "nystrom":
        P = np.outer(x, x)
        return OperatorMatrix(grid, 2.0 * np.sqrt(P) * np.cos(2 * np.pi * P) * grid.delta, "C")
    if method != "spectral":
        raise ValueError("method must be 'nystrom' or 'spectral'")
    n = grid.n
    grid.flip()  # validates symmetry
    m = np.fft.fftfreq(n) * n
    lam = cosine_symbol(2 * np.pi * m / (n * grid.delta))
    if n % 2 == 0:
        nyq = n // 2
        lam[nyq] = 1.0 if lam[nyq].real >= 0 else -1.0
    # K[i, j] = c[(i - j) mod n]; with R the flip, (K R)[i, j] = c[(i + j + 1 - n) mod n]
    c = np.fft.ifft(lam).real
    # the kernel depends on s_i + s_j = (i + j + 1 - n) delta; the circulant index is that offset
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :] + 1 - n) % n
    K = c[idx]
    return OperatorMatrix(grid, K, "C")


def projection_kernel(x: np.ndarray, y: np.ndarray, Lambda: float) -> np.ndarray:
    """Kernel of C^t P_Lambda C in d^x measure, in closed form."""
    X, Y = np.meshgrid(x, y, indexing="ij")
    D = X - Y
    safe = np.where(D == 0, 1.0, D)
    t1 = np.where(D == 0, 2 * Lambda, np.sin(2 * np.pi * Lambda * D) / (np.pi * safe))
    t2 = np.sin(2 * np.pi * Lambda * (X + Y)) / (np.pi * (X + Y))
    return np.sqrt(X * Y) * (t1 + t2)


def build_T(grid: LogGrid, Lambda: float, method: str = "closed", cosine: OperatorMatrix | None = None) -> OperatorMatrix:
    """T = S_Lambda (S_Lambda - Z_Lambda) S_Lambda.

    ``method="closed"`` uses the closed-form kernel of Z = C^t P C.  ``method="composed"``
    multiplies the given (or Nystrom) cosine matrix: Z = C^t P C.
    """
    _check_lambda(Lambda)
    S = selector(grid, Lambda, "S")
    if method == "closed":
        Z = projection_kernel(grid.nodes, grid.nodes, Lambda) * grid.delta
    elif method == "composed":
        C = (cosine or build_cosine_conjugated(grid)).entries
        P = selector(grid, Lambda, "P")
        Z = C.T @ (P[:, None] * C)
    else:
        raise ValueError("method must be 'closed' or 'composed'")
    T = S[:, None] * (np.diag(S) - Z) * S[None, :]
    T = 0.5 * (T + T.T)
    return OperatorMatrix(grid, T, "T")


# --------------------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray = field(repr=False)
    matrix_trace: float
    eigenvalue_sum: float
    min_real: float
    max_real: float
    max_abs_imag: float
    spectral_radius: float

    def summary(self) -> dict:
        return {
            "matrix_trace": self.matrix_trace,
            "eigenvalue_sum": self.eigenvalue_sum,
            "min_real": self.min_real,
            "max_real": self.max_real,
            "max_abs_imag": self.max_abs_imag,
            "spectral_radius": self.spectral_radius,
            "n": int(self.eigenvalues.size),
        }

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["real", "imag"])
            for z in self.eigenvalues:
                w.writerow([repr(float(z.real)), repr(float(z.imag))])


def _spectrum(M: np.ndarray) -> Spectrum:
    ev = linalg.eigvals(M)
    ev = ev[np.lexsort((ev.imag, ev.real))]
    if ev.size == 0:
        return Spectrum(ev, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return Spectrum(
        eigenvalues=ev,
        matrix_trace=float(np.trace(M)),
        eigenvalue_sum=float(ev.real.sum()),
        min_real=float(ev.real.min()),
        max_real=float(ev.real.max()),
        max_abs_imag=float(np.abs(ev.imag).max()),
        spectral_radius=float(np.abs(ev).max()),
    )


def vht_matrix(h: HFunction, grid: LogGrid, Lambda: float) -> OperatorMatrix:
    """V(h) T with V(h) factored through V(g)."""
    return build_vh(h.source, grid, Lambda) @ build_T(grid, Lambda)


def spectrum_vht(grid: LogGrid, h: HFunction, Lambda: float) -> Spectrum:
    """Eigenvalues of the (non-symmetric) product V(h) T, sorted by real part."""
    return _spectrum(vht_matrix(h, grid, Lambda).entries)


@dataclass(frozen=True)
class PositivityReport:
    min_eig_T: float
    norm_T: float
    min_eig_Vh: float
    norm_Vh: float
    spectrum: Spectrum

    def summary(self) -> dict:
        return {
            "min_eig_T": self.min_eig_T,
            "norm_T": self.norm_T,
            "min_eig_Vh": self.min_eig_Vh,
            "norm_Vh": self.norm_Vh,
            **{f"vht_{k}": v for k, v in self.spectrum.summary().items()},
        }

    def checks(self) -> dict[str, bool]:
        sp = self.spectrum
        rad = sp.spectral_radius
        return {
            "T_positive": self.min_eig_T >= -1e-6 * self.norm_T,
            "Vh_positive": self.min_eig_Vh >= -1e-8 * self.norm_Vh,
            "VhT_real_nonnegative": sp.min_real >= -1e-5 * (rad + 1e-300),
            "VhT_imag_small": sp.max_abs_imag <= 1e-6 * (rad + 1e-300),
        }


def positivity_report(h: HFunction, grid: LogGrid, Lambda: float) -> PositivityReport:
    T = build_T(grid, Lambda).entries
    Vh = build_vh(h.source, grid, Lambda).entries
    et = linalg.eigvalsh(T)
    ev = linalg.eigvalsh(0.5 * (Vh + Vh.T))
    nT = float(np.abs(et).max())
    nV = float(np.abs(ev).max()) if ev.size else 0.0
    return PositivityReport(float(et.min()), nT, float(ev.min()), nV, _spectrum(Vh @ T))


# --------------------------------------------------------------------------------------
# kernels and the diagonal trace
# --------------------------------------------------------------------------------------


def kernel_vht(x: float, y: float, h: HFunction, Lambda: float, quad: QuadConfig = QuadConfig()) -> float:
    """k(x, y) = S(y) [sqrt(x/y) h(x/y) - sqrt(xy) I(x, y)] by direct double quadrature.

    ``I(x, y) = 4 int_0^Lambda cos(2 pi u y) int_{lambda > 1/Lambda} h(lambda/x)/x cos(2 pi lambda u) dlambda du``.
    """
    _check_lambda(Lambda)
    if y <= 1.0 / Lambda or h.is_zero:
        return 0.0
    lo = max(h.mu * x, 1.0 / Lambda)
    hi = x / h.mu
    direct = math.sqrt(x / y) * float(h(np.array([x / y]))[0])
    if hi <= lo:
        return direct
    lam, wl = rule(lo, hi, Lambda * 2 * np.pi, quad)
    fl = h(lam / x) / x * wl
    u, wu = rule(0.0, Lambda, 2 * np.pi * max(hi, y), quad)
    inner = np.cos(2 * np.pi * np.outer(u, lam)) @ fl
    I = 4.0 * float(np.dot(np.cos(2 * np.pi * u * y) * inner, wu))
    return direct - math.sqrt(x * y) * I


def kernel_diagonal(x, h: HFunction, Lambda: float, quad: QuadConfig = QuadConfig()) -> np.ndarray:
    """k(x, x) from the |u| >= Lambda x form of the diagonal, reduced to real integrals.

    ``k(x,x) = h(1) - int_a^U h(l) [sin(2 pi (l+1) A) / (pi (l+1)) + sin(2 pi (l-1) A) / (pi (l-1))] dl``
    with ``A = Lambda x`` and ``a = max(1/A, mu)``, for x > 1/Lambda (0 otherwise).
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(xs)
    if h.is_zero:
        return out if np.ndim(x) else float(out[0])
    h1 = h.at_one
    for i, xv in enumerate(xs):
        if xv <= 1.0 / Lambda:
            continue
        A = Lambda * xv
        a = max(1.0 / A, h.mu)
        lam, w = rule(a, h.upper, 2 * np.pi * A, quad)
        d = lam - 1.0
        safe = np.where(np.abs(d) < 1e-12, 1.0, d)
        dir_k = np.where(np.abs(d) < 1e-12, 2 * A, np.sin(2 * np.pi * d * A) / (np.pi * safe))
        val = h(lam) * (np.sin(2 * np.pi * (lam + 1) * A) / (np.pi * (lam + 1)) + dir_k)
        out[i] = h1 - float(np.dot(val, w))
    return out if np.ndim(x) else float(out[0])


def trace_diagonal(h: HFunction, Lambda: float, quad: QuadConfig = QuadConfig(), rtol: float = 1e-10) -> float:
    """int_{x > 1/Lambda} k(x, x) dx / x.

    The integrand decays rapidly once Lambda x exceeds 1/mu; the upper limit doubles
    until the last piece is negligible.  Breakpoints sit where the lower limit of the
    lambda-integral changes form (Lambda x = 1 and Lambda x = 1/mu).
    """
    _check_lambda(Lambda)
    if h.is_zero:
        return 0.0
    t0 = -math.log(Lambda)
    t1 = math.log(1.0 / (Lambda * h.mu))

    def f(t):
        return kernel_diagonal(np.exp(t), h, Lambda, quad)

    total = integrate(f, t0, t1, rtol=rtol, atol=1e-15, start_panels=4)
    lo = t1
    width = 1.0
    for _ in range(40):
        piece = integrate(f, lo, lo + width, rtol=rtol, atol=1e-15, start_panels=4)
        total += piece
        lo += width
        if abs(piece) <= rtol * abs(total):
            break
    return float(total)


# --------------------------------------------------------------------------------------
# reproducing identity and decay bound
# --------------------------------------------------------------------------------------


def reproducing_check_44(
    z: float,
    Lambda: float,
    g: TestFunction,
    points: Sequence[float] | None = None,
    cutoff: float = 200.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Double cosine transform of f(l) = g(l/z) S_Lambda(l) / z, compared with f at sample points.

    Returns (max residual, sample points, reproduced values).  The default samples
    avoid the jump at 1/Lambda and include the point z.
    """
    _check_lambda(Lambda)
    if z <= 0:
        raise ValueError("z must be positive")
    if g.is_zero:
        y = np.asarray(points if points is not None else np.linspace(0.5, 2.0, 10))
        return 0.0, y, np.zeros_like(y)
    lo_g, hi_g = g.log_support
    a0, b0 = z * math.exp(lo_g), z * math.exp(hi_g)
    jump = 1.0 / Lambda
    alpha = max(a0, jump)

    def f(lam):
        lam = np.asarray(lam, dtype=float)
        return np.where(lam > jump, g(lam / z) / z, 0.0)

    if points is None:
        pts = np.linspace(alpha, b0, 12)[1:-1]
        pts = np.unique(np.append(pts[np.abs(pts - jump) > 1e-3], z if z > jump else pts[0]))
        points = pts[:10]
    y = np.asarray(points, dtype=float)
    if alpha >= b0:
        return 0.0, y, np.zeros_like(y)
    if alpha > a0:
        fa = float(g(np.array([alpha / z]))[0]) / z
        da = float(g.derivative(np.array([alpha / z]))[0]) / z**2
    else:
        fa = da = 0.0
    vals = cosine_round_trip(f, alpha, b0, (fa, da, 0.0, 0.0), y, cutoff=cutoff)
    return float(np.max(np.abs(vals - f(y)))), y, vals


@dataclass(frozen=True)
class DecayTable:
    c_values: tuple[float, ...]
    decades: np.ndarray
    sups: np.ndarray  # shape (len(c), n_decades): sup over each decade of |I(r)| r^c

    def ratios(self) -> dict[float, float]:
        out = {}
        for c, row in zip(self.c_values, self.sups):
            lo = row.min()
            out[c] = math.inf if lo == 0 else float(row.max() / lo)
        return out


def decay_integral(r: np.ndarray, z: float, Lambda: float, g: TestFunction) -> np.ndarray:
    """|int g(l) S_Lambda(l z) exp(-2 pi i l r) dl| for an array of r."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if g.is_zero:
        return np.zeros_like(r)
    lo_g, hi_g = g.log_support
    a = max(math.exp(lo_g), 1.0 / (Lambda * z))
    b = math.exp(hi_g)
    if a >= b:
        return np.zeros_like(r)
    n = max(16, int(math.ceil(2 * r.max() * (b - a))) + 16)
    lam, w = panels(a, b, n, 24)
    gw = g(lam) * w
    out = np.empty_like(r)
    for i in range(0, r.size, 256):
        out[i : i + 256] = np.abs(np.exp(-2j * np.pi * np.outer(r[i : i + 256], lam)) @ gw)
    return out


def decay_bound_check(
    z: float,
    y_list: Sequence[float] | None,
    Lambda: float,
    g: TestFunction,
    c_list: Sequence[float] = (0.25, 0.5, 0.75),
    decades: tuple[int, int] = (-1, 3),
    per_decade: int = 400,
) -> DecayTable:
    """Per-decade sup of |I(z/y)| (z/y)^c over four decades of r = z/y.

    The default window starts one decade below r = 1.  Further down, r^c |I(r)| tends
    to 0 trivially and says nothing about the large-r bound.
    """
    for c in c_list:
        if not 0 < c < 1:
            raise ValueError("c must lie in (0, 1)")
    d0, d1 = decades
    if y_list is not None:
        r_all = z / np.asarray(y_list, dtype=float)
    else:
        r_all = np.logspace(d0, d1, (d1 - d0) * per_decade + 1)
    vals = decay_integral(r_all, z, Lambda, g)
    edges = np.arange(d0, d1 + 1)
    sups = np.zeros((len(c_list), len(edges) - 1))
    lr = np.log10(r_all)
    for k, (e0, e1) in enumerate(zip(edges[:-1], edges[1:])):
        m = (lr >= e0) & (lr <= e1)
        for ci, c in enumerate(c_list):
            sups[ci, k] = (vals[m] * r_all[m] ** c).max() if np.any(m) else 0.0
    return DecayTable(tuple(c_list), edges, sups)


# --------------------------------------------------------------------------------------
# factorization and decomposition as matrices
# --------------------------------------------------------------------------------------


def factorization_error(g: TestFunction, h: HFunction, grid: LogGrid) -> float:
    """Relative Frobenius error of V(g) V(g*) against the direct V(h) on the fully represented block."""
    vg = build_vg(g, grid).entries
    vh = build_vg(h, grid).entries
    x = grid.nodes
    r = math.sqrt(g.mu)
    inner = (x >= grid.x_min / r) & (x <= grid.x_max * r)
    prod = (vg @ vg.T)[np.ix_(inner, inner)]
    ref = vh[np.ix_(inner, inner)]
    return float(np.linalg.norm(prod - ref) / np.linalg.norm(ref))


@dataclass(frozen=True)
class DecompositionCheck:
    residual: float
    unitarity_defect: float
    involution_defect: float


def decomposition_check(g: TestFunction, grid: LogGrid, Lambda: float) -> DecompositionCheck:
    """V(h) T against -V(g)[S, V(g*)]S + V(g)[S, V(g*) S C^t J] J C S on a symmetric grid.

    The cosine matrix is the spectral one, so C^t C = 1 and J is an exact permutation.
    Returns the relative residual together with the unitarity and involution defects.
    """
    if not grid.symmetric:
        raise GridCoverageError("the decomposition check needs an inversion-symmetric grid")
    C = build_cosine_conjugated(grid, "spectral").entries
    Jp = grid.flip()
    J = np.eye(grid.n)[Jp]
    S = np.diag(selector(grid, Lambda, "S"))
    P = J @ S @ J
    V = build_vg(g, grid).entries
    Vs = V.T
    Z = C.T @ P @ C
    T = S @ (S - Z) @ S
    lhs = V @ Vs @ T
    comm1 = S @ Vs - Vs @ S
    A = Vs @ S @ C.T @ J
    comm2 = S @ A - A @ S
    rhs = -V @ comm1 @ S + V @ comm2 @ J @ C @ S
    scale = np.linalg.norm(lhs)
    res = 0.0 if scale == 0 else float(np.linalg.norm(lhs - rhs) / scale)
    eye = np.eye(grid.n)
    return DecompositionCheck(res, float(np.abs(C.T @ C - eye).max()), float(np.abs(C @ C - eye).max()))


def matrix_trace_study(h: HFunction, Lambda: float, ns: Sequence[int], x_max: float = DEFAULT_X_MAX) -> list[tuple[int, float]]:
    """Matrix trace of V(h) T on successively refined default grids."""
    out = []
    for n in ns:
        grid = default_grid(h.mu, Lambda, n, x_max)
        M = vht_matrix(h, grid, Lambda).entries
        out.append((n, float(np.trace(M))))
    return out
