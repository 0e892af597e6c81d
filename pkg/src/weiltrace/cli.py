"""Command-line driver: run the verification pipeline and write a JSON report.

Usage::

    weiltrace verify-all|weil|trace|spectrum|corollary15|kernels --config cfg.json
        [--mu-override MU] [--lambda L] [--lattice-bound B] [--grid-n N]
        [--out report.json] [--csv-dir DIR] [--timing]

The configuration file is JSON; command-line flags override its values.  Exit code
0 means every selected check passed, 1 means some check failed, and 2 means the
configuration was invalid or a computation raised.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import operators as ops
from .kernels import QuadConfig, Pair, prime_pair
from .places import build_lattice, compute_place_set
from .testfn import (
    TestFunction,
    autocorrelate,
    bumps_from_iterable,
    project_vanishing_moment,
    random_test_function,
)
from .trace import DEFAULT_SAMPLES, corrections_thm16, log_reproducing_check, trace_vht, verify_thm16
from .weil import finite_place_term, primes_above_cutoff, weil_distribution

SCHEMA = "weiltrace-report/1"
COMMANDS = ("verify-all", "weil", "trace", "spectrum", "corollary15", "kernels")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    test_function: Any = field(default_factory=lambda: {"bumps": [[0.0, 0.3, 1.0]]})
    log_extent: float = 0.4
    project_moments: bool = True
    Lambda: float = 2.0
    lattice_bound: int = 64
    grid_n: int = 600
    mu_override: float | None = None
    panels_per_period: float = 2.0
    min_panels: int = 16
    commands: tuple[str, ...] = ("verify-all",)

    def validate(self) -> None:
        if not (isinstance(self.Lambda, (int, float)) and self.Lambda > 1):
            raise ConfigError(f"Lambda must exceed 1, got {self.Lambda}")
        if self.lattice_bound < 1:
            raise ConfigError("lattice_bound must be >= 1")
        if self.grid_n < 16:
            raise ConfigError("grid_n must be >= 16")
        if not (self.panels_per_period > 0 and self.min_panels > 0):
            raise ConfigError("quadrature settings must be positive")
        if self.mu_override is not None and not 0 < self.mu_override < 1:
            raise ConfigError("mu_override must lie in (0, 1)")
        for c in self.commands:
            if c not in COMMANDS:
                raise ConfigError(f"unknown command {c!r}")
        tf = self.test_function
        if isinstance(tf, str):
            if not tf.startswith("random:") or not tf[7:].lstrip("-").isdigit():
                raise ConfigError("random test functions are written 'random:<seed>'")
        elif not (isinstance(tf, dict) and isinstance(tf.get("bumps"), list)):
            raise ConfigError("test_function must be {'bumps': [[center, half_width, amplitude], ...]} or 'random:<seed>'")

    def quad(self) -> QuadConfig:
        return QuadConfig(self.panels_per_period, self.min_panels)

    def build_g(self) -> TestFunction:
        tf = self.test_function
        if isinstance(tf, str):
            g = random_test_function(np.random.default_rng(int(tf[7:])), self.log_extent)
        else:
            try:
                g = bumps_from_iterable(tuple(b) for b in tf["bumps"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad bump list: {exc}") from exc
        return project_vanishing_moment(g) if self.project_moments and not g.is_zero else g

    def to_dict(self) -> dict:
        d = asdict(self)
        d["commands"] = list(self.commands)
        return d


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if "schema" in data and "config" in data:
        data = data["config"]  # re-run from a report's config echo
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "commands" in data:
        data["commands"] = tuple(data["commands"])
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------------------


class Checks:
    def __init__(self):
        self.items: list[dict] = []

    def add(self, name: str, value: float, tolerance: float, passed: bool, note: str = "") -> None:
        item = {"name": name, "value": _num(value), "tolerance": _num(tolerance), "passed": bool(passed)}
        if note:
            item["note"] = note
        self.items.append(item)

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.items)


def _num(v):
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _clean(obj):
    """Convert numpy scalars and non-finite floats so the report is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _num(obj)
    return obj


# --------------------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------------------


class Context:
    def __init__(self, cfg: RunConfig, csv_dir: Path | None):
        self.cfg = cfg
        self.csv_dir = csv_dir
        self.g = cfg.build_g()
        self.h = autocorrelate(self.g, mu=cfg.mu_override)
        self.place_set = compute_place_set(self.h.mu)
        self.lattice = build_lattice(self.place_set, False, cfg.lattice_bound)
        self._weil = None
        self._trace = None

    def csv(self, name: str) -> Path | None:
        if self.csv_dir is None:
            return None
        self.csv_dir.mkdir(parents=True, exist_ok=True)
        return self.csv_dir / name

    def weil(self):
        if self._weil is None:
            self._weil = weil_distribution(self.h, self.lattice, self.cfg.quad())
        return self._weil

    def trace(self):
        if self._trace is None:
            rep = trace_vht(self.h, self.lattice, self.cfg.quad())
            corr = corrections_thm16(self.h, self.lattice, self.cfg.quad())
            rep.corrections = (corr.c1, corr.c2)
            rep.tail_estimates["corrections"] = corr.tail
            self._trace = rep
        return self._trace


def run_weil(ctx: Context, checks: Checks) -> dict:
    h = ctx.h
    w = ctx.weil()
    above = primes_above_cutoff(h.mu, 5)
    vals = [finite_place_term(h, p) for p in above]
    checks.add("finite_terms_vanish_above_cutoff", max(map(abs, vals)), 0.0, all(v == 0.0 for v in vals))
    out = {"weil": w.to_dict(), "primes_above_cutoff": above}
    if not h.is_zero:
        # the archimedean term alone is the prime sum of the one-point lattice
        arch_direct = -4.0 * prime_pair(h, Pair(2 * math.pi, 2 * math.pi, 1), ctx.cfg.quad())
        finite_route = w.prime_sum_total - arch_direct
        closed = sum(w.finite_terms.values())
        scale = max(abs(closed), 1e-300)
        rel = abs(finite_route - closed) / scale if closed else abs(finite_route)
        tol = 1e-4 if closed else 1e-10
        checks.add("route_consistency_finite_places", rel, tol, rel <= tol)
        out["route_consistency"] = {"fourier_route": finite_route, "closed_form": closed, "archimedean_direct": arch_direct}
    return out


def run_trace(ctx: Context, checks: Checks) -> dict:
    rep = ctx.trace()
    te = rep.tail_estimates
    checks.add("trace_nonnegative", rep.trace, 2 * te["trace"], rep.trace >= -2 * te["trace"] - te["quadrature"])
    diff = abs(rep.term1 - rep.term2)
    checks.add("term1_equals_term2", diff, 1e-8, diff <= 1e-8)
    c1, c2 = rep.corrections
    checks.add("c1_equals_c2", abs(c1 - c2), 1e-8, abs(c1 - c2) <= 1e-8)
    w = ctx.weil()
    projected = abs(w.h_hat_0) + abs(w.h_hat_1) <= 1e-9
    chk = verify_thm16(ctx.h, w, rep, allow_unprojected=True)
    if projected:
        checks.add("trace_identity", abs(chk.residual), chk.bound, chk.passed)
    out = {
        "trace": rep.to_dict(),
        "identity": {
            "residual": chk.residual,
            "residual_untruncated_delta": chk.residual_untruncated_delta,
            "bound": chk.bound,
            "mellin_moments": chk.mellin_moments,
            "projected": projected,
        },
    }
    if ctx.csv("trace_terms.csv"):
        from .trace import term1_series

        term1_series(ctx.h, ctx.lattice, ctx.cfg.quad()).table.to_csv(ctx.csv("trace_terms.csv"))
    return out


def run_corollary(ctx: Context, checks: Checks) -> dict:
    rep = ctx.trace()
    s = rep.corollary_sum
    tail = rep.tail_estimates["corollary_sum"] + rep.tail_estimates["quadrature"] / 8
    checks.add("quadruple_sum_nonnegative", s, tail, s >= -tail)
    checks.add("quadruple_sum_tail_small", tail, 1e-5 * (1 + abs(s)), tail <= 1e-5 * (1 + abs(s)))
    return {"corollary_sum": s, "tail": tail}


def run_spectrum(ctx: Context, checks: Checks) -> dict:
    h, L = ctx.h, ctx.cfg.Lambda
    if not ctx.place_set.is_trivial:
        return {"skipped": "operator discretization covers the case without finite places only"}
    grid = ops.default_grid(h.mu, L, ctx.cfg.grid_n)
    pr = ops.positivity_report(h, grid, L)
    for name, ok in pr.checks().items():
        checks.add(name, 0.0, 0.0, ok)
    out = {"grid": {"n": grid.n, "x_min": grid.x_min, "x_max": grid.x_max, "delta": grid.delta}, "positivity": pr.summary()}
    if not h.is_zero:
        series = ctx.trace().trace
        diag = ops.trace_diagonal(h, L)
        coarse = np.trace(ops.vht_matrix(h, ops.default_grid(h.mu, L, ctx.cfg.grid_n // 2), L).entries)
        matrix = pr.spectrum.eigenvalue_sum
        rel = lambda a, b: abs(a - b) / max(abs(a), abs(b), 1e-300)
        checks.add("trace_series_vs_diagonal", rel(series, diag), 1e-3, rel(series, diag) <= 1e-3)
        checks.add("trace_series_vs_eigenvalues", rel(series, matrix), 1e-3, rel(series, matrix) <= 1e-3)
        checks.add("trace_diagonal_vs_eigenvalues", rel(diag, matrix), 1e-3, rel(diag, matrix) <= 1e-3)
        gain = abs(coarse - diag) / max(abs(matrix - diag), 1e-300)
        checks.add("matrix_trace_refinement_gain", gain, 3.0, gain >= 3.0)
        out["traces"] = {"series": series, "diagonal": diag, "eigenvalue_sum": matrix, "matrix_half_grid": float(coarse)}
    if ctx.csv("spectrum.csv"):
        pr.spectrum.to_csv(ctx.csv("spectrum.csv"))
    return out


def run_kernels(ctx: Context, checks: Checks) -> dict:
    g, h, L = ctx.g, ctx.h, ctx.cfg.Lambda
    out: dict = {}
    if g.is_zero:
        checks.add("zero_function_kernels", 0.0, 0.0, True)
        return {"skipped": "zero test function"}
    res_g, ys, _ = ops.reproducing_check_44(1.0, L, g)
    gmax = float(np.max(np.abs(g(np.exp(np.linspace(*g.log_support, 2001))))))
    checks.add("reproducing_g", res_g, 1e-4 * gmax, res_g <= 1e-4 * gmax)
    out["reproducing_g"] = {"residual": res_g, "points": ys.tolist()}
    if ctx.place_set.is_trivial:
        res_log, vals = log_reproducing_check(h)
        at_one = float(vals[list(DEFAULT_SAMPLES).index(1.0)])
        checks.add("reproducing_log", res_log, 1e-5, res_log <= 1e-5)
        checks.add("reproducing_log_at_one", abs(at_one), 1e-5, abs(at_one) <= 1e-5)
        out["reproducing_log"] = {"residual": res_log, "value_at_one": at_one}
        x_probe = [0.75, 1.0, 2.0]
        diffs = [abs(ops.kernel_vht(x, x, h, L) - ops.kernel_diagonal(x, h, L)) for x in x_probe]
        checks.add("kernel_diagonal_two_routes", max(diffs), 1e-6, max(diffs) <= 1e-6)
        errs = [ops.factorization_error(g, h, ops.default_grid(h.mu, L, n)) for n in (30, 60, 120)]
        order_ok = all(b <= a / 4 or b < 1e-12 for a, b in zip(errs, errs[1:]))
        checks.add("factorization_second_order", errs[-1], errs[-2] / 4, order_ok)
        dec = ops.decomposition_check(g, ops.symmetric_grid(40.0, 256, L), L)
        checks.add("commutator_decomposition", dec.residual, errs[-1], dec.residual <= errs[-1])
        out["factorization_errors"] = errs
        out["decomposition"] = asdict(dec)
    table = ops.decay_bound_check(1.0 / L, None, L, g)
    ratios = table.ratios()
    for c, r in ratios.items():
        checks.add(f"decay_bound_c{c}", r, 50.0, r <= 50.0)
    out["decay"] = {"c": list(table.c_values), "decades": table.decades.tolist(), "sups": table.sups.tolist()}
    if ctx.csv("decay.csv"):
        with open(ctx.csv("decay.csv"), "w") as fh:
            fh.write("c," + ",".join(f"decade_{d}" for d in table.decades[:-1]) + "\n")
            for c, row in zip(table.c_values, table.sups):
                fh.write(f"{c}," + ",".join(repr(float(v)) for v in row) + "\n")
    return out


RUNNERS = {
    "weil": run_weil,
    "trace": run_trace,
    "corollary15": run_corollary,
    "spectrum": run_spectrum,
    "kernels": run_kernels,
}


def run(cfg: RunConfig, csv_dir: Path | None = None, timing: bool = False) -> tuple[dict, int]:
    """Execute the configured commands; returns (report, exit code)."""
    cfg.validate()
    ctx = Context(cfg, csv_dir)
    names = list(RUNNERS) if "verify-all" in cfg.commands else [c for c in COMMANDS if c in cfg.commands]
    checks = Checks()
    results: dict = {}
    times: dict = {}
    for name in names:
        t0 = time.perf_counter()
        results[name] = RUNNERS[name](ctx, checks)
        times[name] = time.perf_counter() - t0
    if csv_dir is not None:
        ctx.lattice.to_csv(ctx.csv("lattice.csv"))
    report = {
        "schema": SCHEMA,
        "config": cfg.to_dict(),
        "test_function": ctx.g.to_dict(),
        "mu": ctx.h.mu,
        "place_set": list(ctx.place_set.primes),
        "results": results,
        "checks": checks.items,
        "passed": checks.ok,
    }
    if timing:
        report["timing_seconds"] = times
    return _clean(report), 0 if checks.ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weiltrace", description="Numerical checks of the trace formula for V(h)T.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--mu-override", type=float, dest="mu_override")
    p.add_argument("--lambda", type=float, dest="Lambda")
    p.add_argument("--lattice-bound", type=int, dest="lattice_bound")
    p.add_argument("--grid-n", type=int, dest="grid_n")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv-dir", help="directory for CSV dumps")
    p.add_argument("--timing", action="store_true", help="include wall-clock timings (makes reports non-reproducible)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "mu_override": args.mu_override,
        "Lambda": args.Lambda,
        "lattice_bound": args.lattice_bound,
        "grid_n": args.grid_n,
        "commands": (args.command,),
    }
    try:
        cfg = load_config(args.config, overrides)
        report, code = run(cfg, Path(args.csv_dir) if args.csv_dir else None, args.timing)
    except ConfigError as exc:
        print(f"weiltrace: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surfaced with context, never swallowed silently
        print(f"weiltrace: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    for c in report["checks"]:
        if not c["passed"]:
            print(f"FAILED {c['name']}: value {c['value']} tolerance {c['tolerance']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
