"""Numerical verification of a trace formula for V(h) T and its Weil-distribution identity."""

from .places import PlaceSet, build_lattice, compute_place_set
from .testfn import (
    HFunction,
    TestFunction,
    autocorrelate,
    make_bump,
    project_vanishing_moment,
    random_test_function,
)
from .trace import TraceReport, corrections_thm16, trace_vht, verify_thm16
from .weil import WeilBreakdown, finite_place_term, weil_distribution

__all__ = [
    "HFunction",
    "PlaceSet",
    "TestFunction",
    "TraceReport",
    "WeilBreakdown",
    "autocorrelate",
    "build_lattice",
    "compute_place_set",
    "corrections_thm16",
    "finite_place_term",
    "make_bump",
    "project_vanishing_moment",
    "random_test_function",
    "trace_vht",
    "verify_thm16",
    "weil_distribution",
]

__version__ = "0.1.0"
