"""Closed-form and root-finding dimension values for triangular systems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from triaffine.ifs_model import AffineIFS

EXPONENT_TOL = 1e-13
TIE_TOL = 1e-12


class DomainError(ValueError):
    pass


def bisect_decreasing(f: Callable[[float], float], lo: float, hi: float = 4.0,
                      tol: float = EXPONENT_TOL) -> float:
    """Root of a strictly decreasing ``f`` with ``f(lo) >= 0``.

    ``hi`` is doubled until ``f(hi) < 0``. Iteration stops once the bracket is
    below ``tol`` and then runs to floating-point exhaustion, which costs at
    most a handful of extra steps and keeps residuals at round-off level.
    """
    if f(lo) < 0:
        raise DomainError("f(lo) < 0: root lies below the bracket")
    while f(hi) >= 0:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise DomainError("no sign change found")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    # lo and hi are adjacent floats here, so the bracket is far below tol
    assert hi - lo <= tol
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def similarity_dimension(ratios: Sequence[float]) -> float:
    """Solve sum r_i^s = 1 by bisection."""
    r = np.asarray(ratios, dtype=float)
    if r.size == 0 or np.any(r <= 0) or np.any(r >= 1):
        raise DomainError("ratios must be a non-empty list in (0,1)")
    return bisect_decreasing(lambda s: float(np.sum(r ** s)) - 1.0, 0.0)


@dataclass(frozen=True)
class AffinityResult:
    s_x: float
    s_y: float
    s_hat_x: float
    s_hat_y: float
    d_x: float
    d_y: float
    dim_aff: float
    dominant: str  # 'x', 'y' or 'tie'


def _moran(first: np.ndarray, second: np.ndarray, s_hat: float) -> float:
    # sum first^s_hat * second^(d - s_hat) is decreasing in d because second < 1
    w = first ** s_hat
    if np.sum(w) <= 1.0:
        # s_hat is the similarity dimension itself (at most 1), so d = s_hat
        return s_hat
    return bisect_decreasing(lambda t: float(np.sum(w * second ** (t - s_hat))) - 1.0, s_hat)


def affinity_dimension(system: AffineIFS) -> AffinityResult:
    c = np.array(system.column("c"))
    b = np.array(system.column("b"))
    s_x = similarity_dimension(c)
    s_y = similarity_dimension(b)
    sh_x, sh_y = min(s_x, 1.0), min(s_y, 1.0)
    d_x = _moran(c, b, sh_x)
    d_y = _moran(b, c, sh_y)
    if abs(d_x - d_y) <= TIE_TOL:
        dominant = "tie"
    else:
        dominant = "x" if d_x > d_y else "y"
    return AffinityResult(s_x, s_y, sh_x, sh_y, d_x, d_y, max(d_x, d_y), dominant)


def homogeneous_affinity(N: int, c: float, b: float) -> float:
    """Affinity dimension of a diagonally homogeneous system with c > b."""
    if N < 1 or not (0 < b < 1 and 0 < c < 1):
        raise DomainError("need N >= 1 and c, b in (0,1)")
    if c <= b:
        raise DomainError("homogeneous_affinity needs c > b; use the y-dominant formula")
    if N * c <= 1:
        return math.log(N) / -math.log(c)
    return 1 + math.log(N * c) / -math.log(b)


@dataclass(frozen=True)
class LyapunovInputs:
    p: tuple[float, ...]
    h: float
    chi_H: float
    chi_V: float

    @classmethod
    def from_system(cls, system: AffineIFS, p: Sequence[float] | None = None) -> "LyapunovInputs":
        if p is None:
            p = [1.0 / system.N] * system.N
        p = np.asarray(p, dtype=float)
        if p.shape != (system.N,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise DomainError("p must be a probability vector of length N")
        nz = p > 0
        h = float(-np.sum(p[nz] * np.log(p[nz])))
        chi_H = float(-np.sum(p * np.log(system.column("c"))))
        chi_V = float(-np.sum(p * np.log(system.column("b"))))
        return cls(tuple(p.tolist()), h, chi_H, chi_V)


def lyapunov_dimension(system: AffineIFS, p: Sequence[float] | None = None) -> float:
    """Lyapunov dimension for x-dominant weights (chi_H <= chi_V); unclamped."""
    li = LyapunovInputs.from_system(system, p)
    h, xh, xv = li.h, li.chi_H, li.chi_V
    if xh > xv:
        raise DomainError("chi_H > chi_V: direction y dominates, swap the roles of x and y")
    if h <= xh:
        return h / xh
    if h <= xh + xv:
        return (h + xv - xh) / xv
    return 2 * h / (xh + xv)


# ---------------------------------------------------------------------------
# theorem selection


@dataclass
class TheoremVerdict:
    formula_value: float | None
    theorem: str  # LemmaK64, ThmA, ThmB, ThmC or none
    checked_assumptions: list[tuple[str, bool]] = field(default_factory=list)
    unverifiable_assumptions: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def applies(self) -> bool:
        return self.theorem != "none"

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "formula_value": self.formula_value,
            "checked_assumptions": {k: v for k, v in self.checked_assumptions},
            "unverifiable_assumptions": list(self.unverifiable_assumptions),
            "notes": list(self.notes),
        }


def assumption_c5(N: int, c: float, b: float) -> bool:
    lhs = math.log(N) / math.log(b / c)
    rhs = min(1.0, math.log(N) / -math.log(b), 2 * (1 - math.log(N) / -math.log(c)))
    return lhs >= rhs


def theorem_dimension(system: AffineIFS) -> TheoremVerdict:
    """Pick the first result whose checkable assumptions all hold.

    Order: the trivial case (any triangular system, x dominant, sum c_i < 1),
    then Assumption A, B and C for diagonally homogeneous systems. Separation
    and density hypotheses cannot be decided numerically and are listed as
    unverifiable; see ``triaffine.separation`` and ``triaffine.estimate`` for
    supporting evidence.
    """
    checked: list[tuple[str, bool]] = []
    aff = affinity_dimension(system)
    x_dom = aff.dominant in ("x", "tie")
    sum_c = sum(system.column("c"))
    trivial = [("x-dominates", x_dom), ("sum c_i < 1", sum_c < 1)]
    checked += trivial
    if all(ok for _, ok in trivial):
        return TheoremVerdict(aff.s_x, "LemmaK64", checked,
                              ["exponential separation of H"])
    if not system.is_diag_homogeneous:
        return TheoremVerdict(None, "none", checked, [],
                              ["system is not diagonally homogeneous"])
    N, c, b = system.N, system.c, system.b
    logNc = math.log(N * c)

    a = [("A1", c > 1 / N), ("A2", b < 1 / N)]
    checked += a
    if all(ok for _, ok in a):
        return TheoremVerdict(1 + logNc / -math.log(b), "ThmA", checked, ["A3", "A4"])

    bb = [("B1", c > 1 / N), ("B2", b < c)]
    checked += bb
    if all(ok for _, ok in bb):
        return TheoremVerdict(min(2.0, 1 + logNc / -math.log(b)), "ThmB", checked, ["B3", "B4"])

    cc = [("C1", c < 1 / N), ("C2", b > c)]
    if all(ok for _, ok in cc):
        cc.append(("C5", assumption_c5(N, c, b)))
    checked += cc
    if all(ok for _, ok in cc):
        value = min(math.log(N) / -math.log(b), 1 + math.log(N * b) / -math.log(c))
        return TheoremVerdict(value, "ThmC", checked, ["C3", "C4"])
    return TheoremVerdict(None, "none", checked, [])


# ---------------------------------------------------------------------------
# phase transition for the three-map family with equally spaced translations

SQRT_THIRD = 1 / math.sqrt(3)


@dataclass(frozen=True)
class PhaseProfile:
    c: float
    breakpoint: float
    points: list[tuple[float, float]]


def phase_transition_profile(c: float, b_grid: Sequence[float]) -> PhaseProfile:
    """dim(b) = 1 + log(3c)/-log(b) up to b = 1/(3c), then 2."""
    if not SQRT_THIRD < c < 1:
        raise DomainError(f"c must lie in (1/sqrt(3), 1), got {c}")
    bp = 1 / (3 * c)
    pts = []
    for b in b_grid:
        b = float(b)
        if not 0 < b <= c / 2:
            raise DomainError(f"b must lie in (0, c/2], got {b}")
        dim = 1 + math.log(3 * c) / -math.log(b) if b <= bp else 2.0
        pts.append((b, dim))
    return PhaseProfile(c, bp, pts)
