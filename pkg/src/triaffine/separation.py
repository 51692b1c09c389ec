"""Separation evidence.

* strong separation certificates for the lifted system acting on R^3
  (planar map paired with the forward projective map);
* Hochman's minimal gap Delta_n, exactly for rational systems and through the
  integer decomposition (p1 + tau*p2)/q^n when one offset is a surd;
* the number B_l^L of intersecting pairs of L*b^l-fattened level-l cylinders.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterator, Sequence

import mpmath
import numpy as np

from triaffine.ifs_model import AffineIFS, Coefficient, TriangularMap, compose
from triaffine.projective import ScalarIFS, ScalarMap, derive_scalar_ifs, invariant_interval

SSP_GUARD = 10**7
PAIR_GUARD = 10**8
DELTA_LOG_GUARD = 50.0
DELTA_WORD_GUARD = 1 << 22


class GuardExceeded(ValueError):
    """Requested enumeration is larger than the configured guard."""


# ---------------------------------------------------------------------------
# lifted system


@dataclass(frozen=True)
class LiftedMap:
    planar: TriangularMap
    proj: ScalarMap

    def __call__(self, x, y, z):
        return (*self.planar(x, y), self.proj(z))


@dataclass(frozen=True)
class LiftedIFS:
    system: AffineIFS
    forward: ScalarIFS

    @property
    def maps(self) -> tuple[LiftedMap, ...]:
        return tuple(LiftedMap(p, f) for p, f in zip(self.system.maps, self.forward.maps))

    def apply_word(self, word: Sequence[int], point):
        """S~_{w1} o ... o S~_{wn}(point)."""
        x, y, z = point
        for s in reversed(word):
            x, y, z = self.maps[s - 1](x, y, z)
        return x, y, z


def lift_3d(system: AffineIFS) -> LiftedIFS:
    return LiftedIFS(system, derive_scalar_ifs(system, "F"))


def level_arrays(system: AffineIFS, n: int, scalar: ScalarIFS | None = None) -> dict[str, np.ndarray]:
    """Coefficients of S_w for all words of length n in lexicographic order.

    Keys: C, B, D, U, V (planar composite), first (first symbol, 1-based) and,
    when ``scalar`` is given, zr, zo (composite scalar ratio and offset).
    """
    ms = system.maps
    c = np.array([m.c for m in ms])
    b = np.array([m.b for m in ms])
    d = np.array([m.d for m in ms])
    u = np.array([m.u for m in ms])
    v = np.array([m.v for m in ms])
    C, B, D, U, V = np.ones(1), np.ones(1), np.zeros(1), np.zeros(1), np.zeros(1)
    if scalar is not None:
        sr = np.array([m.ratio for m in scalar.maps])
        so = np.array([m.offset for m in scalar.maps])
        zr, zo = np.ones(1), np.zeros(1)
    for _ in range(n):
        # prefix every existing word with each symbol: S_i o S_w
        C, B, D, U, V = (
            np.outer(c, C).ravel(),
            np.outer(b, B).ravel(),
            (np.outer(d, C) + np.outer(b, D)).ravel(),
            (np.outer(c, U) + u[:, None]).ravel(),
            (np.outer(d, U) + np.outer(b, V) + v[:, None]).ravel(),
        )
        if scalar is not None:
            zr, zo = np.outer(sr, zr).ravel(), (np.outer(sr, zo) + so[:, None]).ravel()
    out = dict(C=C, B=B, D=D, U=U, V=V, first=np.repeat(np.arange(1, system.N + 1), system.N ** (n - 1)))
    if scalar is not None:
        out.update(zr=zr, zo=zo)
    return out


def sweep_pairs(left: np.ndarray, right: np.ndarray, pad: float = 0.0,
                chunk: int = 1 << 21) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield index pairs (i, j), i != j, each unordered pair once, covering every
    pair of intervals whose gap is <= pad. Sweeps by left endpoint."""
    n = left.size
    if n < 2:
        return
    order = np.argsort(left, kind="stable")
    ls, rs = left[order], right[order]
    end = np.searchsorted(ls, rs + pad, side="right")
    cnt = np.maximum(end - np.arange(n) - 1, 0)
    cum = np.cumsum(cnt)
    start = 0
    while start < n:
        base = cum[start - 1] if start else 0
        stop = max(int(np.searchsorted(cum, base + chunk, side="right")), start + 1)
        c = cnt[start:stop]
        total = int(c.sum())
        if total:
            ii = np.repeat(np.arange(start, stop), c)
            jj = ii + 1 + np.arange(total) - np.repeat(np.cumsum(c) - c, c)
            yield order[ii], order[jj]
        start = stop


def _vertical_gap(L1, R1, l1, s1, h1, L2, R2, l2, s2, h2):
    """Vertical separation of two strips y in [l(X), l(X)+h] over their common
    x-range, where l(X) = l + s*(X - L). Negative means they overlap there;
    -inf where the x-ranges are disjoint."""
    a = np.maximum(L1, L2)
    bnd = np.minimum(R1, R2)

    def low(l, s, L, x):
        return l + s * (x - L)

    ha = low(l1, s1, L1, a) - (low(l2, s2, L2, a) + h2)
    hb = low(l1, s1, L1, bnd) - (low(l2, s2, L2, bnd) + h2)
    ga = low(l2, s2, L2, a) - (low(l1, s1, L1, a) + h1)
    gb = low(l2, s2, L2, bnd) - (low(l1, s1, L1, bnd) + h1)
    gap = np.maximum(np.minimum(ha, hb), np.minimum(ga, gb))
    return np.where(a <= bnd, gap, -np.inf)


# ---------------------------------------------------------------------------
# strong separation certificates


@dataclass(frozen=True)
class SspCertificate:
    level: int
    margin: float
    box: tuple[float, tuple[float, float]]  # (eps, z-interval): (eps,1-eps)^2 x open z-interval
    log: tuple[tuple[int, float], ...] = ()

    found = True


@dataclass(frozen=True)
class SspUnknown:
    """No certificate up to ``max_level``. This is not a proof that SSP fails."""

    max_level: int
    reason: str
    log: tuple[tuple[int, float], ...] = ()

    found = False


def _lifted_boxes(system: AffineIFS, n: int, eps: float, z_int):
    fwd = derive_scalar_ifs(system, "F")
    a = level_arrays(system, n, fwd)
    C, B, D, U, V = a["C"], a["B"], a["D"], a["U"], a["V"]
    zlo, zhi = z_int
    return dict(
        L=U + C * eps,
        R=U + C * (1 - eps),
        # lower edge at X = L: t = eps gives D*eps + B*eps + V
        low=D * eps + B * eps + V,
        slope=D / C,
        h=B * (1 - 2 * eps),
        zl=a["zr"] * zlo + a["zo"],
        zh=a["zr"] * zhi + a["zo"],
        first=a["first"],
    )


def _pair_gaps(bx, i, j):
    xgap = np.maximum(bx["L"][j] - bx["R"][i], bx["L"][i] - bx["R"][j])
    zgap = np.maximum(bx["zl"][j] - bx["zh"][i], bx["zl"][i] - bx["zh"][j])
    vgap = _vertical_gap(bx["L"][i], bx["R"][i], bx["low"][i], bx["slope"][i], bx["h"][i],
                         bx["L"][j], bx["R"][j], bx["low"][j], bx["slope"][j], bx["h"][j])
    return np.maximum(np.maximum(xgap, zgap), vgap)


def _min_gap(bx, pad: float) -> float:
    best = math.inf
    for i, j in sweep_pairs(bx["L"], bx["R"], pad):
        keep = bx["first"][i] != bx["first"][j]
        if not keep.any():
            continue
        g = _pair_gaps(bx, i[keep], j[keep])
        best = min(best, float(g.min()))
        if best <= 0:
            return best
    return best


def _box_contained(system: AffineIFS, eps: float) -> bool:
    lo, hi = eps, 1 - eps
    for m in system.maps:
        for x, y in ((lo, lo), (hi, lo), (lo, hi), (hi, hi)):
            X, Y = m(x, y)
            if not (lo <= X <= hi and lo <= Y <= hi):
                return False
    return True


def level_margin(system: AffineIFS, n: int, eps: float, z_int) -> float:
    """Smallest separation witness over level-n lifted images with distinct
    first symbols. Positive iff all those images are pairwise disjoint.

    The witness for a pair is the largest of: the gap between x-ranges, the
    gap between z-ranges, and the vertical gap over the common x-range.
    """
    bx = _lifted_boxes(system, n, eps, z_int)
    m0 = _min_gap(bx, 0.0)
    if m0 <= 0:
        return m0
    if math.isinf(m0):
        # no x-overlapping pair; any distinct-first pair bounds the minimum
        j = int(np.argmax(bx["first"] != bx["first"][0]))
        m0 = float(_pair_gaps(bx, np.array([0]), np.array([j]))[0])
    return _min_gap(bx, m0)


def ssp_certificate(system: AffineIFS, max_level: int = 8, eps: float = 0.0):
    """Search for n <= max_level at which the level-n images of
    (eps, 1-eps)^2 x I are pairwise disjoint across distinct first symbols,
    I being the invariant interval of the forward projective system.

    Returns an ``SspCertificate`` or ``SspUnknown``.
    """
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 1/2)")
    if max_level < 1:
        raise ValueError("max_level must be >= 1")
    if system.N ** max_level > SSP_GUARD:
        raise GuardExceeded(f"N^max_level = {system.N ** max_level} exceeds {SSP_GUARD}")
    fwd = derive_scalar_ifs(system, "F")
    z_int = invariant_interval(fwd)
    if not _box_contained(system, eps):
        return SspUnknown(max_level, f"maps do not send [{eps}, {1 - eps}]^2 into itself")
    if system.N == 1:
        return SspCertificate(1, math.inf, (eps, z_int))
    log = []
    for n in range(1, max_level + 1):
        m = level_margin(system, n, eps, z_int)
        log.append((n, m))
        if m > 0:
            return SspCertificate(n, m, (eps, z_int), tuple(log))
    return SspUnknown(max_level, "images overlap at every level tried", tuple(log))


def verify_certificate(system: AffineIFS, cert: SspCertificate) -> float:
    """Recompute the margin by brute force over all word pairs, evaluating each
    image from ``compose`` and the forward maps directly (no sweep, no level arrays)."""
    eps, (zlo, zhi) = cert.box
    lifted = lift_3d(system)
    boxes = []
    for w in itertools.product(range(1, system.N + 1), repeat=cert.level):
        a = compose(system, w)
        za = lifted.apply_word(w, (0.0, 0.0, zlo))[2]
        zb = lifted.apply_word(w, (0.0, 0.0, zhi))[2]
        boxes.append((w[0], a, min(za, zb), max(za, zb)))
    best = math.inf
    for (f1, a1, zl1, zh1), (f2, a2, zl2, zh2) in itertools.combinations(boxes, 2):
        if f1 == f2:
            continue
        L1, R1 = a1(eps, 0)[0], a1(1 - eps, 0)[0]
        L2, R2 = a2(eps, 0)[0], a2(1 - eps, 0)[0]
        xgap = max(L2 - R1, L1 - R2)
        zgap = max(zl2 - zh1, zl1 - zh2)
        vgap = -math.inf
        lo_x, hi_x = max(L1, L2), min(R1, R2)
        if lo_x <= hi_x:
            def edges(a, X):
                t = (X - a.u_total) / a.c_total
                return a(t, eps)[1], a(t, 1 - eps)[1]
            cands = []
            for first, second in ((a1, a2), (a2, a1)):
                vals = []
                for X in (lo_x, hi_x):
                    vals.append(edges(first, X)[0] - edges(second, X)[1])
                cands.append(min(vals))
            vgap = max(cands)
        best = min(best, max(xgap, zgap, vgap))
    return best


# ---------------------------------------------------------------------------
# Hochman's Delta_n


def _lcm(xs):
    return reduce(lambda a, b: a * b // math.gcd(a, b), xs, 1)


def _word_values(weights: Sequence[int], p: int, q: int, n: int) -> np.ndarray:
    """V(w) = sum_k weights[w_k] p^(k-1) q^(n-k) over all words, lexicographic.

    Built from the last symbol backwards: V(x w) = weights[x] q^(m) + p V(w)
    with m = |w|. Uses int64 when the bound allows, Python ints otherwise.
    """
    bound = max(abs(w) for w in weights) * n * max(abs(p), q) ** max(n - 1, 0)
    dtype = np.int64 if bound < 2**62 else object
    w = np.array(weights, dtype=dtype)
    vals = np.zeros(1, dtype=dtype)
    for m in range(n):
        qm = q**m if dtype is object else np.int64(q**m)
        vals = (np.multiply.outer(w, np.array([qm], dtype=dtype)).ravel()[:, None]
                + p * vals[None, :]).ravel()
    return vals


def delta_n_exact(s: ScalarIFS, n: int):
    """min |psi_i(0) - psi_j(0)| over distinct words of length n with equal
    derivatives, as a ``Fraction``; ``math.inf`` when no such pair exists."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not s.is_exact:
        raise ValueError("irrational coefficient present: use delta_n_symbolic")
    if n * math.log(s.N) > DELTA_LOG_GUARD or s.N**n > DELTA_WORD_GUARD:
        raise GuardExceeded(f"{s.N}^{n} words exceed the enumeration guard")
    if s.N == 1:
        return math.inf
    ratios = [m.exact_ratio for m in s.maps]
    offsets = [m.exact_offset for m in s.maps]
    if all(r == ratios[0] for r in ratios):
        r = ratios[0]
        p, q = r.numerator, r.denominator
        D = _lcm(o.denominator for o in offsets)
        a = [int(o * D) for o in offsets]
        vals = np.sort(_word_values(a, p, q, n))
        diffs = vals[1:] - vals[:-1]
        return Fraction(int(np.min(diffs)), D * q ** (n - 1))
    # heterogeneous ratios: group words by derivative, compare within groups
    groups: dict[Fraction, list[Fraction]] = {}
    for w in itertools.product(range(s.N), repeat=n):
        deriv, val = Fraction(1), Fraction(0)
        for k in w:
            val += deriv * offsets[k]
            deriv *= ratios[k]
        groups.setdefault(deriv, []).append(val)
    best = math.inf
    for vals in groups.values():
        vals.sort()
        for x, y in zip(vals, vals[1:]):
            best = min(best, y - x)
    return best


@dataclass(frozen=True)
class SeparationTerm:
    """(p1 + tau*p2) / (den * q^k)."""

    p1: int
    p2: int
    k: int
    q: int
    den: int = 1

    def within_bound(self) -> bool:
        return abs(self.p1) <= (2 * self.q) ** self.k and abs(self.p2) <= (2 * self.q) ** self.k

    def certified_floor(self) -> Fraction | None:
        """1/(den q^k) when p2 == 0 and p1 != 0; None otherwise."""
        if self.p2 == 0 and self.p1 != 0:
            return Fraction(1, self.den * self.q**self.k)
        return None

    def value(self, tau, prec: int = 256):
        with mpmath.workprec(prec):
            return (self.p1 + _as_mpf(tau, prec) * self.p2) / (self.den * mpmath.mpf(self.q) ** self.k)


@dataclass
class SymbolicDeltaReport:
    n: int
    min_gap_float: float
    witness: SeparationTerm | None
    certified_floor: Fraction | None
    rational_channel_pairs: int
    rational_channel_min: Fraction | None
    rational_channel_nonzero: bool
    bound_holds: bool
    max_abs_p1: int
    max_abs_p2: int
    possibly_rational: bool
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "min_gap_float": self.min_gap_float,
            "witness": None if self.witness is None else
            {"p1": str(self.witness.p1), "p2": str(self.witness.p2), "k": self.witness.k,
             "q": self.witness.q, "den": self.witness.den},
            "certified_floor": None if self.certified_floor is None else str(self.certified_floor),
            "rational_channel_pairs": self.rational_channel_pairs,
            "rational_channel_min": None if self.rational_channel_min is None else str(self.rational_channel_min),
            "rational_channel_nonzero": self.rational_channel_nonzero,
            "bound_holds": self.bound_holds,
            "max_abs_p1": str(self.max_abs_p1),
            "max_abs_p2": str(self.max_abs_p2),
            "possibly_rational": self.possibly_rational,
            "notes": self.notes,
        }


def _as_mpf(tau, prec):
    with mpmath.workprec(prec):
        if isinstance(tau, Coefficient):
            return tau.mp(prec)
        if isinstance(tau, str):
            return Coefficient.parse(tau).mp(prec)
        return mpmath.mpf(tau)


def delta_n_symbolic(ratio, rational_offsets: Sequence, symbolic_offset, n: int,
                     prec: int = 256) -> SymbolicDeltaReport:
    """Delta_n evidence for {ratio*x + t_i} where the last offset is a surd.

    Every word value is (A + tau*B)/(den*q^(n-1)) with integers A, B. Pairs
    with equal B are compared exactly: the gap is then at least 1/(den*q^n)
    whenever the words differ. Pairs with different B are evaluated with a
    ``prec``-bit fixed-point tau; their minimum is reported as evidence only.
    """
    if prec < 128:
        raise ValueError("prec must be at least 128 bits")
    r = Fraction(ratio)
    if not 0 < r < 1:
        raise ValueError("ratio must be rational in (0,1)")
    offs = [Fraction(o) for o in rational_offsets]
    N = len(offs) + 1
    if N**n > DELTA_WORD_GUARD:
        raise GuardExceeded(f"{N}^{n} words exceed the enumeration guard")
    p, q = r.numerator, r.denominator
    den = _lcm(o.denominator for o in offs) if offs else 1
    A = _word_values([int(o * den) for o in offs] + [0], p, q, n).astype(object)
    Bc = _word_values([0] * len(offs) + [den], p, q, n).astype(object)
    A, Bc = A.tolist(), Bc.tolist()

    # p1 = q*dA, p2 = q*dB so that the common denominator is den*q^n
    max_p1 = q * (max(A) - min(A))
    max_p2 = q * (max(Bc) - min(Bc))
    bound = (2 * q) ** n
    bound_holds = max_p1 <= bound and max_p2 <= bound

    # rational channel: equal B
    groups: dict[int, list[int]] = {}
    for a, b_ in zip(A, Bc):
        groups.setdefault(b_, []).append(a)
    n_pairs, nonzero, rmin = 0, True, None
    for vals in groups.values():
        k = len(vals)
        if k < 2:
            continue
        n_pairs += k * (k - 1) // 2
        vals.sort()
        dmin = min(y - x for x, y in zip(vals, vals[1:]))
        if dmin == 0:
            nonzero = False
        gap = Fraction(dmin, den * q ** (n - 1))
        rmin = gap if rmin is None else min(rmin, gap)
    floor = Fraction(1, den * q**n) if n_pairs and nonzero else None

    # symbolic channel: fixed-point tau with prec fractional bits
    tau = _as_mpf(symbolic_offset, prec + 32)
    with mpmath.workprec(prec + 32):
        T = int(mpmath.floor(tau * mpmath.mpf(2) ** prec))
    X = [(a << prec) + T * b_ for a, b_ in zip(A, Bc)]
    order = sorted(range(len(X)), key=X.__getitem__)
    best, wit, flagged = None, None, False
    for i, j in zip(order, order[1:]):
        if Bc[i] == Bc[j]:
            continue
        g = X[j] - X[i]
        # fixed-point error per value is below |B|; a gap inside it may be zero
        if g <= abs(Bc[i]) + abs(Bc[j]) + 2:
            flagged = True
        if best is None or g < best:
            best, wit = g, SeparationTerm(q * (A[j] - A[i]), q * (Bc[j] - Bc[i]), n, q, den)
    min_gap = math.inf
    if best is not None:
        with mpmath.workprec(prec + 32):
            min_gap = float(mpmath.mpf(best) / (mpmath.mpf(2) ** prec * den * mpmath.mpf(q) ** (n - 1)))
    notes = []
    if flagged:
        notes.append("a pair with p2 != 0 has a gap indistinguishable from 0: the symbolic offset may be rational")
    if not nonzero:
        notes.append("distinct words with identical values in the rational channel")
    return SymbolicDeltaReport(n, min_gap, wit, floor, n_pairs, rmin, nonzero, bound_holds,
                               max_p1, max_p2, flagged, notes)


def delta_n_symbolic_ifs(s: ScalarIFS, n: int, prec: int = 256) -> SymbolicDeltaReport:
    """Route a ScalarIFS with one surd offset (any position) to ``delta_n_symbolic``."""
    ratios = {m.exact_ratio for m in s.maps}
    if len(ratios) != 1 or None in ratios:
        raise ValueError("symbolic route needs one common rational ratio")
    sym = [i for i, m in enumerate(s.maps) if m.exact_offset is None]
    if len(sym) != 1:
        raise ValueError(f"expected exactly one symbolic offset, found {len(sym)}")
    k = sym[0]
    # Delta_n is invariant under relabelling the symbols
    rational = [m.exact_offset for i, m in enumerate(s.maps) if i != k]
    tau = s.maps[k].symbolic_offset
    if tau is None:
        tau = Coefficient.from_float(s.maps[k].offset)
    return delta_n_symbolic(ratios.pop(), rational, tau, n, prec)


# ---------------------------------------------------------------------------
# intersecting cylinder pairs


@dataclass(frozen=True)
class PairCountReport:
    level: int
    L: float
    count: int
    rate: float | None

    def as_dict(self) -> dict:
        return {"level": self.level, "L": self.L, "count": self.count, "rate": self.rate}


def count_intersecting_pairs(system: AffineIFS, level: int, L: float,
                             guard: int = PAIR_GUARD) -> PairCountReport:
    """B_l^L: ordered pairs of level-l words with different first symbols whose
    cylinders, each thickened vertically by L*b^l, intersect (closed sets)."""
    if not system.is_diag_homogeneous:
        raise ValueError("pair counting needs a diagonally homogeneous system")
    if level < 1 or L < 0:
        raise ValueError("level >= 1 and L >= 0 required")
    if system.N ** (2 * level) > guard:
        raise GuardExceeded(f"N^(2l) = {system.N ** (2 * level)} exceeds {guard}")
    a = level_arrays(system, level)
    C, B, D, U, V = a["C"], a["B"], a["D"], a["U"], a["V"]
    first = a["first"]
    left, right = U, U + C
    slope = D / C
    fat = 2 * L * system.b**level
    unordered = 0
    for i, j in sweep_pairs(left, right, 0.0):
        keep = first[i] != first[j]
        i, j = i[keep], j[keep]
        vg = _vertical_gap(left[i], right[i], V[i], slope[i], B[i],
                           left[j], right[j], V[j], slope[j], B[j])
        unordered += int(np.count_nonzero(vg <= fat))
    count = 2 * unordered
    rate = math.log(count) / level if count > 0 else None
    return PairCountReport(level, L, count, rate)
