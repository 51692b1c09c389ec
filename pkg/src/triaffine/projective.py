"""Induced one-dimensional systems: coordinate projections and the forward and
backward actions of the linear parts on the projective line."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from triaffine.ifs_model import AffineIFS, Coefficient

KINDS = ("H", "V", "F", "B")


class DominationError(ValueError):
    pass


@dataclass(frozen=True)
class ScalarMap:
    """z -> ratio*z + offset. ``exact_*`` hold rationals when known."""

    ratio: float
    offset: float
    exact_ratio: Fraction | None = None
    exact_offset: Fraction | None = None
    symbolic_offset: Coefficient | None = None

    def __call__(self, z):
        return self.ratio * z + self.offset

    @property
    def fixed_point(self) -> float:
        return self.offset / (1 - self.ratio)


@dataclass(frozen=True)
class ScalarIFS:
    maps: tuple[ScalarMap, ...]
    kind: str = "H"

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValueError("empty scalar IFS")
        for m in self.maps:
            if not abs(m.ratio) < 1:
                raise ValueError(f"ratio {m.ratio} is not a strict contraction")

    @classmethod
    def from_fractions(cls, pairs: Sequence[tuple], kind: str = "H") -> "ScalarIFS":
        """Build from (ratio, offset) pairs of anything ``Fraction`` accepts."""
        maps = []
        for r, o in pairs:
            r, o = Fraction(r), Fraction(o)
            maps.append(ScalarMap(float(r), float(o), r, o))
        return cls(tuple(maps), kind)

    @classmethod
    def parse(cls, text: str, kind: str = "H") -> "ScalarIFS":
        """Parse ``"1/2:0,1/2:1"`` (ratio:offset pairs; offsets may be surds)."""
        maps = []
        for item in text.split(","):
            r, o = item.split(":")
            rc, oc = Coefficient.parse(r), Coefficient.parse(o)
            maps.append(ScalarMap(rc.value, oc.value, rc.exact, oc.exact,
                                  None if oc.is_rational else oc))
        return cls(tuple(maps), kind)

    @property
    def N(self) -> int:
        return len(self.maps)

    @property
    def is_exact(self) -> bool:
        return all(m.exact_ratio is not None and m.exact_offset is not None for m in self.maps)


def _product(*xs):
    if any(x is None for x in xs):
        return None
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def derive_scalar_ifs(system: AffineIFS, kind: str) -> ScalarIFS:
    """H: (c_i, u_i); V: (b_i, v_i); F: (b_i/c_i, d_i/c_i); B: (c/b, -d_i/b)."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if kind == "F" and not all(m.c > m.b for m in system.maps):
        raise DominationError("forward action needs c_i > b_i for every map")
    if kind == "B" and not (system.is_diag_homogeneous and system.c < system.b):
        raise DominationError("backward action needs a homogeneous system with c < b")
    maps = []
    for m in system.maps:
        cc, bc, dc, uc, vc = (m.coefficient(n) for n in ("c", "b", "d", "u", "v"))
        if kind == "H":
            r, o, er, eo, sym = m.c, m.u, cc.exact, uc.exact, uc
        elif kind == "V":
            r, o, er, eo, sym = m.b, m.v, bc.exact, vc.exact, vc
        elif kind == "F":
            r, o = m.b / m.c, m.d / m.c
            er = None if None in (bc.exact, cc.exact) else bc.exact / cc.exact
            eo = None if None in (dc.exact, cc.exact) else dc.exact / cc.exact
            sym = _scaled_surd(dc, cc.exact and 1 / cc.exact)
        else:
            r, o = m.c / m.b, -m.d / m.b
            er = None if None in (bc.exact, cc.exact) else cc.exact / bc.exact
            eo = None if None in (dc.exact, bc.exact) else -dc.exact / bc.exact
            sym = _scaled_surd(dc, bc.exact and -1 / bc.exact)
        maps.append(ScalarMap(r, o, er, eo, None if eo is not None else sym))
    return ScalarIFS(tuple(maps), kind)


def _scaled_surd(coef: Coefficient, factor: Fraction | None) -> Coefficient | None:
    if coef.surd is None or factor is None:
        return None
    f, rad = coef.surd
    nf = f * factor
    return Coefficient(float(nf) * math.sqrt(rad), f"{nf}*sqrt({rad})", None, (nf, rad))


def invariant_interval(s: ScalarIFS) -> tuple[float, float]:
    """Hull of the fixed points, rounded outward by one ulp when the float
    endpoints are not exact, so every map sends it into itself."""
    if any(m.ratio <= 0 for m in s.maps):
        raise ValueError("invariant_interval needs positive ratios")
    # exact hull of the float maps' fixed points
    fps = [Fraction(m.offset) / (1 - Fraction(m.ratio)) for m in s.maps]
    lo, hi = min(fps), max(fps)
    flo, fhi = float(lo), float(hi)
    if Fraction(flo) > lo:
        flo = math.nextafter(flo, -math.inf)
    if Fraction(fhi) < hi:
        fhi = math.nextafter(fhi, math.inf)
    return flo, fhi


def project_prefix(s: ScalarIFS, word: Sequence[int]) -> tuple[float, float]:
    """Truncated natural projection psi_{w1} o ... o psi_{wn}(anchor).

    The anchor is the midpoint of the invariant interval, so for every infinite
    continuation of ``word`` the true projection lies within
    ``prod(ratios) * diam / 2`` of the returned value.
    """
    if len(word) == 0:
        raise ValueError("word must be non-empty")
    lo, hi = invariant_interval(s)
    z = 0.5 * (lo + hi)
    prod = 1.0
    for sym in reversed(word):
        m = s.maps[int(sym) - 1]
        z = m(z)
        prod *= m.ratio
    return z, prod * (hi - lo) / 2
