"""Pinned instances of the worked example families.

The families are specified by parameter ranges; each entry fixes one concrete
system and re-checks every displayed constraint when the registry is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from triaffine.dimension import theorem_dimension
from triaffine.ifs_model import AffineIFS, cylinder
from triaffine.separation import _vertical_gap


class RegistryError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExampleRegistryEntry:
    name: str
    parameter_constraints: tuple[str, ...]
    default_instance: AffineIFS
    expected_theorem: str
    expected_dimension: str


def cylinders_disjoint(system: AffineIFS, i: int, j: int) -> bool:
    """Whether the level-1 cylinders of symbols i and j are disjoint."""
    a, b = cylinder(system, (i,)), cylinder(system, (j,))
    L1, R1 = a.x_interval
    L2, R2 = b.x_interval
    if L2 > R1 or L1 > R2:
        return True
    g = _vertical_gap(np.array(L1), np.array(R1), np.array(a.y0), np.array(a.shear / a.width), np.array(a.height),
                      np.array(L2), np.array(R2), np.array(b.y0), np.array(b.shear / b.width), np.array(b.height))
    return bool(g > 0)


def _d3_window(c: float, b: float, d1: float, d2: float) -> tuple[float, float]:
    r = c / b
    return d2 * (2 - r) + d1 * (r - 1), d1 * (2 - r) + d2 * (r - 1)


def _is_arithmetic(xs) -> bool:
    s = sorted(xs)
    return math.isclose(s[1] - s[0], s[2] - s[1], rel_tol=0, abs_tol=1e-12) and s[1] > s[0]


def _common_three_map(s: AffineIFS) -> list[tuple[str, bool]]:
    d1, d2, d3 = s.column("d")
    lo, hi = _d3_window(s.c, s.b, d1, d2)
    return [
        ("N = 3", s.N == 3),
        ("d1 < d2", d1 < d2),
        ("d3 inside the (e) window", lo < d3 < hi),
        ("S3 image disjoint from S1 and S2 images",
         cylinders_disjoint(s, 3, 1) and cylinders_disjoint(s, 3, 2)),
    ]


def check_j49(s: AffineIFS) -> list[tuple[str, bool]]:
    u, d = s.column("u"), s.column("d")
    return [
        ("N = 2", s.N == 2),
        ("homogeneous", s.is_diag_homogeneous),
        ("c in (1/2, 1)", 0.5 < s.c < 1),
        ("0 < b < c/2", 0 < s.b < s.c / 2),
        ("u1 != u2", u[0] != u[1]),
        ("d1 != d2", d[0] != d[1]),
    ]


def check_j29(s: AffineIFS) -> list[tuple[str, bool]]:
    u = s.column("u")
    return [
        ("homogeneous", s.is_diag_homogeneous),
        ("c in (1/3, 1)", 1 / 3 < s.c < 1),
        ("b < c/2 and b < 1/3", 0 < s.b < min(s.c / 2, 1 / 3)),
        ("u pairwise distinct", len(set(u)) == 3),
    ] + _common_three_map(s)


def check_j48(s: AffineIFS) -> list[tuple[str, bool]]:
    return [
        ("homogeneous", s.is_diag_homogeneous),
        ("c in (1/sqrt3, 1)", 1 / math.sqrt(3) < s.c < 1),
        ("0 < b < c/2", 0 < s.b < s.c / 2),
        ("u arithmetic progression", _is_arithmetic(s.column("u"))),
    ] + _common_three_map(s)


def check_j33(s: AffineIFS) -> list[tuple[str, bool]]:
    m0 = s.maps[0]
    c, b = s.c, s.b
    rational_d = [m.coefficient("d").is_rational for m in s.maps]
    rational_u = [m.coefficient("u").is_rational for m in s.maps]
    return [
        ("N = 3", s.N == 3),
        ("homogeneous", s.is_diag_homogeneous),
        ("c, b rational", m0.coefficient("c").is_rational and m0.coefficient("b").is_rational),
        ("c < min(1/3, b)", c < min(1 / 3, b)),
        ("b < min(sqrt c, c^(1 + log3/(2 log 3c)))",
         b < min(math.sqrt(c), c ** (1 + math.log(3) / (2 * math.log(3 * c))))),
        ("two rational d, one irrational", sorted(rational_d) == [False, True, True]),
        ("two rational u, one irrational", sorted(rational_u) == [False, True, True]),
    ]


def j48_instance(b: float | str = "0.35", c: str = "8/9") -> AffineIFS:
    """Three maps, c = 8/9, u = (0, 1/18, 1/9); S3 sits above the crossing pair S1, S2."""
    return AffineIFS.homogeneous(c, b, d=["-0.05", "0.05", "0"], u=["0", "1/18", "1/9"],
                                 v=["0.06", "0.01", "0.59"], label="j48")


def _build() -> dict[str, tuple[ExampleRegistryEntry, Callable]]:
    j49 = AffineIFS.homogeneous("0.7", "0.3", d=["-0.2", "0.2"], u=["0", "0.3"], v=["0.55", "0.275"],
                                label="j49")
    j29 = AffineIFS.homogeneous("0.4", "0.1", d=["0", "0.1", "0.2"], u=["0.05", "0.3", "0.55"],
                                v=["0.15", "0.1", "0.6"], label="j29")
    j48 = j48_instance()
    j33 = AffineIFS.homogeneous("1/4", "3/8", d=["0", "1/2", "sqrt(2)/8"], u=["0", "1/2", "sqrt(2)/4"],
                                v=["0", "1/16", "3/8"], label="j33")
    return {
        "j49": (ExampleRegistryEntry(
            "j49",
            ("N=2", "c in (1/2,1) minus E1", "0 < b < c/2", "u1 != u2", "d1 != d2", "maps into the square"),
            j49, "ThmA", "1 + log(2c)/-log(b)"), check_j49),
        "j29": (ExampleRegistryEntry(
            "j29",
            ("N=3", "c in (1/3,1) minus E2", "b < min(c/2, 1/3)", "u pairwise distinct",
             "d1 < d2, d3 in the (e) window", "S3 image disjoint from S1, S2 images"),
            j29, "ThmA", "1 + log(3c)/-log(b)"), check_j29),
        "j48": (ExampleRegistryEntry(
            "j48",
            ("N=3", "c in (1/sqrt3,1) minus E3", "0 < b < c/2", "u arithmetic progression",
             "d1 < d2, d3 in the (e) window", "S3 image disjoint from S1, S2 images"),
            j48, "ThmB", "min(2, 1 + log(3c)/-log(b))"), check_j48),
        "j33": (ExampleRegistryEntry(
            "j33",
            ("N=3", "c, b rational", "c < min(1/3, b)", "b < min(sqrt c, c^(1+log3/(2log3c)))",
             "one irrational d and one irrational u"),
            j33, "ThmC", "min(log N/-log b, 1 + log(Nb)/-log c)"), check_j33),
    }


CHECKS: dict[str, Callable[[AffineIFS], list[tuple[str, bool]]]] = {}


def _validated() -> dict[str, ExampleRegistryEntry]:
    out = {}
    for name, (entry, check) in _build().items():
        failed = [label for label, ok in check(entry.default_instance) if not ok]
        if failed:
            raise RegistryError(f"example {name}: constraint(s) violated: {failed}")
        verdict = theorem_dimension(entry.default_instance)
        if verdict.theorem != entry.expected_theorem:
            raise RegistryError(f"example {name}: expected {entry.expected_theorem}, got {verdict.theorem}")
        CHECKS[name] = check
        out[name] = entry
    return out


REGISTRY: dict[str, ExampleRegistryEntry] = _validated()


def get_example(name: str) -> AffineIFS:
    try:
        return REGISTRY[name].default_instance
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(REGISTRY)}") from None


__all__ = ["REGISTRY", "CHECKS", "ExampleRegistryEntry", "RegistryError", "get_example",
           "j48_instance", "cylinders_disjoint"]
