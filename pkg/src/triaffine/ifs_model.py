"""Triangular self-affine systems: coefficients, system documents, composition
and cylinder geometry.

A map of the system acts on the plane as

    S(x, y) = (c*x + u, d*x + b*y + v)

so its linear part is the lower-triangular matrix [[c, 0], [d, b]].
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

FIELDS = ("c", "b", "d", "u", "v")

# decimal or p/q
_RATIONAL = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_RATIONAL_RE = re.compile(rf"^{_RATIONAL}$")
_SQRT_RE = re.compile(
    rf"^(?P<sign>[+-])?(?:(?P<coef>{_RATIONAL})\*)?sqrt\((?P<rad>\d+)\)(?:/(?P<den>\d+))?$"
)


class SystemSyntaxError(ValueError):
    """Malformed system document; carries the offending position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class ValidationError(ValueError):
    """A system violates one or more invariants. ``violations`` lists all of them."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Coefficient:
    """A real coefficient with its source text.

    ``exact`` is set for finite decimals and fractions. Quadratic surds
    (``a*sqrt(k)/m``) keep ``surd = (rational factor, radicand)`` so they can
    be evaluated to any precision.
    """

    value: float
    text: str
    exact: Fraction | None = None
    surd: tuple[Fraction, int] | None = None

    @classmethod
    def parse(cls, text: str) -> "Coefficient":
        s = str(text).strip().replace(" ", "")
        if _RATIONAL_RE.match(s):
            q = _to_fraction(s)
            return cls(float(q) if "/" in s else float(s), s, q)
        m = _SQRT_RE.match(s)
        if m is None:
            raise ValueError(f"not a number: {text!r}")
        factor = _to_fraction(m["coef"]) if m["coef"] else Fraction(1)
        if m["den"]:
            if int(m["den"]) == 0:
                raise ValueError(f"division by zero in {text!r}")
            factor /= int(m["den"])
        if m["sign"] == "-":
            factor = -factor
        rad = int(m["rad"])
        root = math.isqrt(rad)
        if root * root == rad:
            q = factor * root
            return cls(float(q), s, q)
        return cls(float(factor) * math.sqrt(rad), s, None, (factor, rad))

    @classmethod
    def from_float(cls, x: float) -> "Coefficient":
        text = repr(float(x))
        return cls(float(x), text, _to_fraction(text))

    @property
    def is_rational(self) -> bool:
        return self.exact is not None

    def mp(self, prec: int = 256) -> mpmath.mpf:
        """Value at ``prec`` bits of precision."""
        with mpmath.workprec(prec):
            if self.exact is not None:
                return mpmath.mpf(self.exact.numerator) / self.exact.denominator
            if self.surd is not None:
                f, rad = self.surd
                return mpmath.mpf(f.numerator) / f.denominator * mpmath.sqrt(rad)
            return mpmath.mpf(self.value)

    def __float__(self) -> float:
        return self.value


def _to_fraction(s: str) -> Fraction:
    if "/" in s:
        num, den = s.split("/")
        if int(den) == 0:
            raise ValueError(f"division by zero in {s!r}")
        return Fraction(num) / int(den)
    return Fraction(s)


@dataclass(frozen=True)
class TriangularMap:
    """One map S(x, y) = (c x + u, d x + b y + v)."""

    c: float
    b: float
    d: float
    u: float
    v: float
    coeffs: tuple[Coefficient, ...] | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_coefficients(cls, c, b, d, u, v) -> "TriangularMap":
        cs = tuple(x if isinstance(x, Coefficient) else Coefficient.parse(str(x)) for x in (c, b, d, u, v))
        return cls(*(x.value for x in cs), coeffs=cs)

    def coefficient(self, name: str) -> Coefficient:
        if self.coeffs is not None:
            return self.coeffs[FIELDS.index(name)]
        return Coefficient.from_float(getattr(self, name))

    def exact(self, name: str) -> Fraction | None:
        return self.coefficient(name).exact

    def __call__(self, x, y):
        return self.c * x + self.u, self.d * x + self.b * y + self.v

    def violations(self, index: int = 0) -> list[str]:
        out = []
        if not 0 < self.c < 1:
            out.append(f"map {index}: c out of (0,1): {self.c!r}")
        if not 0 < self.b < 1:
            out.append(f"map {index}: b out of (0,1): {self.b!r}")
        for name in FIELDS:
            if not math.isfinite(getattr(self, name)):
                out.append(f"map {index}: {name} is not finite")
        if out:
            return out
        for corner, image in zip(((0, 0), (1, 0), (0, 1), (1, 1)), _exact_corners(self)):
            for axis, val in zip("xy", image):
                if val < 0 or val > 1:
                    out.append(
                        f"map {index}: image of corner {corner} has {axis}={float(val):.17g} outside [0,1]"
                    )
        return out


def _exact_corners(m: TriangularMap):
    cs = [m.coefficient(n) for n in FIELDS]
    if all(x.is_rational for x in cs):
        c, b, d, u, v = (x.exact for x in cs)
    else:
        c, b, d, u, v = (x.mp() for x in cs)
    return [(c * x + u, d * x + b * y + v) for x, y in ((0, 0), (1, 0), (0, 1), (1, 1))]


@dataclass(frozen=True)
class AffineIFS:
    """An ordered family of triangular maps; symbol i (1-based) indexes maps[i-1]."""

    maps: tuple[TriangularMap, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        problems = [] if self.maps else ["system has no maps"]
        for i, m in enumerate(self.maps, start=1):
            problems.extend(m.violations(i))
        if problems:
            raise ValidationError(problems)

    @classmethod
    def homogeneous(cls, c, b, d: Iterable, u: Iterable, v: Iterable, label: str = "") -> "AffineIFS":
        """Build a diagonally homogeneous system; entries may be numbers or strings."""
        d, u, v = list(d), list(u), list(v)
        if not len(d) == len(u) == len(v):
            raise ValidationError(["d, u, v must have equal length"])
        maps = [TriangularMap.from_coefficients(str(c), str(b), str(di), str(ui), str(vi))
                for di, ui, vi in zip(d, u, v)]
        return cls(tuple(maps), label)

    @property
    def N(self) -> int:
        return len(self.maps)

    @property
    def is_diag_homogeneous(self) -> bool:
        m0 = self.maps[0]
        return all(m.c == m0.c and m.b == m0.b for m in self.maps)

    @property
    def c(self) -> float:
        self._require_homogeneous()
        return self.maps[0].c

    @property
    def b(self) -> float:
        self._require_homogeneous()
        return self.maps[0].b

    @property
    def dominant_axis(self) -> str | None:
        """'x' if every c_i > b_i, 'y' if every b_i > c_i, 'tie' if all equal, else None."""
        if all(m.c > m.b for m in self.maps):
            return "x"
        if all(m.b > m.c for m in self.maps):
            return "y"
        if all(m.b == m.c for m in self.maps):
            return "tie"
        return None

    def column(self, name: str) -> list[float]:
        return [getattr(m, name) for m in self.maps]

    def _require_homogeneous(self):
        if not self.is_diag_homogeneous:
            raise ValueError("system is not diagonally homogeneous")


# ---------------------------------------------------------------------------
# system documents


def parse_system(text: str) -> AffineIFS:
    """Parse a JSON system document.

    Numbers may be given as strings (preferred, kept verbatim) or JSON numbers;
    either way the literal text is retained for exact arithmetic.
    """
    try:
        doc = json.loads(text, parse_float=str, parse_int=str)
    except json.JSONDecodeError as exc:
        raise SystemSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise SystemSyntaxError("top level must be an object", 1, 1)
    problems = []
    unknown = set(doc) - {"label", "maps"}
    if unknown:
        problems.append(f"unknown top-level keys: {sorted(unknown)}")
    raw_maps = doc.get("maps")
    if not isinstance(raw_maps, list) or not raw_maps:
        raise ValidationError(problems + ["'maps' must be a non-empty list"])
    maps = []
    for i, entry in enumerate(raw_maps, start=1):
        if not isinstance(entry, dict):
            problems.append(f"map {i}: must be an object")
            continue
        missing = [k for k in FIELDS if k not in entry]
        extra = sorted(set(entry) - set(FIELDS))
        if missing:
            problems.append(f"map {i}: missing fields {missing}")
        if extra:
            problems.append(f"map {i}: unknown fields {extra}")
        coeffs = []
        for k in FIELDS:
            if k not in entry:
                continue
            try:
                coeffs.append(Coefficient.parse(entry[k]))
            except (ValueError, TypeError):
                problems.append(f"map {i}: {k} is not a number: {entry[k]!r}")
        if len(coeffs) == 5:
            m = TriangularMap(*(x.value for x in coeffs), coeffs=tuple(coeffs))
            problems.extend(m.violations(i))
            maps.append(m)
    if problems:
        raise ValidationError(problems)
    return AffineIFS(tuple(maps), str(doc.get("label", "")))


def dump_system(system: AffineIFS) -> str:
    doc = {
        "label": system.label,
        "maps": [{k: m.coefficient(k).text for k in FIELDS} for m in system.maps],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_system(path) -> AffineIFS:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


# ---------------------------------------------------------------------------
# composition and cylinders


@dataclass(frozen=True)
class AffineComposite:
    """The map (x, y) -> (c x + u, shear x + b y + v) obtained by composing a word."""

    c_total: float = 1.0
    b_total: float = 1.0
    shear_total: float = 0.0
    u_total: float = 0.0
    v_total: float = 0.0

    def then_inner(self, m: TriangularMap) -> "AffineComposite":
        """Return self o m."""
        return AffineComposite(
            self.c_total * m.c,
            self.b_total * m.b,
            self.shear_total * m.c + self.b_total * m.d,
            self.c_total * m.u + self.u_total,
            self.shear_total * m.u + self.b_total * m.v + self.v_total,
        )

    def compose(self, inner: "AffineComposite") -> "AffineComposite":
        """Return self o inner."""
        return AffineComposite(
            self.c_total * inner.c_total,
            self.b_total * inner.b_total,
            self.shear_total * inner.c_total + self.b_total * inner.shear_total,
            self.c_total * inner.u_total + self.u_total,
            self.shear_total * inner.u_total + self.b_total * inner.v_total + self.v_total,
        )

    def __call__(self, x, y):
        return self.c_total * x + self.u_total, self.shear_total * x + self.b_total * y + self.v_total


def _check_word(system: AffineIFS, word: Sequence[int]) -> None:
    for s in word:
        if not (isinstance(s, (int,)) or hasattr(s, "__index__")) or not 1 <= int(s) <= system.N:
            raise ValueError(f"symbol {s!r} out of range 1..{system.N}")


def compose(system: AffineIFS, word: Sequence[int]) -> AffineComposite:
    """S_w = S_{w1} o ... o S_{wn} as one affine map (identity for the empty word)."""
    _check_word(system, word)
    out = AffineComposite()
    for s in word:
        out = out.then_inner(system.maps[int(s) - 1])
    return out


@dataclass(frozen=True)
class CylinderParallelogram:
    """S_w([0,1]^2): a parallelogram with two vertical sides.

    The lower edge runs from (x0, y0) to (x0 + width, y0 + shear); the upper
    edge is the lower one shifted up by ``height``.
    """

    word: tuple[int, ...]
    x0: float
    width: float
    y0: float
    shear: float
    height: float

    @property
    def x_interval(self) -> tuple[float, float]:
        return self.x0, self.x0 + self.width

    @property
    def corners(self) -> list[tuple[float, float]]:
        x1 = self.x0 + self.width
        return [
            (self.x0, self.y0),
            (x1, self.y0 + self.shear),
            (self.x0, self.y0 + self.height),
            (x1, self.y0 + self.shear + self.height),
        ]

    def lower(self, x: float) -> float:
        return self.y0 + self.shear * (x - self.x0) / self.width

    def upper(self, x: float) -> float:
        return self.lower(x) + self.height

    def contains(self, point, tol: float = 0.0) -> bool:
        x, y = point
        if x < self.x0 - tol or x > self.x0 + self.width + tol:
            return False
        xc = min(max(x, self.x0), self.x0 + self.width)
        return self.lower(xc) - tol <= y <= self.upper(xc) + tol


def cylinder(system: AffineIFS, word: Sequence[int]) -> CylinderParallelogram:
    if len(word) == 0:
        raise ValueError("cylinder needs a non-empty word")
    a = compose(system, word)
    return CylinderParallelogram(
        tuple(int(s) for s in word), a.u_total, a.c_total, a.v_total, a.shear_total, a.b_total
    )
