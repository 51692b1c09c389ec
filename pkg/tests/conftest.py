"""Shared strategies for property tests."""

from __future__ import annotations

from hypothesis import strategies as st

from triaffine.ifs_model import AffineIFS, TriangularMap

unit = st.floats(0.05, 0.95, allow_nan=False)


@st.composite
def triangular_maps(draw, c=None, b=None) -> TriangularMap:
    """A map sending the unit square into itself."""
    c = draw(unit) if c is None else c
    b = draw(unit) if b is None else b
    # a small margin keeps the decimal text of each float inside the square
    eps = 1e-9
    room = 1 - b - 2 * eps
    d = draw(st.floats(-room, room))
    u = draw(st.floats(eps, 1 - c - eps))
    v_lo, v_hi = max(0.0, -d) + eps, min(1 - b, 1 - b - d) - eps
    v = draw(st.floats(v_lo, v_hi)) if v_lo < v_hi else v_lo
    return TriangularMap.from_coefficients(*(repr(float(x)) for x in (c, b, d, u, v)))


@st.composite
def systems(draw, n_min=1, n_max=4) -> AffineIFS:
    n = draw(st.integers(n_min, n_max))
    return AffineIFS(tuple(draw(triangular_maps()) for _ in range(n)))


@st.composite
def homogeneous_systems(draw, n_min=2, n_max=4) -> AffineIFS:
    """Homogeneous, c > b and N c b <= 1, so the affinity dimension is at most 2."""
    n = draw(st.integers(n_min, n_max))
    c = draw(unit)
    b = draw(st.floats(0.02, min(c * 0.98, 1 / (n * c))))
    return AffineIFS(tuple(draw(triangular_maps(c, b)) for _ in range(n)))


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion, printed in the terminal summary

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
