"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Tolerances for the sampling criteria are engineering choices; see the
README for the recorded outcomes.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from triaffine.cli import main
from triaffine.dimension import (
    affinity_dimension,
    homogeneous_affinity,
    lyapunov_dimension,
    phase_transition_profile,
)
from triaffine.estimate import box_dimension, chaos_game, correlation_dimension, dyadic_scales, slice_dimension
from triaffine.ifs_model import AffineIFS, TriangularMap
from triaffine.projective import ScalarIFS
from triaffine.registry import REGISTRY, j48_instance
from triaffine.separation import (
    count_intersecting_pairs,
    delta_n_exact,
    delta_n_symbolic,
    ssp_certificate,
    verify_certificate,
)

SCALES = dyadic_scales(4, 10)
STRIP = 2.0**-10
POINTS = 10**6
THREADS = 4


class Gate:
    def __init__(self, number: int, budget: float):
        self.number = number
        self.budget = budget

    def __enter__(self):
        self.t0 = time.perf_counter()
        self.checks: list[tuple[str, bool]] = []
        return self

    def check(self, label: str, ok) -> None:
        self.checks.append((label, bool(ok)))

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        if exc_type is None:
            self.check(f"runtime {dt:.1f}s < {self.budget:g}s", dt < self.budget)
        failed = [label for label, ok in self.checks if not ok]
        if exc_type is not None:
            failed.append(f"raised {exc_type.__name__}: {exc}")
        verdict = "FAIL" if failed else "PASS"
        detail = "; ".join(failed if failed else [label for label, _ in self.checks])
        line = f"criterion {self.number}: {verdict} ({dt:.1f}s) {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        if exc_type is None:
            assert not failed, line
        return False


def random_homogeneous(rng, n, c, b) -> AffineIFS:
    u = rng.uniform(0, 1 - c, n)
    v = rng.uniform(0, 1 - b, n)
    d = np.zeros(n)
    return AffineIFS.homogeneous(repr(c), repr(b), d=[repr(x) for x in d.tolist()],
                                 u=[repr(x) for x in u.tolist()], v=[repr(x) for x in v.tolist()])


def test_criterion_1_moran_closed_form():
    rng = np.random.default_rng(20260101)
    with Gate(1, 1.0) as g:
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(2, 7))
            c = float(rng.uniform(0.05, 0.95))
            # keep N c b <= 1: the range where the affinity dimension is at most 2
            b = float(rng.uniform(0.01, min(0.99 * c, 1 / (n * c))))
            s = random_homogeneous(rng, n, c, b)
            worst = max(worst, abs(affinity_dimension(s).dim_aff - homogeneous_affinity(n, c, b)))
        g.check(f"max |moran - closed form| = {worst:.1e} <= 1e-9", worst <= 1e-9)


def test_criterion_2_lyapunov_identity():
    rng = np.random.default_rng(20260102)
    with Gate(2, 1.0) as g:
        worst, tried = 0.0, 0
        while tried < 100:
            n = int(rng.integers(2, 7))
            c = float(rng.uniform(1 / n, 0.98))
            b = float(rng.uniform(0.01, min(0.99 * c, 1 / (n * c))))
            if not (n * c > 1 and n * c * b <= 1 and c > b):
                continue
            tried += 1
            s = random_homogeneous(rng, n, c, b)
            worst = max(worst, abs(lyapunov_dimension(s) - homogeneous_affinity(n, c, b)))
        g.check(f"max |lyapunov - affinity| = {worst:.1e} <= 1e-9", worst <= 1e-9)


def test_criterion_3_phase_transition():
    c = 8 / 9
    with Gate(3, 1.0) as g:
        grid = np.linspace(0.05, c / 2, 400).tolist() + [3 / 8]
        prof = phase_transition_profile(c, grid)
        expect = [1 + math.log(3 * c) / -math.log(b) if b <= 3 / 8 else 2.0 for b in grid]
        g.check("profile equals piecewise formula",
                all(abs(d - e) <= 1e-12 for (_, d), e in zip(prof.points, expect)))
        left = 1 + math.log(3 * c) / -math.log(3 / 8)
        g.check("both branches give 2 at b = 3/8", abs(left - 2.0) <= 1e-12)
        g.check("breakpoint 3/8", abs(prof.breakpoint - 3 / 8) <= 1e-12)
        g.check("profile is 2 on [3/8, 4/9]",
                all(abs(d - 2.0) <= 1e-12 for b, d in prof.points if b >= 3 / 8))


def brute_delta(pairs, n):
    maps = [(Fraction(r), Fraction(o)) for r, o in pairs]
    pts = []
    for w in itertools.product(range(len(maps)), repeat=n):
        deriv, val = Fraction(1), Fraction(0)
        for k in w:
            val += deriv * maps[k][1]
            deriv *= maps[k][0]
        pts.append((deriv, val))
    return min(abs(p[1] - q[1]) for p, q in itertools.combinations(pts, 2) if p[0] == q[0])


def test_criterion_4_exact_delta():
    s = ScalarIFS.parse("1/2:0,1/2:1")
    with Gate(4, 10.0) as g:
        g.check("delta_n = 2^(1-n) for n <= 20",
                all(delta_n_exact(s, n) == Fraction(2, 2**n) for n in range(1, 21)))
        g.check("matches brute force for n <= 10",
                all(delta_n_exact(s, n) == brute_delta([("1/2", 0), ("1/2", 1)], n) for n in range(1, 11)))


def test_criterion_5_symbolic_structure():
    with Gate(5, 30.0) as g:
        reps = [delta_n_symbolic(Fraction(1, 2), [0, 1], "sqrt(2)/2", n) for n in range(1, 11)]
        g.check("n=1..10 rational-channel gaps >= 2^-n",
                all(r.rational_channel_nonzero and r.rational_channel_min >= Fraction(1, 2**r.n) for r in reps))
        g.check("n=1..10 |p_i| <= (2q)^n", all(r.bound_holds for r in reps))


def test_criterion_6_ssp():
    with Gate(6, 60.0) as g:
        s = REGISTRY["j29"].default_instance
        cert = ssp_certificate(s, 8)
        g.check("j29 certificate at level <= 8", cert.found and cert.level <= 8)
        again = verify_certificate(s, cert)
        g.check(f"re-verified margin {again:.6g} agrees to 1e-12", abs(again - cert.margin) <= 1e-12)
        m = TriangularMap.from_coefficients("0.5", "0.3", "0.1", "0.2", "0.2")
        dup = ssp_certificate(AffineIFS((m, m)), 8)
        g.check("duplicated map Unknown at every level <= 8",
                not dup.found and [lvl for lvl, _ in dup.log] == list(range(1, 9)))


def test_criterion_7_pair_growth():
    with Gate(7, 120.0) as g:
        s = REGISTRY["j49"].default_instance
        rep = count_intersecting_pairs(s, 12, 1.0)
        bound = math.log(s.N**2 * s.c**2) + 0.15
        g.check(f"rate {rep.rate:.4f} <= {bound:.4f} (B_12 = {rep.count})", rep.rate <= bound)
        g.check("B even", rep.count % 2 == 0)
        disjoint = AffineIFS.homogeneous("0.4", "0.4", d=["0", "0"], u=["0", "0.6"], v=["0", "0.6"])
        g.check("level-1-disjoint system gives 0", count_intersecting_pairs(disjoint, 12, 1.0).count == 0)


def test_criterion_8_theorem_a():
    with Gate(8, 120.0) as g:
        cloud = chaos_game(REGISTRY["j49"].default_instance, POINTS, seed=0, threads=THREADS)
        box = box_dimension(cloud, SCALES).estimate
        sl = slice_dimension(cloud, STRIP, SCALES).estimate
        target = math.log(1.4) / math.log(10 / 3)
        g.check(f"box {box:.4f} within 0.12 of 1.279490", abs(box - 1.279490) <= 0.12)
        g.check(f"slice {sl:.4f} within 0.12 of {target:.4f}", abs(sl - target) <= 0.12)


def test_criterion_9_theorem_b():
    with Gate(9, 180.0) as g:
        cloud = chaos_game(j48_instance(b="0.4"), POINTS, seed=0, threads=THREADS)
        box = box_dimension(cloud, SCALES).estimate
        corr = correlation_dimension(cloud, SCALES).estimate
        g.check(f"box {box:.4f} >= 1.80", box >= 1.80)
        g.check(f"correlation {corr:.4f} >= 1.75", corr >= 1.75)


def test_criterion_10_estimator_ordering():
    with Gate(10, 300.0) as g:
        for name in sorted(REGISTRY):
            cloud = chaos_game(REGISTRY[name].default_instance, POINTS, seed=0, threads=THREADS)
            box = box_dimension(cloud, SCALES).estimate
            corr = correlation_dimension(cloud, SCALES).estimate
            g.check(f"{name} corr {corr:.3f} <= box {box:.3f} + 0.1", corr <= box + 0.1)


COMMANDS = [
    ["dim", "--example", "j33"],
    ["estimate", "--example", "j49", "--method", "box", "--points", "600000"],
    ["estimate", "--example", "j48", "--method", "corr", "--points", "600000"],
    ["estimate", "--example", "j49", "--method", "slice", "--points", "600000"],
    ["estimate", "--example", "j29", "--method", "lq", "--points", "600000", "--bins", "256"],
    ["sample", "--example", "j29", "--points", "600000"],
    ["check", "--kind", "ssp", "--example", "j29", "--max-level", "6"],
    ["check", "--kind", "delta", "--example", "j33", "--n", "6"],
    ["check", "--kind", "pairs", "--example", "j49", "--level", "8"],
    ["sweep", "--c", "0.888889", "--steps", "50"],
]


def test_criterion_11_determinism(tmp_path, capsys):
    with Gate(11, 300.0) as g:
        for argv in COMMANDS:
            outputs = set()
            for run, threads in enumerate((1, 1, THREADS)):
                path = tmp_path / f"out{run}"
                extra = ["--out", str(path)]
                if argv[0] in ("estimate", "sample", "check"):
                    extra += ["--threads", str(threads)]
                main(argv + extra)
                capsys.readouterr()
                outputs.add(path.read_bytes())
            g.check(f"{argv[0]} {' '.join(argv[1:3])}", len(outputs) == 1)
        fails = [lbl for lbl, ok in g.checks if not ok]
        g.checks = g.checks if fails else [(f"{len(COMMANDS)} commands byte-identical over reruns and threads", True)]
