"""Sampling the natural measure and estimating dimensions from samples."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy import stats

from triaffine.ifs_model import AffineIFS

CHUNK_SIZE = 1 << 18
GENERATOR_TAG = "pcg64/seedsequence(seed, spawn_key=(chunk,))/chunk=262144"
CLOUD_MAGIC = b"TRIAFPC1"


class EstimationError(ValueError):
    pass


class DegenerateRegression(EstimationError):
    pass


class StripTooSparse(EstimationError):
    pass


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    seed: int
    burn_in: int
    generator_tag: str = GENERATOR_TAG

    def __len__(self) -> int:
        return len(self.points)


@numba.njit(nogil=True, cache=True)
def _iterate(coef, symbols, burn_in, out):
    x = 0.0
    y = 0.0
    for k in range(symbols.size):
        i = symbols[k]
        c, b, d, u, v = coef[i, 0], coef[i, 1], coef[i, 2], coef[i, 3], coef[i, 4]
        x, y = c * x + u, d * x + b * y + v
        if k >= burn_in:
            out[k - burn_in, 0] = x
            out[k - burn_in, 1] = y


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def chaos_game(system: AffineIFS, n_points: int, seed: int = 0, burn_in: int = 64,
               threads: int = 1) -> PointCloud:
    """Random iteration from the origin with i.i.d. uniform symbols.

    Points are produced in fixed-size chunks; each chunk is an independent
    chain with its own ``burn_in`` and its own generator, derived from
    ``seed`` and the chunk index. ``threads`` only changes how chunks are
    scheduled, never the output.
    """
    if n_points < 1:
        raise EstimationError("n_points must be >= 1")
    if burn_in < 0:
        raise EstimationError("burn_in must be >= 0")
    coef = np.array([[m.c, m.b, m.d, m.u, m.v] for m in system.maps])
    out = np.empty((n_points, 2))
    starts = list(range(0, n_points, CHUNK_SIZE))

    def run(k: int) -> None:
        lo = starts[k]
        hi = min(lo + CHUNK_SIZE, n_points)
        sym = _chunk_rng(seed, k).integers(0, system.N, size=burn_in + hi - lo, dtype=np.int64)
        _iterate(coef, sym, burn_in, out[lo:hi])

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(starts))))
    else:
        for k in range(len(starts)):
            run(k)
    # the square is invariant, so anything outside is round-off
    np.clip(out, 0.0, 1.0, out=out)
    return PointCloud(out, seed, burn_in)


def apply_map(cloud: PointCloud, system: AffineIFS, i: int) -> PointCloud:
    m = system.maps[i - 1]
    x, y = m(cloud.points[:, 0], cloud.points[:, 1])
    return PointCloud(np.column_stack([x, y]), cloud.seed, cloud.burn_in, cloud.generator_tag + f"/S{i}")


# ---------------------------------------------------------------------------
# regression


@dataclass(frozen=True)
class DimensionReport:
    estimate: float
    slope_stderr: float
    r_squared: float
    scales: tuple[float, ...]
    counts_or_sums: tuple[float, ...]
    method: str
    extra: dict = field(default_factory=dict, compare=False)

    def csv_rows(self) -> list[tuple[float, float, float, float]]:
        """(scale, statistic, log scale, log statistic) per scale."""
        return [(r, s, math.log(r), math.log(s)) for r, s in zip(self.scales, self.counts_or_sums)]


def check_scales(scales: Sequence[float]) -> tuple[float, ...]:
    if len(scales) < 4:
        raise EstimationError("need at least 4 scales")
    out = sorted({float(r) for r in scales}, reverse=True)
    if len(out) != len(scales):
        raise EstimationError("scales must be distinct")
    for r in out:
        mant, _ = math.frexp(r)
        if mant != 0.5 or r > 1:
            raise EstimationError(f"scale {r} is not of the form 2^-k")
    return tuple(out)


def dyadic_scales(k_min: int, k_max: int) -> tuple[float, ...]:
    return tuple(2.0 ** -k for k in range(k_min, k_max + 1))


def _fit(scales, stats_, sign: float, method: str, extra=None) -> DimensionReport:
    s = np.asarray(stats_, dtype=float)
    if np.all(s == s[0]):
        # one occupied cell at every scale (count 1, or mass^2 sum 1): a point mass
        if s[0] == 1:
            return DimensionReport(0.0, 0.0, 1.0, tuple(scales), tuple(s.tolist()), method, extra or {})
        raise DegenerateRegression("statistic is identical at every scale")
    logr = np.log(np.asarray(scales))
    fit = stats.linregress(sign * logr, np.log(s))
    return DimensionReport(float(fit.slope), float(fit.stderr), float(fit.rvalue ** 2),
                           tuple(scales), tuple(s.tolist()), method, extra or {})


def _cell_counts(points: np.ndarray, r: float) -> np.ndarray:
    # r = 2^-k, so p / r is exact and floor gives half-open cells [k r, (k+1) r)
    idx = np.floor(points / r).astype(np.int64)
    if idx.ndim == 1:
        keys = idx
    else:
        keys = idx[:, 0] * (np.int64(1) << 32) + idx[:, 1]
    _, counts = np.unique(keys, return_counts=True)
    return counts


def _nonempty(cloud: PointCloud) -> np.ndarray:
    pts = np.asarray(cloud.points, dtype=float)
    if pts.size == 0:
        raise EstimationError("empty point cloud")
    return pts


def box_dimension(cloud: PointCloud, scales: Sequence[float]) -> DimensionReport:
    """Slope of log N(r) against log(1/r), N(r) = occupied r-mesh cells."""
    sc = check_scales(scales)
    pts = _nonempty(cloud)
    counts = [len(_cell_counts(pts, r)) for r in sc]
    return _fit(sc, counts, -1.0, "box")


def correlation_dimension(cloud: PointCloud, scales: Sequence[float]) -> DimensionReport:
    """tau(2): slope of log sum_B mu(B)^2 against log r, mu the empirical measure."""
    sc = check_scales(scales)
    pts = _nonempty(cloud)
    n = len(pts)
    sums = []
    for r in sc:
        c = _cell_counts(pts, r).astype(float)
        sums.append(float(np.sum((c / n) ** 2)))
    return _fit(sc, sums, 1.0, "correlation")


def slice_dimension(cloud: PointCloud, strip_width: float, scales: Sequence[float],
                    min_points: int = 1000) -> DimensionReport:
    """Box dimension of the y-values in the vertical strip of width
    ``strip_width`` centred at the median x."""
    sc = check_scales(scales)
    pts = _nonempty(cloud)
    if strip_width < sc[-1]:
        raise EstimationError("strip_width must be at least the finest scale")
    a = float(np.median(pts[:, 0]))
    ys = pts[np.abs(pts[:, 0] - a) <= strip_width / 2, 1]
    if ys.size < min_points:
        raise StripTooSparse(f"strip holds {ys.size} points, need {min_points}")
    counts = [len(_cell_counts(ys, r)) for r in sc]
    return _fit(sc, counts, -1.0, "slice", {"center": a, "strip_points": int(ys.size)})


# ---------------------------------------------------------------------------
# L^q density of the x-marginal


@dataclass(frozen=True)
class DensityDiagnostics:
    q: float
    bins: int
    C_q_estimate: float
    worst_interval_ratio: float


def lq_density_diagnostics(cloud: PointCloud, q: float, bins: int,
                           n_intervals: int = 1000) -> DensityDiagnostics:
    """Histogram estimate of int phi^q for the x-marginal, and the largest
    observed mu(I) / (C_q^(1/q) |I|^(1-1/q)) over random subintervals."""
    if not q > 1:
        raise EstimationError("q must exceed 1")
    if bins < 16:
        raise EstimationError("bins must be >= 16")
    x = np.sort(_nonempty(cloud)[:, 0])
    n = x.size
    hist, _ = np.histogram(x, bins=bins, range=(0.0, 1.0))
    phi = hist * bins / n
    C = float(np.mean(phi ** q))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cloud.seed, spawn_key=(1 << 20, bins))))
    ends = np.sort(rng.random((n_intervals, 2)), axis=1)
    length = ends[:, 1] - ends[:, 0]
    ok = length > 0
    mass = (np.searchsorted(x, ends[ok, 1], side="right") - np.searchsorted(x, ends[ok, 0], side="left")) / n
    ratio = mass / (C ** (1 / q) * length[ok] ** (1 - 1 / q))
    return DensityDiagnostics(q, bins, C, float(ratio.max()))


def lq_refinement_sweep(cloud: PointCloud, q: float, bins_list: Sequence[int],
                        growth_factor: float = 2.0) -> tuple[list[DensityDiagnostics], bool]:
    """Diagnostics over increasing bin counts; flags unbounded-looking growth
    (finest C_q more than ``growth_factor`` times the coarsest)."""
    diags = [lq_density_diagnostics(cloud, q, b) for b in sorted(bins_list)]
    return diags, diags[-1].C_q_estimate > growth_factor * diags[0].C_q_estimate


# ---------------------------------------------------------------------------
# cloud files


def write_cloud_binary(cloud: PointCloud, path) -> None:
    with open(path, "wb") as fh:
        fh.write(CLOUD_MAGIC)
        fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())


def read_cloud_binary(path, seed: int = 0, burn_in: int = 0) -> PointCloud:
    with open(path, "rb") as fh:
        head = fh.read(len(CLOUD_MAGIC))
        if head != CLOUD_MAGIC:
            raise EstimationError("not a point-cloud file (bad magic)")
        raw = fh.read()
    if len(raw) % 16:
        raise EstimationError("truncated point-cloud file")
    data = np.frombuffer(raw, dtype="<f8")
    return PointCloud(data.reshape(-1, 2).astype(float), seed, burn_in, "file")


def write_cloud_csv(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y\n")
        for x, y in cloud.points.tolist():
            fh.write(f"{x!r},{y!r}\n")
