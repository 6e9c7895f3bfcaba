"""Quality/cost curve calculus: Akima fits in (quality, log10 cost) space,
Bjontegaard deltas over an arbitrary cost axis (rate, time, or energy),
relative curve differences, curve intersections, and the next-QP mapping.

All pairwise operations work on the quality overlap of the two curves only;
nothing is ever extrapolated. With curve_a as the reference, a positive
delta means curve_b needs more rate/time/energy at equal quality.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence as Seq

import numpy as np

from .akima import AkimaSpline, MIN_KNOTS
from .errors import ValidationError

BD_SIMPSON_SAMPLES = 1001
INTERSECTION_SCAN_POINTS = 4096
INTERSECTION_TOLERANCE = 1e-9


class CurveError(ValidationError):
    """Invalid curve data or incompatible curve pair."""


@dataclass(frozen=True)
class OperatingPoint:
    """One measured ladder rung: QP, quality score, positive cost."""

    qp: int
    quality: float
    cost: float

    def __post_init__(self):
        if not math.isfinite(self.quality):
            raise CurveError(f"QP {self.qp}: quality must be finite, got {self.quality}")
        if not (self.cost > 0 and math.isfinite(self.cost)):
            raise CurveError(f"QP {self.qp}: cost must be positive and finite, got {self.cost}")


@dataclass(frozen=True)
class Curve:
    """Operating points sorted by ascending quality, with axis labels.

    Measured ladders must be monotone in both axes; ``monotone_cost=False``
    relaxes the cost check for synthetic analysis curves and for noisy
    cost axes where the quality ordering still holds.
    """

    points: tuple[OperatingPoint, ...]
    quality_kind: str = "psnr_yuv"
    cost_kind: str = "bitrate"

    @classmethod
    def from_points(
        cls,
        points: Iterable[OperatingPoint],
        quality_kind: str = "psnr_yuv",
        cost_kind: str = "bitrate",
        monotone_cost: bool = True,
    ) -> "Curve":
        pts = tuple(sorted(points, key=lambda p: p.quality))
        if len(pts) < MIN_KNOTS:
            raise CurveError(f"a curve needs at least {MIN_KNOTS} points, got {len(pts)}")
        for prev, cur in zip(pts, pts[1:]):
            if cur.quality <= prev.quality:
                raise CurveError(
                    f"quality not strictly increasing: {prev.quality} (QP {prev.qp}) "
                    f"then {cur.quality} (QP {cur.qp})"
                )
            if monotone_cost and cur.cost <= prev.cost:
                raise CurveError(
                    f"cost not strictly increasing along quality: {prev.cost} (QP {prev.qp}) "
                    f"then {cur.cost} (QP {cur.qp})"
                )
        return cls(pts, quality_kind, cost_kind)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    @property
    def costs(self) -> np.ndarray:
        return np.array([p.cost for p in self.points])

    @property
    def quality_range(self) -> tuple[float, float]:
        return self.points[0].quality, self.points[-1].quality


def fit_akima(curve: Curve) -> AkimaSpline:
    """Interpolant mapping quality to log10(cost); defined on the curve's range."""
    return AkimaSpline(curve.qualities, np.log10(curve.costs))


def overlap_range(curve_a: Curve, curve_b: Curve) -> tuple[float, float]:
    """Intersection of the two curves' quality ranges; must be non-degenerate."""
    if (curve_a.quality_kind, curve_a.cost_kind) != (curve_b.quality_kind, curve_b.cost_kind):
        raise CurveError(
            f"axis mismatch: ({curve_a.quality_kind}, {curve_a.cost_kind}) vs "
            f"({curve_b.quality_kind}, {curve_b.cost_kind})"
        )
    lo = max(curve_a.quality_range[0], curve_b.quality_range[0])
    hi = min(curve_a.quality_range[1], curve_b.quality_range[1])
    if lo >= hi:
        raise CurveError(f"curves have no quality overlap ({lo} >= {hi})")
    return lo, hi


def bd_delta(curve_a: Curve, curve_b: Curve) -> float:
    """Average relative cost difference of curve_b versus curve_a, in percent.

    Simpson integration of the log-cost gap over the quality overlap;
    100 * (10^mean_gap - 1). Positive: curve_b costs more at equal quality.
    """
    lo, hi = overlap_range(curve_a, curve_b)
    fa, fb = fit_akima(curve_a), fit_akima(curve_b)
    q = np.linspace(lo, hi, BD_SIMPSON_SAMPLES)
    gap = fb(q) - fa(q)
    h = (hi - lo) / (BD_SIMPSON_SAMPLES - 1)
    weights = np.ones(BD_SIMPSON_SAMPLES)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    integral = h / 3.0 * float(np.dot(weights, gap))
    mean_gap = integral / (hi - lo)
    return 100.0 * (10.0**mean_gap - 1.0)


def rcd(curve_a: Curve, curve_b: Curve, quality_grid: Seq[float]) -> list[tuple[float, float]]:
    """Relative cost difference, percent, at each grid quality.

    100 * (cost_b(q) - cost_a(q)) / cost_a(q) on the interpolated curves;
    the sign flips exactly where the curves cross.
    """
    lo, hi = overlap_range(curve_a, curve_b)
    grid = np.asarray(quality_grid, dtype=np.float64)
    if grid.size and (grid.min() < lo or grid.max() > hi):
        raise CurveError(f"grid point outside the quality overlap [{lo}, {hi}]")
    fa, fb = fit_akima(curve_a), fit_akima(curve_b)
    cost_a = 10.0 ** fa(grid)
    cost_b = 10.0 ** fb(grid)
    pct = 100.0 * (cost_b - cost_a) / cost_a
    return list(zip(grid.tolist(), pct.tolist()))


def _bisect(gap: Callable[[float], float], lo: float, hi: float, g_lo: float) -> float:
    for _ in range(200):
        if hi - lo < INTERSECTION_TOLERANCE:
            break
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if g_mid == 0.0:
            return mid
        if (g_lo < 0.0) != (g_mid < 0.0):
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)


def find_intersections(curve_a: Curve, curve_b: Curve) -> list[float]:
    """Quality values where the two interpolated curves cross.

    Sign changes of the log-cost gap are bracketed on a dense scan grid and
    refined by bisection; tangent contacts without a sign change do not
    count, so identical curves yield the empty list.
    """
    lo, hi = overlap_range(curve_a, curve_b)
    fa, fb = fit_akima(curve_a), fit_akima(curve_b)
    scan = np.linspace(lo, hi, INTERSECTION_SCAN_POINTS)
    g = fb(scan) - fa(scan)

    def gap(q: float) -> float:
        return float(fb(q) - fa(q))

    roots: list[float] = []
    nonzero = np.nonzero(g)[0]
    for i in range(INTERSECTION_SCAN_POINTS - 1):
        gi, gj = g[i], g[i + 1]
        if gi == 0.0:
            # Zero exactly on a scan point: a root only if the gap actually
            # changes sign through it (tangent touches are skipped).
            before = nonzero[nonzero < i]
            after = nonzero[nonzero > i]
            if before.size and after.size and (g[before[-1]] < 0.0) != (g[after[0]] < 0.0):
                if not roots or abs(roots[-1] - scan[i]) > INTERSECTION_TOLERANCE:
                    roots.append(float(scan[i]))
            continue
        if gj == 0.0 or (gi < 0.0) == (gj < 0.0):
            continue
        root = _bisect(gap, float(scan[i]), float(scan[i + 1]), float(gi))
        if not roots or abs(roots[-1] - root) > INTERSECTION_TOLERANCE:
            roots.append(root)
    return roots


def ceil_qp(intersection_quality: float, reference_curve: Curve) -> int:
    """Smallest tested QP whose measured quality lies strictly below the crossing.

    Higher QP means lower quality, so this is the first ladder rung inside
    the region where the cheaper-at-low-quality variant wins.
    """
    lo, hi = reference_curve.quality_range
    if not (lo <= intersection_quality <= hi):
        raise CurveError(
            f"intersection quality {intersection_quality} outside the curve range [{lo}, {hi}]"
        )
    below = [p.qp for p in reference_curve.points if p.quality < intersection_quality]
    if not below:
        raise CurveError(f"no tested QP below intersection quality {intersection_quality}")
    return min(below)


@dataclass(frozen=True)
class BdReport:
    """Full comparison of one curve pair on one cost axis."""

    cost_kind: str
    bd_percent: float
    overlap: tuple[float, float]
    rcd_samples: tuple[tuple[float, float], ...] = ()
    intersections: tuple[float, ...] = ()
    ceil_qp: int | None = None

    def __post_init__(self):
        lo, hi = self.overlap
        if lo >= hi:
            raise CurveError(f"overlap must be non-empty, got [{lo}, {hi}]")
        for q in self.intersections:
            if not (lo <= q <= hi):
                raise CurveError(f"intersection {q} outside the overlap [{lo}, {hi}]")


def compare(
    curve_a: Curve,
    curve_b: Curve,
    rcd_grid_size: int = 0,
    with_intersections: bool = True,
    ceil_reference: Curve | None = None,
) -> BdReport:
    """Assemble the BD percentage, optional RCD samples, intersections, and
    the next-QP value (anchored on ``ceil_reference``, typically curve_a)."""
    lo, hi = overlap_range(curve_a, curve_b)
    report_rcd: tuple[tuple[float, float], ...] = ()
    if rcd_grid_size:
        grid = np.linspace(lo, hi, rcd_grid_size)
        report_rcd = tuple(rcd(curve_a, curve_b, grid))
    roots: tuple[float, ...] = ()
    if with_intersections:
        roots = tuple(find_intersections(curve_a, curve_b))
    qp_value = None
    if roots and ceil_reference is not None:
        # When a curve pair crosses more than once, the ceiling QP is anchored
        # on the highest-quality crossing.
        qp_value = ceil_qp(roots[-1], ceil_reference)
    return BdReport(
        cost_kind=curve_a.cost_kind,
        bd_percent=bd_delta(curve_a, curve_b),
        overlap=(lo, hi),
        rcd_samples=report_rcd,
        intersections=roots,
        ceil_qp=qp_value,
    )


@dataclass(frozen=True)
class SequenceRow:
    """One per-sequence report row: rate-curve crossing plus BD columns.

    ``bdt_percent`` and ``bdee_percent`` map a platform label to the
    time/energy delta; ``bd_rate_percent`` maps a contender variant name to
    its rate delta against the reference variant.
    """

    sequence: str
    intersection_quality: float | None
    ceil_qp: int | None
    bdt_percent: dict[str, float] = field(default_factory=dict)
    bdee_percent: dict[str, float] = field(default_factory=dict)
    bd_rate_percent: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence,
            "intersection_quality": self.intersection_quality,
            "ceil_qp": self.ceil_qp,
            "bdt_percent": dict(self.bdt_percent),
            "bdee_percent": dict(self.bdee_percent),
            "bd_rate_percent": dict(self.bd_rate_percent),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SequenceRow":
        return cls(
            sequence=data["sequence"],
            intersection_quality=data["intersection_quality"],
            ceil_qp=data["ceil_qp"],
            bdt_percent=dict(data.get("bdt_percent", {})),
            bdee_percent=dict(data.get("bdee_percent", {})),
            bd_rate_percent=dict(data.get("bd_rate_percent", {})),
        )


def report_row(
    sequence: str,
    rate_pair: tuple[Curve, Curve],
    time_pairs: dict[str, tuple[Curve, Curve]] | None = None,
    energy_pairs: dict[str, tuple[Curve, Curve]] | None = None,
    extra_rate_pairs: dict[str, tuple[Curve, Curve]] | None = None,
    contender: str = "contender",
) -> SequenceRow:
    """Build one report row from reference/contender curve pairs.

    ``rate_pair`` drives the crossing quality and the ceiling QP; each entry
    of ``time_pairs``/``energy_pairs`` contributes one delta column per
    platform label; ``extra_rate_pairs`` adds rate deltas for further
    contender variants, keyed by their name.
    """
    ref_rate, contender_rate = rate_pair
    rate_report = compare(ref_rate, contender_rate, ceil_reference=ref_rate)
    crossing = rate_report.intersections[-1] if rate_report.intersections else None
    bd_rates = {contender: rate_report.bd_percent}
    if extra_rate_pairs:
        for name, (a, b) in extra_rate_pairs.items():
            bd_rates[name] = bd_delta(a, b)
    return SequenceRow(
        sequence=sequence,
        intersection_quality=crossing,
        ceil_qp=rate_report.ceil_qp,
        bdt_percent={label: bd_delta(a, b) for label, (a, b) in (time_pairs or {}).items()},
        bdee_percent={label: bd_delta(a, b) for label, (a, b) in (energy_pairs or {}).items()},
        bd_rate_percent=bd_rates,
    )


def read_curve_csv(
    path: str | os.PathLike, quality_kind: str = "quality", cost_kind: str = "cost",
    monotone_cost: bool = True,
) -> Curve:
    """Load operating points from a ``qp,quality,cost`` CSV file."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CurveError(f"cannot read curve file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["qp", "quality", "cost"]:
            raise CurveError(f"{path}: expected header 'qp,quality,cost', got {header}")
        points = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                points.append(OperatingPoint(int(row[0]), float(row[1]), float(row[2])))
            except (IndexError, ValueError) as exc:
                raise CurveError(f"{path}:{line_no}: bad curve row {row}: {exc}") from None
    return Curve.from_points(points, quality_kind, cost_kind, monotone_cost=monotone_cost)


def write_curve_csv(curve: Curve, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["qp", "quality", "cost"])
        for p in curve.points:
            writer.writerow([p.qp, repr(p.quality), repr(p.cost)])


def export_comparison_csv(
    curve_a: Curve, curve_b: Curve, path: str | os.PathLike, samples: int = 201
) -> None:
    """Write interpolated costs and the RCD over the overlap for plotting.

    Columns: quality, cost_a, cost_b, rcd_percent.
    """
    lo, hi = overlap_range(curve_a, curve_b)
    grid = np.linspace(lo, hi, samples)
    fa, fb = fit_akima(curve_a), fit_akima(curve_b)
    cost_a = 10.0 ** fa(grid)
    cost_b = 10.0 ** fb(grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quality", "cost_a", "cost_b", "rcd_percent"])
        for q, ca, cb in zip(grid, cost_a, cost_b):
            writer.writerow([f"{q:.6f}", f"{ca:.6f}", f"{cb:.6f}", f"{100.0 * (cb - ca) / ca:.6f}"])
