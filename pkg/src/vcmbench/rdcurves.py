"""Rate accounting, RD-curve construction, Pareto anchors, and BD metrics.

Rates are bits per source pixel for image tasks and bits per second for
video tasks; BPP always divides by the source image's pixel count, never
the scaled or padded encode resolution.

BD metrics follow the standard Bjontegaard approach: quality and
log10(rate) are interpolated with a piecewise-cubic-hermite (PCHIP)
fit and the gap between the two curves is averaged over the overlapping
interval.  BD-rate integrates log-rate over the shared quality range;
BD-quality integrates quality over the shared log-rate range.  Curves
with fewer than four points fall back to piecewise-linear interpolation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    DegenerateCurve,
    EmptyAfterCutoff,
    EmptyCurve,
    InputError,
    NoOverlap,
    UnitMismatch,
    ZeroFrames,
    ZeroPixels,
)
from .model import RDCurve, RDPoint


@dataclass(frozen=True)
class BdResult:
    bd_rate_percent: float
    bd_quality: float
    quality_overlap: tuple[float, float]
    log_rate_overlap: tuple[float, float]


def bpp(bitstream_bits: int, source_width: int, source_height: int) -> float:
    """Bits per pixel of the SOURCE image (scaling never changes the divisor)."""
    if bitstream_bits <= 0:
        raise InputError(f"bitstream_bits must be > 0: {bitstream_bits}")
    pixels = source_width * source_height
    if pixels <= 0:
        raise ZeroPixels(f"source has no pixels: {source_width}x{source_height}")
    return bitstream_bits / pixels


def bitrate(total_bits: int, frame_count: int, fps: float) -> float:
    """Average bits per second of a coded sequence."""
    if frame_count <= 0:
        raise ZeroFrames(f"frame_count must be > 0: {frame_count}")
    if fps <= 0:
        raise InputError(f"fps must be > 0: {fps}")
    return total_bits * fps / frame_count


def build_curve(
    points, label: str, scale_percent: int | None = None, quality_unit: str = "fraction"
) -> RDCurve:
    """Sort points by rate; duplicate rates collapse keeping max quality."""
    pts = list(points)
    if not pts:
        raise EmptyCurve(f"curve {label!r} has no points")
    by_rate: dict[float, float] = {}
    for p in pts:
        if p.rate in by_rate:
            by_rate[p.rate] = max(by_rate[p.rate], p.quality)
        else:
            by_rate[p.rate] = p.quality
    merged = [RDPoint(r, q) for r, q in sorted(by_rate.items())]
    return RDCurve(
        label=label, points=tuple(merged), scale_percent=scale_percent,
        quality_unit=quality_unit,
    )


def pareto_front(curves, label: str = "pareto") -> RDCurve:
    """Non-dominated envelope of all points pooled from the input curves.

    A point is dominated if another point has rate <= and quality >= with
    at least one inequality strict. Points sharing a rate collapse to the
    best quality first, after which a single ascending-rate scan keeps
    exactly the points whose quality exceeds everything cheaper.
    """
    curves = list(curves)
    if not curves:
        raise EmptyCurve("no curves given")
    units = {c.quality_unit for c in curves}
    if len(units) > 1:
        raise UnitMismatch(f"curves mix quality units: {sorted(units)}")
    by_rate: dict[float, float] = {}
    for c in curves:
        for p in c.points:
            if p.rate in by_rate:
                by_rate[p.rate] = max(by_rate[p.rate], p.quality)
            else:
                by_rate[p.rate] = p.quality
    survivors = []
    best = -np.inf
    for rate in sorted(by_rate):
        quality = by_rate[rate]
        if quality > best:
            survivors.append(RDPoint(rate, quality))
            best = quality
    return RDCurve(
        label=label, points=tuple(survivors), scale_percent=None,
        quality_unit=curves[0].quality_unit,
    )


def apply_cutoff(curve: RDCurve, min_quality: float) -> RDCurve:
    """Drop points whose quality is below the cutoff threshold."""
    kept = tuple(p for p in curve.points if p.quality >= min_quality)
    if not kept:
        raise EmptyAfterCutoff(
            f"no point of {curve.label!r} reaches quality {min_quality}"
        )
    return RDCurve(
        label=curve.label, points=kept, scale_percent=curve.scale_percent,
        quality_unit=curve.quality_unit,
    )


def _check_curve_for_bd(curve: RDCurve) -> tuple[np.ndarray, np.ndarray]:
    if len(curve.points) < 2:
        raise DegenerateCurve(
            f"curve {curve.label!r} needs >= 2 points for BD metrics"
        )
    log_rate = np.log10(curve.rates)
    quality = curve.qualities
    if not np.all(np.diff(quality) > 0):
        raise DegenerateCurve(
            f"curve {curve.label!r} has non-monotone quality; "
            "pass it through build_curve + pareto_front first"
        )
    return log_rate, quality


def _fit(x: np.ndarray, y: np.ndarray):
    """PCHIP for >= 4 support points, piecewise-linear below that."""
    if len(x) >= 4:
        return PchipInterpolator(x, y)

    def linear(t):
        return np.interp(t, x, y)

    return linear


def _mean_gap(f_anchor, f_test, lo: float, hi: float, n: int = 257) -> float:
    xs = np.linspace(lo, hi, n)
    gap = np.asarray(f_test(xs)) - np.asarray(f_anchor(xs))
    return float(np.trapezoid(gap, xs) / (hi - lo))


def bd_metrics(anchor: RDCurve, test: RDCurve) -> BdResult:
    """Bjontegaard deltas of test vs anchor over the overlap interval.

    Negative BD-rate means the test curve needs fewer bits for equal
    quality. Raises NoOverlap when the curves share no quality range or
    no log-rate range, and DegenerateCurve for quality inversions.
    """
    if anchor.quality_unit != test.quality_unit:
        raise UnitMismatch(
            f"quality units differ: {anchor.quality_unit!r} vs {test.quality_unit!r}"
        )
    lr_a, q_a = _check_curve_for_bd(anchor)
    lr_t, q_t = _check_curve_for_bd(test)

    q_lo, q_hi = max(q_a[0], q_t[0]), min(q_a[-1], q_t[-1])
    if not q_hi > q_lo:
        raise NoOverlap(
            f"quality ranges do not overlap: [{q_a[0]}, {q_a[-1]}] vs [{q_t[0]}, {q_t[-1]}]"
        )
    r_lo, r_hi = max(lr_a[0], lr_t[0]), min(lr_a[-1], lr_t[-1])
    if not r_hi > r_lo:
        raise NoOverlap("log-rate ranges do not overlap")

    # rate as a function of quality -> BD-rate
    mean_dlr = _mean_gap(_fit(q_a, lr_a), _fit(q_t, lr_t), q_lo, q_hi)
    bd_rate = (10.0 ** mean_dlr - 1.0) * 100.0
    # quality as a function of log-rate -> BD-quality
    bd_quality = _mean_gap(_fit(lr_a, q_a), _fit(lr_t, q_t), r_lo, r_hi)
    return BdResult(
        bd_rate_percent=bd_rate,
        bd_quality=bd_quality,
        quality_overlap=(q_lo, q_hi),
        log_rate_overlap=(r_lo, r_hi),
    )


# --- CSV interchange: columns rate, quality, label, scale ---

CSV_FIELDS = ("rate", "quality", "label", "scale")


def write_curves_csv(curves, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for c in curves:
            scale = "" if c.scale_percent is None else str(c.scale_percent)
            for p in c.points:
                writer.writerow([repr(p.rate), repr(p.quality), c.label, scale])


def read_curves_csv(path, quality_unit: str = "fraction") -> list[RDCurve]:
    """Read curves grouped by (label, scale), in first-appearance order."""
    groups: dict[tuple[str, int | None], list[RDPoint]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(CSV_FIELDS) <= set(reader.fieldnames):
            raise InputError(
                f"{path}: expected CSV columns {','.join(CSV_FIELDS)}"
            )
        for row in reader:
            try:
                rate = float(row["rate"])
                quality = float(row["quality"])
            except (TypeError, ValueError) as e:
                raise InputError(f"{path}: bad numeric value in row {row}") from e
            scale = int(row["scale"]) if row["scale"] else None
            key = (row["label"], scale)
            groups.setdefault(key, []).append(RDPoint(rate, quality))
    if not groups:
        raise EmptyCurve(f"{path}: no curve rows")
    return [
        build_curve(pts, label=label, scale_percent=scale, quality_unit=quality_unit)
        for (label, scale), pts in groups.items()
    ]
