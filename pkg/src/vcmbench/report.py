"""Machine-readable evaluation reports and SVG plots.

Reports are byte-deterministic for identical inputs: keys are sorted,
floats use repr, nothing depends on clock, locale, path layout, or
worker count. Every number in a report traces back to the recorded
sha256 digests of the input files. Plots are standalone SVG with the
numeric data embedded as structured comments so they diff cleanly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__
from .errors import VcmError
from .model import RDCurve
from .rdcurves import bd_metrics, pareto_front, write_curves_csv

SCHEMA_VERSION = 1

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _curve_rows(curve: RDCurve) -> list[dict]:
    return [{"rate": p.rate, "quality": p.quality} for p in curve.points]


def _bd_rows(curves: list[RDCurve], front: RDCurve) -> list[dict]:
    """Both anchor definitions, explicitly labeled per row.

    Curves pass through a single-curve Pareto filter first; BD failures
    (too few points, no overlap, flat quality) are recorded, not raised.
    """
    anchors = []
    for c in curves:
        if c.scale_percent == 100:
            anchors.append(("scale100", c))
    anchors.append(("pareto", front))
    rows = []
    for anchor_name, anchor in anchors:
        for test in curves:
            if test is anchor:
                continue
            row = {
                "anchor": anchor_name,
                "test": test.label,
                "bd_rate_percent": None,
                "bd_quality": None,
                "error": None,
            }
            try:
                a = pareto_front([anchor], label=anchor.label)
                t = pareto_front([test], label=test.label)
                bd = bd_metrics(a, t)
                row["bd_rate_percent"] = bd.bd_rate_percent
                row["bd_quality"] = bd.bd_quality
            except VcmError as e:
                row["error"] = f"{type(e).__name__}: {e}"
            rows.append(row)
    return rows


def build_report(manifest_path, manifest, result) -> dict:
    """Assemble the full evaluation report for one experiment run."""
    digests = {"manifest": sha256_file(manifest_path)}
    for item in manifest.items:
        digests[f"item:{item.item_id}:source"] = sha256_file(item.path)
        digests[f"item:{item.item_id}:ground_truth"] = sha256_file(item.ground_truth)
        if item.predictions:
            for (qp, scale), p in sorted(item.predictions.items()):
                digests[f"item:{item.item_id}:pred:q{qp}:s{scale}"] = sha256_file(p)

    rd_tables = {}
    for curve in result.curves:
        rows = []
        for qp in manifest.codec.qp_list:
            rate, quality = result.rd_points[(curve.scale_percent, qp)]
            rows.append({"qp": qp, "rate": rate, "quality": quality})
        rd_tables[str(curve.scale_percent)] = rows

    codec_info = {"kind": manifest.codec.kind}
    if manifest.codec.kind != "EXTERNAL":
        codec_info["note"] = "built-in test codec, not a standardized algorithm"

    weights = dict(manifest.weights) if manifest.weights else {
        "w": 0.5, "w_y": 0.8, "w_cb": 0.1, "w_cr": 0.1,
        "note": "harness defaults, not normative",
    }

    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "vcmbench",
        "tool_version": __version__,
        "inputs": digests,
        "config": {
            "task": manifest.task,
            "scales": list(manifest.scales),
            "qp_list": list(manifest.codec.qp_list),
            "iou_thresholds": list(manifest.iou_thresholds),
            "weights": weights,
            "quality_unit": manifest.quality_unit,
            "codec": codec_info,
            "aggregation": (
                "rate averaged over items at each (scale, qp); metric computed "
                "over the pooled record set; boxes evaluated at source resolution"
            ),
            "anchor_definitions": ["scale100", "pareto"],
        },
        "rd_tables": rd_tables,
        "pareto": _curve_rows(result.pareto),
        "bd_table": _bd_rows(result.curves, result.pareto),
    }


def report_to_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(curves, front: RDCurve | None = None, title: str = "") -> str:
    """Rate on x, metric on y; one polyline per curve plus the front."""
    width, height = 640, 480
    ml, mr, mt, mb = 60, 20, 30, 45
    plot_w, plot_h = width - ml - mr, height - mt - mb
    curves = list(curves)
    everything = curves + ([front] if front is not None else [])
    rates = [p.rate for c in everything for p in c.points]
    quals = [p.quality for c in everything for p in c.points]
    r_lo, r_hi = min(rates), max(rates)
    q_lo, q_hi = min(quals), max(quals)
    r_span = (r_hi - r_lo) or 1.0
    q_span = (q_hi - q_lo) or 1.0

    def sx(r):
        return ml + (r - r_lo) / r_span * plot_w

    def sy(q):
        return mt + (1.0 - (q - q_lo) / q_span) * plot_h

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{mt + plot_h}" x2="{ml + plot_w}" y2="{mt + plot_h}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + plot_h}" stroke="black"/>',
        f'<text x="{ml}" y="{height - 8}" font-size="11">{_fmt(r_lo)}</text>',
        f'<text x="{ml + plot_w}" y="{height - 8}" text-anchor="end" font-size="11">{_fmt(r_hi)}</text>',
        f'<text x="{ml - 6}" y="{mt + plot_h}" text-anchor="end" font-size="11">{_fmt(q_lo)}</text>',
        f'<text x="{ml - 6}" y="{mt + 10}" text-anchor="end" font-size="11">{_fmt(q_hi)}</text>',
        f'<text x="{ml + plot_w // 2}" y="{height - 8}" text-anchor="middle" font-size="12">rate</text>',
    ]
    for idx, c in enumerate(curves):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(p.rate):.2f},{sy(p.quality):.2f}" for p in c.points)
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for p in c.points:
            lines.append(
                f'<circle cx="{sx(p.rate):.2f}" cy="{sy(p.quality):.2f}" r="3" fill="{color}"/>'
            )
        lines.append(
            f'<text x="{ml + plot_w - 4}" y="{mt + 14 + 14 * idx}" text-anchor="end" '
            f'font-size="11" fill="{color}">{c.label}</text>'
        )
    if front is not None:
        pts = " ".join(f"{sx(p.rate):.2f},{sy(p.quality):.2f}" for p in front.points)
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="2.5" '
            'stroke-dasharray="6,3"/>'
        )
        lines.append(
            f'<text x="{ml + plot_w - 4}" y="{mt + 14 + 14 * len(curves)}" '
            f'text-anchor="end" font-size="11">{front.label}</text>'
        )
    # embed the plotted numbers so the file is diffable without a renderer
    for c in everything:
        scale = "" if c.scale_percent is None else str(c.scale_percent)
        rows = "\n".join(f"{p.rate!r},{p.quality!r}" for p in c.points)
        lines.append(f"<!-- data:curve label={c.label} scale={scale}\nrate,quality\n{rows}\n-->")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_report_files(report: dict, result, out_dir) -> list[Path]:
    """Write report.json plus CSV tables and the SVG plot; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    p = out_dir / "report.json"
    p.write_bytes(report_to_json_bytes(report))
    written.append(p)

    p = out_dir / "rd_curves.csv"
    write_curves_csv(result.curves, p)
    written.append(p)

    p = out_dir / "pareto.csv"
    write_curves_csv([result.pareto], p)
    written.append(p)

    p = out_dir / "bd_table.csv"
    with open(p, "w", encoding="utf-8", newline="") as fh:
        fh.write("anchor,test,bd_rate_percent,bd_quality,error\n")
        for row in report["bd_table"]:
            bd_r = "" if row["bd_rate_percent"] is None else repr(row["bd_rate_percent"])
            bd_q = "" if row["bd_quality"] is None else repr(row["bd_quality"])
            err = (row["error"] or "").replace(",", ";").replace("\n", " ")
            fh.write(f"{row['anchor']},{row['test']},{bd_r},{bd_q},{err}\n")
    written.append(p)

    p = out_dir / "plot.svg"
    p.write_text(
        render_svg(result.curves, result.pareto, title="rate vs task metric"),
        encoding="utf-8",
    )
    written.append(p)
    return written
