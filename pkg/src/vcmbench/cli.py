"""Command-line interface.

Subcommands: eval-det, eval-track, bdrate, pareto, feature, run, report.
Every subcommand is a pure function of its input files and flags; the
--jobs flag changes wall-clock time, never output bytes. Exit codes:
0 success, 2 input/contract error, 3 external-command failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError, VcmError
from .featurecodec import (
    denormalize,
    dequantize_2bit,
    dequantize_8bit,
    entropy_decode,
    entropy_encode,
    normalize,
    pack_spatial_tiled,
    pack_temporal,
    quantize_2bit,
    quantize_8bit,
    reorder_channels,
    unpack_frames,
)
from .featurecodec.stream import read_stream, write_stream
from .metrics import mean_average_precision, mota
from .model import PackedFrameSet, QuantParams, RDCurve, RDPoint
from .pipeline.experiment import load_manifest, run_experiment
from .rdcurves import (
    apply_cutoff,
    bd_metrics,
    build_curve,
    pareto_front,
    read_curves_csv,
    write_curves_csv,
)
from .report import build_report, render_svg, write_report_files
from .tensorio import (
    load_detections,
    load_ground_truth,
    load_tracks,
    read_feature_tensor,
    write_feature_tensor,
)


def _load_config(path) -> dict[str, str]:
    """TOML-like key=value file; '#' starts a comment."""
    config = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        config[key.strip()] = value.strip()
    return config


def _resolve(args, config, name, cast=str, default=None):
    """Flag > config file > default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return cast(config[name])
    return default


def _thresholds(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _cmd_eval_det(args, config) -> int:
    dets = load_detections(args.detections)
    gts = load_ground_truth(args.ground_truth)
    thresholds = _thresholds(
        _resolve(args, config, "thresholds", str, "0.5")
    )
    interpolation = _resolve(args, config, "interpolation", str, "all_points")
    result = mean_average_precision(dets, gts, thresholds, interpolation)
    payload = {
        "mAP": result.map_value,
        "thresholds": list(thresholds),
        "per_class_ap": {str(c): v for c, v in result.per_class_ap.items()},
        "counts_at_last_threshold": {
            str(c): {"tp": t[0], "fp": t[1], "fn": t[2]}
            for c, t in result.counts.items()
        },
    }
    _print_json(payload)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write("class_id,ap\n")
            for c in sorted(result.per_class_ap):
                fh.write(f"{c},{result.per_class_ap[c]!r}\n")
            fh.write(f"mAP,{result.map_value!r}\n")
    return 0


def _cmd_eval_track(args, config) -> int:
    pred = load_tracks(args.predictions)
    gt = load_tracks(args.ground_truth)
    iou_threshold = float(_resolve(args, config, "iou", str, "0.5"))
    r = mota(pred, gt, iou_threshold)
    _print_json(
        {"MOTA": r.mota, "FN": r.fn, "FP": r.fp, "IDSW": r.idsw, "GT": r.gt}
    )
    return 0


def _cmd_bdrate(args, config) -> int:
    anchors = read_curves_csv(args.anchor)
    tests = read_curves_csv(args.test)
    rows = []
    if len(anchors) == 1 and len(tests) == 1:
        pairs = [(anchors[0], tests[0])]
    else:
        by_scale = {t.scale_percent: t for t in tests}
        pairs = [
            (a, by_scale[a.scale_percent])
            for a in anchors
            if a.scale_percent in by_scale
        ]
        if not pairs:
            raise InputError("no curves with matching scales between the two files")
    for anchor, test in pairs:
        bd = bd_metrics(anchor, test)
        rows.append(
            {
                "anchor": anchor.label,
                "test": test.label,
                "scale": anchor.scale_percent,
                "bd_rate_percent": bd.bd_rate_percent,
                "bd_quality": bd.bd_quality,
                "quality_overlap": list(bd.quality_overlap),
                "log_rate_overlap": list(bd.log_rate_overlap),
            }
        )
    _print_json(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("anchor,test,scale,bd_rate_percent,bd_quality\n")
            for r in rows:
                scale = "" if r["scale"] is None else r["scale"]
                fh.write(
                    f"{r['anchor']},{r['test']},{scale},"
                    f"{r['bd_rate_percent']!r},{r['bd_quality']!r}\n"
                )
    return 0


def _cmd_pareto(args, config) -> int:
    curves = []
    for path in args.curves:
        curves.extend(read_curves_csv(path))
    front = pareto_front(curves)
    min_quality = _resolve(args, config, "min-quality", float)
    if min_quality is not None:
        front = apply_cutoff(front, float(min_quality))
    out = args.out or "pareto.csv"
    write_curves_csv([front], out)
    sys.stdout.write(f"front: {len(front.points)} points -> {out}\n")
    if args.svg:
        Path(args.svg).write_text(
            render_svg(curves, front, title="Pareto front"), encoding="utf-8"
        )
    return 0


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError(f"--dims expects C,H,W: {text!r}")
    c, h, w = (int(p) for p in parts)
    return c, h, w


def _params_to_json(params: QuantParams) -> dict:
    return {
        "mean": [float(v) for v in params.mean],
        "std": [float(v) for v in params.std],
        "z_min": params.z_min,
        "z_max": params.z_max,
        "z_th": params.z_th,
        "bit_depth": params.bit_depth,
    }


def _params_from_json(doc: dict) -> QuantParams:
    return QuantParams(
        mean=np.array(doc["mean"], dtype=np.float32),
        std=np.array(doc["std"], dtype=np.float32),
        z_min=doc["z_min"],
        z_max=doc["z_max"],
        z_th=doc["z_th"],
        bit_depth=doc["bit_depth"],
    )


def _quantize_tensor(tensor, bits: int, z_th: float):
    z, params = normalize(tensor, z_th=z_th, bit_depth=bits)
    if bits == 8:
        samples = quantize_8bit(z, params)
    else:
        samples = quantize_2bit(z, params.z_th)
    return samples, params


def _reconstruct_tensor(samples, params: QuantParams):
    if params.bit_depth == 8:
        z = dequantize_8bit(samples, params)
    else:
        z = dequantize_2bit(samples, params)
    return denormalize(z, params)


def _cmd_feature(args, config) -> int:
    op = args.op
    bits = int(_resolve(args, config, "bits", int, 8))
    if bits not in (2, 8):
        raise InputError(f"--bits must be 2 or 8: {bits}")
    z_th = float(_resolve(args, config, "z-th", float, 1.5))
    layout = _resolve(args, config, "layout", str, "temporal")

    if op == "quant":
        tensor = read_feature_tensor(args.input)
        samples, params = _quantize_tensor(tensor, bits, z_th)
        Path(args.output).write_bytes(samples.tobytes(order="C"))
        params_path = args.params or (str(args.output) + ".params.json")
        Path(params_path).write_text(
            json.dumps(_params_to_json(params), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        sys.stdout.write(
            f"quantized {tensor.dims} to {bits}-bit samples; params -> {params_path}\n"
        )
        return 0

    if op == "dequant":
        if not args.params or not args.dims:
            raise InputError("dequant needs --params and --dims")
        params = _params_from_json(
            json.loads(Path(args.params).read_text(encoding="utf-8"))
        )
        c, h, w = _parse_dims(args.dims)
        raw = np.frombuffer(Path(args.input).read_bytes(), dtype=np.uint8)
        if raw.size != c * h * w:
            raise InputError(
                f"sample file holds {raw.size} bytes, dims need {c * h * w}"
            )
        tensor = _reconstruct_tensor(raw.reshape(c, h, w), params)
        write_feature_tensor(tensor, args.output)
        if args.ref:
            ref = read_feature_tensor(args.ref)
            err = float(np.abs(tensor.values.astype(np.float64) - ref.values).max())
            bound = ""
            if params.bit_depth == 8:
                step = (params.z_max - params.z_min) / 510.0
                worst = float((params.std.astype(np.float64) * step).max())
                bound = f" (per-channel bound sigma*(z_max-z_min)/510, max {worst!r})"
            sys.stdout.write(f"max reconstruction error: {err!r}{bound}\n")
        return 0

    if op == "pack":
        tensor = read_feature_tensor(args.input)
        samples, params = _quantize_tensor(tensor, bits, z_th)
        perm = reorder_channels(samples)[0] if args.reorder else None
        if layout == "spatial":
            fs = pack_spatial_tiled(samples, permutation=perm, quant=params)
        elif layout == "temporal":
            fs = pack_temporal(samples, permutation=perm, quant=params)
        else:
            raise InputError(
                f"--layout must be spatial or temporal for pack: {layout!r}"
            )
        with open(args.output, "wb") as fh:
            for frame in fs.frames:
                fh.write(np.asarray(frame).tobytes(order="C"))
        meta = {
            "layout": fs.layout,
            "dims": list(fs.original_dims),
            "frames": len(fs.frames),
            "frame_dims": [list(np.asarray(f).shape) for f in fs.frames],
            "permutation": list(perm) if perm is not None else None,
            "params": _params_to_json(params),
        }
        meta_path = args.meta or (str(args.output) + ".meta.json")
        Path(meta_path).write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        sys.stdout.write(
            f"packed {fs.layout}: {len(fs.frames)} frame(s), meta -> {meta_path}\n"
        )
        return 0

    if op == "unpack":
        if not args.meta:
            raise InputError("unpack needs --meta from the pack step")
        meta = json.loads(Path(args.meta).read_text(encoding="utf-8"))
        raw = Path(args.input).read_bytes()
        frames = []
        offset = 0
        for fh_, fw_ in meta["frame_dims"]:
            size = fh_ * fw_
            frames.append(
                np.frombuffer(raw, dtype=np.uint8, count=size, offset=offset).reshape(
                    fh_, fw_
                )
            )
            offset += size
        params = _params_from_json(meta["params"])
        fs = PackedFrameSet(
            frames=tuple(frames),
            layout=meta["layout"],
            original_dims=tuple(meta["dims"]),
            channel_permutation=tuple(meta["permutation"]) if meta["permutation"] else None,
            quant=params,
        )
        samples = unpack_frames(fs)
        tensor = _reconstruct_tensor(np.asarray(samples), params)
        write_feature_tensor(tensor, args.output)
        return 0

    if op == "encode":
        tensor = read_feature_tensor(args.input)
        samples, params = _quantize_tensor(tensor, bits, z_th)
        perm = reorder_channels(samples)[0] if args.reorder else None
        if layout == "spatial":
            fs = pack_spatial_tiled(samples, permutation=perm, quant=params)
        elif layout == "temporal":
            fs = pack_temporal(samples, permutation=perm, quant=params)
        else:
            raise InputError(
                f"--layout must be spatial or temporal for encode: {layout!r}"
            )
        stream = entropy_encode(fs)
        write_stream(stream, args.output)
        raw_bits = fs.sample_count * 8
        sys.stdout.write(
            f"coded {stream.payload_bits} payload bits "
            f"({stream.payload_bits / raw_bits:.4f} of packed size)\n"
        )
        return 0

    if op == "decode":
        stream = read_stream(args.input)
        fs = entropy_decode(stream)
        samples = unpack_frames(fs)
        if isinstance(samples, list):
            raise InputError("multiscale streams need per-level outputs; use the API")
        tensor = _reconstruct_tensor(np.asarray(samples), stream.quant)
        write_feature_tensor(tensor, args.output)
        sys.stdout.write("checksum OK\n")
        if args.ref:
            ref = read_feature_tensor(args.ref)
            err = float(np.abs(tensor.values.astype(np.float64) - ref.values).max())
            sys.stdout.write(f"max reconstruction error: {err!r}\n")
        return 0

    raise InputError(f"unknown feature op {op!r}")


def _cmd_run(args, config) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    out_dir = Path(
        args.output_dir or _resolve(args, config, "output-dir", str, "vcmbench-out")
    )
    jobs = int(_resolve(args, config, "jobs", int, 1))
    work_dir = out_dir / "work"
    try:
        result = run_experiment(manifest, work_dir=work_dir, jobs=jobs)
    except VcmError as e:
        partial = getattr(e, "partial_records", None)
        if partial:
            out_dir.mkdir(parents=True, exist_ok=True)
            rows = [
                {
                    "item": r.item_id, "qp": r.qp, "scale": r.scale,
                    "bits": r.bits, "rate": r.rate,
                }
                for r in partial
            ]
            (out_dir / "partial_results.json").write_text(
                json.dumps(rows, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
            sys.stderr.write(
                f"persisted {len(rows)} completed records to partial_results.json\n"
            )
        raise
    report = build_report(manifest_path, manifest, result)
    written = write_report_files(report, result, out_dir)
    for p in written:
        sys.stdout.write(f"wrote {p}\n")
    return 0


def _cmd_report(args, config) -> int:
    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    if doc.get("schema_version") != 1:
        raise InputError(f"unsupported report schema: {doc.get('schema_version')}")
    out_dir = Path(args.output_dir or "vcmbench-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = []
    for scale_str, rows in sorted(doc["rd_tables"].items(), key=lambda kv: -int(kv[0])):
        pts = [RDPoint(r["rate"], r["quality"]) for r in rows]
        curves.append(
            build_curve(
                pts, label=f"scale{scale_str}", scale_percent=int(scale_str),
                quality_unit=doc["config"]["quality_unit"],
            )
        )
    front_pts = [RDPoint(r["rate"], r["quality"]) for r in doc["pareto"]]
    front = RDCurve(
        label="pareto", points=tuple(front_pts),
        quality_unit=doc["config"]["quality_unit"],
    )
    write_curves_csv(curves, out_dir / "rd_curves.csv")
    write_curves_csv([front], out_dir / "pareto.csv")
    (out_dir / "plot.svg").write_text(
        render_svg(curves, front, title="rate vs task metric"), encoding="utf-8"
    )
    sys.stdout.write(f"rendered report tables into {out_dir}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcmbench",
        description="Benchmark harness for video coding for machines",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="key=value config file", default=None)
    parser.add_argument("--jobs", type=int, default=None, help="worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval-det", help="mAP of detections vs ground truth")
    p.add_argument("detections")
    p.add_argument("ground_truth")
    p.add_argument("--thresholds", default=None, help="comma-separated IoU thresholds")
    p.add_argument("--interpolation", choices=("all_points", "101pt"), default=None)
    p.add_argument("--csv", default=None, help="write per-class AP table here")
    p.set_defaults(func=_cmd_eval_det)

    p = sub.add_parser("eval-track", help="MOTA of tracks vs ground truth")
    p.add_argument("predictions")
    p.add_argument("ground_truth")
    p.add_argument("--iou", type=float, default=None)
    p.set_defaults(func=_cmd_eval_track)

    p = sub.add_parser("bdrate", help="Bjontegaard deltas between two curve CSVs")
    p.add_argument("anchor")
    p.add_argument("test")
    p.add_argument("--out", default=None, help="write the BD table CSV here")
    p.set_defaults(func=_cmd_bdrate)

    p = sub.add_parser("pareto", help="non-dominated front of RD curves")
    p.add_argument("curves", nargs="+")
    p.add_argument("--min-quality", type=float, default=None, dest="min_quality")
    p.add_argument("--out", default=None, help="front CSV path (default pareto.csv)")
    p.add_argument("--svg", default=None, help="also render an SVG plot")
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("feature", help="feature-map coding toolchain")
    p.add_argument(
        "op", choices=("quant", "dequant", "pack", "unpack", "encode", "decode")
    )
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--bits", type=int, default=None, choices=(2, 8))
    p.add_argument("--z-th", type=float, default=None, dest="z_th")
    p.add_argument("--layout", choices=("spatial", "temporal"), default=None)
    p.add_argument("--reorder", action="store_true")
    p.add_argument("--params", default=None, help="quant params JSON sidecar")
    p.add_argument("--meta", default=None, help="packing metadata JSON sidecar")
    p.add_argument("--dims", default=None, help="C,H,W of raw sample files")
    p.add_argument("--ref", default=None, help="reference tensor for error report")
    p.set_defaults(func=_cmd_feature)

    p = sub.add_parser("run", help="run an experiment manifest end to end")
    p.add_argument("manifest")
    p.add_argument("--output-dir", default=None, dest="output_dir")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="re-render tables/plots from a report JSON")
    p.add_argument("report")
    p.add_argument("--output-dir", default=None, dest="output_dir")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _load_config(args.config) if args.config else {}
    try:
        return args.func(args, config)
    except VcmError as e:
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
