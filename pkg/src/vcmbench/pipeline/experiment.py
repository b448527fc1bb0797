"""End-to-end anchor-generation runs.

For every (item, scale, qp) the pipeline scales the source image to the
target scale (border-padding to even dims instead of scaling at 100%),
encodes and decodes it, inverts the padding, upscales the reconstruction
back to the source resolution, obtains task predictions for it, and
evaluates the task metric against the untouched ground truth at source
resolution. Ground-truth files are read-only inputs: boxes are never
rescaled, because predictions are produced at source resolution.

Aggregation per (scale, qp): the rate is the mean bits-per-source-pixel
over items (bits per second for tracking); the metric is computed over
the pooled detection set (summed CLEAR-MOT counts for tracking). One RD
curve per scale comes out, plus the Pareto front over all scales.

Jobs are independent and may run in a bounded thread pool; records are
reduced in a fixed order, so reports are byte-identical at any job
count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InputError, StageError, VcmError
from ..metrics import mean_average_precision, mota
from ..model import RDCurve, RDPoint
from ..rdcurves import bitrate, bpp, build_curve, pareto_front
from ..tensorio import load_detections, load_ground_truth, load_tracks
from .codec import CodecSpec, expand_template, run_codec, run_command
from .yuv import crop_pad, pad_to_even, read_yuv420, resize, scale_image, write_yuv420

TASK_DETECTION = "DETECTION"
TASK_TRACKING = "TRACKING"


@dataclass(frozen=True)
class ExperimentItem:
    item_id: str
    path: Path
    width: int
    height: int
    ground_truth: Path
    frames: int = 1
    fps: float = 30.0
    predictions: dict[tuple[int, int], Path] | None = None
    prediction_command: str | None = None


@dataclass(frozen=True)
class ExperimentManifest:
    task: str
    codec: CodecSpec
    items: tuple[ExperimentItem, ...]
    scales: tuple[int, ...] = (100, 75, 50, 25)
    iou_thresholds: tuple[float, ...] = (0.5,)
    quality_unit: str = "fraction"
    # multi-task blend weights are configuration with no endorsed
    # defaults; they are echoed into reports for traceability
    weights: dict[str, float] | None = None

    def __post_init__(self):
        if self.task not in (TASK_DETECTION, TASK_TRACKING):
            raise InputError(f"unknown task {self.task!r}")
        if not self.items:
            raise InputError("manifest has no items")
        ids = [i.item_id for i in self.items]
        if len(set(ids)) != len(ids):
            raise InputError("item ids must be unique")
        if not self.scales:
            raise InputError("manifest has no scales")
        for item in self.items:
            for qp in self.codec.qp_list:
                for scale in self.scales:
                    if item.prediction_command is None and (
                        item.predictions is None
                        or (qp, scale) not in item.predictions
                    ):
                        raise InputError(
                            f"item {item.item_id!r}: no prediction source for "
                            f"qp={qp} scale={scale}"
                        )


@dataclass(frozen=True)
class ItemRecord:
    item_id: str
    qp: int
    scale: int
    bits: int
    rate: float
    predictions_path: Path


@dataclass
class ExperimentResult:
    curves: list[RDCurve]
    pareto: RDCurve
    rd_points: dict[tuple[int, int], tuple[float, float]]  # (scale, qp) -> (rate, quality)
    records: list[ItemRecord] = field(default_factory=list)


def load_manifest(path) -> ExperimentManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON: {e}") from e
    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        codec_doc = doc["codec"]
        codec = CodecSpec(
            kind=codec_doc["kind"],
            encode_template=codec_doc.get("encode_template"),
            decode_template=codec_doc.get("decode_template"),
            qp_list=tuple(codec_doc.get("qp_list", (22, 27, 32, 37, 42, 47))),
        )
        items = []
        for it in doc["items"]:
            preds = None
            if "predictions" in it:
                preds = {}
                for key, p in it["predictions"].items():
                    qp_s, scale_s = key.split(":")
                    preds[(int(qp_s), int(scale_s))] = resolve(p)
            items.append(
                ExperimentItem(
                    item_id=str(it["id"]),
                    path=resolve(it["path"]),
                    width=int(it["width"]),
                    height=int(it["height"]),
                    ground_truth=resolve(it["ground_truth"]),
                    frames=int(it.get("frames", 1)),
                    fps=float(it.get("fps", 30.0)),
                    predictions=preds,
                    prediction_command=it.get("prediction_command"),
                )
            )
        weights = None
        if "weights" in doc:
            weights = {k: float(v) for k, v in doc["weights"].items()}
        return ExperimentManifest(
            task=doc["task"],
            codec=codec,
            items=tuple(items),
            scales=tuple(int(s) for s in doc.get("scales", (100, 75, 50, 25))),
            iou_thresholds=tuple(
                float(t) for t in doc.get("iou_thresholds", (0.5,))
            ),
            quality_unit="mota" if doc["task"] == TASK_TRACKING else "fraction",
            weights=weights,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: bad manifest: {e!r}") from e


def _process_item(manifest, item, qp, scale, scratch: Path) -> ItemRecord:
    stage = "load"
    try:
        frames = read_yuv420(item.path, item.width, item.height)
        if len(frames) != item.frames:
            raise InputError(
                f"{item.path}: expected {item.frames} frames, found {len(frames)}"
            )
        stage = "scale"
        scaled = [scale_image(f, scale) for f in frames]
        pad_record = (0, 0)
        if scale == 100:
            stage = "pad"
            padded = []
            for f in scaled:
                pf, pad_record = pad_to_even(f)
                padded.append(pf)
            scaled = padded
        enc_w, enc_h = scaled[0].width, scaled[0].height
        coded_input = scratch / "input.yuv"
        write_yuv420(scaled, coded_input)

        stage = "codec"
        decoded_path, bits = run_codec(
            manifest.codec, coded_input, qp, scratch, width=enc_w, height=enc_h
        )
        decoded = read_yuv420(decoded_path, enc_w, enc_h)
        if scale == 100:
            stage = "crop"
            decoded = [crop_pad(f, pad_record) for f in decoded]
        stage = "upscale"
        recon = [resize(f, item.width, item.height) for f in decoded]
        recon_path = scratch / "recon.yuv"
        write_yuv420(recon, recon_path)

        stage = "predict"
        if item.prediction_command is not None:
            pred_path = scratch / "predictions.jsonl"
            argv = expand_template(
                item.prediction_command,
                {
                    "input": str(recon_path),
                    "output": str(pred_path),
                    "qp": qp,
                    "scale": scale,
                    "width": item.width,
                    "height": item.height,
                    "item": item.item_id,
                },
            )
            run_command(argv, "prediction")
            if not pred_path.exists():
                raise InputError(f"prediction command wrote no file at {pred_path}")
        else:
            pred_path = item.predictions[(qp, scale)]

        stage = "rate"
        if manifest.task == TASK_TRACKING:
            rate = bitrate(bits, item.frames, item.fps)
        else:
            rate = bpp(bits, item.width, item.height)
        return ItemRecord(
            item_id=item.item_id, qp=qp, scale=scale, bits=bits,
            rate=rate, predictions_path=pred_path,
        )
    except StageError:
        raise
    except (VcmError, OSError) as e:
        raise StageError(stage, item.item_id, qp, scale, e) from e


def _evaluate(manifest: ExperimentManifest, records: list[ItemRecord]) -> float:
    """Pooled task metric over one (scale, qp) cell's items."""
    if manifest.task == TASK_TRACKING:
        fn = fp = idsw = gt_total = 0
        for rec in records:
            item = next(i for i in manifest.items if i.item_id == rec.item_id)
            pred = load_tracks(rec.predictions_path)
            gt = load_tracks(item.ground_truth)
            r = mota(pred, gt, manifest.iou_thresholds[0])
            fn += r.fn
            fp += r.fp
            idsw += r.idsw
            gt_total += r.gt
        return 1.0 - (fn + fp + idsw) / gt_total
    dets = []
    gts = []
    for rec in records:
        item = next(i for i in manifest.items if i.item_id == rec.item_id)
        dets.extend(load_detections(rec.predictions_path))
        gts.extend(load_ground_truth(item.ground_truth))
    return mean_average_precision(dets, gts, manifest.iou_thresholds).map_value


def run_experiment(
    manifest: ExperimentManifest, work_dir, jobs: int = 1
) -> ExperimentResult:
    """Run every (item, qp, scale) job and aggregate RD curves per scale."""
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (i, item, qp, scale)
        for i, item in enumerate(manifest.items)
        for qp in manifest.codec.qp_list
        for scale in manifest.scales
    ]

    def run_one(entry):
        i, item, qp, scale = entry
        scratch = work_dir / f"item{i}_q{qp}_s{scale}"
        scratch.mkdir(parents=True, exist_ok=True)
        return _process_item(manifest, item, qp, scale, scratch)

    records: dict[tuple[int, int, int], ItemRecord] = {}
    try:
        if jobs <= 1:
            for entry in tasks:
                rec = run_one(entry)
                records[(entry[0], entry[2], entry[3])] = rec
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for entry, rec in zip(tasks, pool.map(run_one, tasks)):
                    records[(entry[0], entry[2], entry[3])] = rec
    except StageError as e:
        # completed work survives so callers can persist partial results
        e.partial_records = [records[k] for k in sorted(records)]
        raise

    rd_points: dict[tuple[int, int], tuple[float, float]] = {}
    curves = []
    for scale in manifest.scales:
        points = []
        for qp in manifest.codec.qp_list:
            cell = [
                records[(i, qp, scale)] for i in range(len(manifest.items))
            ]
            rate = sum(r.rate for r in cell) / len(cell)
            quality = _evaluate(manifest, cell)
            rd_points[(scale, qp)] = (rate, quality)
            points.append(RDPoint(rate, quality))
        curves.append(
            build_curve(
                points, label=f"scale{scale}", scale_percent=scale,
                quality_unit=manifest.quality_unit,
            )
        )
    front = pareto_front(curves, label="pareto")
    ordered = [records[k] for k in sorted(records)]
    return ExperimentResult(
        curves=curves, pareto=front, rd_points=rd_points, records=ordered
    )
