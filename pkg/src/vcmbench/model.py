"""Domain types shared by all harness modules.

All types are immutable after construction and validate their invariants
eagerly, so a constructed value is always safe to share across threads.
Array-valued fields are numpy arrays with the writeable flag cleared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in source-image pixel coordinates (continuous)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise InvariantViolation(f"box coordinates must be finite: {coords}")
        if min(coords) < 0:
            raise InvariantViolation(f"box coordinates must be >= 0: {coords}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvariantViolation(f"box must have positive extent: {coords}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: int
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not self.image_id:
            raise InvariantViolation("image_id must be non-empty")
        if self.class_id < 0:
            raise InvariantViolation(f"class_id must be >= 0: {self.class_id}")
        if not (0.0 <= self.score <= 1.0):
            raise InvariantViolation(f"score must be in [0,1]: {self.score}")


@dataclass(frozen=True)
class GroundTruthBox:
    image_id: str
    class_id: int
    box: BoundingBox

    def __post_init__(self):
        if not self.image_id:
            raise InvariantViolation("image_id must be non-empty")
        if self.class_id < 0:
            raise InvariantViolation(f"class_id must be >= 0: {self.class_id}")


@dataclass(frozen=True)
class TrackedBox:
    frame_index: int
    track_id: int
    class_id: int
    box: BoundingBox
    score: float

    def __post_init__(self):
        if self.frame_index < 0:
            raise InvariantViolation(f"frame_index must be >= 0: {self.frame_index}")
        if not (0.0 <= self.score <= 1.0):
            raise InvariantViolation(f"score must be in [0,1]: {self.score}")


# Feature-map element limit for file readers (guards allocation).
DEFAULT_ELEMENT_LIMIT = 1 << 31


@dataclass(frozen=True)
class FeatureTensor:
    """C x h x w float feature maps, row-major (channel, row, column).

    float32 is the canonical dtype (it is what the file format stores);
    dtype=float64 exists for reconstruction chains that must not add
    representation noise on top of the quantization error.
    """

    values: np.ndarray
    dtype: np.dtype = np.float32

    def __post_init__(self):
        if self.dtype not in (np.float32, np.float64):
            raise InvariantViolation(f"dtype must be float32 or float64: {self.dtype}")
        v = np.asarray(self.values, dtype=self.dtype)
        if v.ndim != 3:
            raise InvariantViolation(f"tensor must be 3-D (C,h,w), got shape {v.shape}")
        if min(v.shape) < 1:
            raise InvariantViolation(f"tensor dims must be >= 1, got {v.shape}")
        if not np.isfinite(v).all():
            raise InvariantViolation("tensor values must all be finite")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class QuantParams:
    """Per-channel normalization stats plus the global quantizer range.

    mean/std are per channel; z_min/z_max bound the normalized tensor,
    z_th is the 2-bit threshold. Values are stored at float32 precision
    because that is what the coded-stream container serializes.
    """

    mean: np.ndarray
    std: np.ndarray
    z_min: float
    z_max: float
    z_th: float = 1.5
    bit_depth: int = 8
    # optional (C, 2) per-channel [min, max]; the stream container only
    # serializes the global scalars, so this mode is in-memory only
    channel_range: np.ndarray | None = None

    def __post_init__(self):
        mean = _freeze(np.asarray(self.mean, dtype=np.float32))
        std = _freeze(np.asarray(self.std, dtype=np.float32))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "z_min", float(np.float32(self.z_min)))
        object.__setattr__(self, "z_max", float(np.float32(self.z_max)))
        object.__setattr__(self, "z_th", float(np.float32(self.z_th)))
        if mean.ndim != 1 or std.shape != mean.shape:
            raise InvariantViolation("mean/std must be 1-D and the same length")
        if (std < 0).any():
            raise InvariantViolation("std must be >= 0 for every channel")
        if self.z_max < self.z_min:
            raise InvariantViolation(f"z_max < z_min: {self.z_max} < {self.z_min}")
        if not self.z_th > 0:
            raise InvariantViolation(f"z_th must be > 0: {self.z_th}")
        if self.bit_depth not in (2, 8):
            raise InvariantViolation(f"bit_depth must be 2 or 8: {self.bit_depth}")
        if self.channel_range is not None:
            cr = _freeze(np.asarray(self.channel_range, dtype=np.float32))
            if cr.shape != (mean.shape[0], 2):
                raise InvariantViolation(
                    f"channel_range must have shape (C, 2), got {cr.shape}"
                )
            if (cr[:, 1] < cr[:, 0]).any():
                raise InvariantViolation("channel_range rows must satisfy max >= min")
            object.__setattr__(self, "channel_range", cr)

    @property
    def channels(self) -> int:
        return self.mean.shape[0]


LAYOUT_SPATIAL_TILED = "SPATIAL_TILED"
LAYOUT_MULTISCALE = "MULTISCALE"
LAYOUT_TEMPORAL = "TEMPORAL"
_LAYOUTS = (LAYOUT_SPATIAL_TILED, LAYOUT_MULTISCALE, LAYOUT_TEMPORAL)


@dataclass(frozen=True)
class PackedFrameSet:
    """8-bit sample frames produced by one of the packing layouts.

    original_dims are the (C,h,w) of the source sample array; for the
    MULTISCALE layout they are the dims of the finest level, from which
    the coarser levels follow by successive halving.
    """

    frames: tuple[np.ndarray, ...]
    layout: str
    original_dims: tuple[int, int, int]
    channel_permutation: tuple[int, ...] | None = None
    quant: QuantParams | None = None

    def __post_init__(self):
        if self.layout not in _LAYOUTS:
            raise InvariantViolation(f"unknown layout {self.layout!r}")
        frames = tuple(_freeze(np.asarray(f, dtype=np.uint8)) for f in self.frames)
        for f in frames:
            if f.ndim != 2:
                raise InvariantViolation("frames must be 2-D sample arrays")
        object.__setattr__(self, "frames", frames)
        c, h, w = self.original_dims
        if self.layout == LAYOUT_SPATIAL_TILED:
            if c != 64:
                raise InvariantViolation("SPATIAL_TILED requires C = 64")
            if len(frames) != 1 or frames[0].shape != (8 * h, 8 * w):
                raise InvariantViolation("SPATIAL_TILED requires one 8h x 8w frame")
        elif self.layout == LAYOUT_TEMPORAL:
            if len(frames) != c:
                raise InvariantViolation("TEMPORAL requires exactly C frames")
            for f in frames:
                if f.shape != (h, w):
                    raise InvariantViolation("TEMPORAL frames must be h x w")
        if self.channel_permutation is not None:
            perm = tuple(int(p) for p in self.channel_permutation)
            if sorted(perm) != list(range(c)):
                raise InvariantViolation("channel_permutation must permute 0..C-1")
            object.__setattr__(self, "channel_permutation", perm)
        if self.quant is not None and self.quant.bit_depth == 2:
            for f in frames:
                if f.size and f.max() > 3:
                    raise InvariantViolation("bit_depth=2 samples must be in {0,1,2,3}")

    @property
    def sample_count(self) -> int:
        return sum(f.size for f in self.frames)


VALID_SCALES = (25, 50, 75, 100)


@dataclass(frozen=True)
class RDPoint:
    """One operating point: rate in BPP (images) or bits/s (video)."""

    rate: float
    quality: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise InvariantViolation(f"rate must be finite and > 0: {self.rate}")
        if not math.isfinite(self.quality):
            raise InvariantViolation(f"quality must be finite: {self.quality}")


@dataclass(frozen=True)
class RDCurve:
    """Operating points sorted by strictly ascending rate."""

    label: str
    points: tuple[RDPoint, ...]
    scale_percent: int | None = None
    quality_unit: str = "fraction"

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise InvariantViolation("curve must have at least one point")
        for a, b in zip(pts, pts[1:]):
            if not b.rate > a.rate:
                raise InvariantViolation("curve rates must be strictly increasing")
        object.__setattr__(self, "points", pts)
        if self.scale_percent is not None and self.scale_percent not in VALID_SCALES:
            raise InvariantViolation(
                f"scale_percent must be one of {VALID_SCALES} or None"
            )

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points], dtype=np.float64)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points], dtype=np.float64)


@dataclass(frozen=True)
class WeightConfig:
    """Machine/human blend weight plus the Y/Cb/Cr channel weights."""

    w: float = 0.5
    w_y: float = 0.8
    w_cb: float = 0.1
    w_cr: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.w <= 1.0):
            raise InvariantViolation(f"w must be in [0,1]: {self.w}")
        if min(self.w_y, self.w_cb, self.w_cr) < 0:
            raise InvariantViolation("channel weights must be >= 0")
        s = self.w_y + self.w_cb + self.w_cr
        if abs(s - 1.0) > 1e-9:
            raise InvariantViolation(f"channel weights must sum to 1, got {s}")


@dataclass(frozen=True)
class ImagePair:
    """Reference and reconstructed YCbCr planes, with per-channel maxima.

    Chroma planes may be subsampled relative to luma; each channel's
    reference and reconstruction must agree in shape.
    """

    ref_y: np.ndarray
    ref_cb: np.ndarray
    ref_cr: np.ndarray
    rec_y: np.ndarray
    rec_cb: np.ndarray
    rec_cr: np.ndarray
    max_y: float = 255.0
    max_cb: float = 255.0
    max_cr: float = 255.0

    def __post_init__(self):
        for name in ("ref_y", "ref_cb", "ref_cr", "rec_y", "rec_cb", "rec_cr"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name))))
        for ch in ("y", "cb", "cr"):
            ref = getattr(self, f"ref_{ch}")
            rec = getattr(self, f"rec_{ch}")
            if ref.shape != rec.shape:
                raise InvariantViolation(
                    f"{ch} planes differ in shape: {ref.shape} vs {rec.shape}"
                )
            if getattr(self, f"max_{ch}") <= 0:
                raise InvariantViolation(f"max_{ch} must be > 0")


@dataclass(frozen=True)
class HybridRdoConfig:
    """Blend weight and the two Lagrange multipliers for hybrid RDO."""

    theta: float
    lambda_sse: float
    lambda_dmiou: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise InvariantViolation(f"theta must be in [0,1]: {self.theta}")
        if self.lambda_sse <= 0 or self.lambda_dmiou <= 0:
            raise InvariantViolation("lambda values must be > 0")


@dataclass(frozen=True)
class MultiScaleFeatureSet:
    """Feature pyramid levels p2..p6 with successively halved spatial dims."""

    levels: tuple[FeatureTensor, ...] = field(default=())

    def __post_init__(self):
        if len(self.levels) != 5:
            raise InvariantViolation("expected 5 levels (P2..P6)")
        c = self.levels[0].channels
        h, w = self.levels[0].height, self.levels[0].width
        for i, lvl in enumerate(self.levels[1:], start=1):
            h, w = h // 2, w // 2
            if h < 1 or w < 1:
                raise InvariantViolation("level dims fell below 1 after halving")
            if lvl.channels != c:
                raise InvariantViolation("all levels must share the channel count")
            if (lvl.height, lvl.width) != (h, w):
                raise InvariantViolation(
                    f"level P{i + 2} dims {lvl.dims} != expected ({c},{h},{w})"
                )

    @property
    def p2(self) -> FeatureTensor:
        return self.levels[0]
