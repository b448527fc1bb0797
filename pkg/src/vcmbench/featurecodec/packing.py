"""Packing of quantized feature maps into codable 8-bit frames.

Three layouts, each an exact bijection on the occupied samples:

  SPATIAL_TILED   64 channels interleave into 8x8 tiles: channel c of
                  sample (x, y) lands at frame row 8y + c//8, column
                  8x + c%8, producing one 8h x 8w frame.
  MULTISCALE      each pyramid level is tiled as above; the finest level
                  occupies the left block and the coarser levels stack
                  top-to-bottom in a half-width right column, zero-filled.
  TEMPORAL        one frame per channel, in channel order or a supplied
                  permutation.

Channel reordering follows a greedy chain that appends the unvisited
channel with the smallest mean squared difference to the last one,
which groups similar maps next to each other for inter coding.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimMismatch, InputError, WrongChannelCount
from ..model import (
    LAYOUT_MULTISCALE,
    LAYOUT_SPATIAL_TILED,
    LAYOUT_TEMPORAL,
    FeatureTensor,
    MultiScaleFeatureSet,
    PackedFrameSet,
    QuantParams,
)


def _as_samples(samples) -> np.ndarray:
    s = np.asarray(samples)
    if s.ndim != 3:
        raise InputError(f"samples must be 3-D (C,h,w), got shape {s.shape}")
    if s.dtype != np.uint8:
        if s.size and (s.min() < 0 or s.max() > 255):
            raise InputError("samples must fit in 8 bits")
        s = s.astype(np.uint8)
    return s


def _tile64(s: np.ndarray) -> np.ndarray:
    """64 x h x w samples -> one 8h x 8w frame."""
    _, h, w = s.shape
    return s.reshape(8, 8, h, w).transpose(2, 0, 3, 1).reshape(8 * h, 8 * w)


def _untile64(frame: np.ndarray, h: int, w: int) -> np.ndarray:
    return frame.reshape(h, 8, w, 8).transpose(1, 3, 0, 2).reshape(64, h, w)


def _validated_perm(permutation, c: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in permutation)
    if sorted(perm) != list(range(c)):
        raise InputError("permutation must permute 0..C-1")
    return perm


def pack_spatial_tiled(
    samples, permutation=None, quant: QuantParams | None = None
) -> PackedFrameSet:
    """Interleave 64 channels into 8x8 tiles forming one 8h x 8w frame."""
    s = _as_samples(samples)
    c, h, w = s.shape
    if c != 64:
        raise WrongChannelCount(f"spatial tiling requires 64 channels, got {c}")
    perm = None
    if permutation is not None:
        perm = _validated_perm(permutation, c)
        s = s[list(perm)]
    return PackedFrameSet(
        frames=(_tile64(s),), layout=LAYOUT_SPATIAL_TILED,
        original_dims=(c, h, w), channel_permutation=perm, quant=quant,
    )


def multiscale_frame_dims(h2: int, w2: int) -> tuple[int, int]:
    """Frame dims for the multiscale layout given the finest level's (h, w)."""
    return 8 * h2, 8 * w2 + 4 * w2


def pack_multiscale(ms: MultiScaleFeatureSet, samples_per_level, quant: QuantParams | None = None) -> PackedFrameSet:
    """Pack five tiled pyramid levels into one zero-filled frame.

    `samples_per_level` holds the quantized (64, h, w) sample arrays in
    P2..P6 order with dims matching `ms`. The finest block sits at the
    left (width 8*w2); the right column of width 4*w2 stacks the coarser
    blocks top-to-bottom.
    """
    arrays = [_as_samples(s) for s in samples_per_level]
    if len(arrays) != 5:
        raise DimMismatch(f"expected 5 levels, got {len(arrays)}")
    for arr, lvl in zip(arrays, ms.levels):
        if arr.shape != lvl.dims:
            raise DimMismatch(
                f"sample dims {arr.shape} do not match level dims {lvl.dims}"
            )
        if arr.shape[0] != 64:
            raise WrongChannelCount(
                f"tiled multiscale packing requires 64 channels, got {arr.shape[0]}"
            )
    c, h2, w2 = arrays[0].shape
    frame_h, frame_w = multiscale_frame_dims(h2, w2)
    frame = np.zeros((frame_h, frame_w), dtype=np.uint8)
    frame[: 8 * h2, : 8 * w2] = _tile64(arrays[0])
    row = 0
    for arr in arrays[1:]:
        _, hk, wk = arr.shape
        frame[row : row + 8 * hk, 8 * w2 : 8 * w2 + 8 * wk] = _tile64(arr)
        row += 8 * hk
    return PackedFrameSet(
        frames=(frame,), layout=LAYOUT_MULTISCALE,
        original_dims=(c, h2, w2), quant=quant,
    )


def pack_temporal(samples, permutation=None, quant: QuantParams | None = None) -> PackedFrameSet:
    """One frame per channel; frame order follows the permutation if given."""
    s = _as_samples(samples)
    c = s.shape[0]
    if permutation is not None:
        perm = _validated_perm(permutation, c)
        ordered = s[list(perm)]
    else:
        perm = None
        ordered = s
    return PackedFrameSet(
        frames=tuple(ordered[i] for i in range(c)), layout=LAYOUT_TEMPORAL,
        original_dims=s.shape, channel_permutation=perm, quant=quant,
    )


def unpack_frames(fs: PackedFrameSet) -> np.ndarray | list[np.ndarray]:
    """Invert any packing layout back to the original sample array(s).

    SPATIAL_TILED and TEMPORAL return one (C, h, w) array; MULTISCALE
    returns the five per-level arrays in P2..P6 order. A recorded
    channel permutation (applied to channels before packing) is inverted
    here, so unpack(pack(x)) is exactly x.
    """
    c, h, w = fs.original_dims
    unperm = None
    if fs.channel_permutation is not None:
        unperm = list(invert_permutation(fs.channel_permutation))
    if fs.layout == LAYOUT_SPATIAL_TILED:
        samples = _untile64(np.asarray(fs.frames[0]), h, w)
        return samples[unperm] if unperm else samples
    if fs.layout == LAYOUT_TEMPORAL:
        stacked = np.stack([np.asarray(f) for f in fs.frames])
        return stacked[unperm] if unperm else stacked
    # MULTISCALE: level dims follow by successive halving of (h, w)
    frame = np.asarray(fs.frames[0])
    out = [_untile64(frame[: 8 * h, : 8 * w], h, w)]
    row = 0
    hk, wk = h, w
    for _ in range(4):
        hk, wk = hk // 2, wk // 2
        block = frame[row : row + 8 * hk, 8 * w : 8 * w + 8 * wk]
        out.append(_untile64(block, hk, wk))
        row += 8 * hk
    if unperm:
        out = [lvl[unperm] for lvl in out]
    return out


def reorder_channels(data) -> tuple[tuple[int, ...], np.ndarray]:
    """Greedy similarity chain over channels.

    Starts at channel 0 and repeatedly appends the unvisited channel with
    the smallest mean squared difference to the last appended one (ties
    break toward the lower channel index). Returns the permutation and
    the reordered (C, h, w) array; apply invert_permutation to undo.
    """
    if isinstance(data, FeatureTensor):
        arr = data.values
    else:
        arr = np.asarray(data)
    if arr.ndim != 3:
        raise InputError(f"expected (C,h,w) data, got shape {arr.shape}")
    c = arr.shape[0]
    flat = arr.reshape(c, -1).astype(np.float64)
    remaining = list(range(1, c))
    order = [0]
    while remaining:
        last = flat[order[-1]]
        costs = [float(np.mean((flat[i] - last) ** 2)) for i in remaining]
        best = min(range(len(remaining)), key=lambda i: (costs[i], remaining[i]))
        order.append(remaining.pop(best))
    perm = tuple(order)
    return perm, arr[list(perm)]


def invert_permutation(perm) -> tuple[int, ...]:
    inverse = [0] * len(perm)
    for i, p in enumerate(perm):
        inverse[p] = i
    return tuple(inverse)


def apply_permutation(data: np.ndarray, perm) -> np.ndarray:
    return np.asarray(data)[list(perm)]
