"""Coded-feature-stream container ("VCMS").

Little-endian layout:

    magic "VCMS" | version u32 | layout u8 | bit_depth u8 | C,h,w u32
    | mean f32*C | std f32*C | z_min,z_max,z_th f32
    | perm_flag u8 [| permutation u16*C]
    | payload_bits u64 | crc32 u32 | payload bytes

The payload is the arithmetic-coded concatenation of the frame samples
in frame order, row-major. crc32 covers the decoded sample bytes, so a
corrupt or truncated payload is detected at decode time. payload_bits
is the figure rate accounting uses.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BadMagic, BadParams, CorruptStream, DimOverflow, TruncatedFile
from ..model import (
    DEFAULT_ELEMENT_LIMIT,
    LAYOUT_MULTISCALE,
    LAYOUT_SPATIAL_TILED,
    LAYOUT_TEMPORAL,
    PackedFrameSet,
    QuantParams,
)
from .entropy import decode_bytes, encode_bytes
from .packing import multiscale_frame_dims

STREAM_MAGIC = b"VCMS"
STREAM_VERSION = 1

_LAYOUT_TAGS = {LAYOUT_SPATIAL_TILED: 0, LAYOUT_MULTISCALE: 1, LAYOUT_TEMPORAL: 2}
_TAG_LAYOUTS = {v: k for k, v in _LAYOUT_TAGS.items()}


@dataclass(frozen=True)
class CodedFeatureStream:
    layout: str
    bit_depth: int
    dims: tuple[int, int, int]
    quant: QuantParams
    channel_permutation: tuple[int, ...] | None
    payload_bits: int
    crc32: int
    payload: bytes

    def to_bytes(self) -> bytes:
        c, h, w = self.dims
        q = self.quant
        parts = [
            STREAM_MAGIC,
            struct.pack("<I", STREAM_VERSION),
            struct.pack("<BB", _LAYOUT_TAGS[self.layout], self.bit_depth),
            struct.pack("<3I", c, h, w),
            np.asarray(q.mean, dtype="<f4").tobytes(),
            np.asarray(q.std, dtype="<f4").tobytes(),
            struct.pack("<3f", q.z_min, q.z_max, q.z_th),
        ]
        if self.channel_permutation is not None:
            parts.append(struct.pack("<B", 1))
            parts.append(struct.pack(f"<{c}H", *self.channel_permutation))
        else:
            parts.append(struct.pack("<B", 0))
        parts.append(struct.pack("<QI", self.payload_bits, self.crc32))
        parts.append(self.payload)
        return b"".join(parts)


def _frame_shapes(layout: str, dims: tuple[int, int, int]) -> list[tuple[int, int]]:
    c, h, w = dims
    if layout == LAYOUT_SPATIAL_TILED:
        return [(8 * h, 8 * w)]
    if layout == LAYOUT_MULTISCALE:
        return [multiscale_frame_dims(h, w)]
    return [(h, w)] * c


def entropy_encode(fs: PackedFrameSet) -> CodedFeatureStream:
    """Arithmetic-code a frame set into a self-describing stream."""
    if fs.quant is None:
        raise BadParams("frame set carries no quant params; the stream needs them")
    if fs.quant.channel_range is not None:
        raise BadParams(
            "per-channel ranges are not serializable; the container stores a "
            "single global z_min/z_max"
        )
    if fs.quant.channels != fs.original_dims[0]:
        raise BadParams(
            f"quant params cover {fs.quant.channels} channels, "
            f"frame set has {fs.original_dims[0]}"
        )
    raw = b"".join(np.asarray(f, dtype=np.uint8).tobytes(order="C") for f in fs.frames)
    payload = encode_bytes(raw)
    return CodedFeatureStream(
        layout=fs.layout,
        bit_depth=fs.quant.bit_depth,
        dims=fs.original_dims,
        quant=fs.quant,
        channel_permutation=fs.channel_permutation,
        payload_bits=8 * len(payload),
        crc32=zlib.crc32(raw),
        payload=payload,
    )


def entropy_decode(stream: CodedFeatureStream) -> PackedFrameSet:
    """Decode a stream back to the exact frame set it was built from."""
    # cheap consistency checks before paying for arithmetic decoding
    if stream.payload_bits != 8 * len(stream.payload):
        raise CorruptStream(
            f"payload holds {8 * len(stream.payload)} bits, "
            f"header claims {stream.payload_bits}"
        )
    if stream.layout == LAYOUT_SPATIAL_TILED and stream.dims[0] != 64:
        raise CorruptStream(f"spatial layout requires 64 channels, got {stream.dims[0]}")
    shapes = _frame_shapes(stream.layout, stream.dims)
    n = sum(fh * fw for fh, fw in shapes)
    raw = decode_bytes(stream.payload, n)
    if zlib.crc32(raw) != stream.crc32:
        raise CorruptStream("decoded samples fail the checksum")
    frames = []
    offset = 0
    for fh, fw in shapes:
        size = fh * fw
        frames.append(
            np.frombuffer(raw, dtype=np.uint8, count=size, offset=offset).reshape(fh, fw)
        )
        offset += size
    return PackedFrameSet(
        frames=tuple(frames),
        layout=stream.layout,
        original_dims=stream.dims,
        channel_permutation=stream.channel_permutation,
        quant=stream.quant,
    )


def read_stream(path, element_limit: int = DEFAULT_ELEMENT_LIMIT) -> CodedFeatureStream:
    raw = Path(path).read_bytes()
    return stream_from_bytes(raw, origin=str(path), element_limit=element_limit)


def write_stream(stream: CodedFeatureStream, path) -> None:
    Path(path).write_bytes(stream.to_bytes())


def stream_from_bytes(
    raw: bytes, origin: str = "<bytes>", element_limit: int = DEFAULT_ELEMENT_LIMIT
) -> CodedFeatureStream:
    if len(raw) < 4 or raw[:4] != STREAM_MAGIC:
        raise BadMagic(f"{origin}: not a coded-feature stream (bad magic)")
    off = 4

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if len(raw) < off + size:
            raise TruncatedFile(f"{origin}: truncated at offset {off}")
        vals = struct.unpack_from(fmt, raw, off)
        off += size
        return vals

    (version,) = take("<I")
    if version != STREAM_VERSION:
        raise BadMagic(f"{origin}: unsupported version {version}")
    tag, bit_depth = take("<BB")
    if tag not in _TAG_LAYOUTS:
        raise BadMagic(f"{origin}: unknown layout tag {tag}")
    c, h, w = take("<3I")
    if min(c, h, w) < 1:
        raise TruncatedFile(f"{origin}: invalid dims ({c},{h},{w})")
    if c * h * w > element_limit:
        raise DimOverflow(
            f"{origin}: {c * h * w} elements exceeds limit {element_limit}"
        )
    mean = np.array(take(f"<{c}f"), dtype=np.float32)
    std = np.array(take(f"<{c}f"), dtype=np.float32)
    z_min, z_max, z_th = take("<3f")
    (perm_flag,) = take("<B")
    perm = tuple(take(f"<{c}H")) if perm_flag else None
    payload_bits, crc = take("<QI")
    payload = raw[off:]
    quant = QuantParams(
        mean=mean, std=std, z_min=z_min, z_max=z_max, z_th=z_th, bit_depth=bit_depth
    )
    return CodedFeatureStream(
        layout=_TAG_LAYOUTS[tag],
        bit_depth=bit_depth,
        dims=(c, h, w),
        quant=quant,
        channel_permutation=perm,
        payload_bits=payload_bits,
        crc32=crc,
        payload=payload,
    )
