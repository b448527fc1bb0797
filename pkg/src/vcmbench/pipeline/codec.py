"""Codec invocation behind a uniform file-based interface.

EXTERNAL codecs run user-supplied encode/decode command templates with
{input}, {output}, {qp}, {width}, {height} placeholders, expanded
per-token into an argv (no shell). Two built-in test codecs keep the
harness hermetic:

  NULL       copies the input; rate is the raw file size. Useful for
             determinism fixtures and perfect-task endpoints.
  TRUNCATE   zeroes the low (qp mod 8) bits of every sample and charges
             the arithmetic-coded size of the result. It models no real
             codec -- it exists so RD curves with genuine rate/quality
             trade-offs are producible without external binaries, and is
             labeled a test codec in every report.
"""

from __future__ import annotations

import shlex
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    CommandFailed,
    DimChanged,
    InputError,
    InvariantViolation,
    OutputMissing,
)
from ..featurecodec.entropy import encode_bytes

KIND_EXTERNAL = "EXTERNAL"
KIND_NULL = "NULL"
KIND_TRUNCATE = "TRUNCATE"
_KINDS = (KIND_EXTERNAL, KIND_NULL, KIND_TRUNCATE)


@dataclass(frozen=True)
class CodecSpec:
    kind: str
    encode_template: str | None = None
    decode_template: str | None = None
    qp_list: tuple[int, ...] = (22, 27, 32, 37, 42, 47)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvariantViolation(f"unknown codec kind {self.kind!r}")
        if self.kind == KIND_EXTERNAL and not (
            self.encode_template and self.decode_template
        ):
            raise InvariantViolation("EXTERNAL codec needs encode and decode templates")
        if not self.qp_list:
            raise InvariantViolation("qp list must be non-empty")
        object.__setattr__(self, "qp_list", tuple(int(q) for q in self.qp_list))


def expand_template(template: str, substitutions: dict[str, str]) -> list[str]:
    """Split a template into argv tokens and substitute placeholders."""
    argv = []
    for token in shlex.split(template):
        for key, value in substitutions.items():
            token = token.replace("{" + key + "}", str(value))
        argv.append(token)
    if not argv:
        raise InputError(f"empty command template: {template!r}")
    return argv


def run_command(argv: list[str], what: str) -> None:
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except FileNotFoundError as e:
        raise CommandFailed(f"{what}: command not found: {argv}", argv=argv) from e
    if proc.returncode != 0:
        raise CommandFailed(
            f"{what}: exit {proc.returncode}: {argv}\n{proc.stderr.strip()}",
            argv=argv,
            stderr=proc.stderr,
        )


def run_codec(
    spec: CodecSpec,
    input_path,
    qp: int,
    work_dir,
    width: int | None = None,
    height: int | None = None,
) -> tuple[Path, int]:
    """Encode and decode one raw file; returns (decoded path, bitstream bits)."""
    input_path = Path(input_path)
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    decoded = work_dir / f"decoded_q{qp}{input_path.suffix}"

    if spec.kind == KIND_NULL:
        shutil.copyfile(input_path, decoded)
        bits = 8 * input_path.stat().st_size
        return decoded, bits

    if spec.kind == KIND_TRUNCATE:
        raw = input_path.read_bytes()
        drop = qp % 8
        if drop:
            mask = 0xFF & ~((1 << drop) - 1)
            truncated = (np.frombuffer(raw, dtype=np.uint8) & mask).tobytes()
        else:
            truncated = raw
        decoded.write_bytes(truncated)
        bits = 8 * len(encode_bytes(truncated))
        return decoded, bits

    bitstream = work_dir / f"bitstream_q{qp}.bin"
    subs = {
        "input": str(input_path),
        "output": str(bitstream),
        "qp": qp,
        "width": width if width is not None else "",
        "height": height if height is not None else "",
    }
    run_command(expand_template(spec.encode_template, subs), "encode")
    if not bitstream.exists():
        raise OutputMissing(f"encoder produced no bitstream at {bitstream}")
    bits = 8 * bitstream.stat().st_size
    subs = dict(subs, input=str(bitstream), output=str(decoded))
    run_command(expand_template(spec.decode_template, subs), "decode")
    if not decoded.exists():
        raise OutputMissing(f"decoder produced no output at {decoded}")
    if decoded.stat().st_size != input_path.stat().st_size:
        raise DimChanged(
            f"decoded size {decoded.stat().st_size} differs from input "
            f"{input_path.stat().st_size}; raw dims must be preserved"
        )
    return decoded, bits
