import sys

import numpy as np
import pytest

from vcmbench.errors import CommandFailed, InvariantViolation, OutputMissing
from vcmbench.featurecodec.entropy import encode_bytes
from vcmbench.pipeline.codec import CodecSpec, expand_template, run_codec


def test_codec_spec_validation():
    CodecSpec(kind="NULL")
    CodecSpec(kind="TRUNCATE", qp_list=(0, 1))
    with pytest.raises(InvariantViolation):
        CodecSpec(kind="EXTERNAL")  # missing templates
    with pytest.raises(InvariantViolation):
        CodecSpec(kind="NULL", qp_list=())
    with pytest.raises(InvariantViolation):
        CodecSpec(kind="WAVELET")


def test_expand_template_substitution():
    argv = expand_template(
        "enc --qp {qp} -i {input} -o {output}",
        {"qp": 32, "input": "/a/in.yuv", "output": "/a/out.bin"},
    )
    assert argv == ["enc", "--qp", "32", "-i", "/a/in.yuv", "-o", "/a/out.bin"]


def test_null_codec_copies_and_charges_raw_size(tmp_path):
    data = bytes(range(256)) * 4
    src = tmp_path / "in.yuv"
    src.write_bytes(data)
    out, bits = run_codec(CodecSpec(kind="NULL"), src, 22, tmp_path / "w")
    assert out.read_bytes() == data
    assert bits == 8 * len(data)


def test_truncate_qp0_is_lossless(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.integers(0, 256, 4096, dtype=np.uint8).tobytes()
    src = tmp_path / "in.yuv"
    src.write_bytes(data)
    out, bits = run_codec(CodecSpec(kind="TRUNCATE", qp_list=(0,)), src, 0, tmp_path / "w")
    assert out.read_bytes() == data
    assert bits == 8 * len(encode_bytes(data))


def test_truncate_monotone_bits_on_natural_statistics(tmp_path):
    # smooth gradient plus texture, like camera luma
    rng = np.random.default_rng(1)
    base = np.linspace(0, 255, 64 * 64).reshape(64, 64)
    noise = rng.normal(0, 12, (64, 64))
    img = np.clip(base + noise, 0, 255).astype(np.uint8)
    src = tmp_path / "in.yuv"
    src.write_bytes(img.tobytes())
    spec = CodecSpec(kind="TRUNCATE", qp_list=tuple(range(8)))
    sizes = []
    for qp in range(8):
        _, bits = run_codec(spec, src, qp, tmp_path / f"w{qp}")
        sizes.append(bits)
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert sizes[0] > sizes[-1]  # the extremes genuinely differ


def test_truncate_zeroes_low_bits(tmp_path):
    src = tmp_path / "in.yuv"
    src.write_bytes(bytes([0b10110111, 0b01111111]))
    out, _ = run_codec(CodecSpec(kind="TRUNCATE", qp_list=(3,)), src, 3, tmp_path / "w")
    assert out.read_bytes() == bytes([0b10110000, 0b01111000])


def test_external_codec_roundtrip(tmp_path):
    # a "codec" that copies its input both ways
    copier = f'{sys.executable} -c "import shutil,sys; shutil.copy(sys.argv[1], sys.argv[2])"'
    spec = CodecSpec(
        kind="EXTERNAL",
        encode_template=copier + " {input} {output}",
        decode_template=copier + " {input} {output}",
        qp_list=(22,),
    )
    data = b"\x01\x02\x03\x04" * 64
    src = tmp_path / "in.yuv"
    src.write_bytes(data)
    out, bits = run_codec(spec, src, 22, tmp_path / "w")
    assert out.read_bytes() == data
    assert bits == 8 * len(data)


def test_external_codec_nonzero_exit(tmp_path):
    spec = CodecSpec(
        kind="EXTERNAL",
        encode_template=f'{sys.executable} -c "import sys; sys.exit(3)"',
        decode_template="true",
        qp_list=(22,),
    )
    src = tmp_path / "in.yuv"
    src.write_bytes(b"x")
    with pytest.raises(CommandFailed):
        run_codec(spec, src, 22, tmp_path / "w")


def test_external_codec_missing_binary(tmp_path):
    spec = CodecSpec(
        kind="EXTERNAL",
        encode_template="definitely-not-a-command {input} {output}",
        decode_template="true",
        qp_list=(22,),
    )
    src = tmp_path / "in.yuv"
    src.write_bytes(b"x")
    with pytest.raises(CommandFailed) as err:
        run_codec(spec, src, 22, tmp_path / "w")
    assert "definitely-not-a-command" in str(err.value)


def test_external_codec_missing_output(tmp_path):
    spec = CodecSpec(
        kind="EXTERNAL",
        encode_template=f'{sys.executable} -c "pass"',
        decode_template="true",
        qp_list=(22,),
    )
    src = tmp_path / "in.yuv"
    src.write_bytes(b"x")
    with pytest.raises(OutputMissing):
        run_codec(spec, src, 22, tmp_path / "w")
