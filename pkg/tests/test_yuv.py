import numpy as np
import pytest

from vcmbench.errors import InputError, TruncatedFile
from vcmbench.pipeline.yuv import (
    RawImage,
    crop_pad,
    frame_size_bytes,
    pad_to_even,
    read_yuv420,
    resize,
    scale_image,
    write_yuv420,
)


def _image(rng, w, h):
    return RawImage(
        y=rng.integers(0, 256, (h, w)).astype(np.uint8),
        cb=rng.integers(0, 256, ((h + 1) // 2, (w + 1) // 2)).astype(np.uint8),
        cr=rng.integers(0, 256, ((h + 1) // 2, (w + 1) // 2)).astype(np.uint8),
    )


def test_file_roundtrip_single_frame(tmp_path):
    rng = np.random.default_rng(0)
    img = _image(rng, 12, 10)
    p = tmp_path / "a.yuv"
    write_yuv420(img, p)
    assert p.stat().st_size == frame_size_bytes(12, 10)
    (back,) = read_yuv420(p, 12, 10)
    assert np.array_equal(back.y, img.y)
    assert np.array_equal(back.cb, img.cb)
    assert np.array_equal(back.cr, img.cr)


def test_file_roundtrip_multiframe_and_odd_dims(tmp_path):
    rng = np.random.default_rng(1)
    frames = [_image(rng, 7, 5) for _ in range(3)]
    p = tmp_path / "seq.yuv"
    write_yuv420(frames, p)
    back = read_yuv420(p, 7, 5)
    assert len(back) == 3
    for a, b in zip(back, frames):
        assert np.array_equal(a.y, b.y)


def test_file_size_mismatch_rejected(tmp_path):
    p = tmp_path / "bad.yuv"
    p.write_bytes(bytes(frame_size_bytes(8, 8) - 1))
    with pytest.raises(TruncatedFile):
        read_yuv420(p, 8, 8)


def test_scale_100_is_identity():
    rng = np.random.default_rng(2)
    img = _image(rng, 16, 12)
    assert scale_image(img, 100) is img


def test_scale_50_halves_dims_and_keeps_constants():
    img = RawImage.flat(8, 8, y=77, cb=10, cr=200)
    out = scale_image(img, 50)
    assert (out.width, out.height) == (4, 4)
    assert np.all(out.y == 77)
    assert np.all(out.cb == 10)
    assert np.all(out.cr == 200)


def test_scale_dims_for_all_scales():
    img = RawImage.flat(192, 128)
    for percent, (w, h) in ((25, (48, 32)), (50, (96, 64)), (75, (144, 96)),
                            (100, (192, 128))):
        out = scale_image(img, percent)
        assert (out.width, out.height) == (w, h)
    with pytest.raises(InputError):
        scale_image(img, 60)


def test_downscale_then_upscale_constant_identity():
    img = RawImage.flat(16, 16, y=42)
    down = scale_image(img, 50)
    up = resize(down, 16, 16)
    assert np.array_equal(up.y, img.y)
    assert np.array_equal(up.cb, img.cb)


def test_resize_min_dims():
    img = RawImage.flat(5, 3)
    out = scale_image(img, 25)
    assert out.width >= 1 and out.height >= 1


def test_bilinear_average_on_even_downscale():
    y = np.array([[0, 255], [0, 255]], dtype=np.uint8)
    img = RawImage(y=y, cb=np.full((1, 1), 128, np.uint8), cr=np.full((1, 1), 128, np.uint8))
    out = resize(img, 1, 1)
    # mean of 0,255,0,255 = 127.5 -> rounds half-up to 128
    assert out.y[0, 0] == 128


def test_pad_even_noop():
    rng = np.random.default_rng(3)
    img = _image(rng, 8, 6)
    padded, record = pad_to_even(img)
    assert record == (0, 0)
    assert padded is img


def test_pad_replicates_last_column():
    rng = np.random.default_rng(4)
    img = _image(rng, 3, 4)
    padded, record = pad_to_even(img)
    assert record == (1, 0)
    assert (padded.width, padded.height) == (4, 4)
    assert np.array_equal(padded.y[:, 3], img.y[:, 2])


def test_pad_crop_roundtrip_all_parities():
    rng = np.random.default_rng(5)
    for w, h in ((3, 4), (4, 3), (5, 5), (6, 6)):
        img = _image(rng, w, h)
        padded, record = pad_to_even(img)
        assert padded.width % 2 == 0 and padded.height % 2 == 0
        back = crop_pad(padded, record)
        assert np.array_equal(back.y, img.y)
        assert np.array_equal(back.cb, img.cb)
        assert np.array_equal(back.cr, img.cr)
