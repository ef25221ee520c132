import numpy as np
import pytest

from vidseg.pnm import write_pgm, write_ppm
from vidseg.video import (
    DataError,
    SuperpixelMap,
    VideoVolume,
    compute_superpixel_stats,
    load_superpixels,
    load_video,
    warp_mask,
)


def _write_frames(path, count=3, size=(8, 8), fmt="ppm"):
    path.mkdir(exist_ok=True)
    for t in range(count):
        img = np.full((size[1], size[0], 3), 40, dtype=np.uint8)
        if fmt == "ppm":
            write_ppm(path / f"frame_{t:04d}.ppm", img)
        else:
            write_pgm(path / f"frame_{t:04d}.pgm", img[:, :, 0])


def test_load_video_basic(tmp_path):
    _write_frames(tmp_path / "v", count=3)
    video = load_video(tmp_path / "v")
    assert video.frame_count == 3
    assert (video.width, video.height) == (8, 8)


def test_load_video_pgm_replicates_channels(tmp_path):
    _write_frames(tmp_path / "v", count=2, fmt="pgm")
    video = load_video(tmp_path / "v")
    assert video.frames.shape == (2, 8, 8, 3)
    assert np.all(video.frames[:, :, :, 0] == video.frames[:, :, :, 2])


def test_load_video_empty(tmp_path):
    (tmp_path / "v").mkdir()
    with pytest.raises(DataError, match="no frames"):
        load_video(tmp_path / "v")


def test_load_video_manifest_overrides_order(tmp_path):
    d = tmp_path / "v"
    d.mkdir()
    for name, value in (("a.pgm", 1), ("b.pgm", 2)):
        write_pgm(d / name, np.full((4, 4), value, dtype=np.uint8))
    (d / "frames.txt").write_text("b.pgm\na.pgm\n")
    video = load_video(d)
    assert video.frames[0, 0, 0, 0] == 2
    assert video.frames[1, 0, 0, 0] == 1


def test_load_video_dimension_mismatch(tmp_path):
    _write_frames(tmp_path / "v", count=1, size=(8, 8))
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    write_ppm(tmp_path / "v" / "frame_9999.ppm", img)
    with pytest.raises(DataError, match="dimension mismatch"):
        load_video(tmp_path / "v")


def test_load_superpixels_remaps_labels(tmp_path):
    d = tmp_path / "sp"
    d.mkdir()
    write_pgm(d / "f0.pgm", np.array([[5, 5], [9, 9]], dtype=np.uint16), maxval=65535)
    sp = load_superpixels(d, expected_frames=1)
    assert sp.counts == [2]
    assert np.array_equal(sp.labels[0], [[0, 0], [1, 1]])


def test_load_superpixels_count_mismatch(tmp_path):
    d = tmp_path / "sp"
    d.mkdir()
    for t in range(2):
        write_pgm(d / f"f{t}.pgm", np.zeros((2, 2), dtype=np.uint16), maxval=65535)
    with pytest.raises(DataError, match="mismatch"):
        load_superpixels(d, expected_frames=3)


def test_remap_preserves_partition(tmp_path):
    d = tmp_path / "sp"
    d.mkdir()
    raw = np.array([[3, 3, 11], [11, 7, 7]], dtype=np.uint16)
    write_pgm(d / "f0.pgm", raw, maxval=65535)
    sp = load_superpixels(d, expected_frames=1)
    # two pixels share a label before iff after
    for a in np.ndindex(raw.shape):
        for b in np.ndindex(raw.shape):
            assert (raw[a] == raw[b]) == (sp.labels[0][a] == sp.labels[0][b])


def _video_of(frame_arrays):
    return VideoVolume(np.stack(frame_arrays))


def test_stats_uniform_frame():
    frame = np.zeros((8, 8, 3), dtype=np.uint8)
    frame[:, :, 0] = 255
    video = _video_of([frame])
    sp = SuperpixelMap(np.zeros((1, 8, 8), dtype=np.int32), [1])
    stats = compute_superpixel_stats(video, sp)
    assert np.allclose(stats.mean_color[0][0], [255, 0, 0])
    assert np.allclose(stats.centroid[0][0], [3.5, 3.5])
    assert stats.pixel_count[0][0] == 64


def test_stats_mean_of_two_pixels():
    frame = np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8)
    video = _video_of([frame])
    sp = SuperpixelMap(np.zeros((1, 1, 2), dtype=np.int32), [1])
    stats = compute_superpixel_stats(video, sp)
    assert np.allclose(stats.mean_color[0][0], [127.5, 127.5, 127.5])


def test_stats_single_pixel_superpixels():
    frame = np.zeros((1, 2, 3), dtype=np.uint8)
    video = _video_of([frame])
    sp = SuperpixelMap(np.array([[[0, 1]]], dtype=np.int32), [2])
    stats = compute_superpixel_stats(video, sp)
    assert np.array_equal(stats.pixel_count[0], [1, 1])
    assert np.allclose(stats.centroid[0], [[0, 0], [1, 0]])


def test_stats_pixel_counts_partition(rng):
    labels = rng.integers(0, 5, size=(1, 9, 7)).astype(np.int32)
    labels[0, 0, :5] = np.arange(5)  # every label present
    video = _video_of([rng.integers(0, 256, size=(9, 7, 3)).astype(np.uint8)])
    sp = SuperpixelMap(labels, [5])
    stats = compute_superpixel_stats(video, sp)
    assert stats.pixel_count[0].sum() == 9 * 7


def test_warp_translation():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = True
    flow = np.zeros((4, 4, 2))
    flow[..., 0] = 1.0
    out = warp_mask(mask, flow)
    expected = np.zeros((4, 4), dtype=bool)
    expected[1, 2] = True
    assert np.array_equal(out, expected)


def test_warp_clips_out_of_frame():
    mask = np.zeros((4, 4), dtype=bool)
    mask[3, 3] = True
    flow = np.zeros((4, 4, 2))
    flow[..., 0] = 1.0
    assert not warp_mask(mask, flow).any()


def test_warp_union_semantics():
    mask = np.zeros((1, 3), dtype=bool)
    mask[0, 0] = mask[0, 1] = True
    flow = np.zeros((1, 3, 2))
    flow[0, 0, 0] = 1.0  # both land on x=1
    out = warp_mask(mask, flow)
    assert out.sum() == 1 and out[0, 1]


def test_warp_zero_flow_identity(rng):
    mask = rng.random((6, 5)) < 0.4
    out = warp_mask(mask, np.zeros((6, 5, 2)))
    assert np.array_equal(out, mask)


def test_warp_cardinality_never_grows(rng):
    for _ in range(20):
        mask = rng.random((7, 7)) < 0.5
        flow = rng.normal(0, 2.0, size=(7, 7, 2))
        assert warp_mask(mask, flow).sum() <= mask.sum()
