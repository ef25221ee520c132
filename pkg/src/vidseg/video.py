"""Core video data model: frames, superpixel maps, optical flow, masks.

All types are plain containers over numpy arrays and are treated as
immutable after construction; loaders validate dimensions up front so the
rest of the pipeline can assume consistency.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .pnm import PnmError, read_pnm

FLOW_MAGIC = 202021.25  # little-endian float header, b"PIEH"

FRAME_SUFFIXES = (".ppm", ".pgm")


class DataError(ValueError):
    """Invalid or inconsistent input data."""


@dataclass
class VideoVolume:
    """An ordered stack of RGB frames, shape (T, H, W, 3) uint8."""

    frames: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.uint8)
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise DataError("frames must have shape (T, H, W, 3)")
        if self.frames.shape[0] < 1:
            raise DataError("no frames")

    @property
    def frame_count(self):
        return self.frames.shape[0]

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]


@dataclass
class SuperpixelMap:
    """Per-frame label images with contiguous 0-based superpixel ids.

    labels: (T, H, W) int32, counts[t] = number of superpixels in frame t.
    """

    labels: np.ndarray
    counts: list

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 3:
            raise DataError("labels must have shape (T, H, W)")
        if len(self.counts) != self.labels.shape[0]:
            raise DataError("counts must have one entry per frame")

    @property
    def frame_count(self):
        return self.labels.shape[0]

    @property
    def total_count(self):
        return int(sum(self.counts))

    def frame_offsets(self):
        """Global node-id offset per frame: node = offsets[t] + superpixel id."""
        return np.concatenate([[0], np.cumsum(self.counts)]).astype(np.int64)


@dataclass
class SuperpixelStats:
    """Per-superpixel aggregates, one array triple per frame.

    pixel_count[t]: (n_t,) int; mean_color[t]: (n_t, 3) float, 0-255 scale;
    centroid[t]: (n_t, 2) float as (x, y) in pixel coordinates.
    """

    pixel_count: list
    mean_color: list
    centroid: list


def load_video(path) -> VideoVolume:
    """Load a directory of PPM/PGM frames in lexicographic filename order.

    A frames.txt manifest in the directory (one filename per line) overrides
    the lexicographic order.
    """
    import os

    if not os.path.isdir(path):
        raise DataError(f"missing video directory: {path}")
    manifest = os.path.join(path, "frames.txt")
    if os.path.isfile(manifest):
        with open(manifest, "r", encoding="utf-8") as fh:
            names = [line.strip() for line in fh if line.strip()]
    else:
        names = sorted(
            n for n in os.listdir(path) if n.lower().endswith(FRAME_SUFFIXES)
        )
    if not names:
        raise DataError(f"no frames in {path}")
    frames = []
    for name in names:
        try:
            img = read_pnm(os.path.join(path, name))
        except (OSError, PnmError) as exc:
            raise DataError(f"unreadable frame {name}: {exc}") from exc
        if img.ndim == 2:
            img = np.repeat(img.astype(np.uint8)[:, :, None], 3, axis=2)
        frames.append(img)
    shape = frames[0].shape
    for name, img in zip(names, frames):
        if img.shape != shape:
            raise DataError(
                f"dimension mismatch: {name} is {img.shape[:2]}, expected {shape[:2]}"
            )
    return VideoVolume(np.stack(frames))


def load_superpixels(path, expected_frames) -> SuperpixelMap:
    """Load per-frame 16-bit PGM label images, remapping labels to 0..n-1."""
    import os

    if not os.path.isdir(path):
        raise DataError(f"missing superpixel directory: {path}")
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".pgm"))
    if len(names) != expected_frames:
        raise DataError(
            f"superpixel frame count mismatch: {len(names)} files, expected {expected_frames}"
        )
    label_frames = []
    counts = []
    for name in names:
        raw = read_pnm(os.path.join(path, name))
        if raw.ndim != 2:
            raise DataError(f"superpixel map {name} is not a PGM label image")
        uniq, remapped = np.unique(raw, return_inverse=True)
        label_frames.append(remapped.reshape(raw.shape).astype(np.int32))
        counts.append(int(uniq.size))
    labels = np.stack(label_frames)
    return SuperpixelMap(labels, counts)


def load_flow(path) -> np.ndarray:
    """Read a Middlebury .flo file into an (H, W, 2) float32 array of (dx, dy)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise DataError(f"truncated flow file: {path}")
    (magic,) = struct.unpack("<f", data[:4])
    if magic != FLOW_MAGIC:
        raise DataError(f"bad flow magic in {path}: {magic!r}")
    width, height = struct.unpack("<ii", data[4:12])
    if width <= 0 or height <= 0:
        raise DataError(f"bad flow dimensions in {path}")
    count = width * height * 2
    raster = np.frombuffer(data, dtype="<f4", count=-1, offset=12)
    if raster.size < count:
        raise DataError(f"truncated flow raster in {path}")
    flow = raster[:count].reshape(height, width, 2).copy()
    if not np.all(np.isfinite(flow)):
        raise DataError(f"non-finite flow in {path}")
    return flow


def write_flow(path, flow):
    """Write an (H, W, 2) flow field in Middlebury .flo format."""
    flow = np.asarray(flow, dtype=np.float32)
    height, width = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLOW_MAGIC))
        fh.write(struct.pack("<ii", width, height))
        fh.write(flow.astype("<f4").tobytes())


def load_mask(path) -> np.ndarray:
    """Read an 8-bit PGM as a boolean mask (nonzero = set)."""
    img = read_pnm(path)
    if img.ndim != 2:
        raise DataError(f"mask {path} is not a PGM")
    return img != 0


def compute_superpixel_stats(video: VideoVolume, sp: SuperpixelMap) -> SuperpixelStats:
    """Pixel counts, mean RGB colors, and centroids for every superpixel."""
    if video.frames.shape[:3] != sp.labels.shape:
        raise DataError("video and superpixel dimensions differ")
    height, width = video.height, video.width
    xs = np.tile(np.arange(width, dtype=np.float64), height)
    ys = np.repeat(np.arange(height, dtype=np.float64), width)
    pixel_count, mean_color, centroid = [], [], []
    for t in range(video.frame_count):
        labels = sp.labels[t].ravel()
        n = sp.counts[t]
        counts = np.bincount(labels, minlength=n).astype(np.int64)
        if np.any(counts == 0):
            raise DataError(f"frame {t} has empty superpixel labels")
        rgb = video.frames[t].reshape(-1, 3).astype(np.float64)
        color = np.stack(
            [np.bincount(labels, weights=rgb[:, c], minlength=n) for c in range(3)],
            axis=1,
        )
        cx = np.bincount(labels, weights=xs, minlength=n)
        cy = np.bincount(labels, weights=ys, minlength=n)
        pixel_count.append(counts)
        mean_color.append(color / counts[:, None])
        centroid.append(np.stack([cx, cy], axis=1) / counts[:, None])
    return SuperpixelStats(pixel_count, mean_color, centroid)


def warp_mask(mask, flow) -> np.ndarray:
    """Push a boolean mask forward along a flow field.

    Each set pixel (x, y) lands on (round(x+dx), round(y+dy)); destinations
    outside the frame are dropped and collisions union.
    """
    mask = np.asarray(mask, dtype=bool)
    flow = np.asarray(flow)
    if mask.shape != flow.shape[:2]:
        raise DataError("mask and flow dimensions differ")
    ys, xs = np.nonzero(mask)
    dest_x = np.floor(xs + flow[ys, xs, 0] + 0.5).astype(np.int64)
    dest_y = np.floor(ys + flow[ys, xs, 1] + 0.5).astype(np.int64)
    height, width = mask.shape
    keep = (dest_x >= 0) & (dest_x < width) & (dest_y >= 0) & (dest_y < height)
    out = np.zeros_like(mask)
    out[dest_y[keep], dest_x[keep]] = True
    return out
