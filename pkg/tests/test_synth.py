import hashlib
import os

import numpy as np
import pytest

from conftest import graph_from_edges
from vidseg.mrf import MRFProblem, mrf_energy, solve_binary
from vidseg.synth import (
    SynthConfig,
    dense_solve_oracle,
    enumerate_labelings_oracle,
    generate,
    write_dataset,
)
from vidseg.video import warp_mask


def _small_cfg(**kw):
    base = dict(
        width=48,
        height=48,
        frame_count=5,
        shape_width=16,
        shape_height=16,
        start_x=4,
        start_y=6,
        velocity=(2, 1),
        cell_size=8,
        seed=7,
    )
    base.update(kw)
    return SynthConfig(**base)


def test_gt_centroid_displacement():
    cfg = SynthConfig(frame_count=6, seed=0)
    ds = generate(cfg)
    def centroid(mask):
        ys, xs = np.nonzero(mask)
        return xs.mean(), ys.mean()
    c0 = centroid(ds.gt_masks[0])
    c5 = centroid(ds.gt_masks[5])
    assert (c5[0] - c0[0], c5[1] - c0[1]) == (10.0, 5.0)


def test_zero_velocity_static():
    ds = generate(_small_cfg(velocity=(0, 0)))
    assert all(not f.any() for f in ds.flows)
    for t in range(1, ds.config.frame_count):
        assert np.array_equal(ds.gt_masks[t], ds.gt_masks[0])


def test_flow_warps_gt_exactly():
    ds = generate(_small_cfg())
    for t in range(1, ds.config.frame_count):
        warped = warp_mask(ds.gt_masks[t - 1], ds.flows[t - 1])
        assert np.array_equal(warped, ds.gt_masks[t])


def test_superpixels_respect_boundary():
    ds = generate(_small_cfg())
    for t in range(ds.config.frame_count):
        labels = ds.superpixels.labels[t]
        gt = ds.gt_masks[t]
        for s in range(ds.superpixels.counts[t]):
            member = labels == s
            inside = gt[member]
            assert inside.all() or not inside.any()


def test_disc_shape():
    ds = generate(_small_cfg(shape="disc"))
    mask = ds.gt_masks[0]
    assert 0 < mask.sum() < mask.size
    ys, xs = np.nonzero(mask)
    assert xs.min() >= 4 and ys.min() >= 6


def test_shape_exits_frame_rejected():
    with pytest.raises(ValueError, match="exits frame"):
        generate(_small_cfg(velocity=(20, 0)))


def test_generation_deterministic():
    d1 = generate(_small_cfg())
    d2 = generate(_small_cfg())
    assert np.array_equal(d1.video.frames, d2.video.frames)
    assert np.array_equal(d1.superpixels.labels, d2.superpixels.labels)
    assert all(
        p1.class_confidences == p2.class_confidences
        for p1, p2 in zip(d1.proposals, d2.proposals)
    )


def _tree_digest(root):
    digest = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            digest.update(os.path.relpath(path, root).encode())
            digest.update(open(path, "rb").read())
    return digest.hexdigest()


def test_written_tree_deterministic(tmp_path):
    write_dataset(generate(_small_cfg()), tmp_path / "a")
    write_dataset(generate(_small_cfg()), tmp_path / "b")
    assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")


def test_dense_oracle_two_node():
    g = graph_from_edges(2, spatial=[(0, 1, 1.0)])
    x = dense_solve_oracle(g, np.array([1.0, 0.0]), mu=0.5)
    assert np.allclose(x, [0.6, 0.4], atol=1e-14)


def test_dense_oracle_no_edges_gives_eta_c():
    g = graph_from_edges(3, spatial=[])
    c = np.array([0.9, 0.3, 0.0])
    x = dense_solve_oracle(g, c, mu=0.5)
    assert np.allclose(x, c / 3.0, atol=1e-15)


def test_dense_oracle_size_limit():
    g = graph_from_edges(2, spatial=[(0, 1, 1.0)])
    g.frame_offsets = np.array([0, 1001])
    with pytest.raises(ValueError, match="1000"):
        dense_solve_oracle(g, np.zeros(1001), mu=0.5)


def test_enumeration_unary_only():
    problem = MRFProblem(
        cost_object=np.array([0.0, 3.0, 1.0]),
        cost_background=np.array([2.0, 1.0, 5.0]),
        edges=np.empty((0, 2), dtype=np.int64),
        edge_weight=np.empty(0),
    )
    labeling, best = enumerate_labelings_oracle(problem)
    assert labeling.labels.tolist() == [True, False, True]
    assert best == 2.0


def test_enumeration_tie_prefers_background():
    problem = MRFProblem(
        cost_object=np.ones(3),
        cost_background=np.ones(3),
        edges=np.empty((0, 2), dtype=np.int64),
        edge_weight=np.empty(0),
    )
    labeling, best = enumerate_labelings_oracle(problem)
    assert not labeling.labels.any()
    assert best == 3.0


def test_enumeration_refuses_large():
    problem = MRFProblem(
        cost_object=np.zeros(17),
        cost_background=np.zeros(17),
        edges=np.empty((0, 2), dtype=np.int64),
        edge_weight=np.empty(0),
    )
    with pytest.raises(ValueError, match="16"):
        enumerate_labelings_oracle(problem)


def test_enumeration_agrees_with_mincut(rng):
    for _ in range(10):
        n = int(rng.integers(2, 12))
        edges = []
        for i in range(n - 1):
            edges.append((i, i + 1))
        problem = MRFProblem(
            cost_object=rng.integers(0, 10, size=n).astype(float),
            cost_background=rng.integers(0, 10, size=n).astype(float),
            edges=np.array(edges, dtype=np.int64),
            edge_weight=rng.integers(0, 8, size=len(edges)).astype(float),
        )
        _, best = enumerate_labelings_oracle(problem)
        assert mrf_energy(problem, solve_binary(problem).labels) == best
