"""Weighted space-time superpixel graph construction.

Nodes are superpixels across all frames; spatial edges join 4-connected
superpixels of one frame, temporal edges join superpixels of consecutive
frames linked by flow-warped overlap. Affinities combine self-normalized
color distances with centroid distances (spatial) or overlap ratio and
motion reliability (temporal). The assembled graph carries the affinity
matrix A, node degrees, and the symmetrically normalized operator
S = D^-1/2 A D^-1/2 used by the diffusion solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .video import (
    DataError,
    SuperpixelMap,
    SuperpixelStats,
    VideoVolume,
    compute_superpixel_stats,
)

MOTION_COHERENCE_WEIGHT = 2.0  # w_c in m = exp(-w_c * entropy)
DISTANCE_CLAMP = 1e-6

ORIENTATION_BINS = 8
MAGNITUDE_EDGES = (0.5, 2.0, 8.0)  # pixels; below 0.5 is one static bin
N_FLOW_BINS = ORIENTATION_BINS * (len(MAGNITUDE_EDGES) + 1)


@dataclass
class SpaceTimeGraph:
    frame_offsets: np.ndarray  # (T+1,) global node-id offsets
    spatial_i: np.ndarray
    spatial_j: np.ndarray
    spatial_w: np.ndarray
    temporal_i: np.ndarray  # source node (frame t-1)
    temporal_j: np.ndarray  # target node (frame t)
    temporal_w: np.ndarray
    temporal_rho: np.ndarray
    affinity: sparse.csr_matrix
    degrees: np.ndarray
    operator: sparse.csr_matrix  # S = D^-1/2 A D^-1/2

    @property
    def n_nodes(self):
        return int(self.frame_offsets[-1])

    def node_frame(self, nodes):
        """Frame index of each global node id."""
        return np.searchsorted(self.frame_offsets, np.asarray(nodes), side="right") - 1

    def dump_csv(self, path):
        """Debug dump: kind, frame_i, sp_i, frame_j, sp_j, weight per edge."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("kind,frame_i,sp_i,frame_j,sp_j,weight\n")
            for kind, (ii, jj, ww) in (
                ("spatial", (self.spatial_i, self.spatial_j, self.spatial_w)),
                ("temporal", (self.temporal_i, self.temporal_j, self.temporal_w)),
            ):
                fi = self.node_frame(ii)
                fj = self.node_frame(jj)
                si = ii - self.frame_offsets[fi]
                sj = jj - self.frame_offsets[fj]
                for k in range(len(ii)):
                    fh.write(
                        f"{kind},{fi[k]},{si[k]},{fj[k]},{sj[k]},{ww[k]:.17g}\n"
                    )


def spatial_edges(sp: SuperpixelMap):
    """Undirected same-frame adjacency under 4-connectivity.

    Returns (i, j) arrays of global node ids with i < j.
    """
    offsets = sp.frame_offsets()
    out_i, out_j = [], []
    for t in range(sp.frame_count):
        labels = sp.labels[t]
        a = np.concatenate(
            [labels[:, :-1].ravel(), labels[:-1, :].ravel()]
        ).astype(np.int64)
        b = np.concatenate(
            [labels[:, 1:].ravel(), labels[1:, :].ravel()]
        ).astype(np.int64)
        differ = a != b
        lo = np.minimum(a[differ], b[differ])
        hi = np.maximum(a[differ], b[differ])
        n = sp.counts[t]
        keys = np.unique(lo * n + hi)
        out_i.append(keys // n + offsets[t])
        out_j.append(keys % n + offsets[t])
    if not out_i:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(out_i), np.concatenate(out_j)


def temporal_edges(sp: SuperpixelMap, flows):
    """Flow-linked adjacency between consecutive frames.

    Warps every superpixel of frame t-1 forward (union of rounded
    destinations, out-of-frame dropped) and intersects with frame-t
    superpixels. Returns (i, j, rho) where i is the source node, j the
    target node, and rho the overlap ratio |warp(s_i) ∩ s_j| / |warp(s_i)|.
    """
    if len(flows) != sp.frame_count - 1:
        raise DataError(
            f"expected {sp.frame_count - 1} flow fields, got {len(flows)}"
        )
    offsets = sp.frame_offsets()
    height, width = sp.labels.shape[1:]
    npix = height * width
    grid_x, grid_y = np.meshgrid(np.arange(width), np.arange(height))
    out_i, out_j, out_rho = [], [], []
    for t in range(1, sp.frame_count):
        flow = np.asarray(flows[t - 1])
        if flow.shape[:2] != (height, width):
            raise DataError(f"flow {t - 1} dimensions differ from frames")
        dest_x = np.floor(grid_x + flow[:, :, 0] + 0.5).astype(np.int64)
        dest_y = np.floor(grid_y + flow[:, :, 1] + 0.5).astype(np.int64)
        valid = (dest_x >= 0) & (dest_x < width) & (dest_y >= 0) & (dest_y < height)
        src = sp.labels[t - 1][valid].astype(np.int64)
        dest = dest_y[valid] * width + dest_x[valid]
        # union semantics: collapse source pixels landing on one destination
        pairs = np.unique(src * npix + dest)
        src_u = pairs // npix
        dest_u = pairs % npix
        n_prev, n_next = sp.counts[t - 1], sp.counts[t]
        warp_size = np.bincount(src_u, minlength=n_prev)
        dst_label = sp.labels[t].ravel()[dest_u]
        keys, counts = np.unique(src_u * n_next + dst_label, return_counts=True)
        pi = keys // n_next
        pj = keys % n_next
        out_i.append(pi + offsets[t - 1])
        out_j.append(pj + offsets[t])
        out_rho.append(counts / warp_size[pi])
    if not out_i:
        empty = np.empty(0, np.int64)
        return empty, empty.copy(), np.empty(0, np.float64)
    return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_rho)


def color_distance(color_i, color_j, mean_sq):
    """Squared RGB distance self-normalized by twice the graph-wide mean."""
    sq = np.sum((np.asarray(color_i, float) - np.asarray(color_j, float)) ** 2, axis=-1)
    if mean_sq <= 0:
        return np.zeros_like(sq)
    return sq / (2.0 * mean_sq)


def spatial_affinity(d_c, d_s):
    """exp(-color distance) / centroid distance, with the denominator clamped."""
    return np.exp(-np.asarray(d_c, float)) / np.maximum(d_s, DISTANCE_CLAMP)


def temporal_affinity(d_c, rho, m):
    """exp(-color distance) / temporal distance, d_t = rho / m of the source."""
    return np.exp(-np.asarray(d_c, float)) * m / np.maximum(rho, DISTANCE_CLAMP)


def flow_bin_index(flow_vectors):
    """Quantize flow vectors into 8 orientation x 4 magnitude bins.

    Vectors below 0.5 px magnitude all share bin 0 (orientation of
    near-static flow is noise); remaining magnitude bands are [0.5, 2),
    [2, 8), and [8, inf).
    """
    v = np.asarray(flow_vectors, dtype=np.float64)
    dx, dy = v[..., 0], v[..., 1]
    mag = np.hypot(dx, dy)
    mag_bin = np.digitize(mag, MAGNITUDE_EDGES)
    angle = np.arctan2(dy, dx)
    orient = np.floor((angle + np.pi) / (2.0 * np.pi / ORIENTATION_BINS)).astype(
        np.int64
    ) % ORIENTATION_BINS
    idx = mag_bin * ORIENTATION_BINS + orient
    return np.where(mag_bin == 0, 0, idx)


def histogram_entropy(hist):
    """Shannon entropy in nats over the nonzero bins of a mass histogram."""
    h = np.asarray(hist, dtype=np.float64)
    total = h.sum()
    if total <= 0:
        raise DataError("empty histogram")
    p = h[h > 0] / total
    return float(-np.sum(p * np.log(p))) + 0.0  # avoid -0.0


def motion_noncoherence(sp_mask, flow, w_c=MOTION_COHERENCE_WEIGHT):
    """Flow-histogram entropy pi and reliability m = exp(-w_c * pi) for one superpixel."""
    sp_mask = np.asarray(sp_mask, dtype=bool)
    if not sp_mask.any():
        raise DataError("empty superpixel")
    idx = flow_bin_index(np.asarray(flow)[sp_mask])
    hist = np.bincount(idx, minlength=N_FLOW_BINS)
    pi = histogram_entropy(hist)
    return pi, float(np.exp(-w_c * pi))


def motion_reliability(sp: SuperpixelMap, flows, w_c=MOTION_COHERENCE_WEIGHT):
    """Per-node reliability m for all superpixels that act as temporal sources.

    Superpixels of the last frame are never warped forward; they keep m = 1.
    Returns (pi, m) arrays over all global node ids.
    """
    n_total = sp.total_count
    pi = np.zeros(n_total, dtype=np.float64)
    m = np.ones(n_total, dtype=np.float64)
    offsets = sp.frame_offsets()
    for t in range(len(flows)):
        n = sp.counts[t]
        idx = flow_bin_index(flows[t])
        key = sp.labels[t].ravel().astype(np.int64) * N_FLOW_BINS + idx.ravel()
        hist = np.bincount(key, minlength=n * N_FLOW_BINS).reshape(n, N_FLOW_BINS)
        p = hist / hist.sum(axis=1, keepdims=True)
        ent = -np.sum(np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0), axis=1)
        ent = ent + 0.0  # avoid -0.0
        pi[offsets[t] : offsets[t + 1]] = ent
        m[offsets[t] : offsets[t + 1]] = np.exp(-w_c * ent)
    return pi, m


def _dedupe_max(i, j, w, n_nodes):
    """Canonicalize undirected pairs, keeping the max weight of duplicates."""
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    keys = lo.astype(np.int64) * n_nodes + hi
    order = np.argsort(keys, kind="stable")
    keys, w = keys[order], w[order]
    uniq, start = np.unique(keys, return_index=True)
    wmax = np.maximum.reduceat(w, start) if len(w) else w
    return uniq // n_nodes, uniq % n_nodes, wmax


def assemble(frame_offsets, spatial, temporal) -> SpaceTimeGraph:
    """Build A, degrees, and S from weighted spatial/temporal edge lists.

    spatial: (i, j, w) arrays; temporal: (i, j, w, rho) arrays. Duplicate
    undirected pairs are merged by max weight. Isolated nodes get zero rows
    in S.
    """
    frame_offsets = np.asarray(frame_offsets, dtype=np.int64)
    n = int(frame_offsets[-1])
    si, sj, sw = (np.asarray(a) for a in spatial)
    ti, tj, tw, trho = (np.asarray(a) for a in temporal)
    for w in (sw, tw):
        if len(w) and (not np.all(np.isfinite(w)) or np.any(w < 0)):
            raise DataError("edge weights must be finite and non-negative")
    si, sj, sw = _dedupe_max(si.astype(np.int64), sj.astype(np.int64), sw.astype(np.float64), n)
    ti2, tj2, tw2 = _dedupe_max(ti.astype(np.int64), tj.astype(np.int64), tw.astype(np.float64), n)
    all_i = np.concatenate([si, ti2])
    all_j = np.concatenate([sj, tj2])
    all_w = np.concatenate([sw, tw2])
    rows = np.concatenate([all_i, all_j])
    cols = np.concatenate([all_j, all_i])
    data = np.concatenate([all_w, all_w])
    affinity = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    degrees = np.asarray(affinity.sum(axis=1)).ravel()
    dinv = np.where(degrees > 0, 1.0 / np.sqrt(np.where(degrees > 0, degrees, 1.0)), 0.0)
    # entry-wise A_ij * (dinv_i * dinv_j) keeps S exactly symmetric
    s_data = data * (dinv[rows] * dinv[cols])
    operator = sparse.coo_matrix((s_data, (rows, cols)), shape=(n, n)).tocsr()
    return SpaceTimeGraph(
        frame_offsets=frame_offsets,
        spatial_i=si,
        spatial_j=sj,
        spatial_w=sw,
        temporal_i=ti2,
        temporal_j=tj2,
        temporal_w=tw2,
        temporal_rho=trho,
        affinity=affinity,
        degrees=degrees,
        operator=operator,
    )


def build_graph(
    video: VideoVolume,
    sp: SuperpixelMap,
    flows,
    w_c=MOTION_COHERENCE_WEIGHT,
    stats: SuperpixelStats | None = None,
) -> SpaceTimeGraph:
    """Construct the full space-time graph for a video.

    Color distances are self-normalized separately over the spatial and
    temporal adjacency pools; centroid distances over the spatial pool.
    """
    if stats is None:
        stats = compute_superpixel_stats(video, sp)
    colors = np.concatenate(stats.mean_color, axis=0)
    centroids = np.concatenate(stats.centroid, axis=0)
    offsets = sp.frame_offsets()

    si, sj = spatial_edges(sp)
    ti, tj, rho = temporal_edges(sp, flows)

    if len(si):
        sq_s = np.sum((colors[si] - colors[sj]) ** 2, axis=1)
        mean_sq_s = float(sq_s.mean())
        d_c_s = sq_s / (2.0 * mean_sq_s) if mean_sq_s > 0 else np.zeros_like(sq_s)
        cent_d = np.linalg.norm(centroids[si] - centroids[sj], axis=1)
        mean_cent = float(cent_d.mean())
        d_s = cent_d / mean_cent if mean_cent > 0 else np.zeros_like(cent_d)
        sw = spatial_affinity(d_c_s, d_s)
    else:
        sw = np.empty(0, np.float64)

    if len(ti):
        sq_t = np.sum((colors[ti] - colors[tj]) ** 2, axis=1)
        mean_sq_t = float(sq_t.mean())
        d_c_t = sq_t / (2.0 * mean_sq_t) if mean_sq_t > 0 else np.zeros_like(sq_t)
        _, m = motion_reliability(sp, flows, w_c)
        tw = temporal_affinity(d_c_t, rho, m[ti])
    else:
        tw = np.empty(0, np.float64)

    return assemble(offsets, (si, sj, sw), (ti, tj, tw, rho))
