"""Binary MRF segmentation over the space-time superpixel graph.

The energy combines color and semantic unaries with Potts pairwise terms
that reuse the graph affinities:

    E(x) = sum_i (psi_c + lambda_o * psi_o)
         + lambda_s * sum_spatial  w_ij [x_i != x_j]
         + lambda_t * sum_temporal w_ij [x_i != x_j]

With two labels and non-negative pairwise weights the energy is submodular,
so a single s-t min-cut gives the exact global minimum; ties resolve to
background (the minimal source side of the cut).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDA_OBJECT = 10.0
LAMBDA_SPATIAL = 1000.0
LAMBDA_TEMPORAL = 2000.0
CONFIDENCE_CLAMP = 1e-6


@dataclass
class MRFProblem:
    cost_object: np.ndarray  # (n,)
    cost_background: np.ndarray  # (n,)
    edges: np.ndarray  # (m, 2) int
    edge_weight: np.ndarray  # (m,) non-negative, Potts

    def __post_init__(self):
        self.cost_object = np.asarray(self.cost_object, dtype=np.float64)
        self.cost_background = np.asarray(self.cost_background, dtype=np.float64)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.edge_weight = np.asarray(self.edge_weight, dtype=np.float64)
        if np.any(self.edge_weight < 0):
            raise ValueError("pairwise weights must be non-negative")
        if not (
            np.all(np.isfinite(self.cost_object))
            and np.all(np.isfinite(self.cost_background))
            and np.all(np.isfinite(self.edge_weight))
        ):
            raise ValueError("MRF costs must be finite")

    @property
    def n_nodes(self):
        return len(self.cost_object)


@dataclass
class Labeling:
    """Per-superpixel object/background assignment; True = object."""

    labels: np.ndarray  # (n,) bool


def semantic_unary(c):
    """(-log c, -log(1-c)) with c clamped into [1e-6, 1 - 1e-6]."""
    c = np.clip(np.asarray(c, dtype=np.float64), CONFIDENCE_CLAMP, 1.0 - CONFIDENCE_CLAMP)
    return -np.log(c), -np.log(1.0 - c)


def color_unary(gmm_object, gmm_background, colors):
    """Color costs from the two mixtures, normalized per node to a posterior.

    Raw mixture densities are not comparable across models, so the
    likelihood is normalized two-way before the negative log:
    U(obj) = p_obj / (p_obj + p_bg).
    """
    lo = np.atleast_1d(gmm_object.log_likelihood(colors))
    lb = np.atleast_1d(gmm_background.log_likelihood(colors))
    denom = np.logaddexp(lo, lb)
    return denom - lo, denom - lb


def pairwise_weights(graph, lambda_spatial=LAMBDA_SPATIAL, lambda_temporal=LAMBDA_TEMPORAL):
    """Potts edge list for the segmentation energy, reusing graph affinities."""
    edges = np.concatenate(
        [
            np.stack([graph.spatial_i, graph.spatial_j], axis=1),
            np.stack([graph.temporal_i, graph.temporal_j], axis=1),
        ]
    ).astype(np.int64)
    weights = np.concatenate(
        [lambda_spatial * graph.spatial_w, lambda_temporal * graph.temporal_w]
    )
    return edges, weights


def build_problem(
    graph,
    confidence,
    colors,
    gmm_object,
    gmm_background,
    lambda_object=LAMBDA_OBJECT,
    lambda_spatial=LAMBDA_SPATIAL,
    lambda_temporal=LAMBDA_TEMPORAL,
) -> MRFProblem:
    """Assemble unaries and pairwise terms for one class."""
    sem_obj, sem_bg = semantic_unary(confidence)
    col_obj, col_bg = color_unary(gmm_object, gmm_background, colors)
    edges, weights = pairwise_weights(graph, lambda_spatial, lambda_temporal)
    return MRFProblem(
        cost_object=col_obj + lambda_object * sem_obj,
        cost_background=col_bg + lambda_object * sem_bg,
        edges=edges,
        edge_weight=weights,
    )


def mrf_energy(problem: MRFProblem, labels):
    """Evaluate the labeling energy (True = object)."""
    labels = np.asarray(labels, dtype=bool)
    unary = np.where(labels, problem.cost_object, problem.cost_background).sum()
    if len(problem.edges):
        disagree = labels[problem.edges[:, 0]] != labels[problem.edges[:, 1]]
        return float(unary + problem.edge_weight[disagree].sum())
    return float(unary)


def solve_binary(problem: MRFProblem) -> Labeling:
    """Exact global minimum of the binary Potts energy via s-t min-cut.

    The network has source-side = object: source->i carries the background
    cost (paid when i is cut to the sink side), i->sink the object cost, and
    each Potts edge a symmetric arc pair. Nodes residual-reachable from the
    source after max-flow are labeled object, which resolves ties to
    background.
    """
    n = problem.n_nodes
    source, sink = n, n + 1
    m_pair = len(problem.edges)
    n_arcs = 4 * n + 2 * m_pair
    arc_to = np.empty(n_arcs, dtype=np.int64)
    arc_cap = np.zeros(n_arcs, dtype=np.float64)
    arc_from = np.empty(n_arcs, dtype=np.int64)

    ids = np.arange(n)
    # source -> i (cap: background cost) with zero reverse
    arc_from[0 : 2 * n : 2] = source
    arc_to[0 : 2 * n : 2] = ids
    arc_cap[0 : 2 * n : 2] = problem.cost_background
    arc_from[1 : 2 * n : 2] = ids
    arc_to[1 : 2 * n : 2] = source
    # i -> sink (cap: object cost) with zero reverse
    base = 2 * n
    arc_from[base : base + 2 * n : 2] = ids
    arc_to[base : base + 2 * n : 2] = sink
    arc_cap[base : base + 2 * n : 2] = problem.cost_object
    arc_from[base + 1 : base + 2 * n : 2] = sink
    arc_to[base + 1 : base + 2 * n : 2] = ids
    # Potts edges: symmetric mutual-reverse arc pairs
    base = 4 * n
    if m_pair:
        arc_from[base::2] = problem.edges[:, 0]
        arc_to[base::2] = problem.edges[:, 1]
        arc_cap[base::2] = problem.edge_weight
        arc_from[base + 1 :: 2] = problem.edges[:, 1]
        arc_to[base + 1 :: 2] = problem.edges[:, 0]
        arc_cap[base + 1 :: 2] = problem.edge_weight

    reachable = _dinic_min_cut(n + 2, source, sink, arc_from, arc_to, arc_cap)
    labels = reachable[:n].copy()
    return Labeling(labels=labels)


def _dinic_min_cut(n_nodes, source, sink, arc_from, arc_to, arc_cap):
    """Dinic max-flow on float capacities; returns the residual-reachable set.

    Arcs are paired so that arc k ^ 1 is the reverse of arc k. Capacities are
    mutated in place (callers pass freshly built arrays).
    """
    order = np.argsort(arc_from, kind="stable")
    adj_arcs = order
    start = np.searchsorted(arc_from[order], np.arange(n_nodes + 1))
    cap = arc_cap
    to = arc_to

    level = np.empty(n_nodes, dtype=np.int64)
    INF = np.iinfo(np.int64).max

    while True:
        # BFS level graph over residual arcs
        level.fill(-1)
        level[source] = 0
        queue = [source]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for idx in range(start[v], start[v + 1]):
                a = adj_arcs[idx]
                u = to[a]
                if cap[a] > 0 and level[u] < 0:
                    level[u] = level[v] + 1
                    queue.append(u)
        if level[sink] < 0:
            return level >= 0
        # blocking flow with current-arc pointers
        it = start.copy()
        path_arcs = []
        path = [source]
        while path:
            v = path[-1]
            if v == sink:
                bottleneck = INF
                for a in path_arcs:
                    if cap[a] < bottleneck:
                        bottleneck = cap[a]
                for a in path_arcs:
                    cap[a] -= bottleneck
                    cap[a ^ 1] += bottleneck
                retreat = 0
                while retreat < len(path_arcs) and cap[path_arcs[retreat]] > 0:
                    retreat += 1
                del path[retreat + 1 :]
                del path_arcs[retreat:]
                continue
            advanced = False
            while it[v] < start[v + 1]:
                a = adj_arcs[it[v]]
                u = to[a]
                if cap[a] > 0 and level[u] == level[v] + 1:
                    path.append(u)
                    path_arcs.append(a)
                    advanced = True
                    break
                it[v] += 1
            if not advanced:
                level[v] = -1
                path.pop()
                if path_arcs:
                    path_arcs.pop()


def rasterize(labeling: Labeling, sp) -> np.ndarray:
    """Per-frame boolean masks: pixel set where its superpixel is object."""
    offsets = sp.frame_offsets()
    labels = np.asarray(labeling.labels, dtype=bool)
    if len(labels) != offsets[-1]:
        raise ValueError("labeling does not cover all superpixels")
    out = np.empty(sp.labels.shape, dtype=bool)
    for t in range(sp.frame_count):
        frame_lab = labels[offsets[t] : offsets[t + 1]]
        out[t] = frame_lab[sp.labels[t]]
    return out
