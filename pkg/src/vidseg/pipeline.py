"""Pipeline orchestration: ingest -> pool -> adapt -> segment -> eval.

Each stage reads and writes the file formats documented per module, so the
single-shot pipeline and the per-stage CLI subcommands produce bit-identical
artifacts. Confidence CSVs are written with full float precision to keep
file-mediated staging lossless.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, fields

import numpy as np

from . import gmm as gmm_mod
from . import mrf as mrf_mod
from .evaluation import (
    EvalReport,
    frame_pixel_errors,
    iou,
    iou_macro,
    pixel_error,
    render_overlay,
)
from .graph import MOTION_COHERENCE_WEIGHT, build_graph
from .pnm import write_pgm
from .proposals import (
    CONFIDENCE_THRESHOLD,
    ConfidenceField,
    filter_by_confidence,
    load_proposal_manifest,
    pool_confidence,
    score_proposals,
)
from .propagation import PropagationConfig, adapt_confidence
from .video import (
    DataError,
    compute_superpixel_stats,
    load_flow,
    load_mask,
    load_superpixels,
    load_video,
)

_FRAME_INDEX_RE = re.compile(r"(\d+)\D*$")


class StageError(RuntimeError):
    """Error surfaced with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    video_dir: str = ""
    superpixel_dir: str = ""
    flow_dir: str = ""
    motion_dir: str = ""
    proposal_manifest: str = ""
    gt_dir: str = ""
    out_dir: str = "out"
    video_id: str = "video"
    classes: list = field(default_factory=list)  # empty -> all manifest classes
    confidence_threshold: float = CONFIDENCE_THRESHOLD
    mu: float = 0.5
    motion_coherence_weight: float = MOTION_COHERENCE_WEIGHT
    lambda_object: float = mrf_mod.LAMBDA_OBJECT
    lambda_spatial: float = mrf_mod.LAMBDA_SPATIAL
    lambda_temporal: float = mrf_mod.LAMBDA_TEMPORAL
    gmm_components: int = gmm_mod.DEFAULT_COMPONENTS
    gmm_seed: int = 0
    solver: str = "linear"
    tolerance: float = 1e-8
    max_iterations: int = 10000
    skip_adaptation: bool = False
    dump_graph: bool = False

    def propagation_config(self):
        return PropagationConfig(
            mu=self.mu,
            solver=self.solver,
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
        )

    def validate(self):
        for name in ("video_dir", "superpixel_dir", "flow_dir", "motion_dir"):
            path = getattr(self, name)
            if not path or not os.path.isdir(path):
                raise DataError(f"{name} does not exist: {path!r}")
        if not os.path.isfile(self.proposal_manifest):
            raise DataError(f"proposal_manifest does not exist: {self.proposal_manifest!r}")
        if self.gt_dir and not os.path.isdir(self.gt_dir):
            raise DataError(f"gt_dir does not exist: {self.gt_dir!r}")
        for name in (
            "mu",
            "motion_coherence_weight",
            "lambda_object",
            "lambda_spatial",
            "lambda_temporal",
            "tolerance",
        ):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise DataError("confidence_threshold must lie in [0, 1]")
        if self.gmm_components < 1 or self.max_iterations < 1:
            raise DataError("gmm_components and max_iterations must be >= 1")
        return self

    @staticmethod
    def from_json(path, overrides=None):
        """Load a flat-key JSON config; relative paths resolve against it."""
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(PipelineConfig)}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        cfg = PipelineConfig(**raw)
        if overrides:
            for key, value in overrides.items():
                if value is not None:
                    setattr(cfg, key, value)
        base = os.path.dirname(os.path.abspath(path))
        for name in (
            "video_dir",
            "superpixel_dir",
            "flow_dir",
            "motion_dir",
            "proposal_manifest",
            "gt_dir",
            "out_dir",
        ):
            value = getattr(cfg, name)
            if value and not os.path.isabs(value):
                setattr(cfg, name, os.path.join(base, value))
        return cfg


@dataclass
class LoadedInputs:
    video: object
    superpixels: object
    flows: list
    motion_masks: np.ndarray
    gt_masks: dict  # frame index -> mask; empty when no ground truth
    stats: object
    graph: object


def _listdir(path, suffix):
    return sorted(n for n in os.listdir(path) if n.lower().endswith(suffix))


def _frame_index(name):
    match = _FRAME_INDEX_RE.search(os.path.splitext(name)[0])
    return int(match.group(1)) if match else None


def load_inputs(cfg: PipelineConfig, build=True) -> LoadedInputs:
    """Ingest stage: load and validate all inputs, derive stats and the graph."""
    try:
        video = load_video(cfg.video_dir)
        sp = load_superpixels(cfg.superpixel_dir, video.frame_count)
        flow_names = _listdir(cfg.flow_dir, ".flo")
        if len(flow_names) != video.frame_count - 1:
            raise DataError(
                f"expected {video.frame_count - 1} flow files, found {len(flow_names)}"
            )
        flows = [load_flow(os.path.join(cfg.flow_dir, n)) for n in flow_names]
        for k, flow in enumerate(flows):
            if flow.shape[:2] != (video.height, video.width):
                raise DataError(f"flow {flow_names[k]} dimensions differ from frames")
        motion_names = _listdir(cfg.motion_dir, ".pgm")
        if len(motion_names) != video.frame_count:
            raise DataError(
                f"expected {video.frame_count} motion masks, found {len(motion_names)}"
            )
        motion = np.stack(
            [load_mask(os.path.join(cfg.motion_dir, n)) for n in motion_names]
        )
        gt_masks = {}
        if cfg.gt_dir:
            for name in _listdir(cfg.gt_dir, ".pgm"):
                idx = _frame_index(name)
                if idx is None or idx >= video.frame_count:
                    raise DataError(f"cannot map ground-truth file {name} to a frame")
                gt_masks[idx] = load_mask(os.path.join(cfg.gt_dir, name))
        stats = compute_superpixel_stats(video, sp)
        graph = (
            build_graph(video, sp, flows, cfg.motion_coherence_weight, stats)
            if build
            else None
        )
    except (OSError, DataError, ValueError) as exc:
        raise StageError("ingest", exc) from exc
    return LoadedInputs(video, sp, flows, motion, gt_masks, stats, graph)


def pool_stage(cfg: PipelineConfig, inputs: LoadedInputs):
    """Score, filter, and pool proposals into per-class confidence fields."""
    try:
        proposals = load_proposal_manifest(cfg.proposal_manifest)
        for p in proposals:
            if not 0 <= p.frame < inputs.video.frame_count:
                raise DataError(f"proposal frame {p.frame} out of range")
            if p.mask.shape != (inputs.video.height, inputs.video.width):
                raise DataError("proposal mask dimensions differ from frames")
        scored = score_proposals(proposals, inputs.motion_masks)
        classes = cfg.classes or sorted(
            {c for p in proposals for c in p.class_confidences}
        )
        if not classes:
            raise DataError("no classes found in proposals or config")
        pooled = {}
        for cls in classes:
            retained = filter_by_confidence(scored, cls, cfg.confidence_threshold)
            pooled[cls] = pool_confidence(retained, cls, inputs.superpixels)
        return pooled
    except (OSError, DataError, ValueError) as exc:
        raise StageError("pool", exc) from exc


def adapt_stage(cfg: PipelineConfig, inputs: LoadedInputs, pooled):
    """Diffuse each class's pooled field over the space-time graph."""
    from .propagation import ConvergenceError

    try:
        prop_cfg = cfg.propagation_config()
        return {
            cls: adapt_confidence(fieldv, inputs.graph, prop_cfg)
            for cls, fieldv in sorted(pooled.items())
        }
    except (ConvergenceError, DataError, ValueError) as exc:
        raise StageError("adapt", exc) from exc


def segment_stage(cfg: PipelineConfig, inputs: LoadedInputs, confidences, write=True):
    """Fit color models, minimize the labeling energy, rasterize masks."""
    try:
        masks = {}
        for cls, fieldv in sorted(confidences.items()):
            (obj_colors, obj_w), (bg_colors, bg_w) = gmm_mod.sample_training_sets(
                fieldv, inputs.stats
            )
            gmm_obj = gmm_mod.fit_gmm(
                obj_colors, obj_w, cfg.gmm_components, seed=cfg.gmm_seed
            )
            gmm_bg = gmm_mod.fit_gmm(
                bg_colors, bg_w, cfg.gmm_components, seed=cfg.gmm_seed + 1
            )
            colors = np.concatenate(inputs.stats.mean_color, axis=0)
            problem = mrf_mod.build_problem(
                inputs.graph,
                fieldv.flat(),
                colors,
                gmm_obj,
                gmm_bg,
                cfg.lambda_object,
                cfg.lambda_spatial,
                cfg.lambda_temporal,
            )
            labeling = mrf_mod.solve_binary(problem)
            masks[cls] = mrf_mod.rasterize(labeling, inputs.superpixels)
            if write:
                mask_dir = os.path.join(cfg.out_dir, "masks", cls)
                os.makedirs(mask_dir, exist_ok=True)
                for t in range(inputs.video.frame_count):
                    write_pgm(
                        os.path.join(mask_dir, f"frame_{t:04d}.pgm"),
                        masks[cls][t].astype(np.uint8) * 255,
                    )
                render_overlay(
                    inputs.video, masks[cls], os.path.join(cfg.out_dir, "overlays", cls)
                )
                with open(
                    os.path.join(cfg.out_dir, f"gmm_{cls}.json"), "w", encoding="utf-8"
                ) as fh:
                    fh.write(
                        json.dumps(
                            {
                                "object": json.loads(gmm_obj.to_json()),
                                "background": json.loads(gmm_bg.to_json()),
                            },
                            sort_keys=True,
                        )
                    )
        return masks
    except (OSError, DataError, ValueError) as exc:
        raise StageError("segment", exc) from exc


def eval_stage(cfg: PipelineConfig, inputs: LoadedInputs, masks, write=True):
    """Compare predicted masks with ground truth on the annotated frames."""
    try:
        report = EvalReport()
        if inputs.gt_masks:
            annotated = sorted(inputs.gt_masks)
            gt_list = {t: inputs.gt_masks[t] for t in annotated}
            for cls, pred in sorted(masks.items()):
                pred_list = {t: pred[t] for t in annotated}
                errors = frame_pixel_errors(pred_list, gt_list, annotated)
                report.add(
                    cfg.video_id,
                    cls,
                    iou(pred_list, gt_list, annotated),
                    iou_macro(pred_list, gt_list, annotated),
                    pixel_error(pred_list, gt_list, annotated),
                    frame_errors=errors,
                )
        if write:
            os.makedirs(cfg.out_dir, exist_ok=True)
            report.write_csv(os.path.join(cfg.out_dir, "report.csv"))
        return report
    except (OSError, DataError, ValueError) as exc:
        raise StageError("eval", exc) from exc


def write_confidence_csv(path, confidence_fields):
    """Dump confidence fields as (frame, superpixel_id, class, value) rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("frame,superpixel_id,class,value\n")
        for cls, fieldv in sorted(confidence_fields.items()):
            for t, values in enumerate(fieldv.values):
                for s, v in enumerate(values):
                    fh.write(f"{t},{s},{cls},{v:.17g}\n")


def read_confidence_csv(path, derivation="pooled"):
    """Read confidence fields back; inverse of write_confidence_csv."""
    per_class = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "frame,superpixel_id,class,value":
            raise DataError(f"unexpected confidence CSV header in {path}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                frame_s, sp_s, cls, value_s = line.split(",")
                frame, sp_id, value = int(frame_s), int(sp_s), float(value_s)
            except ValueError as exc:
                raise DataError(f"malformed confidence row {lineno} in {path}") from exc
            per_class.setdefault(cls, {}).setdefault(frame, {})[sp_id] = value
    out = {}
    for cls, frames in per_class.items():
        values = []
        for t in range(max(frames) + 1):
            row = frames.get(t, {})
            if sorted(row) != list(range(len(row))):
                raise DataError(f"non-contiguous superpixel ids for frame {t} in {path}")
            values.append(np.array([row[s] for s in range(len(row))], dtype=np.float64))
        out[cls] = ConfidenceField(cls, values, derivation)
    return out


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    """Execute all stages, writing every artifact under cfg.out_dir."""
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    inputs = load_inputs(cfg)
    if cfg.dump_graph:
        inputs.graph.dump_csv(os.path.join(cfg.out_dir, "graph.csv"))
    pooled = pool_stage(cfg, inputs)
    write_confidence_csv(os.path.join(cfg.out_dir, "pooled.csv"), pooled)
    if cfg.skip_adaptation:
        confidences = pooled
    else:
        confidences = adapt_stage(cfg, inputs, pooled)
        write_confidence_csv(os.path.join(cfg.out_dir, "adapted.csv"), confidences)
    masks = segment_stage(cfg, inputs, confidences)
    return eval_stage(cfg, inputs, masks)
