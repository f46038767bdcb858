"""Map-estimation metrics: Chamfer distance, per-class AP, and mAP.

The Chamfer distance between two point sets is the sum of the two mean
nearest-neighbor distances (one per direction), which makes its value
symmetric under exchanging the sets. Elements are compared after
resampling both polylines to a fixed vertex count.

AP follows the detection convention: predictions are pooled across scenes,
sorted by confidence (ties keep input order), and greedily matched to the
unmatched ground-truth element of the same scene with the smallest Chamfer
distance; a match counts as a true positive when that distance is strictly
below the threshold. The PR curve is integrated with the precision
envelope (all-point interpolation) by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ALL_CLASSES, ElementClass, MapElement, Polyline, VectorMap, resample
from .probmap import ProbMapElement, ProbVectorMap


@dataclass
class ChamferConfig:
    resample_count: int = 20

    def __post_init__(self):
        if self.resample_count < 2:
            raise ValueError("resample_count must be >= 2")


@dataclass
class APConfig:
    """Settings for AP/mAP evaluation."""

    thresholds: tuple[float, ...] = (0.5, 1.0, 1.5)
    classes: tuple[ElementClass, ...] = ALL_CLASSES
    resample_count: int = 20
    matching: str = "greedy"           # or "hungarian" (sensitivity analysis)
    interpolation: str = "all_point"   # or "101_point"
    granularity: str = "pooled"        # or "per_scene"

    def __post_init__(self):
        t = tuple(float(v) for v in self.thresholds)
        if not t or any(v <= 0 for v in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be positive and strictly increasing")
        self.thresholds = t
        if self.matching not in ("greedy", "hungarian"):
            raise ValueError(f"unknown matching mode {self.matching!r}")
        if self.interpolation not in ("all_point", "101_point"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if self.granularity not in ("pooled", "per_scene"):
            raise ValueError(f"unknown granularity {self.granularity!r}")


def chamfer(s1, s2) -> float:
    """Chamfer distance between two non-empty 2D point sets.

    sum over x in S1 of min_y |x - y| / |S1|
    plus sum over y in S2 of min_x |y - x| / |S2|

    The final reductions use exact (correctly rounded) summation so the
    result matches a naive double loop bit for bit.
    """
    a = np.asarray(s1, dtype=float).reshape(-1, 2)
    b = np.asarray(s2, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("chamfer requires non-empty point sets")
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    term1 = math.fsum(d.min(axis=1)) / len(a)
    term2 = math.fsum(d.min(axis=0)) / len(b)
    return term1 + term2


def _element_points(obj, count: int) -> np.ndarray:
    """Fixed-count vertex set of a map element or polyline (mu for
    probabilistic elements).

    An element that already has exactly ``count`` vertices is used
    verbatim: its vertices are the predicted point set, and re-resampling
    a closed element would drift points around the loop (chords cut the
    corners, shortening the perimeter).
    """
    if isinstance(obj, ProbMapElement):
        pts, closed = obj.mu, obj.closed
    elif isinstance(obj, MapElement):
        pts, closed = obj.vertices, obj.closed
    elif isinstance(obj, Polyline):
        pts, closed = obj.vertices, obj.closed
    else:
        pts, closed = np.asarray(obj, dtype=float), False
    if len(pts) == count:
        return np.array(pts, dtype=float)
    return resample(Polyline(np.array(pts), closed=closed), count).vertices


def chamfer_elements(a, b, cfg: ChamferConfig | None = None) -> float:
    """Chamfer distance between two elements after fixed-count resampling."""
    cfg = cfg or ChamferConfig()
    return chamfer(_element_points(a, cfg.resample_count),
                   _element_points(b, cfg.resample_count))


# ---------------------------------------------------------------------------
# Matching and AP
# ---------------------------------------------------------------------------

def _scene_chamfer_matrix(preds, gts, count) -> np.ndarray:
    mat = np.empty((len(preds), len(gts)))
    pred_pts = [_element_points(p, count) for p in preds]
    gt_pts = [_element_points(g, count) for g in gts]
    for i, pp in enumerate(pred_pts):
        for j, gp in enumerate(gt_pts):
            mat[i, j] = chamfer(pp, gp)
    return mat


def _greedy_labels(scene_preds: list[list], scene_gts: list[list], threshold: float,
                   count: int) -> tuple[np.ndarray, list[float], int]:
    """TP/FP labels in pooled confidence order under greedy matching.

    Returns (labels, matched chamfer values, total ground-truth count).
    """
    pooled = [(si, pi) for si, preds in enumerate(scene_preds) for pi in range(len(preds))]
    conf = np.array([scene_preds[si][pi].confidence for si, pi in pooled])
    order = np.argsort(-conf, kind="stable")
    mats = [_scene_chamfer_matrix(p, g, count) for p, g in zip(scene_preds, scene_gts)]
    unmatched = [list(range(len(g))) for g in scene_gts]
    labels = np.zeros(len(pooled), dtype=bool)
    matched_values: list[float] = []
    for rank, k in enumerate(order):
        si, pi = pooled[k]
        cands = unmatched[si]
        if not cands:
            continue
        row = mats[si][pi, cands]
        j = int(np.argmin(row))
        if row[j] < threshold:
            labels[rank] = True
            matched_values.append(float(row[j]))
            cands.pop(j)
    n_gt = sum(len(g) for g in scene_gts)
    return labels, matched_values, n_gt


def _hungarian_labels(scene_preds, scene_gts, threshold, count):
    from scipy.optimize import linear_sum_assignment

    pooled = [(si, pi) for si, preds in enumerate(scene_preds) for pi in range(len(preds))]
    conf = np.array([scene_preds[si][pi].confidence for si, pi in pooled])
    order = np.argsort(-conf, kind="stable")
    tp_flag = {}
    matched_values = []
    for si, (preds, gts) in enumerate(zip(scene_preds, scene_gts)):
        if not preds or not gts:
            continue
        mat = _scene_chamfer_matrix(preds, gts, count)
        rows, cols = linear_sum_assignment(mat)
        for r, c in zip(rows, cols):
            if mat[r, c] < threshold:
                tp_flag[(si, r)] = True
                matched_values.append(float(mat[r, c]))
    labels = np.array([tp_flag.get(pooled[k], False) for k in order])
    n_gt = sum(len(g) for g in scene_gts)
    return labels, matched_values, n_gt


def _ap_from_labels(labels: np.ndarray, n_gt: int, interpolation: str) -> float | None:
    """Area under the PR curve built from confidence-ordered TP/FP labels."""
    if n_gt == 0:
        return 0.0 if len(labels) else None
    if len(labels) == 0:
        return 0.0
    tp = np.cumsum(labels)
    ranks = np.arange(1, len(labels) + 1)
    recall = tp / n_gt
    precision = tp / ranks
    if interpolation == "101_point":
        grid = np.linspace(0.0, 1.0, 101)
        best = np.zeros_like(grid)
        for i, r in enumerate(grid):
            mask = recall >= r
            best[i] = precision[mask].max() if mask.any() else 0.0
        return float(best.mean())
    mrec = np.concatenate([[0.0], recall])
    mpre = np.concatenate([[0.0], precision])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    return float(np.sum((mrec[1:] - mrec[:-1]) * mpre[1:]))


def average_precision(preds: list, gts: list, element_class: ElementClass,
                      threshold: float, cfg: APConfig | None = None) -> float | None:
    """Single-scene AP for one class at one Chamfer threshold.

    Returns None when there are neither predictions nor ground truths (an
    undefined cell, excluded from averaging).
    """
    cfg = cfg or APConfig()
    preds = [p for p in preds if p.element_class == element_class]
    gts = [g for g in gts if g.element_class == element_class]
    labeler = _hungarian_labels if cfg.matching == "hungarian" else _greedy_labels
    labels, _, n_gt = labeler([preds], [gts], threshold, cfg.resample_count)
    return _ap_from_labels(labels, n_gt, cfg.interpolation)


@dataclass
class MapEvalReport:
    """AP per (class, threshold) plus their mean and matched-pair stats."""

    classes: tuple[ElementClass, ...]
    thresholds: tuple[float, ...]
    ap: np.ndarray                      # (C, T), NaN for undefined cells
    map_score: float
    mean_matched_chamfer: np.ndarray    # (C,), NaN when nothing matched
    n_pred: np.ndarray
    n_gt: np.ndarray

    def to_dict(self) -> dict:
        def clean(v):
            return None if (isinstance(v, float) and math.isnan(v)) else v

        return {
            "classes": [c.value for c in self.classes],
            "thresholds": list(self.thresholds),
            "ap": [[clean(float(v)) for v in row] for row in self.ap],
            "mAP": clean(float(self.map_score)),
            "mean_matched_chamfer": [clean(float(v)) for v in self.mean_matched_chamfer],
            "n_pred": [int(v) for v in self.n_pred],
            "n_gt": [int(v) for v in self.n_gt],
        }


def evaluate_scenes(pairs: list[tuple[ProbVectorMap | VectorMap, VectorMap]],
                    cfg: APConfig | None = None) -> MapEvalReport:
    """Pooled multi-scene evaluation of predicted maps against ground truth."""
    cfg = cfg or APConfig()
    classes = tuple(cfg.classes)
    ap = np.full((len(classes), len(cfg.thresholds)), np.nan)
    matched_chamfer = np.full(len(classes), np.nan)
    n_pred = np.zeros(len(classes), dtype=int)
    n_gt = np.zeros(len(classes), dtype=int)
    labeler = _hungarian_labels if cfg.matching == "hungarian" else _greedy_labels

    for ci, cls in enumerate(classes):
        scene_preds = [pred.by_class(cls) for pred, _ in pairs]
        scene_gts = [gt.by_class(cls) for _, gt in pairs]
        n_pred[ci] = sum(len(p) for p in scene_preds)
        n_gt[ci] = sum(len(g) for g in scene_gts)
        for ti, thr in enumerate(cfg.thresholds):
            if cfg.granularity == "per_scene":
                vals = []
                for p, g in zip(scene_preds, scene_gts):
                    labels, _, gt_count = labeler([p], [g], thr, cfg.resample_count)
                    cell = _ap_from_labels(labels, gt_count, cfg.interpolation)
                    if cell is not None:
                        vals.append(cell)
                ap[ci, ti] = float(np.mean(vals)) if vals else np.nan
            else:
                labels, matched, gt_count = labeler(scene_preds, scene_gts, thr,
                                                    cfg.resample_count)
                cell = _ap_from_labels(labels, gt_count, cfg.interpolation)
                ap[ci, ti] = np.nan if cell is None else cell
                if thr == cfg.thresholds[-1] and matched:
                    matched_chamfer[ci] = float(np.mean(matched))

    defined = ap[~np.isnan(ap)]
    map_score = float(defined.mean()) if len(defined) else float("nan")
    return MapEvalReport(classes, cfg.thresholds, ap, map_score, matched_chamfer,
                         n_pred, n_gt)


def evaluate_map(pred_map: ProbVectorMap | VectorMap, gt_map: VectorMap,
                 cfg: APConfig | None = None) -> MapEvalReport:
    """Evaluate one predicted map against one ground-truth map."""
    return evaluate_scenes([(pred_map, gt_map)], cfg)
