"""Are the emitted uncertainties trustworthy?

Regression calibration: the fraction of ground-truth coordinates falling
inside central Laplace credibility intervals should equal the nominal
level. Classification calibration: top-1 reliability diagram and expected
calibration error (ECE).

Pairing a predicted map with ground truth for coverage is inherently
approximate (point sets have no canonical correspondence); the rule here
is deterministic: elements are matched greedily as in map evaluation, the
ground-truth polyline is resampled to the prediction's vertex count
(predicted vertices are never resampled, since their scales belong to
specific vertices), oriented forward or reversed to minimize the summed
pairing distance, and then paired by index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import CLASS_INDEX, VectorMap, resample
from .map_eval import _scene_chamfer_matrix
from .probmap import LaplaceParam, ProbVectorMap, softmax


def laplace_interval(param, level: float) -> tuple[float, float]:
    """Central credibility interval of a Laplace coordinate.

    The interval mu +/- b * ln(1 / (1 - level)) contains probability mass
    ``level``. ``param`` is a LaplaceParam or a (mu, b) pair.

    Args:
        param: location/scale of the coordinate.
        level: nominal mass in (0, 1).

    Returns:
        (lo, hi) interval endpoints in meters.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    if isinstance(param, LaplaceParam):
        mu, b = param.mu, param.b
    else:
        mu, b = float(param[0]), float(param[1])
    if b <= 0.0:
        raise ValueError("b must be positive")
    half = -b * math.log1p(-level)
    return mu - half, mu + half


@dataclass
class CoverageReport:
    """Empirical interval coverage at each nominal level."""

    nominal_levels: tuple[float, ...]
    empirical_coverage: np.ndarray      # pooled over x and y
    coverage_x: np.ndarray
    coverage_y: np.ndarray
    n: int                              # pooled coordinate count

    def to_dict(self) -> dict:
        return {
            "nominal_levels": list(self.nominal_levels),
            "empirical_coverage": [float(v) for v in self.empirical_coverage],
            "coverage_x": [float(v) for v in self.coverage_x],
            "coverage_y": [float(v) for v in self.coverage_y],
            "n": self.n,
        }


def coverage_arrays(mu: np.ndarray, b: np.ndarray, gt: np.ndarray,
                    levels) -> CoverageReport:
    """Coverage from (N, 2) location/scale/ground-truth arrays."""
    mu = np.asarray(mu, dtype=float)
    b = np.asarray(b, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if mu.size == 0:
        raise ValueError("coverage needs at least one pair")
    if mu.shape != b.shape or mu.shape != gt.shape:
        raise ValueError("mu, b, gt must share one shape")
    levels = tuple(float(v) for v in levels)
    for lv in levels:
        if not 0.0 < lv < 1.0:
            raise ValueError("levels must lie strictly between 0 and 1")
    resid = np.abs(gt - mu)
    pooled = np.empty(len(levels))
    cov_x = np.empty(len(levels))
    cov_y = np.empty(len(levels))
    for i, lv in enumerate(levels):
        half = -b * math.log1p(-lv)
        inside = resid <= half
        pooled[i] = inside.mean()
        cov_x[i] = inside[:, 0].mean()
        cov_y[i] = inside[:, 1].mean()
    return CoverageReport(levels, pooled, cov_x, cov_y, resid.size)


def coverage(pairs, levels) -> CoverageReport:
    """Coverage from (ProbVertex, ground-truth point) pairs.

    x and y residuals are pooled; per-axis coverage is also reported.
    """
    if not pairs:
        raise ValueError("coverage needs at least one pair")
    mu = np.array([[v.x.mu, v.y.mu] for v, _ in pairs])
    b = np.array([[v.x.b, v.y.b] for v, _ in pairs])
    gt = np.array([[p[0], p[1]] for _, p in pairs], dtype=float)
    return coverage_arrays(mu, b, gt, levels)


@dataclass
class MatchedVertices:
    """Index-aligned vertex pairs between a predicted and a true map."""

    mu: np.ndarray          # (N, 2)
    b: np.ndarray           # (N, 2)
    gt: np.ndarray          # (N, 2)
    class_probs: np.ndarray  # (N, C) softmax of the predicted logits
    labels: np.ndarray      # (N,) true class index from the matched element


def match_vertex_pairs(pred_map: ProbVectorMap, gt_map: VectorMap,
                       threshold: float = 1.5,
                       resample_count: int = 20) -> MatchedVertices:
    """Pair predicted vertices with ground-truth points for calibration.

    Elements are matched per class with the greedy confidence-ordered rule
    at the given Chamfer threshold; unmatched elements contribute nothing.
    """
    mu_parts, b_parts, gt_parts, prob_parts, label_parts = [], [], [], [], []
    classes = {el.element_class for el in pred_map.elements}
    classes |= {el.element_class for el in gt_map.elements}
    for cls in sorted(classes, key=lambda c: c.value):
        preds = pred_map.by_class(cls)
        gts = gt_map.by_class(cls)
        if not preds or not gts:
            continue
        mat = _scene_chamfer_matrix(preds, gts, resample_count)
        order = np.argsort(-np.array([p.confidence for p in preds]), kind="stable")
        unmatched = list(range(len(gts)))
        for pi in order:
            if not unmatched:
                break
            row = mat[pi, unmatched]
            j = int(np.argmin(row))
            if row[j] >= threshold:
                continue
            gi = unmatched.pop(j)
            pred = preds[pi]
            gt_poly = gts[gi].as_polyline()
            gt_pts = resample(gt_poly, pred.n_vertices).vertices
            fwd = np.hypot(*(pred.mu - gt_pts).T).sum()
            rev_pts = gt_pts[::-1]
            rev = np.hypot(*(pred.mu - rev_pts).T).sum()
            if rev < fwd:
                gt_pts = rev_pts
            mu_parts.append(pred.mu)
            b_parts.append(pred.b)
            gt_parts.append(gt_pts)
            prob_parts.append(softmax(pred.class_logits))
            label_parts.append(np.full(pred.n_vertices, CLASS_INDEX[cls], dtype=int))
    if not mu_parts:
        return MatchedVertices(np.empty((0, 2)), np.empty((0, 2)), np.empty((0, 2)),
                               np.empty((0, len(CLASS_INDEX))), np.empty(0, dtype=int))
    return MatchedVertices(np.vstack(mu_parts), np.vstack(b_parts), np.vstack(gt_parts),
                           np.vstack(prob_parts), np.concatenate(label_parts))


@dataclass
class ReliabilityReport:
    """Top-1 reliability diagram data plus the expected calibration error."""

    bin_edges: np.ndarray
    bin_confidence: np.ndarray   # NaN for empty bins
    bin_accuracy: np.ndarray     # NaN for empty bins
    bin_count: np.ndarray
    ece: float

    def to_dict(self) -> dict:
        def clean(v):
            return None if math.isnan(v) else float(v)

        return {
            "bin_edges": [float(v) for v in self.bin_edges],
            "bin_confidence": [clean(float(v)) for v in self.bin_confidence],
            "bin_accuracy": [clean(float(v)) for v in self.bin_accuracy],
            "bin_count": [int(v) for v in self.bin_count],
            "ece": float(self.ece),
        }


def reliability(probs, labels, bins: int = 10) -> ReliabilityReport:
    """Top-1 reliability over equal-width confidence bins on [0, 1].

    Args:
        probs: (N, C) predicted probability vectors.
        labels: (N,) true class indices.
        bins: number of confidence bins.

    Returns:
        ReliabilityReport with per-bin mean confidence, accuracy, counts,
        and ECE = sum over bins of (n_b / N) * |accuracy_b - confidence_b|.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.ndim != 2 or len(probs) != len(labels):
        raise ValueError("probs must be (N, C) with labels of length N")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if np.any(probs < 0) or not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise ValueError("rows of probs must be probability vectors")
    conf = probs.max(axis=1)
    correct = probs.argmax(axis=1) == labels
    idx = np.minimum((conf * bins).astype(int), bins - 1)
    edges = np.linspace(0.0, 1.0, bins + 1)
    bin_conf = np.full(bins, np.nan)
    bin_acc = np.full(bins, np.nan)
    count = np.zeros(bins, dtype=int)
    ece = 0.0
    for b_i in range(bins):
        mask = idx == b_i
        count[b_i] = int(mask.sum())
        if count[b_i]:
            bin_conf[b_i] = conf[mask].mean()
            bin_acc[b_i] = correct[mask].mean()
            ece += count[b_i] / len(conf) * abs(bin_acc[b_i] - bin_conf[b_i])
    return ReliabilityReport(edges, bin_conf, bin_acc, count, float(ece))
