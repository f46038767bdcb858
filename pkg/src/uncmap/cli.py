"""Command-line pipeline: generate datasets, evaluate, calibrate, compare.

Exit codes: 0 success, 2 usage or config error, 3 data error. Every
report embeds a reproducibility block (config hash, seeds, tool version);
all randomness flows from seeds recorded in the manifest, so rerunning a
command on the same inputs reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, calibration, io, map_eval, pred_eval, synth
from .probmap import mean_map
from .pred_eval import TrajectorySet


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise io.ConfigError(f"invalid {what}: {text!r}") from exc
    if not values:
        raise io.ConfigError(f"empty {what}")
    return values


def _out_dir(args, manifest_path: Path) -> Path:
    return Path(args.out) if args.out else manifest_path.parent / "reports"


def _load_manifest(args) -> dict:
    return io.load_manifest(Path(args.manifest))


def cmd_generate(args) -> int:
    cfg = io.load_dataset_config(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    dataset = synth.build_dataset(cfg, threads=args.threads)
    manifest_path = io.write_dataset(dataset, args.out)
    print(f"wrote {len(dataset.records)} scenes to {manifest_path}")
    return 0


def cmd_eval_map(args) -> int:
    manifest = _load_manifest(args)
    cfg = map_eval.APConfig(thresholds=_parse_floats(args.ap_thresholds, "thresholds"),
                            resample_count=args.resample_count,
                            matching=args.matching)
    pairs = [(observed, gt) for _, gt, observed, _, _ in io.iter_scene_files(manifest)]
    if not pairs:
        raise io.DataError("manifest contains no scenes")
    report = map_eval.evaluate_scenes(pairs, cfg)
    effective = {"command": "eval-map", "thresholds": list(cfg.thresholds),
                 "resample_count": cfg.resample_count, "matching": cfg.matching}
    out = _out_dir(args, Path(args.manifest))
    io.write_json(out / "eval_map.json", {
        "report": report.to_dict(),
        "reproducibility": io.reproducibility_block(effective, manifest),
    })
    rows = []
    for ci, cls in enumerate(report.classes):
        for ti, thr in enumerate(report.thresholds):
            v = report.ap[ci, ti]
            rows.append([cls.value, thr, "" if np.isnan(v) else float(v)])
    rows.append(["__mean__", "", float(report.map_score)])
    io.write_csv(out / "eval_map.csv", ["class", "threshold", "ap"], rows)
    print(f"mAP = {report.map_score:.6f} over {len(pairs)} scenes -> {out}")
    return 0


def _trajectory_sets(manifest) -> tuple[list[TrajectorySet], list[list]]:
    sets, rows = [], []
    for scene, _, _, agents, modes in io.iter_scene_files(manifest):
        for ai, (agent, agent_modes) in enumerate(zip(agents, modes)):
            if agent_modes.size == 0:
                raise io.DataError(
                    f"scene {scene['id']} agent {ai} has no predicted modes; "
                    "generate the dataset with a predictor")
            sets.append(TrajectorySet(agent_modes, agent.future))
            rows.append([scene["id"], ai])
    return sets, rows


def cmd_eval_pred(args) -> int:
    manifest = _load_manifest(args)
    sets, keys = _trajectory_sets(manifest)
    if not sets:
        raise io.DataError("manifest contains no agents")
    report = pred_eval.evaluate_trajectories(sets, args.miss_threshold)
    effective = {"command": "eval-pred", "miss_threshold": args.miss_threshold}
    out = _out_dir(args, Path(args.manifest))
    io.write_json(out / "eval_pred.json", {
        "report": report.to_dict(),
        "reproducibility": io.reproducibility_block(effective, manifest),
    })
    rows = [
        key + [pred_eval.min_ade(ts), pred_eval.min_fde(ts),
               int(pred_eval.miss(ts, args.miss_threshold))]
        for key, ts in zip(keys, sets)
    ]
    io.write_csv(out / "eval_pred_agents.csv",
                 ["scene", "agent", "min_ade", "min_fde", "miss"], rows)
    print(f"minADE={report.minADE:.4f} minFDE={report.minFDE:.4f} "
          f"MR={report.MR:.4f} over {report.n_agents} agents -> {out}")
    return 0


def cmd_calibrate(args) -> int:
    manifest = _load_manifest(args)
    levels = _parse_floats(args.levels, "levels")
    parts = []
    for _, gt, observed, _, _ in io.iter_scene_files(manifest):
        parts.append(calibration.match_vertex_pairs(
            observed, gt, threshold=args.match_threshold,
            resample_count=args.resample_count))
    if not parts or not any(len(p.mu) for p in parts):
        raise io.DataError("no matched vertices; nothing to calibrate")
    mu = np.vstack([p.mu for p in parts])
    b = np.vstack([p.b for p in parts])
    gt_pts = np.vstack([p.gt for p in parts])
    probs = np.vstack([p.class_probs for p in parts])
    labels = np.concatenate([p.labels for p in parts])
    cov = calibration.coverage_arrays(mu, b, gt_pts, levels)
    rel = calibration.reliability(probs, labels, bins=args.bins)
    effective = {"command": "calibrate", "levels": list(levels), "bins": args.bins,
                 "match_threshold": args.match_threshold,
                 "resample_count": args.resample_count}
    out = _out_dir(args, Path(args.manifest))
    io.write_json(out / "calibration.json", {
        "coverage": cov.to_dict(),
        "reliability": rel.to_dict(),
        "reproducibility": io.reproducibility_block(effective, manifest),
    })
    io.write_csv(out / "coverage.csv",
                 ["level", "empirical", "empirical_x", "empirical_y", "n"],
                 [[lv, float(c), float(cx), float(cy), cov.n]
                  for lv, c, cx, cy in zip(cov.nominal_levels, cov.empirical_coverage,
                                           cov.coverage_x, cov.coverage_y)])
    io.write_csv(out / "reliability.csv",
                 ["bin_lo", "bin_hi", "mean_confidence", "accuracy", "count"],
                 [[float(rel.bin_edges[i]), float(rel.bin_edges[i + 1]),
                   "" if np.isnan(rel.bin_confidence[i]) else float(rel.bin_confidence[i]),
                   "" if np.isnan(rel.bin_accuracy[i]) else float(rel.bin_accuracy[i]),
                   int(rel.bin_count[i])]
                  for i in range(len(rel.bin_count))])
    cov_txt = ", ".join(f"{lv:g}:{c:.4f}" for lv, c in
                        zip(cov.nominal_levels, cov.empirical_coverage))
    print(f"coverage {cov_txt}; ECE={rel.ece:.4f} -> {out}")
    return 0


def cmd_analyze_uncertainty(args) -> int:
    manifest = _load_manifest(args)
    edges = _parse_floats(args.bin_edges, "bin edges")
    groups: dict[str, tuple[list[float], list[float]]] = {}

    def add(group: str, dist, scale):
        keys, vals = groups.setdefault(group, ([], []))
        keys.extend(dist)
        vals.extend(scale)

    n_scenes = 0
    for scene, gt, observed, _, _ in io.iter_scene_files(manifest):
        n_scenes += 1
        ego = observed.ego_pose.position
        for el in observed.elements:
            dist = np.hypot(el.mu[:, 0] - ego[0], el.mu[:, 1] - ego[1])
            scale = el.b.mean(axis=1)
            add("all", dist, scale)
            add(f"class:{el.element_class.value}", dist, scale)
            add(f"condition:{scene['condition']}", dist, scale)
            add(f"condition:{scene['condition']}|class:{el.element_class.value}",
                dist, scale)
    if n_scenes == 0:
        raise io.DataError("manifest contains no scenes")
    rows = []
    stats = {}
    for group in sorted(groups):
        keys, vals = groups[group]
        stat = pred_eval.binned_ci(keys, vals, edges)
        stats[group] = stat
        for i in range(len(stat.count)):
            rows.append([group, float(stat.bin_edges[i]), float(stat.bin_edges[i + 1]),
                         "" if np.isnan(stat.mean[i]) else float(stat.mean[i]),
                         float(stat.ci95_half_width[i]), int(stat.count[i])])
    effective = {"command": "analyze-uncertainty", "bin_edges": list(edges)}
    out = _out_dir(args, Path(args.manifest))
    io.write_csv(out / "uncertainty_bins.csv",
                 ["group", "bin_lo", "bin_hi", "mean_b", "ci95_half_width", "count"],
                 rows)
    io.write_json(out / "uncertainty_bins.json", {
        "groups": {
            g: {"bin_edges": [float(v) for v in s.bin_edges],
                "mean_b": [None if np.isnan(v) else float(v) for v in s.mean],
                "ci95_half_width": [float(v) for v in s.ci95_half_width],
                "count": [int(v) for v in s.count]}
            for g, s in stats.items()
        },
        "reproducibility": io.reproducibility_block(effective, manifest),
    })
    print(f"binned scale statistics for {len(groups)} groups -> {out}")
    return 0


def cmd_compare_predictors(args) -> int:
    manifest = _load_manifest(args)
    blind_sets, weighted_sets = [], []
    for _, _, observed, agents, _ in io.iter_scene_files(manifest):
        plain = mean_map(observed)
        for agent in agents:
            blind = synth.predict_blind(agent.history, plain, args.modes)
            weighted = synth.predict_weighted(agent.history, observed, args.modes,
                                              args.lam, args.b0)
            blind_sets.append(TrajectorySet(blind, agent.future))
            weighted_sets.append(TrajectorySet(weighted, agent.future))
    if not blind_sets:
        raise io.DataError("manifest contains no agents")
    rep_blind = pred_eval.evaluate_trajectories(blind_sets, args.miss_threshold)
    rep_weighted = pred_eval.evaluate_trajectories(weighted_sets, args.miss_threshold)

    def delta(a: float, b: float) -> float | None:
        return None if a == 0 else (b - a) / a * 100.0

    deltas = {
        "minADE": delta(rep_blind.minADE, rep_weighted.minADE),
        "minFDE": delta(rep_blind.minFDE, rep_weighted.minFDE),
        "MR": delta(rep_blind.MR, rep_weighted.MR),
    }
    effective = {"command": "compare-predictors", "modes": args.modes,
                 "lam": args.lam, "b0": args.b0, "miss_threshold": args.miss_threshold}
    out = _out_dir(args, Path(args.manifest))
    io.write_json(out / "compare_predictors.json", {
        "blind": rep_blind.to_dict(),
        "weighted": rep_weighted.to_dict(),
        "delta_pct": deltas,
        "reproducibility": io.reproducibility_block(effective, manifest),
    })
    rows = []
    for name in ("minADE", "minFDE", "MR"):
        b_v = getattr(rep_blind, name)
        w_v = getattr(rep_weighted, name)
        d = deltas[name]
        rows.append([name, b_v, w_v, "" if d is None else f"{d:+.1f}%"])
    io.write_csv(out / "compare_predictors.csv",
                 ["metric", "blind", "weighted", "delta_pct"], rows)
    for name in ("minADE", "minFDE", "MR"):
        d = deltas[name]
        print(f"{name}: blind={getattr(rep_blind, name):.4f} "
              f"weighted={getattr(rep_weighted, name):.4f}"
              + (f" ({d:+.1f}%)" if d is not None else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uncmap",
        description="Probabilistic vectorized-map pipeline: synthetic scenes, "
                    "map and prediction metrics, calibration analysis.")
    parser.add_argument("--version", action="version", version=f"uncmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset and manifest")
    p.add_argument("--config", required=True, help="dataset config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval-map", help="AP/mAP of observed maps against ground truth")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--ap-thresholds", default="0.5,1.0,1.5")
    p.add_argument("--resample-count", type=int, default=20)
    p.add_argument("--matching", choices=["greedy", "hungarian"], default="greedy")
    p.set_defaults(func=cmd_eval_map)

    p = sub.add_parser("eval-pred", help="minADE/minFDE/MR of stored predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--miss-threshold", type=float, default=2.0)
    p.set_defaults(func=cmd_eval_pred)

    p = sub.add_parser("calibrate", help="interval coverage and classification ECE")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--levels", default="0.5,0.9")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--match-threshold", type=float, default=1.5)
    p.add_argument("--resample-count", type=int, default=20)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("analyze-uncertainty",
                       help="binned emitted scale vs. distance, per class/condition")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--bin-edges", default="0,5,10,15,20,25,30,35")
    p.set_defaults(func=cmd_analyze_uncertainty)

    p = sub.add_parser("compare-predictors",
                       help="side-by-side metrics for the two baseline predictors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--lam", type=float, default=synth.DEFAULT_LAMBDA)
    p.add_argument("--b0", type=float, default=synth.DEFAULT_B0)
    p.add_argument("--miss-threshold", type=float, default=2.0)
    p.set_defaults(func=cmd_compare_predictors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except io.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except io.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main())
