"""Batch evaluation reports: delimited metrics, curve dumps, and figures.

Saliency maps and ground-truth masks are paired by identical filename. The
report directory receives `metrics.csv` (image,f_adaptive,auc),
`curves.json` (per-image threshold sweeps), and unless disabled the
rendered `pr_curves.png` and `f_curves.png` figures.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evaluation import PRCurve, adaptive_f_measure, auc, f_measure_curve, pr_curve
from .imgio import load_binary_mask, load_gray


@dataclass(frozen=True)
class ImageResult:
    name: str
    f_adaptive: float
    auc: float
    curve: PRCurve


@dataclass(frozen=True)
class BatchReport:
    results: list[ImageResult]

    @property
    def mean_f_adaptive(self) -> float:
        return float(np.mean([r.f_adaptive for r in self.results]))

    @property
    def mean_auc(self) -> float:
        return float(np.mean([r.auc for r in self.results]))


def match_directories(map_dir: str | Path, gt_dir: str | Path) -> list[tuple[str, Path, Path]]:
    """Pair map and ground-truth PNGs by filename, failing on any mismatch."""
    map_dir, gt_dir = Path(map_dir), Path(gt_dir)
    maps = {p.name: p for p in sorted(map_dir.glob("*.png"))}
    gts = {p.name: p for p in sorted(gt_dir.glob("*.png"))}
    missing_gt = sorted(set(maps) - set(gts))
    missing_map = sorted(set(gts) - set(maps))
    if missing_gt or missing_map:
        parts = []
        if missing_gt:
            parts.append(f"maps without ground truth: {missing_gt}")
        if missing_map:
            parts.append(f"ground truth without maps: {missing_map}")
        raise ValueError("; ".join(parts))
    if not maps:
        raise ValueError(f"no PNG files found in {map_dir!s}")
    return [(name, maps[name], gts[name]) for name in sorted(maps)]


def evaluate_batch(map_dir: str | Path, gt_dir: str | Path) -> BatchReport:
    results = []
    for name, map_path, gt_path in match_directories(map_dir, gt_dir):
        saliency = load_gray(map_path).astype(np.float64) / 255.0
        gt = load_binary_mask(gt_path)
        results.append(
            ImageResult(
                name=name,
                f_adaptive=adaptive_f_measure(saliency, gt),
                auc=auc(saliency, gt),
                curve=pr_curve(saliency, gt),
            )
        )
    return BatchReport(results=results)


def write_report(report: BatchReport, out_dir: str | Path, plots: bool = True) -> list[Path]:
    """Write metrics.csv, curves.json, and (optionally) the curve figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = out_dir / "metrics.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["image", "f_adaptive", "auc"])
        for r in report.results:
            writer.writerow([r.name, f"{r.f_adaptive:.6f}", f"{r.auc:.6f}"])
    written.append(csv_path)

    curves = {
        r.name: {
            "thresholds": r.curve.thresholds.tolist(),
            "precision": r.curve.precision.tolist(),
            "recall": r.curve.recall.tolist(),
            "tpr": r.curve.tpr.tolist(),
            "fpr": r.curve.fpr.tolist(),
        }
        for r in report.results
    }
    json_path = out_dir / "curves.json"
    json_path.write_text(json.dumps(curves))
    written.append(json_path)

    if plots:
        written.extend(_render_figures(report, out_dir))
    return written


def _render_figures(report: BatchReport, out_dir: Path) -> list[Path]:
    pr_path = out_dir / "pr_curves.png"
    fig, ax = plt.subplots(figsize=(5, 4))
    for r in report.results:
        ax.plot(r.curve.recall, r.curve.precision, alpha=0.6, label=r.name)
    mean_p = np.mean([r.curve.precision for r in report.results], axis=0)
    mean_r = np.mean([r.curve.recall for r in report.results], axis=0)
    ax.plot(mean_r, mean_p, "k-", linewidth=2, label="mean")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    if len(report.results) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(pr_path, dpi=120)
    plt.close(fig)

    f_path = out_dir / "f_curves.png"
    fig, ax = plt.subplots(figsize=(5, 4))
    f_curves = [f_measure_curve(r.curve) for r in report.results]
    for r, fc in zip(report.results, f_curves):
        ax.plot(r.curve.thresholds, fc, alpha=0.6, label=r.name)
    ax.plot(report.results[0].curve.thresholds, np.mean(f_curves, axis=0), "k-", linewidth=2, label="mean")
    ax.set_xlabel("Threshold")
    ax.set_ylabel("F-measure")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    if len(report.results) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(f_path, dpi=120)
    plt.close(fig)
    return [pr_path, f_path]
