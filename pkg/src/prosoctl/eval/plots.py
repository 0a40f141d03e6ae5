"""SVG charts for experiment reports and listening-test summaries."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from prosoctl.eval.experiments import ExperimentReport  # noqa: E402

_FEATURE_LABELS = {"f0": "F0 (Hz)", "energy": "RMS", "duration": "frames"}


def plot_experiment(report: ExperimentReport, out_path):
    """Shift-response curves with one-standard-deviation whiskers per
    measured feature (one panel per measured key)."""
    keys = sorted(report.deltas)
    fig, axes = plt.subplots(1, len(keys), figsize=(3.2 * len(keys), 3.2), sharex=True)
    if len(keys) == 1:
        axes = [axes]
    for ax, key in zip(axes, keys):
        by_shift = report.deltas[key]
        shifts = sorted(by_shift)
        means = [by_shift[s].mean for s in shifts]
        stds = [by_shift[s].std for s in shifts]
        ax.errorbar(shifts, means, yerr=stds, marker="o", capsize=3, lw=1.2)
        ax.axhline(0.0, color="gray", lw=0.6)
        ax.set_title(key, fontsize=9)
        ax.set_xlabel("shift (fraction of sigma)")
        base = key.split("/")[-1]
        ax.set_ylabel(f"change in {_FEATURE_LABELS.get(base, base)}")
    fig.suptitle(f"{report.kind}: editing {report.feature}", fontsize=10)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def plot_mushra(summary_doc: dict, out_path):
    """Box plot: Q1..Q3 boxes, whiskers capped at 1.5 IQR, outlier points."""
    systems = summary_doc["systems"]
    stats = [{
        "label": s["system"],
        "med": s["median"], "q1": s["q1"], "q3": s["q3"],
        "whislo": s["whisker_low"], "whishi": s["whisker_high"],
        "fliers": s.get("outliers", []),
    } for s in systems]
    fig, ax = plt.subplots(figsize=(1.2 * len(systems) + 2, 3.6))
    ax.bxp(stats, showfliers=True)
    ax.set_ylabel("rating")
    ax.set_ylim(-5, 105)
    ax.set_title("listening test ratings")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def plot_report_file(report_path, out_path):
    """Dispatch on the report JSON: experiment, reproducibility, or MUSHRA."""
    doc = json.loads(Path(report_path).read_text(encoding="utf-8"))
    if "systems" in doc:
        plot_mushra(doc, out_path)
    elif "reports" in doc:  # reproducibility: overlay one curve per seed
        _plot_repro(doc, out_path)
    else:
        plot_experiment(ExperimentReport.from_doc(doc), out_path)


def _plot_repro(doc: dict, out_path):
    feature = doc["feature"]
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    for seed, rep_doc in sorted(doc["reports"].items()):
        rep = ExperimentReport.from_doc(rep_doc)
        by_shift = rep.deltas[feature]
        shifts = sorted(by_shift)
        ax.plot(shifts, [by_shift[s].mean for s in shifts], marker="o", lw=1.0,
                label=f"seed {seed}")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("shift (fraction of sigma)")
    ax.set_ylabel(f"change in {_FEATURE_LABELS.get(feature, feature)}")
    ax.set_title(f"reproducibility: editing {feature}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
