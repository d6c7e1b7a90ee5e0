"""Run outputs: delimited reports, a text summary, and rendered figures.

Figures are written with the Agg backend so runs work headless. PNG
metadata is pinned empty to keep reruns byte-stable.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": None}}


def write_report_csv(path: str | Path, report) -> None:
    """One row per (repetition, stage): accuracy and vector width."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["repetition", "seed", "stage", "accuracy",
                         "n_components"])
        for rep, seed, stage, acc, n_comp in report.rows:
            writer.writerow([rep, seed, stage, repr(float(acc)), n_comp])


def write_confusion_csv(path: str | Path, classes: tuple[str, ...],
                        matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["true\\predicted"] + list(classes))
        for cls, row in zip(classes, matrix):
            writer.writerow([cls] + [int(v) for v in row])


def write_summary(path: str | Path, report) -> None:
    """Human-readable per-stage accuracy summary."""
    lines = ["stage accuracies (mean +/- sd over repetitions)", ""]
    for stage in report.stages:
        accs = report.stage_accuracies(stage)
        lines.append(f"  {stage:28s} {report.stage_mean(stage):.4f} "
                     f"+/- {report.stage_sd(stage):.4f}  ({len(accs)} reps)")
    lines.append("")
    lines.append(f"classes: {', '.join(report.classes)}")
    lines.append(f"repetitions: {len(set(r for r, *_ in report.rows))}")
    Path(path).write_text("\n".join(lines) + "\n")


def plot_stage_accuracies(path: str | Path, report) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    positions = np.arange(len(report.stages))
    means = [report.stage_mean(s) for s in report.stages]
    sds = [report.stage_sd(s) for s in report.stages]
    ax.bar(positions, means, yerr=sds, capsize=4, color="#4878a8")
    ax.set_xticks(positions)
    ax.set_xticklabels(report.stages, rotation=15, ha="right")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("accuracy by stage")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_confusion(path: str | Path, classes: tuple[str, ...],
                   matrix: np.ndarray, title: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 5))
    image = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(classes)))
    ax.set_yticks(range(len(classes)))
    ax.set_xticklabels(classes, rotation=45, ha="right")
    ax.set_yticklabels(classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(title)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_loss_history(path: str | Path, loss_history: list[float]) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(loss_history) + 1), loss_history, color="#a84848")
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    ax.set_title("autoencoder training loss")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def write_run_outputs(out_dir: str | Path, report) -> None:
    """Write the delimited outputs and render figures next to them."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_csv(out_dir / "report.csv", report)
    write_summary(out_dir / "summary.txt", report)
    for stage in report.stages:
        write_confusion_csv(out_dir / f"confusion_{stage}.csv",
                            report.classes, report.confusions[stage])
    figures = out_dir / "figures"
    figures.mkdir(exist_ok=True)
    plot_stage_accuracies(figures / "accuracy_by_stage.png", report)
    for stage in report.stages:
        plot_confusion(figures / f"confusion_{stage}.png", report.classes,
                       report.confusions[stage], f"confusion: {stage}")
    if report.loss_history:
        plot_loss_history(figures / "autoencoder_loss.png", report.loss_history)
