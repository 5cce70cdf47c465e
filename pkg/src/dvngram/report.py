"""Experiment reports: delimited metrics plus rendered figures.

Every evaluation writes a TSV and a JSON with the same numbers, and PNG
figures next to them (per-run accuracy bars; training-objective curves
when embeddings were trained). Rendering is headless.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


@dataclass
class MetricsReport:
    label: str
    mode: str
    accuracies: list[float]
    chosen_c: list[float]
    wall_seconds: float
    config: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return sum(self.accuracies) / len(self.accuracies)


def write_metrics_tsv(report: MetricsReport, path) -> None:
    """run<TAB>accuracy<TAB>chosen_c rows, then a mean row."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("run\taccuracy\tchosen_c\n")
        for i, (acc, c) in enumerate(zip(report.accuracies, report.chosen_c)):
            fh.write(f"{i}\t{acc:.6f}\t{c:g}\n")
        fh.write(f"mean\t{report.mean_accuracy:.6f}\t-\n")


def write_metrics_json(report: MetricsReport, path) -> None:
    payload = asdict(report)
    payload["mean_accuracy"] = report.mean_accuracy
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_epochs_tsv(epoch_reports, path) -> None:
    """Per-epoch training trace: run, epoch, mean objective, seconds.

    `epoch_reports` is a list per run of EpochReport lists.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("run\tepoch\tmean_objective\tpairs\tseconds\n")
        for run, reports in enumerate(epoch_reports):
            for r in reports:
                fh.write(f"{run}\t{r.epoch}\t{r.mean_objective:.8f}"
                         f"\t{r.pairs_processed}\t{r.wall_seconds:.3f}\n")


def plot_accuracies(report: MetricsReport, path) -> None:
    """Bar chart of per-run test accuracy with the mean as a line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    runs = range(len(report.accuracies))
    ax.bar(runs, [a * 100 for a in report.accuracies], color="#4878b0")
    ax.axhline(report.mean_accuracy * 100, color="#d65f5f", lw=1.5,
               label=f"mean {report.mean_accuracy * 100:.2f}%")
    ax.set_xlabel("run")
    ax.set_ylabel("test accuracy (%)")
    ax.set_title(report.label)
    ax.set_xticks(list(runs))
    lo = min(report.accuracies) * 100
    ax.set_ylim(max(0.0, lo - 5), 100)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_objectives(epoch_reports, path) -> None:
    """Mean training objective per epoch, one line per run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for run, reports in enumerate(epoch_reports):
        ax.plot([r.epoch for r in reports],
                [r.mean_objective for r in reports],
                marker="o", ms=3, label=f"run {run}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean pair objective")
    ax.set_title("training objective")
    if epoch_reports:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
