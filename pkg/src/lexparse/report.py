"""Report rendering: delimited summary tables and matplotlib figures.

Consumes a records file (plus an optional baseline records file), writes
report.json, a tab-separated summary with Reading/Error/Total/Reduction
columns, and PNG figures for the reuse curve and OVC metrics.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import metrics
from .harness import ParseRecord
from .metrics import EpisodeReport


def render_summary_table(
    report: EpisodeReport, baseline: EpisodeReport | None = None
) -> str:
    """Tab-separated cost table; Reduction filled when a baseline is given."""
    lines = ["run\treading\terror\ttotal\treduction"]
    if baseline is not None:
        lines.append(
            f"baseline\t{baseline.reading_cost}\t{baseline.error_cost}"
            f"\t{baseline.total_cost}\t"
        )
        red = metrics.reduction(baseline.total_cost, report.total_cost)
        lines.append(
            f"with_lexicon\t{report.reading_cost}\t{report.error_cost}"
            f"\t{report.total_cost}\t-{red:.1f}%"
        )
    else:
        lines.append(
            f"with_lexicon\t{report.reading_cost}\t{report.error_cost}"
            f"\t{report.total_cost}\t"
        )
    return "\n".join(lines) + "\n"


def plot_reuse_curve(report: EpisodeReport, path: Path) -> None:
    curve = report.reuse.get("cumulative_reuse_curve", [])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(curve) + 1), curve, lw=1.5)
    ax.set_xlabel("parse step")
    ax.set_ylabel("cumulative reuse fraction")
    ax.set_ylim(0, 1)
    ax.set_title("Knowledge reuse over the episode")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ovc_metrics(
    report: EpisodeReport, path: Path, baseline: EpisodeReport | None = None
) -> None:
    labels = ["precision", "recall", "f1"]
    values = [report.ovc_precision, report.ovc_recall, report.ovc_f1]
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.35
    if baseline is not None:
        base_vals = [baseline.ovc_precision, baseline.ovc_recall, baseline.ovc_f1]
        ax.bar([i - width / 2 for i in range(3)], base_vals, width, label="baseline")
        ax.bar([i + width / 2 for i in range(3)], values, width, label="with lexicon")
        ax.legend()
    else:
        ax.bar(range(3), values, width * 2)
    ax.set_xticks(range(3), labels)
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    ax.set_title("OVC metrics (micro-averaged)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_cost(
    report: EpisodeReport, path: Path, baseline: EpisodeReport | None = None
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    runs = []
    if baseline is not None:
        runs.append(("baseline", baseline))
    runs.append(("with lexicon", report))
    x = range(len(runs))
    ax.bar(x, [r.reading_cost for _, r in runs], 0.5, label="reading")
    ax.bar(
        x,
        [r.error_cost for _, r in runs],
        0.5,
        bottom=[r.reading_cost for _, r in runs],
        label="error",
    )
    ax.set_xticks(list(x), [name for name, _ in runs])
    ax.set_ylabel("expert effort (units)")
    ax.set_title("Effort cost breakdown")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(
    records: list[ParseRecord],
    out_dir: str | Path,
    baseline_records: list[ParseRecord] | None = None,
) -> EpisodeReport:
    """Build the episode report and render all artifacts into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = metrics.build_report(records)
    baseline = metrics.build_report(baseline_records) if baseline_records else None
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    if baseline is not None:
        (out_dir / "baseline_report.json").write_text(
            json.dumps(baseline.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    (out_dir / "summary.tsv").write_text(
        render_summary_table(report, baseline), encoding="utf-8"
    )
    plot_reuse_curve(report, out_dir / "reuse_curve.png")
    plot_ovc_metrics(report, out_dir / "ovc_metrics.png", baseline)
    plot_cost(report, out_dir / "cost_breakdown.png", baseline)
    return report
