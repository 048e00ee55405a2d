"""Figure rendering for pipeline and evaluation reports.

Figures are written next to the delimited artifacts so a report
directory is browsable on its own.  All rendering goes through the Agg
backend; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import EvalResult
from .measures import ScoredPair
from .refine import DROP_HIGH_REP, DROP_LOW_PCEP, KEEP, RefinementRecord

_DECISION_COLORS = {
    KEEP: "tab:green",
    DROP_LOW_PCEP: "tab:red",
    DROP_HIGH_REP: "tab:orange",
}


def save_score_figure(
    ranked: Sequence[ScoredPair], path: str | Path, *, measure: str, genre: str
) -> None:
    """Score against rank for the ranked candidate list."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(ranked) + 1), [p.score for p in ranked], marker=".", lw=1)
    ax.set_xlabel("rank")
    ax.set_ylabel(f"{measure} score")
    ax.set_title(f"{measure} candidates, {genre} genre")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_hits_figure(
    records: Sequence[RefinementRecord],
    path: str | Path,
    *,
    min_pcep_hits: int,
    max_rep_hits: int,
) -> None:
    """Candidate against control hit counts with the keep/drop thresholds.

    Both axes are shifted by one so zero-hit patterns survive the log
    scale.
    """
    fig, ax = plt.subplots(figsize=(6, 5))
    for decision, color in _DECISION_COLORS.items():
        xs = [r.pcep_hits + 1 for r in records if r.decision == decision]
        ys = [r.rep_hits + 1 for r in records if r.decision == decision]
        if xs:
            ax.scatter(xs, ys, s=24, color=color, label=decision, alpha=0.8)
    ax.axvline(min_pcep_hits + 1, color="gray", ls="--", lw=1)
    ax.axhline(max_rep_hits + 1, color="gray", ls="--", lw=1)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("candidate pattern hits + 1")
    ax.set_ylabel("random control hits + 1")
    ax.set_title("web-search refinement")
    if records:
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_stage_counts_figure(counts: Mapping[str, int], path: str | Path) -> None:
    """Bar chart of per-stage item counts from a pipeline report."""
    labels = list(counts)
    values = [counts[label] for label in labels]
    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(range(len(labels)), values, color="tab:blue")
    ax.bar_label(bars, fontsize=8)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("count")
    ax.set_title("pipeline stage counts")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_rater_figure(result: EvalResult, path: str | Path) -> None:
    """Per-rater mean correlation, dropped raters highlighted."""
    raters = sorted(result.per_rater_mean_correlation)
    scores = [result.per_rater_mean_correlation[r] for r in raters]
    dropped = set(result.dropped_raters)
    colors = ["tab:red" if r in dropped else "tab:blue" for r in raters]
    fig, ax = plt.subplots(figsize=(max(6, 0.4 * len(raters)), 4))
    ax.bar(range(len(raters)), scores, color=colors)
    ax.set_xticks(range(len(raters)))
    ax.set_xticklabels(raters, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("mean pairwise correlation")
    ax.set_title("rater agreement (dropped raters in red)")
    ax.axhline(0, color="gray", lw=1)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
