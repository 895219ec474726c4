"""Figure rendering for the report paths; every plot is saved to a file."""

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path) -> None:
    # render to a temp file then rename so errors never leave partial output
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=150)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def save_roc_figure(curve, path, title="Pairwise coherence ROC") -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    fpr = [p[0] for p in curve.points]
    tpr = [p[1] for p in curve.points]
    ax.plot(fpr, tpr, marker="o", ms=3, label=f"AUC = {curve.auc:.3f}")
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_dynamics_figure(positions, phis, path, title="Dynamics along the story") -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(positions, phis, marker="o", ms=4)
    ax.set_xlabel("story position")
    ax.set_ylabel("dynamics score")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_training_figure(epochs, mean_lls, path, title="Training log-likelihood") -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(epochs, mean_lls)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean log-likelihood")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_objective_figure(values, path, title="Greedy objective trajectory") -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(range(1, len(values) + 1), values, marker="o", ms=4)
    ax.set_xlabel("clips selected")
    ax.set_ylabel("objective value")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_bt_figure(items, scores, path, title="Global preference scores") -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(range(len(items)), scores)
    ax.set_xticks(range(len(items)))
    ax.set_xticklabels([str(i) for i in items], rotation=30, ha="right")
    ax.set_ylabel("normalized score")
    ax.set_title(title)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    _save(fig, path)
