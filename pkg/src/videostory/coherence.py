"""Two-stream fusion: coherence scores, baseline composition, coherence matrix.

Both trained streams are run forward over a growing prefix of clips; their
next-clip probability vectors are fused convexly into coherence scores.
This produces the baseline ordering (pure greedy over fused scores) and the
full pairwise coherence matrix consumed by the story ranker.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rnn import RnnParams, forward_step, next_clip_probs
from .util import atomic_write_text, canonical_json


@dataclass
class TwoStreamModel:
    """Semantic and motion stream weights plus the fusion weight on semantics."""

    semantic: RnnParams
    motion: RnnParams
    fusion_weight: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ValueError(f"fusion weight must lie in [0, 1], got {self.fusion_weight}")


def select_initial_clip(clips) -> int:
    """Index of the clip with the smallest dynamics score (ties: lowest index)."""
    clips = list(clips)
    if not clips:
        raise ValueError("clip list is empty")
    phi = [c.dynamics for c in clips]
    return int(np.argmin(phi))


def fused_coherence(p_semantic: dict, p_motion: dict, fusion_weight: float) -> dict:
    """Convex combination of the two streams' probability maps, per candidate."""
    if p_semantic.keys() != p_motion.keys():
        raise ValueError("stream probability maps cover different candidate sets")
    lam = float(fusion_weight)
    return {k: lam * p_semantic[k] + (1.0 - lam) * p_motion[k] for k in sorted(p_semantic)}


def _check_clips(model: TwoStreamModel, clips):
    clips = list(clips)
    if not clips:
        raise ValueError("clip list is empty")
    sem = np.stack([c.semantic for c in clips])
    mot = np.stack([c.motion for c in clips])
    if sem.shape[1] != model.semantic.input_dim:
        raise ValueError(
            f"semantic stream expects dim {model.semantic.input_dim}, clips have {sem.shape[1]}")
    if mot.shape[1] != model.motion.input_dim:
        raise ValueError(
            f"motion stream expects dim {model.motion.input_dim}, clips have {mot.shape[1]}")
    return clips, sem, mot


def _stream_probs(y: np.ndarray, feats: np.ndarray, candidates: list) -> dict:
    probs = next_clip_probs(y, feats[candidates])
    return dict(zip(candidates, probs))


def greedy_compose(model: TwoStreamModel, clips) -> list:
    """Baseline composition: repeatedly append the most coherent remaining clip.

    Starts at the lowest-dynamics clip, runs both streams forward over the
    chosen prefix and picks the argmax of the fused next-clip probabilities
    (ties broken by lowest clip index).  Returns a permutation of 0..n-1.
    """
    clips, sem, mot = _check_clips(model, clips)
    n = len(clips)
    order = [select_initial_clip(clips)]
    remaining = [i for i in range(n) if i != order[0]]
    h_s = np.zeros(model.semantic.hidden_dim)
    h_m = np.zeros(model.motion.hidden_dim)
    while remaining:
        h_s, y_s = forward_step(model.semantic, sem[order[-1]], h_s)
        h_m, y_m = forward_step(model.motion, mot[order[-1]], h_m)
        fused = fused_coherence(
            _stream_probs(y_s, sem, remaining),
            _stream_probs(y_m, mot, remaining),
            model.fusion_weight,
        )
        best = max(sorted(fused), key=lambda k: fused[k])
        order.append(best)
        remaining.remove(best)
    return order


def coherence_matrix(model: TwoStreamModel, clips, rnn_order) -> np.ndarray:
    """Pairwise fused coherence conditioned on the composed order's prefixes.

    Runs both streams forward along `rnn_order`; after consuming the prefix
    that ends at clip j, row j holds the fused probabilities over all other
    clips.  The diagonal is 0 and each off-diagonal row sums to 1.
    """
    clips, sem, mot = _check_clips(model, clips)
    n = len(clips)
    if sorted(rnn_order) != list(range(n)):
        raise ValueError("rnn_order must be a permutation of 0..n-1")
    d = np.zeros((n, n))
    if n == 1:
        return d
    h_s = np.zeros(model.semantic.hidden_dim)
    h_m = np.zeros(model.motion.hidden_dim)
    for j in rnn_order:
        h_s, y_s = forward_step(model.semantic, sem[j], h_s)
        h_m, y_m = forward_step(model.motion, mot[j], h_m)
        others = [i for i in range(n) if i != j]
        fused = fused_coherence(
            _stream_probs(y_s, sem, others),
            _stream_probs(y_m, mot, others),
            model.fusion_weight,
        )
        for i, score in fused.items():
            d[j, i] = score
    return d


def write_coherence_csv(path, matrix: np.ndarray) -> None:
    """Export an n-by-n coherence matrix as full-precision CSV."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"coherence matrix must be square, got shape {m.shape}")
    lines = [",".join(repr(float(x)) for x in row) for row in m]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_coherence_csv(path) -> np.ndarray:
    m = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{path}: coherence matrix must be square, got shape {m.shape}")
    return m


def write_ordering_json(path, order_ids, source: str) -> None:
    """Export a composed ordering as ``{"order": [ids...], "source": ...}``."""
    atomic_write_text(path, canonical_json({"order": list(order_ids), "source": source}))


def read_ordering_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if "order" not in doc:
        raise ValueError(f"{path}: ordering file lacks an 'order' field")
    return doc
