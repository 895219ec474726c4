"""Composition quality metrics: pairwise ROC/AUC, Bradley-Terry ranking,
and dynamics-trajectory reports."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

BT_MAX_ITERATIONS = 10_000
BT_TOL = 1e-8
BT_SMOOTHING = 0.01


class UndefinedAucError(ValueError):
    """Raised when the labels contain only one class."""


class DisconnectedPreferencesError(ValueError):
    """Raised when the comparison graph does not connect all items."""


def canonical_pair(a, b):
    if a == b:
        raise ValueError(f"self-pair ({a!r}, {a!r}) is not allowed")
    return (a, b) if a <= b else (b, a)


@dataclass
class RocCurve:
    """ROC points from (0,0) to (1,1) plus the trapezoidal area under them."""

    points: list            # [(fpr, tpr), ...]
    auc: float
    thresholds: list = field(default_factory=list)


def pairwise_roc(scores: dict, labels: dict) -> RocCurve:
    """ROC over labeled clip pairs scored by coherence.

    `scores` and `labels` map unordered pairs to a real score and a binary
    coherent/not-coherent label.  Thresholds sweep the distinct score values
    (ties grouped); AUC is the trapezoid area.  Both classes must be present.
    """
    lab = {canonical_pair(*k): bool(v) for k, v in labels.items()}
    sco = {canonical_pair(*k): float(v) for k, v in scores.items()}
    missing = sorted(set(lab) - set(sco))
    if missing:
        raise ValueError(f"labeled pairs without scores: {missing}")
    unlabeled = sorted(set(sco) - set(lab))
    if unlabeled:
        raise ValueError(f"scored pairs without labels: {unlabeled}")
    y = np.array([lab[k] for k in sorted(lab)], dtype=bool)
    s = np.array([sco[k] for k in sorted(lab)], dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError("AUC is undefined: labels contain a single class")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    points = [(0.0, 0.0)]
    thresholds = []
    tp = fp = 0
    i = 0
    while i < len(s_sorted):
        j = i
        while j < len(s_sorted) and s_sorted[j] == s_sorted[i]:
            tp += bool(y_sorted[j])
            fp += not y_sorted[j]
            j += 1
        thresholds.append(float(s_sorted[i]))
        points.append((fp / n_neg, tp / n_pos))
        i = j
    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(points, auc, thresholds)


@dataclass
class PairwisePreferences:
    """Win counts between methods: wins[a][b] = times a was preferred over b."""

    items: list
    wins: np.ndarray

    def __post_init__(self):
        self.wins = np.asarray(self.wins, dtype=np.float64)
        n = len(self.items)
        if self.wins.shape != (n, n):
            raise ValueError(f"wins matrix must be {n}x{n}, got {self.wins.shape}")
        if np.any(self.wins < 0) or not np.all(np.isfinite(self.wins)):
            raise ValueError("win counts must be finite and non-negative")
        if np.any(np.diagonal(self.wins) != 0):
            raise ValueError("wins diagonal must be 0")


@dataclass
class BTScores:
    items: list
    scores: np.ndarray       # positive, normalized to sum 1
    iterations: int
    converged: bool
    smoothed: bool


def bradley_terry(prefs: PairwisePreferences, max_iterations: int = BT_MAX_ITERATIONS,
                  tol: float = BT_TOL) -> BTScores:
    """Maximum-likelihood preference scores under P(a beats b) = s_a/(s_a+s_b).

    Fit with the standard multiplicative minorization update until the
    largest relative score change drops below `tol`.  Items with zero wins
    would be driven to 0, so in that case 0.01 is added to every off-diagonal
    count and the result is flagged as smoothed.  The comparison graph must
    be connected.
    """
    n = len(prefs.items)
    if n == 1:
        return BTScores(list(prefs.items), np.array([1.0]), 0, True, False)
    wins = prefs.wins.copy()

    games = wins + wins.T
    adjacency = games > 0
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in np.nonzero(adjacency[i])[0]:
            if j not in seen:
                seen.add(int(j))
                frontier.append(int(j))
    if len(seen) < n:
        missing = [prefs.items[i] for i in range(n) if i not in seen]
        raise DisconnectedPreferencesError(
            f"comparison graph is disconnected; unreachable items: {missing}")

    smoothed = bool(np.any(wins.sum(axis=1) == 0))
    if smoothed:
        wins = wins + BT_SMOOTHING * (1.0 - np.eye(n))
        games = wins + wins.T

    total_wins = wins.sum(axis=1)
    s = np.full(n, 1.0 / n)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        pair_sums = s[:, None] + s[None, :]
        np.fill_diagonal(pair_sums, 1.0)   # diagonal is unused (games there are 0)
        denom = (games / pair_sums).sum(axis=1)
        s_new = total_wins / denom
        s_new /= s_new.sum()
        change = float(np.max(np.abs(s_new - s) / s))
        s = s_new
        if change < tol:
            converged = True
            break
    return BTScores(list(prefs.items), s, iterations, converged, smoothed)


@dataclass
class DynamicsReport:
    """Dynamics scores along the composed order plus their rank trend."""

    rows: list               # [(position, phi), ...]
    spearman: float


def dynamics_report(order, dynamics) -> DynamicsReport:
    """Dynamics along a composed order with the position-vs-phi Spearman
    correlation (0 by convention when either side is constant)."""
    phi = np.asarray(dynamics, dtype=np.float64)
    if sorted(order) != list(range(len(phi))):
        raise ValueError("order must be a permutation of 0..n-1")
    values = [float(phi[i]) for i in order]
    if len(values) < 2 or len(set(values)) == 1:
        rho = 0.0
    else:
        rho = float(stats.spearmanr(np.arange(len(values)), values).statistic)
    return DynamicsReport(list(enumerate(values)), rho)


def load_labels_json(path) -> dict:
    """Read ``{"pairs": [{"a", "b", "coherent"}]}`` into a pair->bool map."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if "pairs" not in doc:
        raise ValueError(f"{path}: labels file lacks a 'pairs' field")
    labels = {}
    for entry in doc["pairs"]:
        pair = canonical_pair(entry["a"], entry["b"])
        labels[pair] = bool(entry["coherent"])
    return labels


def load_preferences_json(path) -> PairwisePreferences:
    """Read ``{"items": [...], "wins": [[...]]}`` into PairwisePreferences."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if "items" not in doc or "wins" not in doc:
        raise ValueError(f"{path}: preferences file needs 'items' and 'wins'")
    return PairwisePreferences(list(doc["items"]), np.asarray(doc["wins"], dtype=np.float64))
