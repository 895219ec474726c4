"""Story ranking by greedy maximization of coherence plus activity dynamics.

The objective over a selected subset A of clips is

    L(A) = F(A) + gamma * U(A)
    F(A) = (1/|A|) * sum_{i in A} sum_j d[i, j]      (coherence reward)
    U(A) = sum_{i in A} exp(-phi_i)                  (low-activity reward)

Selection starts from the lowest-dynamics clip and adds, one at a time, the
remaining clip with the largest marginal gain until every clip is selected;
the selection order is the story order.  Gains may be negative: selection
never stops early.

Because of the 1/|A| normalization the marginal gain of a fixed clip can
grow as the selection grows, so cached gains are not upper bounds and the
classic lazy-greedy shortcut is unsound as-is.  Both implementations here
therefore rank candidates by the prefix-free score

    u_a = rowsum_a / (k + 1) + gamma * exp(-phi_a)        (k = |A|)

which differs from the true gain only by a candidate-independent offset
-S_k / (k (k+1)), with S_k the selected row-sum total.  With nonnegative
coherence entries (validated on construction) u_a is non-increasing in k,
so cached u values are valid upper bounds and the lazy variant provably
reproduces the naive selection, ties included.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from .util import atomic_write_text, canonical_json


def validate_coherence_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"coherence matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("coherence matrix contains non-finite entries")
    if m.min() < 0.0 or m.max() > 1.0:
        raise ValueError("coherence entries must lie in [0, 1]")
    if np.any(np.diagonal(m) != 0.0):
        raise ValueError("coherence diagonal must be exactly 0")
    return m


@dataclass
class StoryGraph:
    """Fully connected clip graph: coherence edge weights plus node dynamics."""

    coherence: np.ndarray
    dynamics: np.ndarray
    gamma: float = 0.3

    def __post_init__(self):
        self.coherence = validate_coherence_matrix(self.coherence)
        self.dynamics = np.asarray(self.dynamics, dtype=np.float64)
        if self.dynamics.shape != (self.coherence.shape[0],):
            raise ValueError(
                f"dynamics length {self.dynamics.shape} does not match "
                f"{self.coherence.shape[0]} nodes")
        if not np.all(np.isfinite(self.dynamics)) or np.any(self.dynamics < 0.0):
            raise ValueError("dynamics scores must be finite and >= 0")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")

    @property
    def n(self) -> int:
        return self.coherence.shape[0]


def _selected_indices(selected) -> list:
    idx = sorted(int(i) for i in selected)
    if len(set(idx)) != len(idx):
        raise ValueError("selection contains duplicate indices")
    return idx


def facility_location(selected, graph: StoryGraph) -> float:
    """Mean, over selected clips, of their total coherence toward all clips."""
    idx = _selected_indices(selected)
    if not idx:
        raise ValueError("facility location is undefined for an empty selection")
    return float(graph.coherence[idx, :].sum() / len(idx))


def activity_dynamics(selected, graph: StoryGraph) -> float:
    """Sum of exp(-phi) over the selected clips; 0 for the empty selection."""
    idx = _selected_indices(selected)
    if not idx:
        return 0.0
    return float(np.exp(-graph.dynamics[idx]).sum())


def objective(selected, graph: StoryGraph) -> float:
    """Combined selection objective L = F + gamma * U."""
    return facility_location(selected, graph) + graph.gamma * activity_dynamics(selected, graph)


@dataclass
class RankResult:
    """Greedy trajectory: selection order, per-step gains, objective values.

    `objective_values[i]` is the from-scratch objective after i+1 selections;
    `gains` has one entry per clip added after the initial one.
    `gain_evaluations` counts candidate-score computations (instrumentation).
    """

    order: list
    gains: list = field(default_factory=list)
    objective_values: list = field(default_factory=list)
    gain_evaluations: int = 0


def _initial_clip(graph: StoryGraph) -> int:
    return int(np.argmin(graph.dynamics))


def _candidate_scores(graph: StoryGraph):
    row_sums = graph.coherence.sum(axis=1)
    ad_terms = graph.gamma * np.exp(-graph.dynamics)
    return row_sums, ad_terms


def greedy_rank(graph: StoryGraph) -> RankResult:
    """Reference greedy selection; ties broken by lowest clip index."""
    if graph.n < 1:
        raise ValueError("graph is empty")
    row_sums, ad_terms = _candidate_scores(graph)
    order = [_initial_clip(graph)]
    values = [objective(order, graph)]
    gains = []
    remaining = [i for i in range(graph.n) if i != order[0]]
    evals = 0
    while remaining:
        k = len(order)
        best = None
        best_u = -np.inf
        for a in remaining:
            u = row_sums[a] / (k + 1.0) + ad_terms[a]
            evals += 1
            if u > best_u:
                best, best_u = a, u
        new_value = objective(order + [best], graph)
        gains.append(new_value - values[-1])
        values.append(new_value)
        order.append(best)
        remaining.remove(best)
    return RankResult(order, gains, values, evals)


def lazy_greedy_rank(graph: StoryGraph) -> RankResult:
    """Lazy variant of :func:`greedy_rank`; identical output on every input.

    Candidate scores are cached in a max-heap and refreshed only when popped
    stale; a popped entry computed at the current selection size is accepted
    immediately, which is exact because cached scores can only overestimate
    (see module docstring).
    """
    if graph.n < 1:
        raise ValueError("graph is empty")
    row_sums, ad_terms = _candidate_scores(graph)
    order = [_initial_clip(graph)]
    values = [objective(order, graph)]
    gains = []
    evals = 0
    heap = []
    for a in range(graph.n):
        if a == order[0]:
            continue
        u = row_sums[a] / 2.0 + ad_terms[a]
        evals += 1
        heapq.heappush(heap, (-u, a, 1))
    while heap:
        k = len(order)
        while True:
            neg_u, a, tag = heapq.heappop(heap)
            if tag == k:
                break
            u = row_sums[a] / (k + 1.0) + ad_terms[a]
            evals += 1
            heapq.heappush(heap, (-u, a, k))
        new_value = objective(order + [a], graph)
        gains.append(new_value - values[-1])
        values.append(new_value)
        order.append(a)
    return RankResult(order, gains, values, evals)


def write_rank_json(path, result: RankResult, graph: StoryGraph, clip_ids=None) -> None:
    """Export a ranking result with its gain and objective trajectories."""
    ids = list(clip_ids) if clip_ids is not None else list(range(graph.n))
    doc = {
        "order": [ids[i] for i in result.order],
        "gains": [float(g) for g in result.gains],
        "objective_trajectory": [float(v) for v in result.objective_values],
        "gamma": float(graph.gamma),
    }
    atomic_write_text(path, canonical_json(doc))


def dynamics_rows(order, dynamics, clip_ids=None) -> list:
    """(position, clip_id, phi) rows for a composed order."""
    ids = list(clip_ids) if clip_ids is not None else list(range(len(order)))
    phi = np.asarray(dynamics, dtype=np.float64)
    return [(pos, ids[i], float(phi[i])) for pos, i in enumerate(order)]


def write_dynamics_csv(path, rows) -> None:
    """Export (position, clip_id, phi) rows as CSV with a header."""
    lines = ["position,clip_id,phi"]
    for pos, clip_id, phi in rows:
        lines.append(f"{pos},{clip_id},{repr(float(phi))}")
    atomic_write_text(path, "\n".join(lines) + "\n")
