"""Motion features from dense optical-flow fields.

A flow field is a numpy array of shape (height, width, 2) holding per-pixel
(u, v) displacements in pixels/frame.  From sequences of such fields this
module computes magnitude-weighted orientation histograms (HOOF), their
spatial-pyramid concatenation (SPP-HOOF), and per-clip activity scores.
"""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_flow(flow) -> np.ndarray:
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"flow field must have shape (height, width, 2), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("flow field must contain at least one pixel")
    return arr


def hoof(flow, bins: int) -> np.ndarray:
    """Magnitude-weighted histogram of flow orientations over [0, 2pi).

    Each pixel contributes its flow magnitude to the bin containing
    atan2(v, u).  Bins are uniform and half-open: an angle exactly on a
    boundary falls into the higher-indexed bin, and 2pi wraps to bin 0.
    The histogram is normalized to sum 1; an all-zero field yields the
    all-zero histogram so that "no motion" stays distinguishable.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    arr = _as_flow(flow)
    u = arr[..., 0].ravel()
    v = arr[..., 1].ravel()
    mag = np.hypot(u, v)
    ang = np.arctan2(v, u)
    ang = np.where(ang < 0.0, ang + TWO_PI, ang)
    idx = np.floor(ang * (bins / TWO_PI)).astype(np.intp)
    idx[idx >= bins] = 0
    hist = np.bincount(idx, weights=mag, minlength=bins)
    total = hist.sum()
    if total > 0.0:
        hist /= total
    return hist


def spp_hoof_frame(flow, bins: int, pyramid_m: int) -> np.ndarray:
    """SPP-HOOF descriptor of one flow field: M*M cell HOOFs plus the global HOOF.

    The field is partitioned into an M-by-M grid of contiguous blocks with
    boundaries at floor(i*width/M) and floor(j*height/M); cells are emitted
    row-major.  The result has dimension bins * (M**2 + 1).
    """
    if pyramid_m < 1:
        raise ValueError("pyramid_m must be >= 1")
    arr = _as_flow(flow)
    height, width = arr.shape[0], arr.shape[1]
    if height < pyramid_m or width < pyramid_m:
        raise ValueError(
            f"flow field of {height}x{width} pixels cannot carry a "
            f"{pyramid_m}x{pyramid_m} pyramid"
        )
    row_edges = [(j * height) // pyramid_m for j in range(pyramid_m + 1)]
    col_edges = [(i * width) // pyramid_m for i in range(pyramid_m + 1)]
    parts = []
    for j in range(pyramid_m):
        for i in range(pyramid_m):
            cell = arr[row_edges[j]:row_edges[j + 1], col_edges[i]:col_edges[i + 1]]
            parts.append(hoof(cell, bins))
    parts.append(hoof(arr, bins))
    return np.concatenate(parts)


def clip_motion_feature(frames, bins: int, pyramid_m: int) -> np.ndarray:
    """Clip-level motion descriptor: elementwise mean of per-frame SPP-HOOFs."""
    frames = list(frames)
    if not frames:
        raise ValueError("clip must contain at least one flow frame")
    arrs = [_as_flow(f) for f in frames]
    shape = arrs[0].shape
    for k, a in enumerate(arrs[1:], start=1):
        if a.shape != shape:
            raise ValueError(f"frame {k} has shape {a.shape[:2]}, expected {shape[:2]}")
    feats = np.stack([spp_hoof_frame(a, bins, pyramid_m) for a in arrs])
    return feats.mean(axis=0)


def dynamics_score(frames) -> float:
    """Mean flow magnitude over every pixel of every frame in the clip."""
    frames = list(frames)
    if not frames:
        raise ValueError("clip must contain at least one flow frame")
    total = 0.0
    count = 0
    for f in frames:
        arr = _as_flow(f)
        total += float(np.hypot(arr[..., 0], arr[..., 1]).sum())
        count += arr.shape[0] * arr.shape[1]
    return total / count


@dataclass
class ClipFeatures:
    """Per-clip feature record: semantic vector, motion vector, activity score."""

    clip_id: str
    semantic: np.ndarray
    motion: np.ndarray
    dynamics: float

    def __post_init__(self):
        self.semantic = np.asarray(self.semantic, dtype=np.float64)
        self.motion = np.asarray(self.motion, dtype=np.float64)
        if self.semantic.ndim != 1:
            raise ValueError("semantic feature must be a 1-D vector")
        if self.motion.ndim != 1:
            raise ValueError("motion feature must be a 1-D vector")
        self.dynamics = float(self.dynamics)
        if not np.isfinite(self.dynamics) or self.dynamics < 0.0:
            raise ValueError(f"dynamics score must be finite and >= 0, got {self.dynamics}")
