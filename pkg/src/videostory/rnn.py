"""Single-stream recurrent network for next-clip prediction.

A vanilla recurrent cell with rectified-linear activations is trained by
exact backpropagation through time to pick, at every step of a length-T
clip sequence, the true next clip out of the clips not yet consumed.  The
same machinery is instantiated twice by the coherence engine: once over
semantic vectors, once over motion vectors.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .util import atomic_write_bytes

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"VSRN"
CHECKPOINT_VERSION = 1
LR_FLOOR = 1e-6


class NumericError(ArithmeticError):
    """Raised when a computation produces or receives non-finite values."""


@dataclass
class RnnParams:
    """Weights of one stream: input-to-hidden, hidden-to-hidden, hidden-to-output.

    ``w_out`` maps the hidden state back to the input feature dimension so
    network outputs and clip features live in the same inner-product space.
    """

    w_in: np.ndarray    # (hidden_dim, input_dim)
    w_hh: np.ndarray    # (hidden_dim, hidden_dim)
    w_out: np.ndarray   # (input_dim, hidden_dim)

    def __post_init__(self):
        self.w_in = np.asarray(self.w_in, dtype=np.float64)
        self.w_hh = np.asarray(self.w_hh, dtype=np.float64)
        self.w_out = np.asarray(self.w_out, dtype=np.float64)
        h, d = self.w_in.shape
        if self.w_hh.shape != (h, h):
            raise ValueError(f"w_hh must be {(h, h)}, got {self.w_hh.shape}")
        if self.w_out.shape != (d, h):
            raise ValueError(f"w_out must be {(d, h)}, got {self.w_out.shape}")
        for name, w in (("w_in", self.w_in), ("w_hh", self.w_hh), ("w_out", self.w_out)):
            if not np.all(np.isfinite(w)):
                raise NumericError(f"{name} contains non-finite entries")

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_in.shape[0]


@dataclass
class Gradients:
    """Gradient triple matching the shapes of :class:`RnnParams`."""

    w_in: np.ndarray
    w_hh: np.ndarray
    w_out: np.ndarray


@dataclass
class ForwardTrace:
    """Per-step activations kept around for backpropagation."""

    pre_hidden: np.ndarray   # (steps, hidden_dim)
    hidden: np.ndarray       # (steps, hidden_dim)
    pre_out: np.ndarray      # (steps, input_dim)
    outputs: np.ndarray      # (steps, input_dim)


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults follow the published settings."""

    seq_len: int = 10
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-7
    epochs: int = 200
    seed: int = 0
    lr_decay_factor: float = 0.5
    patience: int = 5

    def __post_init__(self):
        if self.seq_len < 2:
            raise ValueError("seq_len must be >= 2")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.momentum < 0.0:
            raise ValueError("momentum must be >= 0")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.lr_decay_factor <= 1.0:
            raise ValueError("lr_decay_factor must lie in (0, 1]")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def to_dict(self) -> dict:
        return {
            "seq_len": self.seq_len,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "seed": self.seed,
            "lr_decay_factor": self.lr_decay_factor,
            "patience": self.patience,
        }


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _check_vector(name: str, vec, dim: int) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def forward_step(params: RnnParams, c_t, h_prev):
    """One recurrent step: returns (new hidden state, output vector).

    h_t = relu(W_in c_t + W_hh h_prev), y_t = relu(W_out h_t); the initial
    hidden state is the zero vector.
    """
    c = _check_vector("input", c_t, params.input_dim)
    h = _check_vector("hidden state", h_prev, params.hidden_dim)
    h_t = _relu(params.w_in @ c + params.w_hh @ h)
    y_t = _relu(params.w_out @ h_t)
    if not (np.all(np.isfinite(h_t)) and np.all(np.isfinite(y_t))):
        raise NumericError("forward step produced non-finite activations")
    return h_t, y_t


def forward_sequence(params: RnnParams, inputs) -> ForwardTrace:
    """Run the cell over a (steps, input_dim) array from the zero hidden state."""
    seq = np.asarray(inputs, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != params.input_dim:
        raise ValueError(f"inputs must have shape (steps, {params.input_dim}), got {seq.shape}")
    steps = seq.shape[0]
    pre_h = np.empty((steps, params.hidden_dim))
    hid = np.empty((steps, params.hidden_dim))
    pre_y = np.empty((steps, params.input_dim))
    out = np.empty((steps, params.input_dim))
    h = np.zeros(params.hidden_dim)
    for t in range(steps):
        pre_h[t] = params.w_in @ seq[t] + params.w_hh @ h
        h = _relu(pre_h[t])
        hid[t] = h
        pre_y[t] = params.w_out @ h
        out[t] = _relu(pre_y[t])
    if not (np.all(np.isfinite(pre_h)) and np.all(np.isfinite(pre_y))):
        raise NumericError("forward pass produced non-finite activations")
    return ForwardTrace(pre_h, hid, pre_y, out)


def next_clip_probs(y_t, candidates) -> np.ndarray:
    """Softmax over inner products of the output with each candidate feature.

    `candidates` is a (n, input_dim) array; returns n probabilities summing
    to 1, computed with max-subtraction for numerical stability.
    """
    y = np.asarray(y_t, dtype=np.float64)
    cands = np.asarray(candidates, dtype=np.float64)
    if cands.ndim != 2 or cands.shape[0] == 0:
        raise ValueError("candidate set must be a non-empty (n, dim) array")
    if cands.shape[1] != y.shape[0]:
        raise ValueError(f"candidate dim {cands.shape[1]} does not match output dim {y.shape[0]}")
    scores = cands @ y
    scores -= scores.max()
    p = np.exp(scores)
    p /= p.sum()
    return p


def _log_softmax_target(scores: np.ndarray, target: int) -> float:
    m = scores.max()
    lse = m + np.log(np.exp(scores - m).sum())
    return float(scores[target] - lse)


def sequence_log_likelihood(params: RnnParams, sequence) -> float:
    """Log-likelihood of a training sequence under remaining-set prediction.

    At step t the candidate set is exactly the clips at positions t+1..T of
    the sequence, so the step-t term is log softmax(y_t . c) evaluated at
    c_{t+1}.  Always <= 0; equals 0 when every step is forced.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise ValueError(f"sequence must be a (T, dim) array, got shape {seq.shape}")
    if seq.shape[0] < 2:
        raise ValueError("sequence must contain at least 2 clips")
    trace = forward_sequence(params, seq[:-1])
    total = 0.0
    for t in range(seq.shape[0] - 1):
        scores = seq[t + 1:] @ trace.outputs[t]
        total += _log_softmax_target(scores, 0)
    return total


def bptt_gradients(params: RnnParams, sequence) -> Gradients:
    """Exact gradients of :func:`sequence_log_likelihood` w.r.t. all weights.

    Accumulates through the hidden-state recurrence across every prediction
    step; the relu subgradient at 0 is taken as 0.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise ValueError(f"sequence must be a (T, dim) array, got shape {seq.shape}")
    if seq.shape[0] < 2:
        raise ValueError("sequence must contain at least 2 clips")
    steps = seq.shape[0] - 1
    trace = forward_sequence(params, seq[:-1])

    g_in = np.zeros_like(params.w_in)
    g_hh = np.zeros_like(params.w_hh)
    g_out = np.zeros_like(params.w_out)
    carry = np.zeros(params.hidden_dim)   # dL/dh_t flowing back through the recurrence

    for t in range(steps - 1, -1, -1):
        cands = seq[t + 1:]
        scores = cands @ trace.outputs[t]
        scores -= scores.max()
        p = np.exp(scores)
        p /= p.sum()
        d_y = cands[0] - p @ cands
        d_pre_y = d_y * (trace.pre_out[t] > 0.0)
        g_out += np.outer(d_pre_y, trace.hidden[t])
        d_h = params.w_out.T @ d_pre_y + carry
        d_pre_h = d_h * (trace.pre_hidden[t] > 0.0)
        g_in += np.outer(d_pre_h, seq[t])
        h_prev = trace.hidden[t - 1] if t > 0 else np.zeros(params.hidden_dim)
        g_hh += np.outer(d_pre_h, h_prev)
        carry = params.w_hh.T @ d_pre_h

    for name, g in (("w_in", g_in), ("w_hh", g_hh), ("w_out", g_out)):
        if not np.all(np.isfinite(g)):
            raise NumericError(f"gradient for {name} is non-finite")
    return Gradients(g_in, g_hh, g_out)


class SgdMomentum:
    """Gradient-ascent update with momentum and weight decay.

    velocity <- momentum * velocity + grad - weight_decay * weight
    weight   <- weight + learning_rate * velocity
    """

    def __init__(self, learning_rate: float, momentum: float, weight_decay: float):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self._velocity = None

    def step(self, params: RnnParams, grads: Gradients) -> RnnParams:
        weights = (params.w_in, params.w_hh, params.w_out)
        gs = (grads.w_in, grads.w_hh, grads.w_out)
        if self._velocity is None:
            self._velocity = [np.zeros_like(w) for w in weights]
        for w, g, v in zip(weights, gs, self._velocity):
            if g.shape != w.shape:
                raise ValueError(f"gradient shape {g.shape} does not match weight shape {w.shape}")
            v *= self.momentum
            v += g - self.weight_decay * w
            w += self.learning_rate * v
        return params


def init_params(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> RnnParams:
    """Uniform init in [-a, a] with a = sqrt(6 / (fan_in + fan_out)) per matrix."""
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError("input_dim and hidden_dim must be >= 1")
    a_io = np.sqrt(6.0 / (input_dim + hidden_dim))
    a_hh = np.sqrt(6.0 / (2 * hidden_dim))
    w_in = rng.uniform(-a_io, a_io, size=(hidden_dim, input_dim))
    w_hh = rng.uniform(-a_hh, a_hh, size=(hidden_dim, hidden_dim))
    w_out = rng.uniform(-a_io, a_io, size=(input_dim, hidden_dim))
    return RnnParams(w_in, w_hh, w_out)


@dataclass
class EpochStats:
    epoch: int
    mean_log_likelihood: float
    learning_rate: float


@dataclass
class TrainResult:
    params: RnnParams
    history: list = field(default_factory=list)   # list[EpochStats]


def train(corpus, config: TrainConfig, hidden_dim: int = 100) -> TrainResult:
    """Train one stream on a corpus of temporally ordered feature sequences.

    Every epoch visits each usable video once in a seeded shuffled order and
    draws one random contiguous window of `seq_len` clips from it.  The
    learning rate is multiplied by `lr_decay_factor` whenever the epoch mean
    log-likelihood has not improved for `patience` consecutive epochs;
    training stops at the epoch budget or once the rate falls below 1e-6.
    Deterministic given the seed.
    """
    videos = [np.asarray(v, dtype=np.float64) for v in corpus]
    if not videos:
        raise ValueError("training corpus is empty")
    dims = {v.shape[1] for v in videos if v.ndim == 2}
    if len(dims) != 1 or any(v.ndim != 2 for v in videos):
        raise ValueError("every video must be a (clips, dim) array with one shared dim")
    (input_dim,) = dims

    usable = []
    for i, v in enumerate(videos):
        if v.shape[0] < config.seq_len:
            logger.warning("skipping video %d: %d clips < seq_len %d", i, v.shape[0], config.seq_len)
            continue
        usable.append(v)
    if not usable:
        raise ValueError(f"no video provides at least seq_len={config.seq_len} clips")

    rng = np.random.default_rng(config.seed)
    params = init_params(input_dim, hidden_dim, rng)
    opt = SgdMomentum(config.learning_rate, config.momentum, config.weight_decay)

    history = []
    best = -np.inf
    stall = 0
    for epoch in range(config.epochs):
        lls = []
        for vi in rng.permutation(len(usable)):
            video = usable[vi]
            start = int(rng.integers(0, video.shape[0] - config.seq_len + 1))
            window = video[start:start + config.seq_len]
            lls.append(sequence_log_likelihood(params, window))
            opt.step(params, bptt_gradients(params, window))
        mean_ll = float(np.mean(lls))
        if not np.isfinite(mean_ll):
            raise NumericError(f"epoch {epoch}: mean log-likelihood is non-finite ({mean_ll})")
        history.append(EpochStats(epoch, mean_ll, opt.learning_rate))
        if mean_ll > best:
            best = mean_ll
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                opt.learning_rate *= config.lr_decay_factor
                stall = 0
                logger.info("epoch %d: no improvement for %d epochs, lr -> %g",
                            epoch, config.patience, opt.learning_rate)
        if opt.learning_rate < LR_FLOOR:
            logger.info("stopping at epoch %d: learning rate below %g", epoch, LR_FLOOR)
            break
    return TrainResult(params, history)


def save_checkpoint(path, params: RnnParams, config: TrainConfig) -> None:
    """Write a stream checkpoint.

    Layout: magic ``VSRN``, u32 format version, u32 input dim, u32 hidden
    dim, then w_in, w_hh, w_out row-major as little-endian float32, then the
    train config as a u32 length-prefixed JSON blob.
    """
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<III", CHECKPOINT_VERSION, params.input_dim, params.hidden_dim)
    for w in (params.w_in, params.w_hh, params.w_out):
        out += np.ascontiguousarray(w, dtype="<f4").tobytes()
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(blob))
    out += blob
    atomic_write_bytes(path, bytes(out))


def load_checkpoint(path):
    """Read back a checkpoint; returns (RnnParams, TrainConfig)."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    version, d, h = struct.unpack_from("<III", data, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 16
    mats = []
    for rows, cols in ((h, d), (h, h), (d, h)):
        count = rows * cols
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        if flat.size != count:
            raise ValueError(f"{path}: truncated checkpoint")
        mats.append(flat.astype(np.float64).reshape(rows, cols))
        offset += count * 4
    (blob_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    blob = data[offset:offset + blob_len]
    if len(blob) != blob_len:
        raise ValueError(f"{path}: truncated checkpoint config")
    config = TrainConfig(**json.loads(blob.decode("utf-8")))
    return RnnParams(*mats), config
