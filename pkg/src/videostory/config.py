"""Pipeline-wide configuration with the published default hyperparameters."""

from dataclasses import dataclass


@dataclass
class PipelineConfig:
    """Resolved knobs for the full pipeline; embedded into every output artifact."""

    bins: int = 10
    pyramid: int = 3
    seq_len: int = 10
    hidden: int = 100
    fusion: float = 0.5       # weight on the semantic stream when fusing probabilities
    gamma: float = 0.3        # activity-dynamics weight in the ranking objective
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-7
    epochs: int = 200
    lr_decay_factor: float = 0.5
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.pyramid < 1:
            raise ValueError("pyramid must be >= 1")
        if not 0.0 <= self.fusion <= 1.0:
            raise ValueError("fusion weight must lie in [0, 1]")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "pyramid": self.pyramid,
            "seq_len": self.seq_len,
            "hidden": self.hidden,
            "lambda": self.fusion,
            "gamma": self.gamma,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "lr_decay_factor": self.lr_decay_factor,
            "patience": self.patience,
            "seed": self.seed,
        }
