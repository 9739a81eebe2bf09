"""
Loss configuration and per-client loss state
"""
from dataclasses import dataclass, field

import numpy as np

from utils.errors import InvalidArgumentError


@dataclass
class ClassWeights:
    """Effective-number class weights after clamping and mean normalization"""
    weights: np.ndarray
    beta: float = 0.999
    clamp_lo: float = 0.2
    clamp_hi: float = 5.0

    @classmethod
    def uniform(cls, num_classes, beta=0.999):
        return cls(np.ones(num_classes), beta)

    @property
    def num_classes(self):
        return len(self.weights)

    def mean_for(self, labels):
        labels = np.asarray(labels, dtype=np.int64)
        return float(self.weights[labels].mean()) if labels.size else 0.0


@dataclass(frozen=True)
class KdSchedule:
    T_base: float = 3.0
    T_min: float = 1.0
    T_decay: float = 0.95


@dataclass(frozen=True)
class AlignConfig:
    lambda_cos: float = 0.5
    lambda_contrast: float = 0.2
    tau: float = 0.1

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidArgumentError(f"contrastive temperature tau must be positive, got {self.tau}")


@dataclass
class AdaptiveWeights:
    """EMA-smoothed auxiliary loss weights; re-initialized at every client update"""
    lambda_kd: float = 0.2
    lambda_align: float = 0.08
    round: int = 0
    trace: list = field(default_factory=list)

    def record(self):
        self.trace.append((self.lambda_kd, self.lambda_align))
