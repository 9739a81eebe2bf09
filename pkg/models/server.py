"""
Server-side state and per-round reports
"""
import math
from dataclasses import dataclass, field

import numpy as np

from models.network import ModelParams, flatten_state, state_dict
from utils.errors import InvalidArgumentError


@dataclass
class ServerState:
    """Global student, flat momentum buffer and the round counter"""
    global_student: ModelParams
    momentum: np.ndarray = None
    eta: float = 1.0
    beta_m: float = 0.9
    round: int = 0
    eps: float = 1e-8

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidArgumentError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.beta_m < 1.0:
            raise InvalidArgumentError(f"beta_m must lie in [0, 1), got {self.beta_m}")
        if self.momentum is None:
            self.momentum = np.zeros_like(self.flat_params())

    def records(self):
        return state_dict(self.global_student)

    def flat_params(self):
        return flatten_state(self.records())


@dataclass(frozen=True)
class SelectionConfig:
    rho: float = 1.0
    p_drop: float = 0.0
    t_thresh: float = 10000.0

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise InvalidArgumentError(f"rho must lie in (0, 1], got {self.rho}")
        if not 0.0 <= self.p_drop < 1.0:
            raise InvalidArgumentError(f"p_drop must lie in [0, 1), got {self.p_drop}")

    def selected_count(self, num_clients):
        return max(1, math.ceil(self.rho * num_clients))


@dataclass
class RoundReport:
    """Everything one federated round produced; rows feed rounds.csv"""
    round: int
    selected: list
    reliable: list
    skipped: bool = False
    rows: list = field(default_factory=list)
    mean_std: dict = field(default_factory=dict)
    bytes_down: int = 0
    bytes_up: int = 0
    update_norms: dict = field(default_factory=dict)

    @property
    def mean_macro_f1(self):
        return self.mean_std.get('macro_f1', (0.0, 0.0))[0]
