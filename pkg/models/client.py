"""
Per-client state that persists across federated rounds
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from models.dataset import TabularDataset
from models.loss_state import ClassWeights
from models.memory_bank import MemoryBank
from models.network import AlignerParams, ModelParams

if TYPE_CHECKING:
    from utils.optim import AdamW, ExponentialLR


@dataclass
class ClientState:
    """
    Teacher, aligner, optimizer states and memory banks persist across rounds; the
    student is overwritten by every broadcast. FedAvg clients carry only a student.
    """
    client_id: int
    student: ModelParams
    student_opt: AdamW
    class_weights: ClassWeights
    train: TabularDataset
    test: TabularDataset
    rng: np.random.Generator
    teacher: ModelParams = None
    teacher_opt: AdamW = None
    aligner: AlignerParams = None
    aligner_opt: AdamW = None
    scheduler: ExponentialLR = None
    bank_T: MemoryBank = None
    bank_S: MemoryBank = None
    synthetic_delay: float = 0.0
    last_round_wall_time: float = 0.0
    round_times: list = field(default_factory=list)
    lambda_trace: list = field(default_factory=list)
    last_losses: dict = field(default_factory=dict)

    @property
    def is_personalized(self):
        return self.teacher is not None

    @property
    def average_round_time(self):
        """Mean accounted seconds per round (measured time plus any injected delay)"""
        return float(np.mean(self.round_times)) if self.round_times else 0.0

    def trainable_parameters(self):
        params = []
        for model in (self.teacher, self.student, self.aligner):
            if model is not None:
                params.extend(model.parameters())
        return params

    def optimizers(self):
        return [opt for opt in (self.teacher_opt, self.student_opt, self.aligner_opt) if opt is not None]
