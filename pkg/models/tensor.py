"""
Parameter and optimizer-state containers
Tensors themselves are numpy arrays; these wrap trainable values with their gradients
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ParamTensor:
    """Trainable array with an accumulated gradient of the same shape"""
    name: str
    value: np.ndarray
    grad: np.ndarray = None

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return int(self.value.size)

    def zero_grad(self):
        self.grad.fill(0.0)

    def copy(self):
        return ParamTensor(self.name, self.value.copy(), self.grad.copy())


@dataclass
class AdamWState:
    """Per-parameter AdamW moments and hyperparameters"""
    first_moment: np.ndarray
    second_moment: np.ndarray
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0

    @classmethod
    def for_param(cls, param, **hyper):
        return cls(
            first_moment=np.zeros_like(param.value),
            second_moment=np.zeros_like(param.value),
            **hyper
        )

    def reset(self):
        self.first_moment.fill(0.0)
        self.second_moment.fill(0.0)
        self.step_count = 0


@dataclass
class ParamRecord:
    """One entry of a serialized state dictionary: name, shape, row-major values"""
    name: str
    shape: tuple
    values: np.ndarray = field(repr=False)

    def as_array(self):
        return self.values.reshape(self.shape)
