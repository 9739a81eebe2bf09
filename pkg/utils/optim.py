"""
Optimizer plumbing: AdamW with decoupled weight decay, global-norm gradient clipping
and a per-epoch exponential learning-rate schedule
"""
import logging

import numpy as np

from models.tensor import AdamWState
from utils.errors import NumericError

logger = logging.getLogger(__name__)

CLIP_EPS = 1e-8


def adamw_step(param, state):
    """
    One AdamW update in place.

        m <- b1 m + (1 - b1) g
        v <- b2 v + (1 - b2) g^2
        value <- value - lr * (m_hat / (sqrt(v_hat) + eps) + wd * value)
    """
    g = param.grad
    if not np.isfinite(g).all():
        raise NumericError(f"non-finite gradient in parameter '{param.name}'", parameter=param.name)

    state.step_count += 1
    state.first_moment *= state.beta1
    state.first_moment += (1.0 - state.beta1) * g
    state.second_moment *= state.beta2
    state.second_moment += (1.0 - state.beta2) * (g * g)

    m_hat = state.first_moment / (1.0 - state.beta1 ** state.step_count)
    v_hat = state.second_moment / (1.0 - state.beta2 ** state.step_count)
    update = m_hat / (np.sqrt(v_hat) + state.eps)
    if state.weight_decay:
        update = update + state.weight_decay * param.value
    param.value -= state.lr * update


def global_grad_norm(params):
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))


def clip_grad_norm(params, max_norm):
    """Scale all gradients so their joint l2 norm is at most max_norm; returns the scale"""
    total = global_grad_norm(params)
    if total <= max_norm:
        return 1.0
    scale = max_norm / (total + CLIP_EPS)
    for p in params:
        p.grad *= scale
    return scale


class AdamW:
    """AdamW over a fixed list of ParamTensors, one state per parameter"""

    def __init__(self, params, lr=0.005, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.lr = lr
        self.states = [
            AdamWState.for_param(p, lr=lr, beta1=beta1, beta2=beta2, eps=eps, weight_decay=weight_decay)
            for p in self.params
        ]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def set_lr(self, lr):
        self.lr = lr
        for state in self.states:
            state.lr = lr

    def step(self):
        for p, state in zip(self.params, self.states):
            adamw_step(p, state)

    def reset(self):
        for state in self.states:
            state.reset()


class ExponentialLR:
    """
    lr_e = base_lr * gamma^e, stepped once per local epoch. reset() restores the base
    rates so each local update starts its decay from epoch 0
    """

    def __init__(self, optimizers, gamma=1.0):
        self.optimizers = list(optimizers)
        self.gamma = gamma
        self.base_lrs = [opt.lr for opt in self.optimizers]
        self.epochs = 0

    def reset(self):
        self.epochs = 0
        for opt, lr in zip(self.optimizers, self.base_lrs):
            opt.set_lr(lr)

    def step(self):
        self.epochs += 1
        if self.gamma == 1.0:
            return
        for opt in self.optimizers:
            opt.set_lr(opt.lr * self.gamma)
        logger.debug(f"Learning rate decayed to {self.optimizers[0].lr:.6g} after {self.epochs} epochs")
