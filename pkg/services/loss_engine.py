"""
Loss Engine for the Sentinel simulator
Class-balanced task loss, bidirectional distillation, three-part feature alignment
and the EMA controller for the auxiliary loss weights
"""
from dataclasses import dataclass

import numpy as np

from models.loss_state import AdaptiveWeights, AlignConfig, ClassWeights, KdSchedule
from models.memory_bank import MemoryBank
from utils.errors import DimensionError, InvalidArgumentError
from utils.kernel import (
    NORM_EPS, kl_divergence, l2_normalize_backward, l2_normalize_rows, log_softmax_with_temperature,
    row_norms, softmax_backward, softmax_with_temperature, weighted_cross_entropy
)


@dataclass
class TaskLoss:
    loss: float
    grad_teacher: np.ndarray
    grad_student: np.ndarray


@dataclass
class KdLoss:
    loss: float
    grad_teacher: np.ndarray
    grad_student: np.ndarray
    kl_student_teacher: float
    kl_teacher_student: float
    mean_weight: float


@dataclass
class Match:
    matched: np.ndarray
    index: np.ndarray


@dataclass
class AlignLoss:
    loss: float
    grad_projected: np.ndarray
    grad_student: np.ndarray
    score: float
    geometric: float
    directional: float
    contrastive: float
    index: np.ndarray


@dataclass
class TotalLoss:
    value: float
    kd_scale: float
    align_scale: float


class LossEngine:
    """Sentinel client-side objectives with hand-derived gradients"""

    KD_LAMBDA_MIN = 0.03
    KD_LAMBDA_CAP = 0.35
    ALIGN_LAMBDA_MIN = 0.01
    ALIGN_LAMBDA_CAP = 0.12

    # ---- class-balanced task loss ----

    @staticmethod
    def compute_class_weights(counts, beta=0.999, clamp_lo=0.2, clamp_hi=5.0):
        """(1 - beta) / (1 - beta^n_c), clamped, then mean-normalized over present classes"""
        counts = np.asarray(counts, dtype=np.float64)
        if (counts < 0).any():
            raise InvalidArgumentError("class counts must be non-negative")
        present = counts > 0
        if not present.any():
            raise InvalidArgumentError("at least one class must have a positive count")
        if not 0.0 <= beta < 1.0:
            raise InvalidArgumentError(f"beta must lie in [0, 1), got {beta}")

        weights = np.ones_like(counts)
        raw = (1.0 - beta) / (1.0 - np.power(beta, counts[present]))
        clamped = np.clip(raw, clamp_lo, clamp_hi)
        weights[present] = clamped / clamped.mean()
        return ClassWeights(weights, beta, clamp_lo, clamp_hi)

    @staticmethod
    def task_loss(z_T, z_S, y, w):
        weights = w.weights if isinstance(w, ClassWeights) else np.asarray(w)
        loss_T, grad_T = weighted_cross_entropy(z_T, y, weights)
        loss_S, grad_S = weighted_cross_entropy(z_S, y, weights)
        return TaskLoss(0.5 * (loss_T + loss_S), 0.5 * grad_T, 0.5 * grad_S)

    # ---- adaptive bidirectional distillation ----

    @staticmethod
    def temperature(r, schedule=None):
        s = schedule or KdSchedule()
        exponent = min(r / 10.0, 5.0)
        return max(s.T_min, s.T_base * s.T_decay ** exponent)

    @staticmethod
    def agreement_confidence(z_T, z_S, T, mode='product'):
        """
        gamma: share of rows where both argmaxes agree (ties -> lowest index).
        delta: batch mean of maxp_T * maxp_S, or of its square root in 'geometric' mode.
        """
        if z_T.shape[0] == 0:
            return 0.0, 0.0
        p_T = softmax_with_temperature(z_T, T)
        p_S = softmax_with_temperature(z_S, T)
        gamma = float(np.mean(np.argmax(z_T, axis=1) == np.argmax(z_S, axis=1)))
        joint = p_T.max(axis=1) * p_S.max(axis=1)
        if mode == 'geometric':
            joint = np.sqrt(joint)
        elif mode != 'product':
            raise InvalidArgumentError(f"unknown delta mode '{mode}'")
        return gamma, float(joint.mean())

    @staticmethod
    def kd_loss(z_T, z_S, y, w, T, gamma, delta):
        """
        w_bar * [(1 - gamma) KL(p_S || p_T) + delta KL(p_T || p_S)] * T^2

        The (1 - gamma) term only reaches the student (p_T held constant); the delta term
        only reaches the teacher (p_S held constant). gamma, delta and w_bar are constants.
        """
        if z_T.shape != z_S.shape:
            raise DimensionError(f"teacher logits {z_T.shape} vs student logits {z_S.shape}", axis=1)
        B = z_T.shape[0]
        weights = w if isinstance(w, ClassWeights) else ClassWeights(np.asarray(w))
        if B == 0:
            return KdLoss(0.0, np.zeros_like(z_T), np.zeros_like(z_S), 0.0, 0.0, 0.0)

        w_bar = weights.mean_for(y)
        p_T = softmax_with_temperature(z_T, T)
        p_S = softmax_with_temperature(z_S, T)
        kl_st = kl_divergence(p_S, p_T)
        kl_ts = kl_divergence(p_T, p_S)
        scale = w_bar * T * T
        loss = scale * ((1.0 - gamma) * kl_st + delta * kl_ts)

        log_T = log_softmax_with_temperature(z_T, T)
        log_S = log_softmax_with_temperature(z_S, T)
        grad_S = softmax_backward((log_S - log_T) / B, p_S, T) * (scale * (1.0 - gamma))
        grad_T = softmax_backward((log_T - log_S) / B, p_T, T) * (scale * delta)
        return KdLoss(float(loss), grad_T, grad_S, kl_st, kl_ts, w_bar)

    # ---- feature alignment ----

    @staticmethod
    def match_nearest(hp_T, h_S):
        """Nearest student row (Euclidean) for every projected teacher row; ties -> lowest index"""
        if hp_T.shape[1:] != h_S.shape[1:]:
            raise DimensionError(f"feature widths differ: {hp_T.shape[1]} vs {h_S.shape[1]}", axis=1)
        if hp_T.shape[0] == 0 or h_S.shape[0] == 0:
            return Match(np.zeros((0, h_S.shape[1]), dtype=h_S.dtype), np.zeros(0, dtype=np.int64))
        diff = hp_T[:, None, :] - h_S[None, :, :]
        dist2 = (diff * diff).sum(axis=2)
        index = np.argmin(dist2, axis=1)
        return Match(h_S[index], index)

    @staticmethod
    def geometric_loss(hp_T, h_match):
        """Batch mean of squared l2 distances; returns (loss, grad_hp, grad_match)"""
        B = hp_T.shape[0]
        if B == 0:
            return 0.0, np.zeros_like(hp_T), np.zeros_like(h_match)
        diff = hp_T - h_match
        loss = float((diff * diff).sum() / B)
        grad = 2.0 * diff / B
        return loss, grad, -grad

    @staticmethod
    def directional_loss(hp_T, h_match):
        """1 - mean cosine; returns (loss, grad_hp, grad_match, mean_cos)"""
        B = hp_T.shape[0]
        if B == 0:
            return 0.0, np.zeros_like(hp_T), np.zeros_like(h_match), 1.0
        na = row_norms(hp_T)[:, None]
        nb = row_norms(h_match)[:, None]
        fa = np.maximum(na, NORM_EPS)
        fb = np.maximum(nb, NORM_EPS)
        dots = (hp_T * h_match).sum(axis=1, keepdims=True)
        cos = dots / (fa * fb)
        mean_cos = float(cos.mean())

        # a floored norm is a constant, so its correction term vanishes
        da = h_match / (fa * fb) - np.where(na > NORM_EPS, cos * hp_T / (fa * fa), 0.0)
        db = hp_T / (fa * fb) - np.where(nb > NORM_EPS, cos * h_match / (fb * fb), 0.0)
        return 1.0 - mean_cos, -da / B, -db / B, mean_cos

    @staticmethod
    def contrastive_loss(hp_T, h_S, bank=None, tau=0.1):
        """
        InfoNCE on l2-normalized rows. The positive for row i is student row i; the
        denominator spans every in-batch student row plus every bank row. Bank rows are
        constants. Returns (loss, grad_hp, grad_student).
        """
        if tau <= 0:
            raise InvalidArgumentError(f"tau must be positive, got {tau}")
        B = hp_T.shape[0]
        if B == 0:
            return 0.0, np.zeros_like(hp_T), np.zeros_like(h_S)
        if isinstance(bank, MemoryBank):
            bank = bank.rows()
        if bank is None or len(bank) == 0:
            bank = np.zeros((0, hp_T.shape[1]), dtype=hp_T.dtype)

        a = l2_normalize_rows(hp_T)
        s = l2_normalize_rows(h_S)
        m = l2_normalize_rows(bank) if len(bank) else bank
        logits = np.concatenate([a @ s.T, a @ m.T], axis=1) / tau

        row_max = logits.max(axis=1, keepdims=True)
        lse = row_max + np.log(np.exp(logits - row_max).sum(axis=1, keepdims=True))
        rows = np.arange(B)
        loss = float(np.mean(lse[:, 0] - logits[rows, rows]))

        d_logits = np.exp(logits - lse) / B
        d_logits[rows, rows] -= 1.0 / B
        d_batch = d_logits[:, :B]
        d_bank = d_logits[:, B:]
        grad_a = (d_batch @ s + d_bank @ m) / tau
        grad_s = (d_batch.T @ a) / tau
        return loss, l2_normalize_backward(grad_a, hp_T), l2_normalize_backward(grad_s, h_S)

    @staticmethod
    def alignment_loss(hp_T, h_S, bank=None, cfg=None):
        """L_geom + lambda_cos L_dir + lambda_contrast L_struct, plus score_align in [0, 1]"""
        cfg = cfg or AlignConfig()
        match = LossEngine.match_nearest(hp_T, h_S)
        geom, g_hp_geom, g_m_geom = LossEngine.geometric_loss(hp_T, match.matched)
        direc, g_hp_dir, g_m_dir, mean_cos = LossEngine.directional_loss(hp_T, match.matched)
        struct, g_hp_con, g_s_con = LossEngine.contrastive_loss(hp_T, h_S, bank, cfg.tau)

        loss = geom + cfg.lambda_cos * direc + cfg.lambda_contrast * struct
        grad_hp = g_hp_geom + cfg.lambda_cos * g_hp_dir + cfg.lambda_contrast * g_hp_con
        grad_s = cfg.lambda_contrast * g_s_con
        # matched rows are a selection: route their gradients back to the chosen student rows
        np.add.at(grad_s, match.index, g_m_geom + cfg.lambda_cos * g_m_dir)

        score = float(np.clip((1.0 + mean_cos) / 2.0, 0.0, 1.0))
        return AlignLoss(loss, grad_hp, grad_s, score, geom, direc, struct, match.index)

    # ---- adaptive weighting ----

    @staticmethod
    def ema_factor(r):
        return max(0.7, 0.9 - 0.03 * r)

    @staticmethod
    def kd_bounds(r):
        return LossEngine.KD_LAMBDA_MIN, min(LossEngine.KD_LAMBDA_CAP, 0.18 + 0.02 * r)

    @staticmethod
    def align_bounds(r):
        return LossEngine.ALIGN_LAMBDA_MIN, min(LossEngine.ALIGN_LAMBDA_CAP, 0.06 + 0.01 * r)

    @staticmethod
    def update_adaptive_weights(st, gamma, score_align, r):
        """EMA toward (1 - gamma) and (1 - score_align), then clamp to the round's bounds"""
        if not (0.0 <= gamma <= 1.0 and 0.0 <= score_align <= 1.0):
            raise InvalidArgumentError(f"gamma={gamma} and score_align={score_align} must lie in [0, 1]")
        alpha = LossEngine.ema_factor(r)
        kd_lo, kd_hi = LossEngine.kd_bounds(r)
        al_lo, al_hi = LossEngine.align_bounds(r)
        st.lambda_kd = min(max(alpha * st.lambda_kd + (1.0 - alpha) * (1.0 - gamma), kd_lo), kd_hi)
        st.lambda_align = min(max(alpha * st.lambda_align + (1.0 - alpha) * (1.0 - score_align), al_lo), al_hi)
        st.round = r
        st.record()
        return st

    @staticmethod
    def total_loss(task, kd, align, st):
        """L_task + lambda_KD L_KD + lambda_align L_align; a None component is left out entirely"""
        value = task
        kd_scale = align_scale = 0.0
        if kd is not None:
            kd_scale = st.lambda_kd
            value = value + kd_scale * kd
        if align is not None:
            align_scale = st.lambda_align
            value = value + align_scale * align
        return TotalLoss(value, kd_scale, align_scale)

    @staticmethod
    def fresh_weights(r=0):
        return AdaptiveWeights(round=r)
