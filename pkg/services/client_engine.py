"""
Client Engine for the Sentinel simulator
Local teacher / student / aligner training with memory banks, adaptive loss weights
and local evaluation; also the single-model FedAvg client
"""
import logging
import time
from dataclasses import dataclass

import numpy as np

from models.client import ClientState
from models.loss_state import AlignConfig, ClassWeights
from models.memory_bank import MemoryBank
from models.network import (
    aligner_forward, backward_layers, build_variant, forward_features, forward_head, init_aligner, init_params,
    load_state_dict, predict, run_layers, state_dict
)
from services.data_service import DataService
from services.loss_engine import LossEngine
from services.metrics_service import MetricsService
from utils.errors import DataError, InvalidArgumentError, NumericError
from utils.kernel import weighted_cross_entropy
from utils.optim import AdamW, ExponentialLR, clip_grad_norm

logger = logging.getLogger(__name__)


@dataclass
class BatchTrace:
    total: float
    task: float
    kd: float
    align: float
    gamma: float
    delta: float
    score_align: float
    temperature: float
    lambda_kd: float
    lambda_align: float


class ClientEngine:
    """Local training and evaluation for one federated client"""

    @staticmethod
    def create_client(client_id, train, test, variant, cfg, rng, dtype=np.float64):
        """Build a client; pass variant=None for a FedAvg client (student only)"""
        counts = DataService.class_counts(train)
        if cfg.use_balanced and counts.sum() > 0:
            weights = LossEngine.compute_class_weights(counts, cfg.beta_cb)
        else:
            weights = ClassWeights.uniform(train.num_classes, cfg.beta_cb)

        def optimizer(model):
            return AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)

        student_spec = variant.student if variant is not None else ClientEngine.fedavg_spec(train)
        student = init_params(student_spec, rng, dtype)
        st = ClientState(
            client_id=client_id,
            student=student,
            student_opt=optimizer(student),
            class_weights=weights,
            train=train,
            test=test,
            rng=rng,
            synthetic_delay=cfg.straggler_delays.get(client_id, 0.0),
        )
        if variant is not None:
            st.teacher = init_params(variant.teacher, rng, dtype)
            st.teacher_opt = optimizer(st.teacher)
            st.aligner = init_aligner(variant.aligner_in, variant.aligner_out, rng, dtype)
            st.aligner_opt = optimizer(st.aligner)
            st.bank_T = MemoryBank(cfg.bank_capacity, dtype)
            st.bank_S = MemoryBank(cfg.bank_capacity, dtype)
        st.scheduler = ExponentialLR(st.optimizers(), cfg.lr_decay)
        return st

    @staticmethod
    def fedavg_spec(train):
        return build_variant('sentinel-1', train.num_features, train.num_classes).student

    @staticmethod
    def bank_push(bank, rows):
        bank.push(rows)

    @staticmethod
    def _batches(st, batch_size):
        n = len(st.train)
        order = st.rng.permutation(n)
        # the last, possibly short, batch is kept
        for start in range(0, n, batch_size):
            yield order[start:start + batch_size]

    @staticmethod
    def compute_batch_gradients(st, xb, yb, r, cfg, weights, align_cfg=None, batch_index=0):
        """
        One forward/backward pass of the Sentinel objective. Parameter gradients are
        zeroed first and left populated; nothing is stepped.
        """
        for params in (st.teacher, st.student, st.aligner):
            params.zero_grad()

        tape_tf, tape_th, tape_sf, tape_sh, tape_al = [], [], [], [], []
        h_T = forward_features(st.teacher, xb, tape_tf)
        z_T = forward_head(st.teacher, h_T, tape_th)
        h_S = forward_features(st.student, xb, tape_sf)
        z_S = forward_head(st.student, h_S, tape_sh)

        task = LossEngine.task_loss(z_T, z_S, yb, st.class_weights)
        T = LossEngine.temperature(r)
        gamma, delta = LossEngine.agreement_confidence(z_T, z_S, T, cfg.delta_mode)
        kd = LossEngine.kd_loss(z_T, z_S, yb, st.class_weights, T, gamma, delta) if cfg.use_kd else None

        align, score = None, 1.0
        if cfg.use_align:
            hp_T = aligner_forward(st.aligner, h_T.copy(), tape_al)
            align = LossEngine.alignment_loss(hp_T, h_S, st.bank_S, align_cfg or AlignConfig())
            score = align.score

        values = [task.loss, kd.loss if kd is not None else 0.0, align.loss if align is not None else 0.0, score]
        if not np.isfinite(values).all():
            raise NumericError(
                f"non-finite loss on client {st.client_id}, batch {batch_index}, round {r}",
                batch=batch_index, round_index=r
            )

        ClientEngine.bank_push(st.bank_T, h_T)
        ClientEngine.bank_push(st.bank_S, h_S)

        LossEngine.update_adaptive_weights(weights, gamma, score, r)
        total = LossEngine.total_loss(
            task.loss,
            kd.loss if kd is not None else None,
            align.loss if align is not None else None,
            weights
        )

        grad_zT, grad_zS = task.grad_teacher, task.grad_student
        if kd is not None:
            grad_zT = grad_zT + total.kd_scale * kd.grad_teacher
            grad_zS = grad_zS + total.kd_scale * kd.grad_student

        grad_hT = backward_layers(st.teacher.head_layers, tape_th, grad_zT)
        backward_layers(st.teacher.feature_layers, tape_tf, grad_hT)

        grad_hS = backward_layers(st.student.head_layers, tape_sh, grad_zS)
        if align is not None:
            grad_hS = grad_hS + total.align_scale * align.grad_student
            # input gradient discarded: teacher features were detached
            backward_layers([st.aligner.layer], tape_al, total.align_scale * align.grad_projected)
        backward_layers(st.student.feature_layers, tape_sf, grad_hS)

        return BatchTrace(
            total=float(total.value),
            task=task.loss,
            kd=kd.loss if kd is not None else 0.0,
            align=align.loss if align is not None else 0.0,
            gamma=gamma,
            delta=delta,
            score_align=score,
            temperature=T,
            lambda_kd=weights.lambda_kd,
            lambda_align=weights.lambda_align,
        )

    @staticmethod
    def _step(st, cfg, include_aligner=True):
        params = st.trainable_parameters() if include_aligner else \
            st.teacher.parameters() + st.student.parameters()
        scale = clip_grad_norm(params, cfg.clip_max_norm)
        st.teacher_opt.step()
        st.student_opt.step()
        if include_aligner:
            st.aligner_opt.step()
        return scale

    @staticmethod
    def client_update(st, global_student_params, r, cfg):
        """
        Run E local epochs of the Sentinel objective and return a deep copy of the
        student state dictionary. The teacher never leaves the client.
        """
        started = time.perf_counter()
        load_state_dict(st.student, global_student_params)
        if cfg.reset_student_optimizer:
            st.student_opt.reset()
        st.scheduler.reset()

        weights = LossEngine.fresh_weights(r)
        last = None
        batch_index = 0
        for epoch in range(cfg.local_epochs):
            for idx in ClientEngine._batches(st, cfg.batch_size):
                last = ClientEngine.compute_batch_gradients(
                    st, st.train.features[idx], st.train.labels[idx], r, cfg, weights, batch_index=batch_index
                )
                scale = ClientEngine._step(st, cfg, include_aligner=cfg.use_align)
                batch_index += 1
            st.scheduler.step()

        if last is not None:
            logger.debug(
                f"Client {st.client_id} round {r}: total={last.total:.4f} task={last.task:.4f} "
                f"kd={last.kd:.4f} align={last.align:.4f} T={last.temperature:.3f} "
                f"lambda_kd={last.lambda_kd:.3f} lambda_align={last.lambda_align:.3f} clip={scale:.3f}"
            )
            st.last_losses = vars(last).copy()

        st.lambda_trace = list(weights.trace)
        st.last_round_wall_time = time.perf_counter() - started
        st.round_times.append(st.last_round_wall_time + st.synthetic_delay)
        return state_dict(st.student)

    @staticmethod
    def fedavg_client_update(st, global_student_params, r, cfg):
        """Plain cross-entropy training of the single shared model"""
        started = time.perf_counter()
        load_state_dict(st.student, global_student_params)
        if cfg.reset_student_optimizer:
            st.student_opt.reset()
        st.scheduler.reset()

        uniform = np.ones(st.train.num_classes, dtype=st.train.features.dtype)
        batch_index = 0
        for epoch in range(cfg.local_epochs):
            for idx in ClientEngine._batches(st, cfg.batch_size):
                st.student.zero_grad()
                tape = []
                logits = run_layers(st.student.layers, st.train.features[idx], tape)
                loss, grad = weighted_cross_entropy(logits, st.train.labels[idx], uniform)
                if not np.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss on client {st.client_id}, batch {batch_index}, round {r}",
                        batch=batch_index, round_index=r
                    )
                backward_layers(st.student.layers, tape, grad)
                clip_grad_norm(st.student.parameters(), cfg.clip_max_norm)
                st.student_opt.step()
                batch_index += 1
            st.scheduler.step()

        st.last_round_wall_time = time.perf_counter() - started
        st.round_times.append(st.last_round_wall_time + st.synthetic_delay)
        return state_dict(st.student)

    @staticmethod
    def evaluate_model(params, ds, macro_mode='all'):
        if len(ds) == 0:
            raise DataError("cannot evaluate on an empty test split")
        cm = MetricsService.confusion(ds.labels, predict(params, ds.features), ds.num_classes)
        return MetricsService.report(cm, macro_mode)

    @staticmethod
    def evaluate_client(st, which='teacher', macro_mode='all'):
        """Argmax evaluation of the local teacher or student on the local test split"""
        if which not in ('teacher', 'student'):
            raise InvalidArgumentError(f"which must be 'teacher' or 'student', got {which!r}")
        model = st.teacher if which == 'teacher' else st.student
        if model is None:
            raise InvalidArgumentError(f"client {st.client_id} has no {which} model")
        return ClientEngine.evaluate_model(model, st.test, macro_mode)
