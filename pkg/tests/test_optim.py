"""
AdamW, gradient clipping and the learning-rate schedule
"""
import numpy as np
import pytest

from models.tensor import AdamWState, ParamTensor
from utils.errors import NumericError
from utils.optim import AdamW, ExponentialLR, adamw_step, clip_grad_norm, global_grad_norm


def test_first_adamw_step_moves_by_lr_times_sign():
    p = ParamTensor('w', np.array([1.0]), np.array([0.3]))
    state = AdamWState.for_param(p, lr=0.005)
    adamw_step(p, state)
    assert p.value[0] == pytest.approx(1.0 - 0.005 * 0.3 / (0.3 + 1e-8), abs=1e-12)
    assert p.value[0] == pytest.approx(0.995, abs=1e-6)
    assert state.step_count == 1


def test_weight_decay_is_decoupled():
    p = ParamTensor('w', np.array([2.0]), np.array([0.0]))
    state = AdamWState.for_param(p, lr=0.1, weight_decay=0.5)
    adamw_step(p, state)
    # zero gradient: only the decay term acts
    assert p.value[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)


def test_non_finite_gradient_names_parameter():
    p = ParamTensor('head.0.weight', np.zeros(2), np.array([np.nan, 0.0]))
    with pytest.raises(NumericError) as exc:
        adamw_step(p, AdamWState.for_param(p))
    assert exc.value.parameter == 'head.0.weight'
    assert 'head.0.weight' in str(exc.value)


def test_clip_grad_norm_scales_jointly():
    p = ParamTensor('a', np.zeros(2), np.array([3.0, 4.0]))
    scale = clip_grad_norm([p], 1.0)
    assert scale == pytest.approx(0.2, abs=1e-8)
    assert p.grad.tolist() == pytest.approx([0.6, 0.8], abs=1e-8)

    a = ParamTensor('a', np.zeros(1), np.array([3.0]))
    b = ParamTensor('b', np.zeros(1), np.array([4.0]))
    clip_grad_norm([a, b], 1.0)
    assert global_grad_norm([a, b]) == pytest.approx(1.0, abs=1e-7)


def test_clip_leaves_small_gradients_alone():
    p = ParamTensor('a', np.zeros(2), np.array([0.3, 0.4]))
    assert clip_grad_norm([p], 1.0) == 1.0
    assert p.grad.tolist() == [0.3, 0.4]


def test_optimizer_reset_and_schedule():
    p = ParamTensor('w', np.array([1.0]), np.array([1.0]))
    opt = AdamW([p], lr=0.01)
    opt.step()
    assert opt.states[0].step_count == 1
    opt.reset()
    assert opt.states[0].step_count == 0 and opt.states[0].first_moment[0] == 0.0

    sched = ExponentialLR([opt], gamma=0.5)
    sched.step()
    sched.step()
    assert opt.lr == pytest.approx(0.0025)
    assert opt.states[0].lr == pytest.approx(0.0025)


def test_schedule_reset_restores_base_rates():
    p = ParamTensor('w', np.array([1.0]), np.array([1.0]))
    opt = AdamW([p], lr=0.01)
    sched = ExponentialLR([opt], gamma=0.5)
    sched.step()
    assert opt.lr == pytest.approx(0.005)
    sched.reset()
    assert sched.epochs == 0
    assert opt.lr == 0.01 and opt.states[0].lr == 0.01


def test_adamw_is_bit_deterministic():
    rng = np.random.default_rng(21)
    start = rng.standard_normal((3, 4))
    grads = [rng.standard_normal((3, 4)) for _ in range(6)]

    def trajectory():
        p = ParamTensor('w', start.copy(), np.zeros_like(start))
        opt = AdamW([p], lr=0.005, weight_decay=0.01)
        for g in grads:
            p.grad[...] = g
            opt.step()
        return p.value

    first, second = trajectory(), trajectory()
    assert first.tobytes() == second.tobytes()
    assert not np.array_equal(first, start)
