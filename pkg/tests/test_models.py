"""
Network variants, parameter records and the memory bank
"""
import numpy as np
import pytest

from models.memory_bank import MemoryBank
from models.network import (
    backward_layers, build_variant, flatten_state, forward_features, forward_head, forward_logits,
    init_aligner, init_params, load_state_dict, normalize_variant, parameter_count, predict,
    run_layers, same_layout, state_dict, unflatten_state
)
from utils.errors import ConfigError, DimensionError, InvalidArgumentError


def layer_shapes(model):
    return [layer.weight.shape for layer in model.layers]


def test_sentinel_1_teacher_and_student_are_identical():
    v = build_variant('sentinel-1', 10, 5)
    assert layer_shapes(init_params(v.teacher, np.random.default_rng(0))) == [(10, 64), (64, 32), (32, 16), (16, 5)]
    assert v.student == v.teacher
    assert (v.aligner_in, v.aligner_out) == (32, 32)


def test_sentinel_2_widths_and_aligner():
    v = build_variant('Sentinel-II', 10, 5)
    rng = np.random.default_rng(0)
    assert layer_shapes(init_params(v.teacher, rng)) == [(10, 128), (128, 64), (64, 32), (32, 5)]
    assert layer_shapes(init_params(v.student, rng)) == [(10, 64), (64, 32), (32, 16), (16, 5)]
    assert (v.aligner_in, v.aligner_out) == (64, 32)
    assert parameter_count(v.student) < parameter_count(v.teacher)


def test_parameter_count_matches_initialized_model():
    v = build_variant('sentinel-2', 7, 3)
    model = init_params(v.teacher, np.random.default_rng(1))
    assert model.param_count() == parameter_count(v.teacher)


def test_unknown_variant_rejected():
    with pytest.raises(InvalidArgumentError):
        normalize_variant('sentinel-3')


def test_init_is_fan_in_uniform_with_zero_bias():
    model = init_params(build_variant('sentinel-1', 9, 2).teacher, np.random.default_rng(3))
    first = model.layers[0]
    assert np.abs(first.weight.value).max() <= 1.0 / np.sqrt(9)
    assert not first.bias.value.any()
    assert [p.name for p in model.parameters()][:2] == ['features.0.weight', 'features.0.bias']
    assert model.layers[-1].activation is False


def test_same_seed_gives_same_parameters():
    spec = build_variant('sentinel-1', 4, 2).teacher
    a = flatten_state(state_dict(init_params(spec, np.random.default_rng(5))))
    b = flatten_state(state_dict(init_params(spec, np.random.default_rng(5))))
    assert np.array_equal(a, b)


def test_feature_and_head_compose_to_logits(rng):
    model = init_params(build_variant('sentinel-1', 4, 3).teacher, rng)
    x = rng.standard_normal((5, 4))
    h = forward_features(model, x)
    assert h.shape == (5, 32) and (h >= 0).all()
    assert np.array_equal(forward_head(model, h), forward_logits(model, x))
    assert predict(model, x).shape == (5,)


def test_backward_layers_accumulates(rng):
    model = init_params(build_variant('sentinel-1', 4, 3).teacher, rng)
    x = rng.standard_normal((5, 4))
    tape = []
    out = run_layers(model.layers, x, tape)
    backward_layers(model.layers, tape, np.ones_like(out))
    once = model.layers[0].weight.grad.copy()
    backward_layers(model.layers, tape, np.ones_like(out))
    assert model.layers[0].weight.grad == pytest.approx(2 * once)
    model.zero_grad()
    assert not model.layers[0].weight.grad.any()


def test_state_dict_is_a_deep_copy(rng):
    model = init_params(build_variant('sentinel-1', 4, 3).student, rng)
    records = state_dict(model)
    records[0].values[:] = 99.0
    assert not (model.layers[0].weight.value == 99.0).any()


def test_load_state_dict_round_trip_and_mismatch(rng):
    spec = build_variant('sentinel-1', 4, 3).student
    a, b = init_params(spec, rng), init_params(spec, rng)
    load_state_dict(b, state_dict(a))
    assert np.array_equal(flatten_state(state_dict(a)), flatten_state(state_dict(b)))

    other = init_params(build_variant('sentinel-1', 5, 3).student, rng)
    with pytest.raises(ConfigError) as exc:
        load_state_dict(b, state_dict(other))
    assert 'features.0.weight' in exc.value.keys


def test_unflatten_respects_layout(rng):
    records = state_dict(init_params(build_variant('sentinel-1', 4, 3).student, rng))
    flat = flatten_state(records)
    rebuilt = unflatten_state(flat * 2.0, records)
    assert same_layout(records, rebuilt)
    assert rebuilt[0].as_array() == pytest.approx(2.0 * records[0].as_array())
    with pytest.raises(ConfigError):
        unflatten_state(flat[:-1], records)


def test_aligner_dimensions(rng):
    aligner = init_aligner(64, 32, rng)
    assert (aligner.in_dim, aligner.out_dim) == (64, 32)
    assert [p.name for p in aligner.parameters()] == ['aligner.weight', 'aligner.bias']


def test_memory_bank_fifo_eviction():
    bank = MemoryBank(capacity=3)
    bank.push(np.array([[1.0], [2.0]]))
    bank.push(np.array([[3.0], [4.0]]))
    assert len(bank) == 3
    assert bank.rows().ravel().tolist() == [2.0, 3.0, 4.0]
    bank.push(np.arange(10.0).reshape(5, 2)[:, :1])
    assert bank.rows().ravel().tolist() == [4.0, 6.0, 8.0]


def test_memory_bank_copies_rows_and_checks_width():
    bank = MemoryBank(capacity=4)
    rows = np.ones((2, 3))
    bank.push(rows)
    rows[:] = 7.0
    assert (bank.rows() == 1.0).all()
    bank.push(np.zeros((0, 3)))
    assert len(bank) == 2
    with pytest.raises(DimensionError):
        bank.push(np.ones((1, 2)))
    bank.clear()
    assert len(bank) == 0 and bank.rows().shape == (0, 3)
