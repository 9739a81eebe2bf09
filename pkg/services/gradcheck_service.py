"""
Gradcheck Service for the Sentinel simulator
Central finite-difference verification of every hand-derived gradient
"""
import logging
from dataclasses import dataclass

import numpy as np

from models.loss_state import AlignConfig, ClassWeights
from models.network import MlpSpec, backward_layers, init_params, run_layers
from services.loss_engine import LossEngine
from utils.errors import FeasibilityError, InvalidArgumentError
from utils.kernel import l2_normalize_backward, l2_normalize_rows, weighted_cross_entropy

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
REL_FLOOR = 1e-6
KINK_MARGIN = 10 * FD_STEP


@dataclass
class GradcheckResult:
    name: str
    max_rel_error: float
    trials: int
    passed: bool


def relative_error(analytic, numeric):
    """max|a - n| / max(1e-6, max|a|, max|n|)"""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(REL_FLOOR, float(np.abs(analytic).max(initial=0.0)), float(np.abs(numeric).max(initial=0.0)))
    return float(np.abs(analytic - numeric).max(initial=0.0)) / scale


def numeric_gradient(f, x, step=FD_STEP):
    """Central differences of scalar f with respect to every entry of x (x is restored)"""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = f()
        flat[i] = original - step
        minus = f()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * step)
    return grad


def _instance(rng, batch=4, classes=3):
    z_T = rng.standard_normal((batch, classes)) * 2.0
    z_S = rng.standard_normal((batch, classes)) * 2.0
    y = rng.integers(0, classes, size=batch)
    w = ClassWeights(rng.uniform(0.2, 5.0, size=classes))
    return z_T, z_S, y, w


def check_task(rng):
    z_T, z_S, y, w = _instance(rng)
    result = LossEngine.task_loss(z_T, z_S, y, w)
    num_T = numeric_gradient(lambda: LossEngine.task_loss(z_T, z_S, y, w).loss, z_T)
    num_S = numeric_gradient(lambda: LossEngine.task_loss(z_T, z_S, y, w).loss, z_S)
    return max(relative_error(result.grad_teacher, num_T), relative_error(result.grad_student, num_S))


def check_kd_student(rng):
    """delta = 0 leaves only the (1 - gamma) term, whose gradient reaches the student"""
    z_T, z_S, y, w = _instance(rng)
    T, gamma = rng.uniform(1.0, 3.0), rng.uniform(0.0, 1.0)
    result = LossEngine.kd_loss(z_T, z_S, y, w, T, gamma, 0.0)
    num = numeric_gradient(lambda: LossEngine.kd_loss(z_T, z_S, y, w, T, gamma, 0.0).loss, z_S)
    return relative_error(result.grad_student, num)


def check_kd_teacher(rng):
    """gamma = 1 leaves only the delta term, whose gradient reaches the teacher"""
    z_T, z_S, y, w = _instance(rng)
    T, delta = rng.uniform(1.0, 3.0), rng.uniform(0.0, 1.0)
    result = LossEngine.kd_loss(z_T, z_S, y, w, T, 1.0, delta)
    num = numeric_gradient(lambda: LossEngine.kd_loss(z_T, z_S, y, w, T, 1.0, delta).loss, z_T)
    return relative_error(result.grad_teacher, num)


def check_geometric(rng):
    hp, hm = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    _, g_hp, g_m = LossEngine.geometric_loss(hp, hm)
    num_hp = numeric_gradient(lambda: LossEngine.geometric_loss(hp, hm)[0], hp)
    num_m = numeric_gradient(lambda: LossEngine.geometric_loss(hp, hm)[0], hm)
    return max(relative_error(g_hp, num_hp), relative_error(g_m, num_m))


def check_directional(rng):
    hp, hm = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    _, g_hp, g_m, _ = LossEngine.directional_loss(hp, hm)
    num_hp = numeric_gradient(lambda: LossEngine.directional_loss(hp, hm)[0], hp)
    num_m = numeric_gradient(lambda: LossEngine.directional_loss(hp, hm)[0], hm)
    return max(relative_error(g_hp, num_hp), relative_error(g_m, num_m))


def check_contrastive(rng):
    hp, hs, bank = rng.standard_normal((4, 5)), rng.standard_normal((4, 5)), rng.standard_normal((6, 5))
    tau = rng.uniform(0.1, 0.5)
    _, g_hp, g_s = LossEngine.contrastive_loss(hp, hs, bank, tau)
    num_hp = numeric_gradient(lambda: LossEngine.contrastive_loss(hp, hs, bank, tau)[0], hp)
    num_s = numeric_gradient(lambda: LossEngine.contrastive_loss(hp, hs, bank, tau)[0], hs)
    return max(relative_error(g_hp, num_hp), relative_error(g_s, num_s))


def check_alignment(rng):
    """Composite alignment loss; random rows keep the nearest-neighbour choice stable under the step"""
    hp, hs, bank = rng.standard_normal((4, 5)), rng.standard_normal((4, 5)), rng.standard_normal((6, 5))
    cfg = AlignConfig()
    result = LossEngine.alignment_loss(hp, hs, bank, cfg)
    num_hp = numeric_gradient(lambda: LossEngine.alignment_loss(hp, hs, bank, cfg).loss, hp)
    num_s = numeric_gradient(lambda: LossEngine.alignment_loss(hp, hs, bank, cfg).loss, hs)
    return max(relative_error(result.grad_projected, num_hp), relative_error(result.grad_student, num_s))


def check_l2_normalize(rng):
    x = rng.standard_normal((4, 5))
    upstream = rng.standard_normal((4, 5))
    analytic = l2_normalize_backward(upstream, x)
    num = numeric_gradient(lambda: float((l2_normalize_rows(x) * upstream).sum()), x)
    return relative_error(analytic, num)


def _network_instance(rng, max_draws=1000):
    """
    Small ReLU MLP with random biases and a batch whose pre-activations all keep at least
    KINK_MARGIN from zero, so the central difference never straddles a ReLU kink
    """
    for _ in range(max_draws):
        model = init_params(MlpSpec(5, (6, 4), (3,), 3), rng)
        for layer in model.layers:
            layer.bias.value[...] = rng.uniform(-0.5, 0.5, size=layer.bias.shape)
        x = rng.standard_normal((4, 5))
        tape = []
        run_layers(model.layers, x, tape)
        gaps = [np.abs(pre).min() for layer, (_, pre) in zip(model.layers, tape) if layer.activation]
        if min(gaps) >= KINK_MARGIN:
            return model, x
    raise FeasibilityError(f"no network instance clear of ReLU kinks after {max_draws} draws")


def check_network(rng):
    """Weighted cross entropy through a small ReLU MLP, every weight and bias"""
    model, x = _network_instance(rng)
    y = rng.integers(0, 3, size=4)
    w = rng.uniform(0.2, 5.0, size=3)

    def loss():
        return weighted_cross_entropy(run_layers(model.layers, x), y, w)[0]

    model.zero_grad()
    tape = []
    _, grad = weighted_cross_entropy(run_layers(model.layers, x, tape), y, w)
    backward_layers(model.layers, tape, grad)
    return max(relative_error(p.grad, numeric_gradient(loss, p.value)) for p in model.parameters())


CHECKS = {
    'task': check_task,
    'kd_student': check_kd_student,
    'kd_teacher': check_kd_teacher,
    'geometric': check_geometric,
    'directional': check_directional,
    'contrastive': check_contrastive,
    'alignment': check_alignment,
    'l2_normalize': check_l2_normalize,
    'network': check_network,
}


class GradcheckService:
    """Runs the finite-difference suite"""

    @staticmethod
    def run_check(name, trials=100, tolerance=1e-4, seed=0):
        if name not in CHECKS:
            raise InvalidArgumentError(f"Unknown gradient check '{name}'; expected one of {sorted(CHECKS)}")
        rng = np.random.default_rng(seed)
        worst = max(CHECKS[name](rng) for _ in range(trials))
        return GradcheckResult(name, worst, trials, worst < tolerance)

    @staticmethod
    def run_suite(trials=100, tolerance=1e-4, seed=0, names=None):
        results = []
        for offset, name in enumerate(names or CHECKS):
            result = GradcheckService.run_check(name, trials, tolerance, seed + offset)
            level = logging.INFO if result.passed else logging.ERROR
            logger.log(level, f"gradcheck {name}: max relative error {result.max_rel_error:.3e}")
            results.append(result)
        return results

    @staticmethod
    def all_passed(results):
        return all(r.passed for r in results)
