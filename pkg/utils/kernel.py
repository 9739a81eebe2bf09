"""
Numeric kernel for the Sentinel simulator
Affine layers, activations, the softmax family and reductions with analytic gradients
"""
import numpy as np

from utils.errors import DimensionError, InvalidArgumentError, LabelError

NORM_EPS = 1e-8
LOG_FLOOR = 1e-12


def _require_2d(x, name):
    if x.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {x.shape}", axis=0)


def affine_forward(x, W, b):
    """y[i, j] = sum_k x[i, k] * W[k, j] + b[j]"""
    _require_2d(x, 'x')
    _require_2d(W, 'W')
    if x.shape[1] != W.shape[0]:
        raise DimensionError(
            f"input width {x.shape[1]} does not match weight rows {W.shape[0]} (axis 1 of x)",
            axis=1
        )
    if b.ndim != 1 or b.shape[0] != W.shape[1]:
        raise DimensionError(
            f"bias shape {b.shape} does not match weight columns {W.shape[1]} (axis 0 of b)",
            axis=0
        )
    return x @ W + b


def affine_backward(grad_y, x, W):
    """Return (grad_x, grad_W, grad_b) for y = x @ W + b"""
    grad_x = grad_y @ W.T
    grad_W = x.T @ grad_y
    grad_b = grad_y.sum(axis=0)
    return grad_x, grad_W, grad_b


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(grad_y, x):
    # subgradient at exactly 0 is 0
    return grad_y * (x > 0)


def softmax_with_temperature(z, T=1.0):
    """Row-wise softmax(z / T) with max subtraction"""
    if T <= 0:
        raise InvalidArgumentError(f"temperature must be positive, got {T}")
    _require_2d(z, 'z')
    scaled = z / T
    shifted = scaled - scaled.max(axis=1, keepdims=True) if scaled.size else scaled
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def log_softmax_with_temperature(z, T=1.0):
    if T <= 0:
        raise InvalidArgumentError(f"temperature must be positive, got {T}")
    _require_2d(z, 'z')
    scaled = z / T
    if not scaled.size:
        return scaled
    shifted = scaled - scaled.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_backward(grad_p, p, T=1.0):
    """Gradient w.r.t. z of a function of p = softmax(z / T)"""
    inner = (grad_p * p).sum(axis=1, keepdims=True)
    return p * (grad_p - inner) / T


def _check_labels(y, num_classes):
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        bad = int(y[(y < 0) | (y >= num_classes)][0])
        raise LabelError(f"label {bad} outside [0, {num_classes})")
    return y


def weighted_cross_entropy(z, y, w):
    """
    Class-weighted cross entropy averaged over the batch.
    Returns (loss, grad_z) with grad_z = w[y_i] * (p_i - onehot(y_i)) / B.
    """
    _require_2d(z, 'z')
    B, C = z.shape
    y = _check_labels(y, C)
    w = np.asarray(w, dtype=z.dtype)
    if w.shape != (C,):
        raise DimensionError(f"class weights shape {w.shape} does not match {C} classes", axis=0)
    if B == 0:
        return 0.0, np.zeros_like(z)

    log_p = log_softmax_with_temperature(z, 1.0)
    rows = np.arange(B)
    sample_w = w[y]
    loss = float(np.sum(sample_w * -log_p[rows, y]) / B)

    grad = np.exp(log_p)
    grad[rows, y] -= 1.0
    grad *= (sample_w / B)[:, None]
    return loss, grad


def kl_divergence(p, q):
    """Batch-mean KL(p || q); 0 * log(0 / .) = 0 and q is floored inside the log"""
    _require_2d(p, 'p')
    if p.shape != q.shape:
        raise DimensionError(f"p shape {p.shape} does not match q shape {q.shape}", axis=1)
    if (p < 0).any() or (q < 0).any():
        raise InvalidArgumentError("probability rows must be non-negative")
    if p.shape[0] == 0:
        return 0.0
    safe_p = np.where(p > 0, p, 1.0)
    terms = np.where(p > 0, p * (np.log(safe_p) - np.log(np.maximum(q, LOG_FLOOR))), 0.0)
    return float(terms.sum() / p.shape[0])


def row_norms(x):
    return np.sqrt((x * x).sum(axis=1))


def l2_normalize_rows(x):
    _require_2d(x, 'x')
    return x / (row_norms(x) + NORM_EPS)[:, None]


def l2_normalize_backward(grad_y, x):
    """Gradient w.r.t. x of y = x / (||x|| + eps), row-wise"""
    n = row_norms(x)[:, None]
    denom = n + NORM_EPS
    proj = (x * grad_y).sum(axis=1, keepdims=True)
    safe_n = np.where(n > 0, n, 1.0)
    correction = np.where(n > 0, x * proj / (safe_n * denom * denom), 0.0)
    return grad_y / denom - correction
