"""
Teacher, student and aligner networks for the Sentinel simulator
MLPs are split into a feature extractor and a classification head so the losses can
reach the intermediate features h.
"""
from dataclasses import dataclass, field

import numpy as np

from models.tensor import ParamTensor, ParamRecord
from utils.errors import ConfigError, InvalidArgumentError
from utils.kernel import affine_backward, affine_forward, relu, relu_backward

# (teacher FE, teacher head, student FE, student head)
VARIANT_WIDTHS = {
    'sentinel-1': ((64, 32), (16,), (64, 32), (16,)),
    'sentinel-2': ((128, 64), (32,), (64, 32), (16,)),
}

_VARIANT_ALIASES = {
    'sentinel-1': 'sentinel-1', 'sentinel-i': 'sentinel-1', 'sentinel1': 'sentinel-1', '1': 'sentinel-1',
    'sentinel-2': 'sentinel-2', 'sentinel-ii': 'sentinel-2', 'sentinel2': 'sentinel-2', '2': 'sentinel-2',
}


def normalize_variant(variant):
    key = str(variant).strip().lower().replace('_', '-').replace(' ', '-')
    if key not in _VARIANT_ALIASES:
        raise InvalidArgumentError(f"Unknown model variant '{variant}'")
    return _VARIANT_ALIASES[key]


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths of a feature-extractor / head MLP"""
    input_dim: int
    feature_widths: tuple
    head_widths: tuple
    num_classes: int

    def __post_init__(self):
        if self.input_dim < 1 or self.num_classes < 1:
            raise InvalidArgumentError("input_dim and num_classes must be >= 1")
        if not self.feature_widths or not self.head_widths:
            raise InvalidArgumentError("feature_widths and head_widths must be non-empty")
        if any(w < 1 for w in tuple(self.feature_widths) + tuple(self.head_widths)):
            raise InvalidArgumentError("layer widths must be positive")

    @property
    def feature_dim(self):
        return self.feature_widths[-1]

    def feature_dims(self):
        return [self.input_dim, *self.feature_widths]

    def head_dims(self):
        return [self.feature_dim, *self.head_widths, self.num_classes]


@dataclass(frozen=True)
class VariantSpec:
    name: str
    teacher: MlpSpec
    student: MlpSpec
    aligner_in: int
    aligner_out: int


def build_variant(variant, input_dim, num_classes):
    """Teacher/student MLP specs and aligner dimensions for a named variant"""
    name = normalize_variant(variant)
    t_fe, t_head, s_fe, s_head = VARIANT_WIDTHS[name]
    teacher = MlpSpec(input_dim, t_fe, t_head, num_classes)
    student = MlpSpec(input_dim, s_fe, s_head, num_classes)
    return VariantSpec(name, teacher, student, teacher.feature_dim, student.feature_dim)


def parameter_count(spec):
    dims = spec.feature_dims() + list(spec.head_dims()[1:])
    return sum(d_in * d_out + d_out for d_in, d_out in zip(dims[:-1], dims[1:]))


@dataclass
class AffineLayer:
    weight: ParamTensor
    bias: ParamTensor
    activation: bool = True

    @property
    def in_dim(self):
        return self.weight.shape[0]

    @property
    def out_dim(self):
        return self.weight.shape[1]


@dataclass
class ModelParams:
    spec: MlpSpec
    feature_layers: list = field(default_factory=list)
    head_layers: list = field(default_factory=list)

    @property
    def layers(self):
        return self.feature_layers + self.head_layers

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def param_count(self):
        return sum(p.size for p in self.parameters())

    def clone(self):
        """Explicit deep copy for broadcast"""
        def copy_layers(layers):
            return [AffineLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in layers]
        return ModelParams(self.spec, copy_layers(self.feature_layers), copy_layers(self.head_layers))


@dataclass
class AlignerParams:
    """Single affine map teacher-feature -> student-feature followed by ReLU"""
    layer: AffineLayer

    @property
    def in_dim(self):
        return self.layer.in_dim

    @property
    def out_dim(self):
        return self.layer.out_dim

    def parameters(self):
        return [self.layer.weight, self.layer.bias]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


def _init_layer(name, d_in, d_out, activation, rng, dtype):
    bound = 1.0 / np.sqrt(d_in)
    weight = rng.uniform(-bound, bound, size=(d_in, d_out)).astype(dtype)
    bias = np.zeros(d_out, dtype=dtype)
    return AffineLayer(ParamTensor(f"{name}.weight", weight), ParamTensor(f"{name}.bias", bias), activation)


def init_params(spec, rng, dtype=np.float64):
    """Fan-in uniform weights, zero biases; draws are consumed layer by layer"""
    fe_dims = spec.feature_dims()
    feature_layers = [
        _init_layer(f"features.{i}", d_in, d_out, True, rng, dtype)
        for i, (d_in, d_out) in enumerate(zip(fe_dims[:-1], fe_dims[1:]))
    ]
    head_dims = spec.head_dims()
    last = len(head_dims) - 2
    head_layers = [
        _init_layer(f"head.{i}", d_in, d_out, i < last, rng, dtype)
        for i, (d_in, d_out) in enumerate(zip(head_dims[:-1], head_dims[1:]))
    ]
    return ModelParams(spec, feature_layers, head_layers)


def init_aligner(d_in, d_out, rng, dtype=np.float64):
    return AlignerParams(_init_layer("aligner", d_in, d_out, True, rng, dtype))


def run_layers(layers, x, tape=None):
    """Apply affine layers in order; tape (if given) records (input, pre-activation) per layer"""
    out = x
    for layer in layers:
        pre = affine_forward(out, layer.weight.value, layer.bias.value)
        if tape is not None:
            tape.append((out, pre))
        out = relu(pre) if layer.activation else pre
    return out


def backward_layers(layers, tape, grad_out):
    """Accumulate parameter gradients along a recorded tape; returns the input gradient"""
    grad = grad_out
    for layer, (x_in, pre) in zip(reversed(layers), reversed(tape)):
        if layer.activation:
            grad = relu_backward(grad, pre)
        grad, grad_W, grad_b = affine_backward(grad, x_in, layer.weight.value)
        layer.weight.grad += grad_W
        layer.bias.grad += grad_b
    return grad


def forward_features(m, x, tape=None):
    return run_layers(m.feature_layers, x, tape)


def forward_head(m, h, tape=None):
    return run_layers(m.head_layers, h, tape)


def forward_logits(m, x):
    return run_layers(m.layers, x)


def aligner_forward(a, h_T_detached, tape=None):
    # the caller hands in a detached copy; gradients stop at the aligner
    return run_layers([a.layer], h_T_detached, tape)


def predict(m, x):
    logits = forward_logits(m, x)
    return np.argmax(logits, axis=1) if len(logits) else np.zeros(0, dtype=np.int64)


def state_dict(m):
    """Deep-copied flat records (name, shape, row-major values)"""
    return [ParamRecord(p.name, tuple(p.shape), p.value.ravel().copy()) for p in m.parameters()]


def load_state_dict(m, records):
    params = m.parameters()
    if len(records) != len(params):
        raise ConfigError(
            f"state dictionary has {len(records)} entries, model expects {len(params)}",
            keys=[r.name for r in records]
        )
    bad = [r.name for r, p in zip(records, params) if r.name != p.name or tuple(r.shape) != tuple(p.shape)]
    if bad:
        raise ConfigError("broadcast parameters are not shape-compatible with the local student", keys=bad)
    for r, p in zip(records, params):
        p.value[...] = r.as_array()


def flatten_state(records):
    if not records:
        return np.zeros(0)
    return np.concatenate([r.values for r in records])


def unflatten_state(vector, template):
    records, offset = [], 0
    for r in template:
        n = int(np.prod(r.shape))
        records.append(ParamRecord(r.name, tuple(r.shape), vector[offset:offset + n].copy()))
        offset += n
    if offset != len(vector):
        raise ConfigError(f"flat vector length {len(vector)} does not match layout size {offset}")
    return records


def same_layout(a, b):
    return len(a) == len(b) and all(x.name == y.name and tuple(x.shape) == tuple(y.shape) for x, y in zip(a, b))
