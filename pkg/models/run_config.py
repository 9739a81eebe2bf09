"""
Experiment configuration for a Sentinel or FedAvg run
Stored on disk as a flat key=value file read with python-dotenv
"""
import io
import math
from dataclasses import dataclass, field, fields, replace

from dotenv import dotenv_values

from models.network import normalize_variant
from utils.errors import ConfigError
from utils.helpers import parse_bool, parse_delays, parse_int_list, format_delays

ABLATION_KEYS = ('use_balanced', 'use_kd', 'use_align')


@dataclass
class RunConfig:
    """Defaults: 10 clients, 100 rounds of 5 local epochs, batch 64, lr 0.005"""
    # data source: csv_path + label_column, or the synthetic long-tail generator
    csv_path: str = None
    label_column: str = 'label'
    synth_class_counts: tuple = (2000, 400, 200, 100)
    synth_dim: int = 16
    synth_separation: float = 3.0

    # federation
    num_clients: int = 10
    rounds: int = 100
    local_epochs: int = 5
    batch_size: int = 64
    variant: str = 'sentinel-2'
    alpha: float = 1.0
    seed: int = 13
    rho: float = 1.0
    p_drop: float = 0.0
    t_thresh: float = 10000.0
    eta: float = 1.0
    beta_momentum: float = 0.9

    # ablation switches
    use_balanced: bool = True
    use_kd: bool = True
    use_align: bool = True

    # optimisation
    lr: float = 0.005
    weight_decay: float = 0.0
    lr_decay: float = 1.0
    clip_max_norm: float = 1.0
    beta_cb: float = 0.999
    bank_capacity: int = 1024
    delta_mode: str = 'product'
    reset_student_optimizer: bool = False

    # data handling
    train_fraction: float = 0.8
    min_per_client: int = 10
    max_partition_retries: int = 100
    scaler_scope: str = 'local'

    # reporting and execution
    macro_mode: str = 'all'
    report_student: bool = False
    report_wall_time: bool = True
    straggler_delays: dict = field(default_factory=dict)
    float_dtype: str = 'float64'
    threads: int = 1
    output_dir: str = 'runs/latest'

    explicit_keys: frozenset = field(default=frozenset(), compare=False, repr=False)

    @property
    def is_iid(self):
        return math.isinf(self.alpha)

    @property
    def is_fedavg(self):
        return self.variant == 'fedavg'

    def with_overrides(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, explicit_keys=self.explicit_keys | frozenset(overrides), **overrides)

    # ---- serialization ----

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls) if f.name != 'explicit_keys']

    @classmethod
    def from_mapping(cls, mapping):
        """Parse raw string values; unknown or unparsable keys raise ConfigError"""
        defaults = cls()
        known = set(cls.field_names())
        values, bad = {}, []
        for raw_key, raw_value in mapping.items():
            key = raw_key.strip().lower()
            if key not in known:
                bad.append(raw_key)
                continue
            try:
                values[key] = _parse_value(key, getattr(defaults, key), raw_value)
            except (TypeError, ValueError):
                bad.append(key)
        if bad:
            raise ConfigError("invalid configuration", keys=bad)
        return replace(defaults, explicit_keys=frozenset(values), **values)

    @classmethod
    def from_text(cls, text):
        return cls.from_mapping(dotenv_values(stream=io.StringIO(text)))

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding='utf-8') as handle:
                text = handle.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}")
        return cls.from_text(text)

    def to_text(self):
        return ''.join(f"{name}={_format_value(getattr(self, name))}\n" for name in self.field_names())

    def effective(self):
        """Values as actually used; FedAvg trains a single model without the Sentinel terms"""
        if self.is_fedavg:
            return replace(self, use_balanced=False, use_kd=False, use_align=False)
        return self


def _parse_value(key, default, raw):
    raw = '' if raw is None else str(raw).strip()
    if key == 'alpha':
        if raw.lower() in ('inf', 'infinity', 'iid'):
            return math.inf
        return float(raw)
    if key == 'straggler_delays':
        return parse_delays(raw)
    if key == 'synth_class_counts':
        return tuple(parse_int_list(raw))
    if key in ('csv_path',):
        return raw or None
    if key == 'variant':
        return 'fedavg' if raw.lower() == 'fedavg' else normalize_variant(raw)
    if isinstance(default, bool):
        return parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _format_value(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return 'inf' if math.isinf(value) else repr(value)
    if isinstance(value, tuple):
        return ','.join(str(v) for v in value)
    if isinstance(value, dict):
        return format_delays(value)
    return str(value)
