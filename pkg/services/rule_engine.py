"""
Rule Engine for the Sentinel simulator
Centralizes every validation rule a run configuration must satisfy
"""
import math

from models.network import VARIANT_WIDTHS
from models.run_config import ABLATION_KEYS
from utils.errors import ConfigError


class RuleEngine:
    """Centralized configuration rules and validation logic"""

    VARIANTS = tuple(VARIANT_WIDTHS) + ('fedavg',)
    DELTA_MODES = ('product', 'geometric')
    MACRO_MODES = ('all', 'present')
    SCALER_SCOPES = ('local', 'global')
    FLOAT_DTYPES = ('float64', 'float32')

    @staticmethod
    def validate_run_config(cfg):
        """Check every field; collects all offending keys instead of stopping at the first"""
        result = {'valid': True, 'reason': '', 'errors': []}

        checks = [
            ('num_clients', cfg.num_clients >= 1, 'must be >= 1'),
            ('rounds', cfg.rounds >= 0, 'must be >= 0'),
            ('local_epochs', cfg.local_epochs >= 0, 'must be >= 0'),
            ('batch_size', cfg.batch_size >= 1, 'must be >= 1'),
            ('lr', cfg.lr > 0, 'must be positive'),
            ('weight_decay', cfg.weight_decay >= 0, 'must be non-negative'),
            ('lr_decay', cfg.lr_decay > 0, 'must be positive'),
            ('clip_max_norm', cfg.clip_max_norm > 0, 'must be positive'),
            ('variant', cfg.variant in RuleEngine.VARIANTS, f'must be one of {RuleEngine.VARIANTS}'),
            ('alpha', cfg.alpha > 0 and not math.isnan(cfg.alpha), 'must be positive or inf'),
            ('rho', 0 < cfg.rho <= 1, 'must lie in (0, 1]'),
            ('p_drop', 0 <= cfg.p_drop < 1, 'must lie in [0, 1)'),
            ('t_thresh', cfg.t_thresh > 0, 'must be positive'),
            ('eta', cfg.eta > 0, 'must be positive'),
            ('beta_momentum', 0 <= cfg.beta_momentum < 1, 'must lie in [0, 1)'),
            ('beta_cb', 0 <= cfg.beta_cb < 1, 'must lie in [0, 1)'),
            ('bank_capacity', cfg.bank_capacity >= 1, 'must be >= 1'),
            ('delta_mode', cfg.delta_mode in RuleEngine.DELTA_MODES, f'must be one of {RuleEngine.DELTA_MODES}'),
            ('macro_mode', cfg.macro_mode in RuleEngine.MACRO_MODES, f'must be one of {RuleEngine.MACRO_MODES}'),
            ('scaler_scope', cfg.scaler_scope in RuleEngine.SCALER_SCOPES, f'must be one of {RuleEngine.SCALER_SCOPES}'),
            ('float_dtype', cfg.float_dtype in RuleEngine.FLOAT_DTYPES, f'must be one of {RuleEngine.FLOAT_DTYPES}'),
            ('train_fraction', 0 < cfg.train_fraction < 1, 'must lie in (0, 1)'),
            ('min_per_client', cfg.min_per_client >= 1, 'must be >= 1'),
            ('max_partition_retries', cfg.max_partition_retries >= 1, 'must be >= 1'),
            ('threads', cfg.threads >= 1, 'must be >= 1'),
            ('straggler_delays', all(v >= 0 for v in cfg.straggler_delays.values()), 'delays must be >= 0'),
        ]
        for key, ok, message in checks:
            if not ok:
                result['errors'].append((key, message))

        source = RuleEngine.validate_data_source(cfg)
        result['errors'].extend(source['errors'])

        compat = RuleEngine.validate_variant_flags(cfg)
        result['errors'].extend(compat['errors'])

        if result['errors']:
            result['valid'] = False
            result['reason'] = '; '.join(f"{key}: {message}" for key, message in result['errors'])
        return result

    @staticmethod
    def validate_data_source(cfg):
        result = {'valid': True, 'reason': '', 'errors': []}
        if cfg.csv_path:
            if not cfg.label_column:
                result['errors'].append(('label_column', 'required with csv_path'))
        else:
            counts = cfg.synth_class_counts
            if len(counts) < 2 or any(c < 1 for c in counts):
                result['errors'].append(('synth_class_counts', 'needs >= 2 classes with >= 1 sample each'))
            if cfg.synth_dim < 1:
                result['errors'].append(('synth_dim', 'must be >= 1'))
            if cfg.synth_separation < 0:
                result['errors'].append(('synth_separation', 'must be non-negative'))
        result['valid'] = not result['errors']
        return result

    @staticmethod
    def validate_variant_flags(cfg):
        """FedAvg trains one plain-CE model; explicitly enabling a Sentinel term is a conflict"""
        result = {'valid': True, 'reason': '', 'errors': []}
        if cfg.is_fedavg:
            for key in ABLATION_KEYS:
                if key in cfg.explicit_keys and getattr(cfg, key):
                    result['errors'].append((key, 'incompatible with variant=fedavg'))
        result['valid'] = not result['errors']
        if not result['valid']:
            result['reason'] = 'FedAvg does not use Sentinel loss terms'
        return result

    @staticmethod
    def require_valid(cfg):
        """Raise ConfigError listing the offending keys when the configuration is invalid"""
        result = RuleEngine.validate_run_config(cfg)
        if not result['valid']:
            keys = []
            for key, _ in result['errors']:
                if key not in keys:
                    keys.append(key)
            raise ConfigError(f"invalid configuration: {result['reason']}", keys=keys)
        return cfg.effective()
