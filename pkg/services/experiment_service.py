"""
Experiment Service for the Sentinel simulator
Wires a complete run from a RunConfig: dataset, partition, per-client splits and
scaling, client and server state, training and report files
"""
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from models.dataset import TabularDataset
from models.network import build_variant, init_params, parameter_count
from models.server import ServerState
from services.client_engine import ClientEngine
from services.data_service import DataService
from services.report_service import ABLATION_FILE, PARTITION_FILE, LABELS_FILE, ReportService
from services.rule_engine import RuleEngine
from services.server_engine import ServerEngine
from utils.decorators import timed
from utils.errors import ConfigError
from utils.helpers import resolve_dtype, spawn_rngs

logger = logging.getLogger(__name__)

# data, partition, split, global init, selection, dropout
_SHARED_STREAMS = 6

ABLATION_ROWS = [
    ('Task+Bi-KD', 'task_bikd', False, True, False),
    ('Bal.Task+Bi-KD', 'bal_task_bikd', True, True, False),
    ('Bal.Task+Bi-KD+Align', 'bal_task_bikd_align', True, True, True),
    ('Task+Bi-KD+Align', 'task_bikd_align', False, True, True),
]


@dataclass
class Federation:
    cfg: object
    dataset: object
    plan: object
    clients: dict
    server: ServerState
    select_rng: np.random.Generator
    drop_rng: np.random.Generator
    param_counts: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    reports: list
    summary: dict
    paths: dict = field(default_factory=dict)


class ExperimentService:
    """Builds and runs federated experiments"""

    @staticmethod
    def build_dataset(cfg, rng):
        dtype = resolve_dtype(cfg.float_dtype)
        if cfg.csv_path:
            return DataService.load_csv(cfg.csv_path, cfg.label_column, dtype)
        counts = cfg.synth_class_counts
        return DataService.synth_imbalanced(len(counts), counts, cfg.synth_dim, cfg.synth_separation, rng, dtype)

    @staticmethod
    def build_partition(cfg, labels, rng):
        if cfg.is_iid:
            return DataService.iid_partition(len(labels), cfg.num_clients, rng)
        return DataService.dirichlet_partition(
            labels, cfg.num_clients, cfg.alpha, rng, cfg.min_per_client, cfg.max_partition_retries
        )

    @staticmethod
    def prepare_data(cfg):
        """Dataset and partition only; shares its random streams with build_federation"""
        rngs = spawn_rngs(cfg.seed, _SHARED_STREAMS + cfg.num_clients)
        dataset = ExperimentService.build_dataset(cfg, rngs[0])
        plan = ExperimentService.build_partition(cfg, dataset.labels, rngs[1])
        return dataset, plan, rngs

    @staticmethod
    def client_splits(cfg, dataset, plan, rng):
        """Stratified train/test split per client, then standard scaling (local or global)"""
        splits = [
            DataService.split_train_test(dataset.subset(plan.client_indices(c)), cfg.train_fraction, rng)
            for c in range(cfg.num_clients)
        ]
        if cfg.scaler_scope == 'global':
            pooled = np.concatenate([train.features for train, _ in splits])
            scaler = DataService.fit_scaler(
                TabularDataset(pooled, np.zeros(len(pooled), dtype=np.int64), dataset.num_classes)
            )
            return [(DataService.apply_scaler(scaler, tr), DataService.apply_scaler(scaler, te)) for tr, te in splits]
        scaled = []
        for train, test in splits:
            scaler = DataService.fit_scaler(train)
            scaled.append((DataService.apply_scaler(scaler, train), DataService.apply_scaler(scaler, test)))
        return scaled

    @staticmethod
    def build_federation(cfg):
        cfg = RuleEngine.require_valid(cfg)
        dtype = resolve_dtype(cfg.float_dtype)
        dataset, plan, rngs = ExperimentService.prepare_data(cfg)
        sizes = plan.client_sizes()
        logger.info(
            f"Partitioned {len(dataset)} samples over {cfg.num_clients} clients "
            f"({'IID' if cfg.is_iid else f'Dirichlet alpha={cfg.alpha}'}): sizes {sizes.tolist()}"
        )

        splits = ExperimentService.client_splits(cfg, dataset, plan, rngs[2])
        variant = None if cfg.is_fedavg else build_variant(cfg.variant, dataset.num_features, dataset.num_classes)
        student_spec = variant.student if variant is not None else ClientEngine.fedavg_spec(dataset)

        client_rngs = rngs[_SHARED_STREAMS:]
        clients = {
            c: ClientEngine.create_client(c, train, test, variant, cfg, client_rngs[c], dtype)
            for c, (train, test) in enumerate(splits)
        }
        server = ServerState(
            global_student=init_params(student_spec, rngs[3], dtype),
            eta=cfg.eta,
            beta_m=cfg.beta_momentum,
        )

        student_count = parameter_count(student_spec)
        param_counts = {
            'student_parameters': student_count,
            'bytes_per_model': student_count * np.dtype(dtype).itemsize,
        }
        if variant is not None:
            param_counts['teacher_parameters'] = parameter_count(variant.teacher)
        return Federation(cfg, dataset, plan, clients, server, rngs[4], rngs[5], param_counts)

    @staticmethod
    @timed
    def run_experiment(cfg, out_dir=None):
        """Full training run; writes the report files when out_dir is given"""
        fed = ExperimentService.build_federation(cfg)
        logger.info(
            f"Starting {fed.cfg.variant} run: {fed.cfg.num_clients} clients, {fed.cfg.rounds} rounds, "
            f"{fed.cfg.local_epochs} local epochs, seed {fed.cfg.seed}"
        )
        reports = ServerEngine.run_training(fed.clients, fed.server, fed.cfg, fed.select_rng, fed.drop_rng)
        summary = ReportService.build_summary(reports, fed.cfg, fed.param_counts)
        paths = {}
        if out_dir is not None:
            paths = ReportService.write_run_artifacts(
                out_dir, reports, fed.cfg, fed.dataset.label_mapping, fed.param_counts
            )
        final = summary['final'].get('macro_f1')
        if final:
            logger.info(f"Run finished: final macro-F1 {final['mean']:.4f} +/- {final['std']:.4f}")
        return ExperimentResult(reports, summary, paths)

    @staticmethod
    def partition_table(cfg):
        """Per-client class counts with a total-variation column against the global label mix"""
        cfg = RuleEngine.require_valid(cfg)
        dataset, plan, _ = ExperimentService.prepare_data(cfg)
        global_counts = DataService.class_counts(dataset)
        names = sorted(dataset.label_mapping, key=dataset.label_mapping.get) \
            if len(dataset.label_mapping) == dataset.num_classes else [str(c) for c in range(dataset.num_classes)]

        rows = []
        for c in range(cfg.num_clients):
            counts = DataService.class_counts(dataset.labels[plan.client_indices(c)], dataset.num_classes)
            row = {'client_id': c}
            row.update({name: int(n) for name, n in zip(names, counts)})
            row['total'] = int(counts.sum())
            row['tv_distance'] = DataService.total_variation(counts, global_counts)
            rows.append(row)
        frame = pd.DataFrame(rows, columns=['client_id', *names, 'total', 'tv_distance'])
        return frame, dataset

    @staticmethod
    def inspect_partition(cfg, out_dir=None):
        frame, dataset = ExperimentService.partition_table(cfg)
        if out_dir is not None:
            ReportService.write_partition_table(os.path.join(out_dir, PARTITION_FILE), frame)
            ReportService.write_labels(os.path.join(out_dir, LABELS_FILE), dataset.label_mapping)
        return frame

    @staticmethod
    def run_ablation(cfg, out_dir=None):
        """The four loss-component rows on the same partition and seed"""
        if cfg.is_fedavg:
            raise ConfigError("ablation compares Sentinel loss terms; variant=fedavg has none", keys=['variant'])
        rows = []
        for label, slug, balanced, kd, align in ABLATION_ROWS:
            row_cfg = cfg.with_overrides(use_balanced=balanced, use_kd=kd, use_align=align)
            logger.info(f"Ablation row {label}")
            result = ExperimentService.run_experiment(
                row_cfg, os.path.join(out_dir, slug) if out_dir is not None else None
            )
            f1 = result.summary['final'].get('macro_f1', {'mean': float('nan'), 'std': float('nan')})
            rows.append({
                'row': label, 'use_balanced': balanced, 'use_kd': kd, 'use_align': align,
                'macro_f1_mean': f1['mean'], 'macro_f1_std': f1['std'],
            })
        if out_dir is not None:
            ReportService.write_ablation(os.path.join(out_dir, ABLATION_FILE), rows)
        return rows
