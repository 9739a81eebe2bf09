"""
Report Service for the Sentinel simulator
Centralizes every artifact a run or an inspection writes to disk
"""
import json
import logging
import os

import pandas as pd

from utils.helpers import atomic_write_text

logger = logging.getLogger(__name__)

ROUND_COLUMNS = [
    'round', 'client_id', 'model', 'accuracy', 'macro_precision', 'macro_recall', 'macro_f1',
    'wall_time_s', 'lambda_kd_last', 'lambda_align_last'
]

ROUNDS_FILE = 'rounds.csv'
SUMMARY_FILE = 'summary.json'
CONFIG_ECHO_FILE = 'config.effective.env'
LABELS_FILE = 'labels.json'
PARTITION_FILE = 'partition.csv'
ABLATION_FILE = 'ablation.csv'

CONVERGENCE_FRACTION = 0.95


class ReportService:
    """Centralized report generation"""

    @staticmethod
    def rounds_frame(reports):
        rows = [row for report in reports for row in report.rows]
        return pd.DataFrame(rows, columns=ROUND_COLUMNS)

    @staticmethod
    def _csv_text(frame):
        return frame.to_csv(index=False, float_format='%.6f', na_rep='', lineterminator='\n')

    @staticmethod
    def write_rounds_csv(path, reports):
        atomic_write_text(path, ReportService._csv_text(ReportService.rounds_frame(reports)))
        return path

    @staticmethod
    def convergence_summary(reports):
        """Best mean macro-F1, the round it occurred and the first round reaching 95% of it"""
        if not reports:
            return {'best_mean_macro_f1': None, 'best_round': None, 'first_round_within_95pct': None}
        best = max(reports, key=lambda rep: (rep.mean_macro_f1, -rep.round))
        target = CONVERGENCE_FRACTION * best.mean_macro_f1
        first = next(rep.round for rep in reports if rep.mean_macro_f1 >= target)
        return {
            'best_mean_macro_f1': best.mean_macro_f1,
            'best_round': best.round,
            'first_round_within_95pct': first,
        }

    @staticmethod
    def build_summary(reports, cfg, param_counts=None):
        param_counts = param_counts or {}
        rounds = []
        for rep in reports:
            rounds.append({
                'round': rep.round,
                'selected': list(rep.selected),
                'reliable': list(rep.reliable),
                'skipped': rep.skipped,
                'bytes_down': rep.bytes_down,
                'bytes_up': rep.bytes_up,
                'metrics': {name: {'mean': m, 'std': s} for name, (m, s) in rep.mean_std.items()},
            })
        return {
            'variant': cfg.variant,
            'seed': cfg.seed,
            'num_clients': cfg.num_clients,
            'alpha': 'inf' if cfg.is_iid else cfg.alpha,
            'rounds': rounds,
            'skipped_rounds': [rep.round for rep in reports if rep.skipped],
            'final': rounds[-1]['metrics'] if rounds else {},
            'convergence': ReportService.convergence_summary(reports),
            'communication': {
                'bytes_down_total': sum(rep.bytes_down for rep in reports),
                'bytes_up_total': sum(rep.bytes_up for rep in reports),
                **param_counts,
            },
        }

    @staticmethod
    def write_summary(path, summary):
        atomic_write_text(path, json.dumps(summary, indent=2, sort_keys=False) + '\n')
        return path

    @staticmethod
    def write_effective_config(path, cfg):
        atomic_write_text(path, cfg.to_text())
        return path

    @staticmethod
    def write_labels(path, mapping):
        atomic_write_text(path, json.dumps(mapping, indent=2) + '\n')
        return path

    @staticmethod
    def write_partition_table(path, frame):
        atomic_write_text(path, frame.to_csv(index=False, float_format='%.6f', lineterminator='\n'))
        return path

    @staticmethod
    def write_ablation(path, rows):
        frame = pd.DataFrame(rows, columns=['row', 'use_balanced', 'use_kd', 'use_align',
                                            'macro_f1_mean', 'macro_f1_std'])
        atomic_write_text(path, ReportService._csv_text(frame))
        return path

    @staticmethod
    def write_run_artifacts(out_dir, reports, cfg, label_mapping, param_counts=None):
        """rounds.csv, summary.json, config.effective.env and labels.json; returns their paths"""
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            'rounds': ReportService.write_rounds_csv(os.path.join(out_dir, ROUNDS_FILE), reports),
            'summary': ReportService.write_summary(
                os.path.join(out_dir, SUMMARY_FILE), ReportService.build_summary(reports, cfg, param_counts)
            ),
            'config': ReportService.write_effective_config(os.path.join(out_dir, CONFIG_ECHO_FILE), cfg),
            'labels': ReportService.write_labels(os.path.join(out_dir, LABELS_FILE), label_mapping),
        }
        for name, path in paths.items():
            logger.info(f"Wrote {name} to {path}")
        return paths
