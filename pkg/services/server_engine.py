"""
Server Engine for the Sentinel simulator
Client selection, dropout / straggler filtering, normalized pseudo-gradient aggregation
with server momentum, the FedAvg baseline and the multi-round orchestration loop
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from models.network import flatten_state, load_state_dict, same_layout, unflatten_state
from models.server import RoundReport, SelectionConfig
from services.client_engine import ClientEngine
from services.metrics_service import MetricsService
from utils.errors import ConfigError, SentinelError, TrainingAbortedError

logger = logging.getLogger(__name__)

ZERO_UPDATE_NORM = 1e-12


class ServerEngine:
    """Server operations; all of them run on the orchestrator thread"""

    @staticmethod
    def select_clients(all_ids, rho, rng):
        """Uniform sample without replacement of ceil(rho * N) clients, returned sorted"""
        all_ids = list(all_ids)
        count = SelectionConfig(rho=rho).selected_count(len(all_ids))
        if count >= len(all_ids):
            return sorted(all_ids)
        chosen = rng.choice(len(all_ids), size=count, replace=False)
        return sorted(all_ids[i] for i in chosen)

    @staticmethod
    def filter_reliable(selected, rng, p_drop, times, t_thresh):
        """
        Survivors of independent Bernoulli(1 - p_drop) dropout whose time t_c is within
        t_thresh. One draw is consumed per selected client even when p_drop is 0.
        """
        draws = rng.random(len(selected))
        reliable = []
        for c, u in zip(selected, draws):
            if u < p_drop:
                logger.debug(f"Client {c} dropped out")
                continue
            t_c = times.get(c, 0.0)
            if t_c > t_thresh:
                logger.warning(f"Client {c} excluded as straggler ({t_c:.1f}s > {t_thresh:.1f}s)")
                continue
            reliable.append(c)
        return reliable

    @staticmethod
    def aggregate_normalized(global_params, client_params):
        """
        Equal-weight mean of unit-norm pseudo-gradients g_i = global - client_i.
        A client whose update norm is at most 1e-12 contributes the zero vector.
        Returns (g_bar, norms).
        """
        if not client_params:
            raise ConfigError("aggregate_normalized needs at least one client update")
        for records in client_params:
            if not same_layout(global_params, records):
                raise ConfigError(
                    "client parameter layout differs from the global layout",
                    keys=[r.name for r in records]
                )
        theta = flatten_state(global_params)
        total = np.zeros_like(theta)
        norms = []
        for records in client_params:
            g = theta - flatten_state(records)
            norm = float(np.linalg.norm(g))
            norms.append(norm)
            if norm > ZERO_UPDATE_NORM:
                total += g / (norm + 1e-8)
        return total / len(client_params), norms

    @staticmethod
    def momentum_update(st, g_bar):
        """v <- beta_m v + (1 - beta_m) g_bar; theta <- theta - eta v; round += 1"""
        g_bar = np.asarray(g_bar)
        if g_bar.shape != st.momentum.shape:
            raise ConfigError(f"aggregate of shape {g_bar.shape} does not match momentum {st.momentum.shape}")
        st.momentum = st.beta_m * st.momentum + (1.0 - st.beta_m) * g_bar
        records = st.records()
        theta = flatten_state(records) - st.eta * st.momentum
        load_state_dict(st.global_student, unflatten_state(theta, records))
        st.round += 1
        return st

    @staticmethod
    def fedavg_aggregate(client_params, sample_counts):
        """Parameter-wise mean weighted by n_i / sum(n)"""
        if not client_params:
            raise ConfigError("fedavg_aggregate needs at least one client update")
        counts = np.asarray(sample_counts, dtype=np.float64)
        if len(counts) != len(client_params) or (counts <= 0).any():
            raise ConfigError("sample counts must be positive, one per client")
        template = client_params[0]
        for records in client_params[1:]:
            if not same_layout(template, records):
                raise ConfigError("client parameter layouts differ", keys=[r.name for r in records])
        weights = counts / counts.sum()
        mean = sum(w * flatten_state(records) for w, records in zip(weights, client_params))
        return unflatten_state(mean, template)

    # ---- orchestration ----

    @staticmethod
    def _train_selected(clients, selected, broadcast, r, cfg):
        update = ClientEngine.client_update if not cfg.is_fedavg else ClientEngine.fedavg_client_update

        def run(c):
            try:
                return update(clients[c], broadcast, r, cfg)
            except SentinelError as e:
                raise TrainingAbortedError(
                    f"client {c} failed in round {r}: {e}", round_index=r, client_id=c
                ) from e

        if cfg.threads <= 1 or len(selected) <= 1:
            return [run(c) for c in selected]
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(run, c) for c in selected]
            # collected in selection order, independent of completion order
            return [f.result() for f in futures]

    @staticmethod
    def _report_rows(clients, server, r, selected, cfg):
        rows = []
        primary = []
        for c in sorted(clients):
            st = clients[c]
            if cfg.is_fedavg:
                models = [('global', server.global_student)]
            else:
                models = [('teacher', st.teacher)]
                if cfg.report_student:
                    models.append(('student', st.student))
            lambda_kd, lambda_align = st.lambda_trace[-1] if st.lambda_trace else (float('nan'), float('nan'))
            wall = st.last_round_wall_time if (c in selected and cfg.report_wall_time) else 0.0
            for name, params in models:
                report = ClientEngine.evaluate_model(params, st.test, cfg.macro_mode)
                row = {'round': r, 'client_id': c, 'model': name}
                row.update(report.summary())
                row.update({'wall_time_s': wall, 'lambda_kd_last': lambda_kd, 'lambda_align_last': lambda_align})
                rows.append(row)
                if name in ('teacher', 'global'):
                    primary.append(report)
        mean_std = {
            metric: MetricsService.mean_std(getattr(rep, metric) for rep in primary)
            for metric in MetricsService.METRIC_NAMES
        }
        return rows, mean_std

    @staticmethod
    def run_round(clients, server, cfg, select_rng, drop_rng):
        """One round of selection, local training, filtering, aggregation and evaluation"""
        r = server.round + 1
        sel = SelectionConfig(cfg.rho, cfg.p_drop, cfg.t_thresh)
        selected = ServerEngine.select_clients(sorted(clients), sel.rho, select_rng)
        broadcast = server.records()
        bytes_per_model = sum(rec.values.size * rec.values.itemsize for rec in broadcast)

        updates = ServerEngine._train_selected(clients, selected, broadcast, r, cfg)
        times = {c: clients[c].average_round_time for c in selected}
        reliable = ServerEngine.filter_reliable(selected, drop_rng, sel.p_drop, times, sel.t_thresh)
        report = RoundReport(
            round=r,
            selected=selected,
            reliable=reliable,
            bytes_down=len(selected) * bytes_per_model,
            bytes_up=len(reliable) * bytes_per_model,
        )

        kept = [u for c, u in zip(selected, updates) if c in reliable]
        if not kept:
            logger.warning(f"Round {r}: no reliable clients, global model unchanged")
            report.skipped = True
            server.round += 1
        elif cfg.is_fedavg:
            counts = [len(clients[c].train) for c in reliable]
            load_state_dict(server.global_student, ServerEngine.fedavg_aggregate(kept, counts))
            server.round += 1
        else:
            g_bar, norms = ServerEngine.aggregate_normalized(broadcast, kept)
            report.update_norms = dict(zip(reliable, norms))
            ServerEngine.momentum_update(server, g_bar)

        report.rows, report.mean_std = ServerEngine._report_rows(clients, server, r, selected, cfg)
        f1_mean, f1_std = report.mean_std['macro_f1']
        logger.info(
            f"Round {r}: {len(reliable)}/{len(selected)} reliable clients, "
            f"macro-F1 {f1_mean:.4f} +/- {f1_std:.4f}, {report.bytes_down + report.bytes_up} bytes moved"
        )
        return report

    @staticmethod
    def run_training(clients, server, cfg, select_rng, drop_rng):
        """
        Runs cfg.rounds federated rounds. `clients` maps client id -> ClientState.
        Returns the list of RoundReport (empty for R = 0).
        """
        if not clients:
            raise ConfigError("run_training needs at least one client", keys=['num_clients'])
        reports = []
        for _ in range(cfg.rounds):
            reports.append(ServerEngine.run_round(clients, server, cfg, select_rng, drop_rng))
        return reports
