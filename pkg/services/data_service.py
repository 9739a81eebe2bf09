"""
Data Service for the Sentinel simulator
CSV ingestion, standard scaling, Dirichlet / IID partitioning, stratified splitting
and synthetic long-tail datasets
"""
import logging
import os

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler

from models.dataset import PartitionPlan, ScalerParams, TabularDataset
from utils.errors import DataError, FeasibilityError, InvalidArgumentError

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-8


class DataService:
    """Dataset construction and federated partitioning"""

    @staticmethod
    def load_csv(path, label_column, dtype=np.float64):
        """
        Read a header-first UTF-8 CSV. Integer labels are recoded to contiguous codes in
        ascending order, string labels in first-appearance order
        """
        if not os.path.exists(path):
            raise DataError(f"CSV file not found: {path}")
        try:
            df = pd.read_csv(path, encoding='utf-8')
        except pd.errors.EmptyDataError:
            raise DataError(f"CSV file is empty: {path}")

        if label_column not in df.columns:
            raise DataError(f"label column '{label_column}' not found in {path}", column=label_column)
        if df.empty:
            raise DataError(f"CSV file has a header but no rows: {path}")

        feature_names = [c for c in df.columns if c != label_column]
        if not feature_names:
            raise DataError(f"no feature columns besides '{label_column}' in {path}")

        columns = []
        for name in feature_names:
            numeric = pd.to_numeric(df[name], errors='coerce')
            bad = numeric.isna()
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                # +2: one header line, one-based line numbers
                raise DataError(
                    f"non-numeric value {df[name].iloc[row]!r} at line {row + 2}, column '{name}'",
                    row=row + 2, column=name
                )
            columns.append(numeric.to_numpy(dtype=dtype))
        features = np.column_stack(columns)

        raw_labels = df[label_column]
        if pd.api.types.is_integer_dtype(raw_labels):
            values, labels = np.unique(raw_labels.to_numpy(dtype=np.int64), return_inverse=True)
            labels = labels.astype(np.int64)
            num_classes = len(values)
            mapping = {str(v): code for code, v in enumerate(values.tolist())}
        else:
            names = raw_labels.astype(str)
            mapping = {name: code for code, name in enumerate(pd.unique(names))}
            labels = names.map(mapping).to_numpy(dtype=np.int64)
            num_classes = len(mapping)

        logger.info(f"Loaded {len(labels)} rows, {len(feature_names)} features, {num_classes} classes from {path}")
        return TabularDataset(features, labels, num_classes, feature_names, mapping)

    @staticmethod
    def fit_scaler(train):
        if len(train) == 0:
            raise DataError("cannot fit a scaler on an empty dataset")
        scaler = StandardScaler().fit(train.features)
        # population std, floored
        std = np.maximum(np.sqrt(scaler.var_), STD_FLOOR)
        return ScalerParams(scaler.mean_, std, scaler)

    @staticmethod
    def apply_scaler(sc, ds):
        if len(ds) == 0:
            return ds.subset(np.zeros(0, dtype=np.int64))
        scaled = sc.scaler.transform(ds.features)
        constant = sc.std <= STD_FLOOR
        if constant.any():
            scaled[:, constant] = 0.0
        return TabularDataset(scaled.astype(ds.features.dtype), ds.labels.copy(), ds.num_classes,
                              ds.feature_names, ds.label_mapping)

    @staticmethod
    def class_counts(ds, num_classes=None):
        labels = ds.labels if isinstance(ds, TabularDataset) else np.asarray(ds, dtype=np.int64)
        if num_classes is None:
            num_classes = ds.num_classes if isinstance(ds, TabularDataset) else int(labels.max(initial=-1)) + 1
        return np.bincount(labels, minlength=num_classes)

    @staticmethod
    def dirichlet_partition(labels, num_clients, alpha, rng, min_per_client=10, max_retries=100):
        """
        Per-class Dirichlet(alpha) proportions over clients; each class's shuffled samples
        are cut at the cumulative proportions. Draws that leave a client below
        min_per_client are discarded and redrawn.
        """
        labels = np.asarray(labels, dtype=np.int64)
        if alpha <= 0:
            raise InvalidArgumentError(f"Dirichlet alpha must be positive, got {alpha}")
        if num_clients < 1:
            raise InvalidArgumentError(f"num_clients must be >= 1, got {num_clients}")
        n = len(labels)
        if n < num_clients * min_per_client:
            raise FeasibilityError(
                f"{n} samples cannot give {num_clients} clients at least {min_per_client} each"
            )
        if num_clients == 1:
            return PartitionPlan(np.zeros(n, dtype=np.int64), 1, alpha, min_per_client)

        classes = np.unique(labels)
        for attempt in range(1, max_retries + 1):
            assignment = np.empty(n, dtype=np.int64)
            for c in classes:
                idx = np.flatnonzero(labels == c)
                rng.shuffle(idx)
                proportions = rng.dirichlet(np.full(num_clients, alpha))
                cuts = (np.cumsum(proportions) * len(idx)).astype(np.int64)[:-1]
                for client, part in enumerate(np.split(idx, cuts)):
                    assignment[part] = client
            sizes = np.bincount(assignment, minlength=num_clients)
            if sizes.min() >= min_per_client:
                logger.debug(f"Dirichlet partition (alpha={alpha}) accepted on attempt {attempt}")
                return PartitionPlan(assignment, num_clients, alpha, min_per_client, attempt)

        logger.warning(f"Dirichlet partition exhausted {max_retries} redraws (alpha={alpha})")
        raise FeasibilityError(
            f"no Dirichlet draw with alpha={alpha} gave every one of {num_clients} clients "
            f">= {min_per_client} samples after {max_retries} attempts"
        )

    @staticmethod
    def iid_partition(num_samples, num_clients, rng):
        """Uniformly shuffled equal-size split"""
        if num_clients < 1:
            raise InvalidArgumentError(f"num_clients must be >= 1, got {num_clients}")
        assignment = np.empty(num_samples, dtype=np.int64)
        for client, part in enumerate(np.array_split(rng.permutation(num_samples), num_clients)):
            assignment[part] = client
        return PartitionPlan(assignment, num_clients)

    @staticmethod
    def split_train_test(ds, train_fraction=0.8, rng=None):
        """Stratified split; classes with a single sample go to train"""
        if len(ds) == 0:
            raise DataError("cannot split an empty dataset")
        if not 0.0 < train_fraction < 1.0:
            raise InvalidArgumentError(f"train_fraction must lie in (0, 1), got {train_fraction}")
        rng = rng if rng is not None else np.random.default_rng(0)

        counts = np.bincount(ds.labels, minlength=ds.num_classes)
        eligible = np.isin(ds.labels, np.flatnonzero(counts >= 2))
        singletons = np.flatnonzero(~eligible)
        idx = np.flatnonzero(eligible)
        if idx.size == 0:
            return ds.subset(singletons), ds.subset(np.zeros(0, dtype=np.int64))

        # each stratified side needs at least one sample per eligible class
        n_strata = int((counts >= 2).sum())
        n_train = int(np.floor(idx.size * train_fraction + 0.5))
        n_train = min(max(n_train, n_strata), idx.size - n_strata)
        train, test = train_test_split(
            idx, train_size=n_train, test_size=idx.size - n_train,
            stratify=ds.labels[idx], random_state=int(rng.integers(2 ** 32))
        )
        train = np.sort(np.concatenate([train, singletons]))
        test = np.sort(test)
        return ds.subset(train), ds.subset(test)

    @staticmethod
    def synth_imbalanced(num_classes, class_counts, d, class_separation, rng, dtype=np.float64):
        """Unit-covariance Gaussian blobs centred at class_separation * u_c"""
        counts = np.asarray(class_counts, dtype=np.int64)
        if len(counts) != num_classes:
            raise InvalidArgumentError(f"{len(counts)} class counts given for {num_classes} classes")
        if (counts < 1).any():
            raise InvalidArgumentError("every class needs at least one sample")

        directions = rng.standard_normal((d, num_classes))
        if num_classes <= d:
            directions, _ = np.linalg.qr(directions)
        else:
            directions /= np.linalg.norm(directions, axis=0, keepdims=True)
        centers = class_separation * directions.T

        labels = np.repeat(np.arange(num_classes), counts)
        features = centers[labels] + rng.standard_normal((len(labels), d))
        order = rng.permutation(len(labels))
        names = [f"f{i}" for i in range(d)]
        mapping = {f"class_{c}": c for c in range(num_classes)}
        return TabularDataset(features[order].astype(dtype), labels[order], num_classes, names, mapping)

    @staticmethod
    def total_variation(client_counts, global_counts):
        p = np.asarray(client_counts, dtype=np.float64)
        q = np.asarray(global_counts, dtype=np.float64)
        if p.sum() == 0 or q.sum() == 0:
            return 0.0
        return float(0.5 * np.abs(p / p.sum() - q / q.sum()).sum())
