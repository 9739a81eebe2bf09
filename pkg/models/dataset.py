"""
Tabular dataset, scaler and partition containers
"""
from dataclasses import dataclass, field

import numpy as np
from sklearn.preprocessing import StandardScaler

from utils.errors import DataError


@dataclass
class TabularDataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: list = None
    label_mapping: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {self.features.shape}")
        if len(self.features) != len(self.labels):
            raise DataError(f"{len(self.features)} feature rows but {len(self.labels)} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DataError(f"labels must lie in [0, {self.num_classes})")

    def __len__(self):
        return len(self.labels)

    @property
    def num_features(self):
        return self.features.shape[1]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return TabularDataset(
            self.features[indices], self.labels[indices], self.num_classes,
            self.feature_names, self.label_mapping
        )


@dataclass
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray
    scaler: StandardScaler = None


@dataclass
class PartitionPlan:
    assignment: np.ndarray
    num_clients: int
    alpha: float = float('inf')
    min_per_client: int = 0
    attempts: int = 1

    def client_indices(self, client):
        return np.flatnonzero(self.assignment == client)

    def client_sizes(self):
        return np.bincount(self.assignment, minlength=self.num_clients)
