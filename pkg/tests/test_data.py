"""
CSV loading, scaling, partitioning, splitting and synthetic data
"""
import numpy as np
import pytest

from models.dataset import TabularDataset
from services.data_service import DataService
from utils.errors import DataError, FeasibilityError, InvalidArgumentError


def write_csv(tmp_path, text, name='flows.csv'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_load_csv_codes_string_labels_in_first_appearance_order(tmp_path):
    path = write_csv(tmp_path, "f1,f2,label\n1,2,dos\n3,4,normal\n5,6,dos\n7,8,scan\n")
    ds = DataService.load_csv(path, 'label')
    assert ds.labels.tolist() == [0, 1, 0, 2]
    assert ds.label_mapping == {'dos': 0, 'normal': 1, 'scan': 2}
    assert ds.features.shape == (4, 2)
    assert ds.feature_names == ['f1', 'f2']


def test_load_csv_recodes_integer_labels_contiguously(tmp_path):
    path = write_csv(tmp_path, "a,label\n0.5,2\n1.5,0\n2.5,7\n3.5,2\n")
    ds = DataService.load_csv(path, 'label')
    assert ds.labels.tolist() == [1, 0, 2, 1]
    assert ds.num_classes == 3
    assert ds.label_mapping == {'0': 0, '2': 1, '7': 2}
    assert (np.bincount(ds.labels) > 0).all()


def test_load_csv_reports_line_and_column(tmp_path):
    path = write_csv(tmp_path, "a,b,label\n1,2,x\n3,oops,y\n")
    with pytest.raises(DataError) as exc:
        DataService.load_csv(path, 'label')
    assert exc.value.row == 3
    assert exc.value.column == 'b'


def test_load_csv_missing_label_column_and_empty_file(tmp_path):
    with pytest.raises(DataError):
        DataService.load_csv(write_csv(tmp_path, "a,b\n1,2\n"), 'label')
    with pytest.raises(DataError):
        DataService.load_csv(write_csv(tmp_path, "a,label\n", 'header_only.csv'), 'label')
    with pytest.raises(DataError):
        DataService.load_csv(str(tmp_path / 'missing.csv'), 'label')


def test_scaler_population_std_and_constant_columns():
    ds = TabularDataset(np.array([[1.0, 5.0], [3.0, 5.0]]), np.array([0, 1]), 2)
    scaler = DataService.fit_scaler(ds)
    assert scaler.mean.tolist() == [2.0, 5.0]
    assert scaler.std[0] == pytest.approx(1.0)
    scaled = DataService.apply_scaler(scaler, ds)
    assert scaled.features[:, 0].tolist() == pytest.approx([-1.0, 1.0])
    assert scaled.features[:, 1].tolist() == [0.0, 0.0]


def test_scaler_keeps_fitted_statistics_for_held_out_data():
    train = TabularDataset(np.array([[0.0, 1.0], [2.0, 1.0], [4.0, 1.0]]), np.array([0, 1, 0]), 2)
    scaler = DataService.fit_scaler(train)
    assert scaler.scaler.mean_.tolist() == [2.0, 1.0]
    test = TabularDataset(np.array([[2.0, 9.0]]), np.array([1]), 2)
    scaled = DataService.apply_scaler(scaler, test)
    assert scaled.features.tolist() == [[0.0, 0.0]]
    assert scaled.labels.tolist() == [1]


def test_dirichlet_partition_covers_every_sample_once(rng):
    labels = np.repeat(np.arange(4), [400, 200, 100, 100])
    plan = DataService.dirichlet_partition(labels, 10, 0.5, rng, min_per_client=10)
    assert plan.assignment.shape == labels.shape
    assert plan.client_sizes().sum() == len(labels)
    assert plan.client_sizes().min() >= 10


def test_dirichlet_partition_is_deterministic_in_seed():
    labels = np.repeat(np.arange(3), [100, 60, 40])
    a = DataService.dirichlet_partition(labels, 5, 1.0, np.random.default_rng(13))
    b = DataService.dirichlet_partition(labels, 5, 1.0, np.random.default_rng(13))
    assert np.array_equal(a.assignment, b.assignment)


def test_dirichlet_partition_infeasible_sizes():
    with pytest.raises(FeasibilityError):
        DataService.dirichlet_partition(np.zeros(50, dtype=int), 10, 1.0, np.random.default_rng(0), min_per_client=10)
    with pytest.raises(InvalidArgumentError):
        DataService.dirichlet_partition(np.zeros(50, dtype=int), 2, 0.0, np.random.default_rng(0))


def test_dirichlet_large_alpha_is_near_global_mix():
    labels = np.repeat(np.arange(2), [5000, 5000])
    plan = DataService.dirichlet_partition(labels, 10, 1e6, np.random.default_rng(2))
    for c in range(10):
        share = (labels[plan.client_indices(c)] == 0).mean()
        assert abs(share - 0.5) < 0.02


def test_small_alpha_is_more_heterogeneous_than_large_alpha():
    labels = np.repeat(np.arange(4), [2000, 400, 200, 100])
    global_counts = np.bincount(labels)

    def mean_tv(alpha, seed):
        plan = DataService.dirichlet_partition(labels, 10, alpha, np.random.default_rng(seed))
        return np.mean([
            DataService.total_variation(np.bincount(labels[plan.client_indices(c)], minlength=4), global_counts)
            for c in range(10)
        ])

    assert np.mean([mean_tv(0.1, s) for s in range(3)]) > np.mean([mean_tv(10.0, s) for s in range(3)])


def test_iid_partition_equal_sizes(rng):
    plan = DataService.iid_partition(103, 10, rng)
    sizes = plan.client_sizes()
    assert sizes.sum() == 103
    assert sizes.max() - sizes.min() <= 1


def test_split_train_test_is_stratified(rng):
    ds = TabularDataset(np.arange(20.0).reshape(10, 2), np.zeros(10, dtype=int), 1)
    train, test = DataService.split_train_test(ds, 0.8, rng)
    assert (len(train), len(test)) == (8, 2)

    labels = np.array([0] * 10 + [1] * 5 + [2])
    ds = TabularDataset(np.zeros((16, 1)), labels, 3)
    train, test = DataService.split_train_test(ds, 0.8, rng)
    assert np.bincount(train.labels, minlength=3).tolist() == [8, 4, 1]
    assert np.bincount(test.labels, minlength=3).tolist() == [2, 1, 0]


def test_split_is_deterministic_in_seed_and_partitions_the_rows():
    labels = np.repeat(np.arange(3), [30, 12, 6])
    ds = TabularDataset(np.arange(48.0).reshape(48, 1), labels, 3)
    a_train, a_test = DataService.split_train_test(ds, 0.75, np.random.default_rng(4))
    b_train, b_test = DataService.split_train_test(ds, 0.75, np.random.default_rng(4))
    assert a_train.features.tolist() == b_train.features.tolist()
    assert a_test.features.tolist() == b_test.features.tolist()

    rows = np.concatenate([a_train.features[:, 0], a_test.features[:, 0]])
    assert sorted(rows.tolist()) == list(range(48))
    assert (np.bincount(a_test.labels, minlength=3) >= 1).all()


def test_split_sends_only_singletons_to_train_when_nothing_is_splittable(rng):
    ds = TabularDataset(np.zeros((2, 1)), np.array([0, 1]), 2)
    train, test = DataService.split_train_test(ds, 0.8, rng)
    assert (len(train), len(test)) == (2, 0)


def test_split_rejects_empty_dataset():
    with pytest.raises(DataError):
        DataService.split_train_test(TabularDataset(np.zeros((0, 2)), np.zeros(0, dtype=int), 2))


def test_synth_imbalanced_counts_and_separation():
    rng = np.random.default_rng(7)
    ds = DataService.synth_imbalanced(4, [200, 40, 20, 10], 8, 3.0, rng)
    assert np.bincount(ds.labels).tolist() == [200, 40, 20, 10]
    assert ds.features.shape == (270, 8)

    far = DataService.synth_imbalanced(3, [200, 200, 200], 8, 12.0, np.random.default_rng(8))
    centers = np.stack([far.features[far.labels == c].mean(axis=0) for c in range(3)])
    predicted = np.argmin(((far.features[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    assert (predicted == far.labels).mean() > 0.95


def test_total_variation_bounds():
    assert DataService.total_variation([5, 5], [10, 10]) == 0.0
    assert DataService.total_variation([10, 0], [0, 10]) == pytest.approx(1.0)
