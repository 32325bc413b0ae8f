import numpy as np
import pytest

from s2cgan.data import (
    TaskA,
    TaskB,
    bayes_oracle_label,
    empirical_run_length,
    export_split_csv,
    import_samples_csv,
    make_splits,
)


def test_task_a_geometry():
    task = TaskA(n_classes=4, radius=2.0)
    means = task.class_means()
    np.testing.assert_allclose(means[1], [0.0, 2.0], atol=1e-15)
    np.testing.assert_allclose(means[0], [2.0, 0.0], atol=1e-15)


def test_task_a_zero_sigma_renders_means():
    task = TaskA(sigma=0.0)
    rng = np.random.default_rng(0)
    x, labels = task.sample(rng, 50)
    np.testing.assert_array_equal(x, task.class_means()[labels])


def test_task_a_class_histogram_uniform():
    task = TaskA()
    rng = np.random.default_rng(1)
    _, labels = task.sample(rng, 10_000)
    hist = np.bincount(labels, minlength=4) / 10_000
    tv = 0.5 * np.sum(np.abs(hist - 0.25))
    assert tv <= 0.02


def test_task_b_constant_chain_renders_means():
    task = TaskB(noise=0.0, stay=1.0)
    rng = np.random.default_rng(2)
    x, labels = task.sample(rng, 20)
    assert np.all(labels == labels[:, :1])
    np.testing.assert_array_equal(x, np.asarray(task.means)[labels])


def test_task_b_run_length_matches_geometric_law():
    task = TaskB()
    rng = np.random.default_rng(3)
    labels = task.sample_labels(rng, 10_000)
    mean_run = empirical_run_length(labels)
    assert abs(mean_run - 5.0) / 5.0 < 0.10


def test_task_b_rejects_bad_spec():
    with pytest.raises(ValueError):
        TaskB(stay=0.0)
    with pytest.raises(ValueError):
        TaskB(means=(0.0, 1.0))
    with pytest.raises(ValueError):
        TaskA(sigma=-0.1)


def test_oracle_recovers_noise_free_labels():
    task_a = TaskA()
    labels_a = np.array([0, 1, 2, 3, 3])
    cond = bayes_oracle_label(task_a, task_a.render(labels_a))
    np.testing.assert_array_equal(cond.labels(), labels_a)
    assert cond.hard

    task_b = TaskB()
    rng = np.random.default_rng(4)
    labels_b = task_b.sample_labels(rng, 10)
    cond_b = bayes_oracle_label(task_b, task_b.render(labels_b))
    np.testing.assert_array_equal(cond_b.labels(), labels_b)


def test_oracle_single_points():
    task_a = TaskA()
    cond = bayes_oracle_label(task_a, task_a.class_means()[3:4])
    assert cond.labels()[0] == 3

    task_b = TaskB()
    x = np.zeros((1, 16))
    x[0, 5] = -1.0
    assert bayes_oracle_label(task_b, x).labels()[0, 5] == 0


def test_oracle_tie_breaks_to_lowest_index():
    task = TaskA(n_classes=4, radius=2.0)
    x = np.array([[1.0, 1.0]])  # equidistant from means 0=(2,0) and 1=(0,2)
    m = task.class_means()
    assert np.linalg.norm(x - m[0]) == np.linalg.norm(x - m[1])
    assert bayes_oracle_label(task, x).labels()[0] == 0

    task_b = TaskB()
    x = np.full((1, 16), -0.5)  # equidistant from means -1 and 0
    assert np.all(bayes_oracle_label(task_b, x).labels() == 0)


def test_oracle_accuracy_on_noisy_ring():
    task = TaskA(n_classes=8, radius=2.0, sigma=0.15)
    rng = np.random.default_rng(5)
    x, labels = task.sample(rng, 10_000)
    acc = np.mean(bayes_oracle_label(task, x).labels() == labels)
    assert acc >= 0.99


def test_make_splits_sizes_and_disjointness():
    task = TaskB()
    split = make_splits(task, n_total=5_600, n_supervised=5, n_test=500, seed=7)
    assert split.x_s.shape == (5, 16)
    assert split.x_u.shape == (5_095, 16)
    assert split.x_test.shape == (500, 16)
    assert split.u_truth.shape == (5_095, 16)

    # disjoint by construction: no row of S appears in U or test
    def rows_set(a):
        return {tuple(r) for r in np.round(a, 12)}

    s, u, t = rows_set(split.x_s), rows_set(split.x_u), rows_set(split.x_test)
    assert not (s & u) and not (s & t) and not (u & t)


def test_make_splits_deterministic():
    task = TaskA()
    a = make_splits(task, 1_000, 8, 100, seed=11)
    b = make_splits(task, 1_000, 8, 100, seed=11)
    np.testing.assert_array_equal(a.x_s, b.x_s)
    np.testing.assert_array_equal(a.x_u, b.x_u)
    np.testing.assert_array_equal(a.x_test, b.x_test)
    np.testing.assert_array_equal(a.c_s.values, b.c_s.values)
    c = make_splits(task, 1_000, 8, 100, seed=12)
    assert not np.array_equal(a.x_s, c.x_s)


def test_make_splits_stratified_task_a():
    task = TaskA()
    split = make_splits(task, 4_500, 8, 500, seed=13)
    counts = np.bincount(split.c_s.labels(), minlength=4)
    np.testing.assert_array_equal(counts, np.full(4, 2))


def test_make_splits_full_supervision_empties_u():
    task = TaskA()
    split = make_splits(task, 600, 500, 100, seed=17, stratify=False)
    assert split.x_u.shape[0] == 0


def test_make_splits_size_violation():
    with pytest.raises(ValueError):
        make_splits(TaskA(), 100, 80, 30, seed=0)
    with pytest.raises(ValueError):
        make_splits(TaskA(), 100, 0, 10, seed=0)


def test_csv_round_trip(tmp_path):
    task = TaskB()
    split = make_splits(task, 200, 5, 20, seed=19)
    paths = export_split_csv(split, tmp_path)

    x_s, lab_s = import_samples_csv(paths["s"])
    np.testing.assert_allclose(x_s, split.x_s, rtol=0, atol=0)
    np.testing.assert_array_equal(lab_s, split.c_s.labels())

    x_u, lab_u = import_samples_csv(paths["u"])
    np.testing.assert_allclose(x_u, split.x_u, rtol=0, atol=0)
    assert lab_u is None

    header = paths["u"].read_text().splitlines()[0]
    assert header.startswith("x_0") and header.endswith("c_15")


def test_csv_round_trip_class_task(tmp_path):
    split = make_splits(TaskA(), 200, 8, 20, seed=23)
    paths = export_split_csv(split, tmp_path)
    x, labels = import_samples_csv(paths["test"])
    np.testing.assert_allclose(x, split.x_test, rtol=0, atol=0)
    np.testing.assert_array_equal(labels, split.c_test.labels())
    assert labels.ndim == 1
