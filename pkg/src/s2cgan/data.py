"""Synthetic conditional tasks with known ground truth.

Task A: K Gaussian components on a ring; the condition is the class.
Task B: a 1-D strip of N cells whose labels follow a sticky Markov chain;
each cell renders its label's mean plus noise. The condition is the full
per-cell label grid, which (like a semantic map) the trainer cannot sample
from directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nets import Condition, ConditionSpace


@dataclass(frozen=True)
class TaskA:
    """Ring of Gaussians; class c renders near R*(cos 2πc/K, sin 2πc/K)."""

    n_classes: int = 4
    radius: float = 2.0
    sigma: float = 0.15
    prior: tuple[float, ...] | None = None  # None = uniform

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=np.float64)
            if p.shape != (self.n_classes,) or abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
                raise ValueError("prior must be a length-K probability vector")

    @property
    def name(self) -> str:
        return "a"

    @property
    def data_dim(self) -> int:
        return 2

    @property
    def space(self) -> ConditionSpace:
        return ConditionSpace("class", self.n_classes)

    def prior_vector(self) -> np.ndarray:
        if self.prior is None:
            return np.full(self.n_classes, 1.0 / self.n_classes)
        return np.asarray(self.prior, dtype=np.float64)

    def class_means(self) -> np.ndarray:
        angles = 2.0 * np.pi * np.arange(self.n_classes) / self.n_classes
        m = self.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        # snap trig roundoff at axis-aligned angles so means like (0, R) are exact
        m[np.abs(m) < 1e-12] = 0.0
        return m

    def render(self, labels: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        """Samples for the given labels; noise-free when rng is None."""
        x = self.class_means()[np.asarray(labels).reshape(-1)]
        if rng is not None and self.sigma > 0.0:
            x = x + rng.normal(0.0, self.sigma, size=x.shape)
        return x

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n < 1:
            raise ValueError("n must be >= 1")
        labels = rng.choice(self.n_classes, size=n, p=self.prior_vector())
        return self.render(labels, rng), labels

    def oracle_labels(self, x: np.ndarray) -> np.ndarray:
        """Nearest class mean; ties resolve to the lowest index."""
        d2 = np.sum((x[:, None, :] - self.class_means()[None, :, :]) ** 2, axis=2)
        return np.argmin(d2, axis=1)


@dataclass(frozen=True)
class TaskB:
    """N-cell label strip from a sticky Markov chain, rendered per cell."""

    n_cells: int = 16
    n_labels: int = 3
    means: tuple[float, ...] = (-1.0, 0.0, 1.0)
    noise: float = 0.25
    stay: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.stay <= 1.0:
            raise ValueError("stay probability must be in (0, 1]")
        if len(self.means) != self.n_labels:
            raise ValueError("means must list one value per label")
        if self.noise < 0.0:
            raise ValueError("noise must be >= 0")

    @property
    def name(self) -> str:
        return "b"

    @property
    def data_dim(self) -> int:
        return self.n_cells

    @property
    def space(self) -> ConditionSpace:
        return ConditionSpace("grid", self.n_labels, self.n_cells)

    def prior_vector(self) -> np.ndarray:
        # chain is symmetric over labels, so the stationary marginal is uniform
        return np.full(self.n_labels, 1.0 / self.n_labels)

    def sample_labels(self, rng: np.random.Generator, n: int) -> np.ndarray:
        labels = np.zeros((n, self.n_cells), dtype=np.int64)
        labels[:, 0] = rng.integers(0, self.n_labels, size=n)
        for i in range(1, self.n_cells):
            keep = rng.uniform(size=n) < self.stay
            shift = rng.integers(1, self.n_labels, size=n)
            switched = (labels[:, i - 1] + shift) % self.n_labels
            labels[:, i] = np.where(keep, labels[:, i - 1], switched)
        return labels

    def render(self, labels: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        x = np.asarray(self.means, dtype=np.float64)[np.asarray(labels)]
        if rng is not None and self.noise > 0.0:
            x = x + rng.normal(0.0, self.noise, size=x.shape)
        return x

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n < 1:
            raise ValueError("n must be >= 1")
        labels = self.sample_labels(rng, n)
        return self.render(labels, rng), labels

    def oracle_labels(self, x: np.ndarray) -> np.ndarray:
        """Per-cell nearest label mean; ties resolve to the lowest index."""
        m = np.asarray(self.means, dtype=np.float64)
        d = np.abs(x[:, :, None] - m[None, None, :])
        return np.argmin(d, axis=2)


Task = TaskA | TaskB


def sample_task_a(spec: TaskA, rng: np.random.Generator, n: int):
    return spec.sample(rng, n)


def sample_task_b(spec: TaskB, rng: np.random.Generator, n: int):
    return spec.sample(rng, n)


def bayes_oracle_label(task: Task, x: np.ndarray) -> Condition:
    """Fixed referee: hard condition from nearest means, independent of training."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != task.data_dim:
        raise ValueError(f"expected samples of shape (B, {task.data_dim}), got {x.shape}")
    return task.space.condition_from_labels(task.oracle_labels(x))


def empirical_run_length(labels: np.ndarray) -> float:
    """Mean label run length implied by the per-cell continuation frequency.

    Chains truncate runs at the strip boundary, which biases a direct mean
    of observed run lengths downward; 1/(1 - continuation rate) is free of
    that censoring.
    """
    labels = np.asarray(labels)
    cont = float(np.mean(labels[:, 1:] == labels[:, :-1]))
    return 1.0 / (1.0 - cont)


# ---------------------------------------------------------------------------
# splits


@dataclass
class DatasetSplit:
    task: Task
    seed: int
    x_s: np.ndarray
    c_s: Condition
    x_u: np.ndarray
    x_test: np.ndarray
    c_test: Condition
    # withheld ground truth of U, for pseudo-label audits only
    u_truth: np.ndarray = field(repr=False, default=None)

    @property
    def n_supervised(self) -> int:
        return self.x_s.shape[0]


def make_splits(
    task: Task,
    n_total: int,
    n_supervised: int,
    n_test: int,
    seed: int,
    stratify: bool = True,
) -> DatasetSplit:
    """Deterministic S/U/test partition of one generated pool.

    For Task A with a uniform prior, ``stratify`` picks S evenly across
    classes when n_supervised is a multiple of K (a tiny S otherwise risks
    missing classes entirely).
    """
    if n_supervised < 1:
        raise ValueError("need at least one supervised pair")
    if n_supervised + n_test > n_total:
        raise ValueError(
            f"n_supervised + n_test = {n_supervised + n_test} exceeds n_total = {n_total}"
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x, labels = task.sample(rng, n_total)

    order = rng.permutation(n_total)
    test_idx = order[:n_test]
    pool = order[n_test:]

    if stratify and isinstance(task, TaskA) and n_supervised % task.n_classes == 0:
        per_class = n_supervised // task.n_classes
        s_parts = []
        for c in range(task.n_classes):
            members = pool[labels[pool] == c]
            if members.size < per_class:
                raise ValueError(f"class {c} has too few samples to stratify S")
            s_parts.append(members[:per_class])
        s_idx = np.concatenate(s_parts)
        u_idx = pool[~np.isin(pool, s_idx)]
    else:
        s_idx = pool[:n_supervised]
        u_idx = pool[n_supervised:]

    return DatasetSplit(
        task=task,
        seed=seed,
        x_s=x[s_idx],
        c_s=task.space.condition_from_labels(labels[s_idx]),
        x_u=x[u_idx],
        x_test=x[test_idx],
        c_test=task.space.condition_from_labels(labels[test_idx]),
        u_truth=labels[u_idx],
    )


# ---------------------------------------------------------------------------
# CSV export / import


def _write_csv(path: Path, x: np.ndarray, labels: np.ndarray | None, n_cells: int):
    d = x.shape[1]
    header = [f"x_{i}" for i in range(d)] + [f"c_{i}" for i in range(n_cells)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(x.shape[0]):
            row = [repr(float(v)) for v in x[i]]
            if labels is None:
                row += [""] * n_cells
            else:
                row += [str(int(v)) for v in np.atleast_1d(labels[i])]
            writer.writerow(row)


def export_split_csv(split: DatasetSplit, out_dir) -> dict[str, Path]:
    """Write s.csv, u.csv, test.csv; label cells are empty in u.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_cells = split.task.space.n_cells
    paths = {
        "s": out / "s.csv",
        "u": out / "u.csv",
        "test": out / "test.csv",
    }
    _write_csv(paths["s"], split.x_s, split.c_s.labels(), n_cells)
    _write_csv(paths["u"], split.x_u, None, n_cells)
    _write_csv(paths["test"], split.x_test, split.c_test.labels(), n_cells)
    return paths


def import_samples_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read one exported CSV back; labels are None if all label cells empty."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for h in header if h.startswith("x_"))
        n_cells = len(header) - d
        xs, cs, have_labels = [], [], False
        for row in reader:
            xs.append([float(v) for v in row[:d]])
            lab = row[d:]
            if any(v != "" for v in lab):
                have_labels = True
                cs.append([int(v) for v in lab])
    x = np.asarray(xs, dtype=np.float64)
    if not have_labels:
        return x, None
    labels = np.asarray(cs, dtype=np.int64)
    if n_cells == 1:
        labels = labels.reshape(-1)
    return x, labels
