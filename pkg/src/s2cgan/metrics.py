"""Evaluation metrics and the two reference baselines.

The referee for conditional fidelity is the fixed nearest-mean oracle, not
a trained network, so scores are comparable across methods and seeds.
Distribution distance is an unbiased RBF-kernel MMD (a cheap, assumption-
light stand-in for feature-space distances at this scale).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .config import ExperimentConfig
from .data import DatasetSplit, Task, make_splits
from .inference import InferenceRequest, infer_one_pass, infer_two_pass
from .nets import Condition, NetworkParams, generator_forward, labeller_forward
from .objectives import ObjectiveBreakdown


@dataclass
class MetricsRecord:
    step: int
    breakdown: ObjectiveBreakdown
    unsup_active: bool
    label_agreement: float  # the run's operative inference mode
    label_agreement_one_pass: float
    label_agreement_two_pass: float | None
    per_class_iou: list[float] | None  # grid task; NaN = label absent from reference
    mean_iou: float | None
    mmd2: float
    marginal_tv: float
    pseudo_label_acc: float | None = None


# ---------------------------------------------------------------------------
# conditional fidelity


def _iou_per_label(pred: np.ndarray, ref: np.ndarray, n_labels: int) -> list[float]:
    out = []
    for l in range(n_labels):
        p = pred == l
        r = ref == l
        if not np.any(r):
            out.append(float("nan"))  # label absent from reference: excluded
            continue
        union = np.count_nonzero(p | r)
        inter = np.count_nonzero(p & r)
        out.append(inter / union)
    return out


def label_agreement(
    gen: NetworkParams,
    labeller: NetworkParams | Callable[[np.ndarray], Condition] | None,
    task: Task,
    conditions: Condition,
    passes: int,
    rng: np.random.Generator | None = None,
    z: np.ndarray | None = None,
    fresh_z_second_pass: bool = False,
) -> tuple[float, list[float] | None, float | None]:
    """Render each test condition, relabel with the oracle referee, score.

    Returns (accuracy, per_class_iou, mean_iou); the IoU entries are None
    for the class task. Class accuracy = fraction of matching classes;
    grid accuracy = mean per-cell match.
    """
    if z is not None:
        req = InferenceRequest(conditions, noise_mode="fixed", passes=passes, z=z)
    else:
        req = InferenceRequest(conditions, noise_mode="fresh", passes=passes)
    if passes == 1:
        x = infer_one_pass(gen, req, rng)
    else:
        if labeller is None:
            raise ValueError("two-pass scoring needs a labeller")
        x, _ = infer_two_pass(gen, labeller, req, rng, fresh_z_second_pass)
    pred = task.oracle_labels(x)
    ref = conditions.labels()
    accuracy = float(np.mean(pred == ref))
    if task.space.kind == "class":
        return accuracy, None, None
    per_class = _iou_per_label(pred.reshape(-1), ref.reshape(-1), task.space.n_categories)
    present = [v for v in per_class if not np.isnan(v)]
    mean_iou = float(np.mean(present)) if present else float("nan")
    return accuracy, per_class, mean_iou


# ---------------------------------------------------------------------------
# distribution distance


def median_heuristic_bandwidths(x: np.ndarray, y: np.ndarray, scales) -> list[float]:
    pooled = np.vstack([x, y])
    med = float(np.median(pdist(pooled)))
    if med <= 0.0:
        med = 1.0
    return [float(s) * med for s in scales]


def mmd_rbf(
    x: np.ndarray,
    y: np.ndarray,
    bandwidths=None,
    scales=(0.5, 1.0, 2.0),
) -> float:
    """Unbiased squared MMD summed over an RBF bandwidth mixture.

    Diagonal terms are excluded from the within-sample sums. Arguments are
    canonicalized by content before computing, so mmd_rbf(x, y) equals
    mmd_rbf(y, x) bit for bit.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise ValueError("mmd needs at least 2 samples on each side")
    if (x.shape[0], x.tobytes()) > (y.shape[0], y.tobytes()):
        x, y = y, x
    if bandwidths is None:
        bandwidths = median_heuristic_bandwidths(x, y, scales)
    m, n = x.shape[0], y.shape[0]
    d_xx = cdist(x, x, "sqeuclidean")
    d_yy = cdist(y, y, "sqeuclidean")
    d_xy = cdist(x, y, "sqeuclidean")
    total = 0.0
    for bw in bandwidths:
        gamma = 1.0 / (2.0 * bw * bw)
        k_xx = np.exp(-gamma * d_xx)
        k_yy = np.exp(-gamma * d_yy)
        k_xy = np.exp(-gamma * d_xy)
        sum_xx = float(k_xx.sum() - np.trace(k_xx))
        sum_yy = float(k_yy.sum() - np.trace(k_yy))
        total += (
            sum_xx / (m * (m - 1))
            + sum_yy / (n * (n - 1))
            - 2.0 * float(k_xy.sum()) / (m * n)
        )
    return total


# ---------------------------------------------------------------------------
# label-marginal fidelity


def label_marginal_tv(
    labeller: NetworkParams | Callable[[np.ndarray], Condition],
    samples: np.ndarray,
    prior: np.ndarray,
    task: Task,
) -> float:
    """TV between the labeller's hard-label frequencies and the true prior.

    Class task: one histogram over classes. Grid task: per-cell histograms
    against the chain's stationary marginal (uniform), averaged over cells.
    """
    if samples.shape[0] == 0:
        raise ValueError("empty sample set")
    space = task.space
    if isinstance(labeller, NetworkParams):
        cond = labeller_forward(labeller, samples, space, mode="hard")
    else:
        cond = labeller(samples)
    labels = cond.labels()
    prior = np.asarray(prior, dtype=np.float64)
    if space.kind == "class":
        hist = np.bincount(labels, minlength=space.n_categories) / labels.shape[0]
        return float(0.5 * np.sum(np.abs(hist - prior)))
    tvs = []
    for cell in range(space.n_cells):
        hist = np.bincount(labels[:, cell], minlength=space.n_categories) / labels.shape[0]
        tvs.append(0.5 * np.sum(np.abs(hist - prior)))
    return float(np.mean(tvs))


# ---------------------------------------------------------------------------
# in-training evaluation


def evaluate_state(
    state,
    breakdown: ObjectiveBreakdown,
    agreement_mode: str,
    pseudo_label_acc: float | None = None,
) -> MetricsRecord:
    """Snapshot evaluation; all randomness derives from (run seed, step)."""
    cfg: ExperimentConfig = state.config
    task = state.split.task
    ss = np.random.SeedSequence(entropy=state.seed, spawn_key=(state.step, 1))
    rng_z, rng_mmd = (np.random.default_rng(s) for s in ss.spawn(2))

    c_test = state.split.c_test
    d_z = cfg.effective_d_z
    z = rng_z.normal(size=(c_test.batch, d_z)) if d_z > 0 else None

    acc1, iou1, miou1 = label_agreement(state.gen, None, task, c_test, passes=1, z=z)
    acc2, iou2, miou2 = label_agreement(
        state.gen, state.lab, task, c_test, passes=2, z=z,
        rng=rng_z, fresh_z_second_pass=cfg.two_pass_fresh_z,
    )
    if agreement_mode == "two_pass":
        operative, iou, miou = acc2, iou2, miou2
    else:
        operative, iou, miou = acc1, iou1, miou1

    # distribution distance on generated samples vs the real test set
    idx = rng_mmd.integers(0, c_test.batch, size=cfg.eval_samples)
    cond_gen = Condition(task.space.kind, c_test.values[idx], hard=True)
    z_gen = rng_mmd.normal(size=(cfg.eval_samples, d_z)) if d_z > 0 else None
    fake = generator_forward(state.gen, cond_gen, z_gen)
    mmd2 = mmd_rbf(state.split.x_test, fake, scales=cfg.mmd_bandwidth_scales)

    pool = (
        np.vstack([state.split.x_s, state.split.x_u])
        if state.split.x_u.shape[0]
        else state.split.x_s
    )
    tv = label_marginal_tv(state.lab, pool, task.prior_vector(), task)

    return MetricsRecord(
        step=state.step,
        breakdown=breakdown,
        unsup_active=state.split.x_u.shape[0] > 0,
        label_agreement=operative,
        label_agreement_one_pass=acc1,
        label_agreement_two_pass=acc2,
        per_class_iou=iou,
        mean_iou=miou,
        mmd2=mmd2,
        marginal_tv=tv,
        pseudo_label_acc=pseudo_label_acc,
    )


# ---------------------------------------------------------------------------
# baselines


def run_baseline_full(config: ExperimentConfig, seed: int, out_dir=None):
    """All training labels supervised, no unsupervised set, no labeller loss."""
    from .trainer import train

    cfg = dataclasses.replace(
        config,
        n_supervised=config.effective_n_total - config.n_test,
        n_total=config.effective_n_total,
        lambdas=(config.lambdas[0], 0.0, 0.0),
        stratify_s=False,
    )
    state, history = train(cfg, seed, agreement_mode="one_pass", out_dir=out_dir)
    assert state.split.x_u.shape[0] == 0  # uses zero unsupervised items
    return state, history


def run_baseline_naive(config: ExperimentConfig, seed: int, out_dir=None):
    """Pretrain L on S, hard-pseudo-label U, train a supervised cGAN on the
    union with L frozen. Pseudo-label accuracy is kept as a diagnostic."""
    from .trainer import pretrain_labeller, train

    split = make_splits(
        config.task_spec(),
        config.effective_n_total,
        config.effective_n_supervised,
        config.n_test,
        config.split_seed,
        stratify=config.stratify_s,
    )
    lab = pretrain_labeller(config, split.x_s, split.c_s, seed)
    task = config.task_spec()
    pseudo = labeller_forward(lab, split.x_u, task.space, mode="hard")
    pl_acc = float(np.mean(pseudo.labels() == split.u_truth))

    union_x = np.vstack([split.x_s, split.x_u])
    union_c = Condition(
        task.space.kind,
        np.concatenate([split.c_s.values, pseudo.values], axis=0),
        hard=True,
    )
    union_split = DatasetSplit(
        task=task,
        seed=split.seed,
        x_s=union_x,
        c_s=union_c,
        x_u=np.zeros((0, task.data_dim)),
        x_test=split.x_test,
        c_test=split.c_test,
        u_truth=None,
    )
    cfg = dataclasses.replace(config, lambdas=(config.lambdas[0], 0.0, 0.0))
    return train(
        cfg,
        seed,
        split=union_split,
        initial={"labeller": lab},
        agreement_mode="one_pass",
        pseudo_label_acc=pl_acc,
        out_dir=out_dir,
    )


def run_s2cgan(config: ExperimentConfig, seed: int, out_dir=None):
    """The semi-supervised run exactly as configured."""
    from .trainer import train

    return train(config, seed, out_dir=out_dir)
