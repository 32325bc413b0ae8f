"""Scalar objective values for the adversarial game, computed as written.

These functions evaluate the literal Monte-Carlo objective estimates used
for logging and tests. Training gradients use surrogates built on the tape
(see trainer); values here are plain numpy and deterministic given inputs.

Discriminator outputs are raw logits; probabilities are sigmoid(logit)
clamped to [1e-12, 1 - 1e-12] before any log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .nets import (
    Condition,
    ConditionSpace,
    NetworkParams,
    discriminator_forward,
    generator_forward,
    labeller_forward,
    mlp_value,
)

PROB_CLAMP = 1e-12

Labeller = NetworkParams | Callable[[np.ndarray], Condition]


class UnsupportedTaskError(ValueError):
    """Objective invoked on a task it is undefined for."""


@dataclass(frozen=True)
class ObjectiveBreakdown:
    v_sup: float
    v_labeller: float
    v_unsup: float
    v_full: float
    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self):
        combined = (
            self.lambda1 * self.v_sup
            + self.lambda2 * self.v_labeller
            + self.lambda3 * self.v_unsup
        )
        if abs(self.v_full - combined) > 1e-12:
            raise ValueError("v_full must equal the lambda-weighted component sum")


def clamped_prob(logit: np.ndarray) -> np.ndarray:
    return np.clip(expit(logit), PROB_CLAMP, 1.0 - PROB_CLAMP)


def noise_dim(gen: NetworkParams, space: ConditionSpace) -> int:
    return gen.widths[0] - space.flat_dim


def draw_noise(
    gen: NetworkParams, space: ConditionSpace, n: int, rng: np.random.Generator
) -> np.ndarray | None:
    d_z = noise_dim(gen, space)
    return rng.normal(size=(n, d_z)) if d_z > 0 else None


def _require_nonempty(x: np.ndarray, what: str):
    if x.shape[0] == 0:
        raise ValueError(f"empty {what} batch")


def unconditional_gan_objective(
    dis: NetworkParams,
    gen: NetworkParams,
    real_batch: np.ndarray,
    noise_batch: np.ndarray,
) -> float:
    """E[log D(x)] + E[log(1 - D(G(z)))] for unconditioned nets."""
    _require_nonempty(real_batch, "real")
    _require_nonempty(noise_batch, "noise")
    p_real = clamped_prob(mlp_value(dis, real_batch))
    p_fake = clamped_prob(mlp_value(dis, mlp_value(gen, noise_batch)))
    return float(np.mean(np.log(p_real)) + np.mean(np.log(1.0 - p_fake)))


def supervised_cgan_objective(
    dis: NetworkParams,
    gen: NetworkParams,
    x_s: np.ndarray,
    c_s: Condition,
    z: np.ndarray | None,
) -> float:
    """E[log D(x,c)] + E[log(1 - D(G(c), c))] over one labeled batch.

    The fake term reuses the batch's own conditions, so c is effectively
    drawn from the supervised pool's label distribution.
    """
    _require_nonempty(x_s, "supervised")
    p_real = clamped_prob(discriminator_forward(dis, x_s, c_s))
    fake = generator_forward(gen, c_s, z)
    p_fake = clamped_prob(discriminator_forward(dis, fake, c_s))
    return float(np.mean(np.log(p_real)) + np.mean(np.log(1.0 - p_fake)))


def labeller_supervised_loss(lab: NetworkParams, x_s: np.ndarray, c_s: Condition) -> float:
    """Mean cross-entropy of the labeller's soft output against true labels.

    Grid task: mean over cells, then over the batch.
    """
    _require_nonempty(x_s, "supervised")
    if not c_s.hard:
        raise ValueError("supervised labels must be hard one-hots")
    space = c_s.space
    cond = labeller_forward(lab, x_s, space, mode="soft")
    p = cond.values.reshape(-1, space.n_categories)
    truth = c_s.values.reshape(-1, space.n_categories)
    p_true = np.sum(p * truth, axis=1)
    ce = -np.log(np.clip(p_true, PROB_CLAMP, None))
    return float(np.mean(ce))


def _conditions_from(
    labeller: Labeller, x: np.ndarray, space, tau, rng, noise, gumbel_hard=False
) -> Condition:
    if isinstance(labeller, NetworkParams):
        return labeller_forward(
            labeller, x, space, mode="gumbel", tau=tau, rng=rng, noise=noise,
            gumbel_hard=gumbel_hard,
        )
    return labeller(x)


def unsupervised_cgan_objective(
    dis: NetworkParams,
    gen: NetworkParams,
    labeller: Labeller,
    x_u: np.ndarray,
    space: ConditionSpace,
    tau: float = 1.0,
    rng: np.random.Generator | None = None,
    z: np.ndarray | None = None,
    noise: np.ndarray | None = None,
    gumbel_hard: bool = False,
) -> float:
    """E[log D(x, L(x))] + E[log(1 - D(G(L(x)), L(x)))] over one unlabeled batch.

    L(x) is sampled once per item (Gumbel mode when L is a network) and that
    same condition feeds all three placements: the real pair, the generator
    input, and the fake pair. A callable labeller (e.g. an oracle) may stand
    in for the network.
    """
    _require_nonempty(x_u, "unsupervised")
    cond = _conditions_from(labeller, x_u, space, tau, rng, noise, gumbel_hard)
    if z is None:
        if rng is None and noise_dim(gen, space) > 0:
            raise ValueError("generator needs z: pass z or an rng")
        z = draw_noise(gen, space, x_u.shape[0], rng) if rng is not None else None
    p_real = clamped_prob(discriminator_forward(dis, x_u, cond))
    fake = generator_forward(gen, cond, z)
    p_fake = clamped_prob(discriminator_forward(dis, fake, cond))
    return float(np.mean(np.log(p_real)) + np.mean(np.log(1.0 - p_fake)))


def conditional_sampling_objective(
    dis: NetworkParams,
    gen: NetworkParams,
    labeller: Labeller,
    x_u: np.ndarray,
    space: ConditionSpace,
    cond_sampler: Callable[[np.random.Generator, int], Condition],
    rng: np.random.Generator,
    tau: float = 1.0,
    z: np.ndarray | None = None,
    noise: np.ndarray | None = None,
    gumbel_hard: bool = False,
) -> float:
    """E[log D(x, L(x))] + E[log(1 - D(G(c), c))] with c drawn from the prior.

    Only defined when the condition prior is sampleable, i.e. the class
    task; grid conditions have no tractable prior sampler at train time.
    """
    if space.kind != "class":
        raise UnsupportedTaskError(
            "conditional-sampling objective requires a sampleable class prior"
        )
    _require_nonempty(x_u, "unsupervised")
    cond_real = _conditions_from(labeller, x_u, space, tau, rng, noise, gumbel_hard)
    p_real = clamped_prob(discriminator_forward(dis, x_u, cond_real))
    c = cond_sampler(rng, x_u.shape[0])
    if z is None:
        z = draw_noise(gen, space, x_u.shape[0], rng)
    fake = generator_forward(gen, c, z)
    p_fake = clamped_prob(discriminator_forward(dis, fake, c))
    return float(np.mean(np.log(p_real)) + np.mean(np.log(1.0 - p_fake)))


def full_objective(
    v_sup: float, v_labeller: float, v_unsup: float, lambdas
) -> ObjectiveBreakdown:
    """Combine the three components with nonnegative weights."""
    l1, l2, l3 = (float(v) for v in lambdas)
    if l1 < 0 or l2 < 0 or l3 < 0:
        raise ValueError("lambdas must be nonnegative")
    v_full = l1 * v_sup + l2 * v_labeller + l3 * v_unsup
    return ObjectiveBreakdown(v_sup, v_labeller, v_unsup, v_full, l1, l2, l3)
