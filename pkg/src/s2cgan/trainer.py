"""Alternating minimax training of D against (G, L) with Adam updates.

Each step freezes its mini-batches, generator noise, and Gumbel noise, so
the discriminator phase and the generator/labeller phase see identical
label samples. D ascends the literal logged objective; G and L descend a
surrogate (non-saturating by default, see ``_gl_terms``). Logged objective
values are always the literal forms, computed before the step's updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Node, ShapeError, Tape
from .config import ExperimentConfig, OptimizerSpec
from .data import DatasetSplit, make_splits
from .nets import (
    Condition,
    NetworkParams,
    discriminator_node,
    generator_forward,
    generator_node,
    gumbel_softmax_node,
    init_params,
    labeller_forward,
    mlp_node,
    param_leaves,
    sample_gumbel_noise,
)
from .objectives import (
    PROB_CLAMP,
    ObjectiveBreakdown,
    full_objective,
    labeller_supervised_loss,
    supervised_cgan_objective,
)

ROLE_PREFIX = {"generator": "g", "discriminator": "d", "labeller": "l"}


class TrainingDiverged(RuntimeError):
    """A gradient went NaN; carries the network name and step."""


@dataclass
class TrainState:
    config: ExperimentConfig
    seed: int
    split: DatasetSplit
    nets: dict[str, NetworkParams]
    moments: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]]
    opt_steps: dict[str, int]
    step: int
    rngs: dict[str, np.random.Generator]

    @property
    def gen(self) -> NetworkParams:
        return self.nets["generator"]

    @property
    def dis(self) -> NetworkParams:
        return self.nets["discriminator"]

    @property
    def lab(self) -> NetworkParams:
        return self.nets["labeller"]

    @property
    def space(self):
        return self.split.task.space


@dataclass
class StepBatches:
    """Everything random for one step, frozen up front."""

    x_s: np.ndarray
    c_s: Condition
    z_sup: np.ndarray | None
    x_u: np.ndarray | None  # real-pair term batch (None = no unsup data)
    x_u2: np.ndarray | None  # generator-term batch (same array when shared)
    z_unsup: np.ndarray | None
    g_noise: np.ndarray | None  # Gumbel noise rows for x_u
    g_noise2: np.ndarray | None  # for x_u2 (same as g_noise when shared)
    tau: float


def init_state(
    config: ExperimentConfig,
    seed: int,
    split: DatasetSplit | None = None,
    initial: dict[str, NetworkParams] | None = None,
) -> TrainState:
    """Build split, networks, moments, and the per-purpose RNG streams."""
    if split is None:
        split = make_splits(
            config.task_spec(),
            config.effective_n_total,
            config.effective_n_supervised,
            config.n_test,
            config.split_seed,
            stratify=config.stratify_s,
        )
    streams = np.random.SeedSequence(seed).spawn(4)
    rng_init = np.random.default_rng(streams[0])
    rngs = {
        "data": np.random.default_rng(streams[1]),
        "noise": np.random.default_rng(streams[2]),
        "gumbel": np.random.default_rng(streams[3]),
    }
    widths = config.widths()
    nets = {}
    for role in ("generator", "discriminator", "labeller"):
        if initial is not None and role in initial:
            nets[role] = initial[role].copy()
        else:
            nets[role] = init_params(widths[role], role, rng_init)
    moments = {
        role: {
            name: (np.zeros_like(t), np.zeros_like(t))
            for name, t in nets[role].tensors.items()
        }
        for role in nets
    }
    return TrainState(
        config=config,
        seed=seed,
        split=split,
        nets=nets,
        moments=moments,
        opt_steps={role: 0 for role in nets},
        step=0,
        rngs=rngs,
    )


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    spec: OptimizerSpec,
    step: int,
    lr: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One bias-corrected Adam step; ``step`` counts from 1."""
    if param.shape != grad.shape:
        raise ShapeError(f"adam: param shape {param.shape} != grad shape {grad.shape}")
    m2 = spec.beta1 * m + (1.0 - spec.beta1) * grad
    v2 = spec.beta2 * v + (1.0 - spec.beta2) * (grad * grad)
    m_hat = m2 / (1.0 - spec.beta1**step)
    v_hat = v2 / (1.0 - spec.beta2**step)
    return param - lr * m_hat / (np.sqrt(v_hat) + spec.epsilon), m2, v2


def _apply_updates(state: TrainState, role: str, grads: dict[str, np.ndarray], lr: float):
    spec = state.config.optimizer
    net = state.nets[role]
    state.opt_steps[role] += 1
    t = state.opt_steps[role]
    prefix = ROLE_PREFIX[role]
    for name in net.names():
        g = grads[f"{prefix}/{name}"]
        m, v = state.moments[role][name]
        net.tensors[name], m2, v2 = adam_update(net.tensors[name], g, m, v, spec, t, lr)
        state.moments[role][name] = (m2, v2)


def _check_finite(grads: dict[str, np.ndarray], step: int):
    for key, g in grads.items():
        if not np.all(np.isfinite(g)):
            role = {v: k for k, v in ROLE_PREFIX.items()}[key.split("/", 1)[0]]
            raise TrainingDiverged(f"NaN gradient in {role} at step {step}")


def draw_batches(state: TrainState) -> StepBatches:
    """Sample the step's batches and noise in a fixed stream order."""
    cfg = state.config
    split = state.split
    space = state.space
    rng_data, rng_noise, rng_gumbel = (
        state.rngs["data"],
        state.rngs["noise"],
        state.rngs["gumbel"],
    )
    n_s = split.x_s.shape[0]
    b_sup = cfg.optimizer.effective_b_sup(n_s)
    if n_s < b_sup:
        idx = rng_data.integers(0, n_s, size=b_sup)  # resample with replacement
    else:
        idx = rng_data.choice(n_s, size=b_sup, replace=False)
    x_s = split.x_s[idx]
    c_s = Condition(space.kind, split.c_s.values[idx], hard=True)

    n_u = split.x_u.shape[0]
    x_u = x_u2 = None
    if n_u > 0:
        b_u = cfg.optimizer.b_unsup
        replace = n_u < b_u
        x_u = split.x_u[rng_data.choice(n_u, size=b_u, replace=replace)]
        if cfg.split_unsup_batch:
            x_u2 = split.x_u[rng_data.choice(n_u, size=b_u, replace=replace)]
        else:
            x_u2 = x_u

    d_z = cfg.effective_d_z
    z_sup = rng_noise.normal(size=(b_sup, d_z)) if d_z > 0 else None
    z_unsup = None
    g_noise = g_noise2 = None
    if x_u is not None:
        if d_z > 0:
            z_unsup = rng_noise.normal(size=(x_u2.shape[0], d_z))
        rows = x_u.shape[0] * space.n_cells
        g_noise = sample_gumbel_noise(rng_gumbel, (rows, space.n_categories))
        if cfg.split_unsup_batch:
            g_noise2 = sample_gumbel_noise(rng_gumbel, (rows, space.n_categories))
        else:
            g_noise2 = g_noise

    return StepBatches(
        x_s=x_s,
        c_s=c_s,
        z_sup=z_sup,
        x_u=x_u,
        x_u2=x_u2,
        z_unsup=z_unsup,
        g_noise=g_noise,
        g_noise2=g_noise2,
        tau=cfg.tau_at(state.step),
    )


# -- tape helpers -----------------------------------------------------------


def _log_sig(logit: Node) -> Node:
    return logit.sigmoid().clip(PROB_CLAMP, 1.0 - PROB_CLAMP).log()


def _log_one_minus_sig(logit: Node) -> Node:
    p = logit.sigmoid().clip(PROB_CLAMP, 1.0 - PROB_CLAMP)
    return p.scale(-1.0).add_const(1.0).log()


def _const_leaves(tape: Tape, net: NetworkParams) -> dict[str, Node]:
    return {name: tape.const(net.tensors[name]) for name in net.names()}


def _labeller_cond_values(state, x_u: np.ndarray, noise: np.ndarray, tau: float) -> Condition:
    return labeller_forward(
        state.lab, x_u, state.space, mode="gumbel", tau=tau, noise=noise,
        gumbel_hard=state.config.gumbel_hard,
    )


# -- discriminator phase ------------------------------------------------------


def d_phase(state: TrainState, b: StepBatches):
    """Gradients for one D ascent step on the literal lambda-weighted game.

    Returns (grads, v_sup, v_unsup) where the values are the literal
    objective estimates at the current parameters (v_unsup is None when
    there is no unsupervised batch).
    """
    cfg = state.config
    l1, _, l3 = cfg.lambdas
    dis = state.dis
    tape = Tape()
    d_leaves = param_leaves(tape, dis, "d")

    c_s_flat = tape.const(b.c_s.flat())
    logit_real = discriminator_node(dis, d_leaves, tape.const(b.x_s), c_s_flat)
    fake_s = generator_forward(state.gen, b.c_s, b.z_sup)
    logit_fake = discriminator_node(dis, d_leaves, tape.const(fake_s), c_s_flat)
    v_sup = _log_sig(logit_real).mean() + _log_one_minus_sig(logit_fake).mean()

    v_unsup = None
    if b.x_u is not None:
        cond_real = _labeller_cond_values(state, b.x_u, b.g_noise, b.tau)
        if b.x_u2 is b.x_u:
            cond_gen = cond_real
        else:
            cond_gen = _labeller_cond_values(state, b.x_u2, b.g_noise2, b.tau)
        logit_ru = discriminator_node(
            dis, d_leaves, tape.const(b.x_u), tape.const(cond_real.flat())
        )
        fake_u = generator_forward(state.gen, cond_gen, b.z_unsup)
        logit_fu = discriminator_node(
            dis, d_leaves, tape.const(fake_u), tape.const(cond_gen.flat())
        )
        v_unsup = _log_sig(logit_ru).mean() + _log_one_minus_sig(logit_fu).mean()

    game = v_sup.scale(l1)
    if v_unsup is not None:
        game = game + v_unsup.scale(l3)
    loss = game.scale(-1.0)  # ascend the game by descending its negation
    grads = tape.backward(loss, [f"d/{n}" for n in dis.names()])
    return grads, float(v_sup.value), None if v_unsup is None else float(v_unsup.value)


# -- generator/labeller phase -------------------------------------------------


def _gl_terms(state: TrainState, b: StepBatches, tape: Tape, g_leaves, l_leaves) -> Node:
    """Surrogate loss node for the joint G/L descent step.

    Non-saturating mode rewrites each term whose gradient would vanish
    under a confident discriminator: fake-pair terms log(1 - s(t)) become
    -log s(t), and the labeller's real-pair term log s(t) becomes
    -log(1 - s(t)). Saturating mode keeps the literal forms.
    """
    cfg = state.config
    l1, l2, l3 = cfg.lambdas
    nonsat = cfg.surrogate == "non-saturating"
    space = state.space
    d_consts = _const_leaves(tape, state.dis)
    warmup = state.step < cfg.warmup_steps
    terms: list[Node] = []

    if l1 > 0.0:
        c_s_flat = tape.const(b.c_s.flat())
        z = None if b.z_sup is None else tape.const(b.z_sup)
        fake_s = generator_node(state.gen, g_leaves, c_s_flat, z)
        logit = discriminator_node(state.dis, d_consts, fake_s, c_s_flat)
        term = _log_sig(logit).mean().scale(-1.0) if nonsat else _log_one_minus_sig(logit).mean()
        terms.append(term.scale(l1))

    if l2 > 0.0:
        logits = mlp_node(state.lab, l_leaves, tape.const(b.x_s))
        rows = logits.reshape((b.x_s.shape[0] * space.n_cells, space.n_categories))
        truth = b.c_s.values.reshape(-1, space.n_categories)
        p_true = (rows.softmax() * tape.const(truth)).sum_last()
        ce = p_true.log().mean().scale(-1.0)
        terms.append(ce.scale(l2))

    if l3 > 0.0 and b.x_u is not None:
        def cond_node(x_u, noise):
            logits = mlp_node(state.lab, l_leaves, tape.const(x_u))
            rows = logits.reshape((x_u.shape[0] * space.n_cells, space.n_categories))
            y = gumbel_softmax_node(rows, noise, b.tau, hard=cfg.gumbel_hard)
            return y.reshape((x_u.shape[0], space.flat_dim))

        def placed(cond: Node, placement: str) -> Node:
            # const-ing a placement severs L's gradient through it
            if warmup or placement in cfg.stop_grad:
                return tape.const(cond.value)
            return cond

        cond1 = cond_node(b.x_u, b.g_noise)
        cond2 = cond1 if b.x_u2 is b.x_u else cond_node(b.x_u2, b.g_noise2)

        logit_ru = discriminator_node(
            state.dis, d_consts, tape.const(b.x_u), placed(cond1, "real_pair")
        )
        term_real = (
            _log_one_minus_sig(logit_ru).mean().scale(-1.0)
            if nonsat
            else _log_sig(logit_ru).mean()
        )
        z = None if b.z_unsup is None else tape.const(b.z_unsup)
        fake_u = generator_node(state.gen, g_leaves, placed(cond2, "gen_input"), z)
        logit_fu = discriminator_node(
            state.dis, d_consts, fake_u, placed(cond2, "fake_pair")
        )
        term_fake = (
            _log_sig(logit_fu).mean().scale(-1.0)
            if nonsat
            else _log_one_minus_sig(logit_fu).mean()
        )
        terms.append((term_real + term_fake).scale(l3))

    if not terms:
        raise ValueError("no active loss terms: check lambdas and data")
    loss = terms[0]
    for t in terms[1:]:
        loss = loss + t
    return loss


def gl_phase(state: TrainState, b: StepBatches) -> dict[str, np.ndarray]:
    tape = Tape()
    g_leaves = param_leaves(tape, state.gen, "g")
    l_leaves = param_leaves(tape, state.lab, "l")
    loss = _gl_terms(state, b, tape, g_leaves, l_leaves)
    names = [f"g/{n}" for n in state.gen.names()] + [f"l/{n}" for n in state.lab.names()]
    return tape.backward(loss, names)


# -- full step and loop -------------------------------------------------------


def train_step(state: TrainState, batches: StepBatches | None = None) -> ObjectiveBreakdown:
    cfg = state.config
    b = draw_batches(state) if batches is None else batches
    step_no = state.step + 1

    v_lab = labeller_supervised_loss(state.lab, b.x_s, b.c_s)
    breakdown = None
    for i in range(cfg.optimizer.d_steps_per_g_step):
        grads, v_sup, v_unsup = d_phase(state, b)
        if i == 0:
            breakdown = full_objective(
                v_sup, v_lab, 0.0 if v_unsup is None else v_unsup, cfg.lambdas
            )
        _check_finite(grads, step_no)
        _apply_updates(state, "discriminator", grads, cfg.optimizer.lr_d)

    grads = gl_phase(state, b)
    _check_finite(grads, step_no)
    _apply_updates(state, "generator", grads, cfg.optimizer.lr_g)
    _apply_updates(state, "labeller", grads, cfg.optimizer.lr_l)

    state.step = step_no
    return breakdown


def agreement_mode_for(config: ExperimentConfig) -> str:
    """Operative inference mode: two-pass when the labeller is in the game."""
    return "two_pass" if config.lambdas[2] > 0.0 else "one_pass"


def train(
    config: ExperimentConfig,
    seed: int,
    *,
    split: DatasetSplit | None = None,
    initial: dict[str, NetworkParams] | None = None,
    agreement_mode: str = "auto",
    pseudo_label_acc: float | None = None,
    out_dir=None,
    progress=None,
):
    """Run the configured number of steps; evaluate every ``eval_every``.

    Returns (final state, list of metrics records). When ``out_dir`` is
    given, writes metrics.csv, the resolved config, and checkpoints there.
    """
    from .metrics import evaluate_state  # local import: metrics uses trainer too

    if agreement_mode == "auto":
        agreement_mode = agreement_mode_for(config)
    state = init_state(config, seed, split=split, initial=initial)
    steps = config.effective_steps
    history = []

    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        from .config import canonical_json

        (out / "config.json").write_text(canonical_json(config) + "\n", encoding="utf-8")

    def save(path):
        from .checkpoint import save_checkpoint

        save_checkpoint(state, path)

    for t in range(1, steps + 1):
        breakdown = train_step(state)
        if t % config.eval_every == 0 or t == steps:
            rec = evaluate_state(
                state, breakdown, agreement_mode, pseudo_label_acc=pseudo_label_acc
            )
            history.append(rec)
            if progress is not None:
                progress(rec)
        if out is not None and config.checkpoint_every > 0 and t % config.checkpoint_every == 0:
            save(out / f"checkpoint_{t:06d}.bin")

    if out is not None:
        save(out / "checkpoint.bin")
        from .reporting import emit_metrics_csv

        emit_metrics_csv(history, out / "metrics.csv")
    return state, history


def pretrain_labeller(
    config: ExperimentConfig,
    x_s: np.ndarray,
    c_s: Condition,
    seed: int,
    steps: int = 2000,
) -> NetworkParams:
    """Fit L alone on the supervised pairs by full-batch Adam on the
    cross-entropy loss; used by the pseudo-labeling baseline."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(101,)))
    lab = init_params(config.widths()["labeller"], "labeller", rng)
    spec = config.optimizer
    space = c_s.space
    truth = c_s.values.reshape(-1, space.n_categories)
    moments = {n: (np.zeros_like(t), np.zeros_like(t)) for n, t in lab.tensors.items()}
    for t in range(1, steps + 1):
        tape = Tape()
        leaves = param_leaves(tape, lab, "l")
        logits = mlp_node(lab, leaves, tape.const(x_s))
        rows = logits.reshape((x_s.shape[0] * space.n_cells, space.n_categories))
        p_true = (rows.softmax() * tape.const(truth)).sum_last()
        loss = p_true.log().mean().scale(-1.0)
        grads = tape.backward(loss, [f"l/{n}" for n in lab.names()])
        _check_finite(grads, t)
        for name in lab.names():
            m, v = moments[name]
            lab.tensors[name], m2, v2 = adam_update(
                lab.tensors[name], grads[f"l/{name}"], m, v, spec, t, spec.lr_l
            )
            moments[name] = (m2, v2)
    return lab
