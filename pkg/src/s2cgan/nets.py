"""Generator, discriminator, and labeller MLPs plus the condition algebra.

Two forward paths exist on purpose. The plain functions here evaluate
networks directly on numpy arrays; the ``*_node`` builders record the same
arithmetic on a tape for training. Both paths execute the identical numpy
operation sequence, so their outputs agree bit for bit, which lets tests
and metrics use the cheap path while gradients use the tape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Node, ShapeError, Tape, concat, straight_through

ROLES = ("generator", "discriminator", "labeller")

GUMBEL_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# conditions


@dataclass(frozen=True)
class ConditionSpace:
    """Shape of the conditioning side: K classes, or N cells of M labels."""

    kind: str  # "class" | "grid"
    n_categories: int  # K for class, M for grid
    n_cells: int = 1  # 1 for class, N for grid

    def __post_init__(self):
        if self.kind not in ("class", "grid"):
            raise ValueError(f"unknown condition kind {self.kind!r}")
        if self.kind == "class" and self.n_cells != 1:
            raise ValueError("class conditions have a single cell")
        if self.n_categories < 1 or self.n_cells < 1:
            raise ValueError("condition space extents must be >= 1")

    @property
    def flat_dim(self) -> int:
        return self.n_categories * self.n_cells

    def condition_from_labels(self, labels: np.ndarray) -> "Condition":
        """Hard condition from integer labels, shape (B,) or (B, n_cells)."""
        labels = np.asarray(labels)
        if self.kind == "class":
            labels = labels.reshape(-1)
            values = np.zeros((labels.size, self.n_categories))
            values[np.arange(labels.size), labels] = 1.0
        else:
            labels = labels.reshape(-1, self.n_cells)
            b = labels.shape[0]
            values = np.zeros((b, self.n_cells, self.n_categories))
            rows = np.repeat(np.arange(b), self.n_cells)
            cells = np.tile(np.arange(self.n_cells), b)
            values[rows, cells, labels.reshape(-1)] = 1.0
        return Condition(self.kind, values, hard=True)

    def condition_from_rows(self, rows: np.ndarray, hard: bool) -> "Condition":
        """Condition from flattened simplex rows of shape (B*n_cells, M)."""
        b = rows.shape[0] // self.n_cells
        if self.kind == "class":
            return Condition(self.kind, rows.reshape(b, self.n_categories), hard)
        return Condition(
            self.kind, rows.reshape(b, self.n_cells, self.n_categories), hard
        )


@dataclass(frozen=True)
class Condition:
    """A batch of conditioning inputs: one-hot (hard) or simplex (soft) rows.

    values shape: (B, K) for kind "class", (B, N, M) for kind "grid".
    """

    kind: str
    values: np.ndarray
    hard: bool

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if self.kind == "class":
            if v.ndim != 2:
                raise ShapeError(f"class condition needs (B, K) values, got {v.shape}")
        elif self.kind == "grid":
            if v.ndim != 3:
                raise ShapeError(f"grid condition needs (B, N, M) values, got {v.shape}")
        else:
            raise ValueError(f"unknown condition kind {self.kind!r}")
        if v.shape[0] == 0:
            raise ValueError("conditions need at least one row")
        rows = v.reshape(-1, v.shape[-1])
        if np.any(rows < 0.0):
            raise ValueError("condition rows must be nonnegative")
        if np.max(np.abs(rows.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("condition rows must sum to 1 within 1e-9")
        if self.hard and np.any(np.count_nonzero(rows == 1.0, axis=1) != 1):
            raise ValueError("hard condition rows must be exact one-hots")

    @property
    def batch(self) -> int:
        return self.values.shape[0]

    @property
    def space(self) -> ConditionSpace:
        if self.kind == "class":
            return ConditionSpace("class", self.values.shape[1])
        return ConditionSpace("grid", self.values.shape[2], self.values.shape[1])

    def flat(self) -> np.ndarray:
        """Network-facing view: (B, K) or (B, N*M)."""
        return self.values.reshape(self.batch, -1)

    def labels(self) -> np.ndarray:
        """Argmax labels: (B,) for class, (B, N) for grid."""
        return np.argmax(self.values, axis=-1)


# ---------------------------------------------------------------------------
# parameters


@dataclass
class NetworkParams:
    role: str
    widths: list[int]
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def names(self) -> list[str]:
        return [f"{wb}{i}" for i in range(self.n_layers) for wb in ("w", "b")]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.role, list(self.widths), {k: v.copy() for k, v in self.tensors.items()}
        )


def init_params(widths, role: str, rng: np.random.Generator) -> NetworkParams:
    """Glorot-normal weights (variance 2/(fan_in+fan_out)), zero biases."""
    widths = [int(w) for w in widths]
    if role not in ROLES:
        raise ValueError(f"unknown network role {role!r}")
    if len(widths) < 2:
        raise ValueError("architecture needs at least an input and an output width")
    if any(w < 1 for w in widths):
        raise ValueError("layer widths must be >= 1")
    tensors: dict[str, np.ndarray] = {}
    for i, (w_in, w_out) in enumerate(zip(widths, widths[1:])):
        std = np.sqrt(2.0 / (w_in + w_out))
        tensors[f"w{i}"] = rng.normal(0.0, std, size=(w_in, w_out))
        tensors[f"b{i}"] = np.zeros(w_out)
    return NetworkParams(role, widths, tensors)


def default_widths(role: str, data_dim: int, cond_dim: int, d_z: int, hidden: int = 128):
    if role == "generator":
        return [cond_dim + d_z, hidden, hidden, data_dim]
    if role == "discriminator":
        return [data_dim + cond_dim, hidden, hidden, 1]
    if role == "labeller":
        return [data_dim, hidden, hidden, cond_dim]
    raise ValueError(f"unknown network role {role!r}")


# ---------------------------------------------------------------------------
# value-level forwards (plain numpy; mirror the tape ops exactly)


def mlp_value(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Hidden layers relu, output linear."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.widths[0]:
        raise ShapeError(
            f"{params.role}: expected input (B, {params.widths[0]}), got {x.shape}"
        )
    h = x
    for i in range(params.n_layers):
        h = h @ params.tensors[f"w{i}"] + 1.0 * params.tensors[f"b{i}"]
        if i < params.n_layers - 1:
            h = np.maximum(h, 0.0)
    return h


def softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def generator_forward(params: NetworkParams, c: Condition, z: np.ndarray | None) -> np.ndarray:
    """x = G(c, z); accepts soft or hard conditions."""
    flat = c.flat()
    if z is None or z.shape[1] == 0:
        inp = flat
    else:
        if z.shape[0] != flat.shape[0]:
            raise ShapeError(
                f"generator: condition batch {flat.shape[0]} != noise batch {z.shape[0]}"
            )
        inp = np.concatenate([flat, z], axis=1)
    return mlp_value(params, inp)


def discriminator_forward(params: NetworkParams, x: np.ndarray, c: Condition) -> np.ndarray:
    """Raw logit per batch row, shape (B, 1); probability is sigmoid(logit)."""
    if x.shape[0] != c.batch:
        raise ShapeError(f"discriminator: data batch {x.shape[0]} != condition batch {c.batch}")
    return mlp_value(params, np.concatenate([x, c.flat()], axis=1))


def labeller_logits(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    return mlp_value(params, x)


def sample_gumbel_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """g = -log(-log(u)), u uniform clamped away from {0, 1}."""
    u = rng.uniform(size=shape)
    u = np.clip(u, GUMBEL_CLAMP, 1.0 - GUMBEL_CLAMP)
    return -np.log(-np.log(u))


def gumbel_softmax_sample(
    logits: np.ndarray,
    tau: float,
    rng: np.random.Generator,
    hard: bool = False,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """softmax((logits + g)/tau) per row; hard returns one-hot of the argmax.

    ``noise`` lets callers freeze g for reproducibility; otherwise drawn
    from ``rng``. Accepts a single row or a (rows, M) batch.
    """
    if tau <= 0.0:
        raise ValueError("gumbel temperature tau must be > 0")
    logits = np.asarray(logits, dtype=np.float64)
    g = sample_gumbel_noise(rng, logits.shape) if noise is None else noise
    y = softmax_rows((logits + g) * (1.0 / tau))
    if hard:
        idx = np.argmax(y, axis=-1)
        out = np.zeros_like(y)
        if y.ndim == 1:
            out[idx] = 1.0
        else:
            out[np.arange(y.shape[0]), idx] = 1.0
        return out
    return y


def hard_rows(rows: np.ndarray) -> np.ndarray:
    """One-hot of the per-row argmax (ties toward the lowest index)."""
    idx = np.argmax(rows, axis=-1)
    out = np.zeros_like(rows)
    out[np.arange(rows.shape[0]), idx] = 1.0
    return out


def labeller_forward(
    params: NetworkParams,
    x: np.ndarray,
    space: ConditionSpace,
    mode: str = "soft",
    tau: float = 1.0,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
    gumbel_hard: bool = False,
) -> Condition:
    """Map samples to conditions.

    soft: per-row softmax of the logits (deterministic).
    gumbel: one Gumbel-softmax sample per row; ``gumbel_hard`` snaps each
        sampled row to the one-hot of its argmax (the straight-through
        forward value).
    hard: one-hot argmax of the logits, forward only.
    """
    logits = labeller_logits(params, x)
    b = logits.shape[0]
    rows = logits.reshape(b * space.n_cells, space.n_categories)
    if mode == "soft":
        out = softmax_rows(rows)
        return space.condition_from_rows(out, hard=False)
    if mode == "hard":
        return space.condition_from_rows(hard_rows(rows), hard=True)
    if mode == "gumbel":
        if tau <= 0.0:
            raise ValueError("gumbel temperature tau must be > 0")
        if noise is None and rng is None:
            raise ValueError("gumbel mode needs an rng or frozen noise")
        out = gumbel_softmax_sample(rows, tau, rng, hard=gumbel_hard, noise=noise)
        return space.condition_from_rows(out, hard=gumbel_hard)
    raise ValueError(f"unknown labeller mode {mode!r}")


# ---------------------------------------------------------------------------
# tape-level forwards (training path; same arithmetic as the value path)


def param_leaves(tape: Tape, params: NetworkParams, prefix: str) -> dict[str, Node]:
    """Register every parameter tensor as a named leaf ``prefix/name``."""
    return {
        name: tape.leaf(f"{prefix}/{name}", params.tensors[name])
        for name in params.names()
    }


def mlp_node(params: NetworkParams, leaves: dict[str, Node], x: Node) -> Node:
    if x.value.ndim != 2 or x.value.shape[1] != params.widths[0]:
        raise ShapeError(
            f"{params.role}: expected input (B, {params.widths[0]}), got {x.shape}"
        )
    h = x
    for i in range(params.n_layers):
        h = (h @ leaves[f"w{i}"]) + leaves[f"b{i}"]
        if i < params.n_layers - 1:
            h = h.relu()
    return h


def generator_node(
    params: NetworkParams, leaves: dict[str, Node], c_flat: Node, z: Node | None
) -> Node:
    inp = c_flat if z is None or z.value.shape[1] == 0 else concat([c_flat, z])
    return mlp_node(params, leaves, inp)


def discriminator_node(
    params: NetworkParams, leaves: dict[str, Node], x: Node, c_flat: Node
) -> Node:
    return mlp_node(params, leaves, concat([x, c_flat]))


def gumbel_softmax_node(logits: Node, noise: np.ndarray, tau: float, hard: bool = False) -> Node:
    """Tape version with frozen noise; hard uses the straight-through trick."""
    if tau <= 0.0:
        raise ValueError("gumbel temperature tau must be > 0")
    y = (logits + logits.tape.const(noise)).scale(1.0 / tau).softmax()
    if hard:
        return straight_through(y, hard_rows(y.value))
    return y


def labeller_condition_node(
    params: NetworkParams,
    leaves: dict[str, Node],
    x: Node,
    space: ConditionSpace,
    noise: np.ndarray,
    tau: float,
    hard: bool = False,
) -> Node:
    """Gumbel-sampled condition rows, returned flat as (B, n_cells*M)."""
    logits = mlp_node(params, leaves, x)
    b = logits.value.shape[0]
    rows = logits.reshape((b * space.n_cells, space.n_categories))
    y = gumbel_softmax_node(rows, noise, tau, hard=hard)
    return y.reshape((b, space.flat_dim))


# ---------------------------------------------------------------------------
# composite gradient check


def composite_gradient_check(seed: int = 0, eps: float = 1e-5) -> float:
    """Finite-difference check of mean log sigmoid(D(G(L(x)), L(x))).

    Exercises the full labeller -> Gumbel -> generator -> discriminator
    pipeline with frozen Gumbel noise; returns the max relative error over
    all three networks' parameters.
    """
    from .autodiff import finite_diff_check

    rng = np.random.default_rng(seed)
    space = ConditionSpace("class", 3)
    data_dim, d_z, b = 2, 2, 4
    gen = init_params([space.flat_dim + d_z, 8, data_dim], "generator", rng)
    dis = init_params([data_dim + space.flat_dim, 8, 1], "discriminator", rng)
    lab = init_params([data_dim, 8, space.flat_dim], "labeller", rng)
    x = rng.normal(size=(b, data_dim))
    z = rng.normal(size=(b, d_z))
    noise = sample_gumbel_noise(rng, (b * space.n_cells, space.n_categories))

    bindings = {}
    for net, prefix in ((gen, "g"), (dis, "d"), (lab, "l")):
        for name in net.names():
            bindings[f"{prefix}/{name}"] = net.tensors[name]

    def expr(tape: Tape, nodes: dict[str, Node]) -> Node:
        g_leaves = {n: nodes[f"g/{n}"] for n in gen.names()}
        d_leaves = {n: nodes[f"d/{n}"] for n in dis.names()}
        l_leaves = {n: nodes[f"l/{n}"] for n in lab.names()}
        c = labeller_condition_node(
            lab, l_leaves, tape.const(x), space, noise, tau=1.0
        )
        fake = generator_node(gen, g_leaves, c, tape.const(z))
        logit = discriminator_node(dis, d_leaves, fake, c)
        return logit.sigmoid().log().mean()

    worst = 0.0
    for leaf in bindings:
        worst = max(worst, finite_diff_check(expr, bindings, leaf, eps=eps))
    return worst
