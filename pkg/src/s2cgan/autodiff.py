"""Dense float64 tensors with reverse-mode differentiation on an eager tape.

Values are numpy arrays (rank 0..2). Every operation records a node on a
``Tape``; ``Tape.backward`` replays the recorded nodes in reverse creation
order, which is a valid topological order because an op can only consume
nodes that already exist. Tensors are never mutated after creation, so
distinct tapes are safe to evaluate on distinct threads.

Shape rules are deliberately narrow: elementwise ops require equal shapes,
and the only broadcast allowed is adding a 1-D bias to the rows of a 2-D
matrix. Anything richer raises ``ShapeError`` naming the op and shapes.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import expit

LOG_FLOOR = 1e-12


class ShapeError(ValueError):
    """Operand shapes incompatible with an op's shape rule."""


class DomainError(ValueError):
    """Input outside an op's numeric domain (e.g. log of a negative)."""


def _as_f64(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim > 2:
        raise ShapeError(f"tensors are limited to rank <= 2, got shape {arr.shape}")
    return arr


class Node:
    """One value on the tape plus the local rule to push gradients back."""

    __slots__ = ("tape", "value", "parents", "grad_rule", "name", "index")

    def __init__(self, tape, value, parents, grad_rule, name, index):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.grad_rule = grad_rule
        self.name = name
        self.index = index

    @property
    def shape(self):
        return self.value.shape

    # -- elementwise arithmetic ------------------------------------------

    def __add__(self, other):
        if isinstance(other, Node):
            return _binary_add(self, other, sign=+1.0)
        return self.add_const(float(other))

    def __sub__(self, other):
        if isinstance(other, Node):
            return _binary_add(self, other, sign=-1.0)
        return self.add_const(-float(other))

    def __mul__(self, other):
        if isinstance(other, Node):
            return _binary_mul(self, other)
        return self.scale(float(other))

    def __rmul__(self, other):
        return self.scale(float(other))

    def __neg__(self):
        return self.scale(-1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def add_const(self, c: float):
        return self.tape._record(self.value + c, (self,), lambda g: (g,))

    def scale(self, c: float):
        return self.tape._record(self.value * c, (self,), lambda g: (g * c,))

    # -- activations ------------------------------------------------------

    def tanh(self):
        y = np.tanh(self.value)
        return self.tape._record(y, (self,), lambda g: (g * (1.0 - y * y),))

    def sigmoid(self):
        y = expit(self.value)
        return self.tape._record(y, (self,), lambda g: (g * y * (1.0 - y),))

    def relu(self):
        y = np.maximum(self.value, 0.0)
        mask = (self.value > 0.0).astype(np.float64)
        return self.tape._record(y, (self,), lambda g: (g * mask,))

    def exp(self):
        y = np.exp(self.value)
        return self.tape._record(y, (self,), lambda g: (g * y,))

    def log(self):
        """Natural log; inputs in [0, LOG_FLOOR) are clamped and counted.

        Negative inputs are a genuine domain violation and raise.
        """
        x = self.value
        if np.any(x < 0.0):
            raise DomainError("log: negative input")
        clamped = np.maximum(x, LOG_FLOOR)
        n_clamped = int(np.count_nonzero(x < LOG_FLOOR))
        self.tape.log_clamps += n_clamped
        inv = np.where(x < LOG_FLOOR, 0.0, 1.0 / clamped)
        return self.tape._record(np.log(clamped), (self,), lambda g: (g * inv,))

    def clip(self, lo: float, hi: float):
        """Clamp entries to [lo, hi]; gradient passes only inside the range."""
        x = self.value
        inside = ((x >= lo) & (x <= hi)).astype(np.float64)
        return self.tape._record(np.clip(x, lo, hi), (self,), lambda g: (g * inside,))

    # -- reductions and reshaping -----------------------------------------

    def mean(self):
        n = self.value.size
        shape = self.value.shape
        return self.tape._record(
            np.mean(self.value), (self,), lambda g: (np.full(shape, float(g) / n),)
        )

    def sum(self):
        shape = self.value.shape
        return self.tape._record(
            np.sum(self.value), (self,), lambda g: (np.full(shape, float(g)),)
        )

    def sum_last(self):
        if self.value.ndim != 2:
            raise ShapeError(f"sum_last: expected rank-2 input, got {self.shape}")
        cols = self.value.shape[1]
        return self.tape._record(
            np.sum(self.value, axis=1),
            (self,),
            lambda g: (np.repeat(g[:, None], cols, axis=1),),
        )

    def reshape(self, shape):
        shape = tuple(int(s) for s in shape)
        old = self.value.shape
        if int(np.prod(shape)) != self.value.size:
            raise ShapeError(f"reshape: cannot view {old} as {shape}")
        return self.tape._record(
            self.value.reshape(shape), (self,), lambda g: (g.reshape(old),)
        )

    def softmax(self):
        """Row softmax over the last axis, computed with max subtraction."""
        x = self.value
        shifted = x - np.max(x, axis=-1, keepdims=True)
        e = np.exp(shifted)
        y = e / np.sum(e, axis=-1, keepdims=True)

        def back(g):
            dot = np.sum(g * y, axis=-1, keepdims=True)
            return ((g - dot) * y,)

        return self.tape._record(y, (self,), back)

    def slice_last(self, start: int, stop: int):
        if self.value.ndim == 2:
            if not (0 <= start <= stop <= self.value.shape[1]):
                raise ShapeError(
                    f"slice_last: [{start}:{stop}] out of range for {self.shape}"
                )
            shape = self.value.shape

            def back(g):
                out = np.zeros(shape)
                out[:, start:stop] = g
                return (out,)

            return self.tape._record(self.value[:, start:stop], (self,), back)
        if self.value.ndim == 1:
            if not (0 <= start <= stop <= self.value.shape[0]):
                raise ShapeError(
                    f"slice_last: [{start}:{stop}] out of range for {self.shape}"
                )
            size = self.value.shape[0]

            def back1(g):
                out = np.zeros(size)
                out[start:stop] = g
                return (out,)

            return self.tape._record(self.value[start:stop], (self,), back1)
        raise ShapeError(f"slice_last: expected rank 1 or 2, got {self.shape}")


def _binary_add(a: Node, b: Node, sign: float) -> Node:
    # equal shapes, or 1-D bias broadcast over the rows of a 2-D left operand
    if a.shape == b.shape:
        return a.tape._record(
            a.value + sign * b.value, (a, b), lambda g: (g, sign * g)
        )
    if a.value.ndim == 2 and b.value.ndim == 1 and a.shape[1] == b.shape[0]:
        return a.tape._record(
            a.value + sign * b.value,
            (a, b),
            lambda g: (g, sign * np.sum(g, axis=0)),
        )
    raise ShapeError(f"add: incompatible shapes {a.shape} and {b.shape}")


def _binary_mul(a: Node, b: Node) -> Node:
    if a.shape != b.shape:
        raise ShapeError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    av, bv = a.value, b.value
    return a.tape._record(av * bv, (a, b), lambda g: (g * bv, g * av))


def matmul(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    av, bv = a.value, b.value
    return a.tape._record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def concat(nodes: Sequence[Node]) -> Node:
    """Concatenate rank-2 nodes along the last axis."""
    if not nodes:
        raise ShapeError("concat: empty input list")
    rows = nodes[0].value.shape[0]
    for n in nodes:
        if n.value.ndim != 2 or n.value.shape[0] != rows:
            raise ShapeError(
                f"concat: expected rank-2 with {rows} rows, got {n.shape}"
            )
    tape = nodes[0].tape
    widths = [n.value.shape[1] for n in nodes]
    offsets = np.cumsum([0] + widths)

    def back(g):
        return tuple(g[:, offsets[i] : offsets[i + 1]] for i in range(len(nodes)))

    return tape._record(
        np.concatenate([n.value for n in nodes], axis=1), tuple(nodes), back
    )


def straight_through(soft: Node, hard_value: np.ndarray) -> Node:
    """Forward the given hard value while backpropagating the soft gradient."""
    hard_value = _as_f64(hard_value)
    if hard_value.shape != soft.shape:
        raise ShapeError(
            f"straight_through: value shape {hard_value.shape} != {soft.shape}"
        )
    return soft.tape._record(hard_value, (soft,), lambda g: (g,))


class Tape:
    """Eager recording of a forward pass; single-threaded by construction."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._leaves: dict[str, Node] = {}
        self.log_clamps = 0

    def _record(self, value, parents, grad_rule, name=None) -> Node:
        node = Node(self, _as_f64(value), parents, grad_rule, name, len(self._nodes))
        self._nodes.append(node)
        return node

    def leaf(self, name: str, value) -> Node:
        """Register a named differentiable input; names are unique per tape."""
        if name in self._leaves:
            raise ValueError(f"duplicate leaf name {name!r}")
        node = self._record(value, (), None, name=name)
        self._leaves[name] = node
        return node

    def const(self, value) -> Node:
        return self._record(value, (), None)

    def backward(self, output: Node, leaves: Iterable[str]) -> dict[str, np.ndarray]:
        """Exact reverse-mode gradients of a scalar output w.r.t. named leaves."""
        if output.tape is not self:
            raise ValueError("output node belongs to a different tape")
        if output.value.size != 1:
            raise ShapeError(
                f"backward: output must be scalar, got shape {output.shape}"
            )
        leaves = list(leaves)
        for name in leaves:
            if name not in self._leaves:
                raise KeyError(f"leaf {name!r} not on tape")

        grads: list[np.ndarray | None] = [None] * (output.index + 1)
        grads[output.index] = np.ones_like(output.value)
        for node in reversed(self._nodes[: output.index + 1]):
            g = grads[node.index]
            if g is None or node.grad_rule is None:
                continue
            for parent, pg in zip(node.parents, node.grad_rule(g)):
                if grads[parent.index] is None:
                    grads[parent.index] = pg.copy()
                else:
                    grads[parent.index] += pg

        out: dict[str, np.ndarray] = {}
        for name in leaves:
            node = self._leaves[name]
            g = grads[node.index] if node.index <= output.index else None
            out[name] = np.zeros_like(node.value) if g is None else g
        return out


ExprFn = Callable[[Tape, Mapping[str, Node]], Node]


def forward_eval(expr: ExprFn, bindings: Mapping[str, np.ndarray]):
    """Evaluate an expression over named leaves; returns (value, tape, node)."""
    tape = Tape()
    nodes = {name: tape.leaf(name, value) for name, value in bindings.items()}
    out = expr(tape, nodes)
    return out.value, tape, out


def backward_grad(expr: ExprFn, bindings: Mapping[str, np.ndarray], leaves):
    """Gradients of a scalar expression w.r.t. the named leaves."""
    _, tape, out = forward_eval(expr, bindings)
    return tape.backward(out, leaves)


def finite_diff_check(
    expr: ExprFn,
    bindings: Mapping[str, np.ndarray],
    leaf: str,
    eps: float = 1e-5,
) -> float:
    """Max relative error of the analytic gradient against central differences.

    Relative error is |analytic - numeric| / max(1, |analytic|) per entry.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    analytic = backward_grad(expr, bindings, [leaf])[leaf]

    base = np.array(bindings[leaf], dtype=np.float64)
    numeric = np.zeros_like(base)
    flat_base = base.reshape(-1)
    flat_num = numeric.reshape(-1)
    probe = dict(bindings)
    for i in range(flat_base.size):
        orig = flat_base[i]
        flat_base[i] = orig + eps
        probe[leaf] = base
        f_plus, _, _ = forward_eval(expr, probe)
        flat_base[i] = orig - eps
        f_minus, _, _ = forward_eval(expr, probe)
        flat_base[i] = orig
        flat_num[i] = (float(f_plus) - float(f_minus)) / (2.0 * eps)

    rel = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(np.max(rel)) if rel.size else 0.0


def gradient_suite(seeds: int = 100, rng_offset: int = 0) -> dict[str, float]:
    """Finite-difference check of every op kind over randomized compositions.

    Returns the max relative error seen per op across ``seeds`` random draws.
    Inputs are kept away from kinks (relu at 0) and domain edges (log near 0).
    """

    def away_from_zero(rng, shape, margin=0.05):
        x = rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
        return np.where(np.abs(x) < margin, margin, x)

    cases: dict[str, Callable[[np.random.Generator], tuple[ExprFn, dict, str]]] = {}

    def case(name):
        def deco(fn):
            cases[name] = fn
            return fn

        return deco

    @case("add")
    def _add(rng):
        b = {"x": rng.normal(size=(3, 4)), "y": rng.normal(size=(3, 4))}
        return (lambda t, n: (n["x"] + n["y"]).tanh().mean()), b, "x"

    @case("add_bias")
    def _add_bias(rng):
        b = {"x": rng.normal(size=(3, 4)), "b": rng.normal(size=(4,))}
        return (lambda t, n: (n["x"] + n["b"]).tanh().mean()), b, "b"

    @case("add_const")
    def _add_const(rng):
        b = {"x": rng.normal(size=(2, 5))}
        return (lambda t, n: n["x"].add_const(0.37).tanh().mean()), b, "x"

    @case("sub")
    def _sub(rng):
        b = {"x": rng.normal(size=(3, 3)), "y": rng.normal(size=(3, 3))}
        return (lambda t, n: (n["x"] - n["y"]).tanh().mean()), b, "y"

    @case("mul")
    def _mul(rng):
        b = {"x": rng.normal(size=(4, 2)), "y": rng.normal(size=(4, 2))}
        return (lambda t, n: (n["x"] * n["y"]).tanh().mean()), b, "x"

    @case("scale")
    def _scale(rng):
        b = {"x": rng.normal(size=(6,))}
        return (lambda t, n: n["x"].scale(1.7).tanh().mean()), b, "x"

    @case("matmul")
    def _matmul(rng):
        b = {"x": rng.normal(size=(3, 4)), "w": rng.normal(size=(4, 2))}
        return (lambda t, n: (n["x"] @ n["w"]).tanh().mean()), b, "w"

    @case("tanh")
    def _tanh(rng):
        b = {"x": rng.normal(size=(2, 4))}
        return (lambda t, n: (n["x"].tanh() * n["x"].tanh()).mean()), b, "x"

    @case("sigmoid")
    def _sigmoid(rng):
        m = rng.normal(size=(3, 3))
        b = {"x": rng.normal(size=(3, 3))}
        return (lambda t, n: (n["x"].sigmoid() * t.const(m)).mean()), b, "x"

    @case("relu")
    def _relu(rng):
        m = rng.normal(size=(4, 3))
        b = {"x": away_from_zero(rng, (4, 3))}
        return (lambda t, n: (n["x"].relu() * t.const(m)).mean()), b, "x"

    @case("exp")
    def _exp(rng):
        b = {"x": rng.normal(size=(5,))}
        return (lambda t, n: n["x"].scale(0.5).exp().mean()), b, "x"

    @case("log")
    def _log(rng):
        b = {"x": rng.normal(size=(3, 4))}
        return (
            lambda t, n: n["x"].sigmoid().scale(0.9).add_const(0.05).log().mean()
        ), b, "x"

    @case("clip")
    def _clip(rng):
        # entries kept clear of the clip thresholds so the kink is not probed
        x = rng.uniform(0.1, 0.9, size=(3, 4))
        x = np.clip(x, 0.25 + 0.01, 0.75 - 0.01)
        b = {"x": x}
        return (lambda t, n: n["x"].clip(0.25, 0.75).log().mean()), b, "x"

    @case("softmax")
    def _softmax(rng):
        m = rng.normal(size=(3, 5))
        b = {"x": rng.normal(size=(3, 5))}
        return (lambda t, n: (n["x"].softmax() * t.const(m)).mean()), b, "x"

    @case("mean")
    def _mean(rng):
        m = rng.normal(size=(2, 6))
        b = {"x": rng.normal(size=(2, 6))}
        return (lambda t, n: (n["x"] * t.const(m)).mean()), b, "x"

    @case("sum")
    def _sum(rng):
        b = {"x": rng.normal(size=(7,))}
        return (lambda t, n: (n["x"] * n["x"]).sum().scale(0.1)), b, "x"

    @case("sum_last")
    def _sum_last(rng):
        m = rng.normal(size=(3, 4))
        b = {"x": rng.normal(size=(3, 4))}
        return (lambda t, n: (n["x"] * t.const(m)).sum_last().tanh().mean()), b, "x"

    @case("reshape")
    def _reshape(rng):
        m = rng.normal(size=(6, 2))
        b = {"x": rng.normal(size=(3, 4))}
        return (
            lambda t, n: (n["x"].reshape((6, 2)).softmax() * t.const(m)).mean()
        ), b, "x"

    @case("concat")
    def _concat(rng):
        w = rng.normal(size=(5, 1))
        b = {"x": rng.normal(size=(3, 2)), "y": rng.normal(size=(3, 3))}
        return (
            lambda t, n: (concat([n["x"], n["y"]]) @ t.const(w)).tanh().mean()
        ), b, "y"

    @case("slice_last")
    def _slice_last(rng):
        b = {"x": rng.normal(size=(3, 5))}
        return (lambda t, n: n["x"].slice_last(1, 4).tanh().mean()), b, "x"

    report: dict[str, float] = {}
    for k, (name, builder) in enumerate(sorted(cases.items())):
        worst = 0.0
        for s in range(seeds):
            rng = np.random.default_rng(rng_offset + 7919 * s + k)
            expr, bindings, leaf = builder(rng)
            worst = max(worst, finite_diff_check(expr, bindings, leaf, eps=1e-5))
        report[name] = worst
    return report
