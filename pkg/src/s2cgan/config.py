"""Experiment configuration: strict JSON with documented defaults.

Unknown keys are rejected and every validation error carries a JSON
pointer to the offending key, so a typo like "lambda" for "lambdas" fails
loudly instead of silently running a different experiment.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import TaskA, TaskB


class ConfigError(ValueError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


# schema leaf kinds: bool, int, float, str, list-of-X, nullable wrappers
def _check_bool(v, ptr):
    if not isinstance(v, bool):
        raise ConfigError(ptr, f"expected a boolean, got {type(v).__name__}")
    return v


def _check_int(v, ptr):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(ptr, f"expected an integer, got {type(v).__name__}")
    return v


def _check_float(v, ptr):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(ptr, f"expected a number, got {type(v).__name__}")
    return float(v)


def _check_str(v, ptr):
    if not isinstance(v, str):
        raise ConfigError(ptr, f"expected a string, got {type(v).__name__}")
    return v


def _check_float_list(v, ptr, length=None):
    if not isinstance(v, list):
        raise ConfigError(ptr, f"expected a list, got {type(v).__name__}")
    if length is not None and len(v) != length:
        raise ConfigError(ptr, f"expected {length} entries, got {len(v)}")
    return [_check_float(x, f"{ptr}/{i}") for i, x in enumerate(v)]


def _check_int_list(v, ptr):
    if not isinstance(v, list):
        raise ConfigError(ptr, f"expected a list, got {type(v).__name__}")
    return [_check_int(x, f"{ptr}/{i}") for i, x in enumerate(v)]


@dataclass(frozen=True)
class OptimizerSpec:
    lr_d: float = 2e-4
    lr_g: float = 2e-4
    lr_l: float = 2e-4
    beta1: float = 0.0
    beta2: float = 0.999
    epsilon: float = 1e-8
    d_steps_per_g_step: int = 1
    b_sup: int | None = None  # None = min(|S|, 16)
    b_unsup: int = 64

    def __post_init__(self):
        if min(self.lr_d, self.lr_g, self.lr_l) <= 0.0:
            raise ValueError("learning rates must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        if self.d_steps_per_g_step < 1 or self.b_unsup < 1:
            raise ValueError("step and batch counts must be >= 1")
        if self.b_sup is not None and self.b_sup < 1:
            raise ValueError("b_sup must be >= 1 when given")

    def effective_b_sup(self, n_supervised: int) -> int:
        return min(n_supervised, 16) if self.b_sup is None else self.b_sup


STOP_GRAD_PLACEMENTS = ("real_pair", "gen_input", "fake_pair")


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "a"
    # task parameter overrides (validated per task)
    n_classes: int = 4
    radius: float = 2.0
    sigma: float = 0.15
    n_cells: int = 16
    n_labels: int = 3
    means: tuple[float, ...] = (-1.0, 0.0, 1.0)
    noise: float = 0.25
    stay: float = 0.8
    # split
    n_total: int | None = None  # default 4500 (a) / 5600 (b)
    n_supervised: int | None = None  # default 8 (a) / 5 (b)
    n_test: int = 500
    split_seed: int = 0
    stratify_s: bool = True
    # architecture
    hidden: int = 128
    d_z: int | None = None  # default 4 (a) / 8 (b)
    # optimization
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    steps: int | None = None  # default 6000 (a) / 12000 (b)
    lambdas: tuple[float, float, float] = (1.0, 1.0, 1.0)
    tau: float = 1.0
    tau_anneal: bool = False
    tau_final: float = 0.5
    gumbel_hard: bool = False
    surrogate: str = "non-saturating"
    warmup_steps: int = 500
    split_unsup_batch: bool = False
    stop_grad: tuple[str, ...] = ()
    two_pass_fresh_z: bool = False
    # evaluation and output
    eval_every: int = 500
    eval_samples: int = 1000
    mmd_bandwidth_scales: tuple[float, ...] = (0.5, 1.0, 2.0)
    checkpoint_every: int = 0  # 0 = final checkpoint only
    out_dir: str | None = None
    seeds: tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.task not in ("a", "b"):
            raise ValueError("task must be 'a' or 'b'")
        if any(l < 0 for l in self.lambdas):
            raise ValueError("lambdas must be nonnegative")
        if self.tau <= 0.0 or self.tau_final <= 0.0:
            raise ValueError("tau must be > 0")
        if self.surrogate not in ("non-saturating", "saturating"):
            raise ValueError("surrogate must be 'non-saturating' or 'saturating'")
        if self.warmup_steps < 0 or self.eval_every < 1 or self.checkpoint_every < 0:
            raise ValueError("step cadences must be nonnegative (eval_every >= 1)")
        if self.eval_samples < 2:
            raise ValueError("eval_samples must be >= 2")
        bad = [p for p in self.stop_grad if p not in STOP_GRAD_PLACEMENTS]
        if bad:
            raise ValueError(f"unknown stop_grad placements {bad}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        self.task_spec()  # validate task parameter overrides

    # -- derived values ----------------------------------------------------

    def task_spec(self):
        if self.task == "a":
            return TaskA(n_classes=self.n_classes, radius=self.radius, sigma=self.sigma)
        return TaskB(
            n_cells=self.n_cells,
            n_labels=self.n_labels,
            means=tuple(self.means),
            noise=self.noise,
            stay=self.stay,
        )

    @property
    def effective_n_total(self) -> int:
        if self.n_total is not None:
            return self.n_total
        return 4500 if self.task == "a" else 5600

    @property
    def effective_n_supervised(self) -> int:
        if self.n_supervised is not None:
            return self.n_supervised
        return 8 if self.task == "a" else 5

    @property
    def effective_steps(self) -> int:
        if self.steps is not None:
            return self.steps
        return 6000 if self.task == "a" else 12000

    @property
    def effective_d_z(self) -> int:
        if self.d_z is not None:
            return self.d_z
        return 4 if self.task == "a" else 8

    def tau_at(self, step: int) -> float:
        if not self.tau_anneal:
            return self.tau
        total = max(self.effective_steps - 1, 1)
        frac = min(max(step, 0), total) / total
        return self.tau + (self.tau_final - self.tau) * frac

    def widths(self) -> dict[str, list[int]]:
        task = self.task_spec()
        cond = task.space.flat_dim
        d_z = self.effective_d_z
        h = self.hidden
        return {
            "generator": [cond + d_z, h, h, task.data_dim],
            "discriminator": [task.data_dim + cond, h, h, 1],
            "labeller": [task.data_dim, h, h, cond],
        }


# ---------------------------------------------------------------------------
# strict JSON parsing

_OPTIMIZER_KEYS = {
    "lr_d": _check_float,
    "lr_g": _check_float,
    "lr_l": _check_float,
    "beta1": _check_float,
    "beta2": _check_float,
    "epsilon": _check_float,
    "d_steps_per_g_step": _check_int,
    "b_sup": _check_int,  # nullable
    "b_unsup": _check_int,
}

_NULLABLE = {"n_total", "n_supervised", "steps", "d_z", "out_dir", "b_sup"}

_TOP_KEYS = {
    "task": _check_str,
    "n_classes": _check_int,
    "radius": _check_float,
    "sigma": _check_float,
    "n_cells": _check_int,
    "n_labels": _check_int,
    "means": _check_float_list,
    "noise": _check_float,
    "stay": _check_float,
    "n_total": _check_int,
    "n_supervised": _check_int,
    "n_test": _check_int,
    "split_seed": _check_int,
    "stratify_s": _check_bool,
    "hidden": _check_int,
    "d_z": _check_int,
    "optimizer": None,  # nested
    "steps": _check_int,
    "lambdas": lambda v, p: _check_float_list(v, p, length=3),
    "tau": _check_float,
    "tau_anneal": _check_bool,
    "tau_final": _check_float,
    "gumbel_hard": _check_bool,
    "surrogate": _check_str,
    "warmup_steps": _check_int,
    "split_unsup_batch": _check_bool,
    "stop_grad": None,  # list of placement strings
    "two_pass_fresh_z": _check_bool,
    "eval_every": _check_int,
    "eval_samples": _check_int,
    "mmd_bandwidth_scales": _check_float_list,
    "checkpoint_every": _check_int,
    "out_dir": _check_str,
    "seeds": _check_int_list,
}


def parse_config_dict(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("", "config root must be a JSON object")
    kwargs: dict = {}
    for key, value in obj.items():
        ptr = f"/{key}"
        if key not in _TOP_KEYS:
            raise ConfigError(ptr, "unknown key")
        if value is None:
            if key in _NULLABLE:
                kwargs[key] = None
                continue
            raise ConfigError(ptr, "null is not allowed here")
        if key == "optimizer":
            if not isinstance(value, dict):
                raise ConfigError(ptr, "expected an object")
            opt_kwargs: dict = {}
            for okey, ovalue in value.items():
                optr = f"{ptr}/{okey}"
                if okey not in _OPTIMIZER_KEYS:
                    raise ConfigError(optr, "unknown key")
                if ovalue is None:
                    if okey in _NULLABLE:
                        opt_kwargs[okey] = None
                        continue
                    raise ConfigError(optr, "null is not allowed here")
                opt_kwargs[okey] = _OPTIMIZER_KEYS[okey](ovalue, optr)
            try:
                kwargs["optimizer"] = OptimizerSpec(**opt_kwargs)
            except ValueError as e:
                raise ConfigError(ptr, str(e)) from None
        elif key == "stop_grad":
            if not isinstance(value, list):
                raise ConfigError(ptr, f"expected a list, got {type(value).__name__}")
            entries = []
            for i, item in enumerate(value):
                item = _check_str(item, f"{ptr}/{i}")
                if item not in STOP_GRAD_PLACEMENTS:
                    raise ConfigError(
                        f"{ptr}/{i}",
                        f"unknown placement {item!r}; valid: {', '.join(STOP_GRAD_PLACEMENTS)}",
                    )
                entries.append(item)
            kwargs["stop_grad"] = tuple(entries)
        else:
            checked = _TOP_KEYS[key](value, ptr)
            if isinstance(checked, list):
                checked = tuple(checked)
            kwargs[key] = checked
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError("", str(e)) from None


def parse_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"invalid JSON: {e}") from None
    return parse_config_dict(obj)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully explicit form: every key present, defaults materialized."""
    return {
        "task": cfg.task,
        "n_classes": cfg.n_classes,
        "radius": cfg.radius,
        "sigma": cfg.sigma,
        "n_cells": cfg.n_cells,
        "n_labels": cfg.n_labels,
        "means": list(cfg.means),
        "noise": cfg.noise,
        "stay": cfg.stay,
        "n_total": cfg.n_total,
        "n_supervised": cfg.n_supervised,
        "n_test": cfg.n_test,
        "split_seed": cfg.split_seed,
        "stratify_s": cfg.stratify_s,
        "hidden": cfg.hidden,
        "d_z": cfg.d_z,
        "optimizer": {
            "lr_d": cfg.optimizer.lr_d,
            "lr_g": cfg.optimizer.lr_g,
            "lr_l": cfg.optimizer.lr_l,
            "beta1": cfg.optimizer.beta1,
            "beta2": cfg.optimizer.beta2,
            "epsilon": cfg.optimizer.epsilon,
            "d_steps_per_g_step": cfg.optimizer.d_steps_per_g_step,
            "b_sup": cfg.optimizer.b_sup,
            "b_unsup": cfg.optimizer.b_unsup,
        },
        "steps": cfg.steps,
        "lambdas": list(cfg.lambdas),
        "tau": cfg.tau,
        "tau_anneal": cfg.tau_anneal,
        "tau_final": cfg.tau_final,
        "gumbel_hard": cfg.gumbel_hard,
        "surrogate": cfg.surrogate,
        "warmup_steps": cfg.warmup_steps,
        "split_unsup_batch": cfg.split_unsup_batch,
        "stop_grad": list(cfg.stop_grad),
        "two_pass_fresh_z": cfg.two_pass_fresh_z,
        "eval_every": cfg.eval_every,
        "eval_samples": cfg.eval_samples,
        "mmd_bandwidth_scales": list(cfg.mmd_bandwidth_scales),
        "checkpoint_every": cfg.checkpoint_every,
        "out_dir": cfg.out_dir,
        "seeds": list(cfg.seeds),
    }


def canonical_json(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: ExperimentConfig) -> bytes:
    """32-byte digest of the canonical config serialization."""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).digest()
