"""Command-line surface: train, eval, infer, edit-infer, baseline, checks.

Exit codes: 0 success, 1 validation error (flags, config, condition
literals, incompatible checkpoints), 2 runtime failure (diverged training,
IO errors). The S2CGAN_OUT environment variable overrides the output
directory from both the config and the --out flag.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, restore_state
from .config import ConfigError, ExperimentConfig, parse_config
from .data import _write_csv
from .inference import InferenceRequest, infer_one_pass, infer_two_pass
from .metrics import MetricsRecord, evaluate_state, run_baseline_full, run_baseline_naive
from .nets import Condition
from .objectives import full_objective, labeller_supervised_loss
from .trainer import TrainingDiverged, agreement_mode_for, d_phase, draw_batches, train


class CliError(ValueError):
    """User-input problem: reported with a message, exit code 1."""


def _resolve_out(config: ExperimentConfig, flag_out: str | None) -> Path | None:
    env = os.environ.get("S2CGAN_OUT")
    chosen = env or flag_out or config.out_dir
    return Path(chosen) if chosen else None


def _load_config(path: str) -> ExperimentConfig:
    try:
        return parse_config(path)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except ConfigError as e:
        raise CliError(f"invalid config: {e}")


def _restore(config: ExperimentConfig, ckpt: str, seed: int):
    try:
        return restore_state(config, seed, ckpt)
    except FileNotFoundError:
        raise CliError(f"checkpoint not found: {ckpt}")
    except CheckpointError as e:
        raise CliError(f"invalid checkpoint: {e}")


def _progress(out):
    def emit(rec: MetricsRecord):
        iou = "" if rec.mean_iou is None else f" mean_iou={rec.mean_iou:.4f}"
        print(
            f"step={rec.step} v_full={rec.breakdown.v_full:.4f} "
            f"agreement={rec.label_agreement:.4f}{iou} mmd2={rec.mmd2:.5f} "
            f"marginal_tv={rec.marginal_tv:.4f}",
            file=out,
        )

    return emit


def _parse_condition(config: ExperimentConfig, class_arg, grid_arg, count: int) -> Condition:
    task = config.task_spec()
    space = task.space
    if count < 1:
        raise CliError("--count must be >= 1")
    if space.kind == "class":
        if class_arg is None or grid_arg is not None:
            raise CliError("this config is a class task: use --class K")
        if not 0 <= class_arg < space.n_categories:
            raise CliError(
                f"--class must lie in [0, {space.n_categories}), got {class_arg}"
            )
        return space.condition_from_labels(np.full(count, class_arg, dtype=int))
    if grid_arg is None or class_arg is not None:
        raise CliError("this config is a grid task: use --grid STRING")
    labels = _parse_grid_string(grid_arg, space.n_cells, space.n_categories)
    return space.condition_from_labels(np.tile(labels, (count, 1)))


def _parse_grid_string(text: str, n_cells: int, n_labels: int) -> np.ndarray:
    if len(text) != n_cells:
        raise CliError(f"--grid needs exactly {n_cells} characters, got {len(text)}")
    if not text.isdigit():
        raise CliError("--grid characters must be digits")
    labels = np.array([int(ch) for ch in text], dtype=int)
    if np.any(labels >= n_labels):
        raise CliError(f"--grid digits must be < {n_labels}")
    return labels


def _grid_string(labels: np.ndarray) -> str:
    return "".join(str(int(v)) for v in np.asarray(labels).reshape(-1))


# -- subcommands ---------------------------------------------------------------


def cmd_train(args, out_stream) -> int:
    config = _load_config(args.config)
    base = _resolve_out(config, args.out)
    seeds = args.seed if args.seed else list(config.seeds)
    for seed in seeds:
        run_dir = base / f"seed_{seed}" if base else None
        print(f"training seed {seed}" + (f" -> {run_dir}" if run_dir else ""), file=out_stream)
        _, history = train(config, seed, out_dir=run_dir, progress=_progress(out_stream))
        if history:
            rec = history[-1]
            print(
                f"seed {seed} final: agreement={rec.label_agreement:.4f} "
                f"mmd2={rec.mmd2:.5f} marginal_tv={rec.marginal_tv:.4f}",
                file=out_stream,
            )
    return 0


def cmd_eval(args, out_stream) -> int:
    config = _load_config(args.config)
    state = _restore(config, args.checkpoint, args.seed)
    b = draw_batches(state)
    _, v_sup, v_unsup = d_phase(state, b)
    v_lab = labeller_supervised_loss(state.lab, b.x_s, b.c_s)
    breakdown = full_objective(
        v_sup, v_lab, 0.0 if v_unsup is None else v_unsup, config.lambdas
    )
    rec = evaluate_state(state, breakdown, agreement_mode_for(config))
    _progress(out_stream)(rec)
    out = _resolve_out(config, args.out)
    if out:
        out.mkdir(parents=True, exist_ok=True)
        from .reporting import emit_metrics_csv

        emit_metrics_csv([rec], out / "eval_metrics.csv")
        print(f"wrote {out / 'eval_metrics.csv'}", file=out_stream)
    return 0


def cmd_infer(args, out_stream) -> int:
    config = _load_config(args.config)
    state = _restore(config, args.checkpoint, args.seed)
    cond = _parse_condition(config, getattr(args, "class"), args.grid, args.count)
    passes = args.passes if args.passes else (2 if config.lambdas[2] > 0.0 else 1)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(7,)))
    req = InferenceRequest(cond, noise_mode="fresh", passes=passes)
    if passes == 1:
        x = infer_one_pass(state.gen, req, rng)
        c_used = cond
    else:
        x, c_used = infer_two_pass(
            state.gen, state.lab, req, rng, config.two_pass_fresh_z
        )
    task = config.task_spec()
    relabeled = task.oracle_labels(x)
    for i in range(x.shape[0]):
        coords = " ".join(f"{v: .6f}" for v in x[i])
        print(f"x[{i}] = {coords}  referee: {_grid_string(relabeled[i])}", file=out_stream)

    out = _resolve_out(config, args.out)
    if out:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "infer_samples.csv", x, c_used.labels(), task.space.n_cells)
        print(f"wrote {out / 'infer_samples.csv'}", file=out_stream)
        if task.space.kind == "class":
            from .reporting import emit_scatter_svg

            emit_scatter_svg(
                state.split.x_test,
                x,
                (state.split.c_test.labels(), c_used.labels()),
                out / "infer_scatter.svg",
            )
            print(f"wrote {out / 'infer_scatter.svg'}", file=out_stream)
    return 0


def cmd_edit_infer(args, out_stream, in_stream) -> int:
    config = _load_config(args.config)
    task = config.task_spec()
    if task.space.kind != "grid":
        raise CliError("edit-infer needs a grid-task config")
    state = _restore(config, args.checkpoint, args.seed)
    n_cells, n_labels = task.space.n_cells, task.space.n_categories
    rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(8,)))
    if args.grid:
        labels = _parse_grid_string(args.grid, n_cells, n_labels)
    else:
        labels = task.sample_labels(rng, 1)[0]

    def resynthesize():
        cond = task.space.condition_from_labels(labels.reshape(1, -1))
        req = InferenceRequest(cond, noise_mode="fresh", passes=2)
        x, _ = infer_two_pass(state.gen, state.lab, req, rng, config.two_pass_fresh_z)
        coords = " ".join(f"{v: .4f}" for v in x[0])
        print(f"x = {coords}", file=out_stream)
        print(f"referee relabeling: {_grid_string(task.oracle_labels(x)[0])}", file=out_stream)

    print(f"labels: {_grid_string(labels)}", file=out_stream)
    print("commands: set <i..j|i> <label>, render, quit", file=out_stream)
    resynthesize()
    for line in in_stream:
        words = line.strip().split()
        if not words:
            continue
        if words[0] in ("quit", "exit"):
            break
        if words[0] == "render":
            print(f"labels: {_grid_string(labels)}", file=out_stream)
            resynthesize()
            continue
        if words[0] == "set" and len(words) == 3:
            try:
                span, value = words[1], int(words[2])
                if ".." in span:
                    lo_s, hi_s = span.split("..", 1)
                    lo, hi = int(lo_s), int(hi_s)
                else:
                    lo = hi = int(span)
            except ValueError:
                print("could not parse: try `set 3..7 2`", file=out_stream)
                continue
            if not (0 <= lo <= hi < n_cells) or not (0 <= value < n_labels):
                print(
                    f"out of range: cells 0..{n_cells - 1}, labels 0..{n_labels - 1}",
                    file=out_stream,
                )
                continue
            labels[lo : hi + 1] = value
            print(f"labels: {_grid_string(labels)}", file=out_stream)
            resynthesize()
            continue
        print(f"unknown command {words[0]!r}; try set/render/quit", file=out_stream)
    return 0


def cmd_baseline(args, out_stream) -> int:
    config = _load_config(args.config)
    runner = {"naive": run_baseline_naive, "full": run_baseline_full}[args.kind]
    base = _resolve_out(config, args.out)
    seeds = args.seed if args.seed else list(config.seeds)
    for seed in seeds:
        run_dir = base / f"{args.kind}_seed_{seed}" if base else None
        print(f"baseline {args.kind}, seed {seed}", file=out_stream)
        _, history = runner(config, seed, out_dir=run_dir)
        if history:
            _progress(out_stream)(history[-1])
    return 0


def cmd_oracle_check(args, out_stream) -> int:
    from .oracle import contrapositive_probe, theorem_sweep

    rng = np.random.default_rng(args.seed)
    sweep = theorem_sweep(args.trials, rng)
    probe = contrapositive_probe(args.trials, rng)
    print(
        f"consistency sweep: {sweep['trials']} instances, "
        f"worst marginal gap {sweep['worst_gap']:.3e}, "
        f"{len(sweep['failures'])} failures",
        file=out_stream,
    )
    print(
        f"perturbation probe: residual exceeded the floor in {probe:.4f} "
        f"of perturbed instances",
        file=out_stream,
    )
    ok = not sweep["failures"] and sweep["worst_gap"] <= 1e-10 and probe == 1.0
    print("oracle-check: " + ("PASS" if ok else "FAIL"), file=out_stream)
    return 0 if ok else 2


def cmd_gradcheck(args, out_stream) -> int:
    from .autodiff import gradient_suite
    from .nets import composite_gradient_check

    per_op = gradient_suite(seeds=args.seeds)
    worst_name = max(per_op, key=per_op.get)
    for name in sorted(per_op):
        print(f"{name}: {per_op[name]:.3e}", file=out_stream)
    composite = composite_gradient_check()
    print(f"composite pipeline: {composite:.3e}", file=out_stream)
    ok = per_op[worst_name] < 1e-5 and composite < 1e-4
    print("gradcheck: " + ("PASS" if ok else "FAIL"), file=out_stream)
    return 0 if ok else 2


# -- parser and entry point -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="s2cgan", description="Semi-supervised conditional GAN experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_common(p, checkpoint=False):
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="output directory")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="checkpoint file")
            p.add_argument("--seed", type=int, default=0)

    p_train = sub.add_parser("train", help="train per config and seed list")
    with_common(p_train)
    p_train.add_argument("--seed", type=int, nargs="*", default=None)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    with_common(p_eval, checkpoint=True)

    p_infer = sub.add_parser("infer", help="synthesize from a condition literal")
    with_common(p_infer, checkpoint=True)
    p_infer.add_argument("--class", type=int, default=None, dest="class")
    p_infer.add_argument("--grid", type=str, default=None)
    p_infer.add_argument("--count", type=int, default=16)
    p_infer.add_argument("--passes", type=int, choices=(1, 2), default=None)

    p_edit = sub.add_parser("edit-infer", help="interactive grid editing loop")
    with_common(p_edit, checkpoint=True)
    p_edit.add_argument("--grid", type=str, default=None, help="initial label string")

    p_base = sub.add_parser("baseline", help="run a reference baseline")
    with_common(p_base)
    p_base.add_argument("--kind", required=True, choices=("naive", "full"))
    p_base.add_argument("--seed", type=int, nargs="*", default=None)

    p_oracle = sub.add_parser("oracle-check", help="finite-space consistency sweep")
    p_oracle.add_argument("--trials", type=int, default=1000)
    p_oracle.add_argument("--seed", type=int, default=0)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p_grad.add_argument("--seeds", type=int, default=100)

    return parser


def cli_main(argv=None, out_stream=None, in_stream=None) -> int:
    out = out_stream if out_stream is not None else sys.stdout
    stdin = in_stream if in_stream is not None else sys.stdin
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    try:
        if args.command == "train":
            return cmd_train(args, out)
        if args.command == "eval":
            return cmd_eval(args, out)
        if args.command == "infer":
            return cmd_infer(args, out)
        if args.command == "edit-infer":
            return cmd_edit_infer(args, out, stdin)
        if args.command == "baseline":
            return cmd_baseline(args, out)
        if args.command == "oracle-check":
            return cmd_oracle_check(args, out)
        if args.command == "gradcheck":
            return cmd_gradcheck(args, out)
        raise CliError(f"unknown command {args.command!r}")
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except TrainingDiverged as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())
