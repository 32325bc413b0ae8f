"""Semi-supervised conditional GAN training on synthetic tasks.

A generator, discriminator, and labeller play a three-network game: the
labeller supplies conditions for unlabeled data through a Gumbel-softmax
sampler, letting adversarial training use far more data than the handful
of labeled pairs. Everything runs on a hand-rolled reverse-mode autodiff
tape over numpy arrays, with deterministic seeding end to end.
"""

from .autodiff import (
    DomainError,
    Node,
    ShapeError,
    Tape,
    finite_diff_check,
    gradient_suite,
)
from .checkpoint import (
    CheckpointData,
    CheckpointError,
    load_checkpoint,
    restore_state,
    save_checkpoint,
)
from .cli import cli_main, main
from .config import (
    ConfigError,
    ExperimentConfig,
    OptimizerSpec,
    canonical_json,
    config_hash,
    config_to_dict,
    parse_config,
    parse_config_dict,
)
from .data import (
    DatasetSplit,
    TaskA,
    TaskB,
    bayes_oracle_label,
    empirical_run_length,
    export_split_csv,
    import_samples_csv,
    make_splits,
)
from .inference import (
    InferenceRequest,
    infer_one_pass,
    infer_two_pass,
    run_inference,
)
from .metrics import (
    MetricsRecord,
    evaluate_state,
    label_agreement,
    label_marginal_tv,
    mmd_rbf,
    run_baseline_full,
    run_baseline_naive,
    run_s2cgan,
)
from .nets import (
    Condition,
    ConditionSpace,
    NetworkParams,
    composite_gradient_check,
    discriminator_forward,
    generator_forward,
    gumbel_softmax_sample,
    init_params,
    labeller_forward,
    sample_gumbel_noise,
)
from .objectives import (
    ObjectiveBreakdown,
    UnsupportedTaskError,
    conditional_sampling_objective,
    full_objective,
    labeller_supervised_loss,
    supervised_cgan_objective,
    unconditional_gan_objective,
    unsupervised_cgan_objective,
)
from .oracle import (
    OracleInstance,
    OracleReport,
    contrapositive_probe,
    enumerate_consistent_instance,
    perturb_generator,
    random_instance,
    theorem_sweep,
    verify_marginal_consequence,
)
from .reporting import (
    CSV_HEADER,
    emit_metrics_csv,
    emit_scatter_svg,
    parse_metrics_csv,
)
from .trainer import (
    TrainingDiverged,
    TrainState,
    agreement_mode_for,
    init_state,
    pretrain_labeller,
    train,
    train_step,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "CheckpointData",
    "CheckpointError",
    "Condition",
    "ConditionSpace",
    "ConfigError",
    "DatasetSplit",
    "DomainError",
    "ExperimentConfig",
    "InferenceRequest",
    "MetricsRecord",
    "NetworkParams",
    "Node",
    "ObjectiveBreakdown",
    "OptimizerSpec",
    "OracleInstance",
    "OracleReport",
    "ShapeError",
    "Tape",
    "TaskA",
    "TaskB",
    "TrainState",
    "TrainingDiverged",
    "UnsupportedTaskError",
    "agreement_mode_for",
    "bayes_oracle_label",
    "canonical_json",
    "cli_main",
    "composite_gradient_check",
    "conditional_sampling_objective",
    "config_hash",
    "config_to_dict",
    "contrapositive_probe",
    "discriminator_forward",
    "emit_metrics_csv",
    "emit_scatter_svg",
    "empirical_run_length",
    "enumerate_consistent_instance",
    "evaluate_state",
    "export_split_csv",
    "finite_diff_check",
    "full_objective",
    "generator_forward",
    "gradient_suite",
    "gumbel_softmax_sample",
    "import_samples_csv",
    "infer_one_pass",
    "infer_two_pass",
    "init_params",
    "init_state",
    "label_agreement",
    "label_marginal_tv",
    "labeller_forward",
    "labeller_supervised_loss",
    "load_checkpoint",
    "main",
    "make_splits",
    "mmd_rbf",
    "parse_config",
    "parse_config_dict",
    "parse_metrics_csv",
    "perturb_generator",
    "pretrain_labeller",
    "random_instance",
    "restore_state",
    "run_baseline_full",
    "run_baseline_naive",
    "run_inference",
    "run_s2cgan",
    "sample_gumbel_noise",
    "save_checkpoint",
    "supervised_cgan_objective",
    "theorem_sweep",
    "train",
    "train_step",
    "unconditional_gan_objective",
    "unsupervised_cgan_objective",
    "verify_marginal_consequence",
]
