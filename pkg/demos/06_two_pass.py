"""Compare one-pass and two-pass conditional synthesis.

One-pass renders x = G(c, z). Two-pass lets the labeller re-read the draft
and renders again from that synthetic condition, x = G(L(G(c, z)), z), with
the same z in both passes. That makes two-pass a pure function of (c, z)
with an exact fixed point: whenever the labeller hands back the condition it
was given, the second render is bit-for-bit the first one. This script
trains the ring task jointly on 8 labeled + ~4000 unlabeled points (about
a minute), scores both modes with the fixed referee, and verifies the fixed
point on the items where the re-read agrees.
"""

import numpy as np

from s2cgan import (
    ExperimentConfig,
    InferenceRequest,
    bayes_oracle_label,
    infer_one_pass,
    infer_two_pass,
    train,
)

cfg = ExperimentConfig(task="a")
task = cfg.task_spec()
print(f"training the ring task for {cfg.effective_steps} steps...")
state, history = train(cfg, seed=0)
rec = history[-1]
print(
    f"final eval: one-pass agreement {rec.label_agreement_one_pass:.4f}, "
    f"two-pass agreement {rec.label_agreement_two_pass:.4f}\n"
)

rng = np.random.default_rng(17)
n_per_class = 100
labels = np.repeat(np.arange(cfg.n_classes), n_per_class)
cond = task.space.condition_from_labels(labels)
z = rng.normal(size=(len(labels), cfg.effective_d_z))
req = InferenceRequest(condition=cond, noise_mode="fixed", z=z)

x_one = infer_one_pass(state.gen, req)
x_two, c_syn = infer_two_pass(state.gen, state.lab, req)

agree_one = float(np.mean(bayes_oracle_label(task, x_one).labels() == labels))
agree_two = float(np.mean(bayes_oracle_label(task, x_two).labels() == labels))
print(f"referee agreement on {len(labels)} fresh renders:")
print(f"  one-pass  {agree_one:.4f}")
print(f"  two-pass  {agree_two:.4f}")

reread = c_syn.labels()
kept = reread == labels
print(f"\nlabeller re-read matches the requested class on "
      f"{int(kept.sum())}/{len(labels)} items")
if kept.any():
    identical = np.all(x_two[kept] == x_one[kept])
    print(f"on those items the second render is bitwise identical: {identical}")
if (~kept).any():
    moved = float(np.mean(np.abs(x_two[~kept] - x_one[~kept])))
    print(f"on the re-labeled items the render moves by {moved:.3f} on average")
