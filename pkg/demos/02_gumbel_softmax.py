"""Gumbel-softmax sampling: argmax statistics and the straight-through trick.

The argmax of a Gumbel-softmax draw is distributed Categorical(softmax(logits))
regardless of temperature; temperature only controls how soft the simplex
point is. The straight-through variant emits an exact one-hot forward while
gradients flow through the soft sample.
"""

import numpy as np

from s2cgan import Tape, gumbel_softmax_sample
from s2cgan.nets import gumbel_softmax_node, sample_gumbel_noise

DRAWS = 50_000
LOGITS = np.array([[1.5, 0.2, -0.4, 0.9]])

rng = np.random.default_rng(0)
target = np.exp(LOGITS[0] - LOGITS[0].max())
target /= target.sum()
print(f"target categorical: {np.round(target, 4)}")

for tau in (0.25, 1.0, 4.0):
    counts = np.zeros(4)
    soft_mass = 0.0
    r = np.random.default_rng(1)
    for _ in range(DRAWS):
        y = gumbel_softmax_sample(LOGITS, tau, r)
        counts[np.argmax(y)] += 1
        soft_mass += np.max(y)
    freq = counts / DRAWS
    tv = 0.5 * np.abs(freq - target).sum()
    print(
        f"tau={tau:<4} argmax TV vs target = {tv:.4f}   "
        f"mean max-coordinate = {soft_mass / DRAWS:.3f}"
    )

print("\nstraight-through: hard one-hot forward, soft gradient backward")
tape = Tape()
logits = tape.leaf("logits", LOGITS)
noise = sample_gumbel_noise(np.random.default_rng(2), LOGITS.shape)
soft = gumbel_softmax_node(logits, noise, 1.0)
hard = gumbel_softmax_node(logits, noise, 1.0, hard=True)
print(f"soft sample: {np.round(soft.value[0], 4)}")
print(f"hard sample: {hard.value[0]}")
g_soft = tape.backward(soft.sum_last().mean(), ["logits"])["logits"]
g_hard = tape.backward(hard.sum_last().mean(), ["logits"])["logits"]
print(f"gradients identical: {np.array_equal(g_soft, g_hard)}")
