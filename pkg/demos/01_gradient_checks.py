"""Finite-difference validation of the autodiff tape.

Every primitive op is checked against central differences over randomized
compositions, then the full labeller -> Gumbel -> generator ->
discriminator pipeline is checked end to end with frozen sampling noise.
"""

from s2cgan import composite_gradient_check, gradient_suite

SEEDS_PER_OP = 25

print(f"checking every op over {SEEDS_PER_OP} random compositions each\n")
per_op = gradient_suite(seeds=SEEDS_PER_OP)
width = max(len(name) for name in per_op)
for name in sorted(per_op):
    print(f"  {name:<{width}}  max relative error {per_op[name]:.3e}")

worst = max(per_op.values())
print(f"\nworst op error: {worst:.3e} (tolerance 1e-5)")

composite = composite_gradient_check(seed=0)
print(f"composite pipeline error: {composite:.3e} (tolerance 1e-4)")

assert worst < 1e-5 and composite < 1e-4
print("all gradient checks pass")
