"""Exact finite-space check of the label-marginal consequence.

The claim under test, stated on finite spaces: let p_X be the data
distribution, p_L(c|x) the labeller, p_G(x|c) the generator, and p_L(c)
the labeller's induced condition marginal. If

  (joint match)    p_X(x) p_L(c|x) = p_G(x|c) p_L(c)   for all x, c,
  (labeller fit)   p_L(c|x) equals the true conditional on supervised x,
  (generator fit)  p_G(x|c) equals the true conditional on supervised c,

then p_L(c) equals the true prior p_C(c) for every supervised condition c.
Everything here is small dense matrices, so the premises and the
conclusion are checked by direct enumeration rather than training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROW_TOL = 1e-12
SUPPORT_FLOOR = 1e-6


@dataclass(frozen=True)
class OracleInstance:
    """Finite joint over n sample points and k condition points."""

    joint: np.ndarray  # (n, k), sums to 1; defines p_X, p_C, true conditionals
    labeller: np.ndarray  # (n, k) row-stochastic: p_L(c|x)
    generator: np.ndarray  # (k, n) row-stochastic: p_G(x|c)
    s_x: tuple[int, ...]  # supervised sample indices
    s_c: tuple[int, ...]  # supervised condition indices

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=np.float64)
        lab = np.asarray(self.labeller, dtype=np.float64)
        gen = np.asarray(self.generator, dtype=np.float64)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "labeller", lab)
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "s_x", tuple(int(i) for i in self.s_x))
        object.__setattr__(self, "s_c", tuple(int(i) for i in self.s_c))
        n, k = joint.shape
        if lab.shape != (n, k) or gen.shape != (k, n):
            raise ValueError(
                f"shape mismatch: joint {joint.shape}, labeller {lab.shape}, "
                f"generator {gen.shape}"
            )
        for name, m in (("joint", joint), ("labeller", lab), ("generator", gen)):
            if np.any(m < 0.0):
                raise ValueError(f"{name} has negative entries")
        if abs(joint.sum() - 1.0) > ROW_TOL:
            raise ValueError("joint must sum to 1")
        for name, m in (("labeller", lab), ("generator", gen)):
            if np.max(np.abs(m.sum(axis=1) - 1.0)) > ROW_TOL:
                raise ValueError(f"{name} rows must sum to 1 within {ROW_TOL}")
        if any(not 0 <= i < n for i in self.s_x) or any(
            not 0 <= j < k for j in self.s_c
        ):
            raise ValueError("supervised indices out of range")

    @property
    def n(self) -> int:
        return self.joint.shape[0]

    @property
    def k(self) -> int:
        return self.joint.shape[1]

    @property
    def p_x(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def p_c(self) -> np.ndarray:
        return self.joint.sum(axis=0)


@dataclass(frozen=True)
class OracleReport:
    joint_match_residual: float
    labeller_fit_residual: float
    generator_fit_residual: float
    marginal_gaps: np.ndarray  # |p_L(c) - p_C(c)| for each c in s_c
    holds: bool

    def to_dict(self) -> dict:
        return {
            "joint_match_residual": self.joint_match_residual,
            "labeller_fit_residual": self.labeller_fit_residual,
            "generator_fit_residual": self.generator_fit_residual,
            "marginal_gaps": [float(g) for g in self.marginal_gaps],
            "holds": self.holds,
        }


def induced_label_marginal(inst: OracleInstance) -> np.ndarray:
    """p_L(c) = sum_x p_L(c|x) p_X(x)."""
    return inst.labeller.T @ inst.p_x


def joint_match_residual(inst: OracleInstance) -> float:
    """Max |p_X(x) p_L(c|x) - p_G(x|c) p_L(c)| over all pairs."""
    p_l = induced_label_marginal(inst)
    lhs = inst.p_x[:, None] * inst.labeller
    rhs = inst.generator.T * p_l[None, :]
    return float(np.max(np.abs(lhs - rhs)))


def _true_conditionals(inst: OracleInstance) -> tuple[np.ndarray, np.ndarray]:
    """(p(c|x) as (n,k), p(x|c) as (k,n)); requires full-support marginals."""
    p_x, p_c = inst.p_x, inst.p_c
    if np.any(p_x <= 0.0) or np.any(p_c <= 0.0):
        raise ValueError("true conditionals need full-support marginals")
    return inst.joint / p_x[:, None], (inst.joint / p_c[None, :]).T


def verify_marginal_consequence(inst: OracleInstance, tol: float = 1e-12) -> OracleReport:
    """Check the premises at tolerance tol and the conclusion at 10*tol.

    The gap bound's factor 10 covers propagating three tol-level premise
    residuals through one division; loose but sufficient at 1e-12.
    """
    if not inst.s_x or not inst.s_c:
        raise ValueError("supervised sets must be non-empty")
    cond_c_given_x, cond_x_given_c = _true_conditionals(inst)
    s_x = list(inst.s_x)
    s_c = list(inst.s_c)
    r_joint = joint_match_residual(inst)
    r_lab = float(np.max(np.abs(inst.labeller[s_x] - cond_c_given_x[s_x])))
    r_gen = float(np.max(np.abs(inst.generator[s_c] - cond_x_given_c[s_c])))
    p_l = induced_label_marginal(inst)
    gaps = np.abs(p_l[s_c] - inst.p_c[s_c])
    premises_ok = r_joint <= tol and r_lab <= tol and r_gen <= tol
    holds = bool(premises_ok and np.all(gaps <= 10.0 * tol))
    return OracleReport(r_joint, r_lab, r_gen, gaps, holds)


def _random_stochastic(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    m = rng.uniform(SUPPORT_FLOOR, 1.0, size=(rows, cols))
    return m / m.sum(axis=1, keepdims=True)


def _random_subset(rng: np.random.Generator, size: int) -> tuple[int, ...]:
    count = int(rng.integers(1, size + 1))
    return tuple(sorted(rng.choice(size, size=count, replace=False).tolist()))


def enumerate_consistent_instance(n: int, k: int, rng: np.random.Generator) -> OracleInstance:
    """Random full-support joint with labeller/generator set to its exact
    conditionals; satisfies all three premises by construction."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    joint = rng.uniform(SUPPORT_FLOOR, 1.0, size=(n, k))
    joint = joint / joint.sum()
    p_x = joint.sum(axis=1)
    p_c = joint.sum(axis=0)
    labeller = joint / p_x[:, None]
    generator = (joint / p_c[None, :]).T
    return OracleInstance(joint, labeller, generator, _random_subset(rng, n), _random_subset(rng, k))


def random_instance(n: int, k: int, rng: np.random.Generator) -> OracleInstance:
    """Independent random labeller/generator; premises generically violated."""
    joint = rng.uniform(SUPPORT_FLOOR, 1.0, size=(n, k))
    joint = joint / joint.sum()
    return OracleInstance(
        joint,
        _random_stochastic(rng, n, k),
        _random_stochastic(rng, k, n),
        _random_subset(rng, n),
        _random_subset(rng, k),
    )


def perturb_generator(
    inst: OracleInstance, rng: np.random.Generator, magnitude: float = 1e-3
) -> OracleInstance:
    """Bump one generator entry by magnitude and renormalize its row."""
    gen = inst.generator.copy()
    c = int(rng.integers(0, inst.k))
    x = int(rng.integers(0, inst.n))
    gen[c, x] += magnitude
    gen[c] = gen[c] / gen[c].sum()
    return OracleInstance(inst.joint, inst.labeller, gen, inst.s_x, inst.s_c)


def contrapositive_probe(
    trials: int, rng: np.random.Generator, n_max: int = 12, k_max: int = 6,
    residual_floor: float = 0.01, gap_floor: float = 1e-10,
) -> float:
    """Fraction of random premise-violating instances whose marginal also
    misses the prior somewhere in S_c. Statistical evidence, not a theorem."""
    hits = 0
    total = 0
    while total < trials:
        n = int(rng.integers(2, n_max + 1))
        k = int(rng.integers(2, k_max + 1))
        inst = random_instance(n, k, rng)
        if joint_match_residual(inst) <= residual_floor:
            continue
        total += 1
        gaps = np.abs(induced_label_marginal(inst)[list(inst.s_c)] - inst.p_c[list(inst.s_c)])
        if np.any(gaps > gap_floor):
            hits += 1
    return hits / trials


def theorem_sweep(
    trials: int, rng: np.random.Generator, n_max: int = 12, k_max: int = 6,
    tol: float = 1e-12,
) -> dict:
    """Run the consistency check over random instances; returns a summary."""
    worst_gap = 0.0
    failures = []
    for i in range(trials):
        n = int(rng.integers(1, n_max + 1))
        k = int(rng.integers(1, k_max + 1))
        inst = enumerate_consistent_instance(n, k, rng)
        report = verify_marginal_consequence(inst, tol=tol)
        worst_gap = max(worst_gap, float(np.max(report.marginal_gaps)))
        if not report.holds:
            failures.append((i, report.to_dict()))
    return {"trials": trials, "worst_gap": worst_gap, "failures": failures}
