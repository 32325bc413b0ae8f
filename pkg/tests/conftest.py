import numpy as np
import pytest

from s2cgan.nets import NetworkParams, init_params

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def zero_params(params: NetworkParams) -> NetworkParams:
    out = params.copy()
    for name in out.names():
        out.tensors[name] = np.zeros_like(out.tensors[name])
    return out


def tiny_nets(space, data_dim, d_z, hidden=16, seed=0):
    """Small G/D/L triple wired for the given condition space."""
    rng = np.random.default_rng(seed)
    gen = init_params([space.flat_dim + d_z, hidden, data_dim], "generator", rng)
    dis = init_params([data_dim + space.flat_dim, hidden, 1], "discriminator", rng)
    lab = init_params([data_dim, hidden, space.flat_dim], "labeller", rng)
    return gen, dis, lab


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
