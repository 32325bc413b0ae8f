import numpy as np
import pytest

from s2cgan.checkpoint import (
    MAGIC,
    CheckpointError,
    load_checkpoint,
    restore_state,
    save_checkpoint,
)
from s2cgan.config import ExperimentConfig, OptimizerSpec, config_hash
from s2cgan.trainer import init_state, train_step


def tiny_config(**over):
    base = dict(
        task="a",
        n_total=64,
        n_supervised=8,
        n_test=16,
        hidden=8,
        d_z=2,
        steps=4,
        eval_every=2,
        eval_samples=16,
        warmup_steps=0,
        optimizer=OptimizerSpec(b_unsup=8),
    )
    base.update(over)
    return ExperimentConfig(**base)


@pytest.fixture
def trained_state():
    state = init_state(tiny_config(), seed=0)
    for _ in range(3):
        train_step(state)
    return state


def test_round_trip_is_bit_exact(trained_state, tmp_path):
    path = tmp_path / "checkpoint.bin"
    save_checkpoint(trained_state, path)
    data = load_checkpoint(path)
    assert data.version == 1
    assert set(data.nets) == {"generator", "discriminator", "labeller"}
    for role, net in trained_state.nets.items():
        loaded = data.nets[role]
        assert loaded.role == role
        assert loaded.widths == net.widths
        for name in net.names():
            assert np.array_equal(loaded.tensors[name], net.tensors[name])
        for name, (m, v) in trained_state.moments[role].items():
            m2, v2 = data.moments[role][name]
            assert np.array_equal(m, m2) and np.array_equal(v, v2)
    assert data.config_hash == config_hash(trained_state.config)
    assert data.matches_config(trained_state.config)


def test_round_trip_random_params(tmp_path):
    # fuzz the layout across several shapes and values
    for seed in range(5):
        state = init_state(tiny_config(hidden=3 + seed), seed=seed)
        rng = np.random.default_rng(seed)
        for net in state.nets.values():
            for name in net.names():
                net.tensors[name] = rng.normal(size=net.tensors[name].shape)
        path = tmp_path / f"c{seed}.bin"
        save_checkpoint(state, path)
        data = load_checkpoint(path)
        for role, net in state.nets.items():
            for name in net.names():
                assert np.array_equal(data.nets[role].tensors[name], net.tensors[name])


def test_save_is_byte_deterministic(trained_state, tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    save_checkpoint(trained_state, a)
    save_checkpoint(trained_state, b)
    assert a.read_bytes() == b.read_bytes()


def test_corrupted_magic_rejected(trained_state, tmp_path):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_state, path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_unsupported_version_rejected(trained_state, tmp_path):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_state, path)
    blob = bytearray(path.read_bytes())
    blob[4] = 2  # little-endian u32 version field
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="version 2"):
        load_checkpoint(path)


def test_truncation_rejected(trained_state, tmp_path):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_state, path)
    blob = path.read_bytes()
    for cut in (3, 11, len(blob) // 2, len(blob) - 1):
        path.write_bytes(blob[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


def test_trailing_garbage_rejected(trained_state, tmp_path):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_state, path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)


def test_no_temp_files_left_behind(trained_state, tmp_path):
    save_checkpoint(trained_state, tmp_path / "c.bin")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["c.bin"]


def test_restore_state_applies_tensors_and_moments(trained_state, tmp_path):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_state, path)
    restored = restore_state(trained_state.config, seed=99, path=path)
    for role, net in trained_state.nets.items():
        for name in net.names():
            assert np.array_equal(restored.nets[role].tensors[name], net.tensors[name])
        for name, (m, v) in trained_state.moments[role].items():
            m2, v2 = restored.moments[role][name]
            assert np.array_equal(m, m2) and np.array_equal(v, v2)


def test_restore_state_rejects_config_mismatch(trained_state, tmp_path):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_state, path)
    other = tiny_config(tau=0.9)
    with pytest.raises(CheckpointError, match="different config"):
        restore_state(other, seed=0, path=path)
    restored = restore_state(other, seed=0, path=path, require_match=False)
    assert np.array_equal(
        restored.gen.tensors["w0"], trained_state.gen.tensors["w0"]
    )


def test_magic_constant_value():
    assert MAGIC == b"S2CG"
