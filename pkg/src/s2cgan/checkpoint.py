"""Binary checkpoints: network tensors, optimizer moments, config hash.

Layout (all integers little-endian):

    magic "S2CG" | u32 version = 1 | u32 network count
    per network:
        u8 role | u32 entry count
        per entry: u16 name length | name UTF-8 | u32 rank | u64 extents
                   | f64 values (C order)
        u8 moments flag; if 1: per entry, f64 m values then f64 v values
    32-byte config hash (sha256 of the canonical config JSON)

Writes go to a temp file in the target directory followed by an atomic
rename, so a crash never leaves a partial checkpoint behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_hash
from .nets import NetworkParams

MAGIC = b"S2CG"
VERSION = 1
ROLE_TAGS = {"generator": 0, "discriminator": 1, "labeller": 2}
TAG_ROLES = {v: k for k, v in ROLE_TAGS.items()}
MAX_RANK = 2


class CheckpointError(ValueError):
    """Malformed checkpoint file: bad magic, version, or truncation."""


@dataclass
class CheckpointData:
    version: int
    nets: dict[str, NetworkParams]
    moments: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] | None
    config_hash: bytes

    def matches_config(self, config: ExperimentConfig) -> bool:
        return self.config_hash == config_hash(config)


def _widths_from_tensors(tensors: dict[str, np.ndarray]) -> list[int]:
    weights = sorted(
        (name for name in tensors if name.startswith("w")), key=lambda n: int(n[1:])
    )
    widths = [tensors[weights[0]].shape[0]]
    widths += [tensors[name].shape[1] for name in weights]
    return widths


def _pack_array(a: np.ndarray) -> bytes:
    a = np.ascontiguousarray(a, dtype=np.float64)
    parts = [struct.pack("<I", a.ndim)]
    parts += [struct.pack("<Q", extent) for extent in a.shape]
    parts.append(a.astype("<f8").tobytes())
    return b"".join(parts)


def save_checkpoint(state, path) -> None:
    """Write the state's networks, Adam moments, and config hash."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(state.nets))]
    for role in sorted(state.nets, key=lambda r: ROLE_TAGS[r]):
        net = state.nets[role]
        names = net.names()
        parts.append(struct.pack("<BI", ROLE_TAGS[role], len(names)))
        for name in names:
            encoded = name.encode("utf-8")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
            parts.append(_pack_array(net.tensors[name]))
        moments = state.moments.get(role) if state.moments else None
        if moments is None:
            parts.append(struct.pack("<B", 0))
        else:
            parts.append(struct.pack("<B", 1))
            for name in names:
                m, v = moments[name]
                parts.append(np.ascontiguousarray(m, dtype="<f8").tobytes())
                parts.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
    parts.append(config_hash(state.config))
    blob = b"".join(parts)

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError(
                f"truncated checkpoint: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.blob)}"
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self) -> np.ndarray:
        (rank,) = self.unpack("<I")
        if rank > MAX_RANK:
            raise CheckpointError(f"tensor rank {rank} exceeds supported rank {MAX_RANK}")
        shape = tuple(self.unpack("<Q")[0] for _ in range(rank))
        count = int(np.prod(shape)) if shape else 1
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    def raw_array(self, shape) -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def load_checkpoint(path) -> CheckpointData:
    blob = Path(path).read_bytes()
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    version, n_nets = r.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    nets: dict[str, NetworkParams] = {}
    all_moments: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {}
    any_moments = False
    for _ in range(n_nets):
        tag, n_entries = r.unpack("<BI")
        if tag not in TAG_ROLES:
            raise CheckpointError(f"unknown network role tag {tag}")
        role = TAG_ROLES[tag]
        tensors: dict[str, np.ndarray] = {}
        order: list[str] = []
        for _ in range(n_entries):
            (name_len,) = r.unpack("<H")
            name = r.take(name_len).decode("utf-8")
            tensors[name] = r.array()
            order.append(name)
        (flag,) = r.unpack("<B")
        if flag not in (0, 1):
            raise CheckpointError(f"bad moment-section flag {flag}")
        if flag:
            any_moments = True
            moments = {}
            for name in order:
                m = r.raw_array(tensors[name].shape)
                v = r.raw_array(tensors[name].shape)
                moments[name] = (m, v)
            all_moments[role] = moments
        nets[role] = NetworkParams(role, _widths_from_tensors(tensors), tensors)

    digest = r.take(32)
    if r.pos != len(blob):
        raise CheckpointError(f"{len(blob) - r.pos} trailing bytes after config hash")
    return CheckpointData(
        version=version,
        nets=nets,
        moments=all_moments if any_moments else None,
        config_hash=digest,
    )


def restore_state(config: ExperimentConfig, seed: int, path, *, require_match: bool = True):
    """A fresh TrainState with the checkpoint's tensors and moments applied.

    The step counter and RNG streams are not persisted, so this supports
    evaluation and inference, not a bit-exact resume of training.
    """
    from .trainer import init_state

    data = load_checkpoint(path)
    if require_match and not data.matches_config(config):
        raise CheckpointError("checkpoint was written by a different config")
    state = init_state(config, seed)
    for role, net in data.nets.items():
        if role not in state.nets:
            raise CheckpointError(f"checkpoint has unexpected network {role!r}")
        state.nets[role] = net.copy()
        if data.moments and role in data.moments:
            state.moments[role] = {
                name: (m.copy(), v.copy()) for name, (m, v) in data.moments[role].items()
            }
    return state
