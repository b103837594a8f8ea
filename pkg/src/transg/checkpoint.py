"""Binary model checkpoints with a plain-text sidecar manifest.

Layout (all little-endian): 8-byte magic, u32 format version, u64 entity
count, u64 relation count, u64 dim, f64 variance_sum, the entity matrix
row-major as f64, then per relation a u64 component count followed by each
component's f64 weight and f64[dim] vector. The sidecar ``<path>.manifest``
holds ``key=value`` lines (vocab references, training config).

Round trips are bit-exact: load(save(m)) == m and re-saving reproduces the
same bytes.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import TransGModel

MAGIC = b"TRANSGCK"
VERSION = 1
_F8 = np.dtype("<f8")


class CheckpointError(ValueError):
    """Raised for unreadable, truncated, or inconsistent checkpoint files."""


def save_checkpoint(
    model: TransGModel, path: str | Path, manifest: dict[str, object] | None = None
) -> None:
    path = Path(path)
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<I", VERSION)
    buf += struct.pack("<QQQ", model.n_entities, model.n_relations, model.dim)
    buf += struct.pack("<d", model.variance_sum)
    buf += np.ascontiguousarray(model.entity, dtype=_F8).tobytes()
    for r in range(model.n_relations):
        buf += struct.pack("<Q", model.n_components(r))
        for m in range(model.n_components(r)):
            buf += struct.pack("<d", float(model.rel_weights[r][m]))
            buf += np.ascontiguousarray(model.rel_vectors[r][m], dtype=_F8).tobytes()
    path.write_bytes(buf)
    if manifest is not None:
        write_manifest(manifest_path(path), manifest)


def load_checkpoint(path: str | Path) -> TransGModel:
    path = Path(path)
    data = path.read_bytes()
    off = 0

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise CheckpointError(f"{path}: truncated at byte {off} (wanted {n} more)")
        chunk = data[off : off + n]
        off += n
        return chunk

    if take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {VERSION}")
    n_entities, n_relations, dim = struct.unpack("<QQQ", take(24))
    (variance_sum,) = struct.unpack("<d", take(8))
    entity = (
        np.frombuffer(take(n_entities * dim * 8), dtype=_F8)
        .reshape(n_entities, dim)
        .copy()
    )
    weights, vectors = [], []
    for _ in range(n_relations):
        (m_r,) = struct.unpack("<Q", take(8))
        if m_r < 1:
            raise CheckpointError(f"{path}: relation with zero components")
        block = np.frombuffer(take(m_r * (1 + dim) * 8), dtype=_F8).reshape(m_r, 1 + dim)
        weights.append(block[:, 0].copy())
        vectors.append(block[:, 1:].copy())
    if off != len(data):
        raise CheckpointError(f"{path}: {len(data) - off} trailing bytes")

    model = TransGModel(entity, weights, vectors, variance_sum)
    _check_manifest(path, model)
    return model


def manifest_path(path: str | Path) -> Path:
    return Path(str(path) + ".manifest")


def write_manifest(path: str | Path, entries: dict[str, object]) -> None:
    lines = [f"{k}={v}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> dict[str, str]:
    """Parse a ``key=value`` manifest; missing file -> empty dict."""
    path = Path(path)
    if not path.is_file():
        return {}
    entries: dict[str, str] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"{path}: bad manifest line {raw!r}")
        entries[key.strip()] = value.strip()
    return entries


def _check_manifest(path: Path, model: TransGModel) -> None:
    """Cross-check header dims against the sidecar manifest, if present."""
    entries = read_manifest(manifest_path(path))
    for key, actual in (
        ("dim", model.dim),
        ("n_entities", model.n_entities),
        ("n_relations", model.n_relations),
    ):
        if key in entries and int(entries[key]) != actual:
            raise CheckpointError(
                f"{path}: manifest {key}={entries[key]} but file has {actual}"
            )
