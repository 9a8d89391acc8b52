"""Content-addressed on-disk cache for computed matrices.

Entries are keyed by a hash of input content plus resolved configuration and
stored as a self-describing header followed by row-major decimal CSV.
Corrupt entries are discarded with a warning and recomputed.
"""

import hashlib
import os
import warnings
from pathlib import Path

import numpy as np

ENV_VAR = "META_OT_CACHE"
_MAGIC = "metaot-cache 1"


def content_hash(*parts) -> str:
    """SHA-256 over arrays, strings, and numbers in order."""
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            arr = np.ascontiguousarray(part)
            h.update(f"array{arr.shape}{arr.dtype}".encode())
            h.update(arr.tobytes())
        else:
            h.update(f"{type(part).__name__}:{part}".encode())
    return h.hexdigest()


def meta_pair_key(a, b, inner: str, epsilon: float) -> str:
    parts = ["meta-pair", inner, float(epsilon)]
    for meta in (a, b):
        parts.append(meta.outer_weights)
        for m in meta.inner:
            parts += [m.points, m.weights]
    return content_hash(*parts)


class DiskCache:
    """Matrix store under a directory, one file per key."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.cache"

    def get(self, key: str):
        path = self._path(key)
        if not path.exists():
            return None
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
            if lines[0] != _MAGIC:
                raise ValueError("bad magic")
            rows, cols = (int(t) for t in lines[1].split())
            data = [[float(t) for t in line.split(",")] for line in lines[2:2 + rows]]
            matrix = np.array(data, dtype=float)
            if matrix.shape != (rows, cols):
                raise ValueError("shape mismatch")
            return matrix
        except (ValueError, IndexError):
            warnings.warn(f"discarding corrupt cache entry {path}")
            path.unlink(missing_ok=True)
            return None

    def put(self, key: str, matrix: np.ndarray) -> None:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        lines = [_MAGIC, f"{matrix.shape[0]} {matrix.shape[1]}"]
        lines += [",".join(format(x, ".17g") for x in row) for row in matrix]
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(self._path(key))


def resolve_cache(cache_dir=None):
    """DiskCache from an explicit directory or the META_OT_CACHE env var."""
    directory = cache_dir or os.environ.get(ENV_VAR)
    return DiskCache(directory) if directory else None
