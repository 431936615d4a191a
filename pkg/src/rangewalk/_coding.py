"""Canonical byte encodings for lattice points.

Vertices are keyed by their coordinates, not by a lossy hash: the byte
encoding of the integer tuple is collision-free by construction.  Two
encodings are provided:

* :func:`row_bytes` gives dictionary keys (fast, little-endian layout);
* :func:`order_keys` gives memcmp-sortable keys whose byte order equals
  numeric lexicographic order of the coordinates.  All vertex orderings in
  the package derive from this, so vertex numbering is intrinsic to the
  point set and stable under window extension.
"""

from __future__ import annotations

import numpy as np

__all__ = ["row_bytes", "order_keys", "as_point_array"]

_SIGN_FLIP = np.uint64(1) << np.uint64(63)


def as_point_array(points) -> np.ndarray:
    """Coerce to a C-contiguous (n, d) int64 array."""
    arr = np.ascontiguousarray(points, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("expected a 2-d array of lattice points")
    return arr


def row_bytes(points: np.ndarray) -> list[bytes]:
    """Per-row byte keys for dict lookups (exact, no collisions)."""
    arr = as_point_array(points)
    width = arr.shape[1] * 8
    raw = arr.tobytes()
    return [raw[i * width : (i + 1) * width] for i in range(arr.shape[0])]


def order_keys(points: np.ndarray) -> np.ndarray:
    """Void keys whose memcmp order is numeric lexicographic point order."""
    arr = as_point_array(points)
    shifted = arr.view(np.uint64) ^ _SIGN_FLIP
    big_endian = np.ascontiguousarray(shifted.byteswap())
    return big_endian.view(np.dtype((np.void, arr.shape[1] * 8))).ravel()
