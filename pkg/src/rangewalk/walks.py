"""Two-sided lattice paths with deterministic lazy window growth.

An infinite two-sided walk is represented by a finite generated window
``[lo, hi]`` plus one stored generator per side, so any consumer that runs
off the window can call :meth:`LatticePath.extend` and get bit-exact
continuation of the original stream.  Positions are stored per side in
append-only arrays; a point -> visit-index multimap is maintained for O(1)
self-intersection queries.
"""

from __future__ import annotations

import numpy as np

from . import rng as _rng
from ._coding import row_bytes
from .errors import ReproducibilityError, ValidationError, WindowExhaustedError

__all__ = [
    "LatticePath",
    "sample_two_sided_srw",
    "straight_path",
    "path_from_positions",
]

FORWARD = "forward"
BACKWARD = "backward"


def _srw_increments(d: int, steps: np.ndarray) -> np.ndarray:
    """Map raw draws in [0, 2d) to unit-vector increments, one per row."""
    inc = np.zeros((steps.shape[0], d), dtype=np.int64)
    axis = steps >> 1
    sign = np.where(steps & 1, -1, 1)
    inc[np.arange(steps.shape[0]), axis] = sign
    return inc


class _SideStore:
    """Append-only position store for one side of the path."""

    def __init__(self, d: int):
        self._data = np.zeros((16, d), dtype=np.int64)
        self.count = 1  # row 0 is the origin

    def rows(self) -> np.ndarray:
        return self._data[: self.count]

    def append(self, block: np.ndarray) -> None:
        need = self.count + block.shape[0]
        if need > self._data.shape[0]:
            cap = max(need, 2 * self._data.shape[0])
            grown = np.zeros((cap, self._data.shape[1]), dtype=np.int64)
            grown[: self.count] = self._data[: self.count]
            self._data = grown
        self._data[self.count : need] = block
        self.count = need


class LatticePath:
    """Integer-indexed path in Z^d over a generated window ``[lo, hi]``.

    ``position(0)`` is always the origin.  Already generated positions are
    immutable; extension only appends.  ``kind`` records provenance
    ("srw", "lerw", "manual"), which some estimators use as a guard.
    """

    def __init__(self, d: int, kind: str = "manual", step_bound: int = 1):
        if d < 1:
            raise ValidationError("dimension must be >= 1")
        self.d = int(d)
        self.kind = kind
        self.step_bound = int(step_bound)
        self._fwd = _SideStore(self.d)
        self._bwd = _SideStore(self.d)
        self._streams: dict[str, np.random.Generator | None] = {
            FORWARD: None,
            BACKWARD: None,
        }
        self._visits: dict[bytes, list[int]] | None = None

    # ------------------------------------------------------------------
    # window and accessors
    # ------------------------------------------------------------------
    @property
    def lo(self) -> int:
        return -(self._bwd.count - 1)

    @property
    def hi(self) -> int:
        return self._fwd.count - 1

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def position(self, n: int) -> np.ndarray:
        if not self.lo <= n <= self.hi:
            raise WindowExhaustedError(
                FORWARD if n > self.hi else BACKWARD,
                n - self.hi if n > self.hi else self.lo - n,
                f"index {n} outside generated window [{self.lo}, {self.hi}]",
            )
        row = self._fwd.rows()[n] if n >= 0 else self._bwd.rows()[-n]
        return row.copy()

    def positions(self, lo: int | None = None, hi: int | None = None) -> np.ndarray:
        """Positions for indices lo..hi as an (hi-lo+1, d) array."""
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        if lo < self.lo or hi > self.hi or lo > hi:
            raise WindowExhaustedError(
                BACKWARD if lo < self.lo else FORWARD,
                max(self.lo - lo, hi - self.hi),
                f"requested [{lo}, {hi}] outside window [{self.lo}, {self.hi}]",
            )
        parts = []
        if lo < 0:
            stop = min(hi, -1)
            # bwd row k holds position(-k); row 0 (the origin) is never taken
            # from this store, so the slice end of -stop-1 >= 0 is safe.
            parts.append(self._bwd.rows()[-lo : -stop - 1 : -1])
        if hi >= 0:
            parts.append(self._fwd.rows()[max(lo, 0) : hi + 1])
        return np.concatenate(parts, axis=0)

    def first_coords(self, lo: int | None = None, hi: int | None = None) -> np.ndarray:
        return self.positions(lo, hi)[:, 0].copy()

    # ------------------------------------------------------------------
    # increments (first coordinate)
    # ------------------------------------------------------------------
    def increment(self, n: int) -> int:
        """First-coordinate increment position(n) - position(n-1)."""
        if not self.lo < n <= self.hi:
            raise WindowExhaustedError(
                FORWARD if n > self.hi else BACKWARD,
                max(1, abs(n)),
                f"increment index {n} outside ({self.lo}, {self.hi}]",
            )
        return int(self.position(n)[0] - self.position(n - 1)[0])

    def increment_pos(self, n: int) -> int:
        return max(0, self.increment(n))

    def increment_neg(self, n: int) -> int:
        return -min(0, self.increment(n))

    def increments_first(self, lo: int, hi: int) -> np.ndarray:
        """Vector of first-coordinate increments for indices lo..hi."""
        coords = self.first_coords(lo - 1, hi)
        return np.diff(coords)

    # ------------------------------------------------------------------
    # extension
    # ------------------------------------------------------------------
    def extend(self, side: str, steps: int, rng: np.random.Generator | None = None):
        """Grow the window by ``steps`` on one side.

        The stored per-side stream is consumed, so one call generating 2k
        steps equals two calls of k steps bit-exactly.  Passing an ``rng``
        that is not that stored stream is a reproducibility error.
        """
        if side not in (FORWARD, BACKWARD):
            raise ValidationError(f"side must be forward or backward, got {side!r}")
        if steps < 0:
            raise ValidationError("steps must be >= 0")
        if steps == 0:
            return self
        stream = self._streams[side]
        if stream is None:
            raise ReproducibilityError(
                f"path of kind {self.kind!r} has no stored stream for {side} side"
            )
        if rng is not None and rng is not stream:
            raise ReproducibilityError(
                "supplied rng is not the continuation of the stored side stream"
            )
        draws = stream.integers(0, 2 * self.d, size=steps)
        store = self._fwd if side == FORWARD else self._bwd
        base = store.rows()[store.count - 1]
        block = base + np.cumsum(_srw_increments(self.d, draws), axis=0)
        first_new_index = self.hi + 1 if side == FORWARD else self.lo - 1
        store.append(block)
        if self._visits is not None:
            step_dir = 1 if side == FORWARD else -1
            for offset, key in enumerate(row_bytes(block)):
                self._visits.setdefault(key, []).append(
                    first_new_index + step_dir * offset
                )
        return self

    # ------------------------------------------------------------------
    # self-intersection queries
    # ------------------------------------------------------------------
    @property
    def visits(self) -> dict[bytes, list[int]]:
        """Point -> sorted visit indices over the generated window."""
        if self._visits is None:
            table: dict[bytes, list[int]] = {}
            window = self.positions()
            for offset, key in enumerate(row_bytes(window)):
                table.setdefault(key, []).append(self.lo + offset)
            self._visits = table
        return self._visits

    def visit_indices(self, point) -> list[int]:
        key = np.ascontiguousarray(point, dtype=np.int64).tobytes()
        return self.visits.get(key, [])

    def is_self_avoiding(self) -> bool:
        return all(len(v) == 1 for v in self.visits.values())


def sample_two_sided_srw(d: int, half_window: int, seed: int) -> LatticePath:
    """Two-sided simple random walk with window ``[-half_window, half_window]``.

    Forward and backward halves come from independent substreams of the
    master seed; each step is uniform over the 2d unit vectors.
    """
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    if half_window < 0:
        raise ValidationError("half_window must be >= 0")
    path = LatticePath(d, kind="srw")
    path._streams[FORWARD] = _rng.substream(seed, "srw", "forward")
    path._streams[BACKWARD] = _rng.substream(seed, "srw", "backward")
    path.extend(FORWARD, half_window)
    path.extend(BACKWARD, half_window)
    return path


def straight_path(d: int, half_window: int) -> LatticePath:
    """Deterministic path S_n = n * e1, a degenerate fixture."""
    path = LatticePath(d, kind="manual")
    block = np.zeros((half_window, d), dtype=np.int64)
    block[:, 0] = np.arange(1, half_window + 1)
    path._fwd.append(block)
    block = np.zeros((half_window, d), dtype=np.int64)
    block[:, 0] = -np.arange(1, half_window + 1)
    path._bwd.append(block)
    return path


def path_from_positions(positions, lo: int, kind: str = "manual") -> LatticePath:
    """Wrap explicit positions (index lo..lo+len-1) as a LatticePath."""
    arr = np.ascontiguousarray(positions, dtype=np.int64)
    if arr.ndim != 2:
        raise ValidationError("positions must be (n, d)")
    hi = lo + arr.shape[0] - 1
    if not lo <= 0 <= hi:
        raise ValidationError("the window must contain index 0")
    if np.any(arr[-lo] != 0):
        raise ValidationError("position at index 0 must be the origin")
    steps = np.abs(np.diff(arr, axis=0)).sum(axis=1)
    path = LatticePath(arr.shape[1], kind=kind, step_bound=int(steps.max(initial=1)))
    if hi > 0:
        path._fwd.append(arr[-lo + 1 :])
    if lo < 0:
        path._bwd.append(arr[-lo - 1 :: -1])
    return path
