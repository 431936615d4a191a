"""Chronological loop-erasure and rejection-sampled two-sided LERW.

Loop-erasure keeps, for each retained step, the last visit to the vertex
entered next; applied to a transient walk this yields a self-avoiding
path.  The two-sided version glues the loop-erasures of two independent
walks at the origin, accepted only when their ranges are disjoint apart
from the shared start.  Disjointness is checked up to a finite horizon;
the acceptance-rate stability test quantifies the truncation.

The erasure here uses sigma_0 = last visit to the start vertex, so loops
through the starting point are erased as well; anything else can leave
the glued path non-self-avoiding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._coding import order_keys
from .errors import NonSelfAvoidingError, SamplingFailureError, ValidationError
from .walks import LatticePath, _srw_increments, path_from_positions

__all__ = ["ErasureRecord", "loop_erase", "sample_two_sided_lerw"]


def _validate_nearest_neighbour(points: np.ndarray) -> None:
    if points.shape[0] == 0:
        raise ValidationError("cannot loop-erase an empty path")
    if points.shape[0] > 1:
        steps = np.abs(np.diff(points, axis=0)).sum(axis=1)
        if np.any(steps != 1):
            raise ValidationError("input path must take nearest-neighbour steps")


def _last_occurrence_by_row(points: np.ndarray) -> np.ndarray:
    """lastocc[i] = largest j with points[j] == points[i]."""
    keys = order_keys(points)
    _, inverse = np.unique(keys, return_inverse=True)
    last_of_group = np.zeros(inverse.max() + 1, dtype=np.int64)
    np.maximum.at(last_of_group, inverse, np.arange(points.shape[0]))
    return last_of_group[inverse]


@dataclass(frozen=True)
class ErasureRecord:
    """Result of a chronological loop-erasure."""

    input_length: int
    sigma_times: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.sigma_times) <= 0):
            raise ValidationError("erasure times must be strictly increasing")


def loop_erase(xi) -> ErasureRecord:
    """Erase the loops of a finite nearest-neighbour path in time order.

    The retained times are sigma_0 = last visit to xi_0 and then
    sigma_k = last visit to the vertex entered at sigma_{k-1} + 1, with
    "last" taken within the finite input.
    """
    points = np.ascontiguousarray(xi, dtype=np.int64)
    if points.ndim != 2:
        raise ValidationError("expected an (n, d) array of positions")
    _validate_nearest_neighbour(points)
    lastocc = _last_occurrence_by_row(points)
    n = points.shape[0]
    sigma = [int(lastocc[0])]
    while sigma[-1] + 1 < n:
        sigma.append(int(lastocc[sigma[-1] + 1]))
    sigma_arr = np.asarray(sigma, dtype=np.int64)
    output = points[sigma_arr]
    if np.unique(order_keys(output)).shape[0] != output.shape[0]:
        raise NonSelfAvoidingError("erasure produced a repeated vertex")
    return ErasureRecord(input_length=n, sigma_times=sigma_arr, output=output)


def _walk_positions(d: int, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Positions of an n_steps walk from the origin, shape (n_steps+1, d)."""
    draws = rng.integers(0, 2 * d, size=n_steps)
    pos = np.zeros((n_steps + 1, d), dtype=np.int64)
    np.cumsum(_srw_increments(d, draws), axis=0, out=pos[1:])
    return pos


def _ranges_intersect(points_a: np.ndarray, points_b: np.ndarray) -> bool:
    """True when the two point sets share any vertex.

    Checked in growing chunks so that the common case, an early collision
    near the origin, aborts cheaply.
    """
    chunk = 2048
    seen_a = seen_b = 0
    sorted_a = sorted_b = None
    while seen_a < points_a.shape[0] or seen_b < points_b.shape[0]:
        next_a = min(points_a.shape[0], seen_a + chunk)
        next_b = min(points_b.shape[0], seen_b + chunk)
        new_a = order_keys(points_a[seen_a:next_a]) if next_a > seen_a else None
        new_b = order_keys(points_b[seen_b:next_b]) if next_b > seen_b else None
        if new_a is not None and sorted_b is not None:
            hits = np.searchsorted(sorted_b, new_a)
            hits = np.minimum(hits, sorted_b.shape[0] - 1)
            if np.any(sorted_b[hits] == new_a):
                return True
        if new_b is not None and sorted_a is not None:
            hits = np.searchsorted(sorted_a, new_b)
            hits = np.minimum(hits, sorted_a.shape[0] - 1)
            if np.any(sorted_a[hits] == new_b):
                return True
        if new_a is not None and new_b is not None:
            if np.intersect1d(new_a, new_b).shape[0] > 0:
                return True
        if new_a is not None:
            sorted_a = (
                np.sort(new_a)
                if sorted_a is None
                else np.sort(np.concatenate([sorted_a, new_a]))
            )
            seen_a = next_a
        if new_b is not None:
            sorted_b = (
                np.sort(new_b)
                if sorted_b is None
                else np.sort(np.concatenate([sorted_b, new_b]))
            )
            seen_b = next_b
        chunk *= 2
    return False


def sample_two_sided_lerw(
    d: int,
    half_window: int,
    seed: int,
    max_attempts: int = 1000,
    horizon: int | None = None,
) -> LatticePath:
    """Two-sided loop-erased walk, indexed by erased steps in [-w, w].

    Pairs of independent walks of length ``horizon`` are drawn until their
    ranges are disjoint (the second walk's start excluded); both are then
    loop-erased, glued at the origin and truncated to ``half_window``
    erased steps per side.  The attempt count is stored on the returned
    path as ``lerw_attempts``.
    """
    if d < 5:
        raise ValidationError("two-sided loop-erased sampling requires d >= 5")
    if half_window < 1:
        raise ValidationError("half_window must be >= 1")
    if horizon is None:
        horizon = 20 * half_window
    if horizon < half_window:
        raise ValidationError("horizon must be at least half_window")

    for attempt in range(1, max_attempts + 1):
        xi1 = _walk_positions(d, horizon, _rng.substream(seed, "lerw", attempt, 1))
        xi2 = _walk_positions(d, horizon, _rng.substream(seed, "lerw", attempt, 2))
        if _ranges_intersect(xi1, xi2[1:]):
            continue
        s1 = loop_erase(xi1).output
        s2 = loop_erase(xi2).output
        if s1.shape[0] <= half_window or s2.shape[0] <= half_window:
            raise ValidationError(
                f"erased halves too short ({s1.shape[0]}, {s2.shape[0]}) for "
                f"half_window {half_window}; increase horizon (now {horizon})"
            )
        glued = np.concatenate(
            [s1[half_window:0:-1], s2[: half_window + 1]], axis=0
        )
        path = path_from_positions(glued, lo=-half_window, kind="lerw")
        if not path.is_self_avoiding():
            raise NonSelfAvoidingError("glued two-sided erasure repeats a vertex")
        path.lerw_attempts = attempt
        return path
    raise SamplingFailureError(max_attempts)
