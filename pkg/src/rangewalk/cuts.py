"""Cut-time detection and certification for two-sided paths.

A time n is a cut-time when the past range (everything up to n) and the
strict future range are disjoint.  True cut-times reference the infinite
path, so detection over a finite window only certifies candidates against
everything generated; a guard margin beyond the core of interest keeps the
false-positive rate negligible in transient dimensions.  Growing the guard
can only remove candidates, never add them, and tests exercise exactly
that monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from ._coding import order_keys
from .errors import ValidationError, WindowExhaustedError
from .walks import LatticePath, sample_two_sided_srw

__all__ = ["CutStructure", "find_cut_times", "estimate_tau", "cut_flags_in_window"]


def cut_flags_in_window(path: LatticePath) -> np.ndarray:
    """Boolean flags over indices lo..hi-1: past/future disjoint in-window.

    Index n (relative offset n - lo) is flagged when no lattice point is
    visited both at some time <= n and some time > n.  Each revisited point
    with first visit f and last visit l blocks every n in [f, l); the flags
    are the complement of the union of those intervals.
    """
    window = path.positions()
    n_rows = window.shape[0]
    keys = order_keys(window)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    new_group = np.empty(n_rows, dtype=bool)
    new_group[0] = True
    new_group[1:] = sorted_keys[1:] != sorted_keys[:-1]
    starts = np.nonzero(new_group)[0]
    ends = np.append(starts[1:], n_rows) - 1
    first = order[starts]
    last = order[ends]
    blocked = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(blocked, first, 1)
    np.add.at(blocked, last, -1)
    coverage = np.cumsum(blocked[:-1])
    return coverage == 0


@dataclass
class CutStructure:
    """Certified cut-times T_n and cut-points C_n with T_0 <= 0 < T_1.

    ``times[i]`` holds T_{n_lo + i}; the map n -> C_n is injective on the
    certified index range.
    """

    path: LatticePath
    times: np.ndarray
    n_lo: int
    n_hi: int
    core: tuple[int, int]
    guard: int
    points: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.times.shape[0] != self.n_hi - self.n_lo + 1:
            raise ValidationError("times length does not match index range")
        self.points = self.path.positions()[self.times - self.path.lo]
        uniq = np.unique(order_keys(self.points))
        if uniq.shape[0] != self.points.shape[0]:
            raise ValidationError("cut-point map is not injective over the window")

    def __len__(self) -> int:
        return self.times.shape[0]

    def _check(self, n: int) -> int:
        if not self.n_lo <= n <= self.n_hi:
            side = "forward" if n > self.n_hi else "backward"
            raise WindowExhaustedError(
                side,
                abs(n),
                f"cut index {n} outside certified range [{self.n_lo}, {self.n_hi}]",
            )
        return n - self.n_lo

    def T(self, n: int) -> int:
        return int(self.times[self._check(n)])

    def C(self, n: int) -> np.ndarray:
        return self.points[self._check(n)].copy()

    def first_coords(self) -> np.ndarray:
        """C_n^(1) for n over the certified range, in index order."""
        return self.points[:, 0].copy()

    def index_of_time(self, t: int) -> int:
        i = int(np.searchsorted(self.times, t))
        if i >= len(self.times) or self.times[i] != t:
            raise ValidationError(f"{t} is not a certified cut-time")
        return self.n_lo + i


def find_cut_times(
    path: LatticePath,
    core: int | tuple[int, int],
    guard: int | None = None,
) -> CutStructure:
    """Certified cut-times for all n in the core window.

    The core is either ``(core_lo, core_hi)`` or a half-width w meaning
    ``(-w, w)``.  The default guard is five times the larger core bound;
    the generated window must cover core +- guard, and disjointness is
    tested over the entire generated window.
    """
    if isinstance(core, tuple):
        core_lo, core_hi = core
    else:
        core_lo, core_hi = -int(core), int(core)
    if not core_lo <= 0 <= core_hi:
        raise ValidationError("core window must contain 0")
    if guard is None:
        guard = 5 * max(abs(core_lo), abs(core_hi), 1)
    if path.lo > core_lo - guard or path.hi < core_hi + guard:
        need_back = max(0, (core_lo - guard) - path.lo)
        need_fwd = max(0, (core_hi + guard) - path.hi)
        side = "backward" if need_back >= need_fwd else "forward"
        raise WindowExhaustedError(side, max(need_back, need_fwd))

    flags = cut_flags_in_window(path)
    offsets = np.nonzero(flags)[0]
    candidates = offsets + path.lo
    in_core = candidates[(candidates >= core_lo) & (candidates <= core_hi)]
    below = in_core[in_core <= 0]
    above = in_core[in_core > 0]
    if below.size == 0 or above.size == 0:
        missing = "backward" if below.size == 0 else "forward"
        raise WindowExhaustedError(
            missing,
            max(abs(core_lo), core_hi),
            "no certified cut-time with T_0 <= 0 < T_1 in the core; grow it",
        )
    times = np.sort(in_core)
    idx0 = int(np.searchsorted(times, 0, side="right")) - 1
    return CutStructure(
        path=path,
        times=times,
        n_lo=-idx0,
        n_hi=times.shape[0] - 1 - idx0,
        core=(core_lo, core_hi),
        guard=guard,
    )


def tau_ratio(cuts: CutStructure, side: str = "forward", min_count: int = 50) -> float:
    """Ergodic-average spacing estimate T_N / N from one side of the chain."""
    if side == "forward":
        count = cuts.n_hi
        if count < min_count:
            raise ValidationError(
                f"only {count} forward cut-times certified, need >= {min_count}"
            )
        return cuts.T(count) / count
    count = -cuts.n_lo
    if count < min_count:
        raise ValidationError(
            f"only {count} backward cut-times certified, need >= {min_count}"
        )
    return cuts.T(-count) / (-count)


def estimate_tau(
    n_environments: int,
    half_window: int,
    seed: int,
    d: int = 5,
    side: str = "forward",
    guard: int | None = None,
) -> tuple[float, float]:
    """Mean cut-time spacing with standard error across environments.

    Each environment contributes the ergodic ratio T_N / N over its core
    window.  The estimate is always >= 1 (spacings are at least one step).
    """
    if n_environments < 1:
        raise ValidationError("need at least one environment")
    ratios = []
    for i in range(n_environments):
        env_seed = int(_rng.substream(seed, "tau", i).integers(0, 2**63 - 1))
        g = guard if guard is not None else 5 * half_window
        path = sample_two_sided_srw(d, half_window + g, env_seed)
        cuts = find_cut_times(path, half_window, guard=g)
        ratios.append(tau_ratio(cuts, side=side))
    arr = np.asarray(ratios, dtype=np.float64)
    se = arr.std(ddof=1) / np.sqrt(arr.shape[0]) if arr.shape[0] > 1 else 0.0
    return float(arr.mean()), float(se)
