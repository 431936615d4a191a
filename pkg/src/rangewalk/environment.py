"""One-dimensional random environments induced by a biased walk on a path.

Two constructions produce the same kind of object:

* a self-avoiding path gives nearest-neighbour jump probabilities directly
  from the two incident edge conductances (no holding);
* a general path gives, through its cut-point chain, jump probabilities
  1 / (mu(C_n) * R_eff(C_n, C_{n+1-or-1})) plus a holding probability.

Log-space discipline: omega ratios and the potential are always computed
from log conductances / log resistances, never by exponentiating first,
because conductances span beta**(first coordinate range).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from ._kernels import RWRE_BOUNDARY, rwre_kernel, segment_stats
from .cuts import CutStructure, find_cut_times
from .errors import (
    NonSelfAvoidingError,
    NumericalError,
    ValidationError,
    WindowExhaustedError,
)
from .graphs import RangeGraph, normalized_weights
from .walks import LatticePath, sample_two_sided_srw

__all__ = [
    "Environment1D",
    "Potential",
    "environment_from_selfavoiding",
    "environment_from_path",
    "environment_from_cut_chain",
    "jump_probability_oracle",
    "potential",
    "verify_potential_identity",
    "simulate_rwre",
    "estimate_sigma2",
    "segment_brackets",
    "verify_esti_bound",
    "verify_jump_probability_floor",
]

SELF_AVOIDING = "self_avoiding"
CUT_CHAIN = "cut_chain"


@dataclass
class Environment1D:
    """Jump probabilities (omega^-, omega^0, omega^+) on an index window."""

    flavor: str
    m_lo: int
    m_hi: int
    omega_minus: np.ndarray
    omega_zero: np.ndarray
    omega_plus: np.ndarray
    log_omega_minus: np.ndarray
    log_omega_plus: np.ndarray
    log_rho: np.ndarray
    omega_zero_raw_min: float = 0.0

    def __post_init__(self):
        n = self.m_hi - self.m_lo + 1
        for arr in (
            self.omega_minus,
            self.omega_zero,
            self.omega_plus,
            self.log_omega_minus,
            self.log_omega_plus,
            self.log_rho,
        ):
            if arr.shape[0] != n:
                raise ValidationError("environment arrays disagree with index range")
        if not (self.m_lo <= 0 <= self.m_hi):
            raise ValidationError("environment window must contain index 0")
        row = self.omega_minus + self.omega_zero + self.omega_plus
        if np.max(np.abs(row - 1.0)) > 1e-12:
            raise NumericalError("environment rows do not sum to 1")
        if np.any(self.omega_minus <= 0) or np.any(self.omega_plus <= 0):
            raise NumericalError("one-sided jump probability vanished")
        if self.flavor == SELF_AVOIDING and np.any(self.omega_zero != 0):
            raise ValidationError("self-avoiding environments carry no holding mass")

    def offset(self, n: int) -> int:
        if not self.m_lo <= n <= self.m_hi:
            side = "forward" if n > self.m_hi else "backward"
            raise WindowExhaustedError(side, abs(n), f"environment index {n} missing")
        return n - self.m_lo

    def omega(self, n: int) -> tuple[float, float, float]:
        i = self.offset(n)
        return (
            float(self.omega_minus[i]),
            float(self.omega_zero[i]),
            float(self.omega_plus[i]),
        )

    def rho(self, n: int) -> float:
        return float(np.exp(self.log_rho[self.offset(n)]))

    def __len__(self) -> int:
        return self.m_hi - self.m_lo + 1


@dataclass
class Potential:
    """Cumulative log jump-ratio record R with R_0 = 0."""

    m_lo: int
    m_hi: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != self.m_hi - self.m_lo + 1:
            raise ValidationError("potential length disagrees with index range")
        if self.values[-self.m_lo] != 0.0:
            raise ValidationError("potential must vanish at index 0")

    def R(self, n: int) -> float:
        if not self.m_lo <= n <= self.m_hi:
            side = "forward" if n > self.m_hi else "backward"
            raise WindowExhaustedError(side, abs(n), f"potential index {n} missing")
        return float(self.values[n - self.m_lo])

    def __len__(self) -> int:
        return self.values.shape[0]


def environment_from_selfavoiding(path: LatticePath, beta: float) -> Environment1D:
    """Nearest-neighbour environment of the biased walk on a simple path.

    omega_n^+- come from the two edge conductances at S_n, and
    log rho_n = log(beta) * (max(S1_{n-1}, S1_n) - max(S1_n, S1_{n+1}))
    is formed from the integer exponent difference directly, which keeps
    the telescoped potential exact to rounding.
    """
    if beta < 1:
        raise ValidationError("beta must be >= 1")
    if not path.is_self_avoiding():
        raise NonSelfAvoidingError(
            "path revisits a vertex; use the cut-chain construction instead"
        )
    lb = float(np.log(beta))
    first = path.first_coords().astype(np.int64)
    left_exp = np.maximum(first[:-2], first[1:-1])
    right_exp = np.maximum(first[1:-1], first[2:])
    rescale = np.maximum(left_exp, right_exp).astype(np.float64)
    w_minus = np.exp(lb * (left_exp - rescale))
    w_plus = np.exp(lb * (right_exp - rescale))
    total = w_minus + w_plus
    om = w_minus / total
    op = w_plus / total
    log_total = lb * rescale + np.log(total)
    return Environment1D(
        flavor=SELF_AVOIDING,
        m_lo=path.lo + 1,
        m_hi=path.hi - 1,
        omega_minus=om,
        omega_zero=np.zeros_like(om),
        omega_plus=op,
        log_omega_minus=lb * left_exp - log_total,
        log_omega_plus=lb * right_exp - log_total,
        log_rho=lb * (left_exp - right_exp).astype(np.float64),
        omega_zero_raw_min=0.0,
    )


@dataclass
class SegmentTable:
    """Per-segment log resistances and endpoint conductance sums.

    Segment m joins cut-points C_m and C_{m+1}; arrays are indexed by
    m - seg_lo.  left_at / right_at are rescaled by the first coordinate
    of their own endpoint, so mu(C_n) = beta**C_n1 * (right_at[n-1] +
    left_at[n]).
    """

    seg_lo: int
    seg_hi: int
    log_r: np.ndarray
    left_at: np.ndarray
    right_at: np.ndarray

    def log_resistance(self, m: int) -> float:
        if not self.seg_lo <= m <= self.seg_hi:
            raise ValidationError(f"segment {m} outside [{self.seg_lo}, {self.seg_hi}]")
        return float(self.log_r[m - self.seg_lo])


def compute_segment_table(
    path: LatticePath, cuts: CutStructure, beta: float, seg_lo: int, seg_hi: int
) -> SegmentTable:
    """Run the segment engine over cut segments seg_lo..seg_hi."""
    if seg_lo < cuts.n_lo or seg_hi + 1 > cuts.n_hi:
        raise WindowExhaustedError(
            "forward" if seg_hi + 1 > cuts.n_hi else "backward",
            max(abs(seg_lo), abs(seg_hi)),
            "segment range outside certified cut range",
        )
    pos = path.positions()
    rows = cuts.times[(seg_lo - cuts.n_lo) : (seg_hi + 1 - cuts.n_lo) + 1] - path.lo
    log_r, left_at, right_at = segment_stats(pos, rows, float(np.log(beta)))
    return SegmentTable(
        seg_lo=seg_lo, seg_hi=seg_hi, log_r=log_r, left_at=left_at, right_at=right_at
    )


def environment_from_path(
    path: LatticePath,
    cuts: CutStructure,
    beta: float,
    n_lo: int | None = None,
    n_hi: int | None = None,
    segments: SegmentTable | None = None,
) -> Environment1D:
    """Cut-chain environment from segment resistances (streaming variant).

    Builds omega_n^+- = 1 / (mu(C_n) R_eff(C_n, C_{n+-1})) for cut indices
    n_lo..n_hi without materializing the global range graph; segment
    interiors touch nothing outside their segment, so all quantities are
    segment-local.
    """
    if beta < 1:
        raise ValidationError("beta must be >= 1")
    n_lo = cuts.n_lo + 1 if n_lo is None else n_lo
    n_hi = cuts.n_hi - 1 if n_hi is None else n_hi
    if not n_lo <= 0 <= n_hi:
        raise ValidationError("environment range must contain cut index 0")
    if segments is None:
        segments = compute_segment_table(path, cuts, beta, n_lo - 1, n_hi)
    if segments.seg_lo > n_lo - 1 or segments.seg_hi < n_hi:
        raise ValidationError("segment table does not cover the requested range")
    lb = float(np.log(beta))
    base = n_lo - 1 - segments.seg_lo
    count = n_hi - n_lo + 1
    left_seg = slice(base, base + count)  # segment n-1 for each n
    right_seg = slice(base + 1, base + 1 + count)  # segment n
    c1 = cuts.points[(n_lo - cuts.n_lo) : (n_hi - cuts.n_lo) + 1, 0].astype(np.float64)
    log_mu = lb * c1 + np.log(
        segments.right_at[left_seg] + segments.left_at[right_seg]
    )
    log_om = -(log_mu + segments.log_r[left_seg])
    log_op = -(log_mu + segments.log_r[right_seg])
    om = np.exp(log_om)
    op = np.exp(log_op)
    oz = 1.0 - om - op
    raw_min = float(oz.min())
    if raw_min < -1e-9:
        raise NumericalError(
            f"holding probability {raw_min:.3e} < -1e-9; resistance solve is wrong"
        )
    oz = np.maximum(oz, 0.0)
    return Environment1D(
        flavor=CUT_CHAIN,
        m_lo=n_lo,
        m_hi=n_hi,
        omega_minus=om,
        omega_zero=oz,
        omega_plus=op,
        log_omega_minus=log_om,
        log_omega_plus=log_op,
        log_rho=segments.log_r[right_seg] - segments.log_r[left_seg],
        omega_zero_raw_min=raw_min,
    )


def environment_from_cut_chain(graph: RangeGraph, cuts: CutStructure) -> Environment1D:
    """Cut-chain environment for a built range graph."""
    if cuts.path is not graph.path:
        raise ValidationError("cut structure and graph must share one path")
    return environment_from_path(graph.path, cuts, graph.beta)


def jump_probability_oracle(
    graph: RangeGraph, cuts: CutStructure, n: int
) -> tuple[float, float, float]:
    """One-step law of the cut-chain at n by absorption probabilities.

    Independent of the resistance formula: starts the walk at C_n, takes
    one explicit step, then solves for the probability of reaching
    C_{n-1}, C_n, C_{n+1} first among the three, on the two adjacent
    segments with those cut-points absorbing.
    """
    path = cuts.path
    support = path.positions(cuts.T(n - 1), cuts.T(n + 1))
    targets = [cuts.C(n - 1), cuts.C(n), cuts.C(n + 1)]
    target_ids = [graph.vertex_id(t) for t in targets]
    ids = np.unique(
        np.asarray([graph.vertex_id(p) for p in support], dtype=np.int64)
    )
    local = {int(g): i for i, g in enumerate(ids)}
    absorbing = np.zeros(ids.shape[0], dtype=bool)
    for t in target_ids:
        absorbing[local[t]] = True

    interior = np.nonzero(~absorbing)[0]
    pos_of = -np.ones(ids.shape[0], dtype=np.int64)
    pos_of[interior] = np.arange(interior.shape[0])
    k = interior.shape[0]
    mat = np.eye(k)
    rhs = np.zeros((k, 3))
    for li in interior:
        gi = int(ids[li])
        sl = slice(graph.indptr[gi], graph.indptr[gi + 1])
        probs, _, _ = normalized_weights(graph.nbr_log_c[sl])
        row = pos_of[li]
        for gj, p in zip(graph.nbr[sl], probs):
            lj = local.get(int(gj))
            if lj is None:
                raise ValidationError(
                    "segment interior vertex has a neighbour outside the support"
                )
            if absorbing[lj]:
                rhs[row, target_ids.index(int(gj))] += p
            else:
                mat[row, pos_of[lj]] -= p
    if k:
        habs = np.linalg.solve(mat, rhs)

    out = np.zeros(3)
    sl = slice(graph.indptr[target_ids[1]], graph.indptr[target_ids[1] + 1])
    probs, _, _ = normalized_weights(graph.nbr_log_c[sl])
    for gj, p in zip(graph.nbr[sl], probs):
        lj = local.get(int(gj))
        if lj is None:
            raise ValidationError("cut-point neighbour escaped the two segments")
        if absorbing[lj]:
            out[target_ids.index(int(gj))] += p
        else:
            out += p * habs[pos_of[lj]]
    return float(out[0]), float(out[1]), float(out[2])


def potential(env: Environment1D) -> Potential:
    """Cumulative potential of the environment (extended precision cumsum)."""
    lr = env.log_rho.astype(np.longdouble)
    off = -env.m_lo
    vals = np.zeros(len(env), dtype=np.longdouble)
    if env.m_hi >= 1:
        vals[off + 1 :] = np.cumsum(lr[off + 1 :])
    if env.m_lo <= -1:
        vals[:off] = -np.cumsum(lr[off:0:-1])[::-1]
    return Potential(m_lo=env.m_lo, m_hi=env.m_hi, values=vals.astype(np.float64))


def verify_potential_identity(path: LatticePath, beta: float) -> dict:
    """Max deviation of R_n from -log(beta) (S1_n + inc+_{n+1} - inc+_1).

    Exact for the self-avoiding construction up to float rounding; the
    returned max_abs_error should sit at the 1e-12 scale and anything
    above 1e-9 indicates a broken environment or potential.
    """
    env = environment_from_selfavoiding(path, beta)
    pot = potential(env)
    lb = float(np.log(beta))
    first = path.first_coords().astype(np.int64)
    inc = np.diff(first)  # inc[i] = Delta_{lo+1+i}
    inc_pos = np.maximum(inc, 0)

    def delta_pos(n: int) -> int:
        return int(inc_pos[n - (path.lo + 1)])

    n_arr = np.arange(env.m_lo, env.m_hi + 1)
    s1 = first[n_arr - path.lo].astype(np.float64)
    dplus_next = inc_pos[(n_arr + 1) - (path.lo + 1)].astype(np.float64)
    reference = -lb * (s1 + dplus_next - float(delta_pos(1)))
    err = np.abs(pot.values - reference)
    worst = int(np.argmax(err))
    return {
        "max_abs_error": float(err[worst]),
        "argmax_index": int(n_arr[worst]),
        "n_checked": int(n_arr.shape[0]),
    }


def simulate_rwre(
    env: Environment1D, start: int, n_steps: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample the chain on Z driven by the environment; returns positions.

    One uniform per step.  Running into the window boundary raises a
    window-exhausted error naming the side.
    """
    if n_steps < 0:
        raise ValidationError("n_steps must be >= 0")
    start_off = env.offset(start)
    cum_minus = env.omega_minus.copy()
    cum_hold = env.omega_minus + env.omega_zero
    traj = np.empty(n_steps, dtype=np.int64)
    done, pos, status = rwre_kernel(
        cum_minus, cum_hold, start_off, rng.random(n_steps), traj
    )
    if status == RWRE_BOUNDARY and done < n_steps:
        side = "forward" if pos == len(env) - 1 else "backward"
        raise WindowExhaustedError(
            side, len(env), f"chain reached the window boundary after {done} steps"
        )
    return traj + env.m_lo


def segment_brackets(
    path: LatticePath, cuts: CutStructure, beta: float, seg_lo: int, seg_hi: int
) -> np.ndarray:
    """log(T_{m+1}-T_m) + log(beta) * sup_k |C_m1 - S_k1| per segment."""
    if seg_lo < cuts.n_lo or seg_hi + 1 > cuts.n_hi:
        raise WindowExhaustedError(
            "forward" if seg_hi + 1 > cuts.n_hi else "backward",
            max(abs(seg_lo), abs(seg_hi)) + 1,
            "bracket range outside certified cut range",
        )
    lb = float(np.log(beta))
    first = path.first_coords().astype(np.float64)
    rows = cuts.times[(seg_lo - cuts.n_lo) : (seg_hi + 1 - cuts.n_lo) + 1] - path.lo
    seg_max = np.maximum.reduceat(first, rows[:-1])
    seg_min = np.minimum.reduceat(first, rows[:-1])
    seg_max = np.maximum(seg_max, first[rows[1:]])
    seg_min = np.minimum(seg_min, first[rows[1:]])
    c_first = first[rows[:-1]]
    sup_dev = np.maximum(seg_max - c_first, c_first - seg_min)
    spacing = (rows[1:] - rows[:-1]).astype(np.float64)
    return np.log(spacing) + lb * sup_dev


def verify_esti_bound(
    path: LatticePath,
    cuts: CutStructure,
    beta: float,
    pot: Potential,
    n_range: int,
) -> dict:
    """Check sup |R_m + C_m1 log(beta)| <= 2 sup brackets over |m| <= n_range."""
    lb = float(np.log(beta))
    brackets = segment_brackets(path, cuts, beta, -n_range - 1, n_range)
    m_arr = np.arange(-n_range, n_range + 1)
    r_vals = pot.values[m_arr - pot.m_lo]
    c1 = cuts.points[(m_arr - cuts.n_lo), 0].astype(np.float64)
    lhs = float(np.max(np.abs(r_vals + c1 * lb)))
    rhs = 2.0 * float(np.max(brackets))
    return {"lhs": lhs, "rhs": rhs, "ok": lhs <= rhs + 1e-9 * max(1.0, abs(rhs))}


def verify_jump_probability_floor(
    env: Environment1D,
    path: LatticePath,
    cuts: CutStructure,
    beta: float,
    d: int,
    m_range: int,
) -> dict:
    """Check min(omega^-, omega^+) >= (2 d beta)^-1 exp(-2 sup brackets).

    This is the environment's own quantitative floor on jump probabilities
    over |m| <= m_range, with the fluctuation scale read off the same
    window (sup brackets over |m| <= m_range + 1).
    """
    brackets = segment_brackets(path, cuts, beta, -m_range - 1, m_range + 1)
    sup_bracket = float(np.max(brackets))
    m_arr = np.arange(-m_range, m_range + 1)
    offs = m_arr - env.m_lo
    log_floor = -float(np.log(2 * d * beta)) - 2.0 * sup_bracket
    log_min = np.minimum(env.log_omega_minus[offs], env.log_omega_plus[offs])
    worst = float(np.min(log_min))
    return {
        "log_min_omega": worst,
        "log_floor": log_floor,
        "sup_bracket": sup_bracket,
        "ok": worst >= log_floor - 1e-9,
    }


def _sigma2_one_environment(
    path: LatticePath, beta: float, cut_steps: int, guard: int
) -> tuple[float, float]:
    """(R_N^2 / N, T_N / N) for one SRW environment, N = cut_steps."""
    if path.kind != "srw":
        raise ValidationError(
            "variance calibration presumes the simple-random-walk environment"
        )
    cuts = find_cut_times(path, (0, path.hi - guard), guard=guard)
    if cuts.n_hi < cut_steps:
        raise WindowExhaustedError("forward", cut_steps - cuts.n_hi)
    env = environment_from_path(path, cuts, beta, n_lo=0, n_hi=cut_steps)
    pot = potential(env)
    r_n = pot.R(cut_steps)
    return r_n * r_n / cut_steps, cuts.T(cut_steps) / cut_steps


def estimate_sigma2(
    d: int,
    beta: float,
    n_environments: int,
    cut_steps: int,
    seed: int,
) -> dict:
    """Compare the spacing-based variance rate against the empirical one.

    Per environment the empirical statistic is R_N^2 / N at N = cut_steps
    along the forward cut chain; the closed-form rate is
    log(beta)^2 * tau / d with tau the mean cut spacing.  Returns both
    estimates, their ratio and standard errors.
    """
    if beta <= 1:
        raise ValidationError("variance comparison needs beta > 1")
    emp = np.empty(n_environments)
    taus = np.empty(n_environments)
    for i in range(n_environments):
        env_seed = int(_rng.substream(seed, "sigma2", i).integers(0, 2**63 - 1))
        half = 8 * cut_steps
        guard = 2 * cut_steps
        while True:
            path = sample_two_sided_srw(d, half, env_seed)
            try:
                emp[i], taus[i] = _sigma2_one_environment(path, beta, cut_steps, guard)
                break
            except WindowExhaustedError:
                half *= 2
                guard *= 2
    lb = float(np.log(beta))
    tau_hat = float(taus.mean())
    formula = lb * lb * tau_hat / d
    empirical = float(emp.mean())
    return {
        "sigma2_formula": formula,
        "sigma2_empirical": empirical,
        "ratio": empirical / formula,
        "tau_hat": tau_hat,
        "tau_se": float(taus.std(ddof=1) / np.sqrt(n_environments)),
        "empirical_se": float(emp.std(ddof=1) / np.sqrt(n_environments)),
        "n_environments": n_environments,
        "cut_steps": cut_steps,
    }
