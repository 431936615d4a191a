"""Numba kernels for the hot loops.

Everything here is written as plain array code: with RANGEWALK_NO_NUMBA=1
the undecorated Python versions run instead (slow but identical), which
keeps the kernels debuggable and pins down that compilation changes
nothing observable.
"""

from __future__ import annotations

import os

import numpy as np

_USE_NUMBA = os.environ.get("RANGEWALK_NO_NUMBA", "") != "1"

if _USE_NUMBA:
    from numba import njit
else:  # pragma: no cover - debugging aid

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


@njit(cache=True, nogil=True)
def _gauss_solve(a, b):
    """In-place Gaussian elimination with partial pivoting; returns x."""
    n = a.shape[0]
    for col in range(n):
        piv = col
        best = abs(a[col, col])
        for r in range(col + 1, n):
            if abs(a[r, col]) > best:
                best = abs(a[r, col])
                piv = r
        if piv != col:
            for c in range(n):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        diag = a[col, col]
        for r in range(col + 1, n):
            if a[r, col] != 0.0:
                f = a[r, col] / diag
                for c in range(col, n):
                    a[r, c] -= f * a[col, c]
                b[r] -= f * b[col]
    x = np.zeros(n)
    for r in range(n - 1, -1, -1):
        s = b[r]
        for c in range(r + 1, n):
            s -= a[r, c] * x[c]
        x[r] = s / a[r, r]
    return x


@njit(cache=True, nogil=True)
def segment_stats(pos, bounds, lb):
    """Per cut-segment resistances and endpoint conductance sums.

    pos is the (N, d) window of positions, bounds the row offsets of the
    cut times, lb = log(beta).  For segment m between rows bounds[m] and
    bounds[m+1] the outputs are

      log_r[m]    log effective resistance between the two cut-points,
      left_at[m]  sum of incident edge conductances at the left cut-point
                  within this segment, rescaled by beta**(-left coord),
      right_at[m] the same at the right cut-point, rescaled by its coord.

    Within-segment revisits are deduplicated (vertices and edges), and all
    conductances are max-rescaled by the left cut-point coordinate before
    the dense solve, so exponents stay within the segment's own diameter.
    """
    n_seg = bounds.shape[0] - 1
    d = pos.shape[1]
    log_r = np.empty(n_seg)
    left_at = np.empty(n_seg)
    right_at = np.empty(n_seg)
    for m in range(n_seg):
        r0 = bounds[m]
        r1 = bounds[m + 1]
        length = r1 - r0
        c0 = pos[r0, 0]
        c1 = pos[r1, 0]
        if length == 1:
            mx = c0 if c0 > c1 else c1
            log_r[m] = -lb * mx
            left_at[m] = np.exp(lb * (mx - c0))
            right_at[m] = np.exp(lb * (mx - c1))
            continue

        # vertex dedupe (local ids in order of first appearance)
        lid = np.empty(length + 1, np.int64)
        reps = np.empty(length + 1, np.int64)
        n_u = 0
        for k in range(length + 1):
            row = r0 + k
            found = -1
            for j in range(n_u):
                same = True
                for t in range(d):
                    if pos[row, t] != pos[reps[j], t]:
                        same = False
                        break
                if same:
                    found = j
                    break
            if found < 0:
                reps[n_u] = row
                lid[k] = n_u
                n_u += 1
            else:
                lid[k] = found

        # edge dedupe with conductances rescaled by the left cut coordinate
        e_u = np.empty(length, np.int64)
        e_v = np.empty(length, np.int64)
        e_w = np.empty(length, np.float64)
        n_e = 0
        for k in range(length):
            a = lid[k]
            b = lid[k + 1]
            if a > b:
                a, b = b, a
            dup = False
            for j in range(n_e):
                if e_u[j] == a and e_v[j] == b:
                    dup = True
                    break
            if dup:
                continue
            fa = pos[r0 + k, 0]
            fb = pos[r0 + k + 1, 0]
            mx = fa if fa > fb else fb
            e_u[n_e] = a
            e_v[n_e] = b
            e_w[n_e] = np.exp(lb * (mx - c0))
            n_e += 1

        src = lid[0]
        snk = lid[length]
        acc_l = 0.0
        acc_r = 0.0
        for j in range(n_e):
            if e_u[j] == src or e_v[j] == src:
                acc_l += e_w[j]
            if e_u[j] == snk or e_v[j] == snk:
                acc_r += e_w[j]
        left_at[m] = acc_l
        right_at[m] = acc_r * np.exp(lb * (c0 - c1))

        # unit current at src, snk grounded: R = potential at src
        k_n = n_u - 1
        mat = np.zeros((k_n, k_n))
        rhs = np.zeros(k_n)
        for j in range(n_e):
            a = e_u[j]
            b = e_v[j]
            w = e_w[j]
            ia = a if a < snk else a - 1
            ib = b if b < snk else b - 1
            if a != snk:
                mat[ia, ia] += w
            if b != snk:
                mat[ib, ib] += w
            if a != snk and b != snk:
                mat[ia, ib] -= w
                mat[ib, ia] -= w
        isrc = src if src < snk else src - 1
        rhs[isrc] = 1.0
        sol = _gauss_solve(mat, rhs)
        log_r[m] = np.log(sol[isrc]) - lb * c0
    return log_r, left_at, right_at


# walk kernel status codes
WALK_DONE = 0
WALK_UNIFORMS_EXHAUSTED = 1
WALK_STOPPED = 2
WALK_JREC_FULL = 3
WALK_JTARGET = 4


@njit(cache=True, nogil=True)
def walk_kernel(
    indptr,
    nbr,
    cum,
    cut_idx,
    stop_mask,
    v_start,
    t_start,
    uniforms,
    max_steps,
    record_traj,
    traj,
    j_steps,
    j_idx,
    j_done,
    j_target,
):
    """Advance the conductance walk, recording visits to cut-points.

    One uniform is consumed per step regardless of batching, so a resumed
    run replays bit-exactly.  cut_idx maps vertex -> cut index (sentinel
    2**31 means not a cut-point); every arrival at a cut vertex appends to
    (j_steps, j_idx).  Returns (vertex, step, used, recorded, status).
    """
    v = v_start
    t = t_start
    used = 0
    rec = 0
    cap = j_steps.shape[0]
    sentinel = 2**31
    while t < max_steps:
        if stop_mask[v]:
            return v, t, used, rec, WALK_STOPPED
        if j_done + rec >= j_target:
            return v, t, used, rec, WALK_JTARGET
        if rec >= cap:
            return v, t, used, rec, WALK_JREC_FULL
        if used >= uniforms.shape[0]:
            return v, t, used, rec, WALK_UNIFORMS_EXHAUSTED
        u = uniforms[used]
        used += 1
        lo = indptr[v]
        hi = indptr[v + 1]
        j = lo
        while j < hi - 1 and u >= cum[j]:
            j += 1
        v = nbr[j]
        t += 1
        if record_traj:
            traj[t] = v
        if cut_idx[v] != sentinel:
            j_steps[rec] = t
            j_idx[rec] = cut_idx[v]
            rec += 1
    return v, t, used, rec, WALK_DONE


RWRE_DONE = 0
RWRE_BOUNDARY = 1


@njit(cache=True, nogil=True)
def rwre_kernel(cum_minus, cum_hold, start_off, uniforms, traj):
    """Markov chain on the environment window; one uniform per step.

    traj[t] is the array offset after step t+1.  Stops early when the
    boundary of the window is reached (the caller extends or fails).
    """
    pos = start_off
    m = cum_minus.shape[0]
    for t in range(uniforms.shape[0]):
        u = uniforms[t]
        if u < cum_minus[pos]:
            pos -= 1
        elif u >= cum_hold[pos]:
            pos += 1
        traj[t] = pos
        if pos == 0 or pos == m - 1:
            return t + 1, pos, RWRE_BOUNDARY
    return uniforms.shape[0], pos, RWRE_DONE
