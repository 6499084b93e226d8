"""Numba kernels for the scan hot loop and cube-density counting.

All kernels are deterministic for any thread count: each output cell is
owned by exactly one thread and rows are visited in ascending order, so
reductions never depend on scheduling.
"""

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * np.pi
FOUR_PI_SQ = 4.0 * np.pi * np.pi


@njit(parallel=True, fastmath=False, cache=True)
def chirp_fold_rows_1d(ts, thetas, amps, kmin, period, idx, out):
    """Fill out[r, :] with the folded evolved coefficients for row r.

    For each time t and curve offset theta the atom k carries the phase
    2*pi*theta*k/P + 4*pi^2*t*(k/P)^2.  Atoms are consecutive integers
    starting at kmin; the phase factor is advanced by a two-term recurrence
    (one multiply per atom for the linear part, one for the quadratic), so no
    trig is evaluated inside the loop.  Drift over ~4k atoms is ~1e-13,
    far below any scan tolerance.  idx[q] = (kmin + q) mod P.
    """
    nrow = ts.shape[0]
    natom = amps.shape[0]
    for r in prange(nrow):
        beta = TWO_PI * thetas[r] / period
        gam = FOUR_PI_SQ * ts[r] / (period * period)
        ph0 = beta * kmin + gam * kmin * kmin
        v0 = complex(np.cos(ph0), np.sin(ph0))
        ps = beta + gam * (2.0 * kmin + 1.0)
        s0 = complex(np.cos(ps), np.sin(ps))
        g2 = 2.0 * gam
        e2 = complex(np.cos(g2), np.sin(g2))
        # two interleaved strides of step 2 halve the serial multiply chain
        e4 = (e2 * e2) * (e2 * e2)
        v1 = v0 * s0
        m0 = s0 * (s0 * e2)
        m1 = m0 * (e2 * e2)
        row = out[r]
        q = 0
        while q + 1 < natom:
            row[idx[q]] += amps[q] * v0
            row[idx[q + 1]] += amps[q + 1] * v1
            v0 = v0 * m0
            v1 = v1 * m1
            m0 = m0 * e4
            m1 = m1 * e4
            q += 2
        if q < natom:
            row[idx[q]] += amps[q] * v0


@njit(parallel=True, fastmath=False, cache=True)
def max_reduce(values, t_base, best_sq, best_row):
    """Merge |values|^2 column maxima into (best_sq, best_row).

    values: (rows, cols) complex; rows are ascending in time.  Strict '>'
    keeps the earliest row on ties, which implements the smallest-grid-time
    tie-break globally because chunks arrive in time order.
    """
    nrow, ncol = values.shape
    tile = 256
    ntile = (ncol + tile - 1) // tile
    for b in prange(ntile):
        c0 = b * tile
        c1 = min(c0 + tile, ncol)
        for r in range(nrow):
            row = values[r]
            for c in range(c0, c1):
                z = row[c]
                m = z.real * z.real + z.imag * z.imag
                if m > best_sq[c]:
                    best_sq[c] = m
                    best_row[c] = t_base + r


@njit(cache=True)
def _largest_halfint_offset(rhs):
    """Largest integer q >= 0 with (q + 0.5)^2 <= rhs, or -1 if none.

    rhs is a quarter-integer, so the comparison is exact; the sqrt guess is
    corrected by exact checks to stay bit-compatible with the brute mode.
    """
    if rhs < 0.25:
        return -1
    q = int(np.sqrt(rhs))
    while (q + 1.5) * (q + 1.5) <= rhs:
        q += 1
    while q >= 0 and (q + 0.5) * (q + 0.5) > rhs:
        q -= 1
    return q


@njit(parallel=True, cache=True)
def brute_density_counts_2d(corners, r, r_cap, out_counts):
    """Exact cube-in-ball counts for every half-integer center.

    Centers are c = (ex+0.5, et+0.5) with |c| <= r_cap - r, so the ball stays
    inside B_{r_cap}(0); inadmissible cells get -1.  A unit cube with corner
    a is inside B_r(c) iff sum_i (|c_i - a_i - 0.5| + 0.5)^2 <= r^2; with
    half-integer centers every quantity is a quarter-integer and the test is
    exact.  out_counts spans ex, et in [lo, lo + ne).
    """
    reach = r_cap - r
    reach2 = reach * reach
    ncube = corners.shape[0]
    ne = out_counts.shape[0]
    lo = -(ne // 2)
    for a in prange(ne):
        ex = lo + a
        cx2 = (ex + 0.5) * (ex + 0.5)
        for b in range(ne):
            et = lo + b
            if reach < 0 or cx2 + (et + 0.5) * (et + 0.5) > reach2:
                out_counts[a, b] = -1
                continue
            cnt = 0
            for q in range(ncube):
                dx = ex - corners[q, 0]
                dt = et - corners[q, 1]
                if dx < 0:
                    dx = -dx
                if dt < 0:
                    dt = -dt
                if (dx + 0.5) * (dx + 0.5) + (dt + 0.5) * (dt + 0.5) <= r * r:
                    cnt += 1
            out_counts[a, b] = cnt


@njit(parallel=True, cache=True)
def brute_density_counts_3d(corners, r, r_cap, out_counts):
    reach = r_cap - r
    reach2 = reach * reach
    ncube = corners.shape[0]
    ne = out_counts.shape[0]
    lo = -(ne // 2)
    for a in prange(ne):
        ex = lo + a
        cx2 = (ex + 0.5) * (ex + 0.5)
        for b in range(ne):
            ey = lo + b
            cy2 = (ey + 0.5) * (ey + 0.5)
            for c in range(ne):
                et = lo + c
                if reach < 0 or cx2 + cy2 + (et + 0.5) * (et + 0.5) > reach2:
                    out_counts[a, b, c] = -1
                    continue
                cnt = 0
                for q in range(ncube):
                    dx = ex - corners[q, 0]
                    dy = ey - corners[q, 1]
                    dt = et - corners[q, 2]
                    if dx < 0:
                        dx = -dx
                    if dy < 0:
                        dy = -dy
                    if dt < 0:
                        dt = -dt
                    s = (dx + 0.5) * (dx + 0.5) + (dy + 0.5) * (dy + 0.5) + (dt + 0.5) * (dt + 0.5)
                    if s <= r * r:
                        cnt += 1
                out_counts[a, b, c] = cnt


@njit(cache=True)
def fast_density_best_2d(corners, r, r_cap):
    """Row-sweep maximum of brute_density_counts_2d over the same family.

    For each center row et, every cube contributes an interval of admissible
    center x-offsets; a difference array plus prefix sum gives the per-row
    maximum in O(cubes + span).  Uses the same exact quarter-integer tests
    as brute, so the maximum matches it exactly.  Returns
    (best_count, best_ex, best_et); best_count = -1 when no center is
    admissible (then brute sees an empty family too).
    """
    reach = r_cap - r
    if reach < 0 or reach * reach < 0.5:
        return -1, 0, 0
    reach2 = reach * reach
    best = 0  # center (0.5, 0.5) is always admissible here and may count 0
    best_ex = 0
    best_et = 0
    ncube = corners.shape[0]
    if ncube == 0:
        return best, best_ex, best_et
    xmin = corners[:, 0].min()
    xmax = corners[:, 0].max()
    tmin = corners[:, 1].min()
    tmax = corners[:, 1].max()
    ri = int(np.ceil(r))
    span = int(xmax - xmin) + 2 * ri + 3
    off = int(xmin) - ri - 1
    diff = np.zeros(span + 2, dtype=np.int64)
    et_top = _largest_halfint_offset(reach2 - 0.25)
    row_lo = max(-et_top - 1, int(tmin) - ri)
    row_hi = min(et_top, int(tmax) + ri)
    for et in range(row_lo, row_hi + 1):
        bx = reach2 - (et + 0.5) * (et + 0.5)
        ex_top = _largest_halfint_offset(bx)
        if ex_top < 0:
            continue
        col_min = -ex_top - 1
        col_max = ex_top
        touched_lo = span
        touched_hi = 0
        any_cube = False
        for q in range(ncube):
            dt = et - corners[q, 1]
            if dt < 0:
                dt = -dt
            w = _largest_halfint_offset(r * r - (dt + 0.5) * (dt + 0.5))
            if w < 0:
                continue
            lo_e = corners[q, 0] - w
            hi_e = corners[q, 0] + w
            if lo_e < col_min:
                lo_e = col_min
            if hi_e > col_max:
                hi_e = col_max
            if lo_e > hi_e:
                continue
            any_cube = True
            i0 = int(lo_e) - off
            i1 = int(hi_e) - off + 1
            diff[i0] += 1
            diff[i1] -= 1
            if i0 < touched_lo:
                touched_lo = i0
            if i1 > touched_hi:
                touched_hi = i1
        if not any_cube:
            continue
        run = 0
        for i in range(touched_lo, touched_hi + 1):
            run += diff[i]
            diff[i] = 0
            if run > best:
                best = run
                best_ex = i + off
                best_et = et
    return best, best_ex, best_et


@njit(cache=True)
def fast_density_best_3d(corners, r, r_cap):
    """3-d analogue of fast_density_best_2d; rows are (ey, et) pairs."""
    reach = r_cap - r
    if reach < 0 or reach * reach < 0.75:
        return -1, 0, 0, 0
    reach2 = reach * reach
    best = 0
    best_ex = 0
    best_ey = 0
    best_et = 0
    ncube = corners.shape[0]
    if ncube == 0:
        return best, best_ex, best_ey, best_et
    xmin = corners[:, 0].min()
    xmax = corners[:, 0].max()
    ri = int(np.ceil(r))
    span = int(xmax - xmin) + 2 * ri + 3
    off = int(xmin) - ri - 1
    diff = np.zeros(span + 2, dtype=np.int64)
    e_top = _largest_halfint_offset(reach2 - 0.5)
    if e_top < 0:
        return best, best_ex, best_ey, best_et
    for ey in range(-e_top - 1, e_top + 1):
        cy2 = (ey + 0.5) * (ey + 0.5)
        for et in range(-e_top - 1, e_top + 1):
            bx = reach2 - cy2 - (et + 0.5) * (et + 0.5)
            ex_top = _largest_halfint_offset(bx)
            if ex_top < 0:
                continue
            col_min = -ex_top - 1
            col_max = ex_top
            touched_lo = span
            touched_hi = 0
            any_cube = False
            for q in range(ncube):
                dy = ey - corners[q, 1]
                dt = et - corners[q, 2]
                if dy < 0:
                    dy = -dy
                if dt < 0:
                    dt = -dt
                rhs = r * r - (dy + 0.5) * (dy + 0.5) - (dt + 0.5) * (dt + 0.5)
                w = _largest_halfint_offset(rhs)
                if w < 0:
                    continue
                lo_e = corners[q, 0] - w
                hi_e = corners[q, 0] + w
                if lo_e < col_min:
                    lo_e = col_min
                if hi_e > col_max:
                    hi_e = col_max
                if lo_e > hi_e:
                    continue
                any_cube = True
                i0 = int(lo_e) - off
                i1 = int(hi_e) - off + 1
                diff[i0] += 1
                diff[i1] -= 1
                if i0 < touched_lo:
                    touched_lo = i0
                if i1 > touched_hi:
                    touched_hi = i1
            if not any_cube:
                continue
            run = 0
            for i in range(touched_lo, touched_hi + 1):
                run += diff[i]
                diff[i] = 0
                if run > best:
                    best = run
                    best_ex = i + off
                    best_ey = ey
                    best_et = et
    return best, best_ex, best_ey, best_et
