"""Hot numeric loops.

Every kernel has a loop implementation compiled with numba and a
vectorized numpy implementation. ``spf._accel`` picks one at import time;
both are importable directly (``*_loop`` / ``*_numpy``) for benchmarks and
cross-checks. The loop versions are only fast when numba is active.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

# kinds understood by the ordered-window kernels
MEAN, TRIMMED_MEAN, MEDIAN, MINIMUM, MAXIMUM = 0, 1, 2, 3, 4


# --------------------------------------------------------------------------
# subset lattice, 1D clamp recursion
# --------------------------------------------------------------------------

@njit(cache=True)
def subset_clamp_loop(fvals, deltas, tol):
    n = deltas.shape[0]
    size = fvals.shape[0]
    g = np.empty(size)
    g[0] = fvals[0]
    for mask in range(1, size):
        up = np.inf
        lo = -np.inf
        for i in range(n):
            bit = 1 << i
            if mask & bit:
                c = g[mask ^ bit]
                if c + deltas[i] < up:
                    up = c + deltas[i]
                if c - deltas[i] > lo:
                    lo = c - deltas[i]
        scale = max(1.0, abs(lo), abs(up))
        if lo - up > tol * scale:
            return g, mask
        f = fvals[mask]
        if up <= f:
            g[mask] = up
        elif lo >= f:
            g[mask] = lo
        else:
            g[mask] = f
    return g, -1


def _levels(n):
    masks = np.arange(1 << n, dtype=np.int64)
    pc = np.bitwise_count(masks)
    order = np.argsort(pc, kind="stable")
    bounds = np.searchsorted(pc[order], np.arange(n + 2))
    return [order[bounds[k]:bounds[k + 1]] for k in range(1, n + 1)]


def _level_bounds(g, level, deltas):
    up = np.full(level.shape[0], np.inf)
    lo = np.full(level.shape[0], -np.inf)
    for i, d in enumerate(deltas):
        sel = ((level >> i) & 1).astype(bool)
        c = g[level[sel] ^ (1 << i)]
        up[sel] = np.minimum(up[sel], c + d)
        lo[sel] = np.maximum(lo[sel], c - d)
    return lo, up


def subset_clamp_numpy(fvals, deltas, tol):
    n = deltas.shape[0]
    g = np.empty(fvals.shape[0])
    g[0] = fvals[0]
    for level in _levels(n):
        lo, up = _level_bounds(g, level, deltas)
        scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(up)))
        bad = np.nonzero(lo - up > tol * scale)[0]
        if bad.size:
            return g, int(level[bad].min())
        f = fvals[level]
        g[level] = np.where(up <= f, up, np.where(lo >= f, lo, f))
    return g, -1


# --------------------------------------------------------------------------
# subset lattice, 2D l1 recursion in rotated coordinates (u = x1+x2, v = x1-x2)
# --------------------------------------------------------------------------

@njit(cache=True)
def subset_clamp_2d_loop(fu, fv, deltas, tol):
    n = deltas.shape[0]
    size = fu.shape[0]
    gu = np.empty(size)
    gv = np.empty(size)
    gu[0] = fu[0]
    gv[0] = fv[0]
    for mask in range(1, size):
        u_hi = np.inf
        u_lo = -np.inf
        v_hi = np.inf
        v_lo = -np.inf
        for i in range(n):
            bit = 1 << i
            if mask & bit:
                cu = gu[mask ^ bit]
                cv = gv[mask ^ bit]
                d = deltas[i]
                u_hi = min(u_hi, cu + d)
                u_lo = max(u_lo, cu - d)
                v_hi = min(v_hi, cv + d)
                v_lo = max(v_lo, cv - d)
        su = max(1.0, abs(u_lo), abs(u_hi))
        sv = max(1.0, abs(v_lo), abs(v_hi))
        if u_lo - u_hi > tol * su or v_lo - v_hi > tol * sv:
            return gu, gv, mask
        gu[mask] = min(max(fu[mask], u_lo), u_hi)
        gv[mask] = min(max(fv[mask], v_lo), v_hi)
    return gu, gv, -1


def subset_clamp_2d_numpy(fu, fv, deltas, tol):
    n = deltas.shape[0]
    gu = np.empty(fu.shape[0])
    gv = np.empty(fv.shape[0])
    gu[0], gv[0] = fu[0], fv[0]
    for level in _levels(n):
        u_lo, u_hi = _level_bounds(gu, level, deltas)
        v_lo, v_hi = _level_bounds(gv, level, deltas)
        su = np.maximum(1.0, np.maximum(np.abs(u_lo), np.abs(u_hi)))
        sv = np.maximum(1.0, np.maximum(np.abs(v_lo), np.abs(v_hi)))
        bad = np.nonzero((u_lo - u_hi > tol * su) | (v_lo - v_hi > tol * sv))[0]
        if bad.size:
            return gu, gv, int(level[bad].min())
        gu[level] = np.minimum(np.maximum(fu[level], u_lo), u_hi)
        gv[level] = np.minimum(np.maximum(fv[level], v_lo), v_hi)
    return gu, gv, -1


# --------------------------------------------------------------------------
# longest chain through the lattice (permutation error bound)
# --------------------------------------------------------------------------

@njit(cache=True)
def lattice_chain_loop(fvals, deltas):
    """best[S] = max_i best[S-i] + max(|f(S) - f(S-i)|_1 - delta_i, 0)."""
    n = deltas.shape[0]
    size = fvals.shape[0]
    dim = fvals.shape[1]
    best = np.zeros(size)
    arg = np.full(size, -1, dtype=np.int64)
    for mask in range(1, size):
        top = -1.0
        pick = -1
        for i in range(n):
            bit = 1 << i
            if mask & bit:
                child = mask ^ bit
                jump = 0.0
                for k in range(dim):
                    jump += abs(fvals[mask, k] - fvals[child, k])
                step = jump - deltas[i]
                if step < 0.0:
                    step = 0.0
                cand = best[child] + step
                if cand > top:
                    top = cand
                    pick = i
        best[mask] = top
        arg[mask] = pick
    return best, arg


def lattice_chain_numpy(fvals, deltas):
    n = deltas.shape[0]
    best = np.zeros(fvals.shape[0])
    arg = np.full(fvals.shape[0], -1, dtype=np.int64)
    for level in _levels(n):
        top = np.full(level.shape[0], -1.0)
        pick = np.full(level.shape[0], -1, dtype=np.int64)
        for i, d in enumerate(deltas):
            sel = ((level >> i) & 1).astype(bool)
            m = level[sel]
            child = m ^ (1 << i)
            jump = np.abs(fvals[m] - fvals[child]).sum(axis=1)
            cand = best[child] + np.maximum(jump - d, 0.0)
            better = cand > top[sel]
            idx = np.nonzero(sel)[0][better]
            top[idx] = cand[better]
            pick[idx] = i
        best[level] = top
        arg[level] = pick
    return best, arg


# --------------------------------------------------------------------------
# row buffers for the rolling window DPs
# --------------------------------------------------------------------------

@njit(cache=True)
def _row_stride(n):
    """Elements per row so that row offsets stay clear of 4 KiB multiples.

    Separately allocated rows of ~4 KiB land one page apart, and the store
    to one row then falsely aliases loads from the next (a 2x slowdown
    around n = 500). Rows are 4 KiB-rounded plus 640 bytes, so no two of
    up to nine rows sit within 384 bytes of the same page offset.
    """
    pages = ((n + 2) * 8 + 4095) // 4096
    return pages * 512 + 80


# --------------------------------------------------------------------------
# contiguous-window DP for database-ordered statistics
# --------------------------------------------------------------------------

@njit(cache=True)
def _fill_window_stats(x, prefix, k, kind, alpha, means, out):
    """Statistic of every length-k window, one row at a time.

    The kind dispatch stays outside the per-window loop so the loops
    vectorize; dispatching per window was ~20x slower at n = 2000.
    """
    m = x.shape[0] - k + 1
    if kind == MEAN:
        for i in range(m):
            out[i] = means[i]
        return
    if kind == MINIMUM:
        for i in range(m):
            out[i] = x[i]
        return
    if kind == MAXIMUM:
        for i in range(m):
            out[i] = x[i + k - 1]
        return
    if kind == TRIMMED_MEAN:
        t = int(math.floor(alpha * k))
        if k > 2 * t:
            for i in range(m):
                out[i] = (prefix[i + k - t] - prefix[i + t]) / (k - 2 * t)
            return
    # median, and trimmed mean whose trimming exhausts the window
    h = k // 2
    if k % 2 == 1:
        for i in range(m):
            out[i] = x[i + h]
    else:
        for i in range(m):
            out[i] = 0.5 * (x[i + h - 1] + x[i + h])


@njit(cache=True)
def ordered_windows_loop(x, kind, alpha, empty_value, delta):
    n = x.shape[0]
    if n == 0:
        return empty_value
    prefix = np.zeros(n + 1)
    for i in range(n):
        prefix[i + 1] = prefix[i] + x[i]
    stride = _row_stride(n)
    buf = np.zeros(5 * stride)
    prev = buf[0:n + 1]
    cur = buf[stride:stride + n + 1]
    mean_prev = buf[2 * stride:2 * stride + n + 1]
    mean_cur = buf[3 * stride:3 * stride + n + 1]
    stat = buf[4 * stride:4 * stride + n + 1]
    prev[:] = empty_value
    for k in range(1, n + 1):
        m = n - k + 1
        if kind == MEAN:
            for i in range(m):
                mean_cur[i] = ((k - 1) / k) * mean_prev[i] + x[i + k - 1] / k
        _fill_window_stats(x, prefix, k, kind, alpha, mean_cur, stat)
        for i in range(m):
            f = stat[i]
            up = prev[i] + delta        # window minus its largest entry
            lo = prev[i + 1] - delta    # window minus its smallest entry
            # same as the Upper-then-Lower clamp, written to compile to selects
            cur[i] = up if up <= f else max(lo, f)
        prev, cur = cur, prev
        mean_prev, mean_cur = mean_cur, mean_prev
    return prev[0]


def _window_stat_numpy(x, prefix, k, kind, alpha, means):
    m = x.shape[0] - k + 1
    starts = np.arange(m)
    if kind == MEAN:
        return means
    if kind == MINIMUM:
        return x[:m].copy()
    if kind == MAXIMUM:
        return x[k - 1:].copy()
    if kind == TRIMMED_MEAN:
        t = int(math.floor(alpha * k))
        if k > 2 * t:
            return (prefix[starts + k - t] - prefix[starts + t]) / (k - 2 * t)
    mid = starts + k // 2
    if k % 2 == 1:
        return x[mid].copy()
    return 0.5 * (x[mid - 1] + x[mid])


def ordered_windows_numpy(x, kind, alpha, empty_value, delta):
    n = x.shape[0]
    if n == 0:
        return float(empty_value)
    prefix = np.concatenate(([0.0], np.cumsum(x)))
    prev = np.full(n + 1, float(empty_value))
    means = np.zeros(n + 1)
    for k in range(1, n + 1):
        m = n - k + 1
        means = ((k - 1) / k) * means[:m] + x[k - 1:] / k
        f = _window_stat_numpy(x, prefix, k, kind, alpha, means)
        up = prev[:m] + delta
        lo = prev[1:m + 1] - delta
        prev = np.where(up <= f, up, np.where(lo >= f, lo, f))
    return float(prev[0])


# --------------------------------------------------------------------------
# contiguous-window DP for variance
# --------------------------------------------------------------------------

@njit(cache=True)
def var_from_parts_loop(var_a, var_b, var_ab, x_a, x_b, n):
    r1 = (n - 1.0) / n
    r2 = (n - 2.0) / n
    d = x_a - x_b
    return r1 * r1 * var_a + r1 * r1 * var_b - r2 * r2 * var_ab + d * d / (n * n)


@njit(cache=True)
def variance_windows_loop(x, delta):
    """Returns (g, witness_start, witness_length) for the full window."""
    n = x.shape[0]
    if n == 0:
        return 0.0, 0, 0
    # one buffer for all nine rolling rows; witness indices ride along as
    # float64 (exact far beyond any feasible n) so no second allocation can
    # land at an aliasing offset
    stride = _row_stride(n)
    m = n + 2
    buf = np.zeros(9 * stride)
    var2 = buf[0:m]                     # length k-2
    var1 = buf[stride:stride + m]       # length k-1
    var0 = buf[2 * stride:2 * stride + m]  # length k
    g1 = buf[3 * stride:3 * stride + m]
    g0 = buf[4 * stride:4 * stride + m]
    ws1 = buf[5 * stride:5 * stride + m]
    wl1 = buf[6 * stride:6 * stride + m]
    ws0 = buf[7 * stride:7 * stride + m]
    wl0 = buf[8 * stride:8 * stride + m]
    for i in range(m):
        ws1[i] = i
    for k in range(1, n + 1):
        for i in range(n - k + 1):
            if k == 1:
                v = 0.0
            else:
                v = var_from_parts_loop(var1[i + 1], var1[i], var2[i + 1],
                                        x[i], x[i + k - 1], k)
                if v < 0.0:
                    v = 0.0
            var0[i] = v
            drop_first = g1[i + 1] + delta
            drop_last = g1[i] + delta
            if v <= drop_first and v <= drop_last:
                g0[i] = v
                ws0[i] = i
                wl0[i] = k
            elif drop_first <= drop_last:
                g0[i] = drop_first
                ws0[i] = ws1[i + 1]
                wl0[i] = wl1[i + 1]
            else:
                g0[i] = drop_last
                ws0[i] = ws1[i]
                wl0[i] = wl1[i]
        var2, var1, var0 = var1, var0, var2
        g1, g0 = g0, g1
        ws1, ws0 = ws0, ws1
        wl1, wl0 = wl0, wl1
    return g1[0], int(ws1[0]), int(wl1[0])


def variance_windows_numpy(x, delta):
    n = x.shape[0]
    if n == 0:
        return 0.0, 0, 0
    var2 = np.zeros(n + 1)
    var1 = np.zeros(n + 1)
    g1 = np.zeros(n + 1)
    ws1 = np.arange(n + 1)
    wl1 = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        m = n - k + 1
        if k == 1:
            v = np.zeros(m)
        else:
            r1 = (k - 1.0) / k
            r2 = (k - 2.0) / k
            d = x[:m] - x[k - 1:]
            v = (r1 * r1 * var1[1:m + 1] + r1 * r1 * var1[:m]
                 - r2 * r2 * var2[1:m + 1] + d * d / (k * k))
            v = np.maximum(v, 0.0)
        drop_first = g1[1:m + 1] + delta
        drop_last = g1[:m] + delta
        keep = (v <= drop_first) & (v <= drop_last)
        first = ~keep & (drop_first <= drop_last)
        g = np.where(keep, v, np.where(first, drop_first, drop_last))
        ws = np.where(keep, np.arange(m), np.where(first, ws1[1:m + 1], ws1[:m]))
        wl = np.where(keep, k, np.where(first, wl1[1:m + 1], wl1[:m]))
        var2, var1 = var1, np.concatenate((v, [0.0]))
        g1 = np.concatenate((g, [0.0]))
        ws1 = np.concatenate((ws, [0]))
        wl1 = np.concatenate((wl, [0]))
    return float(g1[0]), int(ws1[0]), int(wl1[0])


# --------------------------------------------------------------------------
# negative-cycle detection for difference-constraint systems
# --------------------------------------------------------------------------

@njit(cache=True)
def bellman_ford_loop(n_nodes, src, dst, w, tol):
    """True iff the constraint graph has no negative cycle."""
    dist = np.zeros(n_nodes)
    m = src.shape[0]
    for _ in range(n_nodes + 1):
        changed = False
        for e in range(m):
            cand = dist[src[e]] + w[e]
            if cand < dist[dst[e]] - tol:
                dist[dst[e]] = cand
                changed = True
        if not changed:
            return True
    return False


def bellman_ford_numpy(n_nodes, src, dst, w, tol):
    dist = np.zeros(n_nodes)
    for _ in range(n_nodes + 1):
        cand = np.full(n_nodes, np.inf)
        np.minimum.at(cand, dst, dist[src] + w)
        improve = cand < dist - tol
        if not improve.any():
            return True
        dist = np.where(improve, cand, dist)
    return False


# --------------------------------------------------------------------------
# grid minimization of the ball-violation function max_i (||x - c_i||_p - r_i)
# --------------------------------------------------------------------------

@njit(cache=True)
def grid_min_violation_loop(centers, radii, lo, step, counts, p):
    d = centers.shape[1]
    m = centers.shape[0]
    total = 1
    for k in range(d):
        total *= counts[k]
    best = np.inf
    best_idx = 0
    point = np.empty(d)
    for flat in range(total):
        rem = flat
        for k in range(d - 1, -1, -1):
            point[k] = lo[k] + step * (rem % counts[k])
            rem //= counts[k]
        worst = -np.inf
        for i in range(m):
            s = 0.0
            for k in range(d):
                diff = abs(point[k] - centers[i, k])
                s += diff if p == 1 else diff * diff
            if p != 1:
                s = math.sqrt(s)
            viol = s - radii[i]
            if viol > worst:
                worst = viol
                if worst >= best:
                    break
        if worst < best:
            best = worst
            best_idx = flat
    return best, best_idx


def grid_min_violation_numpy(centers, radii, lo, step, counts, p, chunk=1 << 20):
    d = centers.shape[1]
    total = int(np.prod(counts))
    best = np.inf
    best_idx = 0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, tuple(int(c) for c in counts))
        pts = np.stack([lo[k] + step * idx[k] for k in range(d)], axis=1)
        worst = np.full(flat.shape[0], -np.inf)
        for c, r in zip(centers, radii):
            diff = pts - c
            if p == 1:
                dist = np.abs(diff).sum(axis=1)
            else:
                dist = np.sqrt((diff * diff).sum(axis=1))
            np.maximum(worst, dist - r, out=worst)
        j = int(np.argmin(worst))
        if worst[j] < best:
            best = float(worst[j])
            best_idx = int(flat[j])
    return best, best_idx


if HAVE_NUMBA:
    subset_clamp = subset_clamp_loop
    subset_clamp_2d = subset_clamp_2d_loop
    lattice_chain = lattice_chain_loop
    ordered_windows = ordered_windows_loop
    variance_windows = variance_windows_loop
    bellman_ford = bellman_ford_loop
    grid_min_violation = grid_min_violation_loop
else:
    subset_clamp = subset_clamp_numpy
    subset_clamp_2d = subset_clamp_2d_numpy
    lattice_chain = lattice_chain_numpy
    ordered_windows = ordered_windows_numpy
    variance_windows = variance_windows_numpy
    bellman_ford = bellman_ford_numpy
    grid_min_violation = grid_min_violation_numpy
