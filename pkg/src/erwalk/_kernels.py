"""Compiled inner loops for path simulation.

Layout of the packed state used by ``advance`` (and by the Python-level
wrappers in ``core``):

* ``counts``: int64[2d], steps taken in each signed direction; index v in
  [0, d) means +e_{v+1}, index v in [d, 2d) means -e_{v-d+1}.
* ``S``: int64[d], current position.
* ``fv``: float64[8d], compensated vector accumulators:
  [0:d) Gsum, [d:2d) Gsum comp, [2d:3d) innovation-sum M, [3d:4d) its comp,
  [4d:5d) N, [5d:6d) N comp, [6d:7d) latest innovation eps,
  [7d:8d) anchored martingale M = a_n * S_n.
* ``fs``: float64[11], scalars:
  [0] a_n, [1] b_n, [2] b comp, [3] tau, [4] tau comp, [5] sum a_k^2,
  [6] comp, [7] sum a_k^2 b_{k-1}, [8] comp, [9] sum a_k^4, [10] comp.
* ``qv``: float64[3, d, d], blocks of the predictable quadratic variation
  (sum a_k^2 C_k, sum a_k^2 b_{k-1} C_k, sum a_k^2 b_{k-1}^2 C_k) where C_k
  is the conditional covariance of the innovation; filled only in detailed
  mode, pass a (3, 0, 0) array otherwise.

The martingale is carried in two representations.  The anchored value
a_n * S_n is recomputed from the exact integer position every step, and N
accumulates b_{k-1} times the exact two-sum split of each anchored jump:
that keeps the Abel telescoping of the decomposition identity exact in
floating point, so the residual stays ~1e-11 even at 10^6 steps.  The
innovation sum a_1 eps_1 + ... + a_n eps_n is tracked independently (plain
Kahan) as the second representation; it may drift from the anchored value
by ~u*n relative, which the representation-agreement check measures.

The ensemble and functional kernels below keep private scalar copies of the
same accumulators and apply the identical operations in the identical order,
so a one-replica ensemble reproduces ``run_path`` bit for bit.  Keep the
arithmetic in the three loops literally in sync when editing.
"""

import numpy as np
from numba import njit

from .rng import derive_seed, init_state, next_double

# fs slots
_IA, _IB, _IBC = 0, 1, 2
_ITAU, _ITAUC = 3, 4
_IA2, _IA2C = 5, 6
_IA2B, _IA2BC = 7, 8
_IA4, _IA4C = 9, 10
FS_LEN = 11


@njit(cache=True, inline="always")
def _kadd(arr, i, ci, x):
    # Kahan compensated add of x into arr[i] with compensation in arr[ci].
    y = x - arr[ci]
    t = arr[i] + y
    arr[ci] = (t - arr[i]) - y
    arr[i] = t


@njit(cache=True)
def advance(n, d, p, a, counts, S, fv, fs, qv, detailed, rng):
    """Advance one walk state by a single step; returns the new n."""
    u = next_double(rng)
    twod = 2 * d
    e_off = 6 * d
    if n == 0:
        v = np.int64(u * twod)
        if v >= twod:
            v = twod - 1
        if v < d:
            axis, sgn = v, 1
        else:
            axis, sgn = v - d, -1
        for j in range(d):
            fv[e_off + j] = 0.0
        fv[e_off + axis] = float(sgn)
        a_next = 1.0
        if detailed and qv.shape[1] > 0:
            w2 = a_next * a_next
            b_prev = fs[_IB]
            invd = 1.0 / d
            for i in range(d):
                qv[0, i, i] += w2 * invd
                qv[1, i, i] += w2 * b_prev * invd
                qv[2, i, i] += w2 * b_prev * b_prev * invd
    else:
        inv_n = 1.0 / n
        q = (1.0 - p) / (twod - 1)
        acc = 0.0
        v = twod - 1
        for j in range(twod):
            acc += (counts[j] * p + (n - counts[j]) * q) * inv_n
            if u < acc:
                v = j
                break
        if v < d:
            axis, sgn = v, 1
        else:
            axis, sgn = v - d, -1
        drift = a * inv_n
        for j in range(d):
            fv[e_off + j] = -drift * S[j]
        fv[e_off + axis] += sgn
        a_next = fs[_IA] * (n / (n + a))
        if detailed and qv.shape[1] > 0:
            w2 = a_next * a_next
            b_prev = fs[_IB]
            wb = w2 * b_prev
            wb2 = wb * b_prev
            invd = 1.0 / d
            for i in range(d):
                for jj in range(d):
                    c = -(drift * S[i]) * (drift * S[jj])
                    if i == jj:
                        axtot = counts[i] + counts[d + i]
                        c += invd + a * (axtot * inv_n - invd)
                    qv[0, i, jj] += w2 * c
                    qv[1, i, jj] += wb * c
                    qv[2, i, jj] += wb2 * c
    b_prev = fs[_IB]
    w2 = a_next * a_next
    _kadd(fs, _ITAU, _ITAUC, w2 * b_prev * b_prev)
    _kadd(fs, _IA2, _IA2C, w2)
    _kadd(fs, _IA2B, _IA2BC, w2 * b_prev)
    _kadd(fs, _IA4, _IA4C, w2 * w2)
    S[axis] += sgn
    counts[v] += 1
    n1 = n + 1
    m_off = 7 * d
    for j in range(d):
        _kadd(fv, 2 * d + j, 3 * d + j, a_next * fv[e_off + j])
        m_new = a_next * S[j]
        m_old = fv[m_off + j]
        # exact two-sum split of the anchored-martingale jump
        s = m_new - m_old
        bb = s - m_new
        err = (m_new - (s - bb)) + (-m_old - bb)
        _kadd(fv, 4 * d + j, 5 * d + j, b_prev * s)
        _kadd(fv, 4 * d + j, 5 * d + j, b_prev * err)
        fv[m_off + j] = m_new
        _kadd(fv, j, d + j, float(S[j]))
    _kadd(fs, _IB, _IBC, 1.0 / a_next)
    fs[_IA] = a_next
    return n1


@njit(cache=True)
def run_path_kernel(d, p, a, n_steps, record_every, detailed,
                    counts, S, fv, fs, qv, rng,
                    rec_n, rec_S, rec_G, rec_M, rec_N, rec_a, rec_b,
                    rec_res, rec_qv):
    """Drive advance() for n_steps, recording rows at the given stride."""
    row = 0
    n = 0
    for _ in range(n_steps):
        n = advance(n, d, p, a, counts, S, fv, fs, qv, detailed, rng)
        if n % record_every == 0 or n == n_steps:
            inv = 1.0 / n
            rec_n[row] = n
            acc2 = 0.0
            for j in range(d):
                g = fv[j] * inv
                rec_S[row, j] = S[j]
                rec_G[row, j] = g
                rec_M[row, j] = fv[7 * d + j]
                rec_N[row, j] = fv[4 * d + j]
                dev = g - (fs[_IB] * fv[7 * d + j] - fv[4 * d + j]) * inv
                acc2 += dev * dev
            rec_a[row] = fs[_IA]
            rec_b[row] = fs[_IB]
            rec_res[row] = np.sqrt(acc2)
            if detailed and qv.shape[1] > 0:
                for blk in range(3):
                    for i in range(d):
                        for jj in range(d):
                            rec_qv[row, blk, i, jj] = qv[blk, i, jj]
            row += 1
    return row


@njit(cache=True, nogil=True)
def ensemble_chunk(d, p, a, n_steps, base_seed, r_lo, r_hi, horizons,
                   out_G, out_S, out_M, out_N, out_res):
    """Simulate replicas [r_lo, r_hi) with per-replica derived seeds.

    Tracks the same compensated accumulators as advance(), in the same
    operation order, minus the scalar diagnostic sums.  Snapshots G/S/M/N at
    each horizon (horizons sorted, last one equal to n_steps).  out_res[r]
    is the decomposition residual maximized over power-of-two steps and the
    terminal step.
    """
    twod = 2 * d
    n_h = horizons.shape[0]
    counts = np.zeros(twod, np.int64)
    S = np.zeros(d, np.int64)
    e = np.zeros(d, np.float64)
    Gs = np.zeros(d, np.float64)
    Gc = np.zeros(d, np.float64)
    M = np.zeros(d, np.float64)
    Mc = np.zeros(d, np.float64)
    Ma = np.zeros(d, np.float64)
    Nv = np.zeros(d, np.float64)
    Nc = np.zeros(d, np.float64)
    for r in range(r_lo, r_hi):
        for j in range(twod):
            counts[j] = 0
        for j in range(d):
            S[j] = 0
            Gs[j] = 0.0
            Gc[j] = 0.0
            M[j] = 0.0
            Mc[j] = 0.0
            Ma[j] = 0.0
            Nv[j] = 0.0
            Nc[j] = 0.0
        rng = init_state(derive_seed(base_seed, r))
        a_n = 1.0
        b = 0.0
        bc = 0.0
        rmax = 0.0
        h = 0
        for n in range(n_steps):
            u = next_double(rng)
            if n == 0:
                v = np.int64(u * twod)
                if v >= twod:
                    v = twod - 1
                if v < d:
                    axis, sgn = v, 1
                else:
                    axis, sgn = v - d, -1
                for j in range(d):
                    e[j] = 0.0
                e[axis] = float(sgn)
                a_next = 1.0
            else:
                inv_n = 1.0 / n
                q = (1.0 - p) / (twod - 1)
                acc = 0.0
                v = twod - 1
                for j in range(twod):
                    acc += (counts[j] * p + (n - counts[j]) * q) * inv_n
                    if u < acc:
                        v = j
                        break
                if v < d:
                    axis, sgn = v, 1
                else:
                    axis, sgn = v - d, -1
                drift = a * inv_n
                for j in range(d):
                    e[j] = -drift * S[j]
                e[axis] += sgn
                a_next = a_n * (n / (n + a))
            b_prev = b
            S[axis] += sgn
            counts[v] += 1
            n1 = n + 1
            for j in range(d):
                x = a_next * e[j]
                y = x - Mc[j]
                t = M[j] + y
                Mc[j] = (t - M[j]) - y
                M[j] = t
                m_new = a_next * S[j]
                m_old = Ma[j]
                s = m_new - m_old
                bb = s - m_new
                err = (m_new - (s - bb)) + (-m_old - bb)
                x = b_prev * s
                y = x - Nc[j]
                t = Nv[j] + y
                Nc[j] = (t - Nv[j]) - y
                Nv[j] = t
                x = b_prev * err
                y = x - Nc[j]
                t = Nv[j] + y
                Nc[j] = (t - Nv[j]) - y
                Nv[j] = t
                Ma[j] = m_new
                x = float(S[j])
                y = x - Gc[j]
                t = Gs[j] + y
                Gc[j] = (t - Gs[j]) - y
                Gs[j] = t
            x = 1.0 / a_next
            y = x - bc
            t = b + y
            bc = (t - b) - y
            b = t
            a_n = a_next
            if h < n_h and n1 == horizons[h]:
                inv = 1.0 / n1
                for j in range(d):
                    out_G[r, h, j] = Gs[j] * inv
                    out_S[r, h, j] = S[j]
                    out_M[r, h, j] = Ma[j]
                    out_N[r, h, j] = Nv[j]
                h += 1
            if (n1 & (n1 - 1)) == 0 or n1 == n_steps:
                inv = 1.0 / n1
                acc2 = 0.0
                for j in range(d):
                    dev = Gs[j] * inv - (b * Ma[j] - Nv[j]) * inv
                    acc2 += dev * dev
                res = np.sqrt(acc2)
                if res > rmax:
                    rmax = res
        out_res[r] = rmax


@njit(cache=True, nogil=True)
def path_functionals_kernel(d, p, n_steps, seed, horizons,
                            do_qsl_diff, do_qsl_crit, do_lil_diff, do_lil_crit,
                            qsl_d_snap, qsl_c_snap, lil_d_snap, lil_c_snap,
                            g_snap):
    """One path with per-step functional accumulation.

    Accumulates raw sums: sum_k G_k G_k^T / k^2 (diffusive) and the critical
    variant with 1/(k log k)^2 weights from k = 2, plus running maxima of the
    iterated-logarithm statistics from k = 16 where the double logarithm
    exceeds 1.  Raw sums are snapshotted at each horizon; normalization by
    log n or log log n happens in the caller.
    """
    twod = 2 * d
    n_h = horizons.shape[0]
    counts = np.zeros(twod, np.int64)
    S = np.zeros(d, np.int64)
    g = np.zeros(d, np.float64)
    Gs = np.zeros(d, np.float64)
    Gc = np.zeros(d, np.float64)
    qd = np.zeros((d, d), np.float64)
    qc = np.zeros((d, d), np.float64)
    lil_d = 0.0
    lil_c = 0.0
    rng = init_state(seed)
    h = 0
    for n in range(n_steps):
        u = next_double(rng)
        if n == 0:
            v = np.int64(u * twod)
            if v >= twod:
                v = twod - 1
        else:
            inv_n = 1.0 / n
            q = (1.0 - p) / (twod - 1)
            acc = 0.0
            v = twod - 1
            for j in range(twod):
                acc += (counts[j] * p + (n - counts[j]) * q) * inv_n
                if u < acc:
                    v = j
                    break
        if v < d:
            axis, sgn = v, 1
        else:
            axis, sgn = v - d, -1
        S[axis] += sgn
        counts[v] += 1
        n1 = n + 1
        for j in range(d):
            x = float(S[j])
            y = x - Gc[j]
            t = Gs[j] + y
            Gc[j] = (t - Gs[j]) - y
            Gs[j] = t
        inv_k = 1.0 / n1
        for j in range(d):
            g[j] = Gs[j] * inv_k
        if do_qsl_diff:
            w = inv_k * inv_k
            for i in range(d):
                for jj in range(d):
                    qd[i, jj] += g[i] * g[jj] * w
        if do_qsl_crit and n1 >= 2:
            lk = np.log(n1)
            w = (inv_k / lk) * (inv_k / lk)
            for i in range(d):
                for jj in range(d):
                    qc[i, jj] += g[i] * g[jj] * w
        if (do_lil_diff or do_lil_crit) and n1 >= 16:
            g2 = 0.0
            for j in range(d):
                g2 += g[j] * g[j]
            lk = np.log(n1)
            llk = np.log(lk)
            if do_lil_diff:
                stat = g2 / (2.0 * n1 * llk)
                if stat > lil_d:
                    lil_d = stat
            if do_lil_crit:
                lll = np.log(llk)
                f = lll if lll > 1.0 else 1.0
                stat = g2 / (2.0 * n1 * lk * f)
                if stat > lil_c:
                    lil_c = stat
        if h < n_h and n1 == horizons[h]:
            for i in range(d):
                g_snap[h, i] = g[i]
                for jj in range(d):
                    qsl_d_snap[h, i, jj] = qd[i, jj]
                    qsl_c_snap[h, i, jj] = qc[i, jj]
            lil_d_snap[h] = lil_d
            lil_c_snap[h] = lil_c
            h += 1
