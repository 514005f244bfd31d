"""Jitted kernels: treap ensemble, Gillespie event loop, initial samplers.

The particle ensemble lives in flat preallocated arrays (one slot per treap
node); the event loop is resumable, so the Python driver can grow the arrays
and re-enter mid-trajectory.  All randomness comes from the per-trajectory
xoshiro256** stream (see rng.py for the reference implementation).

Status codes returned by the loop kernels:
    0 trajectory finished      1 node arrays full (grow and resume)
    2 particle cap exceeded    3 internal invariant violated
    4 paused at max_events
"""

import math

import numpy as np
from numba import njit

U64 = np.uint64
_SM_GAMMA = U64(0x9E3779B97F4A7C15)
_SM_M1 = U64(0xBF58476D1CE4E5B9)
_SM_M2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

SITES_PER_WORD = 21
MAXD = 320          # path stack depth; ~10x the expected treap height
REJ_CAP = 256       # rejection-sampling tries before the exact group scan

# st_i slots
ROOT, NALLOC, FREETOP, GI, EVENTS, SIGNED, BRANCH, TRAJ, RESUME = range(9)
ST_I_LEN = 9


# ---------------------------------------------------------------------------
# RNG

@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _SM_M1
    z = (z ^ (z >> U64(27))) * _SM_M2
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True)
def seed_stream(rng, base_seed, idx):
    s = U64(base_seed) + U64(idx) * _SM_GAMMA
    for i in range(4):
        s = s + _SM_GAMMA
        rng[i] = _mix64(s)
    if rng[0] | rng[1] | rng[2] | rng[3] == U64(0):
        rng[0] = U64(1)


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True, nogil=True, inline="always")
def rng_next(rng):
    result = _rotl(rng[1] * U64(5), U64(7)) * U64(9)
    t = rng[1] << U64(17)
    rng[2] ^= rng[0]
    rng[3] ^= rng[1]
    rng[1] ^= rng[2]
    rng[0] ^= rng[3]
    rng[2] ^= t
    rng[3] = _rotl(rng[3], U64(45))
    return result


@njit(cache=True, nogil=True, inline="always")
def rng_u01(rng):
    return float(rng_next(rng) >> U64(11)) * _INV53


# ---------------------------------------------------------------------------
# Packed configuration keys (3 bits per site, int64 words)

@njit(cache=True, nogil=True, inline="always")
def _shift(site):
    return 3 * (SITES_PER_WORD - 1 - site % SITES_PER_WORD)


@njit(cache=True, nogil=True, inline="always")
def key_site(key, site):
    return (key[site // SITES_PER_WORD] >> _shift(site)) & 7


@njit(cache=True, nogil=True, inline="always")
def key_set_site(key, site, st):
    w = site // SITES_PER_WORD
    sh = _shift(site)
    key[w] = (key[w] & ~(7 << sh)) | (st << sh)


@njit(cache=True, nogil=True)
def pack_key(sbuf, key):
    for w in range(key.shape[0]):
        key[w] = 0
    for i in range(sbuf.shape[0]):
        key_set_site(key, i, sbuf[i])


@njit(cache=True, nogil=True, inline="always")
def _node_site(keys, n, site):
    return (keys[n, site // SITES_PER_WORD] >> _shift(site)) & 7


@njit(cache=True, nogil=True, inline="always")
def _cmp_key(keys, n, tmp):
    """-1 if node key < tmp, 0 if equal, +1 if node key > tmp."""
    for w in range(tmp.shape[0]):
        a = keys[n, w]
        b = tmp[w]
        if a < b:
            return -1
        if a > b:
            return 1
    return 0


# ---------------------------------------------------------------------------
# Treap primitives

@njit(cache=True, nogil=True, inline="always")
def _pull(n, child, nb, no, tau, agg_n, agg_p, agg_r):
    cn = 1
    cp = nb[n] + no[n]
    cr = tau[n] * (nb[n] + no[n])
    l = child[n, 0]
    if l >= 0:
        cn += agg_n[l]
        cp += agg_p[l]
        cr += agg_r[l]
    r = child[n, 1]
    if r >= 0:
        cn += agg_n[r]
        cp += agg_p[r]
        cr += agg_r[r]
    agg_n[n] = cn
    agg_p[n] = cp
    agg_r[n] = cr


@njit(cache=True, nogil=True)
def _find(keys, child, st_i, tmp, path, pdir):
    """Descend by key; returns (node, depth, found).

    If found, path[depth-1] is the node.  If not, node = -1 and
    path[:depth] are the ancestors of the insertion point.
    """
    n = st_i[ROOT]
    d = 0
    while n >= 0:
        if d >= MAXD - 1:
            return -2, d, False
        path[d] = n
        c = _cmp_key(keys, n, tmp)
        if c == 0:
            pdir[d] = 0
            return n, d + 1, True
        dr = 0 if c > 0 else 1
        pdir[d] = dr
        d += 1
        n = child[n, dr]
    return -1, d, False


@njit(cache=True, nogil=True)
def _insert(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r, freelist,
            st_i, tmp, path, pdir, depth, pr, tau_val, nbv, nov):
    """Insert a new node below path[:depth]; caller guarantees free space."""
    if st_i[FREETOP] > 0:
        st_i[FREETOP] -= 1
        n = freelist[st_i[FREETOP]]
    else:
        n = st_i[NALLOC]
        st_i[NALLOC] += 1
    for w in range(tmp.shape[0]):
        keys[n, w] = tmp[w]
    child[n, 0] = -1
    child[n, 1] = -1
    prio[n] = pr
    nb[n] = nbv
    no[n] = nov
    tau[n] = tau_val
    _pull(n, child, nb, no, tau, agg_n, agg_p, agg_r)
    if depth == 0:
        st_i[ROOT] = n
        return n
    child[path[depth - 1], pdir[depth - 1]] = n
    d = depth
    while d > 0 and prio[n] > prio[path[d - 1]]:
        p = path[d - 1]
        dr = pdir[d - 1]
        child[p, dr] = child[n, 1 - dr]
        child[n, 1 - dr] = p
        _pull(p, child, nb, no, tau, agg_n, agg_p, agg_r)
        _pull(n, child, nb, no, tau, agg_n, agg_p, agg_r)
        d -= 1
        if d == 0:
            st_i[ROOT] = n
        else:
            child[path[d - 1], pdir[d - 1]] = n
    for i in range(d - 1, -1, -1):
        _pull(path[i], child, nb, no, tau, agg_n, agg_p, agg_r)
    return n


@njit(cache=True, nogil=True)
def _update_path(child, nb, no, tau, agg_n, agg_p, agg_r, path, depth):
    for i in range(depth - 1, -1, -1):
        _pull(path[i], child, nb, no, tau, agg_n, agg_p, agg_r)


@njit(cache=True, nogil=True)
def _delete(child, prio, nb, no, tau, agg_n, agg_p, agg_r, freelist,
            st_i, path, pdir, depth):
    """Remove path[depth-1] (rotate to leaf, splice).  Returns 0, or 3 on
    path-stack overflow."""
    n = path[depth - 1]
    d = depth - 1
    while child[n, 0] >= 0 or child[n, 1] >= 0:
        if d + 1 >= MAXD:
            return 3
        l = child[n, 0]
        r = child[n, 1]
        if l < 0:
            c, cd = r, 1
        elif r < 0:
            c, cd = l, 0
        elif prio[l] > prio[r]:
            c, cd = l, 0
        else:
            c, cd = r, 1
        child[n, cd] = child[c, 1 - cd]
        child[c, 1 - cd] = n
        _pull(n, child, nb, no, tau, agg_n, agg_p, agg_r)
        _pull(c, child, nb, no, tau, agg_n, agg_p, agg_r)
        if d == 0:
            st_i[ROOT] = c
        else:
            child[path[d - 1], pdir[d - 1]] = c
        path[d] = c
        pdir[d] = 1 - cd
        d += 1
    if d == 0:
        st_i[ROOT] = -1
    else:
        child[path[d - 1], pdir[d - 1]] = -1
    freelist[st_i[FREETOP]] = n
    st_i[FREETOP] += 1
    for i in range(d - 1, -1, -1):
        _pull(path[i], child, nb, no, tau, agg_n, agg_p, agg_r)
    return 0


@njit(cache=True, nogil=True)
def _select(child, nb, no, tau, agg_n, agg_p, agg_r, st_i, path, pdir, r):
    """Descend by cumulative escape rate; returns (node, depth, species, r_local)
    with species 1 = bullet, 0 = circle.  node = -1 on aggregate drift."""
    n = st_i[ROOT]
    d = 0
    while n >= 0 and d < MAXD:
        path[d] = n
        l = child[n, 0]
        rt = child[n, 1]
        lr = agg_r[l] if l >= 0 else 0.0
        rr = agg_r[rt] if rt >= 0 else 0.0
        own = tau[n] * (nb[n] + no[n])
        if r < lr and lr > 0.0:
            pdir[d] = 0
            d += 1
            n = l
            continue
        r -= lr
        if (r < own and own > 0.0) or (rr <= 0.0 and own > 0.0):
            pdir[d] = 0
            d += 1
            if r >= own:
                r = own * 0.5
            if nb[n] > 0 and (no[n] == 0 or r < tau[n] * nb[n]):
                return n, d, 1, r
            return n, d, 0, r
        if rr > 0.0:
            r -= own
            if r >= rr:
                r = rr * 0.5
            pdir[d] = 1
            d += 1
            n = rt
            continue
        if lr > 0.0:
            pdir[d] = 0
            d += 1
            r = lr * 0.5
            n = l
            continue
        return -1, d, 0, 0.0
    return -1, d, 0, 0.0


# ---------------------------------------------------------------------------
# Local rate tables

@njit(cache=True, nogil=True, inline="always")
def _group_local(keys, n, g, grp_s1, grp_s2):
    s2 = grp_s2[g]
    st = _node_site(keys, n, grp_s1[g])
    if s2 >= 0:
        return 6 * st + _node_site(keys, n, s2)
    return st


@njit(cache=True, nogil=True)
def tau_full(key, grp_s1, grp_s2, grp_mat, mat_coloff, colsum):
    t = 0.0
    for g in range(grp_s1.shape[0]):
        st = key_site(key, grp_s1[g])
        if grp_s2[g] >= 0:
            st = 6 * st + key_site(key, grp_s2[g])
        t += colsum[mat_coloff[grp_mat[g]] + st]
    return t


@njit(cache=True, nogil=True)
def _tau_delta(keys, n_src, tmp, site, other_changed,
               grp_s1, grp_s2, grp_mat, mat_coloff, colsum,
               site_grp_ptr, site_grp_idx):
    """Escape-rate change from groups adjacent to one changed site.

    Groups also containing other_changed are skipped (counted by the caller
    from that site's own pass)."""
    d = 0.0
    for e in range(site_grp_ptr[site], site_grp_ptr[site + 1]):
        g = site_grp_idx[e]
        s1 = grp_s1[g]
        s2 = grp_s2[g]
        if other_changed >= 0 and (s1 == other_changed or s2 == other_changed):
            continue
        old = _node_site(keys, n_src, s1)
        new = key_site(tmp, s1)
        if s2 >= 0:
            old = 6 * old + _node_site(keys, n_src, s2)
            new = 6 * new + key_site(tmp, s2)
        off = mat_coloff[grp_mat[g]]
        d += colsum[off + new] - colsum[off + old]
    return d


# ---------------------------------------------------------------------------
# Observable trackers

@njit(cache=True, nogil=True, inline="always")
def _trk_prod(keys, n, trk_ptr, trk_site, trk_axis, t):
    p = 1
    for e in range(trk_ptr[t], trk_ptr[t + 1]):
        st = _node_site(keys, n, trk_site[e])
        if (st >> 1) != trk_axis[e]:
            return 0
        if st & 1:
            p = -p
    return p


@njit(cache=True, nogil=True, inline="always")
def _trk_apply(keys, n, trk_ptr, trk_site, trk_axis, trk_sum, db, do):
    w = db - do
    if w == 0:
        return
    for t in range(trk_sum.shape[0]):
        trk_sum[t] += w * _trk_prod(keys, n, trk_ptr, trk_site, trk_axis, t)


# ---------------------------------------------------------------------------
# Debug validation

@njit(cache=True, nogil=True)
def validate_ensemble(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r,
                      st_i, grp_s1, grp_s2, grp_mat, mat_coloff, colsum,
                      trk_ptr, trk_site, trk_axis, trk_sum, stack, tmp):
    """Full structural check; returns 0 if every invariant holds."""
    root = st_i[ROOT]
    if root < 0:
        return 0 if st_i[SIGNED] == 0 else 1
    # local aggregate / heap / occupancy checks via preorder walk
    sp = 0
    stack[sp] = root
    sp += 1
    count = 0
    psum = 0
    ssum = 0
    while sp > 0:
        sp -= 1
        n = stack[sp]
        count += 1
        if nb[n] < 0 or no[n] < 0 or nb[n] + no[n] == 0:
            return 2
        if nb[n] > 0 and no[n] > 0:
            return 3
        psum += nb[n] + no[n]
        ssum += nb[n] - no[n]
        cn = 1
        cp = nb[n] + no[n]
        cr = tau[n] * (nb[n] + no[n])
        for side in range(2):
            c = child[n, side]
            if c >= 0:
                if prio[c] > prio[n]:
                    return 4
                cn += agg_n[c]
                cp += agg_p[c]
                cr += agg_r[c]
                if sp >= stack.shape[0]:
                    return 9
                stack[sp] = c
                sp += 1
        if agg_n[n] != cn or agg_p[n] != cp:
            return 5
        if abs(agg_r[n] - cr) > 1e-8 * (1.0 + abs(cr)):
            return 5
        # stored escape rate vs recomputation from the tables
        for w in range(tmp.shape[0]):
            tmp[w] = keys[n, w]
        tf = tau_full(tmp, grp_s1, grp_s2, grp_mat, mat_coloff, colsum)
        if abs(tau[n] - tf) > 1e-8 * (1.0 + abs(tf)):
            return 6
    if count != agg_n[root] or psum != agg_p[root] or ssum != st_i[SIGNED]:
        return 7
    # key order via iterative in-order walk
    sp = 0
    cur = root
    have_prev = False
    pw0 = 0
    while sp > 0 or cur >= 0:
        while cur >= 0:
            if sp >= stack.shape[0]:
                return 9
            stack[sp] = cur
            sp += 1
            cur = child[cur, 0]
        sp -= 1
        cur = stack[sp]
        if have_prev:
            # compare previous key (in tmp) with current
            c = _cmp_key(keys, cur, tmp)
            if c <= 0:
                return 8
        for w in range(tmp.shape[0]):
            tmp[w] = keys[cur, w]
        have_prev = True
        pw0 += 1
        cur = child[cur, 1]
    # tracker sums vs recomputation
    for t in range(trk_sum.shape[0]):
        s = 0.0
        sp = 0
        stack[sp] = root
        sp += 1
        while sp > 0:
            sp -= 1
            n = stack[sp]
            s += (nb[n] - no[n]) * _trk_prod(keys, n, trk_ptr, trk_site,
                                             trk_axis, t)
            for side in range(2):
                c = child[n, side]
                if c >= 0:
                    stack[sp] = c
                    sp += 1
        if abs(s - trk_sum[t]) > 1e-8 * (1.0 + abs(s)):
            return 10
    return 0


# ---------------------------------------------------------------------------
# Event loop

@njit(cache=True, nogil=True)
def advance(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r, freelist,
            grp_s1, grp_s2, grp_mat, mat_coloff, colsum,
            colptr, ent_tgt, ent_abs, ent_sign, m_max,
            site_grp_ptr, site_grp_idx,
            trk_ptr, trk_site, trk_axis, trk_sum,
            st_i, st_f, rng, grid, rec_omega, rec_occ, rec_trk,
            t_max, omega_max, max_events, debug,
            path, pdir, tmp, dstack):
    G = grid.shape[0]
    cap = keys.shape[0]
    n_groups = grp_s1.shape[0]
    while True:
        if max_events >= 0 and st_i[EVENTS] >= max_events:
            return 4
        root = st_i[ROOT]
        tau_tot = agg_r[root] if root >= 0 else 0.0
        if tau_tot <= 0.0:
            while st_i[GI] < G:
                i = st_i[GI]
                rec_omega[i] = agg_p[root] if root >= 0 else 0
                rec_occ[i] = agg_n[root] if root >= 0 else 0
                for t in range(trk_sum.shape[0]):
                    rec_trk[i, t] = trk_sum[t]
                st_i[GI] += 1
            return 0
        if (cap - st_i[NALLOC]) + st_i[FREETOP] < 2:
            return 1
        u = rng_u01(rng)
        dt = -math.log1p(-u) / tau_tot
        t_new = st_f[0] + dt
        while st_i[GI] < G and grid[st_i[GI]] < t_new:
            i = st_i[GI]
            rec_omega[i] = agg_p[root]
            rec_occ[i] = agg_n[root]
            for t in range(trk_sum.shape[0]):
                rec_trk[i, t] = trk_sum[t]
            st_i[GI] += 1
        if t_new > t_max:
            while st_i[GI] < G:
                i = st_i[GI]
                rec_omega[i] = agg_p[root]
                rec_occ[i] = agg_n[root]
                for t in range(trk_sum.shape[0]):
                    rec_trk[i, t] = trk_sum[t]
                st_i[GI] += 1
            return 0
        st_f[0] = t_new

        # --- pick particle (P1)
        n_src, d_src, sp, _rl = _select(child, nb, no, tau, agg_n, agg_p,
                                        agg_r, st_i, path, pdir,
                                        rng_u01(rng) * tau_tot)
        if n_src < 0:
            return 3
        tau_src = tau[n_src]

        # --- pick interaction group: rejection against the max column mass,
        # with an exact linear scan as a rare fallback
        g = -1
        src_loc = 0
        for _ in range(REJ_CAP):
            cand = int(rng_u01(rng) * n_groups)
            if cand >= n_groups:
                cand = n_groups - 1
            loc = _group_local(keys, n_src, cand, grp_s1, grp_s2)
            m = colsum[mat_coloff[grp_mat[cand]] + loc]
            if m > 0.0 and rng_u01(rng) * m_max <= m:
                g = cand
                src_loc = loc
                break
        if g < 0:
            tot = 0.0
            for cand in range(n_groups):
                loc = _group_local(keys, n_src, cand, grp_s1, grp_s2)
                tot += colsum[mat_coloff[grp_mat[cand]] + loc]
            if tot <= 0.0:
                return 3
            r2 = rng_u01(rng) * tot
            for cand in range(n_groups):
                loc = _group_local(keys, n_src, cand, grp_s1, grp_s2)
                m = colsum[mat_coloff[grp_mat[cand]] + loc]
                r2 -= m
                if r2 < 0.0 or cand == n_groups - 1:
                    if m > 0.0:
                        g = cand
                        src_loc = loc
                        break
            if g < 0:
                return 3

        # --- pick destination + sign within the group column (P2)
        coff = mat_coloff[grp_mat[g]] + src_loc
        mcol = colsum[coff]
        r3 = rng_u01(rng) * mcol
        e = colptr[coff]
        last = colptr[coff + 1] - 1
        while e < last and r3 >= ent_abs[e]:
            r3 -= ent_abs[e]
            e += 1
        dst_loc = ent_tgt[e]
        sgn = ent_sign[e]

        # --- destination key and its escape rate
        for w in range(tmp.shape[0]):
            tmp[w] = keys[n_src, w]
        s1 = grp_s1[g]
        s2 = grp_s2[g]
        if s2 >= 0:
            key_set_site(tmp, s1, dst_loc // 6)
            key_set_site(tmp, s2, dst_loc % 6)
            ch1 = (dst_loc // 6) != (src_loc // 6)
            ch2 = (dst_loc % 6) != (src_loc % 6)
        else:
            key_set_site(tmp, s1, dst_loc)
            ch1 = True
            ch2 = False
        tau_tgt = tau_src
        if ch1:
            tau_tgt += _tau_delta(keys, n_src, tmp, s1, -1,
                                  grp_s1, grp_s2, grp_mat, mat_coloff, colsum,
                                  site_grp_ptr, site_grp_idx)
        if ch2:
            tau_tgt += _tau_delta(keys, n_src, tmp, s2, s1 if ch1 else -1,
                                  grp_s1, grp_s2, grp_mat, mat_coloff, colsum,
                                  site_grp_ptr, site_grp_idx)
        if tau_tgt < 0.0:
            tau_tgt = 0.0

        # --- update the source node
        if sgn > 0:
            if sp == 1:
                nb[n_src] -= 1
                _trk_apply(keys, n_src, trk_ptr, trk_site, trk_axis, trk_sum,
                           -1, 0)
            else:
                no[n_src] -= 1
                _trk_apply(keys, n_src, trk_ptr, trk_site, trk_axis, trk_sum,
                           0, -1)
            if nb[n_src] == 0 and no[n_src] == 0:
                if _delete(child, prio, nb, no, tau, agg_n, agg_p, agg_r,
                           freelist, st_i, path, pdir, d_src) != 0:
                    return 3
            else:
                _update_path(child, nb, no, tau, agg_n, agg_p, agg_r,
                             path, d_src)
            tgt_sp = sp
        else:
            st_i[BRANCH] += 1
            if sp == 1:
                nb[n_src] += 1
                _trk_apply(keys, n_src, trk_ptr, trk_site, trk_axis, trk_sum,
                           1, 0)
            else:
                no[n_src] += 1
                _trk_apply(keys, n_src, trk_ptr, trk_site, trk_axis, trk_sum,
                           0, 1)
            _update_path(child, nb, no, tau, agg_n, agg_p, agg_r, path, d_src)
            tgt_sp = 1 - sp

        # --- add tgt_sp at the destination, annihilating if possible
        n_t, d_t, found = _find(keys, child, st_i, tmp, path, pdir)
        if n_t == -2:
            return 3
        if found:
            opp = no[n_t] if tgt_sp == 1 else nb[n_t]
            if opp > 0:
                if tgt_sp == 1:
                    no[n_t] -= 1
                    _trk_apply(keys, n_t, trk_ptr, trk_site, trk_axis,
                               trk_sum, 0, -1)
                else:
                    nb[n_t] -= 1
                    _trk_apply(keys, n_t, trk_ptr, trk_site, trk_axis,
                               trk_sum, -1, 0)
                if nb[n_t] == 0 and no[n_t] == 0:
                    if _delete(child, prio, nb, no, tau, agg_n, agg_p, agg_r,
                               freelist, st_i, path, pdir, d_t) != 0:
                        return 3
                else:
                    _update_path(child, nb, no, tau, agg_n, agg_p, agg_r,
                                 path, d_t)
            else:
                if tgt_sp == 1:
                    nb[n_t] += 1
                    _trk_apply(keys, n_t, trk_ptr, trk_site, trk_axis,
                               trk_sum, 1, 0)
                else:
                    no[n_t] += 1
                    _trk_apply(keys, n_t, trk_ptr, trk_site, trk_axis,
                               trk_sum, 0, 1)
                _update_path(child, nb, no, tau, agg_n, agg_p, agg_r,
                             path, d_t)
        else:
            n_t = _insert(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r,
                          freelist, st_i, tmp, path, pdir, d_t,
                          rng_next(rng) >> U64(1), tau_tgt,
                          1 if tgt_sp == 1 else 0, 0 if tgt_sp == 1 else 1)
            if tgt_sp == 1:
                _trk_apply(keys, n_t, trk_ptr, trk_site, trk_axis, trk_sum,
                           1, 0)
            else:
                _trk_apply(keys, n_t, trk_ptr, trk_site, trk_axis, trk_sum,
                           0, 1)

        st_i[EVENTS] += 1
        if debug:
            code = validate_ensemble(keys, child, prio, nb, no, tau, agg_n,
                                     agg_p, agg_r, st_i, grp_s1, grp_s2,
                                     grp_mat, mat_coloff, colsum, trk_ptr,
                                     trk_site, trk_axis, trk_sum, dstack, tmp)
            if code != 0:
                return 3
        root = st_i[ROOT]
        if root < 0 or agg_p[root] > omega_max:
            return 2


# ---------------------------------------------------------------------------
# Initial-state samplers

# branch tables for the Bell-pair sampler: per branch, the candidate
# (state_j, state_l) orientations; states use (x+)=0 .. (z-)=5
_BELL_SET = np.array([
    [[0, 0], [1, 1], [2, 3], [3, 2]],   # weight (1 + cos)/9
    [[0, 1], [1, 0], [2, 2], [3, 3]],   # weight (1 - cos)/9
    [[0, 3], [3, 0], [1, 2], [2, 1]],   # weight (1 + sin)/9
    [[0, 2], [2, 0], [1, 3], [3, 1]],   # weight (1 - sin)/9
], dtype=np.int64)
_BELL_ZZ = np.array([[4, 4], [5, 5]], dtype=np.int64)
_BELL_MIXED_AXES = np.array([[0, 2], [2, 0], [1, 2], [2, 1]], dtype=np.int64)


@njit(cache=True, nogil=True, inline="always")
def _sample_site_product(rng, base_state):
    u = rng_u01(rng)
    if u < 1.0 / 3.0:
        return base_state
    ax = base_state >> 1
    k = 0 if rng_u01(rng) < 0.5 else 1
    new_ax = (ax + 1 + k) % 3
    sg = 0 if rng_u01(rng) < 0.5 else 1
    return 2 * new_ax + sg


@njit(cache=True, nogil=True)
def sample_product(rng, base, sbuf):
    for i in range(base.shape[0]):
        sbuf[i] = _sample_site_product(rng, base[i])


@njit(cache=True, nogil=True)
def sample_bell(rng, base, paired, pair_j, pair_l, cos_t, sin_t, sbuf):
    for k in range(pair_j.shape[0]):
        c = cos_t[k]
        s = sin_t[k]
        u = rng_u01(rng) * 9.0
        if u < 1.0 + c:
            row = _BELL_SET[0]
        elif u < 2.0:
            row = _BELL_SET[1]
        elif u < 3.0 + s:
            row = _BELL_SET[2]
        elif u < 4.0:
            row = _BELL_SET[3]
        elif u < 5.0:
            j = 0 if rng_u01(rng) < 0.5 else 1
            sbuf[pair_j[k]] = _BELL_ZZ[j, 0]
            sbuf[pair_l[k]] = _BELL_ZZ[j, 1]
            continue
        else:
            a = int(rng_u01(rng) * 4.0)
            if a >= 4:
                a = 3
            sj = 0 if rng_u01(rng) < 0.5 else 1
            sl = 0 if rng_u01(rng) < 0.5 else 1
            sbuf[pair_j[k]] = 2 * _BELL_MIXED_AXES[a, 0] + sj
            sbuf[pair_l[k]] = 2 * _BELL_MIXED_AXES[a, 1] + sl
            continue
        j = int(rng_u01(rng) * 4.0)
        if j >= 4:
            j = 3
        sbuf[pair_j[k]] = row[j, 0]
        sbuf[pair_l[k]] = row[j, 1]
    for i in range(base.shape[0]):
        if paired[i] == 0:
            sbuf[i] = _sample_site_product(rng, base[i])


# ---------------------------------------------------------------------------
# Chunk driver: run a batch of trajectories, accumulating moments

@njit(cache=True, nogil=True)
def run_chunk(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r, freelist,
              grp_s1, grp_s2, grp_mat, mat_coloff, colsum,
              colptr, ent_tgt, ent_abs, ent_sign, m_max,
              site_grp_ptr, site_grp_idx,
              trk_ptr, trk_site, trk_axis, trk_sum, trk_pref,
              init_kind, base, paired, pair_j, pair_l, cos_t, sin_t, sbuf,
              st_i, st_f, rng, grid, rec_omega, rec_occ, rec_trk,
              t_max, omega_max, debug,
              base_seed, traj_start, n_traj,
              acc_cnt, acc_om, acc_om2, acc_occ, acc_trk, acc_trk2,
              totals, path, pdir, tmp, dstack):
    """Statuses: 0 chunk done, 1 grow-and-resume, 3 invariant failure."""
    G = grid.shape[0]
    ti = st_i[TRAJ]
    while ti < n_traj:
        if st_i[RESUME] == 0:
            st_i[ROOT] = -1
            st_i[NALLOC] = 0
            st_i[FREETOP] = 0
            st_i[GI] = 0
            st_i[EVENTS] = 0
            st_i[BRANCH] = 0
            st_i[SIGNED] = 1
            st_f[0] = 0.0
            for t in range(trk_sum.shape[0]):
                trk_sum[t] = 0.0
            seed_stream(rng, base_seed, traj_start + ti)
            if init_kind == 0:
                sample_product(rng, base, sbuf)
            else:
                sample_bell(rng, base, paired, pair_j, pair_l, cos_t, sin_t,
                            sbuf)
            pack_key(sbuf, tmp)
            t0 = tau_full(tmp, grp_s1, grp_s2, grp_mat, mat_coloff, colsum)
            n0, d0, _f = _find(keys, child, st_i, tmp, path, pdir)
            n0 = _insert(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r,
                         freelist, st_i, tmp, path, pdir, d0,
                         rng_next(rng) >> U64(1), t0, 1, 0)
            _trk_apply(keys, n0, trk_ptr, trk_site, trk_axis, trk_sum, 1, 0)
        st_i[RESUME] = 0
        status = advance(keys, child, prio, nb, no, tau, agg_n, agg_p, agg_r,
                         freelist, grp_s1, grp_s2, grp_mat, mat_coloff,
                         colsum, colptr, ent_tgt, ent_abs, ent_sign, m_max,
                         site_grp_ptr, site_grp_idx,
                         trk_ptr, trk_site, trk_axis, trk_sum,
                         st_i, st_f, rng, grid, rec_omega, rec_occ, rec_trk,
                         t_max, omega_max, -1, debug,
                         path, pdir, tmp, dstack)
        if status == 1:
            st_i[TRAJ] = ti
            st_i[RESUME] = 1
            return 1
        if status == 3:
            return 3
        rc = st_i[GI]
        for i in range(rc):
            acc_cnt[i] += 1
            acc_om[i] += rec_omega[i]
            acc_om2[i] += rec_omega[i] * rec_omega[i]
            acc_occ[i] += rec_occ[i]
            for t in range(trk_sum.shape[0]):
                v = rec_trk[i, t] * trk_pref[t]
                acc_trk[i, t] += v
                acc_trk2[i, t] += v * v
        totals[0] += st_i[EVENTS]
        totals[1] += st_i[BRANCH]
        if status == 2:
            totals[2] += 1
        ti += 1
    st_i[TRAJ] = ti
    return 0
