"""Compiled inner loops for the samplers and the enumeration oracle.

State layout shared by every kernel (all indices 0-based, group labels
0..k-1 with group 0 implicit):

- ``pat``:   (L, n) int64; bit r-1 of ``pat[ell, i]`` is node i's membership
  of group r in layer ell
- ``t, m``:  (k_max, L) int64; pair / adjacent-pair counts per
  highest-common-group class
- ``n1``:    (k_max, L) int64; members per stored group and layer (row 0 unused)
- ``c00, c11``: (k_max, L) int64; stay counts for the transition *into*
  column ell (column 0 unused)
- ``S``:     (k_max,) int64; total members per stored group over all layers
- ``kbox``:  (1,) int64; current group count

Tables: ``logj[k1, k2]`` = floored log J values, ``lg[x]`` = lgamma(x).
Acceptance deltas touch only the statistics cells a move can change; the
first-layer and group-count priors never enter a delta because the proposal
asymmetries account for them.
"""

import numpy as np
from numba import njit

NOOP = 0
ADD_NODE = 1
REMOVE_NODE = 2
ADD_GROUP = 3
REMOVE_GROUP = 4
MULTI_SWAP = 5
N_MOVE_KINDS = 6

MODE_MAIN = 0
MODE_FIXED_K = 1
MODE_NO_MULTI = 2

# no-op provenance codes (move_out[7])
REASON_NONE = 0
REASON_NO_GROUPS = 1
REASON_LAYER1_SATURATED = 2
REASON_LAYER1_EMPTY = 3
REASON_K_CAP = 4
REASON_NO_LAYER = 5
REASON_ADD_OFF_LAYER = 6


@njit(cache=True, inline="always")
def _hcg(a):
    h = 0
    while a:
        a >>= 1
        h += 1
    return h


@njit(cache=True, inline="always")
def _ll_cell(t, m, lg):
    return lg[m + 1] + lg[t - m + 1] - lg[t + 2]


@njit(cache=True, inline="always")
def _lbinom(a, b, lg):
    return lg[a + 1] - lg[b + 1] - lg[a - b + 1]


@njit(cache=True, inline="always")
def _trans_val(n1prev, c00, c11, n, logj, lg):
    n0 = n - n1prev
    return (
        logj[n0 - c00, n0]
        - _lbinom(n0, c00, lg)
        + logj[n1prev - c11, n1prev]
        - _lbinom(n1prev, c11, lg)
    )


@njit(cache=True)
def recompute_stats(adj, pat, k, t, m, n1, c00, c11, S):
    """Full from-scratch fill of all sufficient statistics arrays."""
    L, n = pat.shape
    t[:] = 0
    m[:] = 0
    n1[:] = 0
    c00[:] = 0
    c11[:] = 0
    S[:] = 0
    for ell in range(L):
        for i in range(n - 1):
            pi = pat[ell, i]
            for j in range(i + 1, n):
                h = _hcg(pi & pat[ell, j])
                t[h, ell] += 1
                if adj[ell, i, j]:
                    m[h, ell] += 1
    for r in range(1, k):
        bit = np.int64(1) << (r - 1)
        for ell in range(L):
            cnt = 0
            for i in range(n):
                if pat[ell, i] & bit:
                    cnt += 1
            n1[r, ell] = cnt
            S[r] += cnt
        for ell in range(1, L):
            a00 = 0
            a11 = 0
            for i in range(n):
                bp = pat[ell - 1, i] & bit
                bc = pat[ell, i] & bit
                if bp and bc:
                    a11 += 1
                elif (not bp) and (not bc):
                    a00 += 1
            c00[r, ell] = a00
            c11[r, ell] = a11


@njit(cache=True)
def state_log_lik(t, m, k, lg):
    L = t.shape[1]
    v = 0.0
    for ell in range(L):
        for r in range(k):
            v += _ll_cell(t[r, ell], m[r, ell], lg)
    return v


@njit(cache=True)
def state_log_f(n1, c00, c11, k, n, logj, lg):
    L = n1.shape[1]
    v = 0.0
    for ell in range(1, L):
        for r in range(1, k):
            v += _trans_val(n1[r, ell - 1], c00[r, ell], c11[r, ell], n, logj, lg)
    return v


@njit(cache=True)
def state_log_first_layer(n1, k, n, lg):
    v = 0.0
    for r in range(1, k):
        v += lg[n1[r, 0] + 1] + lg[n - n1[r, 0] + 1] - lg[n + 2]
    return v


@njit(cache=True)
def state_log_joint(t, m, n1, c00, c11, k, n, logj, lg):
    return (
        -1.0
        - lg[k]
        + state_log_lik(t, m, k, lg)
        + state_log_first_layer(n1, k, n, lg)
        + state_log_f(n1, c00, c11, k, n, logj, lg)
    )


@njit(cache=True, inline="always")
def _pick_node(pat, layer, r, want_member, target):
    """Index of the target-th node in ``layer`` with the given membership."""
    bit = np.int64(1) << (r - 1)
    seen = 0
    for i in range(pat.shape[1]):
        has = (pat[layer, i] & bit) != 0
        if has == want_member:
            if seen == target:
                return i
            seen += 1
    return -1


@njit(cache=True)
def _draw_move(pat, n1, S, kbox, mode, p_multi, restrict_l1, k_max, rng, move_out):
    """Fill move_out[0..7] = kind, r, layer, node, pat_a, pat_b, 0, reason."""
    L, n = pat.shape
    k = kbox[0]
    kind = NOOP
    r = -1
    layer = -1
    node = -1
    pa = -1
    pb = -1
    reason = REASON_NONE

    branch_multi = False
    branch_add = False
    if mode == MODE_MAIN:
        if rng.random() < p_multi:
            branch_multi = True
        elif rng.random() >= 1.0 - 1.0 / (2.0 * k * (n + 1.0)):
            branch_add = True
    elif mode == MODE_NO_MULTI:
        if rng.random() >= 1.0 - 1.0 / (2.0 * k * (n + 1.0)):
            branch_add = True

    if branch_multi:
        if k - 1 <= 62:
            width = np.int64(1) << (k - 1)
            pa = int(rng.integers(0, width))
            pb = int(rng.integers(0, width))
        else:  # compose two draws; a single one would overflow int64
            hi_width = np.int64(1) << (k - 63)
            pa = int(rng.integers(0, np.int64(1) << 62)) | (int(rng.integers(0, hi_width)) << 62)
            pb = int(rng.integers(0, np.int64(1) << 62)) | (int(rng.integers(0, hi_width)) << 62)
        if restrict_l1:
            if L < 2:
                reason = REASON_NO_LAYER
            else:
                kind = MULTI_SWAP
                layer = 1 + int(rng.integers(0, L - 1))
        else:
            kind = MULTI_SWAP
            layer = int(rng.integers(0, L))
    elif branch_add:
        # Group bookkeeping moves are first-layer moves: like the removal
        # path, an addition only materializes when the uniform layer draw
        # lands on layer 0, so the forward and reverse proposal probabilities
        # carry the same 1/L factor.
        layer = int(rng.integers(0, L))
        if layer != 0:
            reason = REASON_ADD_OFF_LAYER
            layer = -1
        elif k >= k_max:
            layer = -1
            reason = REASON_K_CAP
        else:
            layer = -1
            kind = ADD_GROUP
            r = 1 + int(rng.integers(0, k))
    else:
        layer = int(rng.integers(0, L))
        if k == 1:
            reason = REASON_NO_GROUPS
        else:
            r = 1 + int(rng.integers(0, k - 1))
            if layer == 0:
                if rng.random() < 0.5:
                    avail = n - n1[r, 0]
                    if avail == 0:
                        reason = REASON_LAYER1_SATURATED
                    else:
                        kind = ADD_NODE
                        node = _pick_node(pat, 0, r, False, int(rng.integers(0, avail)))
                else:
                    if n1[r, 0] == 0:
                        if mode == MODE_FIXED_K or S[r] > 0:
                            reason = REASON_LAYER1_EMPTY
                        else:
                            kind = REMOVE_GROUP
                    else:
                        kind = REMOVE_NODE
                        node = _pick_node(pat, 0, r, True, int(rng.integers(0, n1[r, 0])))
            else:
                node = int(rng.integers(0, n))
                bit = np.int64(1) << (r - 1)
                if pat[layer, node] & bit:
                    kind = REMOVE_NODE
                else:
                    kind = ADD_NODE

    move_out[0] = kind
    move_out[1] = r
    move_out[2] = layer
    move_out[3] = node
    move_out[4] = pa
    move_out[5] = pb
    move_out[6] = 0
    move_out[7] = reason


@njit(cache=True)
def _toggle_delta(adj, pat, t, m, n1, c00, c11, logj, lg, k, r, layer, node, adding, dt, dm):
    L, n = pat.shape
    bit = np.int64(1) << (r - 1)
    pold = pat[layer, node]
    pnew = pold ^ bit
    for c in range(k):
        dt[c] = 0
        dm[c] = 0
    for j in range(n):
        if j == node:
            continue
        pj = pat[layer, j]
        if not (pj & bit):
            continue
        h0 = _hcg(pold & pj)
        h1 = _hcg(pnew & pj)
        if h0 == h1:
            continue
        dt[h0] -= 1
        dt[h1] += 1
        if adj[layer, node, j]:
            dm[h0] -= 1
            dm[h1] += 1
    delta = 0.0
    for c in range(k):
        if dt[c] != 0 or dm[c] != 0:
            delta += _ll_cell(t[c, layer] + dt[c], m[c, layer] + dm[c], lg)
            delta -= _ll_cell(t[c, layer], m[c, layer], lg)
    if layer >= 1:
        bprev = 1 if pat[layer - 1, node] & bit else 0
        o00 = c00[r, layer]
        o11 = c11[r, layer]
        if adding:
            w00 = o00 - (1 - bprev)
            w11 = o11 + bprev
        else:
            w00 = o00 + (1 - bprev)
            w11 = o11 - bprev
        nprev = n1[r, layer - 1]
        delta += _trans_val(nprev, w00, w11, n, logj, lg)
        delta -= _trans_val(nprev, o00, o11, n, logj, lg)
    if layer + 1 < L:
        bnext = 1 if pat[layer + 1, node] & bit else 0
        o00 = c00[r, layer + 1]
        o11 = c11[r, layer + 1]
        if adding:
            w00 = o00 - (1 - bnext)
            w11 = o11 + bnext
        else:
            w00 = o00 + (1 - bnext)
            w11 = o11 - bnext
        np_old = n1[r, layer]
        np_new = np_old + (1 if adding else -1)
        delta += _trans_val(np_new, w00, w11, n, logj, lg)
        delta -= _trans_val(np_old, o00, o11, n, logj, lg)
    return delta


@njit(cache=True)
def _toggle_commit(pat, t, m, n1, c00, c11, S, k, r, layer, node, adding, dt, dm):
    L, n = pat.shape
    bit = np.int64(1) << (r - 1)
    pat[layer, node] ^= bit
    for c in range(k):
        t[c, layer] += dt[c]
        m[c, layer] += dm[c]
    d = 1 if adding else -1
    n1[r, layer] += d
    S[r] += d
    if layer >= 1:
        bprev = 1 if pat[layer - 1, node] & bit else 0
        if adding:
            c00[r, layer] -= 1 - bprev
            c11[r, layer] += bprev
        else:
            c00[r, layer] += 1 - bprev
            c11[r, layer] -= bprev
    if layer + 1 < L:
        bnext = 1 if pat[layer + 1, node] & bit else 0
        if adding:
            c00[r, layer + 1] -= 1 - bnext
            c11[r, layer + 1] += bnext
        else:
            c00[r, layer + 1] += 1 - bnext
            c11[r, layer + 1] -= bnext


@njit(cache=True)
def _multi_delta(
    adj, pat, t, m, n1, c00, c11, logj, lg, k, layer, pa, pb,
    tnew, mnew, n1new, c00l, c11l, c00r, c11r, prow,
):
    L, n = pat.shape
    changed = False
    for i in range(n):
        q = pat[layer, i]
        if q == pa:
            q2 = pb
        elif q == pb:
            q2 = pa
        else:
            q2 = q
        prow[i] = q2
        if q2 != q:
            changed = True
    if not changed:
        return 0.0, False
    for c in range(k):
        tnew[c] = 0
        mnew[c] = 0
    for i in range(n - 1):
        pi = prow[i]
        for j in range(i + 1, n):
            h = _hcg(pi & prow[j])
            tnew[h] += 1
            if adj[layer, i, j]:
                mnew[h] += 1
    delta = 0.0
    for c in range(k):
        delta += _ll_cell(tnew[c], mnew[c], lg) - _ll_cell(t[c, layer], m[c, layer], lg)
    for r in range(1, k):
        bit = np.int64(1) << (r - 1)
        cnt = 0
        for i in range(n):
            if prow[i] & bit:
                cnt += 1
        n1new[r] = cnt
        if layer >= 1:
            a00 = 0
            a11 = 0
            for i in range(n):
                bp = pat[layer - 1, i] & bit
                bc = prow[i] & bit
                if bp and bc:
                    a11 += 1
                elif (not bp) and (not bc):
                    a00 += 1
            c00l[r] = a00
            c11l[r] = a11
            delta += _trans_val(n1[r, layer - 1], a00, a11, n, logj, lg)
            delta -= _trans_val(n1[r, layer - 1], c00[r, layer], c11[r, layer], n, logj, lg)
        if layer + 1 < L:
            a00 = 0
            a11 = 0
            for i in range(n):
                bp = prow[i] & bit
                bc = pat[layer + 1, i] & bit
                if bp and bc:
                    a11 += 1
                elif (not bp) and (not bc):
                    a00 += 1
            c00r[r] = a00
            c11r[r] = a11
            delta += _trans_val(n1new[r], a00, a11, n, logj, lg)
            delta -= _trans_val(n1[r, layer], c00[r, layer + 1], c11[r, layer + 1], n, logj, lg)
    return delta, True


@njit(cache=True)
def _multi_commit(pat, t, m, n1, c00, c11, S, k, layer, tnew, mnew, n1new, c00l, c11l, c00r, c11r, prow):
    L, n = pat.shape
    for i in range(n):
        pat[layer, i] = prow[i]
    for c in range(k):
        t[c, layer] = tnew[c]
        m[c, layer] = mnew[c]
    for r in range(1, k):
        S[r] += n1new[r] - n1[r, layer]
        n1[r, layer] = n1new[r]
        if layer >= 1:
            c00[r, layer] = c00l[r]
            c11[r, layer] = c11l[r]
        if layer + 1 < L:
            c00[r, layer + 1] = c00r[r]
            c11[r, layer + 1] = c11r[r]


@njit(cache=True)
def _add_group_commit(pat, t, m, n1, c00, c11, S, kbox, r):
    L, n = pat.shape
    k = kbox[0]
    low_mask = (np.int64(1) << (r - 1)) - 1
    for ell in range(L):
        for i in range(n):
            q = pat[ell, i]
            pat[ell, i] = ((q >> (r - 1)) << r) | (q & low_mask)
    for c in range(k - 1, r - 1, -1):
        for ell in range(L):
            t[c + 1, ell] = t[c, ell]
            m[c + 1, ell] = m[c, ell]
            n1[c + 1, ell] = n1[c, ell]
            c00[c + 1, ell] = c00[c, ell]
            c11[c + 1, ell] = c11[c, ell]
        S[c + 1] = S[c]
    for ell in range(L):
        t[r, ell] = 0
        m[r, ell] = 0
        n1[r, ell] = 0
        c00[r, ell] = n if ell >= 1 else 0
        c11[r, ell] = 0
    S[r] = 0
    kbox[0] = k + 1


@njit(cache=True)
def _remove_group_commit(pat, t, m, n1, c00, c11, S, kbox, r):
    L, n = pat.shape
    k = kbox[0]
    low_mask = (np.int64(1) << (r - 1)) - 1
    for ell in range(L):
        for i in range(n):
            q = pat[ell, i]
            pat[ell, i] = ((q >> r) << (r - 1)) | (q & low_mask)
    for c in range(r, k - 1):
        for ell in range(L):
            t[c, ell] = t[c + 1, ell]
            m[c, ell] = m[c + 1, ell]
            n1[c, ell] = n1[c + 1, ell]
            c00[c, ell] = c00[c + 1, ell]
            c11[c, ell] = c11[c + 1, ell]
        S[c] = S[c + 1]
    for ell in range(L):
        t[k - 1, ell] = 0
        m[k - 1, ell] = 0
        n1[k - 1, ell] = 0
        c00[k - 1, ell] = 0
        c11[k - 1, ell] = 0
    S[k - 1] = 0
    kbox[0] = k - 1


@njit(cache=True)
def step(
    adj, pat, t, m, n1, c00, c11, S, kbox,
    logj, lg, mode, p_multi, restrict_l1, k_max,
    dt, dm, tnew, mnew, n1new, c00l, c11l, c00r, c11r, prow,
    rng, move_out,
):
    """One proposal + acceptance; returns the log acceptance delta.

    On acceptance the state arrays are updated in place and move_out[6] is
    set to 1.  No-op proposals consume the step and count as rejections.
    """
    L, n = pat.shape
    _draw_move(pat, n1, S, kbox, mode, p_multi, restrict_l1, k_max, rng, move_out)
    kind = move_out[0]
    k = kbox[0]
    delta = 0.0
    if kind == NOOP:
        return delta

    if kind == ADD_GROUP:
        delta = (L - 1) * logj[0, n]
    elif kind == REMOVE_GROUP:
        delta = -(L - 1) * logj[0, n]
    elif kind == MULTI_SWAP:
        delta, changed = _multi_delta(
            adj, pat, t, m, n1, c00, c11, logj, lg, k,
            move_out[2], move_out[4], move_out[5],
            tnew, mnew, n1new, c00l, c11l, c00r, c11r, prow,
        )
        if not changed:
            move_out[6] = 1  # identity swap: accepted, state unchanged
            return 0.0
    else:
        delta = _toggle_delta(
            adj, pat, t, m, n1, c00, c11, logj, lg, k,
            move_out[1], move_out[2], move_out[3], kind == ADD_NODE, dt, dm,
        )

    if delta >= 0.0 or rng.random() < np.exp(delta):
        move_out[6] = 1
        if kind == ADD_GROUP:
            _add_group_commit(pat, t, m, n1, c00, c11, S, kbox, move_out[1])
        elif kind == REMOVE_GROUP:
            _remove_group_commit(pat, t, m, n1, c00, c11, S, kbox, move_out[1])
        elif kind == MULTI_SWAP:
            _multi_commit(
                pat, t, m, n1, c00, c11, S, k, move_out[2],
                tnew, mnew, n1new, c00l, c11l, c00r, c11r, prow,
            )
        else:
            _toggle_commit(
                pat, t, m, n1, c00, c11, S, k,
                move_out[1], move_out[2], move_out[3], kind == ADD_NODE, dt, dm,
            )
    return delta


@njit(cache=True)
def encode_state(pat, k):
    """Pack the pattern grid into one base-2^(k-1) integer (layer-major)."""
    L, n = pat.shape
    width = np.int64(1) << (k - 1)
    code = np.int64(0)
    for ell in range(L):
        for i in range(n):
            code = code * width + pat[ell, i]
    return code


@njit(cache=True)
def run_chain(
    adj, pat, t, m, n1, c00, c11, S, kbox,
    logj, lg, mode, p_multi, restrict_l1, k_max,
    steps, thin, burn_in, rng,
    rec_pat, rec_k, rec_lj, counters,
    occ, occ_offsets, occ_kcap, track,
):
    """Run ``steps`` proposals, thinning records and tallying move counters.

    counters[kind, 0] counts proposals, counters[kind, 1] acceptances.  When
    ``track`` is true the post-step state is tallied into ``occ`` (offset by
    ``occ_offsets[k]``); states with k above ``occ_kcap`` land in the returned
    overflow count.
    """
    L, n = pat.shape
    kmax_rows = t.shape[0]
    dt = np.zeros(kmax_rows, dtype=np.int64)
    dm = np.zeros(kmax_rows, dtype=np.int64)
    tnew = np.zeros(kmax_rows, dtype=np.int64)
    mnew = np.zeros(kmax_rows, dtype=np.int64)
    n1new = np.zeros(kmax_rows, dtype=np.int64)
    c00l = np.zeros(kmax_rows, dtype=np.int64)
    c11l = np.zeros(kmax_rows, dtype=np.int64)
    c00r = np.zeros(kmax_rows, dtype=np.int64)
    c11r = np.zeros(kmax_rows, dtype=np.int64)
    prow = np.zeros(n, dtype=np.int64)
    move_out = np.zeros(8, dtype=np.int64)

    n_rec = 0
    overflow = 0
    for s in range(1, steps + 1):
        step(
            adj, pat, t, m, n1, c00, c11, S, kbox,
            logj, lg, mode, p_multi, restrict_l1, k_max,
            dt, dm, tnew, mnew, n1new, c00l, c11l, c00r, c11r, prow,
            rng, move_out,
        )
        counters[move_out[0], 0] += 1
        counters[move_out[0], 1] += move_out[6]
        if move_out[7] == REASON_K_CAP:
            counters[N_MOVE_KINDS, 0] += 1
        if track:
            kk = kbox[0]
            if kk <= occ_kcap:
                occ[occ_offsets[kk] + encode_state(pat, kk)] += 1
            else:
                overflow += 1
        if s % thin == 0 and s > burn_in:
            for ell in range(L):
                for i in range(n):
                    rec_pat[n_rec, ell, i] = pat[ell, i]
            rec_k[n_rec] = kbox[0]
            rec_lj[n_rec] = state_log_joint(t, m, n1, c00, c11, kbox[0], n, logj, lg)
            n_rec += 1
    return n_rec, overflow


@njit(cache=True)
def draw_proposals(pat, n1, S, kbox, mode, p_multi, restrict_l1, k_max, rng, out):
    """Draw len(out) proposals from a frozen state; out rows are move_out[:6]+reason."""
    move_out = np.zeros(8, dtype=np.int64)
    for idx in range(out.shape[0]):
        _draw_move(pat, n1, S, kbox, mode, p_multi, restrict_l1, k_max, rng, move_out)
        for col in range(6):
            out[idx, col] = move_out[col]
        out[idx, 6] = move_out[7]


@njit(cache=True)
def enumerate_logw(adj, k, logj, lg, out):
    """Unnormalized log posterior weight (including the k prior) per state code.

    ``out`` must have length (2^(k-1))^(n*L); codes follow encode_state.
    """
    L = adj.shape[0]
    n = adj.shape[1]
    width = np.int64(1) << (k - 1)
    pat = np.zeros((L, n), dtype=np.int64)
    tloc = np.zeros(k, dtype=np.int64)
    mloc = np.zeros(k, dtype=np.int64)
    for code in range(out.shape[0]):
        c = code
        for ell in range(L - 1, -1, -1):
            for i in range(n - 1, -1, -1):
                pat[ell, i] = c % width
                c //= width
        v = -1.0 - lg[k]
        for ell in range(L):
            for cc in range(k):
                tloc[cc] = 0
                mloc[cc] = 0
            for i in range(n - 1):
                pi = pat[ell, i]
                for j in range(i + 1, n):
                    h = _hcg(pi & pat[ell, j])
                    tloc[h] += 1
                    if adj[ell, i, j]:
                        mloc[h] += 1
            for cc in range(k):
                v += _ll_cell(tloc[cc], mloc[cc], lg)
        for r in range(1, k):
            bit = np.int64(1) << (r - 1)
            prev1 = 0
            for i in range(n):
                if pat[0, i] & bit:
                    prev1 += 1
            v += lg[prev1 + 1] + lg[n - prev1 + 1] - lg[n + 2]
            for ell in range(1, L):
                cur1 = 0
                a00 = 0
                a11 = 0
                for i in range(n):
                    bp = pat[ell - 1, i] & bit
                    bc = pat[ell, i] & bit
                    if bc:
                        cur1 += 1
                    if bp and bc:
                        a11 += 1
                    elif (not bp) and (not bc):
                        a00 += 1
                v += _trans_val(prev1, a00, a11, n, logj, lg)
                prev1 = cur1
        out[code] = v
