"""Compiled discrete-event kernel behind schedule evaluation.

Resources are indexed integers: directed wired links and wireless bands
(whole-band, whole-slot occupancy).  Each carries one transfer at a time and
computing units process one task at a time; whenever one frees up it takes
the waiting request the dispatch rule prefers (deadline for edf, transfer
size or demand for spt, request order otherwise).
"""
import math

import numpy as np
from numba import njit

QUEUE_NONE = 0
QUEUE_EDF = 1
QUEUE_FIFO = 2
QUEUE_SPT = 3

# event kinds, in processing order at equal times
_DONE = 0
_REQ = 1
_DISPATCH = 2
_SEND = 3

_EPS = 1e-9


@njit(cache=True, inline="always")
def _less(ht, hk, hi, a, b):
    if ht[a] != ht[b]:
        return ht[a] < ht[b]
    if hk[a] != hk[b]:
        return hk[a] < hk[b]
    return hi[a] < hi[b]


@njit(cache=True)
def _swap(ht, hk, hi, hs, a, b):
    ht[a], ht[b] = ht[b], ht[a]
    hk[a], hk[b] = hk[b], hk[a]
    hi[a], hi[b] = hi[b], hi[a]
    hs[a], hs[b] = hs[b], hs[a]


@njit(cache=True)
def _push(ht, hk, hi, hs, n, t, k, i, s):
    ht[n] = t
    hk[n] = k
    hi[n] = i
    hs[n] = s
    c = n
    while c > 0:
        p = (c - 1) // 2
        if _less(ht, hk, hi, c, p):
            _swap(ht, hk, hi, hs, c, p)
            c = p
        else:
            break
    return n + 1


@njit(cache=True)
def _pop(ht, hk, hi, hs, n):
    """Move the minimum to slot n-1 and restore the heap on 0..n-2."""
    n -= 1
    _swap(ht, hk, hi, hs, 0, n)
    c = 0
    while True:
        l = 2 * c + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and _less(ht, hk, hi, r, l):
            m = r
        if _less(ht, hk, hi, m, c):
            _swap(ht, hk, hi, hs, m, c)
            c = m
        else:
            break
    return n


@njit(cache=True)
def _hop(j, stage, g, nh, hmax, hop_res, hop_rres, size, result_size):
    """(resource, hop index on the path, timing column, bits) of a transfer stage."""
    if stage < nh:
        return hop_res[g, stage], stage, stage, size[j]
    h = 2 * nh - stage
    return hop_rres[g, h], h, hmax + (stage - nh - 1), result_size[j]


@njit(cache=True)
def simulate(opt_ids, gen_time, size, result_size, demand, deadline,
             opt_unit, opt_nhops, hop_res, hop_rres, hop_link, hop_rate,
             res_is_band, unit_speed, cum_bits, slot_dur, queue_mode,
             arrive, pstart, pend, done, hstart, hend):
    """Run one schedule.  Fills the timing arrays; returns the overflow count.

    ``hstart``/``hend`` have 2*HMAX columns: forward hops first, then return
    hops in traversal order.  Unused entries are left at -1.
    """
    n_tasks = opt_ids.shape[0]
    hmax = hop_res.shape[1]
    n_res = res_is_band.shape[0]
    n_units = unit_speed.shape[0]
    n_slots = cum_bits.shape[1] - 1 if cum_bits.shape[0] > 0 else 0

    cap = n_tasks * (6 * hmax + 10) + 8
    ht = np.empty(cap)
    hk = np.empty(cap, np.int64)
    hi = np.empty(cap, np.int64)
    hs = np.empty(cap, np.int64)
    n = 0

    free = np.zeros(n_res)
    busy = np.zeros(n_units, np.bool_)
    waiting = np.zeros(n_tasks, np.bool_)
    # pending transfer per task: resource (-1 if none), stage, request time
    wres = np.full(n_tasks, -1, np.int64)
    wstage = np.zeros(n_tasks, np.int64)
    wtime = np.zeros(n_tasks)
    overflow = 0

    for j in range(n_tasks):
        arrive[j] = -1.0
        pstart[j] = -1.0
        pend[j] = -1.0
        done[j] = -1.0
        for h in range(2 * hmax):
            hstart[j, h] = -1.0
            hend[j, h] = -1.0
        n = _push(ht, hk, hi, hs, n, gen_time[j], _REQ, j, 0)

    while n > 0:
        n = _pop(ht, hk, hi, hs, n)
        t = ht[n]
        kind = hk[n]
        ident = hi[n]
        stage = hs[n]

        if kind == _DONE:
            g = opt_ids[ident]
            u = opt_unit[g]
            if queue_mode != QUEUE_NONE:
                busy[u] = False
                n = _push(ht, hk, hi, hs, n, t, _DISPATCH, u, 0)
            n = _push(ht, hk, hi, hs, n, t, _REQ, ident, opt_nhops[g] + 1)
            continue

        if kind == _DISPATCH:
            u = ident
            if busy[u]:
                continue
            pick = -1
            for j in range(n_tasks):
                if not waiting[j] or opt_unit[opt_ids[j]] != u:
                    continue
                if pick < 0:
                    pick = j
                elif queue_mode == QUEUE_EDF:
                    if gen_time[j] + deadline[j] < gen_time[pick] + deadline[pick]:
                        pick = j
                elif queue_mode == QUEUE_SPT:
                    if demand[j] < demand[pick]:
                        pick = j
                elif arrive[j] < arrive[pick]:
                    pick = j
            if pick < 0:
                continue
            waiting[pick] = False
            busy[u] = True
            pstart[pick] = t
            pend[pick] = t + demand[pick] / unit_speed[u]
            n = _push(ht, hk, hi, hs, n, pend[pick], _DONE, pick, 0)
            continue

        if kind == _SEND:
            # the resource is idle or just freed: start the transfer the rule picks
            res = ident
            if free[res] == math.inf:
                for j in range(n_tasks):
                    if wres[j] == res:
                        wres[j] = -1
                        overflow += 1
                        done[j] = math.inf
                continue
            if free[res] > t:
                continue
            pick = -1
            pbits = 0.0
            for j in range(n_tasks):
                if wres[j] != res:
                    continue
                gj = opt_ids[j]
                _, _, _, bits = _hop(j, wstage[j], gj, opt_nhops[gj], hmax, hop_res, hop_rres,
                                     size, result_size)
                if pick < 0:
                    better = True
                elif queue_mode == QUEUE_EDF:
                    better = gen_time[j] + deadline[j] < gen_time[pick] + deadline[pick]
                elif queue_mode == QUEUE_SPT:
                    better = bits < pbits
                else:
                    better = wtime[j] < wtime[pick]
                if better:
                    pick = j
                    pbits = bits
            if pick < 0:
                continue
            j = pick
            g = opt_ids[j]
            stage = wstage[j]
            wres[j] = -1
            _, h, col, bits = _hop(j, stage, g, opt_nhops[g], hmax, hop_res, hop_rres, size, result_size)
            if res_is_band[res]:
                row = hop_link[g, h]
                s0 = int(math.ceil(t / slot_dur - _EPS))
                end_slot = n_slots + 1
                if s0 < n_slots:
                    target = cum_bits[row, s0] + bits
                    end_slot = np.searchsorted(cum_bits[row], target)
                if end_slot > n_slots:
                    # the transfer never completes; the band stays blocked
                    overflow += 1
                    free[res] = math.inf
                    hstart[j, col] = s0 * slot_dur
                    hend[j, col] = math.inf
                    done[j] = math.inf
                    n = _push(ht, hk, hi, hs, n, t, _SEND, res, 0)
                    continue
                start = s0 * slot_dur
                end = end_slot * slot_dur
            else:
                start = t
                end = t + bits / hop_rate[g, h]
            free[res] = end
            hstart[j, col] = start
            hend[j, col] = end
            n = _push(ht, hk, hi, hs, n, end, _REQ, j, stage + 1)
            n = _push(ht, hk, hi, hs, n, end, _SEND, res, 0)
            continue

        # request: the task is ready for its next stage
        j = ident
        g = opt_ids[j]
        nh = opt_nhops[g]
        if stage == nh:
            arrive[j] = t
            u = opt_unit[g]
            if queue_mode == QUEUE_NONE:
                pstart[j] = t
                pend[j] = t + demand[j] / unit_speed[u]
                n = _push(ht, hk, hi, hs, n, pend[j], _DONE, j, 0)
            else:
                waiting[j] = True
                n = _push(ht, hk, hi, hs, n, t, _DISPATCH, u, 0)
            continue
        if stage > 2 * nh:
            done[j] = t
            continue
        res, _, col, _ = _hop(j, stage, g, nh, hmax, hop_res, hop_rres, size, result_size)
        if free[res] == math.inf:
            # stuck behind a transfer that never completes
            overflow += 1
            hend[j, col] = math.inf
            done[j] = math.inf
            continue
        wres[j] = res
        wstage[j] = stage
        wtime[j] = t
        n = _push(ht, hk, hi, hs, n, max(t, free[res]), _SEND, res, 0)

    return overflow


@njit(cache=True)
def evaluate_population(pop_opts, gen_time, size, result_size, demand, deadline,
                        opt_unit, opt_nhops, hop_res, hop_rres, hop_link, hop_rate,
                        res_is_band, unit_speed, unit_cap, cum_bits, slot_dur, queue_mode,
                        opt_rel, opt_dist, simulate_flag):
    """Score every row of ``pop_opts`` (candidates x tasks option ids).

    Returns (deterministic, total_time, distance, violations) per candidate.
    With ``simulate_flag`` false only distance and capacity violations are
    computed.
    """
    n_pop, n_tasks = pop_opts.shape
    hmax = hop_res.shape[1]
    n_units = unit_speed.shape[0]
    det = np.zeros(n_pop)
    tsum = np.zeros(n_pop)
    dist = np.zeros(n_pop)
    viol = np.zeros(n_pop, np.int64)
    arrive = np.empty(n_tasks)
    pstart = np.empty(n_tasks)
    pend = np.empty(n_tasks)
    done = np.empty(n_tasks)
    hstart = np.empty((n_tasks, 2 * hmax))
    hend = np.empty((n_tasks, 2 * hmax))
    used = np.empty(n_units)
    for p in range(n_pop):
        opts = pop_opts[p]
        used[:] = 0.0
        d = 0.0
        for j in range(n_tasks):
            g = opts[j]
            used[opt_unit[g]] += demand[j]
            d += opt_dist[g]
        dist[p] = d
        v = 0
        for u in range(n_units):
            if used[u] > unit_cap[u] * (1.0 + 1e-12):
                v += 1
        if simulate_flag:
            over = simulate(opts, gen_time, size, result_size, demand, deadline,
                            opt_unit, opt_nhops, hop_res, hop_rres, hop_link, hop_rate,
                            res_is_band, unit_speed, cum_bits, slot_dur, queue_mode,
                            arrive, pstart, pend, done, hstart, hend)
            v += over
            b = 0.0
            s = 0.0
            for j in range(n_tasks):
                if done[j] == math.inf:
                    total = math.inf
                else:
                    total = (arrive[j] - gen_time[j]) + (pend[j] - arrive[j]) + (done[j] - pend[j])
                s += total
                if total <= deadline[j]:
                    b += 1.0 - opt_rel[opts[j]]
                else:
                    b += 1.0
            det[p] = b
            tsum[p] = s
        viol[p] = v
    return det, tsum, dist, viol
