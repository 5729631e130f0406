"""Compiled inner loops for the samplers and searchers.

Models are packed as CSR adjacency (starts, neighbor index, coupling value)
plus a bias vector. All randomness inside kernels comes from numba's
MT19937, seeded explicitly per shot/run, so results are reproducible and
independent of thread scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, nogil=True, parallel=True)
def sa_sample(starts, nbr, w, h, betas, seeds, out_states, out_energies):
    """Metropolis single-spin sweeps, one independent seeded run per shot."""
    n = h.shape[0]
    shots = seeds.shape[0]
    for k in prange(shots):
        np.random.seed(seeds[k])
        s = np.empty(n, dtype=np.int8)
        for i in range(n):
            s[i] = 1 if np.random.random() < 0.5 else -1
        for bi in range(betas.shape[0]):
            b = betas[bi]
            for i in range(n):
                f = h[i]
                for p in range(starts[i], starts[i + 1]):
                    f += w[p] * s[nbr[p]]
                de = -2.0 * s[i] * f
                if de <= 0.0 or np.random.random() < np.exp(-b * de):
                    s[i] = -s[i]
        e = 0.0
        for i in range(n):
            f = 0.0
            for p in range(starts[i], starts[i + 1]):
                f += w[p] * s[nbr[p]]
            e += (h[i] + 0.5 * f) * s[i]
        out_states[k, :] = s
        out_energies[k] = e


@njit(cache=True, nogil=True)
def tabu_chunk(
    starts,
    nbr,
    w,
    h,
    s,
    fields,
    tabu_until,
    it_start,
    it_count,
    tenure,
    cur_e,
    best_e,
    best_s,
):
    """Run it_count single-flip tabu iterations, resuming from prior state.

    A tabu move is admissible anyway when it improves the global best
    (aspiration). Mutates s, fields, tabu_until, best_s in place and returns
    the updated (current, best) energies.
    """
    n = h.shape[0]
    for it in range(it_start, it_start + it_count):
        move = -1
        move_delta = 0.0
        for i in range(n):
            delta = -2.0 * s[i] * fields[i]
            if it < tabu_until[i] and not (cur_e + delta < best_e):
                continue
            if move == -1 or delta < move_delta:
                move = i
                move_delta = delta
        if move == -1:
            # everything tabu with no aspiration: take the oldest tabu move
            oldest = tabu_until[0]
            move = 0
            for i in range(1, n):
                if tabu_until[i] < oldest:
                    oldest = tabu_until[i]
                    move = i
            move_delta = -2.0 * s[move] * fields[move]
        s[move] = -s[move]
        cur_e += move_delta
        for p in range(starts[move], starts[move + 1]):
            fields[nbr[p]] += 2.0 * w[p] * s[move]
        tabu_until[move] = it + tenure + 1
        if cur_e < best_e:
            best_e = cur_e
            best_s[:] = s
    return cur_e, best_e


@njit(cache=True, nogil=True)
def exact_gray(starts, nbr, w, h):
    """Global minimum by Gray-code enumeration with incremental field updates."""
    n = h.shape[0]
    s = np.full(n, -1, dtype=np.int8)
    fields = h.copy()
    for i in range(n):
        for p in range(starts[i], starts[i + 1]):
            fields[i] += w[p] * s[nbr[p]]
    e = 0.0
    for i in range(n):
        f = 0.0
        for p in range(starts[i], starts[i + 1]):
            f += w[p] * s[nbr[p]]
        e += (h[i] + 0.5 * f) * s[i]
    best_e = e
    best_s = s.copy()
    total = np.int64(1) << n
    for g in range(1, total):
        i = 0
        gg = g
        while gg & 1 == 0:
            gg >>= 1
            i += 1
        e += -2.0 * s[i] * fields[i]
        s[i] = -s[i]
        for p in range(starts[i], starts[i + 1]):
            fields[nbr[p]] += 2.0 * w[p] * s[i]
        if e < best_e:
            best_e = e
            best_s[:] = s
    return best_s, best_e
