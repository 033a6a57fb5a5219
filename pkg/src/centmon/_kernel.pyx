# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled core: pruned block search, candidate counting, Next Closure.

The Python fallback in ``_purepy`` mirrors every function here.
"""

from libc.stdint cimport uint64_t, int64_t, int32_t, int8_t
from libc.stdlib cimport malloc, calloc, free
from libc.string cimport memcpy, memset

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    W = 4
    MAXN = 24
    MAXB = 24
    MAXP = 8

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIXER = 0xBF58476D1CE4E5B9ULL


cdef struct Table:
    uint64_t *keys   # cap * W
    uint64_t *reps   # cap
    char *used       # cap
    int64_t cap
    int64_t size


cdef int table_init(Table *t, int64_t cap):
    t.cap = cap
    t.size = 0
    t.keys = <uint64_t *> malloc(cap * W * sizeof(uint64_t))
    t.reps = <uint64_t *> malloc(cap * sizeof(uint64_t))
    t.used = <char *> calloc(cap, 1)
    if t.keys == NULL or t.reps == NULL or t.used == NULL:
        return -1
    return 0


cdef void table_free(Table *t):
    free(t.keys)
    free(t.reps)
    free(t.used)


cdef inline uint64_t hash_key(const uint64_t *k) nogil:
    cdef uint64_t h = GOLDEN
    cdef int w
    for w in range(W):
        h ^= k[w] + GOLDEN + (h << 6) + (h >> 2)
        h *= MIXER
    return h ^ (h >> 31)


cdef int table_insert(Table *t, const uint64_t *key, uint64_t rep):
    cdef int64_t i, j, newcap
    cdef Table grown
    if (t.size + 1) * 2 > t.cap:
        newcap = t.cap * 2
        if table_init(&grown, newcap) != 0:
            return -1
        for i in range(t.cap):
            if t.used[i]:
                table_put(&grown, &t.keys[i * W], t.reps[i])
        table_free(t)
        t[0] = grown
    return table_put(t, key, rep)


cdef int table_put(Table *t, const uint64_t *key, uint64_t rep) nogil:
    cdef int64_t mask = t.cap - 1
    cdef int64_t i = <int64_t> (hash_key(key) & <uint64_t> mask)
    cdef int w
    cdef bint same
    while t.used[i]:
        same = True
        for w in range(W):
            if t.keys[i * W + w] != key[w]:
                same = False
                break
        if same:
            if rep < t.reps[i]:
                t.reps[i] = rep
            return 0
        i = (i + 1) & mask
    t.used[i] = 1
    for w in range(W):
        t.keys[i * W + w] = key[w]
    t.reps[i] = rep
    t.size += 1
    return 0


cdef inline uint64_t value_code(const int8_t *f, int n, int k) nogil:
    cdef uint64_t c = 0
    cdef int i
    for i in range(n):
        c = c * k + f[i]
    return c


def block_search(
    int k,
    int n,
    const uint64_t[:, :, ::1] self_ok,          # (n, k, W)
    const uint64_t[:, :, :, :, ::1] pair_ok,    # (n, n, k, k, W)
    const int32_t[::1] block_npos,
    const int32_t[:, ::1] block_pos,            # (B, MAXP)
    const int32_t[::1] block_nopt,
    const int64_t[::1] block_optoff,            # offset of a block's options, in options
    const int8_t[:, ::1] opt_vals,              # (total options, MAXP)
    const int32_t[::1] check_off,               # (B * MAXP + 1)
    const int32_t[::1] check_pos,
    const uint64_t[::1] start_mask,             # (W,)
    const uint64_t[::1] required,               # (W,)
    const uint64_t[::1] confirmed,              # (W,)
    bint exact,
    const int32_t[::1] prefix,
):
    """Depth-first search over plan blocks; returns (monoid -> least rep, stats)."""
    cdef int B = block_npos.shape[0]
    cdef int m = prefix.shape[0]
    cdef uint64_t masks[MAXB + 1][W]
    cdef int opt[MAXB + 1]
    cdef int8_t f[MAXN]
    cdef uint64_t suffix[MAXB + 1]
    cdef uint64_t cur[W]
    cdef int d, t, w, p, a, j, c, o, slot
    cdef int64_t row
    cdef bint alive, subset_conf
    cdef uint64_t nodes = 0, leaves = 0, pruned = 0, dead = 0, covered = 0, unsound = 0
    cdef uint64_t rep
    cdef Table table
    if B > MAXB or n > MAXN:
        raise ValueError("plan too large for the compiled kernel")
    if table_init(&table, 1024) != 0:
        raise MemoryError()
    memset(f, 0, sizeof(f))
    suffix[B] = 1
    for d in range(B - 1, -1, -1):
        suffix[d] = suffix[d + 1] * <uint64_t> block_nopt[d]
    for w in range(W):
        masks[0][w] = start_mask[w]

    # apply the fixed prefix; depth d means blocks < d are assigned
    d = 0
    alive = True
    while d < m and alive:
        o = prefix[d]
        row = block_optoff[d] + o
        for w in range(W):
            cur[w] = masks[d][w]
        for t in range(block_npos[d]):
            p = block_pos[d, t]
            a = opt_vals[row, t]
            f[p] = a
            for w in range(W):
                cur[w] &= self_ok[p, a, w]
            slot = d * MAXP + t
            for c in range(check_off[slot], check_off[slot + 1]):
                j = check_pos[c]
                for w in range(W):
                    cur[w] &= pair_ok[p, j, a, f[j], w]
        for w in range(W):
            masks[d + 1][w] = cur[w]
            if (cur[w] & required[w]) != required[w]:
                alive = False
        d += 1
    result = {}
    if not alive:
        table_free(&table)
        return result, dict(nodes=0, leaves=0, pruned=0, dead=1, covered=0, unsound=0)

    # iterative DFS below the prefix
    opt[m] = -1
    d = m
    while d >= m:
        opt[d] += 1
        if d == B or opt[d] >= block_nopt[d]:
            d -= 1
            continue
        nodes += 1
        row = block_optoff[d] + opt[d]
        for w in range(W):
            cur[w] = masks[d][w]
        for t in range(block_npos[d]):
            p = block_pos[d, t]
            a = opt_vals[row, t]
            f[p] = a
            for w in range(W):
                cur[w] &= self_ok[p, a, w]
            slot = d * MAXP + t
            for c in range(check_off[slot], check_off[slot + 1]):
                j = check_pos[c]
                for w in range(W):
                    cur[w] &= pair_ok[p, j, a, f[j], w]
        alive = True
        subset_conf = True
        for w in range(W):
            if (cur[w] & required[w]) != required[w]:
                alive = False
            if cur[w] & ~confirmed[w]:
                subset_conf = False
        if not alive:
            if exact:
                unsound += 1
            dead += 1
            continue
        if d == B - 1:
            leaves += 1
            covered += 1
            rep = value_code(f, n, k)
            if table_insert(&table, cur, rep) != 0:
                table_free(&table)
                raise MemoryError()
            continue
        if exact and subset_conf:
            # every completion commutes with exactly the confirmed maps
            pruned += 1
            covered += suffix[d + 1]
            for j in range(d + 1, B):
                row = block_optoff[j]
                for t in range(block_npos[j]):
                    f[block_pos[j, t]] = opt_vals[row, t]
            rep = value_code(f, n, k)
            if table_insert(&table, cur, rep) != 0:
                table_free(&table)
                raise MemoryError()
            continue
        for w in range(W):
            masks[d + 1][w] = cur[w]
        d += 1
        opt[d] = -1

    for row in range(table.cap):
        if table.used[row]:
            key = 0
            for w in range(W):
                key |= (<object> table.keys[row * W + w]) << (64 * w)
            result[key] = int(table.reps[row])
    table_free(&table)
    return result, dict(nodes=nodes, leaves=leaves, pruned=pruned, dead=dead,
                        covered=covered, unsound=unsound)


def count_leaves(const int32_t[::1] block_nopt):
    """Walk the plan tree and count complete assignments (streaming, no storage)."""
    cdef int B = block_nopt.shape[0]
    cdef int opt[MAXB + 1]
    cdef int d = 0
    cdef uint64_t count = 0
    if B == 0:
        return 1
    opt[0] = -1
    while d >= 0:
        opt[d] += 1
        if opt[d] >= block_nopt[d]:
            d -= 1
            continue
        if d == B - 1:
            count += 1
            continue
        d += 1
        opt[d] = -1
    return count


def next_closure_count(
    const uint64_t[:, ::1] rows,      # (objects, words) attribute bitsets
    const uint64_t[:, ::1] cols,      # (attributes, owords) object bitsets
    int n_attr,
    bint collect,
):
    """Next Closure over the attribute side; returns (count, intents or None).

    Attribute i is bit i. Intents come out in lectic order, attribute 0 most
    significant, i.e. the order of the context's attribute list.
    """
    cdef int n_obj = rows.shape[0]
    cdef int aw = rows.shape[1]
    cdef int ow = cols.shape[1]
    cdef uint64_t *A = <uint64_t *> calloc(aw, sizeof(uint64_t))
    cdef uint64_t *B = <uint64_t *> calloc(aw, sizeof(uint64_t))
    cdef uint64_t *ext = <uint64_t *> calloc(ow, sizeof(uint64_t))
    cdef uint64_t *full = <uint64_t *> calloc(aw, sizeof(uint64_t))
    cdef int i, w, g, step
    cdef uint64_t count = 0
    cdef bint ok, found
    intents = [] if collect else None
    if A == NULL or B == NULL or ext == NULL or full == NULL:
        raise MemoryError()
    for i in range(n_attr):
        full[i >> 6] |= (<uint64_t> 1) << (i & 63)

    # first intent: closure of the empty set
    _closure(rows, cols, A, B, ext, -1, n_obj, aw, ow, full)
    memcpy(A, B, aw * sizeof(uint64_t))
    while True:
        count += 1
        if collect:
            intents.append(_to_int(A, aw))
        found = False
        for i in range(n_attr - 1, -1, -1):
            if (A[i >> 6] >> (i & 63)) & 1:
                A[i >> 6] &= ~((<uint64_t> 1) << (i & 63))
                continue
            _closure(rows, cols, A, B, ext, i, n_obj, aw, ow, full)
            # B must agree with A on attributes before i
            ok = True
            for w in range(aw):
                if w < (i >> 6):
                    if B[w] != A[w]:
                        ok = False
                        break
                elif w == (i >> 6):
                    if (B[w] ^ A[w]) & (((<uint64_t> 1) << (i & 63)) - 1):
                        ok = False
                        break
            if ok:
                memcpy(A, B, aw * sizeof(uint64_t))
                found = True
                break
        if not found:
            break
    free(A); free(B); free(ext); free(full)
    return count, intents


cdef void _closure(const uint64_t[:, ::1] rows, const uint64_t[:, ::1] cols,
                   uint64_t *A, uint64_t *B, uint64_t *ext, int extra,
                   int n_obj, int aw, int ow, uint64_t *full):
    """B = closure(A + {extra}) (extra < 0: no extra attribute)."""
    cdef int w, i, g
    cdef uint64_t bits
    for w in range(ow):
        ext[w] = <uint64_t> -1
    for w in range(aw):
        bits = A[w]
        while bits:
            i = w * 64 + __builtin_ctzll(bits)
            bits &= bits - 1
            for g in range(ow):
                ext[g] &= cols[i, g]
    if extra >= 0:
        for g in range(ow):
            ext[g] &= cols[extra, g]
    for w in range(aw):
        B[w] = full[w]
    for g in range(n_obj):
        if (ext[g >> 6] >> (g & 63)) & 1:
            for w in range(aw):
                B[w] &= rows[g, w]


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


cdef object _to_int(uint64_t *A, int aw):
    cdef int w
    out = 0
    for w in range(aw):
        out |= (<object> A[w]) << (64 * w)
    return out
