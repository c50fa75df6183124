"""Compiled kernels for the message-passing core and its supporting scans.

Everything here is deliberately free of Python objects: pair stores are flat
arrays, adjacency is CSR with sorted rows, and all per-pair work iterates
neighbors in ascending order so results are bit-identical regardless of the
parallel schedule.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _cidx(n, a, b):
    """Condensed index of the unordered pair {a, b} in a complete graph."""
    if a > b:
        a, b = b, a
    return a * (2 * n - a - 1) // 2 + (b - a - 1)


@njit(cache=True)
def union_find_roots(n, ei, ej):
    """Connected-component roots after linking all (ei[k], ej[k]) pairs.

    Path halving plus union by size; output maps every point to its root.
    """
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for e in range(ei.shape[0]):
        a = ei[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ej[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
    out = np.empty(n, dtype=np.int64)
    for v in range(n):
        r = v
        while parent[r] != r:
            r = parent[r]
        out[v] = r
    return out


@njit(cache=True)
def build_linked_csr(n, pi, pj, state):
    """CSR adjacency (sorted rows) over the pairs currently in state 1."""
    deg = np.zeros(n, dtype=np.int64)
    for p in range(pi.shape[0]):
        if state[p] == 1:
            deg[pi[p]] += 1
            deg[pj[p]] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        indptr[v + 1] = indptr[v] + deg[v]
    indices = np.empty(indptr[n], dtype=np.int64)
    cursor = indptr[:n].copy()
    # Pairs arrive in canonical lexicographic order, which fills each row in
    # ascending neighbor order without an extra sort.
    for p in range(pi.shape[0]):
        if state[p] == 1:
            a = pi[p]
            b = pj[p]
            indices[cursor[a]] = b
            cursor[a] += 1
            indices[cursor[b]] = a
            cursor[b] += 1
    return indptr, indices


@njit(cache=True)
def _symmdiff_excluding(indptr, indices, i, j):
    """|N(i) xor N(j)| excluding i and j themselves (rows must be sorted)."""
    ai, bi = indptr[i], indptr[i + 1]
    aj, bj = indptr[j], indptr[j + 1]
    count = 0
    while ai < bi and aj < bj:
        vi = indices[ai]
        vj = indices[aj]
        if vi == vj:
            ai += 1
            aj += 1
        elif vi < vj:
            if vi != i and vi != j:
                count += 1
            ai += 1
        else:
            if vj != i and vj != j:
                count += 1
            aj += 1
    while ai < bi:
        vi = indices[ai]
        if vi != i and vi != j:
            count += 1
        ai += 1
    while aj < bj:
        vj = indices[aj]
        if vj != i and vj != j:
            count += 1
        aj += 1
    return count


@njit(cache=True, parallel=True)
def count_inconsistent_triplets(indptr, indices, pi, pj, linked_ids):
    """Number of unordered triplets with exactly two linked pairs.

    Each such triplet is seen from both of its linked pairs, hence the sum of
    per-pair symmetric differences double-counts and is halved at the end.
    Pairs absent from an edge table behave as state 0, which is exactly how
    they enter this scan.
    """
    total = 0
    for t in prange(linked_ids.shape[0]):
        p = linked_ids[t]
        total += _symmdiff_excluding(indptr, indices, pi[p], pj[p])
    return total // 2


@njit(cache=True)
def _edge_id_of(graph_indptr, graph_indices, graph_edge_ids, i, j):
    """Edge id of (i, j) in the static graph CSR, or -1 when absent."""
    lo = graph_indptr[i]
    hi = graph_indptr[i + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        v = graph_indices[mid]
        if v == j:
            return graph_edge_ids[mid]
        if v < j:
            lo = mid + 1
        else:
            hi = mid
    return -1


@njit(cache=True, parallel=True)
def build_update_flags_full(n, indptr, indices, pi, pj, state):
    """Flags over all condensed pairs that touch an inconsistent triplet.

    A linked pair qualifies when some third point is linked to exactly one of
    its endpoints; an unlinked pair qualifies when its endpoints share a
    linked neighbor.
    """
    flags = np.zeros(state.shape[0], dtype=np.uint8)
    for p in prange(state.shape[0]):
        if state[p] == 1:
            if _symmdiff_excluding(indptr, indices, pi[p], pj[p]) > 0:
                flags[p] = 1
    for v in prange(n):
        lo = indptr[v]
        hi = indptr[v + 1]
        for x in range(lo, hi):
            a = indices[x]
            for y in range(x + 1, hi):
                b = indices[y]
                p = _cidx(n, a, b)
                if state[p] == 0:
                    flags[p] = 1
    return flags


@njit(cache=True, parallel=True)
def build_update_flags_edges(
    indptr, indices, pi, pj, state, graph_indptr, graph_indices, graph_edge_ids
):
    """Edge-table variant of the update flags.

    Only triplets whose three pairs all exist in the table can influence a
    message, so a linked edge qualifies only when the third pair of some
    witnessing triplet is itself a stored edge.
    """
    flags = np.zeros(state.shape[0], dtype=np.uint8)
    for p in prange(state.shape[0]):
        if state[p] != 1:
            continue
        i = pi[p]
        j = pj[p]
        ai, bi = indptr[i], indptr[i + 1]
        aj, bj = indptr[j], indptr[j + 1]
        found = False
        while not found and (ai < bi or aj < bj):
            if ai < bi and (aj >= bj or indices[ai] <= indices[aj]):
                v = indices[ai]
                if aj < bj and indices[aj] == v:
                    ai += 1
                    aj += 1
                    continue
                # v linked to i only; need edge (j, v) in the table
                if v != j and _edge_id_of(graph_indptr, graph_indices, graph_edge_ids, j, v) >= 0:
                    found = True
                ai += 1
            else:
                v = indices[aj]
                if v != i and _edge_id_of(graph_indptr, graph_indices, graph_edge_ids, i, v) >= 0:
                    found = True
                aj += 1
        if found:
            flags[p] = 1
    n = indptr.shape[0] - 1
    for v in prange(n):
        lo = indptr[v]
        hi = indptr[v + 1]
        for x in range(lo, hi):
            a = indices[x]
            for y in range(x + 1, hi):
                b = indices[y]
                e = _edge_id_of(graph_indptr, graph_indices, graph_edge_ids, a, b)
                if e >= 0 and state[e] == 0:
                    flags[e] = 1
    return flags


@njit(cache=True, parallel=True)
def update_messages_full(
    n,
    update_ids,
    pi,
    pj,
    indptr,
    indices,
    msg0,
    msg1,
    unary0,
    unary1,
    include_unary,
    normalize,
    out0,
    out1,
):
    """One synchronous min-sum sweep over the scheduled pairs (complete graph).

    For each scheduled pair the sum runs over every point linked to either
    endpoint in the previous iteration. Per neighbor, the admissible state
    combinations are those that keep the triplet consistent: both-linked or
    both-unlinked when the pair is linked; at most one linked otherwise.
    """
    for t in prange(update_ids.shape[0]):
        p = update_ids[t]
        i = pi[p]
        j = pj[p]
        s1 = 0.0
        s0 = 0.0
        ai, bi = indptr[i], indptr[i + 1]
        aj, bj = indptr[j], indptr[j + 1]
        while ai < bi or aj < bj:
            if ai < bi and (aj >= bj or indices[ai] <= indices[aj]):
                k = indices[ai]
                ai += 1
                if aj < bj and indices[aj] == k:
                    aj += 1
            else:
                k = indices[aj]
                aj += 1
            if k == i or k == j:
                continue
            pik = _cidx(n, i, k)
            pjk = _cidx(n, j, k)
            m0a = msg0[pik]
            m1a = msg1[pik]
            m0b = msg0[pjk]
            m1b = msg1[pjk]
            both = m1a + m1b
            neither = m0a + m0b
            s1 += both if both < neither else neither
            lo = neither
            c = m1a + m0b
            if c < lo:
                lo = c
            c = m0a + m1b
            if c < lo:
                lo = c
            s0 += lo
        if include_unary:
            s1 += unary1[p]
            s0 += unary0[p]
        if normalize:
            shift = s0 if s0 < s1 else s1
            s0 -= shift
            s1 -= shift
        out0[p] = s0
        out1[p] = s1


@njit(cache=True, parallel=True)
def update_messages_edges(
    update_ids,
    pi,
    pj,
    graph_indptr,
    graph_indices,
    graph_edge_ids,
    msg0,
    msg1,
    unary0,
    unary1,
    include_unary,
    normalize,
    out0,
    out1,
):
    """Edge-table sweep: neighbors come from the fixed graph lists.

    A third point contributes only when both of its pairs with the endpoints
    are stored edges, i.e. it is a common graph neighbor.
    """
    for t in prange(update_ids.shape[0]):
        p = update_ids[t]
        i = pi[p]
        j = pj[p]
        s1 = 0.0
        s0 = 0.0
        ai, bi = graph_indptr[i], graph_indptr[i + 1]
        aj, bj = graph_indptr[j], graph_indptr[j + 1]
        while ai < bi and aj < bj:
            vi = graph_indices[ai]
            vj = graph_indices[aj]
            if vi < vj:
                ai += 1
            elif vi > vj:
                aj += 1
            else:
                pik = graph_edge_ids[ai]
                pjk = graph_edge_ids[aj]
                ai += 1
                aj += 1
                m0a = msg0[pik]
                m1a = msg1[pik]
                m0b = msg0[pjk]
                m1b = msg1[pjk]
                both = m1a + m1b
                neither = m0a + m0b
                s1 += both if both < neither else neither
                lo = neither
                c = m1a + m0b
                if c < lo:
                    lo = c
                c = m0a + m1b
                if c < lo:
                    lo = c
                s0 += lo
        if include_unary:
            s1 += unary1[p]
            s0 += unary0[p]
        if normalize:
            shift = s0 if s0 < s1 else s1
            s0 -= shift
            s1 -= shift
        out0[p] = s0
        out1[p] = s1


@njit(cache=True)
def rgs_min_energy(n, e0, e1):
    """Exhaustive minimum-energy set partition via restricted growth strings.

    Enumerates every partition of n points in lexicographic label order and
    keeps the first strict minimum, so ties resolve to the lexicographically
    smallest label vector. Energies come from the condensed pair arrays.
    """
    a = np.zeros(n, dtype=np.int64)
    maxpfx = np.zeros(n, dtype=np.int64)  # max(a[:m]) for each level m
    cost = np.zeros(n)
    best_energy = np.inf
    best = np.zeros(n, dtype=np.int64)
    pos = 1
    if n == 1:
        return 0.0, best
    while True:
        c = 0.0
        for x in range(pos):
            p = _cidx(n, x, pos)
            if a[x] == a[pos]:
                c += e1[p]
            else:
                c += e0[p]
        cost[pos] = c
        if pos == n - 1:
            total = 0.0
            for t in range(1, n):
                total += cost[t]
            if total < best_energy:
                best_energy = total
                for t in range(n):
                    best[t] = a[t]
            p = n - 1
            while p >= 1 and a[p] > maxpfx[p]:
                p -= 1
            if p < 1:
                return best_energy, best
            a[p] += 1
            for t in range(p + 1, n):
                a[t] = 0
            pos = p
        else:
            maxpfx[pos + 1] = maxpfx[pos] if maxpfx[pos] > a[pos] else a[pos]
            pos += 1


@njit(cache=True, parallel=True)
def kd_forest_query(
    data,
    node_dim,
    node_val,
    node_left,
    node_right,
    node_start,
    node_end,
    leaf_points,
    roots,
    k,
    search_size,
    out_idx,
    out_sim,
):
    """Best-bin-first queries over a forest of axis-aligned median-split trees.

    Every point queries the shared forest with a budget of ``search_size``
    candidate examinations (deduplicated across trees); candidates are ranked
    by cosine similarity with ties broken toward the lower index.
    """
    n = data.shape[0]
    cap = node_dim.shape[0] + roots.shape[0] + 1
    for q in prange(n):
        visited = np.zeros(n, dtype=np.uint8)
        heap_key = np.empty(cap)
        heap_node = np.empty(cap, dtype=np.int64)
        heap_seq = np.empty(cap, dtype=np.int64)
        heap_size = 0
        seq = 0
        best_sim = np.full(k, -2.0)
        best_idx = np.full(k, np.int64(n))
        filled = 0
        budget = search_size
        visited[q] = 1

        for t in range(roots.shape[0]):
            # push root
            key = 0.0
            node = roots[t]
            idx = heap_size
            heap_key[idx] = key
            heap_node[idx] = node
            heap_seq[idx] = seq
            seq += 1
            heap_size += 1
            while idx > 0:
                up = (idx - 1) // 2
                if heap_key[up] > heap_key[idx] or (
                    heap_key[up] == heap_key[idx] and heap_seq[up] > heap_seq[idx]
                ):
                    heap_key[up], heap_key[idx] = heap_key[idx], heap_key[up]
                    heap_node[up], heap_node[idx] = heap_node[idx], heap_node[up]
                    heap_seq[up], heap_seq[idx] = heap_seq[idx], heap_seq[up]
                    idx = up
                else:
                    break

        while heap_size > 0 and budget > 0:
            # pop nearest bin
            node = heap_node[0]
            heap_size -= 1
            heap_key[0] = heap_key[heap_size]
            heap_node[0] = heap_node[heap_size]
            heap_seq[0] = heap_seq[heap_size]
            idx = 0
            while True:
                l = 2 * idx + 1
                r = l + 1
                sm = idx
                if l < heap_size and (
                    heap_key[l] < heap_key[sm]
                    or (heap_key[l] == heap_key[sm] and heap_seq[l] < heap_seq[sm])
                ):
                    sm = l
                if r < heap_size and (
                    heap_key[r] < heap_key[sm]
                    or (heap_key[r] == heap_key[sm] and heap_seq[r] < heap_seq[sm])
                ):
                    sm = r
                if sm == idx:
                    break
                heap_key[idx], heap_key[sm] = heap_key[sm], heap_key[idx]
                heap_node[idx], heap_node[sm] = heap_node[sm], heap_node[idx]
                heap_seq[idx], heap_seq[sm] = heap_seq[sm], heap_seq[idx]
                idx = sm

            # descend to a leaf, pushing far branches
            while node_left[node] >= 0:
                d = node_dim[node]
                v = node_val[node]
                qc = data[q, d]
                if qc < v:
                    far = node_right[node]
                    node = node_left[node]
                else:
                    far = node_left[node]
                    node = node_right[node]
                key = qc - v
                if key < 0.0:
                    key = -key
                idx = heap_size
                heap_key[idx] = key
                heap_node[idx] = far
                heap_seq[idx] = seq
                seq += 1
                heap_size += 1
                while idx > 0:
                    up = (idx - 1) // 2
                    if heap_key[up] > heap_key[idx] or (
                        heap_key[up] == heap_key[idx] and heap_seq[up] > heap_seq[idx]
                    ):
                        heap_key[up], heap_key[idx] = heap_key[idx], heap_key[up]
                        heap_node[up], heap_node[idx] = heap_node[idx], heap_node[up]
                        heap_seq[up], heap_seq[idx] = heap_seq[idx], heap_seq[up]
                        idx = up
                    else:
                        break

            # examine leaf candidates
            for s in range(node_start[node], node_end[node]):
                if budget <= 0:
                    break
                cand = leaf_points[s]
                if visited[cand] == 1:
                    continue
                visited[cand] = 1
                budget -= 1
                sim = 0.0
                for d in range(data.shape[1]):
                    sim += data[q, d] * data[cand, d]
                if filled < k:
                    pos = filled
                    filled += 1
                else:
                    if sim < best_sim[k - 1] or (
                        sim == best_sim[k - 1] and cand > best_idx[k - 1]
                    ):
                        continue
                    pos = k - 1
                while pos > 0 and (
                    best_sim[pos - 1] < sim
                    or (best_sim[pos - 1] == sim and best_idx[pos - 1] > cand)
                ):
                    best_sim[pos] = best_sim[pos - 1]
                    best_idx[pos] = best_idx[pos - 1]
                    pos -= 1
                best_sim[pos] = sim
                best_idx[pos] = cand

        for t in range(k):
            out_idx[q, t] = best_idx[t] if t < filled else -1
            out_sim[q, t] = best_sim[t] if t < filled else -2.0
