# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the solver's hot operations.

Semantics mirror railmax._kernels_py exactly (same node order, same
tie-breaks); the test suite compares the two backends result-for-result.
The main extras here are performance tricks that provably do not change
values: ticket completion costs are cached per search level and only
recomputed when the decided edge can actually affect them (tracked via
stored cheapest-path masks).
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC

from . import _kernels_py as _py

BACKEND = "cython"

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

cdef int64_t BIG = <int64_t>1 << 60
cdef uint64_t M64 = <uint64_t>0xFFFFFFFFFFFFFFFF


cdef inline double _now() noexcept nogil:
    cdef timespec t
    clock_gettime(CLOCK_MONOTONIC, &t)
    return t.tv_sec + t.tv_nsec * 1e-9


cdef inline bint _bit(uint64_t lo, uint64_t hi, int e) noexcept nogil:
    if e < 64:
        return (lo >> e) & <uint64_t>1
    return (hi >> (e - 64)) & <uint64_t>1


cdef inline int _lowest(uint64_t lo, uint64_t hi) noexcept nogil:
    # lowest set bit index; -1 when empty
    if lo:
        return __builtin_ctzll(lo)
    if hi:
        return 64 + __builtin_ctzll(hi)
    return -1


cdef inline bint _lex_less(uint64_t alo, uint64_t ahi, uint64_t blo, uint64_t bhi) noexcept nogil:
    cdef uint64_t dlo = alo ^ blo
    cdef uint64_t dhi = ahi ^ bhi
    cdef int idx
    if dlo == 0 and dhi == 0:
        return False
    idx = _lowest(dlo, dhi)
    if _bit(alo, ahi, idx):
        return _has_above(blo, bhi, idx)
    return not _has_above(alo, ahi, idx)


cdef inline bint _has_above(uint64_t lo, uint64_t hi, int idx) noexcept nogil:
    # any bit with index strictly greater than idx?
    if idx >= 63:
        if idx >= 127:
            return False
        return (hi >> (idx - 63)) != 0
    if (lo >> (idx + 1)) != 0:
        return True
    return hi != 0


cdef class _Ctx:
    cdef int n, E, K
    cdef int64_t budget, node_limit, nodes
    cdef double deadline
    cdef bint limit_hit
    cdef int64_t best_obj
    cdef int64_t slack
    cdef uint64_t best_lo, best_hi
    cdef uint64_t all_lo, all_hi
    cdef int32_t* eu
    cdef int32_t* ev
    cdef int64_t* lens
    cdef int64_t* pts
    cdef int32_t* tsrc
    cdef int32_t* tdst
    cdef int64_t* tw
    cdef int32_t* order
    cdef int32_t* adj_start
    cdef int32_t* adj_to
    cdef int32_t* adj_eid
    cdef int64_t* cst      # (E+2) levels * K
    cdef uint64_t* plo
    cdef uint64_t* phi
    cdef int64_t* dist
    cdef uint8_t* seen
    cdef int32_t* via
    cdef int32_t* prv
    cdef int64_t* du
    cdef int64_t* dv
    cdef int32_t* via_u
    cdef int32_t* prv_u
    cdef int32_t* via_v
    cdef int32_t* prv_v
    cdef int64_t* dp
    cdef int32_t* ids
    cdef int32_t* ufp
    cdef int32_t* ufs

    def __cinit__(self, int n, int E, int K, int64_t budget):
        cdef int levels = E + 2
        self.n = n
        self.E = E
        self.K = K
        self.budget = budget
        self.eu = <int32_t*>malloc(E * sizeof(int32_t))
        self.ev = <int32_t*>malloc(E * sizeof(int32_t))
        self.lens = <int64_t*>malloc(E * sizeof(int64_t))
        self.pts = <int64_t*>malloc(E * sizeof(int64_t))
        self.tsrc = <int32_t*>malloc((K + 1) * sizeof(int32_t))
        self.tdst = <int32_t*>malloc((K + 1) * sizeof(int32_t))
        self.tw = <int64_t*>malloc((K + 1) * sizeof(int64_t))
        self.order = <int32_t*>malloc(E * sizeof(int32_t))
        self.adj_start = <int32_t*>malloc((n + 1) * sizeof(int32_t))
        self.adj_to = <int32_t*>malloc(2 * E * sizeof(int32_t))
        self.adj_eid = <int32_t*>malloc(2 * E * sizeof(int32_t))
        self.cst = <int64_t*>malloc(levels * (K + 1) * sizeof(int64_t))
        self.plo = <uint64_t*>malloc(levels * (K + 1) * sizeof(uint64_t))
        self.phi = <uint64_t*>malloc(levels * (K + 1) * sizeof(uint64_t))
        self.dist = <int64_t*>malloc(n * sizeof(int64_t))
        self.seen = <uint8_t*>malloc(n * sizeof(uint8_t))
        self.via = <int32_t*>malloc(n * sizeof(int32_t))
        self.prv = <int32_t*>malloc(n * sizeof(int32_t))
        self.du = <int64_t*>malloc(n * sizeof(int64_t))
        self.dv = <int64_t*>malloc(n * sizeof(int64_t))
        self.via_u = <int32_t*>malloc(n * sizeof(int32_t))
        self.prv_u = <int32_t*>malloc(n * sizeof(int32_t))
        self.via_v = <int32_t*>malloc(n * sizeof(int32_t))
        self.prv_v = <int32_t*>malloc(n * sizeof(int32_t))
        self.dp = <int64_t*>malloc((E + 1) * (budget + 1) * sizeof(int64_t))
        self.ids = <int32_t*>malloc((E + 1) * sizeof(int32_t))
        self.ufp = <int32_t*>malloc(n * sizeof(int32_t))
        self.ufs = <int32_t*>malloc(n * sizeof(int32_t))

    def __dealloc__(self):
        free(self.eu); free(self.ev); free(self.lens); free(self.pts)
        free(self.tsrc); free(self.tdst); free(self.tw); free(self.order)
        free(self.adj_start); free(self.adj_to); free(self.adj_eid)
        free(self.cst); free(self.plo); free(self.phi)
        free(self.dist); free(self.seen); free(self.via); free(self.prv)
        free(self.du); free(self.dv); free(self.via_u); free(self.prv_u)
        free(self.via_v); free(self.prv_v)
        free(self.dp); free(self.ids); free(self.ufp); free(self.ufs)


cdef void _build_adj(_Ctx c) noexcept:
    cdef int i, e
    cdef int32_t* deg = <int32_t*>malloc(c.n * sizeof(int32_t))
    for i in range(c.n):
        deg[i] = 0
    for e in range(c.E):
        deg[c.eu[e]] += 1
        deg[c.ev[e]] += 1
    c.adj_start[0] = 0
    for i in range(c.n):
        c.adj_start[i + 1] = c.adj_start[i] + deg[i]
        deg[i] = c.adj_start[i]
    for e in range(c.E):
        c.adj_to[deg[c.eu[e]]] = c.ev[e]
        c.adj_eid[deg[c.eu[e]]] = e
        deg[c.eu[e]] += 1
        c.adj_to[deg[c.ev[e]]] = c.eu[e]
        c.adj_eid[deg[c.ev[e]]] = e
        deg[c.ev[e]] += 1
    free(deg)


cdef int64_t _dijkstra_pair(
    _Ctx c,
    uint64_t ilo, uint64_t ihi, uint64_t olo, uint64_t ohi,
    int s, int t, int64_t cap,
    uint64_t* path_lo, uint64_t* path_hi,
) noexcept:
    """Cheapest s->t completion cost (in-edges free, out barred, undecided at
    length), capped: returns BIG and empty path when above cap. Deterministic
    settle order (distance, then vertex id); ties never relax."""
    cdef int i, bi, p, other, e, cur
    cdef int64_t best, nd, w
    for i in range(c.n):
        c.dist[i] = BIG
        c.seen[i] = 0
        c.via[i] = -1
        c.prv[i] = -1
    c.dist[s] = 0
    path_lo[0] = 0
    path_hi[0] = 0
    while True:
        best = BIG
        bi = -1
        for i in range(c.n):
            if not c.seen[i] and c.dist[i] < best:
                best = c.dist[i]
                bi = i
        if bi < 0 or best > cap:
            return BIG
        if bi == t:
            break
        c.seen[bi] = 1
        for p in range(c.adj_start[bi], c.adj_start[bi + 1]):
            e = c.adj_eid[p]
            if _bit(olo, ohi, e):
                continue
            other = c.adj_to[p]
            w = 0 if _bit(ilo, ihi, e) else c.lens[e]
            nd = best + w
            if nd < c.dist[other]:
                c.dist[other] = nd
                c.via[other] = e
                c.prv[other] = bi
    cur = t
    while cur != s:
        e = c.via[cur]
        if e < 64:
            path_lo[0] |= <uint64_t>1 << e
        else:
            path_hi[0] |= <uint64_t>1 << (e - 64)
        cur = c.prv[cur]
    return c.dist[t]


cdef void _dijkstra_sssp(
    _Ctx c,
    uint64_t ilo, uint64_t ihi, uint64_t olo, uint64_t ohi,
    int s, int64_t cap,
    int64_t* dist, int32_t* via, int32_t* prv,
) noexcept:
    """All capped distances from s under the node metric; via/prv give a
    deterministic shortest-path tree (same settle and relax rules as the
    pair variant)."""
    cdef int i, bi, p, other, e
    cdef int64_t best, nd, w
    for i in range(c.n):
        dist[i] = BIG
        c.seen[i] = 0
        via[i] = -1
        prv[i] = -1
    dist[s] = 0
    while True:
        best = BIG
        bi = -1
        for i in range(c.n):
            if not c.seen[i] and dist[i] < best:
                best = dist[i]
                bi = i
        if bi < 0 or best > cap:
            return
        c.seen[bi] = 1
        for p in range(c.adj_start[bi], c.adj_start[bi + 1]):
            e = c.adj_eid[p]
            if _bit(olo, ohi, e):
                continue
            other = c.adj_to[p]
            w = 0 if _bit(ilo, ihi, e) else c.lens[e]
            nd = best + w
            if nd < dist[other]:
                dist[other] = nd
                via[other] = e
                prv[other] = bi


cdef void _trace_tree(
    int32_t* via, int32_t* prv, int node, int root,
    uint64_t* mlo, uint64_t* mhi,
) noexcept:
    cdef int e
    while node != root:
        e = via[node]
        if e < 64:
            mlo[0] |= <uint64_t>1 << e
        else:
            mhi[0] |= <uint64_t>1 << (e - 64)
        node = prv[node]


cdef int64_t _fk_bound(_Ctx c, uint64_t dlo, uint64_t dhi, int64_t rem) noexcept:
    cdef int64_t total = 0
    cdef int oi, e
    for oi in range(c.E):
        e = c.order[oi]
        if _bit(dlo, dhi, e):
            continue
        if c.lens[e] <= rem:
            total += c.pts[e]
            rem -= c.lens[e]
            if rem == 0:
                break
        else:
            total += c.pts[e] * rem / c.lens[e]
            break
    return total


cdef int _uf_find(_Ctx c, int i) noexcept:
    while c.ufp[i] != i:
        c.ufp[i] = c.ufp[c.ufp[i]]
        i = c.ufp[i]
    return i


cdef int _uf_find_nc(_Ctx c, int i) noexcept:
    # no path compression: safe under the enumeration's undo scheme
    while c.ufp[i] != i:
        i = c.ufp[i]
    return i


cdef int64_t _score_mask(_Ctx c, uint64_t lo, uint64_t hi) noexcept:
    cdef int64_t total = 0
    cdef int i, e, ru, rv
    for i in range(c.n):
        c.ufp[i] = i
        c.ufs[i] = 1
    for e in range(c.E):
        if not _bit(lo, hi, e):
            continue
        total += c.pts[e]
        ru = _uf_find(c, c.eu[e])
        rv = _uf_find(c, c.ev[e])
        if ru != rv:
            if c.ufs[ru] < c.ufs[rv]:
                ru, rv = rv, ru
            c.ufp[rv] = ru
            c.ufs[ru] += c.ufs[rv]
    for i in range(c.K):
        if c.tw[i] > 0 and _uf_find(c, c.tsrc[i]) == _uf_find(c, c.tdst[i]):
            total += c.tw[i]
    return total


cdef void _consider(_Ctx c, uint64_t lo, uint64_t hi, int64_t obj) noexcept:
    if obj > c.best_obj or (
        obj == c.best_obj and _lex_less(lo, hi, c.best_lo, c.best_hi)
    ):
        c.best_obj = obj
        c.best_lo = lo
        c.best_hi = hi


cdef bint _promising(
    _Ctx c, int64_t bound, uint64_t ilo, uint64_t ihi, uint64_t ulo, uint64_t uhi
) noexcept:
    cdef uint64_t lmlo, lmhi
    cdef int top
    if bound > c.best_obj + c.slack:
        return True
    if c.slack > 0 or bound < c.best_obj:
        return False
    if ilo == 0 and ihi == 0:
        lmlo = 0
        lmhi = 0
    else:
        # highest set bit of the in-set
        if ihi:
            top = 127 - _clz_idx(ihi)
        else:
            top = 63 - _clz_idx(ilo)
        lmlo = ilo
        lmhi = ihi
        if top >= 64:
            lmlo |= ulo
            lmhi |= uhi & ((<uint64_t>1 << (top - 64)) - 1)
        elif top > 0:
            lmlo |= ulo & ((<uint64_t>1 << top) - 1)
    return _lex_less(lmlo, lmhi, c.best_lo, c.best_hi)


cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil


cdef inline int _clz_idx(uint64_t x) noexcept nogil:
    return __builtin_clzll(x)


cdef int64_t _knapsack_exact(
    _Ctx c, int m, int64_t cap, uint64_t* out_lo, uint64_t* out_hi
) noexcept:
    """Exact knapsack over c.ids[0..m) with capacity cap; lex-smallest optimal
    mask per the reference reconstruction rule."""
    cdef int i, e
    cdef int64_t b, bestv, cand, need
    cdef int64_t* nxt
    cdef int64_t* row
    for b in range(cap + 1):
        c.dp[m * (c.budget + 1) + b] = 0
    for i in range(m - 1, -1, -1):
        e = c.ids[i]
        row = c.dp + i * (c.budget + 1)
        nxt = c.dp + (i + 1) * (c.budget + 1)
        for b in range(cap + 1):
            bestv = nxt[b]
            if c.lens[e] <= b:
                cand = c.pts[e] + nxt[b - c.lens[e]]
                if cand > bestv:
                    bestv = cand
            row[b] = bestv
    need = c.dp[0 * (c.budget + 1) + cap]
    out_lo[0] = 0
    out_hi[0] = 0
    b = cap
    for i in range(m):
        if need == 0:
            break
        e = c.ids[i]
        if c.lens[e] <= b and c.pts[e] + c.dp[(i + 1) * (c.budget + 1) + b - c.lens[e]] == need:
            if e < 64:
                out_lo[0] |= <uint64_t>1 << e
            else:
                out_hi[0] |= <uint64_t>1 << (e - 64)
            b -= c.lens[e]
            need -= c.pts[e]
    return c.dp[0 * (c.budget + 1) + cap]


cdef void _node(
    _Ctx c,
    uint64_t ilo, uint64_t ihi, uint64_t olo, uint64_t ohi,
    int64_t p_in, int64_t used, int depth, int chg_edge, int chg_kind,
) noexcept:
    # chg_kind: 0 root, 1 include, 2 exclude
    cdef int64_t rem, p_rem, und_len, completed_w, open_w, obj_in, bound, val, ccst
    cdef uint64_t ulo, uhi, nlo, nhi, tlo, thi, klo, khi, blo, bhi
    cdef int k, e, kbest, m, branch, lvl, plvl, eun, evn
    cdef int64_t a1, a2
    cdef int64_t* cst
    cdef uint64_t* plo
    cdef uint64_t* phi
    cdef int64_t* pcst

    c.nodes += 1
    if c.nodes > c.node_limit:
        c.limit_hit = True
        return
    if (c.nodes & 255) == 0 and _now() > c.deadline:
        c.limit_hit = True
        return

    rem = c.budget - used

    # settle undecided edges that no longer fit
    nlo = 0
    nhi = 0
    ulo = c.all_lo & ~(ilo | olo)
    uhi = c.all_hi & ~(ihi | ohi)
    while True:
        e = _lowest(ulo, uhi)
        if e < 0:
            break
        if e < 64:
            ulo &= ulo - 1
        else:
            uhi &= uhi - 1
        if c.lens[e] > rem:
            if e < 64:
                nlo |= <uint64_t>1 << e
                olo |= <uint64_t>1 << e
            else:
                nhi |= <uint64_t>1 << (e - 64)
                ohi |= <uint64_t>1 << (e - 64)

    lvl = depth * (c.K + 1)
    cst = c.cst + lvl
    plo = c.plo + lvl
    phi = c.phi + lvl
    if chg_kind == 0:
        for k in range(c.K):
            if c.tw[k] <= 0:
                cst[k] = BIG
                plo[k] = 0
                phi[k] = 0
            else:
                cst[k] = _dijkstra_pair(
                    c, ilo, ihi, olo, ohi, c.tsrc[k], c.tdst[k], rem, &plo[k], &phi[k]
                )
    else:
        plvl = (depth - 1) * (c.K + 1)
        memcpy(cst, c.cst + plvl, c.K * sizeof(int64_t))
        memcpy(plo, c.plo + plvl, c.K * sizeof(uint64_t))
        memcpy(phi, c.phi + plvl, c.K * sizeof(uint64_t))
        if chg_kind == 1:
            # include: a cost can only improve through the newly free edge,
            # so two single-source runs from its endpoints refresh every
            # ticket at once; completed tickets stay complete and
            # proven-unreachable tickets stay unreachable
            p_rem = rem + c.lens[chg_edge]
            eun = c.eu[chg_edge]
            evn = c.ev[chg_edge]
            _dijkstra_sssp(c, ilo, ihi, olo, ohi, eun, rem, c.du, c.via_u, c.prv_u)
            _dijkstra_sssp(c, ilo, ihi, olo, ohi, evn, rem, c.dv, c.via_v, c.prv_v)
            for k in range(c.K):
                if c.tw[k] <= 0:
                    continue
                ccst = cst[k]
                if ccst <= 0 or ccst > p_rem:
                    continue
                a1 = c.du[c.tsrc[k]] + c.dv[c.tdst[k]]
                a2 = c.dv[c.tsrc[k]] + c.du[c.tdst[k]]
                if a2 < a1:
                    a1 = a2
                    if a1 < ccst:
                        cst[k] = a1
                        plo[k] = 0
                        phi[k] = 0
                        _trace_tree(c.via_v, c.prv_v, c.tsrc[k], evn, &plo[k], &phi[k])
                        _trace_tree(c.via_u, c.prv_u, c.tdst[k], eun, &plo[k], &phi[k])
                        if chg_edge < 64:
                            plo[k] |= <uint64_t>1 << chg_edge
                        else:
                            phi[k] |= <uint64_t>1 << (chg_edge - 64)
                elif a1 < ccst:
                    cst[k] = a1
                    plo[k] = 0
                    phi[k] = 0
                    _trace_tree(c.via_u, c.prv_u, c.tsrc[k], eun, &plo[k], &phi[k])
                    _trace_tree(c.via_v, c.prv_v, c.tdst[k], evn, &plo[k], &phi[k])
                    if chg_edge < 64:
                        plo[k] |= <uint64_t>1 << chg_edge
                    else:
                        phi[k] |= <uint64_t>1 << (chg_edge - 64)
        else:
            # exclude: a cost can only move if the barred edge sat on the
            # stored cheapest path
            if chg_edge < 64:
                nlo |= <uint64_t>1 << chg_edge
            else:
                nhi |= <uint64_t>1 << (chg_edge - 64)
        if nlo or nhi:
            for k in range(c.K):
                if c.tw[k] <= 0:
                    continue
                if (plo[k] & nlo) or (phi[k] & nhi):
                    cst[k] = _dijkstra_pair(
                        c, ilo, ihi, olo, ohi, c.tsrc[k], c.tdst[k], rem, &plo[k], &phi[k]
                    )

    completed_w = 0
    open_w = 0
    kbest = -1
    for k in range(c.K):
        if c.tw[k] <= 0:
            continue
        if cst[k] == 0:
            completed_w += c.tw[k]
        elif cst[k] <= rem:
            open_w += c.tw[k]
            if kbest < 0 or c.tw[k] > c.tw[kbest]:
                kbest = k
    obj_in = p_in + completed_w
    _consider(c, ilo, ihi, obj_in)

    ulo = c.all_lo & ~(ilo | olo)
    uhi = c.all_hi & ~(ihi | ohi)
    if ulo == 0 and uhi == 0:
        return
    if c.limit_hit:
        return

    und_len = 0
    tlo = ulo
    thi = uhi
    while True:
        e = _lowest(tlo, thi)
        if e < 0:
            break
        if e < 64:
            tlo &= tlo - 1
        else:
            thi &= thi - 1
        und_len += c.lens[e]
    if und_len <= rem:
        # everything fits: scores are monotone, take it all
        _consider(c, ilo | ulo, ihi | uhi, _score_mask(c, ilo | ulo, ihi | uhi))
        return

    bound = obj_in + open_w + _fk_bound(c, ilo | olo, ihi | ohi, rem)
    if not _promising(c, bound, ilo, ihi, ulo, uhi):
        return

    if kbest < 0:
        # no open ticket can still complete: the subtree is a pure knapsack
        m = 0
        tlo = ulo
        thi = uhi
        while True:
            e = _lowest(tlo, thi)
            if e < 0:
                break
            if e < 64:
                tlo &= tlo - 1
            else:
                thi &= thi - 1
            c.ids[m] = e
            m += 1
        val = _knapsack_exact(c, m, rem, &klo, &khi)
        _consider(c, ilo | klo, ihi | khi, obj_in + val)
        return

    ccst = _dijkstra_pair(
        c, ilo, ihi, olo, ohi, c.tsrc[kbest], c.tdst[kbest], rem, &blo, &bhi
    )
    cst[kbest] = ccst
    plo[kbest] = blo
    phi[kbest] = bhi
    # longest undecided edge on the cheapest completion path (tie: lowest id)
    blo &= ~ilo
    bhi &= ~ihi
    branch = -1
    while True:
        e = _lowest(blo, bhi)
        if e < 0:
            break
        if e < 64:
            blo &= blo - 1
        else:
            bhi &= bhi - 1
        if branch < 0 or c.lens[e] > c.lens[branch]:
            branch = e
    if branch < 0:
        return
    if branch < 64:
        ilo |= <uint64_t>1 << branch
        _node(c, ilo, ihi, olo, ohi, p_in + c.pts[branch], used + c.lens[branch], depth + 1, branch, 1)
        ilo &= ~(<uint64_t>1 << branch)
        if c.limit_hit:
            return
        _node(c, ilo, ihi, olo | (<uint64_t>1 << branch), ohi, p_in, used, depth + 1, branch, 2)
    else:
        ihi |= <uint64_t>1 << (branch - 64)
        _node(c, ilo, ihi, olo, ohi, p_in + c.pts[branch], used + c.lens[branch], depth + 1, branch, 1)
        ihi &= ~(<uint64_t>1 << (branch - 64))
        if c.limit_hit:
            return
        _node(c, ilo, ihi, olo, ohi | (<uint64_t>1 << (branch - 64)), p_in, used, depth + 1, branch, 2)


cdef _Ctx _make_ctx(n, eu, ev, lens, pts, ts, tt, tw, budget):
    cdef int E = len(eu)
    cdef int K = len(ts)
    cdef _Ctx c = _Ctx(n, E, K, budget)
    cdef int i
    for i in range(E):
        c.eu[i] = eu[i]
        c.ev[i] = ev[i]
        c.lens[i] = lens[i]
        c.pts[i] = pts[i]
    for i in range(K):
        c.tsrc[i] = ts[i]
        c.tdst[i] = tt[i]
        c.tw[i] = tw[i]
    _build_adj(c)
    return c


cdef inline uint64_t _mlo(mask):
    return <uint64_t>(mask & 0xFFFFFFFFFFFFFFFF)


cdef inline uint64_t _mhi(mask):
    return <uint64_t>((mask >> 64) & 0xFFFFFFFFFFFFFFFF)


cdef _pymask(uint64_t lo, uint64_t hi):
    return (int(hi) << 64) | int(lo)


def search_best(
    n, eu, ev, lens, pts, ts, tt, tw,
    budget, forced_in, forced_out,
    density_order, node_limit, deadline,
    inc_obj, inc_mask, prune_slack=0,
):
    """Compiled twin of the reference search; see _kernels_py.search_best."""
    if len(eu) > 128:
        return _py.search_best(
            n, eu, ev, lens, pts, ts, tt, tw, budget, forced_in, forced_out,
            density_order, node_limit, deadline, inc_obj, inc_mask, prune_slack,
        )
    # force big-int semantics: a C shift would be undefined past 63 edges
    cdef object one = 1
    all_mask = (one << len(eu)) - 1
    cdef _Ctx c = _make_ctx(n, eu, ev, lens, pts, ts, tt, tw, budget)
    cdef int i
    for i in range(c.E):
        c.order[i] = density_order[i]
    c.all_lo = _mlo(all_mask)
    c.all_hi = _mhi(all_mask)
    c.node_limit = node_limit
    c.deadline = deadline
    c.nodes = 0
    c.limit_hit = False
    c.best_obj = inc_obj
    c.slack = prune_slack
    c.best_lo = _mlo(inc_mask)
    c.best_hi = _mhi(inc_mask)
    cdef uint64_t filo = _mlo(forced_in), fihi = _mhi(forced_in)
    cdef uint64_t folo = _mlo(forced_out), fohi = _mhi(forced_out)
    cdef int64_t p_in = 0, used = 0
    for i in range(c.E):
        if _bit(filo, fihi, i):
            p_in += c.pts[i]
            used += c.lens[i]
    _node(c, filo, fihi, folo, fohi, p_in, used, 0, -1, 0)
    return int(c.best_obj), _pymask(c.best_lo, c.best_hi), int(c.nodes), bool(c.limit_hit)


def lex_less(a, b):
    return bool(_lex_less(_mlo(a), _mhi(a), _mlo(b), _mhi(b)))


def mask_length(lens, mask):
    cdef int64_t total = 0
    cdef int e
    for e in range(len(lens)):
        if (mask >> e) & 1:
            total += lens[e]
    return int(total)


def component_labels(n, eu, ev, mask):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    cdef int e
    for e in range(len(eu)):
        if (mask >> e) & 1:
            ru, rv = find(eu[e]), find(ev[e])
            if ru != rv:
                parent[rv] = ru
    return [find(i) for i in range(n)]


def mask_score(n, eu, ev, pts, ts, tt, tw, mask):
    if len(eu) > 128:
        return _py.mask_score(n, eu, ev, pts, ts, tt, tw, mask)
    cdef _Ctx c = _make_ctx(n, eu, ev, [1] * len(eu), pts, ts, tt, tw, 1)
    return int(_score_mask(c, _mlo(mask), _mhi(mask)))


def ticket_costs(n, eu, ev, lens, ts, tt, in_mask, out_mask, cap):
    """Cheapest completion cost per ticket, capped at cap (cap+1 beyond)."""
    if len(eu) > 128:
        return _py.ticket_costs(n, eu, ev, lens, ts, tt, in_mask, out_mask, cap)
    cdef _Ctx c = _make_ctx(n, eu, ev, lens, [0] * len(eu), ts, tt, [0] * len(ts), 1)
    cdef uint64_t plo0 = 0, phi0 = 0
    cdef int64_t got
    cdef int k
    out = []
    for k in range(c.K):
        got = _dijkstra_pair(
            c, _mlo(in_mask), _mhi(in_mask), _mlo(out_mask), _mhi(out_mask),
            c.tsrc[k], c.tdst[k], cap, &plo0, &phi0,
        )
        out.append(int(cap) + 1 if got >= BIG else int(got))
    return out


def cheapest_path(n, eu, ev, lens, in_mask, out_mask, s, t, cap):
    """(cost, edge ids of one cheapest s-t path ordered from s)."""
    if len(eu) > 128:
        return _py.cheapest_path(n, eu, ev, lens, in_mask, out_mask, s, t, cap)
    cdef _Ctx c = _make_ctx(n, eu, ev, lens, [0] * len(eu), [s], [t], [0], 1)
    cdef uint64_t plo0 = 0, phi0 = 0
    cdef int64_t got = _dijkstra_pair(
        c, _mlo(in_mask), _mhi(in_mask), _mlo(out_mask), _mhi(out_mask),
        s, t, cap, &plo0, &phi0,
    )
    if got >= BIG:
        return int(cap) + 1, []
    # reconstruct ordered edge list by walking prv from t
    path = []
    cur = t
    while cur != s:
        path.append(c.via[cur])
        cur = c.prv[cur]
    path.reverse()
    return int(got), path


def knapsack_bound(order, lens, pts, decided_mask, budget):
    cdef int64_t total = 0
    cdef int64_t rem = budget
    cdef int e
    for e in order:
        if (decided_mask >> e) & 1:
            continue
        if lens[e] <= rem:
            total += pts[e]
            rem -= lens[e]
            if rem == 0:
                break
        else:
            total += pts[e] * rem // lens[e]
            break
    return int(total)


def knapsack_exact(ids, lens, pts, budget):
    if ids and max(ids) >= 128:
        return _py.knapsack_exact(ids, lens, pts, budget)
    cdef int m = len(ids)
    cdef int E = (max(ids) + 1) if m else 1
    cdef _Ctx c = _make_ctx(
        1, [0] * E, [0] * E, lens[:E], pts[:E], [], [], [], budget
    )
    cdef int i
    for i in range(m):
        c.ids[i] = ids[i]
    cdef uint64_t klo = 0, khi = 0
    cdef int64_t val = _knapsack_exact(c, m, budget, &klo, &khi)
    return int(val), _pymask(klo, khi)


cdef int64_t _bf_best_obj
cdef uint64_t _bf_best_lo, _bf_best_hi


cdef void _bf_rec(
    _Ctx c, int e, int64_t acc, int64_t rem,
    uint64_t mlo, uint64_t mhi,
    uint64_t filo, uint64_t fihi, uint64_t folo, uint64_t fohi,
) noexcept:
    global _bf_best_obj, _bf_best_lo, _bf_best_hi
    cdef int k, ru, rv
    cdef int64_t obj
    cdef int32_t old_rv_parent, old_ru_size
    while e < c.E and (_bit(filo, fihi, e) or _bit(folo, fohi, e)):
        e += 1
    if e == c.E:
        obj = acc
        for k in range(c.K):
            if c.tw[k] > 0 and _uf_find_nc(c, c.tsrc[k]) == _uf_find_nc(c, c.tdst[k]):
                obj += c.tw[k]
        if obj > _bf_best_obj or (
            obj == _bf_best_obj and _lex_less(mlo, mhi, _bf_best_lo, _bf_best_hi)
        ):
            _bf_best_obj = obj
            _bf_best_lo = mlo
            _bf_best_hi = mhi
        return
    _bf_rec(c, e + 1, acc, rem, mlo, mhi, filo, fihi, folo, fohi)
    if c.lens[e] <= rem:
        ru = _uf_find_nc(c, c.eu[e])
        rv = _uf_find_nc(c, c.ev[e])
        if ru != rv:
            if c.ufs[ru] < c.ufs[rv]:
                ru, rv = rv, ru
            old_rv_parent = c.ufp[rv]
            old_ru_size = c.ufs[ru]
            c.ufp[rv] = ru
            c.ufs[ru] += c.ufs[rv]
            if e < 64:
                _bf_rec(c, e + 1, acc + c.pts[e], rem - c.lens[e], mlo | (<uint64_t>1 << e), mhi, filo, fihi, folo, fohi)
            else:
                _bf_rec(c, e + 1, acc + c.pts[e], rem - c.lens[e], mlo, mhi | (<uint64_t>1 << (e - 64)), filo, fihi, folo, fohi)
            c.ufp[rv] = rv
            c.ufs[ru] = old_ru_size
        else:
            if e < 64:
                _bf_rec(c, e + 1, acc + c.pts[e], rem - c.lens[e], mlo | (<uint64_t>1 << e), mhi, filo, fihi, folo, fohi)
            else:
                _bf_rec(c, e + 1, acc + c.pts[e], rem - c.lens[e], mlo, mhi | (<uint64_t>1 << (e - 64)), filo, fihi, folo, fohi)


def brute_force_best(n, eu, ev, lens, pts, ts, tt, tw, budget, forced_in=0, forced_out=0):
    """Exhaustive oracle; see _kernels_py.brute_force_best."""
    global _bf_best_obj, _bf_best_lo, _bf_best_hi
    if len(eu) > 128:
        return _py.brute_force_best(n, eu, ev, lens, pts, ts, tt, tw, budget, forced_in, forced_out)
    cdef _Ctx c = _make_ctx(n, eu, ev, lens, pts, ts, tt, tw, max(budget, 1))
    cdef int i, ru, rv
    cdef int64_t acc = 0, rem = budget
    for i in range(c.n):
        c.ufp[i] = i
        c.ufs[i] = 1
    cdef uint64_t filo = _mlo(forced_in), fihi = _mhi(forced_in)
    cdef uint64_t folo = _mlo(forced_out), fohi = _mhi(forced_out)
    for i in range(c.E):
        if _bit(filo, fihi, i):
            acc += c.pts[i]
            rem -= c.lens[i]
            ru = _uf_find_nc(c, c.eu[i])
            rv = _uf_find_nc(c, c.ev[i])
            if ru != rv:
                if c.ufs[ru] < c.ufs[rv]:
                    ru, rv = rv, ru
                c.ufp[rv] = ru
                c.ufs[ru] += c.ufs[rv]
    if rem < 0:
        raise ValueError("forced-in edges exceed the budget")
    _bf_best_obj = -1
    _bf_best_lo = 0
    _bf_best_hi = 0
    _bf_rec(c, 0, acc, rem, filo, fihi, filo, fihi, folo, fohi)
    return int(_bf_best_obj), _pymask(_bf_best_lo, _bf_best_hi)

