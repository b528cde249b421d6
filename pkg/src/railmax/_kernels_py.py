"""Pure-Python kernels for the solver's hot operations.

`railmax.kernels` selects between this module and the compiled extension
`railmax._ckernels`; both expose the same functions with identical semantics,
and the test suite runs them differentially. Edge/ticket data arrives as flat
integer lists; selections are arbitrary-precision int bitsets keyed by edge id.
"""

from __future__ import annotations

BACKEND = "python"

_UNREACHED = 1 << 30


def lex_less(a: int, b: int) -> bool:
    """True if bitset `a` reads lexicographically before `b` when both are
    written as ascending id tuples ((3,) > (2, 9); (3,) < (3, 5))."""
    d = a ^ b
    if d == 0:
        return False
    low = d & -d
    shift = low.bit_length()
    if a & low:
        return (b >> shift) != 0
    return (a >> shift) == 0


def component_labels(n: int, eu: list, ev: list, mask: int) -> list:
    """Union-find component root per vertex, under the member edges."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    m = mask
    while m:
        e = (m & -m).bit_length() - 1
        m &= m - 1
        ru, rv = find(eu[e]), find(ev[e])
        if ru != rv:
            parent[rv] = ru
    return [find(i) for i in range(n)]


def mask_score(n: int, eu, ev, pts, ts, tt, tw, mask: int) -> int:
    """Edge points plus ticket weights of pairs connected by `mask`."""
    total = 0
    m = mask
    while m:
        e = (m & -m).bit_length() - 1
        m &= m - 1
        total += pts[e]
    label = component_labels(n, eu, ev, mask)
    for k in range(len(ts)):
        if tw[k] and label[ts[k]] == label[tt[k]]:
            total += tw[k]
    return total


def mask_length(lens, mask: int) -> int:
    total = 0
    m = mask
    while m:
        e = (m & -m).bit_length() - 1
        m &= m - 1
        total += lens[e]
    return total


def ticket_costs(
    n: int, eu, ev, lens, ts, tt, in_mask: int, out_mask: int, cap: int
) -> list:
    """Cheapest completion cost per ticket: shortest path where member edges
    are free, excluded edges are barred, undecided edges cost their length.

    Costs above `cap` are reported as cap + 1. Deterministic: vertices are
    settled in (distance, id) order and ties never relax.
    """
    # adjacency
    deg = [0] * n
    E = len(eu)
    for e in range(E):
        if out_mask >> e & 1:
            continue
        deg[eu[e]] += 1
        deg[ev[e]] += 1
    start = [0] * (n + 1)
    for i in range(n):
        start[i + 1] = start[i] + deg[i]
    pos = start[:]
    nbr_to = [0] * start[n]
    nbr_w = [0] * start[n]
    for e in range(E):
        if out_mask >> e & 1:
            continue
        w = 0 if in_mask >> e & 1 else lens[e]
        u, v = eu[e], ev[e]
        nbr_to[pos[u]] = v
        nbr_w[pos[u]] = w
        pos[u] += 1
        nbr_to[pos[v]] = u
        nbr_w[pos[v]] = w
        pos[v] += 1

    K = len(ts)
    out = [0] * K
    by_source: dict[int, list[int]] = {}
    for k in range(K):
        by_source.setdefault(ts[k], []).append(k)

    for src, klist in by_source.items():
        dist = [_UNREACHED] * n
        done = [False] * n
        dist[src] = 0
        for _ in range(n):
            best, bi = _UNREACHED, -1
            for i in range(n):
                if not done[i] and dist[i] < best:
                    best, bi = dist[i], i
            if bi < 0 or best > cap:
                break
            done[bi] = True
            for p in range(start[bi], start[bi + 1]):
                nd = best + nbr_w[p]
                if nd < dist[nbr_to[p]]:
                    dist[nbr_to[p]] = nd
        for k in klist:
            d = dist[tt[k]]
            out[k] = d if d <= cap else cap + 1
    return out


def cheapest_path(
    n: int, eu, ev, lens, in_mask: int, out_mask: int, s: int, t: int, cap: int
):
    """(cost, edge ids along one cheapest s-t path ordered from s), or
    (cap + 1, []) when unreachable within cap. Same metric and determinism
    rules as ticket_costs; the path is the first-settled shortest path."""
    dist = [_UNREACHED] * n
    done = [False] * n
    via = [-1] * n  # edge id used to reach vertex
    prev = [-1] * n
    dist[s] = 0
    E = len(eu)
    # adjacency as (other, weight, edge id) triples
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for e in range(E):
        if out_mask >> e & 1:
            continue
        w = 0 if in_mask >> e & 1 else lens[e]
        adj[eu[e]].append((ev[e], w, e))
        adj[ev[e]].append((eu[e], w, e))
    for _ in range(n):
        best, bi = _UNREACHED, -1
        for i in range(n):
            if not done[i] and dist[i] < best:
                best, bi = dist[i], i
        if bi < 0 or best > cap:
            break
        if bi == t:
            break
        done[bi] = True
        for other, w, e in adj[bi]:
            nd = best + w
            if nd < dist[other]:
                dist[other] = nd
                via[other] = e
                prev[other] = bi
    if dist[t] > cap:
        return cap + 1, []
    path = []
    i = t
    while i != s:
        path.append(via[i])
        i = prev[i]
    path.reverse()
    return dist[t], path


def knapsack_bound(order, lens, pts, decided_mask: int, budget: int) -> int:
    """Fractional-knapsack value of undecided edges packed by density into
    `budget`; integer floor (scores are integral, so flooring stays valid)."""
    total = 0
    rem = budget
    for e in order:
        if decided_mask >> e & 1:
            continue
        if lens[e] <= rem:
            total += pts[e]
            rem -= lens[e]
            if rem == 0:
                break
        else:
            total += pts[e] * rem // lens[e]
            break
    return total


def knapsack_exact(ids, lens, pts, budget: int):
    """Exact 0/1 knapsack over the given edge ids: (best value, lex-smallest
    best mask). Used when a subtree has no ticket decisions left, turning the
    whole subtree into one DP evaluation.

    Reconstruction order: ascending id, include when the optimum is still
    attainable, stop once the remaining need is zero. With strictly positive
    point values this yields the lex-smallest optimal mask.
    """
    m = len(ids)
    # dp[i][b]: best value using ids[i:] with capacity b
    dp = [[0] * (budget + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        e = ids[i]
        le, pe = lens[e], pts[e]
        row, nxt = dp[i], dp[i + 1]
        for b in range(budget + 1):
            best = nxt[b]
            if le <= b:
                cand = pe + nxt[b - le]
                if cand > best:
                    best = cand
            row[b] = best
    need = dp[0][budget]
    mask = 0
    b = budget
    for i in range(m):
        if need == 0:
            break
        e = ids[i]
        if lens[e] <= b and pts[e] + dp[i + 1][b - lens[e]] == need:
            mask |= 1 << e
            b -= lens[e]
            need -= pts[e]
    return dp[0][budget], mask


def search_best(
    n: int, eu, ev, lens, pts, ts, tt, tw,
    budget: int, forced_in: int, forced_out: int,
    density_order, node_limit: int, deadline: float,
    inc_obj: int, inc_mask: int, prune_slack: int = 0,
):
    """Reference branch-and-bound search (the compiled kernel mirrors this
    node for node). Returns (best_obj, best_mask, nodes, limit_hit).

    Node recipe: settle unaffordable edges, update the incumbent with the
    in-set itself, take everything when it all fits (scores are monotone),
    prune on the knapsack+reachable-tickets bound, then branch on the lowest
    undecided edge of the cheapest completion path of the most valuable
    open ticket (longest edge first, ties to the lowest id); with no open
    ticket left the subtree is a pure knapsack and is closed exactly by DP.
    """
    import time as _time

    E = len(eu)
    all_mask = (1 << E) - 1
    state = {
        "best_obj": inc_obj,
        "best_mask": inc_mask,
        "nodes": 0,
        "limit": False,
    }

    def consider(mask, obj):
        if obj > state["best_obj"] or (
            obj == state["best_obj"] and lex_less(mask, state["best_mask"])
        ):
            state["best_obj"] = obj
            state["best_mask"] = mask

    def promising(bound, in_mask, undecided):
        if bound > state["best_obj"] + prune_slack:
            return True
        if prune_slack > 0 or bound < state["best_obj"]:
            return False
        if in_mask == 0:
            lexmin = 0
        else:
            lexmin = in_mask | (undecided & ((1 << (in_mask.bit_length() - 1)) - 1))
        return lex_less(lexmin, state["best_mask"])

    def node(in_mask, out_mask, p_in, used):
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            state["limit"] = True
            return
        if state["nodes"] % 256 == 0 and _time.monotonic() > deadline:
            state["limit"] = True
            return
        rem = budget - used
        m = all_mask & ~(in_mask | out_mask)
        while m:
            e = (m & -m).bit_length() - 1
            m &= m - 1
            if lens[e] > rem:
                out_mask |= 1 << e

        costs = ticket_costs(n, eu, ev, lens, ts, tt, in_mask, out_mask, rem)
        completed_w = 0
        open_w = 0
        kbest = -1
        for k in range(len(ts)):
            if tw[k] <= 0:
                continue
            c = costs[k]
            if c == 0:
                completed_w += tw[k]
            elif c <= rem:
                open_w += tw[k]
                if kbest < 0 or tw[k] > tw[kbest]:
                    kbest = k
        obj_in = p_in + completed_w
        consider(in_mask, obj_in)

        undecided = all_mask & ~(in_mask | out_mask)
        if undecided == 0:
            return
        if state["limit"]:
            return

        und_len = mask_length(lens, undecided)
        if und_len <= rem:
            take = in_mask | undecided
            consider(take, mask_score(n, eu, ev, pts, ts, tt, tw, take))
            return

        bound = obj_in + open_w + knapsack_bound(
            density_order, lens, pts, in_mask | out_mask, rem
        )
        if not promising(bound, in_mask, undecided):
            return

        if kbest < 0:
            ids = []
            m = undecided
            while m:
                e = (m & -m).bit_length() - 1
                m &= m - 1
                ids.append(e)
            value, kmask = knapsack_exact(ids, lens, pts, rem)
            consider(in_mask | kmask, obj_in + value)
            return

        _, path = cheapest_path(
            n, eu, ev, lens, in_mask, out_mask, ts[kbest], tt[kbest], rem
        )
        # longest undecided edge on the path, ties to the lowest id
        branch = -1
        for e in sorted(path):
            if not in_mask >> e & 1 and (branch < 0 or lens[e] > lens[branch]):
                branch = e
        bit = 1 << branch
        node(in_mask | bit, out_mask, p_in + pts[branch], used + lens[branch])
        if state["limit"]:
            return
        node(in_mask, out_mask | bit, p_in, used)

    node(
        forced_in,
        forced_out,
        sum(pts[e] for e in range(E) if forced_in >> e & 1),
        mask_length(lens, forced_in),
    )
    return state["best_obj"], state["best_mask"], state["nodes"], state["limit"]


def brute_force_best(
    n: int, eu, ev, lens, pts, ts, tt, tw,
    budget: int, forced_in: int = 0, forced_out: int = 0,
):
    """Exhaustive oracle: enumerate every feasible subset, return
    (best objective, lex-smallest best mask). Recursion with an undoable
    union-find; include branch skipped only when the edge cannot fit."""
    E = len(eu)
    parent = list(range(n))
    size = [1] * n

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    best_obj = -1
    best_mask = 0

    fixed_pts = 0
    rem0 = budget
    undo0 = []
    m = forced_in
    while m:
        e = (m & -m).bit_length() - 1
        m &= m - 1
        fixed_pts += pts[e]
        rem0 -= lens[e]
        ru, rv = find(eu[e]), find(ev[e])
        if ru != rv:
            if size[ru] < size[rv]:
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
    if rem0 < 0:
        raise ValueError("forced-in edges exceed the budget")

    K = len(ts)

    def leaf_obj(acc_pts):
        obj = acc_pts
        for k in range(K):
            if tw[k] and find(ts[k]) == find(tt[k]):
                obj += tw[k]
        return obj

    def rec(e, acc_pts, rem, mask):
        nonlocal best_obj, best_mask
        while e < E and (forced_in >> e & 1 or forced_out >> e & 1):
            e += 1
        if e == E:
            obj = leaf_obj(acc_pts)
            if obj > best_obj or (obj == best_obj and lex_less(mask, best_mask)):
                best_obj = obj
                best_mask = mask
            return
        # exclude
        rec(e + 1, acc_pts, rem, mask)
        # include
        if lens[e] <= rem:
            ru, rv = find(eu[e]), find(ev[e])
            merged = ru != rv
            if merged:
                if size[ru] < size[rv]:
                    ru, rv = rv, ru
                parent[rv] = ru
                size[ru] += size[rv]
            rec(e + 1, acc_pts + pts[e], rem - lens[e], mask | 1 << e)
            if merged:
                parent[rv] = rv
                size[ru] -= size[rv]

    rec(0, fixed_pts, rem0, forced_in)
    return best_obj, best_mask
