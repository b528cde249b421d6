"""Exact branch-and-bound solver for budgeted route selection.

Search layout: depth-first over edge decisions (include branch first), one
node per partial decision (in-set / out-set). Every node's in-set is itself
feasible, so incumbents improve during dives. Pruning uses an admissible
combinatorial bound (edge knapsack + reachable ticket values) and, on large
boards, the flow-relaxation bound solved by HiGHS through scipy. Ties between
equal-score optima are broken toward the lexicographically smallest edge-id
tuple, which makes results reproducible and independent of warm starts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable

from . import kernels as K
from .board import Board, EdgeSubset, ScoreBreakdown, UnionFind, completed_tickets, score

DEFAULT_NODE_LIMIT = 50_000_000
DEFAULT_TIME_LIMIT = 300.0
LP_EDGE_THRESHOLD = 24  # reduced-cost fixing pays off above this size
PHASE0_EDGE_THRESHOLD = 20  # small boards prove fast without an incumbent hunt
PHASE0_NODES = 60_000
PHASE0_SLACKS = (48, 12, 3)  # progressively honest incumbent-hunt passes


class BudgetInfeasibleForcedSet(ValueError):
    """forced-in edges alone exceed the budget."""


class InstanceTooLarge(ValueError):
    """brute_force guard: enumeration is capped at 24 edges."""


@dataclass(frozen=True)
class SolveStats:
    nodes: int
    millis: float
    proven_optimal: bool
    lp_calls: int = 0


@dataclass(frozen=True)
class PartialBreakdown:
    """Score decomposition of a partial-game solve."""

    new_edge_points: int
    ticket_gains: int
    ticket_penalties: int
    completed_held: tuple[int, ...]
    incomplete_held: tuple[int, ...]


@dataclass(frozen=True)
class SolveResult:
    edge_ids: tuple[int, ...]
    ticket_ids: tuple[int, ...]
    breakdown: ScoreBreakdown
    stats: SolveStats
    partial: PartialBreakdown | None = None

    @property
    def total(self) -> int:
        return self.breakdown.total


@dataclass(frozen=True)
class GameState:
    """Overlay of a game in progress on an immutable board."""

    board: Board
    budget_remaining: int
    mine: frozenset[int] = frozenset()
    blocked: frozenset[int] = frozenset()
    held_tickets: frozenset[int] = frozenset()


@dataclass
class SearchNode:
    """A branch-and-bound node: decided-in/out bitsets over edge ids."""

    board: Board
    budget: int
    in_mask: int = 0
    out_mask: int = 0
    bound: int | None = None

    def __post_init__(self):
        if self.in_mask & self.out_mask:
            raise ValueError("in/out edge sets overlap")
        if self.remaining_budget < 0:
            raise ValueError("in-set exceeds the budget")

    @property
    def remaining_budget(self) -> int:
        used = sum(
            e.length for e in self.board.edges if self.in_mask >> e.id & 1
        )
        return self.budget - used

    def component_labels(self) -> list[int]:
        uf = UnionFind(self.board.n_cities)
        for e in self.board.edges:
            if self.in_mask >> e.id & 1:
                uf.union(e.u, e.v)
        return [uf.find(i) for i in range(self.board.n_cities)]


def _board_arrays(board: Board):
    eu = [e.u for e in board.edges]
    ev = [e.v for e in board.edges]
    lens = [e.length for e in board.edges]
    pts = [e.points for e in board.edges]
    ts = [t.source for t in board.tickets]
    tt = [t.target for t in board.tickets]
    tw = [t.value for t in board.tickets]
    return eu, ev, lens, pts, ts, tt, tw


def reachable_tickets(node: SearchNode) -> frozenset[int]:
    """Tickets not yet proven unreachable at this node: the cheapest
    completion path (in-edges free, out-edges barred, undecided at length)
    still fits the remaining budget. A superset of what any feasible
    completion of the node can finish."""
    board = node.board
    eu, ev, lens, _, ts, tt, _ = _board_arrays(board)
    rem = node.remaining_budget
    costs = K.ticket_costs(
        board.n_cities, eu, ev, lens, ts, tt, node.in_mask, node.out_mask, rem
    )
    return frozenset(k for k in range(len(ts)) if costs[k] <= rem)


def upper_bound(node: SearchNode) -> int:
    """Admissible bound on the best total achievable in the node's subtree:
    in-edge points, plus the fractional knapsack of undecided edges by
    points/length density into the remaining budget, plus the values of all
    tickets still reachable (completed ones count as reachable at cost 0)."""
    board = node.board
    eu, ev, lens, pts, ts, tt, tw = _board_arrays(board)
    p_in = sum(pts[e] for e in range(len(eu)) if node.in_mask >> e & 1)
    order = sorted(range(len(eu)), key=lambda e: (-pts[e] / lens[e], e))
    fk = K.knapsack_bound(
        order, lens, pts, node.in_mask | node.out_mask, node.remaining_budget
    )
    tsum = sum(tw[k] for k in reachable_tickets(node))
    bound = p_in + fk + tsum
    node.bound = bound
    return bound


@dataclass
class _Instance:
    """Effective problem fed to the search: lengths/points/ticket weights may
    differ from the board's (partial games, removed tickets)."""

    n: int
    eu: list
    ev: list
    lens: list
    pts: list
    ts: list
    tt: list
    tw: list  # ticket weight earned on completion; 0 drops the ticket
    budget: int
    forced_in: int = 0
    forced_out: int = 0


class _LimitHit(Exception):
    pass


class _RelaxationBound:
    """Flow-relaxation upper bound: the model's LP relaxation with per-ticket
    linking rows, re-solved under the node's variable fixings via HiGHS."""

    def __init__(self, inst: _Instance):
        import numpy as np
        from scipy import sparse

        self.np = np
        E = len(inst.eu)
        kpos = [k for k in range(len(inst.ts)) if inst.tw[k] > 0]
        self.E = E
        narc = 2 * E + 1
        ncols = E + len(kpos) * narc
        c = np.zeros(ncols)
        for e in range(E):
            c[e] = -inst.pts[e]
        rows_ub, cols_ub, vals_ub = [], [], []
        b_ub = []
        r = 0
        for e in range(E):
            rows_ub.append(r)
            cols_ub.append(e)
            vals_ub.append(inst.lens[e])
        b_ub.append(inst.budget)
        r += 1
        rows_eq, cols_eq, vals_eq = [], [], []
        req = 0
        for ki, k in enumerate(kpos):
            base = E + ki * narc
            c[base + 2 * E] = -inst.tw[k]
            for e in range(E):
                rows_ub += [r, r, r]
                cols_ub += [base + 2 * e, base + 2 * e + 1, e]
                vals_ub += [1.0, 1.0, -1.0]
                b_ub.append(0.0)
                r += 1
            # flow balance per vertex: arc 2e = u->v, 2e+1 = v->u, dummy t->s
            for e in range(E):
                u, v = inst.eu[e], inst.ev[e]
                rows_eq += [req + v, req + u, req + u, req + v]
                cols_eq += [base + 2 * e, base + 2 * e, base + 2 * e + 1, base + 2 * e + 1]
                vals_eq += [1.0, -1.0, 1.0, -1.0]
            s, t = inst.ts[k], inst.tt[k]
            rows_eq += [req + s, req + t]
            cols_eq += [base + 2 * E, base + 2 * E]
            vals_eq += [1.0, -1.0]
            req += inst.n
        self.c = c
        self.A_ub = sparse.csr_matrix(
            (vals_ub, (rows_ub, cols_ub)), shape=(r, ncols)
        )
        self.b_ub = np.array(b_ub)
        self.A_eq = sparse.csr_matrix(
            (vals_eq, (rows_eq, cols_eq)), shape=(req, ncols)
        )
        self.b_eq = np.zeros(req)
        self.lb = np.zeros(ncols)
        self.ub = np.ones(ncols)
        self.calls = 0

    def _solve(self, in_mask: int, out_mask: int):
        from scipy.optimize import linprog

        np = self.np
        lb = self.lb.copy()
        ub = self.ub.copy()
        for e in range(self.E):
            if in_mask >> e & 1:
                lb[e] = 1.0
            elif out_mask >> e & 1:
                ub[e] = 0.0
        res = linprog(
            self.c,
            A_ub=self.A_ub,
            b_ub=self.b_ub,
            A_eq=self.A_eq,
            b_eq=self.b_eq,
            bounds=np.column_stack([lb, ub]),
            method="highs",
        )
        self.calls += 1
        return res

    def value(self, in_mask: int, out_mask: int) -> float:
        """Upper bound on the effective objective under the fixings, +inf on
        solver trouble (never prunes on a failed solve)."""
        res = self._solve(in_mask, out_mask)
        if res.status != 0:
            return float("inf")
        return -res.fun

    def value_rc(self, in_mask: int, out_mask: int):
        """(relaxation value, reduced costs of the binary edge variables in
        maximization sign), or (None, None) on solver trouble."""
        res = self._solve(in_mask, out_mask)
        if res.status != 0 or res.lower is None or res.upper is None:
            return None, None
        rc_min = res.lower.marginals + res.upper.marginals
        return -res.fun, (-rc_min[: self.E])


def _density_order(lens, pts):
    return sorted(
        range(len(lens)),
        key=lambda e: (-(pts[e] / lens[e]) if lens[e] else float("-inf"), e),
    )


def _greedy(inst: _Instance, order) -> int:
    """Warm start: repeatedly buy the cheapest completion path of the most
    valuable-per-car open ticket that still fits, then fill with dense edges."""
    i = inst
    mask = i.forced_in
    rem = i.budget - K.mask_length(i.lens, mask)
    while True:
        best_key, best_path = None, None
        for k in range(len(i.ts)):
            if i.tw[k] <= 0:
                continue
            cost, path = K.cheapest_path(
                i.n, i.eu, i.ev, i.lens, mask, i.forced_out, i.ts[k], i.tt[k], rem
            )
            if cost == 0 or cost > rem:
                continue
            key = (-i.tw[k] / cost, k)
            if best_key is None or key < best_key:
                best_key, best_path = key, path
        if best_path is None:
            break
        for e in best_path:
            if not mask >> e & 1:
                mask |= 1 << e
                rem -= i.lens[e]
    for e in order:
        if mask >> e & 1 or i.forced_out >> e & 1:
            continue
        if i.lens[e] <= rem:
            mask |= 1 << e
            rem -= i.lens[e]
    return mask


def _reduced_cost_fixing(inst: _Instance, inc_obj: int):
    """Root relaxation + reduced-cost argument: an edge whose inclusion (or
    exclusion) already caps the relaxation strictly below the incumbent can
    be fixed for the rest of the search. Threshold keeps every solution that
    ties or beats the incumbent, so the lexicographic tie-break is unaffected.
    Returns (extra_in, extra_out, lp_calls)."""
    try:
        rx = _RelaxationBound(inst)
        z, rcx = rx.value_rc(inst.forced_in, inst.forced_out)
    except Exception:
        return 0, 0, 0
    if z is None:
        return 0, 0, 0
    extra_in = 0
    extra_out = 0
    cutoff = inc_obj - 1e-4
    E = len(inst.eu)
    for e in range(E):
        if (inst.forced_in | inst.forced_out) >> e & 1:
            continue
        if z + min(0.0, rcx[e]) < cutoff:
            extra_out |= 1 << e
        elif z - max(0.0, rcx[e]) < cutoff:
            extra_in |= 1 << e
    return extra_in, extra_out, 1


def _as_mask(board: Board, edge_ids: Iterable[int], what: str) -> int:
    mask = 0
    for e in edge_ids:
        if not isinstance(e, int) or not 0 <= e < len(board.edges):
            raise ValueError(f"{what}: edge id {e!r} out of range")
        mask |= 1 << e
    return mask


def _check_tickets(board: Board, ids: Iterable[int], what: str) -> frozenset[int]:
    out = set()
    for k in ids:
        if not isinstance(k, int) or not 0 <= k < len(board.tickets):
            raise ValueError(f"{what}: ticket id {k!r} out of range")
        out.add(k)
    return frozenset(out)


def _obj_of(inst: _Instance, mask: int) -> int:
    return K.mask_score(inst.n, inst.eu, inst.ev, inst.pts, inst.ts, inst.tt, inst.tw, mask)


def _run(
    inst: _Instance,
    node_limit: int | None,
    time_limit: float | None,
    use_lp_bound: bool | None,
    seed_mask: int | None = None,
) -> tuple[int, int, SolveStats]:
    if use_lp_bound is None:
        use_lp_bound = len(inst.eu) >= LP_EDGE_THRESHOLD
    t0 = time.monotonic()
    order = _density_order(inst.lens, inst.pts)

    inc_obj = _obj_of(inst, inst.forced_in)
    inc_mask = inst.forced_in
    for cand in (_greedy(inst, order), seed_mask):
        if cand is None:
            continue
        obj = _obj_of(inst, cand)
        if obj > inc_obj or (obj == inc_obj and K.lex_less(cand, inc_mask)):
            inc_obj, inc_mask = obj, cand

    fin, fout = inst.forced_in, inst.forced_out
    lp_calls = 0
    if use_lp_bound:
        extra_in, extra_out, lp_calls = _reduced_cost_fixing(inst, inc_obj)
        fin |= extra_in
        fout |= extra_out

    limit = node_limit if node_limit is not None else DEFAULT_NODE_LIMIT
    deadline = t0 + (time_limit if time_limit is not None else DEFAULT_TIME_LIMIT)
    total_nodes = 0

    # incumbent hunt: a slack-pruned pass explores only branches that promise
    # clearly more than the incumbent, which dives to strong solutions fast;
    # its result seeds the exact pass (correctness never depends on it)
    if len(inst.eu) >= PHASE0_EDGE_THRESHOLD and limit > PHASE0_NODES:
        for slack in PHASE0_SLACKS:
            obj0, mask0, n0, _ = K.search_best(
                inst.n, inst.eu, inst.ev, inst.lens, inst.pts, inst.ts, inst.tt,
                inst.tw, inst.budget, fin, fout, order,
                PHASE0_NODES, deadline, inc_obj, inc_mask, slack,
            )
            total_nodes += n0
            if obj0 > inc_obj or (obj0 == inc_obj and K.lex_less(mask0, inc_mask)):
                inc_obj, inc_mask = obj0, mask0

    best_obj, best_mask, nodes, limit_hit = K.search_best(
        inst.n, inst.eu, inst.ev, inst.lens, inst.pts, inst.ts, inst.tt, inst.tw,
        inst.budget, fin, fout, order,
        limit, deadline, inc_obj, inc_mask, 0,
    )
    millis = (time.monotonic() - t0) * 1000.0
    stats = SolveStats(
        nodes=total_nodes + nodes,
        millis=millis,
        proven_optimal=not limit_hit,
        lp_calls=lp_calls,
    )
    return best_obj, best_mask, stats


def solve(
    board: Board,
    budget: int,
    *,
    forced_in: Iterable[int] = (),
    forced_out: Iterable[int] = (),
    removed_tickets: Iterable[int] = (),
    node_limit: int | None = None,
    time_limit: float | None = None,
    use_lp_bound: bool | None = None,
    seed_edges: Iterable[int] | None = None,
) -> SolveResult:
    """Maximum-score feasible edge subset under the car budget.

    Honors forced inclusions/exclusions, ignores removed tickets in scoring,
    and returns a provably optimal selection unless a node or time limit
    fires (then: best incumbent, proven_optimal False). Deterministic,
    including the choice among equal-score optima.
    """
    if not isinstance(budget, int) or budget < 0:
        raise ValueError(f"budget must be a non-negative integer, got {budget!r}")
    fin = _as_mask(board, forced_in, "forced_in")
    fout = _as_mask(board, forced_out, "forced_out")
    if fin & fout:
        raise ValueError("forced_in and forced_out overlap")
    removed = _check_tickets(board, removed_tickets, "removed_tickets")

    eu, ev, lens, pts, ts, tt, tw = _board_arrays(board)
    for k in removed:
        tw[k] = 0
    if sum(lens[e] for e in range(len(eu)) if fin >> e & 1) > budget:
        raise BudgetInfeasibleForcedSet(
            "forced-in edges exceed the budget"
        )
    inst = _Instance(board.n_cities, eu, ev, lens, pts, ts, tt, tw, budget, fin, fout)
    seed = _as_mask(board, seed_edges, "seed_edges") if seed_edges is not None else None
    if seed is not None:
        seed |= fin
        if seed & fout or K.mask_length(lens, seed) > budget:
            seed = None  # unusable seed is simply dropped
    obj, mask, stats = _run(inst, node_limit, time_limit, use_lp_bound, seed)
    subset = EdgeSubset(board, mask)
    done = sorted(k for k in completed_tickets(subset) if k not in removed)
    edge_points = sum(board.edges[e].points for e in subset.edge_ids)
    ticket_points = sum(board.tickets[k].value for k in done)
    assert edge_points + ticket_points == obj
    return SolveResult(
        edge_ids=subset.edge_ids,
        ticket_ids=tuple(done),
        breakdown=ScoreBreakdown(edge_points, ticket_points, edge_points + ticket_points),
        stats=stats,
    )


def brute_force(board: Board, budget: int) -> SolveResult:
    """Independent oracle: full enumeration (boards up to 24 edges), same
    scoring and the same lexicographic tie-break as solve()."""
    if not isinstance(budget, int) or budget < 0:
        raise ValueError(f"budget must be a non-negative integer, got {budget!r}")
    if len(board.edges) > 24:
        raise InstanceTooLarge(
            f"brute force is limited to 24 edges, board has {len(board.edges)}"
        )
    eu, ev, lens, pts, ts, tt, tw = _board_arrays(board)
    t0 = time.monotonic()
    obj, mask = K.brute_force_best(
        board.n_cities, eu, ev, lens, pts, ts, tt, tw, budget
    )
    millis = (time.monotonic() - t0) * 1000.0
    subset = EdgeSubset(board, mask)
    done = sorted(completed_tickets(subset))
    bd = score(subset)
    assert bd.total == obj
    return SolveResult(
        edge_ids=subset.edge_ids,
        ticket_ids=tuple(done),
        breakdown=bd,
        stats=SolveStats(nodes=1 << len(board.edges), millis=millis, proven_optimal=True),
    )


def removal_impact(board: Board, budget: int, ticket_id: int, **kw) -> int:
    """Change in the optimal total when one ticket is deleted (always <= 0)."""
    if not 0 <= ticket_id < len(board.tickets):
        raise ValueError(f"ticket id {ticket_id!r} out of range")
    with_k = solve(board, budget, **kw)
    without_k = solve(board, budget, removed_tickets=[ticket_id], **kw)
    return without_k.total - with_k.total


def solve_partial(
    state: GameState,
    *,
    count_unheld_tickets: bool = True,
    penalize_incomplete_held: bool = True,
    node_limit: int | None = None,
    time_limit: float | None = None,
    use_lp_bound: bool | None = None,
) -> SolveResult:
    """Best achievable additional score from a partial game.

    Own edges provide connectivity at zero cost and zero new points; blocked
    edges are unavailable; held tickets score +value when completed and (by
    default) -value when not; other tickets count only when
    count_unheld_tickets is on. Implemented as a reweighted solve: a held
    ticket's swing is 2*value on top of a constant -value offset.
    """
    board = state.board
    if not isinstance(state.budget_remaining, int) or state.budget_remaining < 0:
        raise ValueError("budget_remaining must be a non-negative integer")
    mine = _as_mask(board, state.mine, "mine")
    blocked = _as_mask(board, state.blocked, "blocked")
    if mine & blocked:
        raise ValueError("mine and blocked edge sets overlap")
    held = _check_tickets(board, state.held_tickets, "held_tickets")

    eu, ev, lens, pts, ts, tt, _ = _board_arrays(board)
    tw = []
    offset = 0
    for t in board.tickets:
        if t.id in held:
            if penalize_incomplete_held:
                offset -= t.value
                tw.append(2 * t.value)
            else:
                tw.append(t.value)
        else:
            tw.append(t.value if count_unheld_tickets else 0)
    for e in range(len(eu)):
        if mine >> e & 1:
            lens[e] = 0
            pts[e] = 0
    inst = _Instance(
        board.n_cities, eu, ev, lens, pts, ts, tt, tw,
        state.budget_remaining, mine, blocked,
    )
    obj, mask, stats = _run(inst, node_limit, time_limit, use_lp_bound)
    total = obj + offset

    done = completed_tickets(EdgeSubset(board, mask))
    new_edges = tuple(e for e in range(len(board.edges)) if mask >> e & 1 and not mine >> e & 1)
    new_edge_points = sum(board.edges[e].points for e in new_edges)
    completed_held = tuple(sorted(k for k in done if k in held))
    incomplete_held = tuple(sorted(k for k in held if k not in done))
    gains = sum(board.tickets[k].value for k in completed_held)
    if count_unheld_tickets:
        gains += sum(board.tickets[k].value for k in sorted(done) if k not in held)
    penalties = (
        sum(board.tickets[k].value for k in incomplete_held)
        if penalize_incomplete_held
        else 0
    )
    scored = sorted(
        k for k in done if k in held or count_unheld_tickets
    )
    assert new_edge_points + gains - penalties == total
    return SolveResult(
        edge_ids=new_edges,
        ticket_ids=tuple(scored),
        breakdown=ScoreBreakdown(new_edge_points, gains - penalties, total),
        stats=stats,
        partial=PartialBreakdown(
            new_edge_points=new_edge_points,
            ticket_gains=gains,
            ticket_penalties=penalties,
            completed_held=completed_held,
            incomplete_held=incomplete_held,
        ),
    )
