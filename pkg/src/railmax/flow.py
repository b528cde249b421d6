"""Per-ticket directed graphs, the structural flow model, and LP emission.

Each undirected route contributes a forward and a backward arc; every ticket
additionally gets one artificial return arc from its target back to its
source. A unit of circulation through that return arc certifies the ticket's
endpoints are connected by chosen edges, which is what the model's objective
rewards. The model is emitted in the conventional LP text layout so any MIP
solver can cross-check the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .board import Board, EdgeSubset, completed_tickets, score

TOLERANCE = 1e-6


class InfeasibleSolution(ValueError):
    """Candidate (x, y) violates a model constraint beyond tolerance."""


class ReadoutMismatch(AssertionError):
    """Return-arc readout claims a ticket whose endpoints are not connected.

    A feasible flow can only push a unit through the return arc when the
    chosen edges connect the pair, so this indicates a bug, not bad input.
    """


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    edge: int | None  # None marks the ticket's artificial return arc

    @property
    def is_dummy(self) -> bool:
        return self.edge is None


@dataclass(frozen=True)
class TicketGraph:
    ticket: int
    arcs: tuple[Arc, ...]


def build_ticket_graph(board: Board, ticket_id: int) -> TicketGraph:
    """Both orientations of every route plus the ticket's return arc,
    ordered (forward e0, backward e0, forward e1, ...) with the return arc
    last; 2|E| + 1 arcs total."""
    t = board.tickets[ticket_id]
    arcs: list[Arc] = []
    for e in board.edges:
        arcs.append(Arc(e.u, e.v, e.id))
        arcs.append(Arc(e.v, e.u, e.id))
    arcs.append(Arc(t.target, t.source, None))
    return TicketGraph(ticket_id, tuple(arcs))


@dataclass(frozen=True)
class FlowModel:
    """Structural description of the selection/flow program.

    Default linking mode carries one row per edge (all tickets' directed
    flows against the shared capacity); strict mode carries the textbook
    one row per (edge, ticket) pair. Both modes solve to the same optimum;
    the default reproduces the published constraint count.
    """

    board: Board
    budget: int
    strict_linking: bool
    ticket_graphs: tuple[TicketGraph, ...]

    @property
    def num_binary(self) -> int:
        return len(self.board.edges)

    @property
    def num_continuous(self) -> int:
        return len(self.board.tickets) * (2 * len(self.board.edges) + 1)

    @property
    def num_constraints(self) -> int:
        E, K, V = len(self.board.edges), len(self.board.tickets), self.board.n_cities
        if K == 0:
            return 1  # budget row only; linking is vacuous with no flows
        linking = E * K if self.strict_linking else E
        return 1 + linking + K * V

    def counts_line(self) -> str:
        return (
            f"{self.num_binary} binary, {self.num_continuous} continuous, "
            f"{self.num_constraints} constraints"
        )


def build_model(board: Board, budget: int, strict_linking: bool = False) -> FlowModel:
    if not isinstance(budget, int) or budget < 0:
        raise ValueError(f"budget must be a non-negative integer, got {budget!r}")
    graphs = tuple(build_ticket_graph(board, t.id) for t in board.tickets)
    return FlowModel(board, budget, strict_linking, graphs)


def _xname(e: int) -> str:
    return f"x_e{e}"


def _yname(k: int, arc: Arc) -> str:
    return f"y_k{k}_a{arc.tail}_{arc.head}"


def _wrap(terms: Iterable[str], indent: str = " ", per_line: int = 8) -> str:
    parts = list(terms)
    lines = []
    for i in range(0, len(parts), per_line):
        lines.append(indent + " ".join(parts[i : i + per_line]))
    return "\n".join(lines) if lines else indent.rstrip()


def _term(coef: int, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else "+"
    mag = abs(coef)
    body = name if mag == 1 else f"{mag} {name}"
    if first:
        return body if coef > 0 else f"- {body}"
    return f"{sign} {body}"


def emit_lp(model: FlowModel, sink: TextIO) -> None:
    """Write the model in LP text format. Output is deterministic: fixed
    variable order (edges ascending, then tickets ascending with their arc
    order), fixed row order, fixed line wrapping."""
    board = model.board
    E = len(board.edges)
    K = len(board.tickets)
    w = sink.write

    w(f"\\ railmax flow model: board={board.name} budget={model.budget}"
      f" linking={'strict' if model.strict_linking else 'aggregated'}\n")
    w("Maximize\n obj:\n")
    obj_terms = []
    first = True
    for e in board.edges:
        obj_terms.append(_term(e.points, _xname(e.id), first))
        first = False
    for tg in model.ticket_graphs:
        t = board.tickets[tg.ticket]
        obj_terms.append(_term(t.value, _yname(tg.ticket, tg.arcs[-1]), False))
    w(_wrap(obj_terms, indent="  "))
    w("\n")

    w("Subject To\n")
    budget_terms = []
    first = True
    for e in board.edges:
        budget_terms.append(_term(e.length, _xname(e.id), first))
        first = False
    w(" budget:\n")
    w(_wrap(budget_terms, indent="  "))
    w(f" <= {model.budget}\n")

    if K:
        if model.strict_linking:
            for e in board.edges:
                for tg in model.ticket_graphs:
                    k = tg.ticket
                    fwd = tg.arcs[2 * e.id]
                    bwd = tg.arcs[2 * e.id + 1]
                    w(
                        f" link_e{e.id}_k{k}: {_yname(k, fwd)} + {_yname(k, bwd)}"
                        f" - {_xname(e.id)} <= 0\n"
                    )
        else:
            for e in board.edges:
                terms = []
                first = True
                for tg in model.ticket_graphs:
                    terms.append(_term(1, _yname(tg.ticket, tg.arcs[2 * e.id]), first))
                    first = False
                    terms.append(_term(1, _yname(tg.ticket, tg.arcs[2 * e.id + 1]), False))
                terms.append(_term(-K, _xname(e.id), False))
                w(f" link_e{e.id}:\n")
                w(_wrap(terms, indent="  "))
                w(" <= 0\n")

        for tg in model.ticket_graphs:
            k = tg.ticket
            for v in range(board.n_cities):
                terms = []
                first = True
                for arc in tg.arcs:
                    if arc.head == v:
                        terms.append(_term(1, _yname(k, arc), first))
                        first = False
                    elif arc.tail == v:
                        terms.append(_term(-1, _yname(k, arc), first))
                        first = False
                w(f" bal_k{k}_v{v}:\n")
                w(_wrap(terms, indent="  "))
                w(" = 0\n")

    w("Bounds\n")
    for tg in model.ticket_graphs:
        for arc in tg.arcs:
            w(f" 0 <= {_yname(tg.ticket, arc)} <= 1\n")
    w("Binary\n")
    w(_wrap([_xname(e) for e in range(E)], indent=" ", per_line=12))
    w("\nEnd\n")


def emit_lp_string(model: FlowModel) -> str:
    import io

    buf = io.StringIO()
    emit_lp(model, buf)
    return buf.getvalue()


def model_matrices(model: FlowModel):
    """Sparse matrix form of the model in the emitted variable order:
    (c, A_ub, b_ub, A_eq, b_eq, integrality, bounds). Used for feasibility
    checking and for cross-validation through an external MIP solver."""
    import numpy as np
    from scipy import sparse

    board = model.board
    E = len(board.edges)
    K = len(board.tickets)
    narc = 2 * E + 1
    ncols = E + K * narc

    def ycol(k: int, ai: int) -> int:
        return E + k * narc + ai

    c = np.zeros(ncols)
    for e in board.edges:
        c[e.id] = e.points
    for tg in model.ticket_graphs:
        c[ycol(tg.ticket, narc - 1)] = board.tickets[tg.ticket].value

    rows, cols, vals, b_ub = [], [], [], []
    r = 0
    for e in board.edges:
        rows.append(r)
        cols.append(e.id)
        vals.append(float(e.length))
    b_ub.append(float(model.budget))
    r += 1
    if K:
        if model.strict_linking:
            for e in board.edges:
                for k in range(K):
                    rows += [r, r, r]
                    cols += [ycol(k, 2 * e.id), ycol(k, 2 * e.id + 1), e.id]
                    vals += [1.0, 1.0, -1.0]
                    b_ub.append(0.0)
                    r += 1
        else:
            for e in board.edges:
                for k in range(K):
                    rows += [r, r]
                    cols += [ycol(k, 2 * e.id), ycol(k, 2 * e.id + 1)]
                    vals += [1.0, 1.0]
                rows.append(r)
                cols.append(e.id)
                vals.append(float(-K))
                b_ub.append(0.0)
                r += 1
    A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(r, ncols))

    rows, cols, vals = [], [], []
    req = 0
    for tg in model.ticket_graphs:
        k = tg.ticket
        for ai, arc in enumerate(tg.arcs):
            rows.append(req + arc.head)
            cols.append(ycol(k, ai))
            vals.append(1.0)
            rows.append(req + arc.tail)
            cols.append(ycol(k, ai))
            vals.append(-1.0)
        req += board.n_cities
    A_eq = sparse.csr_matrix((vals, (rows, cols)), shape=(req, ncols))
    b_eq = np.zeros(req)

    integrality = np.zeros(ncols)
    integrality[:E] = 1
    lb = np.zeros(ncols)
    ub = np.ones(ncols)
    return c, A_ub, np.array(b_ub), A_eq, b_eq, integrality, (lb, ub)


@dataclass(frozen=True)
class ModelSolution:
    """Candidate assignment: x per edge, y per (ticket, arc index)."""

    x_values: tuple[float, ...]
    y_values: tuple[tuple[float, ...], ...]

    @classmethod
    def from_columns(cls, model: FlowModel, columns: Sequence[float]) -> "ModelSolution":
        E = len(model.board.edges)
        narc = 2 * E + 1
        x = tuple(float(v) for v in columns[:E])
        y = tuple(
            tuple(float(v) for v in columns[E + k * narc : E + (k + 1) * narc])
            for k in range(len(model.board.tickets))
        )
        return cls(x, y)


def check_feasible(model: FlowModel, sol: ModelSolution, tol: float = TOLERANCE) -> None:
    """Raise InfeasibleSolution on any constraint/bound/integrality breach."""
    board = model.board
    E = len(board.edges)
    K = len(board.tickets)
    if len(sol.x_values) != E or len(sol.y_values) != K:
        raise InfeasibleSolution("solution shape does not match the model")
    for e, xv in enumerate(sol.x_values):
        if not (-tol <= xv <= 1 + tol) or min(abs(xv), abs(xv - 1)) > tol:
            raise InfeasibleSolution(f"x_e{e} = {xv} is not binary within tolerance")
    for k in range(K):
        if len(sol.y_values[k]) != 2 * E + 1:
            raise InfeasibleSolution(f"ticket {k} flow vector has wrong length")
        for ai, yv in enumerate(sol.y_values[k]):
            if not (-tol <= yv <= 1 + tol):
                raise InfeasibleSolution(f"y[{k}][{ai}] = {yv} outside [0, 1]")

    used = sum(board.edges[e].length * sol.x_values[e] for e in range(E))
    if used > model.budget + tol:
        raise InfeasibleSolution(f"budget exceeded: {used} > {model.budget}")

    for e in range(E):
        if model.strict_linking:
            for k in range(K):
                lhs = sol.y_values[k][2 * e] + sol.y_values[k][2 * e + 1]
                if lhs > sol.x_values[e] + tol:
                    raise InfeasibleSolution(
                        f"linking violated on edge {e} for ticket {k}"
                    )
        elif K:
            lhs = sum(
                sol.y_values[k][2 * e] + sol.y_values[k][2 * e + 1] for k in range(K)
            )
            if lhs > K * sol.x_values[e] + tol:
                raise InfeasibleSolution(f"linking violated on edge {e}")

    for tg in model.ticket_graphs:
        k = tg.ticket
        net = [0.0] * board.n_cities
        for ai, arc in enumerate(tg.arcs):
            net[arc.head] += sol.y_values[k][ai]
            net[arc.tail] -= sol.y_values[k][ai]
        for v, nv in enumerate(net):
            if abs(nv) > tol * (2 * E + 2):
                raise InfeasibleSolution(
                    f"flow imbalance {nv} at city {v} for ticket {k}"
                )


def extract_solution(
    model: FlowModel, sol: ModelSolution, tol: float = TOLERANCE
) -> tuple[EdgeSubset, frozenset[int], int]:
    """Map a feasible model solution back to a selection.

    Chosen edges are those with x at 1; completed tickets are read from
    connectivity of that selection. The return-arc readout is cross-checked:
    a unit on a return arc whose ticket is not actually connected means the
    flow system failed to certify completion, which is impossible for a
    feasible y, so it raises ReadoutMismatch.
    """
    check_feasible(model, sol, tol)
    board = model.board
    subset = EdgeSubset(
        board,
        sum(1 << e for e in range(len(board.edges)) if sol.x_values[e] >= 1 - tol),
    )
    connected = completed_tickets(subset)
    readout = frozenset(
        tg.ticket
        for tg in model.ticket_graphs
        if sol.y_values[tg.ticket][-1] >= 1 - tol
    )
    bogus = readout - connected
    if bogus:
        raise ReadoutMismatch(
            f"return-arc readout claims unconnected tickets: {sorted(bogus)}"
        )
    return subset, connected, score(subset).total


def dummy_cycle_exists(board: Board, ticket_id: int, subset: EdgeSubset) -> bool:
    """Directed-cycle test: does the ticket's directed graph, restricted to
    the subset's arcs plus the return arc, contain a cycle through that
    return arc? Implemented as an explicit arc-list DFS, independent of the
    union-find connectivity path."""
    tg = build_ticket_graph(board, ticket_id)
    t = board.tickets[ticket_id]
    adj: dict[int, list[int]] = {}
    for arc in tg.arcs:
        if arc.is_dummy:
            continue
        if subset.mask >> arc.edge & 1:
            adj.setdefault(arc.tail, []).append(arc.head)
    # cycle through (target -> source) exists iff source reaches target
    stack = [t.source]
    seen = {t.source}
    while stack:
        v = stack.pop()
        if v == t.target:
            return True
        for w_ in adj.get(v, ()):
            if w_ not in seen:
                seen.add(w_)
                stack.append(w_)
    return False
