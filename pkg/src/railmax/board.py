"""Problem instances: cities, weighted routes, tickets, and subset scoring.

A board is immutable once validated. Selections are represented as edge-id
bitsets (`EdgeSubset`), and every score/connectivity query is a pure function
of (board, membership), so boards can be shared freely across threads and
concurrent solves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence


class UnionFind:
    """Disjoint sets over dense integer ids, path compression + union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        return True

    def connected(self, i: int, j: int) -> bool:
        return self.find(i) == self.find(j)


@dataclass(frozen=True)
class City:
    id: int
    name: str


@dataclass(frozen=True)
class Edge:
    """Undirected route between cities `u < v` costing `length` cars."""

    id: int
    u: int
    v: int
    length: int
    points: int


@dataclass(frozen=True)
class Ticket:
    """City pair (source < target) worth `value` when connected."""

    id: int
    source: int
    target: int
    value: int


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class BoardValidationError(ValueError):
    """Raised with the complete list of violations found in one pass."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__(
            "invalid board:\n" + "\n".join(f"  - {v}" for v in self.violations)
        )


# violation codes
DISCONNECTED_GRAPH = "DisconnectedGraph"
SELF_LOOP = "SelfLoop"
DUPLICATE_EDGE = "DuplicateEdge"
TICKET_EQUALS_EDGE = "TicketEqualsEdge"
TICKET_ENDPOINTS_DISCONNECTED = "TicketEndpointsDisconnected"
NONPOSITIVE_WEIGHT = "NonpositiveWeight"
DANGLING_CITY_REFERENCE = "DanglingCityReference"
DUPLICATE_CITY = "DuplicateCity"
DUPLICATE_TICKET = "DuplicateTicket"
BAD_STRUCTURE = "BadStructure"


@dataclass(frozen=True)
class Board:
    name: str
    cities: tuple[City, ...]
    edges: tuple[Edge, ...]
    tickets: tuple[Ticket, ...]

    @property
    def n_cities(self) -> int:
        return len(self.cities)

    def city_id(self, name: str) -> int:
        """Resolve a city name (case-insensitive) to its id."""
        try:
            return self._name_index()[name.strip().lower()]
        except KeyError:
            raise KeyError(f"unknown city: {name!r}") from None

    def _name_index(self) -> dict[str, int]:
        idx = self.__dict__.get("_names")
        if idx is None:
            idx = {c.name.strip().lower(): c.id for c in self.cities}
            object.__setattr__(self, "_names", idx)
        return idx

    def edge_between(self, a: str, b: str) -> Edge:
        i, j = sorted((self.city_id(a), self.city_id(b)))
        for e in self.edges:
            if (e.u, e.v) == (i, j):
                return e
        raise KeyError(f"no route between {a!r} and {b!r}")

    def ticket_between(self, a: str, b: str) -> Ticket:
        i, j = sorted((self.city_id(a), self.city_id(b)))
        for t in self.tickets:
            if (t.source, t.target) == (i, j):
                return t
        raise KeyError(f"no ticket between {a!r} and {b!r}")

    def edge_label(self, e: Edge | int) -> str:
        if isinstance(e, int):
            e = self.edges[e]
        return f"{self.cities[e.u].name} - {self.cities[e.v].name}"

    def ticket_label(self, t: Ticket | int) -> str:
        if isinstance(t, int):
            t = self.tickets[t]
        return f"{self.cities[t.source].name} - {self.cities[t.target].name}"

    def subset(self, edge_ids: Iterable[int] = ()) -> "EdgeSubset":
        mask = 0
        for e in edge_ids:
            if not 0 <= e < len(self.edges):
                raise IndexError(f"edge id {e} out of range")
            mask |= 1 << e
        return EdgeSubset(self, mask)


@dataclass(frozen=True)
class ScoreBreakdown:
    edge_points: int
    ticket_points: int
    total: int


@dataclass(frozen=True)
class EdgeSubset:
    """A candidate selection: membership bitset over the board's edge ids."""

    board: Board
    mask: int

    @property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(e for e in range(len(self.board.edges)) if self.mask >> e & 1)

    def __contains__(self, edge_id: int) -> bool:
        return bool(self.mask >> edge_id & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")


def total_length(subset: EdgeSubset) -> int:
    """Sum of member edge lengths (train cars consumed)."""
    return sum(e.length for e in subset.board.edges if subset.mask >> e.id & 1)


def completed_tickets(subset: EdgeSubset) -> frozenset[int]:
    """Ids of tickets whose endpoints are connected by the member edges.

    Union-find over member edges; a ticket is complete iff its endpoints
    land in the same component of the edge-induced subgraph.
    """
    board = subset.board
    uf = UnionFind(board.n_cities)
    for e in board.edges:
        if subset.mask >> e.id & 1:
            uf.union(e.u, e.v)
    return frozenset(
        t.id for t in board.tickets if uf.connected(t.source, t.target)
    )


def score(subset: EdgeSubset) -> ScoreBreakdown:
    """Edge points plus bonuses of completed tickets."""
    board = subset.board
    edge_points = sum(e.points for e in board.edges if subset.mask >> e.id & 1)
    done = completed_tickets(subset)
    ticket_points = sum(board.tickets[k].value for k in done)
    return ScoreBreakdown(edge_points, ticket_points, edge_points + ticket_points)


def validate_board(raw: dict) -> Board:
    """Build a Board from a parsed board document, or raise with every
    violation found (not just the first)."""
    errs: list[Violation] = []

    def bad(code: str, msg: str) -> None:
        errs.append(Violation(code, msg))

    if not isinstance(raw, dict):
        raise BoardValidationError([Violation(BAD_STRUCTURE, "board document must be an object")])

    name = raw.get("name", "")
    cities_raw = raw.get("cities")
    routes_raw = raw.get("routes")
    tickets_raw = raw.get("tickets", [])
    if not isinstance(cities_raw, list) or not cities_raw:
        bad(BAD_STRUCTURE, "'cities' must be a non-empty array of strings")
        raise BoardValidationError(errs)
    if not isinstance(routes_raw, list):
        bad(BAD_STRUCTURE, "'routes' must be an array")
        raise BoardValidationError(errs)
    if not isinstance(tickets_raw, list):
        bad(BAD_STRUCTURE, "'tickets' must be an array")
        raise BoardValidationError(errs)

    seen: dict[str, int] = {}
    cities: list[City] = []
    for i, nm in enumerate(cities_raw):
        if not isinstance(nm, str) or not nm.strip():
            bad(BAD_STRUCTURE, f"city #{i} has an empty or non-string name")
            continue
        key = nm.strip().lower()
        if key in seen:
            bad(DUPLICATE_CITY, f"city name {nm!r} appears more than once")
            continue
        seen[key] = i
        cities.append(City(i, nm))
    n = len(cities_raw)

    def resolve(nm, where: str) -> int | None:
        if not isinstance(nm, str) or nm.strip().lower() not in seen:
            bad(DANGLING_CITY_REFERENCE, f"{where} references unknown city {nm!r}")
            return None
        return seen[nm.strip().lower()]

    edges: list[Edge] = []
    pair_index: dict[tuple[int, int], int] = {}
    for i, r in enumerate(routes_raw):
        if not isinstance(r, dict):
            bad(BAD_STRUCTURE, f"route #{i} is not an object")
            continue
        a = resolve(r.get("a"), f"route #{i}")
        b = resolve(r.get("b"), f"route #{i}")
        length = r.get("length")
        points = r.get("points")
        if not isinstance(length, int) or length < 1:
            bad(NONPOSITIVE_WEIGHT, f"route #{i} length must be a positive integer, got {length!r}")
            length = None
        if not isinstance(points, int) or points < 1:
            bad(NONPOSITIVE_WEIGHT, f"route #{i} points must be a positive integer, got {points!r}")
            points = None
        if a is None or b is None or length is None or points is None:
            continue
        if a == b:
            bad(SELF_LOOP, f"route #{i} connects {r['a']!r} to itself")
            continue
        u, v = min(a, b), max(a, b)
        if (u, v) in pair_index:
            bad(DUPLICATE_EDGE, f"route #{i} duplicates the {r['a']!r}-{r['b']!r} connection")
            continue
        pair_index[(u, v)] = len(edges)
        edges.append(Edge(len(edges), u, v, length, points))

    tickets: list[Ticket] = []
    tpairs: set[tuple[int, int]] = set()
    for i, t in enumerate(tickets_raw):
        if not isinstance(t, dict):
            bad(BAD_STRUCTURE, f"ticket #{i} is not an object")
            continue
        a = resolve(t.get("a"), f"ticket #{i}")
        b = resolve(t.get("b"), f"ticket #{i}")
        value = t.get("points")
        if not isinstance(value, int) or value < 1:
            bad(NONPOSITIVE_WEIGHT, f"ticket #{i} points must be a positive integer, got {value!r}")
            value = None
        if a is None or b is None or value is None:
            continue
        if a == b:
            bad(SELF_LOOP, f"ticket #{i} pairs {t['a']!r} with itself")
            continue
        s, d = min(a, b), max(a, b)
        if (s, d) in tpairs:
            bad(DUPLICATE_TICKET, f"ticket #{i} duplicates the {t['a']!r}-{t['b']!r} pair")
            continue
        if (s, d) in pair_index:
            bad(TICKET_EQUALS_EDGE, f"ticket #{i} ({t['a']!r}-{t['b']!r}) coincides with a single route")
            continue
        tpairs.add((s, d))
        tickets.append(Ticket(len(tickets), s, d, value))

    # connectivity of the full graph, and per-ticket feasibility
    uf = UnionFind(n)
    for e in edges:
        uf.union(e.u, e.v)
    if n > 1 and edges:
        root = uf.find(0)
        stranded = [cities_raw[i] for i in range(n) if uf.find(i) != root]
        if stranded:
            bad(DISCONNECTED_GRAPH, f"graph is not connected; unreached: {', '.join(map(str, stranded[:6]))}")
    elif n > 1:
        bad(DISCONNECTED_GRAPH, "graph has no routes but more than one city")
    for t in tickets:
        if not uf.connected(t.source, t.target):
            bad(
                TICKET_ENDPOINTS_DISCONNECTED,
                f"ticket {cities_raw[t.source]!r}-{cities_raw[t.target]!r} cannot be satisfied in the full graph",
            )

    if errs:
        raise BoardValidationError(errs)
    return Board(str(name), tuple(cities), tuple(edges), tuple(tickets))


def board_to_raw(board: Board) -> dict:
    """Inverse of validate_board, for re-validation checks and serialization."""
    return {
        "name": board.name,
        "cities": [c.name for c in board.cities],
        "routes": [
            {"a": board.cities[e.u].name, "b": board.cities[e.v].name,
             "length": e.length, "points": e.points}
            for e in board.edges
        ],
        "tickets": [
            {"a": board.cities[t.source].name, "b": board.cities[t.target].name,
             "points": t.value}
            for t in board.tickets
        ],
    }


def load_board(path: str) -> Board:
    """Read and validate a board JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return validate_board(json.load(fh))
