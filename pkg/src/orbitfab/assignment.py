"""Bijective mapping of fabric nodes onto satellites over permanent sight lines.

Feasibility problem: place each virtual switch of a Clos fabric on a distinct
satellite so that every fabric edge lands on a pair of satellites whose
line of sight is never obstructed over the orbit. There is no objective to
optimize; an instance is feasible or it is not.

The native solver is depth-first search with forward checking. Virtual nodes
are assigned in minimum-remaining-domain order (ties: higher fabric degree,
then lower node index) and candidate satellites are tried in increasing
index order, so identical inputs explore identical trees. `export_lp` emits
the same model as an LP-format text document for external integer
programming solvers; `verify` checks a solution independently of where it
came from.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import LosMatrix
from .network import ClosTopology

DEFAULT_TIME_LIMIT = 60.0

OUTCOME_FEASIBLE = "feasible"
OUTCOME_INFEASIBLE = "infeasible"
OUTCOME_TIMEOUT = "timeout"


@dataclass(frozen=True)
class AssignmentProblem:
    """A fabric, a sight matrix of matching size, and per-node candidate domains.

    ``domains[i]`` holds the satellite indices eligible for virtual node
    ``i``. With the degree filter on, a satellite seeing fewer others than
    node ``i`` has fabric neighbors is excluded up front; the filter only
    removes provably invalid candidates, so verdicts never depend on it.
    """

    topo: ClosTopology
    los: LosMatrix
    domains: tuple[frozenset[int], ...]

    @property
    def n(self) -> int:
        return self.los.n


@dataclass(frozen=True)
class Assignment:
    """Permutation sending virtual node index to satellite index."""

    sat_of_node: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {"sat_of_node": [int(p) for p in self.sat_of_node]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Assignment":
        return cls(sat_of_node=tuple(int(p) for p in data["sat_of_node"]))


@dataclass(frozen=True)
class SolveStats:
    """Search effort counters.

    ``nodes_explored`` counts node-to-satellite placements attempted;
    ``backtracks`` counts placements retracted. A conflict-free run on a
    feasible instance has ``nodes_explored == n`` and ``backtracks == 0``.
    """

    nodes_explored: int
    backtracks: int
    wall_time: float
    outcome: str

    def to_json_dict(self) -> dict:
        return {
            "nodes_explored": self.nodes_explored,
            "backtracks": self.backtracks,
            "wall_time": self.wall_time,
            "outcome": self.outcome,
        }


def build_problem(
    topo: ClosTopology, los: LosMatrix, degree_filter: bool = True
) -> AssignmentProblem:
    """Pair a fabric with a sight matrix and precompute candidate domains."""
    n = topo.n_nodes
    if los.n != n:
        raise ValueError(
            f"fabric has {n} nodes but the sight matrix covers {los.n} satellites"
        )
    topo_deg = topo.graph.degree()
    if degree_filter:
        los_deg = los.degree()
        domains = tuple(
            frozenset(int(p) for p in np.nonzero(los_deg >= topo_deg[i])[0])
            for i in range(n)
        )
    else:
        full = frozenset(range(n))
        domains = tuple(full for _ in range(n))
    return AssignmentProblem(topo=topo, los=los, domains=domains)


class _Timeout(Exception):
    pass


class _Search:
    """Mutable DFS state: domains, a trail of removals, and counters."""

    def __init__(self, problem: AssignmentProblem, deadline: float):
        n = problem.n
        adjacency = problem.topo.graph.adjacency
        self.neighbors = [
            [int(j) for j in np.nonzero(adjacency[i])[0]] for i in range(n)
        ]
        deg = problem.topo.graph.degree()
        self.degree = [int(d) for d in deg]
        bits = problem.los.bits
        # non-sight sets are small for realistic clusters; intersecting with
        # them is much cheaper than scanning whole domains per step
        self.blocked = [
            frozenset(int(q) for q in np.nonzero(~bits[p])[0] if q != p)
            for p in range(n)
        ]
        self.domain = [set(d) for d in problem.domains]
        self.assigned: list[Optional[int]] = [None] * n
        self.unassigned = set(range(n))
        self.deadline = deadline
        self.nodes_explored = 0
        self.backtracks = 0

    def _pick_node(self) -> int:
        return min(
            self.unassigned,
            key=lambda i: (len(self.domain[i]), -self.degree[i], i),
        )

    def run(self) -> bool:
        if not self.unassigned:
            return True
        if time.perf_counter() > self.deadline:
            raise _Timeout
        node = self._pick_node()
        self.unassigned.discard(node)
        for sat in sorted(self.domain[node]):
            self.nodes_explored += 1
            self.assigned[node] = sat
            removed: list[tuple[int, frozenset[int]]] = []
            if self._forward_check(node, sat, removed) and self.run():
                return True
            for j, vals in removed:
                self.domain[j] |= vals
            self.assigned[node] = None
            self.backtracks += 1
        self.unassigned.add(node)
        return False

    def _forward_check(
        self, node: int, sat: int, removed: list[tuple[int, frozenset[int]]]
    ) -> bool:
        for j in self.unassigned:
            if sat in self.domain[j]:
                self.domain[j].discard(sat)
                removed.append((j, frozenset((sat,))))
                if not self.domain[j]:
                    return False
        blocked = self.blocked[sat]
        if blocked:
            for j in self.neighbors[node]:
                if self.assigned[j] is not None or j == node:
                    continue
                cut = self.domain[j] & blocked
                if cut:
                    self.domain[j] -= cut
                    removed.append((j, frozenset(cut)))
                    if not self.domain[j]:
                        return False
        return True


def solve(
    problem: AssignmentProblem, time_limit: float = DEFAULT_TIME_LIMIT
) -> tuple[SolveStats, Optional[Assignment]]:
    """Search for a feasible placement.

    Returns the first assignment found, a proof of infeasibility by
    exhaustion, or a timeout verdict; timeout is an outcome, not an error.
    """
    start = time.perf_counter()
    if any(not d for d in problem.domains):
        return (
            SolveStats(0, 0, time.perf_counter() - start, OUTCOME_INFEASIBLE),
            None,
        )
    search = _Search(problem, deadline=start + float(time_limit))
    try:
        found = search.run()
    except _Timeout:
        return (
            SolveStats(
                search.nodes_explored,
                search.backtracks,
                time.perf_counter() - start,
                OUTCOME_TIMEOUT,
            ),
            None,
        )
    wall = time.perf_counter() - start
    stats = SolveStats(
        search.nodes_explored,
        search.backtracks,
        wall,
        OUTCOME_FEASIBLE if found else OUTCOME_INFEASIBLE,
    )
    if not found:
        return stats, None
    assignment = Assignment(sat_of_node=tuple(int(p) for p in search.assigned))
    assert verify(problem, assignment)
    return stats, assignment


def verify(problem: AssignmentProblem, assignment: Assignment) -> bool:
    """Check a placement independently of the solver: bijection + edge sight."""
    perm = assignment.sat_of_node
    n = problem.n
    if len(perm) != n or sorted(perm) != list(range(n)):
        return False
    bits = problem.los.bits
    return all(bits[perm[i], perm[j]] for i, j in problem.topo.graph.edges())


def _wrap_terms(label: str, terms: list[str], tail: str) -> list[str]:
    """Format one constraint row, folding long term lists onto continuations."""
    lines = []
    current = f" {label}:"
    for idx, term in enumerate(terms):
        piece = f" {term}" if idx == 0 else f" + {term}"
        if len(current) + len(piece) > 76:
            lines.append(current)
            current = "   " + piece.lstrip()
        else:
            current += piece
    lines.append(current + f" {tail}")
    return lines


def export_lp(problem: AssignmentProblem) -> str:
    """Emit the feasibility model as an LP-format text document.

    Variables are binary ``x_{node}_{sat}``. Rows: one equality per node
    (placed exactly once), one per satellite (used exactly once), and
    ``x_i_p + x_j_q <= 1`` for every fabric edge taken in both orientations
    and every ordered pair of satellites lacking sight, so the inequality
    count is exactly 2 * |edges| * |ordered non-sight pairs|. The mirrored
    duplicates keep the emitted model auditable row by row.
    """
    n = problem.n
    bits = problem.los.bits
    edges = problem.topo.graph.edges()
    lines = ["Minimize", " obj: 0", "Subject To"]
    for i in range(n):
        lines += _wrap_terms(
            f"node_{i}", [f"x_{i}_{p}" for p in range(n)], "= 1"
        )
    for p in range(n):
        lines += _wrap_terms(
            f"sat_{p}", [f"x_{i}_{p}" for i in range(n)], "= 1"
        )
    nonsight = [
        (int(p), int(q))
        for p in range(n)
        for q in range(n)
        if p != q and not bits[p, q]
    ]
    row = 0
    for i, j in edges:
        for a, b in ((i, j), (j, i)):
            for p, q in nonsight:
                lines.append(f" sight_{row}: x_{a}_{p} + x_{b}_{q} <= 1")
                row += 1
    lines.append("Binary")
    for i in range(n):
        for p in range(n):
            lines.append(f" x_{i}_{p}")
    lines.append("End")
    return "\n".join(lines) + "\n"
