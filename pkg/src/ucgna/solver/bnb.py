"""Best-bound branch-and-bound over binary columns with conic node relaxations."""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

import numpy as np

from ..config import Limits, Tolerances
from ..conic.solve import solve_conic
from ..model import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, ConicProgram, Solution, StandardForm


class BranchError(RuntimeError):
    pass


@dataclass(order=True)
class BranchNode:
    bound: float
    seq: int
    depth: int = field(compare=False)
    lower: np.ndarray = field(compare=False, repr=False)
    upper: np.ndarray = field(compare=False, repr=False)

    def fixed(self, cols) -> dict:
        return {int(j): int(self.lower[j]) for j in cols if self.lower[j] == self.upper[j]}


def most_fractional(x: np.ndarray, cols: np.ndarray, tol: float):
    """Column with the largest distance to the nearest integer; first by column order on ties."""
    if len(cols) == 0:
        return None
    frac = np.abs(x[cols] - np.round(x[cols]))
    k = int(np.argmax(frac))
    return None if frac[k] <= tol else int(cols[k])


def branch_and_bound(program: ConicProgram | StandardForm, limits: Limits | None = None,
                     tolerances: Tolerances | None = None, lower=None, upper=None, log=None) -> Solution:
    """Solve a mixed-binary conic program to global optimality.

    Nodes are explored best bound first; each branches on the most
    fractional binary.  Integer-feasible node solutions are re-solved with
    the binaries fixed exactly before they become incumbents.
    """
    limits = limits or Limits()
    tol = tolerances or Tolerances()
    sf = program.to_standard_form() if isinstance(program, ConicProgram) else program
    lo0 = (sf.lower if lower is None else np.asarray(lower, dtype=float)).copy()
    hi0 = (sf.upper if upper is None else np.asarray(upper, dtype=float)).copy()
    bins = np.flatnonzero(sf.integer & (lo0 < hi0))
    if len(bins) > limits.max_binaries:
        raise BranchError(f"{len(bins)} free binaries exceed the cap of {limits.max_binaries}")
    start = time.perf_counter()
    inc: Solution | None = None
    inc_obj = np.inf
    nodes = 0
    seq = 0
    heap: list[BranchNode] = []
    hit_limit = False
    unbounded = False

    def gap_abs():
        return limits.bnb_gap * max(1.0, abs(inc_obj))

    def try_incumbent(x, lo, hi):
        nonlocal inc, inc_obj
        flo, fhi = lo.copy(), hi.copy()
        flo[bins] = fhi[bins] = np.round(x[bins])
        s = solve_conic(sf, tol, flo, fhi)
        if s.status == OPTIMAL and s.objective < inc_obj:
            inc, inc_obj = s, s.objective
            if log:
                log({"event": "incumbent", "objective": inc_obj, "nodes": nodes})

    def process(lo, hi, depth):
        nonlocal seq, nodes, unbounded
        nodes += 1
        s = solve_conic(sf, tol, lo, hi)
        if s.status == INFEASIBLE:
            return
        if s.status == UNBOUNDED:
            unbounded = True
            return
        if s.status != OPTIMAL:
            # numerical trouble: split further when possible, otherwise give up on the node
            j = next((int(c) for c in bins if lo[c] < hi[c]), None)
            if j is None:
                return
            for v in (0.0, 1.0):
                l2, h2 = lo.copy(), hi.copy()
                l2[j] = h2[j] = v
                seq += 1
                heapq.heappush(heap, BranchNode(-np.inf, seq, depth + 1, l2, h2))
            return
        if s.objective >= inc_obj - gap_abs():
            return
        j = most_fractional(s.x, bins, tol.integrality)
        if j is None:
            try_incumbent(s.x, lo, hi)
            return
        for v in (0.0, 1.0):
            l2, h2 = lo.copy(), hi.copy()
            l2[j] = h2[j] = v
            seq += 1
            heapq.heappush(heap, BranchNode(s.objective, seq, depth + 1, l2, h2))

    process(lo0, hi0, 0)
    best_bound = -np.inf
    while heap:
        if time.perf_counter() - start > limits.time_limit or nodes >= limits.node_limit:
            hit_limit = True
            break
        node = heapq.heappop(heap)
        best_bound = node.bound
        if node.bound >= inc_obj - gap_abs():
            continue
        process(node.lower, node.upper, node.depth)
    if unbounded and inc is None:
        return Solution(UNBOUNDED, columns=sf.columns, row_tags=sf.row_tags, info={"nodes": nodes})
    if inc is None:
        status = LIMIT if hit_limit else INFEASIBLE
        return Solution(status, columns=sf.columns, row_tags=sf.row_tags, info={"nodes": nodes})
    bound = min([n.bound for n in heap] + [inc_obj]) if hit_limit else inc_obj
    gap = max(0.0, (inc_obj - bound) / max(1.0, abs(inc_obj))) if np.isfinite(bound) else np.inf
    inc.status = LIMIT if hit_limit else OPTIMAL
    inc.gap = gap
    inc.info = dict(inc.info, nodes=nodes, bound=bound, wall=time.perf_counter() - start)
    return inc
