"""Exhaustive and branch-and-bound solvers for binary linear models."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import TooLarge
from .model import IlpModel, Sense

log = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 10800.0
_CLOCK_EVERY = 64


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_TIMEOUT = "FeasibleTimeout"
    INFEASIBLE = "Infeasible"
    NO_SOLUTION = "NoSolution"  # timed out before any feasible point was seen


@dataclass
class IlpSolution:
    assignment: dict[str, int]
    objective_value: int | None
    status: Status
    wall_time: float
    nodes: int = 0
    refined_from: dict | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective_value,
            "assignment": dict(sorted(self.assignment.items())),
            "wall_time": self.wall_time,
            "nodes": self.nodes,
            "refined_from": self.refined_from,
            "extras": self.extras,
        }


class _Compiled:
    """Index form: maximise ``c @ x`` subject to ``A x <= b`` (rows in CSR and CSC)."""

    def __init__(self, model: IlpModel):
        self.names = list(model.variables)
        self.index = {v: j for j, v in enumerate(self.names)}
        n = len(self.names)
        sign = 1 if model.sense is Sense.MAXIMIZE else -1
        self.sign = sign
        self.c = np.zeros(n, dtype=np.int64)
        for v, coef in model.objective.items():
            self.c[self.index[v]] += sign * coef
        rows: list[dict[int, int]] = []
        rhs: list[int] = []
        for con in model.constraints:
            flip = 1 if con.cmp == "<=" else -1
            row: dict[int, int] = {}
            for v, a in con.coeffs.items():
                if a:
                    row[self.index[v]] = row.get(self.index[v], 0) + flip * a
            rows.append({j: a for j, a in sorted(row.items()) if a})
            rhs.append(flip * con.rhs)
        self.rows = rows
        self.b = np.asarray(rhs, dtype=np.int64)
        m = len(rows)
        self.indptr = np.zeros(m + 1, dtype=np.int64)
        self.indptr[1:] = np.cumsum([len(r) for r in rows])
        self.indices = np.fromiter((j for r in rows for j in r), dtype=np.int32, count=int(self.indptr[-1]))
        self.data = np.fromiter((a for r in rows for a in r.values()), dtype=np.int64, count=int(self.indptr[-1]))
        cols: list[list[int]] = [[] for _ in range(n)]
        for i, r in enumerate(rows):
            for j in r:
                cols[j].append(i)
        self.colptr = np.zeros(n + 1, dtype=np.int64)
        self.colptr[1:] = np.cumsum([len(c) for c in cols])
        self.colrows = np.fromiter((i for c in cols for i in c), dtype=np.int32, count=int(self.colptr[-1]))

    def dense_At(self) -> np.ndarray:
        At = np.zeros((len(self.names), len(self.rows)), dtype=np.int64)
        for i, r in enumerate(self.rows):
            for j, a in r.items():
                At[j, i] = a
        return At

    def feasible(self, x: np.ndarray) -> bool:
        for i, r in enumerate(self.rows):
            if sum(a * int(x[j]) for j, a in r.items()) > self.b[i]:
                return False
        return True

    def assignment(self, x) -> dict[str, int]:
        return {v: int(x[j]) for j, v in enumerate(self.names)}


def _solution(model: IlpModel, assignment: dict[str, int] | None, status: Status, t0: float, nodes: int = 0):
    wall = time.perf_counter() - t0
    if assignment is None:
        return IlpSolution({}, None, status, wall, nodes)
    return IlpSolution(assignment, model.evaluate(assignment), status, wall, nodes)


def brute_force_solve(model: IlpModel, max_vars: int = 24) -> IlpSolution:
    """Enumerate every assignment; ties resolve to the lexicographically smallest one."""
    t0 = time.perf_counter()
    n = len(model.variables)
    if n > max_vars:
        raise TooLarge(f"{n} binary variables exceed the brute-force limit of {max_vars}")
    comp = _Compiled(model)
    found, mask, _ = kernels.brute_force_max(comp.c, comp.dense_At(), comp.b)
    if not found:
        return _solution(model, None, Status.INFEASIBLE, t0)
    x = [(mask >> (n - 1 - j)) & 1 for j in range(n)]
    return _solution(model, comp.assignment(x), Status.OPTIMAL, t0, 1 << n)


class _Bound:
    """Upper bound on the maximise-form objective reachable from a partial assignment."""

    def __init__(self, model: IlpModel, comp: _Compiled):
        self.kind = model.scenario
        self.comp = comp
        meta = model.metadata
        if self.kind == "transit" and "omega" in meta:
            idx = comp.index
            self.l_max, self.p_max = meta["l_max"], meta["p_max"]
            asns = sorted({a for a, _, _ in meta["omega"]})
            lans = sorted({l for _, l, _ in meta["omega"]})
            arow = {a: k for k, a in enumerate(asns)}
            lcol = {l: k for k, l in enumerate(lans)}
            self.entries = [(idx[f"d[{a},{l}]"], arow[a], lcol[l], w) for a, l, w in meta["omega"]]
            self.n_rows, self.n_cols = len(asns), len(lans)
            self.meta_omega = meta["omega"]
        elif self.kind == "peering" and "smfd" in meta:
            idx = comp.index
            self.n, self.r = meta["n"], meta["r"]
            self.d_idx = [j for j, v in enumerate(comp.names) if v.startswith("d[")]
            per_as: dict[int, list[tuple[int, int]]] = {}
            for a, l, v in meta["smfd"]:
                per_as.setdefault(a, []).append((idx[f"d[{l}]"], v))
            self.ases = [(idx[f"c[{a}]"], sorted(vals, key=lambda t: -t[1])) for a, vals in sorted(per_as.items())]
        else:
            self.kind = None

    def __call__(self, x: np.ndarray) -> float:
        if self.kind == "transit":
            return self._transit(x)
        if self.kind == "peering":
            return self._peering(x)
        c = self.comp.c
        free = x < 0
        return int(c[x == 1].sum()) + int(c[free & (c > 0)].sum())

    def _transit(self, x: np.ndarray) -> int:
        # any completion uses <= p_max rows and <= l_max columns, so each row
        # contributes at most its l_max best live entries (and vice versa)
        rows: list[list[int]] = [[] for _ in range(self.n_rows)]
        cols: list[list[int]] = [[] for _ in range(self.n_cols)]
        for j, a, l, w in self.entries:
            if x[j] != 0:
                rows[a].append(w)
                cols[l].append(w)
        by_row = sorted((sum(sorted(r, reverse=True)[: self.l_max]) for r in rows), reverse=True)
        by_col = sorted((sum(sorted(c, reverse=True)[: self.p_max]) for c in cols), reverse=True)
        return min(sum(by_row[: self.p_max]), sum(by_col[: self.l_max]))

    def all_open(self) -> np.ndarray:
        x = np.zeros(len(self.comp.names), dtype=np.int8)
        x[self.d_idx] = 1
        for cj, vals in self.ases:
            if sum(v for _, v in vals) >= self.r:
                x[cj] = 1
        return x

    def branch_order(self) -> list[int]:
        """Selectors before cell variables for transit; largest |objective| first otherwise."""
        comp = self.comp
        generic = sorted(range(len(comp.names)), key=lambda j: (-abs(int(comp.c[j])), comp.names[j]))
        if self.kind != "transit":
            return generic
        row_sum = [0] * self.n_rows
        col_sum = [0] * self.n_cols
        for _, a, l, w in self.entries:
            row_sum[a] += w
            col_sum[l] += w
        lans = sorted({l for _, l, _ in self.meta_omega})
        asns = sorted({a for a, _, _ in self.meta_omega})
        cl = sorted(range(len(lans)), key=lambda k: (-col_sum[k], lans[k]))
        cp = sorted(range(len(asns)), key=lambda k: (-row_sum[k], asns[k]))
        head = [comp.index[f"cl[{lans[k]}]"] for k in cl] + [comp.index[f"cp[{asns[k]}]"] for k in cp]
        taken = set(head)
        return head + [j for j in generic if j not in taken]

    def _peering(self, x: np.ndarray) -> float:
        # lower bound on LANs: opened ones plus the fewest extra LANs that let
        # n candidate ASes (and every AS already fixed to c=1) reach r
        opened = sum(1 for j in self.d_idx if x[j] == 1)
        need_all = 0
        extra: list[float] = []
        for cj, vals in self.ases:
            if x[cj] == 0:
                continue
            have = sum(v for j, v in vals if x[j] == 1)
            m: float = 0
            if have < self.r:
                m = float("inf")
                k = 0
                for j, v in vals:  # descending, so greedy gives the fewest LANs
                    if x[j] < 0:
                        have += v
                        k += 1
                        if have >= self.r:
                            m = k
                            break
            if x[cj] == 1:
                need_all = max(need_all, m)
            extra.append(m)
        k = need_all
        if self.n > 0:
            if len(extra) < self.n:
                return float("-inf")
            extra.sort()
            k = max(k, extra[self.n - 1])
        return -(opened + k)


def branch_and_bound_solve(model: IlpModel, time_limit: float = DEFAULT_TIME_LIMIT) -> IlpSolution:
    """Depth-first branch and bound with constraint propagation.

    Returns ``Optimal`` once the tree is exhausted, otherwise the best incumbent
    as ``FeasibleTimeout``. The all-zeros point is tried first as an incumbent.
    """
    t0 = time.perf_counter()
    comp = _Compiled(model)
    n = len(comp.names)
    bound = _Bound(model, comp)
    best_x: np.ndarray | None = None
    best_val = 0
    zeros = np.zeros(n, dtype=np.int8)
    if comp.feasible(zeros):
        best_x, best_val = zeros, 0
    elif bound.kind == "peering":
        # every LAN open is the most permissive choice: feasible iff the model is
        start = bound.all_open()
        if not comp.feasible(start):
            return _solution(model, None, Status.INFEASIBLE, t0)
        best_x, best_val = start, int(comp.c @ start)
    deadline = t0 + max(0.0, time_limit)
    order = bound.branch_order()
    args = (comp.indptr, comp.indices, comp.data, comp.b, comp.colptr, comp.colrows)

    def finish(status: Status, nodes: int) -> IlpSolution:
        if best_x is None:
            return _solution(model, None, status if status is Status.INFEASIBLE else Status.NO_SOLUTION, t0, nodes)
        return _solution(model, comp.assignment(best_x), status, t0, nodes)

    if time.perf_counter() >= deadline:
        return finish(Status.FEASIBLE_TIMEOUT, 0)

    root = np.full(n, -1, dtype=np.int8)
    stack = [root]
    nodes = 0
    while stack:
        nodes += 1
        if nodes % _CLOCK_EVERY == 0 and time.perf_counter() >= deadline:
            log.info("branch and bound timed out after %d nodes", nodes)
            return finish(Status.FEASIBLE_TIMEOUT, nodes)
        x = stack.pop()
        if not kernels.propagate(x, *args):
            continue
        ub = bound(x)
        if ub == float("-inf") or (best_x is not None and ub <= best_val):
            continue
        branch = next((j for j in order if x[j] < 0), None)
        if branch is None:
            val = int(comp.c @ x)
            if best_x is None or val > best_val:
                best_x, best_val = x.copy(), val
            continue
        zero = x.copy()
        zero[branch] = 0
        x[branch] = 1
        stack.append(zero)
        stack.append(x)  # explored first
    return finish(Status.OPTIMAL if best_x is not None else Status.INFEASIBLE, nodes)
