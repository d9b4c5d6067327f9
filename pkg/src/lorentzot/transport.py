"""Exact discrete transport for the causal cost.

The primal problem is solved by successive shortest paths on the bipartite
transportation network. Arcs with infinite cost are never created, so an
infeasible instance shows up as a stalled augmentation rather than as a
big-M artefact. The final node potentials are the dual pair.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import CostParams, as_cloud
from .measures import MARGINAL_TOL, Coupling, DiscreteMeasure

GAP_TOL = 1e-9
CYCLE_TOL = 1e-9
_MASS_EPS = 1e-15


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "InfeasibleNoCausalCoupling"


class CertificateKind(str, enum.Enum):
    OPTIMALITY_GAP = "OptimalityGap"
    MONOTONICITY_CYCLE = "MonotonicityCycle"
    FEASIBILITY = "Feasibility"


class TransportError(ValueError):
    pass


class DualInfeasibleError(TransportError):
    def __init__(self, i, j, violation):
        super().__init__(f"dual constraint violated at ({i}, {j}) by {violation:.3e}")
        self.pair = (i, j)
        self.violation = violation


@dataclass
class Certificate:
    kind: CertificateKind
    feasible: bool
    gap: float | None = None
    cycle: list[int] | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "feasible": self.feasible,
            "gap": self.gap,
            "cycle": self.cycle,
            "detail": self.detail,
        }


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Costs ``c_time(x_i, y_j)`` between two supports, ``+inf`` off J+."""

    values: np.ndarray
    classes: np.ndarray
    params: CostParams
    time: float = 1.0

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def shape(self):
        return self.values.shape


def build_cost_matrix(mu, nu, params: CostParams = CostParams(), time: float = 1.0) -> CostMatrix:
    """Cost matrix between the supports of two measures (or two point clouds)."""
    X = mu.points if isinstance(mu, DiscreteMeasure) else as_cloud(mu)
    Y = nu.points if isinstance(nu, DiscreteMeasure) else as_cloud(nu)
    if X.shape[1] != Y.shape[1]:
        raise TransportError("measures live in different dimensions")
    vals, cls = kernels.pair_cost(X, Y, params.p, time, params.null_tol)
    vals.setflags(write=False)
    cls.setflags(write=False)
    return CostMatrix(vals, cls, params, time)


@dataclass
class TransportResult:
    status: Status
    coupling: Coupling | None
    primal_value: float
    dual_rows: np.ndarray | None = None
    dual_cols: np.ndarray | None = None
    certificates: list[Certificate] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "primal_value": _encode(self.primal_value),
            "entries": [] if self.coupling is None else [list(e) for e in self.coupling.entries],
            "dual_rows": None if self.dual_rows is None else [_encode(v) for v in self.dual_rows],
            "dual_cols": None if self.dual_cols is None else [_encode(v) for v in self.dual_cols],
            "certificates": [c.to_json() for c in self.certificates],
        }

    @classmethod
    def from_json(cls, data: dict, mu: DiscreteMeasure, nu: DiscreteMeasure) -> "TransportResult":
        """Rebuild a result written by :meth:`to_json` for the given marginals."""
        unknown = set(data) - {"status", "primal_value", "entries", "dual_rows", "dual_cols", "certificates"}
        if unknown:
            raise TransportError(f"unknown result keys: {sorted(unknown)}")
        status = Status(data["status"])
        coupling = None
        if status is Status.OPTIMAL:
            e = np.asarray(data["entries"], dtype=float).reshape(-1, 3)
            coupling = Coupling(mu, nu, e[:, 0].astype(int), e[:, 1].astype(int), e[:, 2])
            coupling.check()
        duals = [None if data.get(k) is None else np.array([_decode(v) for v in data[k]])
                 for k in ("dual_rows", "dual_cols")]
        certs = [Certificate(CertificateKind(c["kind"]), bool(c["feasible"]), c.get("gap"), c.get("cycle"),
                             dict(c.get("detail") or {})) for c in data.get("certificates", [])]
        return cls(status, coupling, _decode(data["primal_value"]), duals[0], duals[1], certs)


def _encode(v: float):
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _decode(v) -> float:
    if isinstance(v, str):
        if v not in ("inf", "-inf"):
            raise TransportError(f"bad value sentinel {v!r}")
        return math.inf if v == "inf" else -math.inf
    return float(v)


# -- successive shortest paths ----------------------------------------------------

def _dijkstra(rc, flow, supply_left):
    """Shortest reduced-cost distances from all rows with spare supply.

    Node layout: rows ``0..n-1``, columns ``n..n+m-1``. Forward arcs i->j exist
    where ``rc`` is finite; reverse arcs j->i where ``flow[i, j] > 0``.
    """
    n, m = rc.shape
    dist = np.full(n + m, np.inf)
    pred = np.full(n + m, -1, dtype=np.int64)
    done = np.zeros(n + m, dtype=bool)
    dist[:n][supply_left > _MASS_EPS] = 0.0
    while True:
        open_d = np.where(done, np.inf, dist)
        v = int(np.argmin(open_d))
        if not math.isfinite(open_d[v]):
            break
        done[v] = True
        if v < n:
            cand = dist[v] + rc[v]
            tgt = slice(n, n + m)
            better = (cand < dist[tgt]) & ~done[tgt]
            dist[tgt] = np.where(better, cand, dist[tgt])
            pred[tgt] = np.where(better, v, pred[tgt])
        else:
            j = v - n
            back = flow[:, j] > 0
            cand = np.where(back, dist[v] - rc[:, j], np.inf)
            better = (cand < dist[:n]) & ~done[:n]
            dist[:n] = np.where(better, cand, dist[:n])
            pred[:n] = np.where(better, v, pred[:n])
    return dist, pred


def _cancel_cycles(flow, cost):
    """Push flow around support cycles until the support is a forest."""
    n, m = flow.shape
    while True:
        cycle = _find_support_cycle(flow)
        if cycle is None:
            return flow
        # cycle alternates row/col nodes: r0 c0 r1 c1 ... ; arcs (r_k,c_k) get +, (r_{k+1},c_k) get -
        plus = [(cycle[2 * k], cycle[2 * k + 1] - n) for k in range(len(cycle) // 2)]
        minus = [(cycle[(2 * k + 2) % len(cycle)], cycle[2 * k + 1] - n) for k in range(len(cycle) // 2)]
        delta = sum(cost[i, j] for i, j in plus) - sum(cost[i, j] for i, j in minus)
        if delta > 0:
            plus, minus = minus, plus
        theta = min(flow[i, j] for i, j in minus)
        for i, j in plus:
            flow[i, j] += theta
        for i, j in minus:
            flow[i, j] -= theta
            if flow[i, j] <= _MASS_EPS:
                flow[i, j] = 0.0


def _find_support_cycle(flow):
    n, m = flow.shape
    adj = {v: [] for v in range(n + m)}
    parent = list(range(n + m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in zip(*np.nonzero(flow > 0)):
        a, b = int(i), int(j) + n
        ra, rb = find(a), find(b)
        if ra == rb:
            path = _tree_path(adj, b, a)
            # path runs col b ... row a; closing arc a-b
            return [a] + path[:-1] if path[0] == b else None
        parent[ra] = rb
        adj[a].append(b)
        adj[b].append(a)
    return None


def _tree_path(adj, src, dst):
    prev = {src: None}
    stack = [src]
    while stack:
        v = stack.pop()
        if v == dst:
            break
        for w in adj[v]:
            if w not in prev:
                prev[w] = v
                stack.append(w)
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def solve_primal(matrix: CostMatrix, mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportResult:
    """Minimum-cost coupling of ``mu`` and ``nu`` over the finite arcs of ``matrix``."""
    a = mu.weights.astype(float)
    b = nu.weights.astype(float)
    if matrix.shape != (len(a), len(b)):
        raise TransportError("cost matrix does not match the measures")
    if abs(a.sum() - b.sum()) > MARGINAL_TOL:
        raise TransportError("marginal masses differ")
    cost = np.asarray(matrix.values, dtype=float)
    finite = np.isfinite(cost)
    n, m = cost.shape
    if not finite.any(axis=0).all() or not finite.any(axis=1).all():
        return TransportResult(Status.INFEASIBLE, None, math.inf)

    pot_r = np.zeros(n)
    pot_c = np.where(finite, cost, np.inf).min(axis=0)
    flow = np.zeros((n, m))
    supply = a.copy()
    demand = b.copy()
    while supply.sum() > 1e-13 and demand.sum() > 1e-13:
        rc = np.where(finite, cost + pot_r[:, None] - pot_c[None, :], np.inf)
        np.maximum(rc, 0.0, out=rc, where=finite)
        dist, pred = _dijkstra(rc, flow, supply)
        dcol = np.where(demand > _MASS_EPS, dist[n:], np.inf)
        j_end = int(np.argmin(dcol))
        d_end = dcol[j_end]
        if not math.isfinite(d_end):
            return TransportResult(Status.INFEASIBLE, None, math.inf)
        capped = np.minimum(dist, d_end)
        pot_r += capped[:n]
        pot_c += capped[n:]
        # walk back to a row with spare supply
        path = []
        v = j_end + n
        while True:
            u = int(pred[v])
            if u < 0:
                break
            path.append((u, v))
            v = u
        start = v
        theta = min(supply[start], demand[j_end])
        for u, w in path:
            if u >= n:  # reverse arc col u -> row w
                theta = min(theta, flow[w, u - n])
        for u, w in path:
            if u < n:
                flow[u, w - n] += theta
            else:
                flow[w, u - n] -= theta
                if flow[w, u - n] <= _MASS_EPS:
                    flow[w, u - n] = 0.0
        supply[start] -= theta
        demand[j_end] -= theta
        if supply[start] <= _MASS_EPS:
            supply[start] = 0.0
        if demand[j_end] <= _MASS_EPS:
            demand[j_end] = 0.0

    flow = _cancel_cycles(flow, np.where(finite, cost, 0.0))
    rows, cols = np.nonzero(flow > 0)
    mass = flow[rows, cols]
    coupling = Coupling(mu, nu, rows, cols, mass)
    coupling.check()
    primal = float(np.sum(mass * cost[rows, cols]))
    return TransportResult(Status.OPTIMAL, coupling, primal, pot_r.copy(), pot_c.copy())


def permutation_minimum(matrix: CostMatrix) -> float:
    """Minimum over all permutation couplings of an equal-weight square problem."""
    n, m = matrix.shape
    if n != m:
        raise TransportError("permutation enumeration needs a square matrix")
    if n > 9:
        raise TransportError("permutation enumeration is limited to 9 points")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = matrix.values[np.arange(n)[None, :], perms].sum(axis=1)
    best = float(totals.min())
    return best / n if math.isfinite(best) else math.inf


# -- feasibility -----------------------------------------------------------------

def _max_flow(allowed, a, b):
    """Edmonds-Karp on the bipartite network source->rows->cols->sink."""
    n, m = allowed.shape
    flow = np.zeros((n, m))
    supply = a.astype(float).copy()
    demand = b.astype(float).copy()
    total = 0.0
    while True:
        # BFS from rows with spare supply
        prev = {}
        frontier = [("r", i) for i in range(n) if supply[i] > _MASS_EPS]
        for node in frontier:
            prev[node] = None
        end = None
        while frontier and end is None:
            nxt = []
            for node in frontier:
                kind, k = node
                if kind == "r":
                    for j in np.flatnonzero(allowed[k]):
                        key = ("c", int(j))
                        if key not in prev:
                            prev[key] = node
                            if demand[j] > _MASS_EPS:
                                end = key
                                break
                            nxt.append(key)
                else:
                    for i in np.flatnonzero(flow[:, k] > _MASS_EPS):
                        key = ("r", int(i))
                        if key not in prev:
                            prev[key] = node
                            nxt.append(key)
                if end is not None:
                    break
            frontier = nxt
        if end is None:
            return total, flow
        path = []
        v = end
        while prev[v] is not None:
            path.append((prev[v], v))
            v = prev[v]
        start = v[1]
        theta = min(supply[start], demand[end[1]])
        for u, w in path:
            if u[0] == "c":
                theta = min(theta, flow[w[1], u[1]])
        for u, w in path:
            if u[0] == "r":
                flow[u[1], w[1]] += theta
            else:
                flow[w[1], u[1]] -= theta
        supply[start] -= theta
        demand[end[1]] -= theta
        total += theta


def _feasibility(mu, nu, codes, params, label):
    X, Y = mu.points, nu.points
    _, cls = kernels.pair_cost(X, Y, params.p, 1.0, params.null_tol)
    allowed = np.isin(cls, codes)
    value, _ = _max_flow(allowed, mu.weights, nu.weights)
    feasible = bool(abs(value - 1.0) <= MARGINAL_TOL)
    return Certificate(CertificateKind.FEASIBILITY, feasible, detail={"relation": label, "flow_value": float(value)})


def causal_feasible(mu: DiscreteMeasure, nu: DiscreteMeasure, params: CostParams = CostParams()) -> Certificate:
    """Does some coupling of ``mu`` and ``nu`` live on J+?"""
    return _feasibility(mu, nu, kernels.CAUSAL_FUTURE_CODES, params, "causal")


def strictly_timelike_feasible(mu: DiscreteMeasure, nu: DiscreteMeasure,
                               params: CostParams = CostParams()) -> Certificate:
    """Does some coupling of ``mu`` and ``nu`` live on I+?"""
    return _feasibility(mu, nu, (kernels.TIMELIKE_FUTURE,), params, "strictly_timelike")


# -- certificates -------------------------------------------------------------------

def exchange_graph(sources, targets, params: CostParams = CostParams()) -> np.ndarray:
    """Weights ``W[a, b] = c(x_b, y_a) - c(x_a, y_a)`` (``+inf`` when not causal)."""
    X, Y = as_cloud(sources), as_cloud(targets)
    C, _ = kernels.pair_cost(X, Y, params.p, 1.0, params.null_tol)  # C[i, j] = c(x_i, y_j)
    own = np.diag(C)
    if not np.all(np.isfinite(own)):
        bad = int(np.flatnonzero(~np.isfinite(own))[0])
        raise TransportError(f"support pair {bad} has infinite cost")
    return C.T - own[:, None]


def _extract_cycle(pred, hit, n):
    v = hit
    for _ in range(n):
        v = int(pred[v])
        if v < 0:
            return None
    cycle = [v]
    u = int(pred[v])
    while u != v:
        cycle.append(u)
        u = int(pred[u])
        if len(cycle) > n:
            return None
    return cycle[::-1]


def cycle_excess(cycle, W) -> float:
    """Total exchange weight along a closed cycle ``a0 -> a1 -> ... -> a0``."""
    return float(sum(W[cycle[k], cycle[(k + 1) % len(cycle)]] for k in range(len(cycle))))


def check_cyclical_monotonicity(sources, targets, params: CostParams = CostParams(),
                                tol: float = CYCLE_TOL) -> Certificate:
    """Search the exchange graph of ``{(sources[k], targets[k])}`` for a violating cycle.

    A cycle ``a0 -> a1 -> ... -> a0`` of total weight below ``-tol * length``
    means re-sending each ``y_a`` to the next ``x`` lowers the cost, i.e. the
    pairs are not c-cyclically monotone.
    """
    W = exchange_graph(sources, targets, params)
    n = W.shape[0]
    np.fill_diagonal(W, np.inf)
    _, pred, hit = kernels.bellman_ford(W, -1, tol)
    if hit < 0:
        return Certificate(CertificateKind.MONOTONICITY_CYCLE, True, cycle=None,
                           detail={"pairs": n, "monotone": True})
    cycle = _extract_cycle(pred, hit, n)
    if cycle is None:  # pragma: no cover - predecessor walk always closes after n steps
        raise TransportError("negative cycle detected but could not be extracted")
    excess = cycle_excess(cycle, W)
    return Certificate(CertificateKind.MONOTONICITY_CYCLE, False, cycle=cycle,
                       detail={"pairs": n, "monotone": False, "excess": excess})


def support_pairs(result: TransportResult):
    """Source and target coordinates of each coupling entry."""
    c = result.coupling
    return c.source.points[c.rows], c.target.points[c.cols]


def dual_gap(phi, psi, result: TransportResult, matrix: CostMatrix, tol: float = GAP_TOL) -> float:
    """Primal value minus the dual objective of ``(phi, psi)``.

    ``phi`` lives on the rows and ``psi`` on the columns of ``matrix``; the
    constraint ``psi_j - phi_i <= c_ij`` is checked first.
    """
    phi = np.asarray(getattr(phi, "values", phi), dtype=float)
    psi = np.asarray(getattr(psi, "values", psi), dtype=float)
    mu, nu = result.coupling.source, result.coupling.target
    if not (np.all(np.isfinite(phi[mu.weights > 0])) and np.all(np.isfinite(psi[nu.weights > 0]))):
        raise TransportError("dual potentials must be finite on the supports")
    slack = psi[None, :] - phi[:, None] - matrix.values
    slack = np.where(np.isfinite(matrix.values), slack, -np.inf)
    worst = np.unravel_index(np.argmax(slack), slack.shape)
    if slack[worst] > tol:
        raise DualInfeasibleError(int(worst[0]), int(worst[1]), float(slack[worst]))
    dual = float(psi @ nu.weights - phi @ mu.weights)
    return result.primal_value - dual


def certify(result: TransportResult, matrix: CostMatrix, tol: float = GAP_TOL) -> TransportResult:
    """Attach gap and monotonicity certificates to an optimal result."""
    if not result.optimal:
        result.certificates.append(Certificate(CertificateKind.FEASIBILITY, False,
                                               detail={"relation": "causal"}))
        return result
    gap = dual_gap(result.dual_rows, result.dual_cols, result, matrix, tol)
    result.certificates.append(Certificate(CertificateKind.OPTIMALITY_GAP, bool(abs(gap) <= tol), gap=float(gap)))
    xs, ys = support_pairs(result)
    result.certificates.append(check_cyclical_monotonicity(xs, ys, matrix.params))
    return result
