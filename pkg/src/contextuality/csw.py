"""Exclusivity graphs: independence number, Lovász number, CSW values."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .optim.sdp import odd_cycle_theta, solve_theta
from .scenario import EmpiricalModel, ModelFormatError

EXACT_GUARD = 64


@dataclass(frozen=True)
class Event:
    context: int
    tuple: tuple


@dataclass(frozen=True, eq=False)
class WeightedExclusivityGraph:
    vertices: tuple
    weights: np.ndarray
    edges: frozenset

    def __post_init__(self):
        n = len(self.vertices)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError("one weight per vertex required")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        edges = set()
        for e in self.edges:
            i, j = sorted(int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i and j < n):
                raise ValueError(f"edge ({i}, {j}) out of range")
            edges.add((i, j))
        w.setflags(write=False)
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "edges", frozenset(edges))

    @property
    def n(self) -> int:
        return len(self.vertices)

    def adjacency(self) -> np.ndarray:
        G = np.zeros((self.n, self.n), dtype=int)
        for i, j in self.edges:
            G[i, j] = G[j, i] = 1
        return G

    @classmethod
    def from_adjacency(cls, adjacency, weights=None, vertices=None):
        G = np.asarray(adjacency)
        n = len(G)
        return cls(tuple(vertices or range(n)),
                   np.ones(n) if weights is None else weights,
                   frozenset(zip(*np.nonzero(np.triu(G, 1)))))


def cycle_graph(n: int, weights=None) -> WeightedExclusivityGraph:
    return WeightedExclusivityGraph(tuple(range(n)), np.ones(n) if weights is None else weights,
                                    frozenset((i, (i + 1) % n) for i in range(n)))


def _resolve(model: EmpiricalModel, event) -> Event:
    sc = model.scenario
    ctx, tup = event if not isinstance(event, Event) else (event.context, event.tuple)
    try:
        i = sc.context_index(ctx)
    except KeyError:
        raise KeyError(f"unknown context {ctx!r}") from None
    idx = sc.encode(i, tup)
    return Event(i, tuple(sc.outcomes[k] for k in idx))


def exclusive(model: EmpiricalModel, a: Event, b: Event) -> bool:
    """Two events are exclusive when they disagree on some shared label."""
    sc = model.scenario
    va = dict(zip(sc.contexts[a.context], a.tuple))
    vb = dict(zip(sc.contexts[b.context], b.tuple))
    return any(va[x] != vb[x] for x in va.keys() & vb.keys())


def exclusivity_graph(model: EmpiricalModel, events, weights=None) -> WeightedExclusivityGraph:
    ev = tuple(_resolve(model, e) for e in events)
    edges = frozenset((i, j) for i in range(len(ev)) for j in range(i + 1, len(ev))
                      if exclusive(model, ev[i], ev[j]))
    return WeightedExclusivityGraph(ev, np.ones(len(ev)) if weights is None else weights, edges)


def independence_number(graph: WeightedExclusivityGraph) -> tuple[float, list[int]]:
    """Exact maximum-weight independent set by branch and bound on bitmasks.

    Vertices are branched in decreasing degree.  The bound for a candidate set
    is a greedy clique cover: each clique contributes at most its heaviest
    vertex, and the sum over cliques caps what the candidates can still add.
    """
    n = graph.n
    if n > EXACT_GUARD:
        raise ValueError(f"exact search is limited to {EXACT_GUARD} vertices, got {n}")
    if n == 0:
        return 0.0, []
    w = graph.weights
    nbr = [0] * n
    for i, j in graph.edges:
        nbr[i] |= 1 << j
        nbr[j] |= 1 << i
    order = sorted(range(n), key=lambda v: (-bin(nbr[v]).count("1"), -w[v], v))
    best = [0.0, 0]

    def bits(mask):
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def bound(cand: int) -> float:
        total = 0.0
        rest = cand
        for v in order:
            if not rest >> v & 1:
                continue
            clique, heavy = 1 << v, w[v]
            rest &= ~(1 << v)
            for u in bits(rest & nbr[v]):
                if clique & ~nbr[u] & ~(1 << u) == 0:
                    clique |= 1 << u
                    heavy = max(heavy, w[u])
                    rest &= ~(1 << u)
            total += heavy
        return total

    def search(chosen: int, weight: float, cand: int):
        if weight > best[0] + 1e-12:
            best[0], best[1] = weight, chosen
        if not cand or weight + bound(cand) <= best[0] + 1e-12:
            return
        for v in order:
            if cand >> v & 1:
                break
        search(chosen | 1 << v, weight + w[v], cand & ~nbr[v] & ~(1 << v))
        search(chosen, weight, cand & ~(1 << v))

    search(0, 0.0, (1 << n) - 1)
    return float(best[0]), sorted(bits(best[1]))


def _graph_shape(graph):
    n, m = graph.n, len(graph.edges)
    if m == 0:
        return "edgeless"
    if m == n * (n - 1) // 2:
        return "complete"
    deg = graph.adjacency().sum(axis=1)
    if n >= 4 and m == n and np.all(deg == 2):
        # connected 2-regular graph is a single cycle
        seen, stack = {0}, [0]
        G = graph.adjacency()
        while stack:
            v = stack.pop()
            for u in np.nonzero(G[v])[0]:
                if u not in seen:
                    seen.add(int(u))
                    stack.append(int(u))
        if len(seen) == n:
            return "cycle"
    return None


def lovasz_number(graph: WeightedExclusivityGraph, tolerance: float = 1e-5,
                  closed_form: bool = True) -> float:
    """Weighted Lovász number, by closed form where one applies, otherwise by SDP."""
    w = graph.weights
    shape = _graph_shape(graph) if closed_form else None
    if shape == "edgeless":
        return float(w.sum())
    if shape == "complete":
        return float(w.max())
    if shape == "cycle" and np.all(w == w[0]):
        n = graph.n
        return float(w[0] * (odd_cycle_theta(n) if n % 2 else n / 2))
    return solve_theta(graph.adjacency(), w, tolerance).value


@dataclass
class CswReport:
    value: float
    alpha: float
    theta: float
    independent_set: list

    @property
    def exceeds_classical(self) -> bool:
        return self.value > self.alpha + 1e-9

    @property
    def exceeds_quantum(self) -> bool:
        return self.value > self.theta + 1e-6


def _event_prob(model, ev: Event) -> float:
    return float(model.prob(ev.context, ev.tuple))


def csw_value(model: EmpiricalModel, graph: WeightedExclusivityGraph) -> float:
    """``S = sum_i w_i P(e_i)`` for a graph whose vertices are events of ``model``."""
    ev = [_resolve(model, v) for v in graph.vertices]
    return float(sum(wi * _event_prob(model, e) for wi, e in zip(graph.weights, ev)))


def _joint_prob(model, a: Event, b: Event) -> float:
    """Probability that events a and b both occur, read from a context holding both."""
    if exclusive(model, a, b):
        return 0.0
    sc = model.scenario
    need = dict(zip(sc.contexts[a.context], a.tuple))
    need.update(zip(sc.contexts[b.context], b.tuple))
    for i, c in enumerate(sc.contexts):
        if set(need) <= set(c):
            t = model.tables[i]
            idx = tuple(sc.outcomes.index(need[x]) if x in need else slice(None) for x in c)
            return float(np.sum(t[idx]))
    raise KeyError(f"no context contains both events {a} and {b}")


def two_point_value(model: EmpiricalModel, graph: WeightedExclusivityGraph) -> float:
    """``S = sum_i w_i P(1|i) - sum_(ij in E) max(w_i, w_j) P(1,1|i,j)``.

    With unit weights this is the two-point form; for exclusive events the
    joint term vanishes and the value equals ``csw_value``.
    """
    ev = [_resolve(model, v) for v in graph.vertices]
    w = graph.weights
    s = sum(wi * _event_prob(model, e) for wi, e in zip(w, ev))
    for i, j in sorted(graph.edges):
        s -= max(w[i], w[j]) * _joint_prob(model, ev[i], ev[j])
    return float(s)


def csw_report(model: EmpiricalModel, graph: WeightedExclusivityGraph, two_point=False,
               tolerance: float = 1e-5) -> CswReport:
    alpha, ind = independence_number(graph)
    theta = lovasz_number(graph, tolerance)
    value = two_point_value(model, graph) if two_point else csw_value(model, graph)
    return CswReport(value, alpha, theta, ind)


# -------------------------------------------------------------- graph files

def graph_from_dict(data, model: EmpiricalModel | None = None) -> WeightedExclusivityGraph:
    if not isinstance(data, dict) or set(data) - {"vertices", "edges"}:
        raise ModelFormatError("graph must be an object with 'vertices' and 'edges'")
    verts, weights = [], []
    for k, v in enumerate(data.get("vertices", [])):
        where = f"vertices[{k}]"
        if not isinstance(v, dict) or set(v) - {"context", "tuple", "weight"} or "context" not in v:
            raise ModelFormatError("vertex needs 'context', 'tuple' and optional 'weight'", where)
        tup = tuple(str(v.get("tuple", "")).split(",")) if v.get("tuple") else ()
        ev = Event(int(v["context"]), tup)
        if model is not None:
            try:
                ev = _resolve(model, ev)
            except (KeyError, ValueError) as exc:
                raise ModelFormatError(str(exc), where) from None
        verts.append(ev)
        weights.append(float(v.get("weight", 1.0)))
    edges = data.get("edges", [])
    for k, e in enumerate(edges):
        if not isinstance(e, list) or len(e) != 2:
            raise ModelFormatError("edge must be a pair of vertex indices", f"edges[{k}]")
    return WeightedExclusivityGraph(tuple(verts), np.array(weights),
                                    frozenset(tuple(e) for e in edges))


def load_graph(path, model=None) -> WeightedExclusivityGraph:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return graph_from_dict(data, model)
