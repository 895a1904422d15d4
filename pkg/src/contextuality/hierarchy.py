"""Contextuality hierarchy and contextual fraction.

Global assignments are enumerated explicitly (outcome indices, one column per
label), so everything here is limited to scenarios with at most
``ASSIGNMENT_GUARD`` of them.  The incidence matrix ``M`` has one row per
(context, outcome tuple) and one column per global assignment; ``M d = e``
is the noncontextuality condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .optim.lp import LE, EQ, LinearProgram, solve_lp
from .scenario import EmpiricalModel, MeasurementScenario, PossibilisticModel, to_possibilistic

ASSIGNMENT_GUARD = 10**7

LEVELS = ("noncontextual", "probabilistic", "logical", "strong")


class GuardExceeded(ValueError):
    pass


@dataclass
class GlobalDistribution:
    """Weights on global assignments; ``assignments[k, j]`` is the outcome index of label j."""

    scenario: MeasurementScenario
    assignments: np.ndarray
    weights: np.ndarray

    def as_dict(self, cutoff=0) -> dict:
        sc = self.scenario
        out = {}
        for g, w in zip(self.assignments, self.weights):
            if w > cutoff:
                out[tuple(sc.outcomes[k] for k in g)] = w
        return out


@dataclass
class HierarchyVerdict:
    level: str
    witnesses: list = field(default_factory=list)
    distribution: GlobalDistribution | None = None

    def at_least(self, level: str) -> bool:
        return LEVELS.index(self.level) >= LEVELS.index(level)


@dataclass
class FractionResult:
    ncf: object
    cf: object
    noncontextual_part: GlobalDistribution


def global_assignments(scenario: MeasurementScenario, guard: int = ASSIGNMENT_GUARD) -> np.ndarray:
    k, n = scenario.n_outcomes, len(scenario.labels)
    if k**n > guard:
        raise GuardExceeded(f"{k}^{n} global assignments exceed the guard of {guard}")
    grid = np.indices((k,) * n, dtype=np.int16 if k < 2**15 else np.int64)
    return grid.reshape(n, -1).T


def _row_codes(scenario, G):
    """For each context, the flat table index that every assignment induces."""
    k = scenario.n_outcomes
    pos = {x: j for j, x in enumerate(scenario.labels)}
    codes = []
    for c in scenario.contexts:
        cols = [pos[x] for x in c]
        codes.append(np.ravel_multi_index(G[:, cols].T, (k,) * len(c)))
    return codes


def incidence(scenario: MeasurementScenario, G: np.ndarray, exact=False):
    """Restriction map from global assignments to local sections."""
    k = scenario.n_outcomes
    offsets = np.cumsum([0] + [k ** len(c) for c in scenario.contexts])
    codes = _row_codes(scenario, G)
    rows = np.concatenate([off + cd for off, cd in zip(offsets, codes)])
    cols = np.tile(np.arange(len(G)), len(codes))
    M = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(offsets[-1], len(G)))
    if not exact:
        return M
    dense = np.zeros(M.shape, dtype=object)
    dense[...] = Fraction(0)
    dense[rows, cols] = Fraction(1)
    return dense


def _rhs(model: EmpiricalModel):
    return np.concatenate([t.ravel() for t in model.tables])


def _restrict_to_support(model, G):
    """Drop assignments that hit a zero-probability section; they must carry no weight."""
    keep = np.ones(len(G), dtype=bool)
    for t, cd in zip(model.tables, _row_codes(model.scenario, G)):
        keep &= t.ravel()[cd] != 0
    return G[keep]


def noncontextual_distribution(model: EmpiricalModel, guard: int = ASSIGNMENT_GUARD):
    """A distribution on global assignments reproducing every context, or None."""
    sc = model.scenario
    G = _restrict_to_support(model, global_assignments(sc, guard))
    if len(G) == 0:
        return None
    M = incidence(sc, G, model.exact)
    e = _rhs(model)
    zero = Fraction(0) if model.exact else 0.0
    res = solve_lp(LinearProgram([zero] * len(G), M, e, EQ))
    if res.status != "optimal":
        return None
    return GlobalDistribution(sc, G, res.x)


def contextual_fraction(model: EmpiricalModel, guard: int = ASSIGNMENT_GUARD) -> FractionResult:
    """Largest noncontextual weight ``ncf`` with ``ncf * e_NC <= e`` contextwise."""
    sc = model.scenario
    G = _restrict_to_support(model, global_assignments(sc, guard))
    one = Fraction(1) if model.exact else 1.0
    if len(G) == 0:
        zero = one - one
        return FractionResult(zero, one, GlobalDistribution(sc, G, np.zeros(0)))
    M = incidence(sc, G, model.exact)
    res = solve_lp(LinearProgram([one] * len(G), M, _rhs(model), LE, maximize=True))
    if res.status != "optimal":
        raise RuntimeError(f"contextual-fraction LP ended as {res.status}")
    ncf = res.value
    if not model.exact:
        ncf = min(max(float(ncf), 0.0), 1.0)
    return FractionResult(ncf, one - ncf, GlobalDistribution(sc, G, res.x))


# ------------------------------------------------------------- supports / CSP

class _SupportSearch:
    """Backtracking search for global assignments consistent with all supports."""

    def __init__(self, pm: PossibilisticModel):
        sc = pm.scenario
        self.sc = sc
        self.masks = pm.masks()
        self.pos = {x: j for j, x in enumerate(sc.labels)}
        n = len(sc.labels)
        self.ctx_cols = [[self.pos[x] for x in c] for c in sc.contexts]
        self.by_label = [[] for _ in range(n)]
        # contexts with the fewest possible sections are checked first
        order = sorted(range(len(sc.contexts)), key=lambda i: (self.masks[i].sum(), i))
        for i in order:
            for j in self.ctx_cols[i]:
                self.by_label[j].append(i)
        k = sc.n_outcomes
        self.domains = []
        for j in range(n):
            dom = set(range(k))
            for i in self.by_label[j]:
                axis = self.ctx_cols[i].index(j)
                other = tuple(a for a in range(len(self.ctx_cols[i])) if a != axis)
                seen = self.masks[i].any(axis=other) if other else self.masks[i]
                dom &= set(np.nonzero(seen)[0])
            self.domains.append(sorted(dom))
        self.label_order = sorted(range(n), key=lambda j: (len(self.domains[j]), j))

    def _ok(self, i, g) -> bool:
        idx = tuple(slice(None) if g[j] < 0 else g[j] for j in self.ctx_cols[i])
        return bool(self.masks[i][idx].any())

    def extend(self, partial: dict | None = None):
        """A consistent total assignment extending ``partial`` (label index -> outcome), or None."""
        g = [-1] * len(self.sc.labels)
        for j, o in (partial or {}).items():
            g[j] = o
        for i in range(len(self.sc.contexts)):
            if not self._ok(i, g):
                return None
        todo = [j for j in self.label_order if g[j] < 0]

        def rec(t):
            if t == len(todo):
                return list(g)
            j = todo[t]
            for o in self.domains[j]:
                g[j] = o
                if all(self._ok(i, g) for i in self.by_label[j]):
                    found = rec(t + 1)
                    if found is not None:
                        return found
            g[j] = -1
            return None

        return rec(0)


def consistent_global_assignment(pm: PossibilisticModel):
    """Some global assignment whose restriction to every context is possible, or None."""
    g = _SupportSearch(pm).extend()
    return None if g is None else tuple(pm.scenario.outcomes[k] for k in g)


def unextendable_sections(pm: PossibilisticModel) -> list[tuple[int, tuple[str, ...]]]:
    """Possible local sections that no consistent global assignment extends."""
    search = _SupportSearch(pm)
    sc = pm.scenario
    out = []
    for i, c in enumerate(sc.contexts):
        for s in sorted(pm.supports[i], key=lambda t: sc.encode(i, t)):
            partial = {search.pos[x]: sc.outcomes.index(o) for x, o in zip(c, s)}
            if search.extend(partial) is None:
                out.append((i, s))
    return out


def classify(model: EmpiricalModel, guard: int = ASSIGNMENT_GUARD) -> HierarchyVerdict:
    """Place ``model`` in the hierarchy noncontextual < probabilistic < logical < strong.

    Supports are read at threshold 0 for exact models and at the model
    tolerance otherwise, so rounding noise does not count as possible.
    """
    sc = model.scenario
    if len(sc.contexts) == 1:
        t = model.tables[0]
        G = global_assignments(sc, guard)
        w = t.ravel()[_row_codes(sc, G)[0]]
        return HierarchyVerdict("noncontextual", distribution=GlobalDistribution(sc, G, w))
    d = noncontextual_distribution(model, guard)
    if d is not None:
        return HierarchyVerdict("noncontextual", distribution=d)
    pm = to_possibilistic(model, 0 if model.exact else model.tolerance)
    search = _SupportSearch(pm)
    if search.extend() is None:
        return HierarchyVerdict("strong", witnesses=["no consistent global assignment"])
    bad = unextendable_sections(pm)
    if bad:
        return HierarchyVerdict("logical", witnesses=bad)
    return HierarchyVerdict("probabilistic")


def postselected_fractions(model: EmpiricalModel, guard: int = ASSIGNMENT_GUARD) -> dict:
    """Contextual fraction after post-selecting on each possible event.

    For a possible section ``s`` of context ``C``, every context drops the
    tuples that disagree with ``s`` on shared labels and is renormalised.  The
    entry is None when some context keeps no probability mass.
    """
    sc = model.scenario
    out = {}
    for i, c in enumerate(sc.contexts):
        for s in sc.tuples(i):
            if model.tables[i][sc.encode(i, s)] == 0:
                continue
            fixed = dict(zip(c, s))
            tables, ok = [], True
            for ctx, t in zip(sc.contexts, model.tables):
                t = t.copy()
                for a, x in enumerate(ctx):
                    if x in fixed:
                        keep = sc.outcomes.index(fixed[x])
                        sl = [slice(None)] * len(ctx)
                        for o in range(sc.n_outcomes):
                            if o != keep:
                                sl[a] = o
                                t[tuple(sl)] = 0 * t[tuple(sl)]
                total = t.sum()
                if total == 0:
                    ok = False
                    break
                tables.append(t / total)
            if not ok:
                out[(i, s)] = None
                continue
            post = EmpiricalModel(sc, tuple(tables), model.tolerance)
            out[(i, s)] = contextual_fraction(post, guard).cf
    return out
