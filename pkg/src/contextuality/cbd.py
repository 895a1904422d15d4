"""Contextuality-by-Default for binary (+-1) random variables.

A system stores the expectation of every context-tagged variable ``R_q^c`` and
the product expectation (correlator) of every context.  Closed forms cover
cyclic rank-2 systems and the Peres-Mermin shape; ``coupling_lp`` handles any
small system given full per-context joint distributions.
"""
from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp

from .optim.lp import EQ, LinearProgram, solve_lp

COUPLING_GUARD = 10**6
CONTEXTUAL_MARGIN = 1e-9


class CbdFormatError(ValueError):
    pass


class ShapeError(ValueError):
    """The closed forms do not apply; use ``coupling_lp``."""


@dataclass(frozen=True, eq=False)
class CbdSystem:
    contexts: dict  # context id -> tuple of properties
    expectations: dict  # (property, context id) -> <R_q^c>
    correlators: dict  # context id -> product expectation
    notes: tuple = ()

    def __post_init__(self):
        contexts = {c: tuple(qs) for c, qs in self.contexts.items()}
        object.__setattr__(self, "contexts", contexts)
        for (q, c), v in self.expectations.items():
            if c not in contexts or q not in contexts[c]:
                raise CbdFormatError(f"expectation for {q} in context {c} has no matching context entry")
            if not -1 - 1e-12 <= v <= 1 + 1e-12:
                raise CbdFormatError(f"expectation <{q}^{c}> = {v} outside [-1, 1]")
        for c, qs in contexts.items():
            for q in qs:
                if (q, c) not in self.expectations:
                    raise CbdFormatError(f"missing expectation for {q} in context {c}")
        for c, v in self.correlators.items():
            if c not in contexts:
                raise CbdFormatError(f"correlator for unknown context {c}")
            if not -1 - 1e-12 <= v <= 1 + 1e-12:
                raise CbdFormatError(f"correlator of context {c} = {v} outside [-1, 1]")

    @property
    def properties(self) -> list:
        seen = []
        for qs in self.contexts.values():
            for q in qs:
                if q not in seen:
                    seen.append(q)
        return seen

    @property
    def connections(self) -> dict:
        """Property -> contexts containing it, in context order."""
        out = {}
        for c, qs in self.contexts.items():
            for q in qs:
                out.setdefault(q, []).append(c)
        return out


def delta0(system: CbdSystem) -> float:
    """Half the summed expectation gaps within connections (all of size two)."""
    total = 0.0
    for q, cs in system.connections.items():
        if len(cs) != 2:
            raise ShapeError(f"connection of {q} has {len(cs)} contexts; use coupling_lp")
        total += abs(system.expectations[(q, cs[0])] - system.expectations[(q, cs[1])])
    return total / 2


def s_odd(values) -> float:
    """Max of ``sum(+-a_i)`` over sign patterns with an odd number of minus signs."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise ValueError("s_odd needs at least one value")
    total = np.abs(a).sum()
    if np.count_nonzero(a < 0) % 2 == 1:
        return float(total)
    return float(total - 2 * np.abs(a).min())


def _is_cycle(system) -> bool:
    ctx = system.contexts
    if len(ctx) < 2 or any(len(qs) != 2 for qs in ctx.values()):
        return False
    conn = system.connections
    if len(conn) != len(ctx) or any(len(cs) != 2 for cs in conn.values()):
        return False
    # walk the cycle
    start = next(iter(ctx))
    seen, c, q = {start}, start, ctx[start][1]
    while True:
        nxt = [d for d in conn[q] if d != c][0]
        if nxt == start:
            break
        if nxt in seen:
            return False
        seen.add(nxt)
        q = [p for p in ctx[nxt] if p != q][0]
        c = nxt
    return len(seen) == len(ctx)


def _is_pm_shape(system) -> bool:
    ctx = list(system.contexts.values())
    if len(ctx) != 6 or any(len(qs) != 3 for qs in ctx):
        return False
    conn = system.connections
    if len(conn) != 9 or any(len(cs) != 2 for cs in conn.values()):
        return False
    # split into two families of three pairwise-disjoint contexts ("rows" and "columns")
    sets = [set(qs) for qs in ctx]
    for rows in itertools.combinations(range(6), 3):
        cols = [k for k in range(6) if k not in rows]
        fam_ok = all(not (sets[a] & sets[b]) for fam in (rows, cols)
                     for a, b in itertools.combinations(fam, 2))
        if fam_ok and all(len(sets[r] & sets[c]) == 1 for r in rows for c in cols):
            return True
    return False


def shape(system: CbdSystem) -> str | None:
    if _is_cycle(system):
        return "cyclic"
    if _is_pm_shape(system):
        return "pm"
    return None


def delta_min(system: CbdSystem) -> float:
    """``(1/2) max(2 Delta0, s_odd(a) - (n - 2))`` for cyclic and PM-shaped systems."""
    if shape(system) is None:
        raise ShapeError("closed form needs a cyclic rank-2 or PM-shaped system; use coupling_lp")
    missing = [c for c in system.contexts if c not in system.correlators]
    if missing:
        raise CbdFormatError(f"correlators required for contexts {missing}")
    n = len(system.contexts)
    a = [system.correlators[c] for c in system.contexts]
    return 0.5 * max(2 * delta0(system), s_odd(a) - (n - 2))


def cntx(system: CbdSystem) -> tuple[float, bool]:
    d0, dm = delta0(system), delta_min(system)
    return dm - d0, bool(dm > d0 + CONTEXTUAL_MARGIN)


# ------------------------------------------------------------- couplings

@dataclass
class CouplingResult:
    value: float
    coupling: dict  # tuple of per-context outcome tuples -> probability
    atoms: int
    synthetic: bool = False


def _outcome_tuples(r):
    return list(itertools.product((1, -1), repeat=r))


def _check_joint(system, c, table, tol=1e-6):
    qs = system.contexts[c]
    X = np.array(_outcome_tuples(len(qs)))
    p = np.asarray(table, dtype=float).ravel()
    if p.shape != (len(X),) or np.any(p < -tol) or abs(p.sum() - 1) > tol:
        raise CbdFormatError(f"joint distribution of context {c} is not a distribution")
    for k, q in enumerate(qs):
        if abs(X[:, k] @ p - system.expectations[(q, c)]) > tol:
            raise CbdFormatError(f"joint of context {c} disagrees with <{q}^{c}>")
    if c in system.correlators and abs(X.prod(axis=1) @ p - system.correlators[c]) > tol:
        raise CbdFormatError(f"joint of context {c} disagrees with its correlator")
    return p


def coupling_lp(system: CbdSystem, joints: dict, guard: int = COUPLING_GUARD,
                synthetic: bool = False) -> CouplingResult:
    """Minimal expected number of disagreements within connections over all couplings.

    ``joints[c]`` lists probabilities of the context's +-1 tuples in
    ``itertools.product((1, -1), repeat=r)`` order.  Only tuples with positive
    probability become coupling atoms.  Connections of any size count as
    disagreeing unless all their variables are equal.
    """
    ids = list(system.contexts)
    probs = {c: _check_joint(system, c, joints[c]) for c in ids}
    supports = {c: np.nonzero(probs[c] > 0)[0] for c in ids}
    n_atoms = int(np.prod([len(supports[c]) for c in ids], dtype=float))
    if n_atoms > guard:
        raise ValueError(f"{n_atoms} coupling atoms exceed the guard of {guard}")
    tuples = {c: np.array(_outcome_tuples(len(system.contexts[c]))) for c in ids}
    grid = np.indices([len(supports[c]) for c in ids]).reshape(len(ids), -1)

    # value of every context-tagged variable on every atom
    values = {}
    for k, c in enumerate(ids):
        local = tuples[c][supports[c][grid[k]]]
        for pos, q in enumerate(system.contexts[c]):
            values[(q, c)] = local[:, pos]
    cost = np.zeros(grid.shape[1])
    for q, cs in system.connections.items():
        vs = np.array([values[(q, c)] for c in cs])
        cost += np.any(vs != vs[0], axis=0)

    rows, cols, b = [], [], []
    offset = 0
    for k, c in enumerate(ids):
        rows.append(offset + grid[k])
        cols.append(np.arange(grid.shape[1]))
        b.extend(probs[c][supports[c]])
        offset += len(supports[c])
    A = sp.csr_matrix((np.ones(sum(len(r) for r in rows)),
                       (np.concatenate(rows), np.concatenate(cols))), shape=(offset, grid.shape[1]))
    res = solve_lp(LinearProgram(cost, A, np.array(b), EQ))
    if res.status != "optimal":
        raise RuntimeError(f"coupling LP ended as {res.status}")
    coupling = {}
    for a in np.nonzero(res.x > 1e-12)[0]:
        key = tuple(tuple(int(v) for v in tuples[c][supports[c][grid[k, a]]]) for k, c in enumerate(ids))
        coupling[key] = float(res.x[a])
    return CouplingResult(float(res.value), coupling, grid.shape[1], synthetic)


def maxent_joint(means, correlator) -> np.ndarray:
    """Maximum-entropy distribution on +-1 tuples with given means and product moment.

    Requires strictly interior moments; the result lists probabilities in
    ``itertools.product((1, -1), repeat=r)`` order.
    """
    means = list(means)
    X = np.array(_outcome_tuples(len(means)), dtype=float)
    F = np.column_stack([X, X.prod(axis=1)])
    target = np.array(means + [correlator], dtype=float)
    if len(means) == 2:
        # four outcomes, four constraints: the distribution is determined
        p = np.array([(1 + s * means[0] + t * means[1] + s * t * correlator) / 4 for s, t in X])
        if np.any(p < -1e-12):
            raise ValueError("moments are not realisable by a distribution")
        return np.clip(p, 0, None)
    if np.any(np.abs(target) >= 1):
        raise ValueError("maximum-entropy synthesis needs moments strictly inside (-1, 1)")

    def dual(th):
        z = F @ th
        zmax = z.max()
        e = np.exp(z - zmax)
        return np.log(e.sum()) + zmax - th @ target

    def grad(th):
        e = np.exp(F @ th - (F @ th).max())
        p = e / e.sum()
        return F.T @ p - target

    def hess(th):
        e = np.exp(F @ th - (F @ th).max())
        p = e / e.sum()
        m = F.T @ p
        return (F.T * p) @ F - np.outer(m, m)

    res = so.minimize(dual, np.zeros(F.shape[1]), jac=grad, hess=hess, method="trust-exact",
                      options={"gtol": 1e-13})
    th = res.x
    e = np.exp(F @ th - (F @ th).max())
    p = e / e.sum()
    if np.abs(F.T @ p - target).max() > 1e-9:
        raise ValueError("maximum-entropy fit did not match the moments")
    return p


def synthetic_joints(system: CbdSystem) -> dict:
    out = {}
    for c, qs in system.contexts.items():
        if c not in system.correlators:
            raise CbdFormatError(f"correlator required for context {c}")
        out[c] = maxent_joint([system.expectations[(q, c)] for q in qs], system.correlators[c])
    return out


# ----------------------------------------------------------- construction

def system_from_empirical(model, values: dict | None = None, context_ids=None) -> CbdSystem:
    """CbD system of a +-1-valued empirical model: means and product moments per context.

    ``values`` maps outcome symbols to +1/-1 (default: first outcome +1).
    """
    sc = model.scenario
    if values is None:
        if sc.n_outcomes != 2:
            raise ValueError("binary outcomes required")
        values = {sc.outcomes[0]: 1, sc.outcomes[1]: -1}
    vals = np.array([values[o] for o in sc.outcomes], dtype=float)
    ids = list(context_ids or range(1, len(sc.contexts) + 1))
    contexts, expect, corr = {}, {}, {}
    for cid, c, t in zip(ids, sc.contexts, model.as_float().tables):
        contexts[cid] = c
        grids = np.meshgrid(*([vals] * len(c)), indexing="ij")
        for k, q in enumerate(c):
            expect[(q, cid)] = float(np.sum(grids[k] * t))
        corr[cid] = float(np.sum(np.prod(grids, axis=0) * t))
    return CbdSystem(contexts, expect, corr)


def joints_from_empirical(model, values: dict | None = None, context_ids=None) -> dict:
    """Per-context joints in ``coupling_lp`` order, from an empirical model."""
    sc = model.scenario
    if values is None:
        values = {sc.outcomes[0]: 1, sc.outcomes[1]: -1}
    index = {v: sc.outcomes.index(o) for o, v in values.items()}
    ids = list(context_ids or range(1, len(sc.contexts) + 1))
    out = {}
    for cid, c, t in zip(ids, sc.contexts, model.as_float().tables):
        out[cid] = np.array([t[tuple(index[v] for v in tup)] for tup in _outcome_tuples(len(c))])
    return out


PM_TEMPLATE = {
    "1": ("A11", "A12", "A13"), "2": ("A21", "A22", "A23"), "3": ("A31", "A32", "A33"),
    "4": ("A11", "A21", "A31"), "5": ("A12", "A22", "A32"), "6": ("A13", "A23", "A33"),
}


def _parse_float(text, where):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise CbdFormatError(f"{where}: cannot read number {text!r}") from None


def ingest_expectations(source, correlators=None) -> CbdSystem:
    """Read ``property,context,expectation`` rows, then a ``context,correlator`` section.

    ``source`` is a path or the CSV text.  Lines starting with ``#`` are
    comments.  The correlator section may live in a second file passed as
    ``correlators``.  When the properties and contexts are those of the PM
    square, a row naming a property outside its context (a label slip) is
    reported in ``notes`` and reassigned to the template context that is
    still missing that property.
    """
    text = _read(source)
    exp_rows, corr_rows = _split_sections(text, "expectations")
    if correlators is not None:
        extra_exp, corr_rows2 = _split_sections(_read(correlators), "correlators")
        if extra_exp:
            raise CbdFormatError("correlator file contains expectation rows")
        corr_rows = corr_rows + corr_rows2
    if not exp_rows:
        raise CbdFormatError("no expectation rows")
    if not corr_rows:
        raise CbdFormatError("correlators required: no context,correlator rows found")

    raw = []
    for line_no, row in exp_rows:
        if len(row) != 3:
            raise CbdFormatError(f"line {line_no}: expected property,context,expectation")
        q, c, v = (x.strip() for x in row)
        val = _parse_float(v, f"line {line_no}")
        if not -1 <= val <= 1:
            raise CbdFormatError(f"line {line_no}: expectation {val} outside [-1, 1]")
        raw.append((line_no, q, c, val))

    notes = []
    props = {q for _, q, _, _ in raw}
    ctx_ids = {c for _, _, c, _ in raw}
    template = set(props) == {q for qs in PM_TEMPLATE.values() for q in qs} and ctx_ids <= set(PM_TEMPLATE)
    expectations, contexts = {}, {}
    if template:
        slips = [(ln, q, c, v) for ln, q, c, v in raw if q not in PM_TEMPLATE[c]]
        good = [(ln, q, c, v) for ln, q, c, v in raw if q in PM_TEMPLATE[c]]
        for ln, q, c, v in good:
            expectations[(q, c)] = v
        for ln, q, c, v in slips:
            free = [d for d, qs in PM_TEMPLATE.items() if q in qs and (q, d) not in expectations]
            if len(free) != 1:
                raise CbdFormatError(f"line {ln}: {q} does not belong to context {c}")
            notes.append(f"line {ln}: {q} listed under context {c}, read as context {free[0]}")
            warnings.warn(notes[-1], stacklevel=2)
            expectations[(q, free[0])] = v
        contexts = {c: PM_TEMPLATE[c] for c in sorted(PM_TEMPLATE) if any(k[1] == c for k in expectations)}
    else:
        for ln, q, c, v in raw:
            if (q, c) in expectations:
                raise CbdFormatError(f"line {ln}: duplicate expectation for {q} in context {c}")
            expectations[(q, c)] = v
            contexts.setdefault(c, [])
            contexts[c].append(q)

    corr = {}
    for line_no, row in corr_rows:
        if len(row) != 2:
            raise CbdFormatError(f"line {line_no}: expected context,correlator")
        c, v = row[0].strip(), row[1].strip()
        if v == "":
            raise CbdFormatError(f"line {line_no}: correlators required, context {c} has none")
        val = _parse_float(v, f"line {line_no}")
        if not -1 <= val <= 1:
            raise CbdFormatError(f"line {line_no}: correlator {val} outside [-1, 1]")
        corr[c] = val
    missing = [c for c in contexts if c not in corr]
    if missing:
        raise CbdFormatError(f"correlators required for contexts {missing}")
    return CbdSystem(contexts, expectations, corr, tuple(notes))


def _read(source) -> str:
    if isinstance(source, Path) or (isinstance(source, str) and source and "\n" not in source
                                    and Path(source).is_file()):
        return Path(source).read_text()
    return str(source)


def _split_sections(text, first):
    """Rows under the ``property,...`` header and rows under the ``context,correlator`` header."""
    section = None
    exp, corr = [], []
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        head = [x.strip().lower() for x in row]
        if head == ["property", "context", "expectation"]:
            section = "exp"
            continue
        if head == ["context", "correlator"]:
            section = "corr"
            continue
        if section is None:
            raise CbdFormatError(f"line {line_no}: data before a header row")
        (exp if section == "exp" else corr).append((line_no, row))
    return exp, corr


def bundled_kirchmair() -> CbdSystem:
    return ingest_expectations(Path(__file__).with_name("fixtures") / "kirchmair.csv")
