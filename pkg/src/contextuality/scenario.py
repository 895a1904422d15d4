"""Measurement scenarios and empirical models.

A scenario is a triple (labels, contexts, outcomes).  An empirical model
attaches to every context a probability table over outcome tuples, stored as
an ``|O| x ... x |O|`` array with one axis per label of the context, in the
context's label order.  Exact models use object arrays of ``Fraction``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_TOLERANCE = 1e-9


class ModelFormatError(ValueError):
    """Raised for malformed scenario/model input; ``where`` points at the field."""

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class MeasurementScenario:
    labels: tuple[str, ...]
    contexts: tuple[tuple[str, ...], ...]
    outcomes: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        contexts = tuple(tuple(str(x) for x in c) for c in self.contexts)
        outcomes = tuple(str(x) for x in self.outcomes)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "contexts", contexts)
        object.__setattr__(self, "outcomes", outcomes)

        if len(set(labels)) != len(labels):
            raise ModelFormatError("duplicate label", "labels")
        if not outcomes:
            raise ModelFormatError("outcome set is empty", "outcomes")
        if len(set(outcomes)) != len(outcomes):
            raise ModelFormatError("duplicate outcome", "outcomes")
        if not contexts:
            raise ModelFormatError("no contexts", "contexts")
        known = set(labels)
        for i, c in enumerate(contexts):
            if not c:
                raise ModelFormatError("empty context", f"contexts[{i}]")
            if len(set(c)) != len(c):
                raise ModelFormatError("label repeated inside context", f"contexts[{i}]")
            unknown = set(c) - known
            if unknown:
                raise ModelFormatError(f"unknown labels {sorted(unknown)}", f"contexts[{i}]")
        covered = set().union(*map(set, contexts))
        missing = [x for x in labels if x not in covered]
        if missing:
            raise ModelFormatError(f"labels {missing} belong to no context", "contexts")
        sets = [frozenset(c) for c in contexts]
        for i, j in itertools.permutations(range(len(sets)), 2):
            if sets[i] <= sets[j]:
                raise ModelFormatError(
                    f"context {i} is included in context {j}", f"contexts[{i}]"
                )

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def context_index(self, context) -> int:
        """Index of a context given as an int or as a collection of labels."""
        if isinstance(context, (int, np.integer)):
            if not 0 <= context < len(self.contexts):
                raise KeyError(f"no context with index {context}")
            return int(context)
        target = frozenset(context)
        for i, c in enumerate(self.contexts):
            if frozenset(c) == target:
                return i
        raise KeyError(f"unknown context {sorted(target)}")

    def tuples(self, context) -> list[tuple[str, ...]]:
        """Outcome tuples of a context in table (row-major) order."""
        i = self.context_index(context)
        return list(itertools.product(self.outcomes, repeat=len(self.contexts[i])))

    def encode(self, context, outcome_tuple) -> tuple[int, ...]:
        i = self.context_index(context)
        if isinstance(outcome_tuple, str):
            if "," in outcome_tuple:
                outcome_tuple = tuple(outcome_tuple.split(","))
            elif all(len(o) == 1 for o in self.outcomes):
                outcome_tuple = tuple(outcome_tuple)
            else:
                outcome_tuple = (outcome_tuple,) if outcome_tuple else ()
        if len(outcome_tuple) != len(self.contexts[i]):
            raise ValueError(
                f"tuple {outcome_tuple!r} has length {len(outcome_tuple)}, "
                f"context {i} has {len(self.contexts[i])} labels"
            )
        try:
            return tuple(self.outcomes.index(str(o)) for o in outcome_tuple)
        except ValueError:
            raise ValueError(f"unknown outcome in {outcome_tuple!r}") from None


def to_fraction(v) -> Fraction:
    """Exact value of ``v``; floats go through their shortest repr (0.1 -> 1/10)."""
    if isinstance(v, (float, np.floating)):
        return Fraction(repr(float(v)))
    return Fraction(v)


def _as_table(values, shape, exact: bool) -> np.ndarray:
    if exact:
        flat = [to_fraction(v) for v in np.asarray(values, dtype=object).ravel()]
        arr = np.empty(len(flat), dtype=object)
        arr[:] = flat
        arr = arr.reshape(shape)
    else:
        arr = np.asarray(values, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """Per-context probability tables.  ``tables[i]`` belongs to ``contexts[i]``."""

    scenario: MeasurementScenario
    tables: tuple[np.ndarray, ...]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if len(self.tables) != len(self.scenario.contexts):
            raise ModelFormatError(
                f"{len(self.tables)} tables for {len(self.scenario.contexts)} contexts", "tables"
            )
        exact = any(np.asarray(t).dtype == object for t in self.tables)
        k = self.scenario.n_outcomes
        tables = []
        for i, (c, t) in enumerate(zip(self.scenario.contexts, self.tables)):
            shape = (k,) * len(c)
            if np.size(t) != k ** len(c):
                raise ModelFormatError(f"table has {np.size(t)} entries, expected {k ** len(c)}", f"tables.{i}")
            tables.append(_as_table(t, shape, exact))
        object.__setattr__(self, "tables", tuple(tables))
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")

    @property
    def exact(self) -> bool:
        return self.tables[0].dtype == object

    @classmethod
    def from_rows(cls, scenario, rows: Sequence[Sequence], tolerance=DEFAULT_TOLERANCE, exact=False):
        """Build from flat rows listed in ``scenario.tuples`` order."""
        return cls(scenario, tuple(_as_table(r, (len(r),), exact) for r in rows), tolerance)

    @classmethod
    def from_dicts(cls, scenario, tables: Mapping, tolerance=DEFAULT_TOLERANCE, exact=False):
        """Build from ``{context: {outcome tuple: p}}``; missing tuples are 0."""
        out = []
        for i, c in enumerate(scenario.contexts):
            entries = tables.get(i, tables.get(c))
            if entries is None:
                raise ModelFormatError("missing table", f"tables.{i}")
            arr = np.zeros((scenario.n_outcomes,) * len(c), dtype=object if exact else float)
            if exact:
                arr[...] = Fraction(0)
            for key, p in entries.items():
                arr[scenario.encode(i, key)] = to_fraction(p) if exact else float(p)
            out.append(arr)
        return cls(scenario, tuple(out), tolerance)

    def table(self, context) -> np.ndarray:
        return self.tables[self.scenario.context_index(context)]

    def prob(self, context, outcome_tuple):
        i = self.scenario.context_index(context)
        return self.tables[i][self.scenario.encode(i, outcome_tuple)]

    def as_float(self) -> "EmpiricalModel":
        if not self.exact:
            return self
        return EmpiricalModel(self.scenario, tuple(t.astype(float) for t in self.tables), self.tolerance)

    def mix(self, other: "EmpiricalModel", mu) -> "EmpiricalModel":
        """Contextwise convex combination ``mu*self + (1-mu)*other``."""
        if other.scenario != self.scenario:
            raise ValueError("scenarios differ")
        return EmpiricalModel(
            self.scenario,
            tuple(mu * a + (1 - mu) * b for a, b in zip(self.tables, other.tables)),
            max(self.tolerance, other.tolerance),
        )


@dataclass(frozen=True)
class PossibilisticModel:
    scenario: MeasurementScenario
    supports: tuple[frozenset, ...]

    def __post_init__(self):
        if len(self.supports) != len(self.scenario.contexts):
            raise ValueError("one support per context required")
        sup = tuple(frozenset(tuple(s) for s in x) for x in self.supports)
        object.__setattr__(self, "supports", sup)
        for i, s in enumerate(sup):
            if not s:
                raise ValueError(f"context {i} has an empty support")

    def masks(self) -> list[np.ndarray]:
        """Boolean tables marking the support, one per context."""
        sc = self.scenario
        out = []
        for i, c in enumerate(sc.contexts):
            m = np.zeros((sc.n_outcomes,) * len(c), dtype=bool)
            for t in self.supports[i]:
                m[sc.encode(i, t)] = True
            out.append(m)
        return out


# ---------------------------------------------------------------- operations

def validate_model(model: EmpiricalModel) -> list[str]:
    """Violations of the model invariants, empty when the model is valid."""
    tol = model.tolerance
    report = []
    for i, (c, t) in enumerate(zip(model.scenario.contexts, model.tables)):
        name = "".join(c) if all(len(x) <= 2 for x in c) else ",".join(c)
        flat = t.ravel()
        lo, hi = min(flat), max(flat)
        if lo < -tol:
            report.append(f"context {i} ({name}): negative entry {float(lo):.3g}")
        if hi > 1 + tol:
            report.append(f"context {i} ({name}): entry {float(hi):.6g} exceeds 1")
        s = sum(flat)
        if abs(s - 1) > tol:
            report.append(f"context {i} ({name}): table sums to {float(s):.12g}, not 1")
    return report


def marginalize(model: EmpiricalModel, context, target: Iterable[str]) -> np.ndarray:
    """Marginal of ``e_C`` on ``target``; axes follow the order of ``target``."""
    sc = model.scenario
    i = sc.context_index(context)
    ctx = sc.contexts[i]
    target = tuple(target)
    if not set(target) <= set(ctx) or len(set(target)) != len(target):
        raise ValueError(f"target {target} is not a subset of context {ctx}")
    return _marginal(model.tables[i], ctx, target)


def _marginal(table: np.ndarray, ctx: Sequence[str], target: Sequence[str]) -> np.ndarray:
    drop = tuple(a for a, x in enumerate(ctx) if x not in target)
    m = table.sum(axis=drop) if drop else table
    if not target:
        return np.asarray(m).reshape(())
    kept = [x for x in ctx if x in target]
    return np.transpose(m, [kept.index(x) for x in target])


def signalling_deficit(model: EmpiricalModel):
    """Largest disagreement between marginals of two contexts on their overlap."""
    sc = model.scenario
    worst = Fraction(0) if model.exact else 0.0
    for i, j in itertools.combinations(range(len(sc.contexts)), 2):
        shared = [x for x in sc.contexts[i] if x in sc.contexts[j]]
        if not shared:
            continue
        a = _marginal(model.tables[i], sc.contexts[i], shared)
        b = _marginal(model.tables[j], sc.contexts[j], shared)
        d = max(abs(x) for x in (a - b).ravel())
        worst = max(worst, d)
    return worst


def to_possibilistic(model: EmpiricalModel, threshold=0) -> PossibilisticModel:
    """Keep only the tuples whose probability is strictly above ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    sc = model.scenario
    supports = []
    for i, t in enumerate(model.tables):
        idx = np.argwhere(t > threshold)
        if len(idx) == 0:
            raise ValueError(f"context {i} has an empty support at threshold {threshold}")
        supports.append(frozenset(tuple(sc.outcomes[k] for k in row) for row in idx))
    return PossibilisticModel(sc, tuple(supports))


def possibilistic_to_model(pm: PossibilisticModel) -> EmpiricalModel:
    """Uniform distribution over each support, exact.  Handy for possibility tables."""
    tables = {}
    for i, s in enumerate(pm.supports):
        w = Fraction(1, len(s))
        tables[i] = {t: w for t in s}
    return EmpiricalModel.from_dicts(pm.scenario, tables, exact=True)


# ---------------------------------------------------------------- JSON I/O

_TOP_KEYS = {"labels", "outcomes", "contexts", "tables"}


def _parse_prob(v, exact: bool, where: str):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ModelFormatError(f"probability must be a number, got {v!r}", where)
    try:
        if exact:
            return to_fraction(v)
        return float(Fraction(v)) if isinstance(v, str) else float(v)
    except (ValueError, ZeroDivisionError):
        raise ModelFormatError(f"cannot read probability {v!r}", where) from None


def model_from_dict(data: Mapping, exact=False, tolerance=DEFAULT_TOLERANCE) -> EmpiricalModel:
    if not isinstance(data, Mapping):
        raise ModelFormatError("top level must be an object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise ModelFormatError(f"unknown keys {sorted(extra)}")
    for key in ("labels", "outcomes", "contexts"):
        if key not in data:
            raise ModelFormatError("missing field", key)
        if not isinstance(data[key], list):
            raise ModelFormatError("must be a list", key)
    sc = MeasurementScenario(data["labels"], data["contexts"], data["outcomes"])
    raw = data.get("tables")
    if not isinstance(raw, Mapping):
        raise ModelFormatError("missing or non-object field", "tables")
    tables = {}
    for key, entries in raw.items():
        where = f"tables.{key}"
        if not str(key).isdigit() or int(key) >= len(sc.contexts):
            raise ModelFormatError("context key must be a decimal index into contexts", where)
        if not isinstance(entries, Mapping):
            raise ModelFormatError("must be an object of tuple: probability", where)
        parsed = {}
        for t, p in entries.items():
            w = f"{where}.{t}"
            parts = tuple(t.split(",")) if t else ()
            try:
                sc.encode(int(key), parts)
            except ValueError as exc:
                raise ModelFormatError(str(exc), w) from None
            parsed[parts] = _parse_prob(p, exact, w)
        tables[int(key)] = parsed
    missing = [i for i in range(len(sc.contexts)) if i not in tables]
    if missing:
        raise ModelFormatError(f"no table for contexts {missing}", "tables")
    return EmpiricalModel.from_dicts(sc, tables, tolerance=tolerance, exact=exact)


def model_to_dict(model: EmpiricalModel, drop_zeros=True) -> dict:
    sc = model.scenario
    tables = {}
    for i, t in enumerate(model.tables):
        row = {}
        for tup in sc.tuples(i):
            p = t[sc.encode(i, tup)]
            if drop_zeros and p == 0:
                continue
            row[",".join(tup)] = str(p) if model.exact else float(p)
        tables[str(i)] = row
    return {
        "labels": list(sc.labels),
        "outcomes": list(sc.outcomes),
        "contexts": [list(c) for c in sc.contexts],
        "tables": tables,
    }


def load_model(path, exact=False, tolerance=DEFAULT_TOLERANCE) -> EmpiricalModel:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return model_from_dict(data, exact=exact, tolerance=tolerance)
