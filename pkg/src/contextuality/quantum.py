"""Finite-dimensional quantum engine for sequential dichotomic measurements.

Observables are plain complex matrices.  A ``QuantumModel`` binds them to the
labels of a scenario; each outcome symbol stands for an eigenvalue (+1 or -1)
through ``outcome_values``.  Noise acts between consecutive measurements of a
sequence, never before the first or after the last, unless ``prep_noise``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .noise import I2, SX, SY, SZ, Channel, identity_channel
from .scenario import EmpiricalModel, MeasurementScenario

EIG_CLUSTER = 1e-8


class ImpossibleOutcome(ValueError):
    """Raised when a Lüders branch has (numerically) zero probability."""


def is_hermitian(A, tol=1e-10) -> bool:
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.abs(A - A.conj().T).max() <= tol


def is_projector(P, tol=1e-10) -> bool:
    return is_hermitian(P, tol) and np.abs(P @ P - P).max() <= tol


@dataclass(frozen=True, eq=False)
class State:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if not is_hermitian(rho):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > 1e-10:
            raise ValueError(f"density matrix has trace {np.trace(rho).real}")
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def pure(cls, vec) -> "State":
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "State":
        return cls(np.eye(dim) / dim)

    @classmethod
    def bell(cls) -> "State":
        """``|phi+> = (|00> + |11>)/sqrt 2``."""
        return cls.pure([1, 0, 0, 1])

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, rank: int | None = None) -> "State":
        """Random density matrix from a Ginibre draw (full rank by default)."""
        g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
        rho = g @ g.conj().T
        return cls(rho / np.trace(rho).real)


def spectral_projectors(A, cluster_tol: float = EIG_CLUSTER) -> list[tuple[float, np.ndarray]]:
    """Eigenvalue-labelled projectors of a Hermitian matrix, degenerate values merged."""
    if not is_hermitian(A):
        raise ValueError("observable is not Hermitian")
    vals, vecs = np.linalg.eigh(np.asarray(A, dtype=complex))
    groups = []
    for k, v in enumerate(vals):
        if groups and abs(v - groups[-1][0][-1]) <= cluster_tol:
            groups[-1][0].append(v)
            groups[-1][1].append(k)
        else:
            groups.append(([v], [k]))
    out = []
    for vs, ks in groups:
        V = vecs[:, ks]
        out.append((float(np.mean(vs)), V @ V.conj().T))
    return out


def born_probabilities(state: State, observable) -> dict[float, float]:
    """Outcome probabilities ``Tr(Pi_k rho)`` keyed by eigenvalue."""
    out = {}
    for val, P in spectral_projectors(observable):
        key = round(val, 9) + 0.0
        out[key] = float(np.trace(P @ state.rho).real)
    return out


def luders_update(state: State, projector) -> tuple[State, float]:
    P = np.asarray(projector, dtype=complex)
    if not is_projector(P):
        raise ValueError("not a projector")
    prob = float(np.trace(P @ state.rho).real)
    if prob <= 1e-12:
        raise ImpossibleOutcome(f"outcome has probability {prob:.3g}")
    post = P @ state.rho @ P / prob
    return State((post + post.conj().T) / 2), prob


# ------------------------------------------------------------------- models

PLUS_MINUS = {"+1": 1, "-1": -1}


@dataclass(frozen=True, eq=False)
class QuantumModel:
    """Dichotomic observables on a scenario, a state, and inter-measurement noise.

    ``ordering[i]`` is the measurement order used for context ``i``; it must be
    a permutation of that context's labels.
    """

    scenario: MeasurementScenario
    assignment: dict
    state: State
    channel: Channel | None = None
    ordering: tuple | None = None
    outcome_values: dict = field(default_factory=lambda: dict(PLUS_MINUS))
    prep_noise: bool = False

    def __post_init__(self):
        sc = self.scenario
        d = self.state.dim
        ops = {}
        for x in sc.labels:
            if x not in self.assignment:
                raise ValueError(f"label {x!r} has no observable")
            A = np.asarray(self.assignment[x], dtype=complex)
            if A.shape != (d, d):
                raise ValueError(f"observable {x!r} has shape {A.shape}, state has dimension {d}")
            if not is_hermitian(A) or np.abs(A @ A - np.eye(d)).max() > 1e-9:
                raise ValueError(f"observable {x!r} is not a +-1 observable")
            ops[x] = A
        object.__setattr__(self, "assignment", ops)
        if self.channel is None:
            object.__setattr__(self, "channel", identity_channel(d))
        elif self.channel.dim != d:
            raise ValueError("channel dimension does not match the state")
        order = tuple(tuple(c) for c in (self.ordering or sc.contexts))
        if len(order) != len(sc.contexts):
            raise ValueError("one ordering per context required")
        for c, o in zip(sc.contexts, order):
            if sorted(c) != sorted(o):
                raise ValueError(f"ordering {o} is not a permutation of context {c}")
        object.__setattr__(self, "ordering", order)
        if set(self.outcome_values) != set(sc.outcomes) or \
                sorted(self.outcome_values.values()) != [-1, 1]:
            raise ValueError("outcome_values must map the two outcomes to +1 and -1")

    def projector(self, label: str, outcome: str) -> np.ndarray:
        A = self.assignment[label]
        return (np.eye(len(A)) + self.outcome_values[outcome] * A) / 2


def _initial(model: QuantumModel) -> np.ndarray:
    rho = model.state.rho
    return model.channel(rho) if model.prep_noise else rho


def sequential_expectation(model: QuantumModel, sequence) -> float:
    """Expectation of the product of outcomes measured in ``sequence`` order."""
    sequence = list(sequence)
    if not sequence:
        raise ValueError("empty sequence")
    for x in sequence:
        if x not in model.assignment:
            raise KeyError(f"unassigned label {x!r}")
    d = model.state.dim
    sigma = _initial(model)
    for step, x in enumerate(sequence[:-1]):
        if step:
            sigma = model.channel(sigma)
        A = model.assignment[x]
        Pp, Pm = (np.eye(d) + A) / 2, (np.eye(d) - A) / 2
        sigma = Pp @ sigma @ Pp - Pm @ sigma @ Pm
    if len(sequence) > 1:
        sigma = model.channel(sigma)
    return float(np.trace(model.assignment[sequence[-1]] @ sigma).real)


def sequence_probabilities(model: QuantumModel, sequence) -> np.ndarray:
    """Joint outcome probabilities of measuring ``sequence`` in order; axes follow it."""
    k = len(model.scenario.outcomes)
    out = np.zeros((k,) * len(sequence))
    for idx in itertools.product(range(k), repeat=len(sequence)):
        sigma = _initial(model)
        for step, (x, o) in enumerate(zip(sequence, idx)):
            if step:
                sigma = model.channel(sigma)
            P = model.projector(x, model.scenario.outcomes[o])
            sigma = P @ sigma @ P
        out[idx] = np.trace(sigma).real
    return out


def model_from_quantum(model: QuantumModel, tolerance: float = 1e-9) -> EmpiricalModel:
    sc = model.scenario
    tables = []
    for c, seq in zip(sc.contexts, model.ordering):
        t = sequence_probabilities(model, seq)
        tables.append(np.transpose(t, [seq.index(x) for x in c]))
    return EmpiricalModel(sc, tuple(tables), tolerance)


# ------------------------------------------------------------------ presets

PM_LABELS = tuple(f"A{r}{c}" for r in (1, 2, 3) for c in (1, 2, 3))
PM_CONTEXTS = (
    ("A11", "A12", "A13"), ("A21", "A22", "A23"), ("A31", "A32", "A33"),
    ("A11", "A21", "A31"), ("A12", "A22", "A32"), ("A13", "A23", "A33"),
)
#: sign of each context term in S; the third column multiplies to -1
PM_SIGNS = (1, 1, 1, 1, 1, -1)
#: sequences placing every observable at the same position in both its contexts
PM_REORDERED = (
    ("A11", "A12", "A13"), ("A23", "A21", "A22"), ("A32", "A33", "A31"),
    ("A11", "A21", "A31"), ("A32", "A12", "A22"), ("A23", "A33", "A13"),
)

PM_LAYOUTS = {
    # standard square of tensor Paulis
    "table": ((SX, I2), (I2, SX), (SX, SX),
              (I2, SZ), (SZ, I2), (SZ, SZ),
              (SX, SZ), (SZ, SX), (SY, SY)),
    # the correspondence used for the trapped-ion data set
    "kirchmair": ((SZ, I2), (I2, SZ), (SZ, SZ),
                  (I2, SX), (SX, I2), (SX, SX),
                  (SZ, SX), (SX, SZ), (SY, SY)),
}


def pm_observables(layout: str = "table") -> dict[str, np.ndarray]:
    if layout not in PM_LAYOUTS:
        raise ValueError(f"unknown PM layout {layout!r}; choose from {sorted(PM_LAYOUTS)}")
    return {x: np.kron(a, b) for x, (a, b) in zip(PM_LABELS, PM_LAYOUTS[layout])}


def pm_scenario() -> MeasurementScenario:
    return MeasurementScenario(PM_LABELS, PM_CONTEXTS, ("+1", "-1"))


def pm_model(state: State | None = None, ordering: str = "row-major", layout: str = "table",
             channel: Channel | None = None, prep_noise: bool = False) -> QuantumModel:
    state = State.maximally_mixed(4) if state is None else state
    if state.dim != 4:
        raise ValueError("the PM square needs a two-qubit state")
    if ordering == "row-major":
        order = PM_CONTEXTS
    elif ordering == "reordered":
        order = PM_REORDERED
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    return QuantumModel(pm_scenario(), pm_observables(layout), state, channel, order,
                        prep_noise=prep_noise)


def pm_value(model: QuantumModel) -> float:
    """``<S>``: signed sum of the six context products, each in its sequence order."""
    return sum(s * sequential_expectation(model, seq) for s, seq in zip(PM_SIGNS, model.ordering))


def kcbs_vectors() -> np.ndarray:
    """Five unit vectors in R^3 with consecutive ones (cyclically) orthogonal."""
    c = np.cos(np.pi / 5)
    cos_t = np.sqrt(c / (1 + c))
    sin_t = np.sqrt(1 - cos_t**2)
    phi = 4 * np.pi * np.arange(5) / 5
    return np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), np.full(5, cos_t)])


KCBS_LABELS = ("A1", "A2", "A3", "A4", "A5")
KCBS_CONTEXTS = tuple((KCBS_LABELS[i], KCBS_LABELS[(i + 1) % 5]) for i in range(5))


def kcbs_model(state: State | None = None, channel: Channel | None = None) -> QuantumModel:
    """``A_i = 2|l_i><l_i| - 1``; outcome "1" is the +1 eigenvalue (projector onto l_i)."""
    state = State.pure([0, 0, 1]) if state is None else state
    if state.dim != 3:
        raise ValueError("KCBS needs a qutrit state")
    ops = {x: 2 * np.outer(v, v) - np.eye(3) for x, v in zip(KCBS_LABELS, kcbs_vectors())}
    sc = MeasurementScenario(KCBS_LABELS, KCBS_CONTEXTS, ("0", "1"))
    return QuantumModel(sc, ops, state, channel, outcome_values={"1": 1, "0": -1})


def kcbs_correlator_sum(model: QuantumModel) -> float:
    return sum(sequential_expectation(model, c) for c in model.scenario.contexts)


def equatorial(angle: float) -> np.ndarray:
    return np.cos(angle) * SX + np.sin(angle) * SY


def chsh_model(state: State | None = None, angles=(0.0, np.pi / 3, 0.0, np.pi / 3),
               channel: Channel | None = None) -> QuantumModel:
    """Equatorial measurements for A, A' (first qubit) and B, B' (second qubit).

    Outcome "0" is +1 and "1" is -1; on ``|phi+>`` the correlator is ``cos(a + b)``.
    """
    state = State.bell() if state is None else state
    a, a2, b, b2 = angles
    ops = {"A": np.kron(equatorial(a), I2), "A'": np.kron(equatorial(a2), I2),
           "B": np.kron(I2, equatorial(b)), "B'": np.kron(I2, equatorial(b2))}
    sc = MeasurementScenario(("A", "A'", "B", "B'"),
                             (("A", "B"), ("A", "B'"), ("A'", "B"), ("A'", "B'")), ("0", "1"))
    return QuantumModel(sc, ops, state, channel, outcome_values={"0": 1, "1": -1})


PRESETS = ("pm", "kcbs", "chsh-pi3")


def preset_model(name: str, channel: Channel | None = None, ordering: str = "row-major",
                 layout: str = "table", prep_noise: bool = False) -> QuantumModel:
    if name == "pm":
        return pm_model(State.bell(), ordering, layout, channel, prep_noise)
    if name == "kcbs":
        return kcbs_model(channel=channel)
    if name == "chsh-pi3":
        return chsh_model(channel=channel)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")


# -------------------------------------------------------------------- POVMs

@dataclass(frozen=True, eq=False)
class Povm:
    """Effects with outcome tags.  ``check=False`` skips positivity (mother candidates)."""

    effects: tuple
    tags: tuple
    check: bool = True

    def __post_init__(self):
        eff = tuple(np.asarray(e, dtype=complex) for e in self.effects)
        if len(eff) != len(self.tags):
            raise ValueError("one tag per effect required")
        d = eff[0].shape[0]
        if np.abs(sum(eff) - np.eye(d)).max() > 1e-9:
            raise ValueError("effects do not sum to the identity")
        if self.check and min(np.linalg.eigvalsh(e).min() for e in eff) < -1e-9:
            raise ValueError("an effect is not positive semidefinite")
        object.__setattr__(self, "effects", eff)
        object.__setattr__(self, "tags", tuple(self.tags))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(e).min() for e in self.effects))

    def marginal(self, index: int) -> "Povm":
        """Sum effects over every tag coordinate except ``index``."""
        acc = {}
        for t, e in zip(self.tags, self.effects):
            acc[t[index]] = acc.get(t[index], 0) + e
        keys = sorted(acc, reverse=True)
        return Povm(tuple(acc[k] for k in keys), tuple(keys), check=False)


def unsharp_pauli_povm(eta: float) -> tuple[list[Povm], Povm]:
    """Three unsharp Pauli POVMs ``E(x) = (1 + eta x sigma)/2`` and their candidate mother."""
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    sig = (SX, SY, SZ)
    singles = [Povm(tuple((I2 + eta * x * s) / 2 for x in (1, -1)), (1, -1)) for s in sig]
    tags = list(itertools.product((1, -1), repeat=3))
    mother = Povm(tuple((I2 + eta * sum(x * s for x, s in zip(t, sig))) / 8 for t in tags),
                  tuple(tags), check=False)
    return singles, mother


def is_jointly_measurable(mother: Povm, tol: float = 1e-9) -> tuple[bool, float]:
    lam = mother.min_eigenvalue()
    d = mother.effects[0].shape[0]
    sums = np.abs(sum(mother.effects) - np.eye(d)).max() <= tol
    return bool(lam >= -tol and sums), lam


def tensor(*ops) -> np.ndarray:
    return reduce(np.kron, ops)
