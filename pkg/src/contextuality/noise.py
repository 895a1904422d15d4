"""Kraus channels: construction, application, duality, composition, PM noise curves."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)

KINDS = ("depolarizing", "bit_flip", "phase_damping", "amplitude_damping")


def _rho(x) -> np.ndarray:
    return x.rho if hasattr(x, "rho") else np.asarray(x, dtype=complex)


@dataclass(frozen=True, eq=False)
class Channel:
    """Completely positive map ``rho -> sum_i K_i rho K_i^dag``.

    Channels acting on states are trace preserving and checked on
    construction.  Duals and compositions act on observables or mix the two
    pictures, so they are built with ``check=False`` and may only be unital.
    """

    kraus: tuple
    name: str = "channel"
    check: bool = True

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ks[0].shape[0]
        for k in ks:
            if k.shape != (d, d):
                raise ValueError("Kraus operators must be square and of equal size")
        object.__setattr__(self, "kraus", ks)
        if self.check and not self.is_trace_preserving(1e-9):
            raise ValueError(f"{self.name}: Kraus operators are not trace preserving")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho) -> np.ndarray:
        rho = _rho(rho)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"channel acts on dimension {self.dim}, got {rho.shape}")
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def is_trace_preserving(self, tol=1e-10) -> bool:
        s = sum(k.conj().T @ k for k in self.kraus)
        return bool(np.abs(s - np.eye(self.dim)).max() <= tol)

    def is_unital(self, tol=1e-10) -> bool:
        s = sum(k @ k.conj().T for k in self.kraus)
        return bool(np.abs(s - np.eye(self.dim)).max() <= tol)

    def choi(self) -> np.ndarray:
        """``(E x id)(|Omega><Omega|)`` with ``|Omega>`` the normalised maximally entangled state."""
        d = self.dim
        omega = np.zeros(d * d, dtype=complex)
        omega[:: d + 1] = 1 / np.sqrt(d)
        big = np.outer(omega, omega.conj())
        return sum(np.kron(k, np.eye(d)) @ big @ np.kron(k, np.eye(d)).conj().T for k in self.kraus)


def identity_channel(dim: int) -> Channel:
    return Channel((np.eye(dim),), "identity")


def single_qubit_kraus(kind: str, p: float) -> list[np.ndarray]:
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if kind == "depolarizing":
        return [np.sqrt(1 - 3 * p / 4) * I2] + [np.sqrt(p / 4) * s for s in (SX, SY, SZ)]
    if kind == "bit_flip":
        return [np.sqrt(1 - p) * I2, np.sqrt(p) * SX]
    if kind == "phase_damping":
        return [np.sqrt(1 - p / 2) * I2, np.sqrt(p / 2) * SZ]
    if kind == "amplitude_damping":
        return [np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex),
                np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)]
    raise ValueError(f"unknown channel kind {kind!r}; choose from {KINDS}")


def default_lift(kind: str) -> str:
    """How a kind extends to several qubits unless told otherwise.

    Depolarizing noise mixes the whole register with the maximally mixed state,
    ``p 1/d + (1-p) rho``; the other kinds act on each qubit independently.
    """
    return "global" if kind == "depolarizing" else "independent"


def make_channel(kind: str, p: float, n_qubits: int = 1, lift: str | None = None) -> Channel:
    lift = lift or default_lift(kind)
    base = single_qubit_kraus(kind, p)
    if n_qubits == 1:
        return Channel(tuple(base), f"{kind}({p})")
    if lift == "independent":
        ks = [reduce(np.kron, combo) for combo in itertools.product(base, repeat=n_qubits)]
    elif lift == "global":
        if kind != "depolarizing":
            raise ValueError("the global lift is defined for depolarizing noise only")
        d = 2**n_qubits
        strings = list(itertools.product(PAULIS, repeat=n_qubits))
        ks = [np.sqrt(1 - (d * d - 1) * p / (d * d)) * np.eye(d, dtype=complex)]
        ks += [np.sqrt(p / (d * d)) * reduce(np.kron, s) for s in strings[1:]]
    else:
        raise ValueError(f"unknown lift {lift!r}")
    return Channel(tuple(ks), f"{kind}({p}) {lift} on {n_qubits} qubits")


def apply(channel: Channel, state):
    """Apply to a ``State`` (returns a ``State``) or to a bare matrix."""
    out = channel(state)
    if hasattr(state, "rho"):
        return type(state)(out)
    return out


def dual(channel: Channel) -> Channel:
    """Heisenberg-picture map with Kraus operators ``K_i^dag``."""
    return Channel(tuple(k.conj().T for k in channel.kraus), f"dual of {channel.name}", check=False)


def compose_state_observable(e1: Channel, e2: Channel) -> Channel:
    """Channel ``E3`` with ``Tr(E2(A) E1(rho)) = Tr(A E3(rho))``.

    ``e2`` acts on observables, so its Kraus operators ``G_j`` enter through
    their adjoints: ``H_ij = G_j^dag K_i``.
    """
    if e1.dim != e2.dim:
        raise ValueError("channels act on different dimensions")
    hs = tuple(g.conj().T @ k for k in e1.kraus for g in e2.kraus)
    return Channel(hs, f"{e2.name} after {e1.name}", check=False)


# ------------------------------------------------------------ PM noise curves

def reference_curve(kind: str, p):
    """Reference closed forms for the PM value under each noise kind.

    Depolarizing and bit flip are reproduced by the simulator; the damping
    expressions are kept for comparison only.
    """
    p = np.asarray(p, dtype=float)
    s = np.sqrt(1 - p)
    if kind == "depolarizing":
        return 6 * (p - 1) ** 2
    if kind == "bit_flip":
        return 6 - 28 * p + 56 * p**2 - 48 * p**3 + 16 * p**4
    if kind == "amplitude_damping":
        return (1 - p) * (2 + 4 * s - (4 + 3 * s) * p + 6 * p**2 - 2 * p**3)
    if kind == "phase_damping":
        return 0.5 * (4 + 8 * s - 4 * (2 + 3 * s) * p + (15 + 16 * s) * p**2
                      - (21 + 16 * s) * p**3 + 2 * (11 + 6 * s) * p**4
                      - (17 + 6 * s) * p**5 + 2 * (5 + s) * p**6 - 4 * p**7 + p**8)
    raise ValueError(f"unknown channel kind {kind!r}")


ASSERTED_KINDS = ("depolarizing", "bit_flip")


def pm_noise_curve(kind: str, grid, state=None, ordering: str = "row-major",
                   layout: str = "kirchmair", lift: str | None = None,
                   prep_noise: bool = False) -> list[tuple[float, float]]:
    """``<chi_PM>`` along ``grid`` with ``kind`` noise between measurements.

    Default state is ``|phi+>``; depolarizing and bit-flip values do not
    depend on the state, the damping ones do.
    """
    from .quantum import State, pm_model, pm_value

    if state is None:
        state = State.bell()
    out = []
    for p in sorted(float(x) for x in grid):
        if not 0 <= p <= 1:
            raise ValueError(f"grid point {p} outside [0, 1]")
        ch = make_channel(kind, p, n_qubits=2, lift=lift)
        model = pm_model(state, ordering, layout=layout, channel=ch, prep_noise=prep_noise)
        out.append((p, pm_value(model)))
    return out


def curve_deviation(kind: str, curve) -> float:
    """Largest gap between a simulated curve and ``reference_curve``."""
    ps = np.array([p for p, _ in curve])
    vals = np.array([v for _, v in curve])
    return float(np.abs(vals - reference_curve(kind, ps)).max())
