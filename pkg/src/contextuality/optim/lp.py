"""Linear programming by the simplex method.

Two engines share one front end:

* a revised simplex over doubles (LU refactorisation each pivot, Dantzig
  pricing that falls back to Bland's rule while the objective stalls), used for
  everything numeric including the large coupling LPs;
* a dense tableau over ``Fraction`` with Bland's rule throughout, used when the
  data are exact, so that feasibility verdicts carry no rounding.

Both run the textbook two-phase method on the standard form
``min c x, A x = b, x >= 0`` with ``b >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

MAX_PIVOTS = 10**6

LE, EQ, GE = "<=", "=", ">="


class LpIterationLimit(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """``min`` (or ``max``) ``c x`` s.t. ``A x (senses) b``, ``x >= lower``.

    ``A`` may be a dense array, a scipy sparse matrix, or an object array of
    Fractions (which selects the exact engine).
    """

    c: object
    A: object
    b: object
    senses: Sequence[str] | str = EQ
    lower: object = None
    maximize: bool = False

    def __post_init__(self):
        m, n = self.A.shape
        if len(self.c) != n:
            raise ValueError(f"objective has length {len(self.c)}, A has {n} columns")
        if len(self.b) != m:
            raise ValueError(f"b has length {len(self.b)}, A has {m} rows")
        if isinstance(self.senses, str):
            self.senses = [self.senses] * m
        self.senses = list(self.senses)
        if len(self.senses) != m:
            raise ValueError("one sense per row required")
        bad = set(self.senses) - {LE, EQ, GE}
        if bad:
            raise ValueError(f"unknown row senses {bad}")
        if self.lower is not None and len(self.lower) != n:
            raise ValueError("lower bounds have the wrong length")
        if not self.exact:
            for name in ("c", "b"):
                if not np.all(np.isfinite(np.asarray(getattr(self, name), dtype=float))):
                    raise ValueError(f"non-finite entries in {name}")

    @property
    def shape(self):
        return self.A.shape

    @property
    def exact(self) -> bool:
        return not sp.issparse(self.A) and np.asarray(self.A).dtype == object


@dataclass
class LpResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    value: object = None
    x: np.ndarray | None = None
    dual: np.ndarray | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(lp: LinearProgram, exact: bool | None = None, max_pivots: int = MAX_PIVOTS,
             tol: float = 1e-9) -> LpResult:
    """Solve ``lp``; the exact engine is used for Fraction data unless told otherwise.

    ``dual`` holds one multiplier per original row with the convention that
    ``value == dual @ (b - A @ lower) + c @ lower`` at optimality.
    """
    if exact is None:
        exact = lp.exact
    if exact:
        return _solve_exact(lp, max_pivots)
    return _solve_float(lp, max_pivots, tol)


# ----------------------------------------------------------- standard form

def _standard_form(lp: LinearProgram, exact: bool):
    """Return (A_std, b_std, c_std, flip, init_basis, n_struct).

    ``init_basis[r]`` is a slack column when row ``r`` can start on one, else -1
    (an artificial is needed).
    """
    m, n = lp.shape
    if exact:
        A = np.array([[Fraction(v) for v in row] for row in np.asarray(lp.A, dtype=object)],
                     dtype=object).reshape(m, n)
        b = np.array([Fraction(v) for v in lp.b], dtype=object)
        c = np.array([Fraction(v) for v in lp.c], dtype=object)
        lower = np.array([Fraction(v) for v in lp.lower], dtype=object) if lp.lower is not None else None
    else:
        A = sp.csr_matrix(lp.A, dtype=float) if sp.issparse(lp.A) else np.asarray(lp.A, dtype=float)
        b = np.asarray(lp.b, dtype=float).copy()
        c = np.asarray(lp.c, dtype=float).copy()
        lower = np.asarray(lp.lower, dtype=float) if lp.lower is not None else None
    if lower is not None:
        b = b - A @ lower
    if lp.maximize:
        c = -c

    slack_rows = [r for r, s in enumerate(lp.senses) if s != EQ]
    k = len(slack_rows)
    sign = np.array([1 if lp.senses[r] == LE else -1 for r in slack_rows])
    flip = np.array([-1 if v < 0 else 1 for v in b])
    if exact:
        S = np.zeros((m, k), dtype=object)
        S[...] = Fraction(0)
        for j, r in enumerate(slack_rows):
            S[r, j] = Fraction(int(sign[j]))
        A_std = np.hstack([A, S]) * flip[:, None]
        b_std = b * flip
        c_std = np.concatenate([c, np.array([Fraction(0)] * k, dtype=object)])
    else:
        S = sp.csr_matrix((sign.astype(float), (slack_rows, np.arange(k))), shape=(m, k))
        A_std = sp.hstack([sp.csr_matrix(A), S]).tocsr()
        A_std = sp.diags(flip.astype(float)) @ A_std
        b_std = b * flip
        c_std = np.concatenate([c, np.zeros(k)])
    init = [-1] * m
    for j, r in enumerate(slack_rows):
        if sign[j] * flip[r] > 0:
            init[r] = n + j
    return A_std, b_std, c_std, flip, init, n


def _finish(lp, status, x_std, y_std, flip, n, iterations, exact):
    if status != "optimal":
        return LpResult(status, iterations=iterations)
    x = x_std[:n]
    if lp.lower is not None:
        lower = np.array([Fraction(v) for v in lp.lower], dtype=object) if exact else np.asarray(lp.lower, float)
        x = x + lower
    c = np.array([Fraction(v) for v in lp.c], dtype=object) if exact else np.asarray(lp.c, float)
    value = c @ x
    dual = y_std * flip
    if lp.maximize:
        dual = -dual
    return LpResult("optimal", value, x, dual, iterations)


# ----------------------------------------------------------- float engine

class _Columns:
    """Column access to ``[A_std | I]``; columns ``>= N`` are artificial unit vectors."""

    def __init__(self, A_std):
        self.A = sp.csc_matrix(A_std)
        self.At = sp.csr_matrix(self.A.T)
        self.m, self.N = self.A.shape

    def dense(self, j) -> np.ndarray:
        col = np.zeros(self.m)
        if j >= self.N:
            col[j - self.N] = 1.0
        else:
            s, e = self.A.indptr[j], self.A.indptr[j + 1]
            col[self.A.indices[s:e]] = self.A.data[s:e]
        return col


def _solve_float(lp, max_pivots, tol) -> LpResult:
    A_std, b, c, flip, init, n = _standard_form(lp, exact=False)
    cols = _Columns(A_std)
    m, N = cols.m, cols.N
    basis = np.array([j if j >= 0 else N + r for r, j in enumerate(init)])
    total = [0]

    def run(cost, cost_art, phase1):
        """Simplex iterations; artificial columns cost ``cost_art`` and never enter."""
        bland, stall = False, 0
        while True:
            if total[0] >= max_pivots:
                raise LpIterationLimit(f"simplex exceeded {max_pivots} pivots")
            B = np.column_stack([cols.dense(j) for j in basis])
            lu = sla.lu_factor(B, check_finite=False)
            xB = sla.lu_solve(lu, b, check_finite=False)
            cB = np.where(basis >= N, cost_art, cost[np.minimum(basis, N - 1)])
            y = sla.lu_solve(lu, cB, trans=1, check_finite=False)
            d = cost - cols.At @ y
            d[basis[basis < N]] = 0.0
            cand = np.nonzero(d < -tol * (1.0 + np.abs(y).max(initial=0.0)))[0]
            if len(cand) == 0:
                return "optimal", xB, y
            q = cand[0] if bland else cand[np.argmin(d[cand])]
            u = sla.lu_solve(lu, cols.dense(q), check_finite=False)
            piv_tol = 1e-9 * max(1.0, np.abs(u).max())
            ratios = np.full(m, np.inf)
            pos = u > piv_tol
            ratios[pos] = np.maximum(xB[pos], 0.0) / u[pos]
            if not phase1:
                # artificials left at zero must not move: any nonzero entry blocks
                ratios[(basis >= N) & (np.abs(u) > piv_tol)] = 0.0
            if not np.isfinite(ratios).any():
                return "unbounded", xB, y
            theta = ratios.min()
            ties = np.nonzero(ratios <= theta + 1e-12 * (1 + theta))[0]
            if bland:
                r = ties[np.argmin(basis[ties])]
            else:
                # prefer pushing artificials out, then the most stable pivot
                art = ties[basis[ties] >= N]
                pool = art if len(art) else ties
                r = pool[np.argmax(np.abs(u[pool]))]
            basis[r] = q
            total[0] += 1
            # cycling needs a run of degenerate pivots; Bland's rule breaks it
            if theta > 1e-12:
                stall, bland = 0, False
            else:
                stall += 1
                bland = bland or stall > 50

    need_phase1 = bool((basis >= N).any())
    if need_phase1:
        status, xB, _ = run(np.zeros(N), 1.0, phase1=True)
        infeas = np.where(basis >= N, xB, 0.0).sum()
        if infeas > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
            return LpResult("infeasible", iterations=total[0], info={"phase1": float(infeas)})
    status, xB, y = run(c, 0.0, phase1=False)
    if status != "optimal":
        return _finish(lp, status, None, None, flip, n, total[0], False)
    x = np.zeros(N)
    real = basis < N
    x[basis[real]] = np.maximum(xB[real], 0.0)
    return _finish(lp, "optimal", x, y, flip, n, total[0], False)


# ----------------------------------------------------------- exact engine

def _solve_exact(lp, max_pivots) -> LpResult:
    A_std, b, c, flip, init, n = _standard_form(lp, exact=True)
    m, N = A_std.shape
    zero, one = Fraction(0), Fraction(1)
    # tableau columns: structural 0..N-1, artificial N..N+m-1, rhs last
    T = []
    basis = []
    for r in range(m):
        row = list(A_std[r]) + [zero] * m + [b[r]]
        row[N + r] = one
        T.append(row)
        basis.append(init[r] if init[r] >= 0 else N + r)
    init_col = list(basis)
    width = N + m + 1

    cost2 = list(c) + [zero] * m
    cost1 = [zero] * N + [one if basis[r] >= N else zero for r in range(m)]

    def reduced(cost):
        z = list(cost) + [zero]
        for r in range(m):
            cb = cost[basis[r]]
            if cb:
                row = T[r]
                for j in range(width):
                    if row[j]:
                        z[j] -= cb * row[j]
        return z

    z1, z2 = reduced(cost1), reduced(cost2)
    pivots = 0

    def pivot(r, q):
        nonlocal pivots
        row = T[r]
        pv = row[q]
        nz = [j for j in range(width) if row[j]]
        for j in nz:
            row[j] = row[j] / pv
        for other in [*T, z1, z2]:
            if other is row:
                continue
            f = other[q]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
        basis[r] = q
        pivots += 1
        if pivots > max_pivots:
            raise LpIterationLimit(f"simplex exceeded {max_pivots} pivots")

    def iterate(z, phase):
        while True:
            q = None
            in_basis = set(basis)
            for j in range(N):
                if z[j] < 0 and j not in in_basis:
                    q = j
                    break
            if q is None:
                return "optimal"
            best, r_best = None, None
            for r in range(m):
                a = T[r][q]
                if phase == 2 and basis[r] >= N and a != 0:
                    ratio = zero
                elif a > 0:
                    ratio = T[r][-1] / a
                else:
                    continue
                if best is None or ratio < best or (ratio == best and basis[r] < basis[r_best]):
                    best, r_best = ratio, r
            if r_best is None:
                return "unbounded"
            pivot(r_best, q)

    if any(j >= N for j in basis):
        iterate(z1, 1)
        if -z1[-1] != 0:
            return LpResult("infeasible", iterations=pivots)
    status = iterate(z2, 2)
    if status != "optimal":
        return LpResult(status, iterations=pivots)
    x = np.array([zero] * N, dtype=object)
    for r in range(m):
        if basis[r] < N:
            x[basis[r]] = T[r][-1]
    # y_r = c_j - d_j for the column that formed the starting identity in row r
    y = np.array([cost2[j] - z2[j] for j in init_col], dtype=object)
    return _finish(lp, "optimal", x, y, np.array(flip, dtype=object), n, pivots, True)
