from fractions import Fraction

import numpy as np
import pytest
import scipy.optimize as so
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from contextuality.optim import LinearProgram, LpIterationLimit, solve_lp
from contextuality.optim.lp import EQ, GE, LE


def test_textbook_max():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    lp = LinearProgram([3, 5], np.array([[1, 0], [0, 2], [3, 2]]), [4, 12, 18], LE, maximize=True)
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.value == pytest.approx(36)
    assert np.allclose(res.x, [2, 6])
    assert np.allclose(res.dual, [0, 1.5, 1])


def test_exact_engine_returns_fractions():
    A = np.array([[Fraction(1), Fraction(0)], [Fraction(0), Fraction(2)], [Fraction(3), Fraction(2)]],
                 dtype=object)
    lp = LinearProgram([Fraction(3), Fraction(5)], A, [Fraction(4), Fraction(12), Fraction(18)], LE,
                       maximize=True)
    res = solve_lp(lp)
    assert res.value == 36
    assert all(isinstance(v, Fraction) for v in res.x)
    assert list(res.dual) == [0, Fraction(3, 2), 1]


def test_infeasible_and_unbounded():
    inf = LinearProgram([1, 1], np.array([[1, 1], [1, 1]]), [1, 2], EQ)
    assert solve_lp(inf).status == "infeasible"
    assert solve_lp(inf, exact=True).status == "infeasible"
    unb = LinearProgram([-1, 0], np.array([[1, -1]]), [0], LE)
    assert solve_lp(unb).status == "unbounded"
    assert solve_lp(unb, exact=True).status == "unbounded"


def test_lower_bounds_shift():
    lp = LinearProgram([1, 2], np.array([[1, 1]]), [5], GE, lower=[1, 2])
    res = solve_lp(lp)
    assert res.value == pytest.approx(7)
    assert np.allclose(res.x, [3, 2])
    assert res.value == pytest.approx(res.dual @ (np.array([5]) - np.array([[1, 1]]) @ [1, 2])
                                      + np.dot([1, 2], [1, 2]))


def test_redundant_equalities():
    A = np.array([[1, 1, 0], [0, 0, 1], [1, 1, 1]])
    res = solve_lp(LinearProgram([1, 2, 3], A, [1, 1, 2], EQ))
    assert res.status == "optimal"
    assert res.value == pytest.approx(4)


def test_sparse_input_matches_dense():
    rng = np.random.default_rng(0)
    A = rng.integers(0, 3, size=(6, 10)).astype(float)
    b = A @ rng.uniform(0, 1, 10)
    c = rng.uniform(0, 1, 10)
    dense = solve_lp(LinearProgram(c, A, b, EQ))
    sparse = solve_lp(LinearProgram(c, sp.csr_matrix(A), b, EQ))
    assert dense.value == pytest.approx(sparse.value, abs=1e-9)


def test_pivot_limit():
    rng = np.random.default_rng(1)
    A = rng.uniform(size=(8, 12))
    with pytest.raises(LpIterationLimit):
        solve_lp(LinearProgram(-np.ones(12), A, np.ones(8), LE), max_pivots=1)


def test_shape_validation():
    with pytest.raises(ValueError):
        LinearProgram([1, 2, 3], np.eye(2), [1, 1])
    with pytest.raises(ValueError):
        LinearProgram([1, 2], np.eye(2), [1, 1], senses="<>")


def test_beale_cycling_example():
    # classic instance on which textbook Dantzig pricing cycles
    c = [-0.75, 150, -0.02, 6]
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    for exact in (False, True):
        res = solve_lp(LinearProgram(c, A, [0, 0, 1], LE), exact=exact)
        assert res.status == "optimal"
        assert float(res.value) == pytest.approx(-0.05)


@st.composite
def random_lps(draw):
    m = draw(st.integers(1, 5))
    n = draw(st.integers(1, 6))
    ints = st.integers(-4, 4)
    A = np.array(draw(st.lists(st.lists(ints, min_size=n, max_size=n), min_size=m, max_size=m)))
    b = np.array(draw(st.lists(st.integers(-3, 6), min_size=m, max_size=m)))
    c = np.array(draw(st.lists(ints, min_size=n, max_size=n)))
    senses = draw(st.lists(st.sampled_from([LE, EQ, GE]), min_size=m, max_size=m))
    return c, A, b, senses


def _highs(c, A, b, senses):
    ub = [(A[r], b[r]) if s == LE else (-A[r], -b[r]) for r, s in enumerate(senses) if s != EQ]
    eq = [(A[r], b[r]) for r, s in enumerate(senses) if s == EQ]
    kw = {}
    if ub:
        kw.update(A_ub=np.array([u for u, _ in ub]), b_ub=np.array([v for _, v in ub]))
    if eq:
        kw.update(A_eq=np.array([u for u, _ in eq]), b_eq=np.array([v for _, v in eq]))
    return so.linprog(c, bounds=(0, None), method="highs", **kw)


@settings(max_examples=150, deadline=None)
@given(random_lps())
def test_matches_highs(data):
    c, A, b, senses = data
    ref = _highs(c, A, b, senses)
    res = solve_lp(LinearProgram(c, A, b, senses))
    expected = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    assert res.status == expected
    if expected == "optimal":
        assert res.value == pytest.approx(ref.fun, abs=1e-7)


@settings(max_examples=100, deadline=None)
@given(random_lps())
def test_exact_and_float_agree(data):
    c, A, b, senses = data
    F = np.vectorize(Fraction, otypes=[object])
    exact = solve_lp(LinearProgram(list(F(c)), F(A), list(F(b)), senses))
    flt = solve_lp(LinearProgram(c, A, b, senses))
    assert exact.status == flt.status
    if exact.status == "optimal":
        assert float(exact.value) == pytest.approx(flt.value, abs=1e-7)


@settings(max_examples=100, deadline=None)
@given(random_lps())
def test_strong_duality_certificate(data):
    """Optimal duals are feasible for the dual program and close the gap."""
    c, A, b, senses = data
    res = solve_lp(LinearProgram(c, A, b, senses))
    if res.status != "optimal":
        return
    y = res.dual
    assert y @ b == pytest.approx(res.value, abs=1e-7)
    assert np.all(c - A.T @ y >= -1e-7)
    for r, s in enumerate(senses):
        if s == LE:
            assert y[r] <= 1e-7
        elif s == GE:
            assert y[r] >= -1e-7
    slack = A @ res.x - b
    for r, s in enumerate(senses):
        assert {LE: slack[r] <= 1e-7, EQ: abs(slack[r]) <= 1e-7, GE: slack[r] >= -1e-7}[s]
    assert np.all(res.x >= -1e-9)
