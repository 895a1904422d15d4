import itertools
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from contextuality.cbd import (CbdFormatError, CbdSystem, ShapeError, bundled_kirchmair, cntx,
                               coupling_lp, delta0, delta_min, ingest_expectations,
                               joints_from_empirical, maxent_joint, s_odd, shape,
                               synthetic_joints, system_from_empirical)
from contextuality.hierarchy import contextual_fraction
from contextuality.quantum import model_from_quantum, preset_model

from test_hierarchy import ns_models


def brute_s_odd(a):
    return max(sum(s * x for s, x in zip(signs, a))
               for signs in itertools.product((1, -1), repeat=len(a)) if np.prod(signs) == -1)


def test_s_odd_examples():
    assert s_odd([1, 1, 1]) == 1
    assert s_odd([-1, 1, 1]) == 3
    assert s_odd([0.5]) == -0.5
    with pytest.raises(ValueError):
        s_odd([])


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=7))
def test_s_odd_matches_brute_force(a):
    assert s_odd(a) == pytest.approx(brute_s_odd(a), abs=1e-12)


def cycle_system(joints):
    """Rank-2 cycle R1 R2 | R2 R3 | ... | Rn R1 from per-context joints."""
    n = len(joints)
    X = np.array(list(itertools.product((1, -1), repeat=2)))
    contexts, exp, corr = {}, {}, {}
    for k, p in enumerate(joints, start=1):
        qs = (f"R{k}", f"R{k % n + 1}")
        contexts[k] = qs
        exp[(qs[0], k)] = float(X[:, 0] @ p)
        exp[(qs[1], k)] = float(X[:, 1] @ p)
        corr[k] = float(X.prod(axis=1) @ p)
    return CbdSystem(contexts, exp, corr)


@st.composite
def cyclic_systems(draw):
    n = draw(st.integers(3, 5))
    joints = []
    for _ in range(n):
        w = np.array(draw(st.lists(st.integers(0, 6), min_size=4, max_size=4).filter(any)), float)
        joints.append(w / w.sum())
    return cycle_system(joints), dict(enumerate(joints, start=1))


@settings(max_examples=60, deadline=None)
@given(cyclic_systems())
def test_closed_form_equals_coupling_lp_on_cycles(data):
    system, joints = data
    assert shape(system) == "cyclic"
    res = coupling_lp(system, joints)
    assert res.value == pytest.approx(delta_min(system), abs=1e-8)
    assert sum(res.coupling.values()) == pytest.approx(1)
    assert delta_min(system) >= delta0(system) - 1e-12


def test_kcbs_quantum_lp_matches_closed_form():
    m = model_from_quantum(preset_model("kcbs"))
    system = system_from_empirical(m)
    assert shape(system) == "cyclic"
    res = coupling_lp(system, joints_from_empirical(m))
    assert res.value == pytest.approx(delta_min(system), abs=1e-6)
    value, contextual = cntx(system)
    assert contextual and value > 0.1


def test_pm_quantum_lp_matches_closed_form():
    m = model_from_quantum(preset_model("pm"))
    system = system_from_empirical(m, {"+1": 1, "-1": -1})
    assert shape(system) == "pm"
    assert delta0(system) == pytest.approx(0, abs=1e-12)
    assert s_odd(list(system.correlators.values())) == pytest.approx(6)
    res = coupling_lp(system, joints_from_empirical(m, {"+1": 1, "-1": -1}))
    assert res.value == pytest.approx(delta_min(system), abs=1e-6)
    assert delta_min(system) == pytest.approx(1)


def test_kirchmair_synthetic_joints_match_moments():
    system = bundled_kirchmair()
    joints = synthetic_joints(system)
    X = np.array(list(itertools.product((1, -1), repeat=3)))
    for c, qs in system.contexts.items():
        p = joints[c]
        assert p.min() > 0 and p.sum() == pytest.approx(1)
        for k, q in enumerate(qs):
            assert X[:, k] @ p == pytest.approx(system.expectations[(q, c)], abs=1e-9)
        assert X.prod(axis=1) @ p == pytest.approx(system.correlators[c], abs=1e-9)


def test_maxent_rank_two_and_errors():
    p = maxent_joint([0.2, -0.4], 0.1)
    assert p.sum() == pytest.approx(1)
    with pytest.raises(ValueError):
        maxent_joint([1, 1], -1)
    with pytest.raises(ValueError):
        maxent_joint([1.0, 0.0, 0.0], 0.0)


def test_maxent_uniform_when_moments_vanish():
    assert np.allclose(maxent_joint([0, 0, 0], 0), np.full(8, 1 / 8), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(ns_models())
def test_cbd_agrees_with_hierarchy_on_no_signalling_models(m):
    """Consistently connected cycles: CbD-contextual iff the model is contextual."""
    cf = float(contextual_fraction(m).cf)
    assume(cf == 0 or cf > 1e-6)
    system = system_from_empirical(m)
    assert delta0(system) == pytest.approx(0, abs=1e-12)
    assert cntx(system)[1] == (cf > 0)


def test_chsh_fixture_contextual(fixture_model):
    system = system_from_empirical(fixture_model("chsh.json"))
    value, contextual = cntx(system)
    assert contextual
    assert value == pytest.approx(0.25)


# ---------------------------------------------------------------- shapes and errors

def test_shape_errors():
    system = CbdSystem({1: ("a", "b"), 2: ("b", "c")},
                       {("a", 1): 0, ("b", 1): 0, ("b", 2): 0, ("c", 2): 0}, {1: 0, 2: 0})
    assert shape(system) is None
    with pytest.raises(ShapeError):
        delta_min(system)
    with pytest.raises(ShapeError):
        delta0(CbdSystem({1: ("a",), 2: ("a",), 3: ("a",)},
                         {("a", 1): 0, ("a", 2): 0, ("a", 3): 0}, {}))


def test_system_validation():
    with pytest.raises(CbdFormatError):
        CbdSystem({1: ("a",)}, {("a", 1): 1.5}, {})
    with pytest.raises(CbdFormatError):
        CbdSystem({1: ("a",)}, {}, {})
    with pytest.raises(CbdFormatError):
        CbdSystem({1: ("a",)}, {("a", 1): 0}, {2: 0})


def test_coupling_guard_and_joint_check():
    system, joints = cycle_system([np.full(4, 0.25)] * 4), {k: np.full(4, 0.25) for k in range(1, 5)}
    with pytest.raises(ValueError):
        coupling_lp(system, joints, guard=10)
    bad = dict(joints)
    bad[1] = np.array([1.0, 0, 0, 0])
    with pytest.raises(CbdFormatError):
        coupling_lp(system, bad)


KIRCHMAIR = bundled_kirchmair()


def _csv(system, slip=None, drop_corr=None, blank_corr=None):
    lines = ["property,context,expectation"]
    for (q, c), v in system.expectations.items():
        cc = slip[1] if slip and (q, c) == slip[0] else c
        lines.append(f"{q},{cc},{v}")
    lines.append("context,correlator")
    for c, v in system.correlators.items():
        if c == drop_corr:
            continue
        lines.append(f"{c},{'' if c == blank_corr else v}")
    return "\n".join(lines) + "\n"


def test_kirchmair_bundled_values():
    assert delta0(KIRCHMAIR) == pytest.approx(0.166, abs=1e-12)
    assert delta_min(KIRCHMAIR) == pytest.approx(0.7315, abs=1e-12)
    assert KIRCHMAIR.notes == ()


def test_slip_is_reassigned_with_note():
    text = _csv(KIRCHMAIR, slip=(("A13", "6"), "5"))
    with pytest.warns(UserWarning, match="A13"):
        system = ingest_expectations(text)
    assert system.expectations == KIRCHMAIR.expectations
    assert len(system.notes) == 1 and "context 5" in system.notes[0]


def test_correlators_required():
    with pytest.raises(CbdFormatError, match="correlators required"):
        ingest_expectations(_csv(KIRCHMAIR, drop_corr="3"))
    with pytest.raises(CbdFormatError, match="correlators required"):
        ingest_expectations(_csv(KIRCHMAIR, blank_corr="3"))
    only_exp = _csv(KIRCHMAIR).split("context,correlator")[0]
    with pytest.raises(CbdFormatError, match="correlators required"):
        ingest_expectations(only_exp)


def test_separate_correlator_file(tmp_path):
    exp_text, corr_text = _csv(KIRCHMAIR).split("context,correlator\n")
    (tmp_path / "e.csv").write_text(exp_text)
    (tmp_path / "c.csv").write_text("context,correlator\n" + corr_text)
    system = ingest_expectations(tmp_path / "e.csv", tmp_path / "c.csv")
    assert system.correlators == KIRCHMAIR.correlators


@pytest.mark.parametrize("text, match", [
    ("A,1,0.5\n", "before a header"),
    ("property,context,expectation\nA,1\ncontext,correlator\n1,0\n", "expected property"),
    ("property,context,expectation\nA,1,x\ncontext,correlator\n1,0\n", "cannot read"),
    ("property,context,expectation\nA,1,2\ncontext,correlator\n1,0\n", "outside"),
    ("property,context,expectation\nA,1,0\nA,1,0\ncontext,correlator\n1,0\n", "duplicate"),
    ("", "no expectation rows"),
])
def test_ingest_errors(text, match):
    with pytest.raises(CbdFormatError, match=match):
        ingest_expectations(text)
