"""Fragments, lasso trajectories, and return computations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ril import (
    ContractError,
    EnumerationCapError,
    Fragment,
    LassoTrajectory,
    enumerate_fragments,
    enumerate_lassos,
    fragment_return,
    fragment_returns,
    is_initial_fragment,
    is_possible_fragment,
    lasso_return,
    lasso_returns,
    truncation_bound,
    unroll_lasso,
)
from ril.micro import chain_mdp, loop_mdp, two_action_loop_mdp
from ril.sampling import SamplerConfig, sample_mdp

RETURN_TOL = 1e-12


def test_fragment_accessors():
    f = Fragment(0, ((0, 1), (0, 0)))
    assert f.length == 2
    assert f.end == 0
    assert f.state_sequence() == (0, 1, 0)
    assert f.transitions() == ((0, 0, 1), (1, 0, 0))
    assert Fragment(3).end == 3


def test_fragment_concat_checks_endpoints():
    a = Fragment(0, ((0, 1),))
    b = Fragment(1, ((0, 0),))
    assert a.concat(b) == Fragment(0, ((0, 1), (0, 0)))
    # b ends at state 0 but b itself starts at state 1
    with pytest.raises(ContractError):
        b.concat(b)


def test_lasso_structure_validation():
    with pytest.raises(ContractError):
        LassoTrajectory(Fragment(0), Fragment(0))  # empty cycle
    with pytest.raises(ContractError):
        LassoTrajectory(Fragment(0), Fragment(1, ((0, 1),)))  # detached cycle
    with pytest.raises(ContractError):
        LassoTrajectory(Fragment(0), Fragment(0, ((0, 1),)))  # open cycle


def test_loop_fragment_returns_frozen():
    # gamma 0.9, reward 1: lengths 0, 1, 2 give 0, 1, 1 + 0.9.
    m = loop_mdp()
    frags = enumerate_fragments(m, max_len=2)
    got = fragment_returns(m, frags)
    assert np.allclose(got, [0.0, 1.0, 1.9], atol=RETURN_TOL)


def test_loop_lasso_return_frozen():
    m = loop_mdp()
    lassos = enumerate_lassos(m, prefix_cap=0, cycle_cap=1)
    assert len(lassos) == 1
    assert abs(lasso_return(m, lassos[0]) - 10.0) < RETURN_TOL


def test_enumeration_is_deterministic_and_sorted():
    m = two_action_loop_mdp()
    a = enumerate_fragments(m, max_len=3)
    b = enumerate_fragments(m, max_len=3)
    assert a == b
    keys = [f.sort_key() for f in a]
    assert keys == sorted(keys)
    la = enumerate_lassos(m, prefix_cap=2, cycle_cap=2)
    lb = enumerate_lassos(m, prefix_cap=2, cycle_cap=2)
    assert la == lb


def test_enumerate_fragments_only_possible():
    m = chain_mdp()
    frags = enumerate_fragments(m, max_len=2)
    assert all(is_possible_fragment(m, f) for f in frags)
    # s0 has a single possible move, into s1; no fragment uses the zero row.
    assert Fragment(0, ((0, 0),)) not in frags


def test_initial_fragment_uses_mu0():
    m = chain_mdp()
    assert is_initial_fragment(m, Fragment(0))
    assert not is_initial_fragment(m, Fragment(1))


def test_enumeration_cap_raises():
    cfg = SamplerConfig(n_states=(4, 4), n_actions=(3, 3), sparsity=0.0)
    m = sample_mdp(cfg, seed=7)
    with pytest.raises(EnumerationCapError):
        enumerate_fragments(m, max_len=6, cap=50)
    with pytest.raises(EnumerationCapError):
        enumerate_lassos(m, prefix_cap=4, cycle_cap=4, cap=50)


def test_lasso_closed_form_matches_truncated_unroll():
    cfg = SamplerConfig(n_states=(2, 3), n_actions=(2, 2), sparsity=0.4)
    for seed in range(20):
        m = sample_mdp(cfg, seed=seed)
        lassos = enumerate_lassos(m, prefix_cap=2, cycle_cap=2)
        for lasso in lassos[:10]:
            n = 60
            approx = fragment_return(m, unroll_lasso(m, lasso, n))
            exact = lasso_return(m, lasso)
            assert abs(exact - approx) <= truncation_bound(m, n) + 1e-12


def test_lasso_returns_vectorized():
    m = loop_mdp()
    lassos = enumerate_lassos(m, prefix_cap=1, cycle_cap=1)
    got = lasso_returns(m, lassos)
    want = np.array([lasso_return(m, l) for l in lassos])
    assert np.array_equal(got, want)


@st.composite
def loop_fragments(draw):
    # paths in the two-action loop: any action sequence stays at state 0
    acts = draw(st.lists(st.integers(0, 1), min_size=0, max_size=6))
    return Fragment(0, tuple((a, 0) for a in acts))


@settings(max_examples=60, deadline=None)
@given(loop_fragments(), loop_fragments())
def test_return_concatenation_rule(f1, f2):
    # G(f1.f2) = G(f1) + gamma^len(f1) G(f2)
    m = two_action_loop_mdp()
    combined = fragment_return(m, f1.concat(f2))
    split = fragment_return(m, f1) + m.gamma ** f1.length * fragment_return(m, f2)
    assert abs(combined - split) < RETURN_TOL


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(1, 4))
def test_unroll_length(prefix_len, n_extra):
    m = loop_mdp()
    prefix = Fragment(0, ((0, 0),) * prefix_len)
    lasso = LassoTrajectory(prefix, Fragment(0, ((0, 0),)))
    n = prefix_len + n_extra
    assert unroll_lasso(m, lasso, n).length == n
