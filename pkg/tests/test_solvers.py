"""Value solvers checked against hand-solved MDPs and against each other."""

import numpy as np
import pytest

from ril import (
    ConvergenceError,
    Policy,
    SolverParams,
    boltzmann_rational_policy,
    expected_reward,
    log_sum_exp_rows,
    maximally_supportive_optimal_policy,
    mce_policy,
    optimal_action_sets,
    optimal_q,
    policy_q,
    policy_q_iterative,
    policy_value,
    reward_scale,
    soft_q,
    softmax_rows,
    uniform_policy,
)
from ril.micro import chain_mdp, loop_mdp, two_action_loop_mdp
from ril.sampling import SamplerConfig, sample_mdp

MICRO_TOL = 1e-10
CROSS_TOL = 1e-8


def test_loop_optimal_values():
    m = loop_mdp()
    t = optimal_q(m)
    assert abs(t.v[0] - 10.0) < MICRO_TOL
    assert abs(t.q[0, 0] - 10.0) < MICRO_TOL
    assert abs(t.j - 10.0) < MICRO_TOL
    assert abs(t.adv[0, 0]) < MICRO_TOL


def test_two_action_loop_optimal_values():
    # V* solves V = max(1, 1.5) + 0.5 V, so V* = 3 and Q* = (2.5, 3).
    m = two_action_loop_mdp()
    t = optimal_q(m)
    assert abs(t.v[0] - 3.0) < MICRO_TOL
    assert np.allclose(t.q[0], [2.5, 3.0], atol=MICRO_TOL)
    assert np.allclose(t.adv[0], [-0.5, 0.0], atol=MICRO_TOL)


def test_two_action_loop_uniform_policy_values():
    # V = (1 + 1.5)/2 + 0.5 V gives V = 2.5; Q = (1, 1.5) + 1.25.
    m = two_action_loop_mdp()
    t = policy_q(m, uniform_policy(m))
    assert abs(t.v[0] - 2.5) < MICRO_TOL
    assert np.allclose(t.q[0], [2.25, 2.75], atol=MICRO_TOL)
    assert abs(policy_value(m, uniform_policy(m)) - 2.5) < MICRO_TOL


def test_chain_optimal_values():
    m = chain_mdp()
    t = optimal_q(m)
    assert np.allclose(t.v, [1.0, 0.0], atol=MICRO_TOL)
    assert abs(t.j - 1.0) < MICRO_TOL


def test_soft_value_single_action_equals_hard():
    # With one action the log-sum-exp backup reduces to the max backup.
    m = loop_mdp()
    assert abs(soft_q(m).v[0] - 10.0) < MICRO_TOL


def test_soft_q_satisfies_soft_bellman_equation():
    cfg = SamplerConfig()
    for seed in range(10):
        m = sample_mdp(cfg, seed=seed)
        params = SolverParams(beta=1.7)
        t = soft_q(m, params)
        v = log_sum_exp_rows(params.beta * t.q) / params.beta
        backup = expected_reward(m) + m.gamma * np.einsum("sap,p->sa", m.tau, v)
        assert np.max(np.abs(t.q - backup)) < 1e-9 * (1.0 + reward_scale(m))


def test_optimal_q_bellman_residual():
    cfg = SamplerConfig()
    for seed in range(10):
        m = sample_mdp(cfg, seed=seed)
        t = optimal_q(m)
        backup = expected_reward(m) + m.gamma * np.einsum("sap,p->sa", m.tau, t.q.max(axis=1))
        assert np.max(np.abs(t.q - backup)) < 1e-9 * (1.0 + reward_scale(m))


def test_policy_q_direct_vs_iterative():
    cfg = SamplerConfig()
    for seed in range(30):
        m = sample_mdp(cfg, seed=100 + seed)
        pi = uniform_policy(m)
        direct = policy_q(m, pi)
        iterative = policy_q_iterative(m, pi)
        scale = reward_scale(m)
        assert np.max(np.abs(direct.q - iterative.q)) < CROSS_TOL * (1.0 + scale)
        assert abs(direct.j - iterative.j) < CROSS_TOL * (1.0 + scale)


def test_convergence_error_on_tiny_budget():
    m = loop_mdp()
    with pytest.raises(ConvergenceError) as exc:
        optimal_q(m, SolverParams(max_iters=3))
    assert exc.value.iterations == 3
    assert exc.value.residual > 0
    with pytest.raises(ConvergenceError):
        policy_q_iterative(m, uniform_policy(m), SolverParams(max_iters=3))


def test_optimal_action_sets_on_micro():
    assert optimal_action_sets(two_action_loop_mdp()) == [(1,)]
    assert optimal_action_sets(loop_mdp()) == [(0,)]


def test_supportive_policy_uniform_over_ties():
    import ril

    # two identical actions tie, so the supportive policy must split evenly
    m = ril.make_mdp(
        states=["s"], actions=["a", "b"],
        tau=[[[1.0], [1.0]]], mu0=[1.0],
        reward=[[[1.0], [1.0]]], gamma=0.5,
    )
    assert optimal_action_sets(m) == [(0, 1)]
    pi = maximally_supportive_optimal_policy(m)
    assert np.allclose(pi.probs, [[0.5, 0.5]], atol=1e-12)


def test_boltzmann_policy_frozen_probability():
    # advantages (-0.5, 0) with beta 1: pi(hi) = 1 / (1 + e^{-0.5})
    m = two_action_loop_mdp()
    pi = boltzmann_rational_policy(m)
    want_hi = 1.0 / (1.0 + np.exp(-0.5))
    assert abs(pi.probs[0, 1] - want_hi) < 1e-9


def test_mce_policy_rows_are_distributions():
    cfg = SamplerConfig()
    for seed in range(5):
        m = sample_mdp(cfg, seed=seed)
        pi = mce_policy(m, SolverParams(beta=2.0))
        assert np.allclose(pi.probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(pi.probs > 0)


def test_softmax_shift_invariance():
    x = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    assert np.allclose(softmax_rows(x), softmax_rows(x + 100.0), atol=1e-12)
    assert np.allclose(softmax_rows(x).sum(axis=1), 1.0, atol=1e-12)


def test_policy_rejects_bad_rows():
    from ril import ContractError

    with pytest.raises(ContractError):
        Policy(np.array([[0.5, 0.6]]))
    with pytest.raises(ContractError):
        Policy(np.array([[-0.1, 1.1]]))


def test_solver_params_validation():
    from ril import ContractError

    with pytest.raises(ContractError):
        SolverParams(beta=0.0)
    with pytest.raises(ContractError):
        SolverParams(epsilon=-1.0)
