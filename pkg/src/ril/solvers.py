"""Exact and soft solvers for tabular MDPs.

Two independent routes exist for policy evaluation: a direct linear solve of
the Bellman system over |S||A| unknowns, and plain iterative evaluation.  The
direct route is the production path and asserts its own Bellman residual; the
iterative route exists so tests can cross-check the two against each other.

Value iteration (hard and soft) stops when the sup-norm update drops below
epsilon * (1 - gamma) / (2 * gamma), which bounds the value error by epsilon.
The soft backup uses a max-subtracted log-sum-exp so large beta stays finite;
beta up to 1e3 is supported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceError
from .mdp import Mdp

# Direct linear solves must satisfy their Bellman equation to this relative scale.
BELLMAN_RESIDUAL_TOL = 1e-10
# Actions within this of the best advantage count as optimal (relative scale).
DEFAULT_TIE_RTOL = 1e-7


@dataclass(frozen=True)
class SolverParams:
    beta: float = 1.0          # rationality / inverse temperature
    epsilon: float = 1e-11     # value-error target for iterative solvers
    max_iters: int = 100_000

    def __post_init__(self):
        if self.beta <= 0:
            raise ContractError(f"beta must be positive, got {self.beta}")
        if self.epsilon <= 0:
            raise ContractError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class ValueTables:
    """Q, state values, advantages, and the policy/optimal objective J."""

    q: np.ndarray    # (S, A)
    v: np.ndarray    # (S,)
    adv: np.ndarray  # (S, A)
    j: float


@dataclass(frozen=True)
class Policy:
    """Stationary stochastic policy; probs[s, a] with rows summing to one."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise ContractError("policy table must be 2-dimensional")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise ContractError("policy rows must be distributions")
        object.__setattr__(self, "probs", p)


def uniform_policy(m: Mdp) -> Policy:
    return Policy(np.full((m.n_states, m.n_actions), 1.0 / m.n_actions))


def reward_scale(m: Mdp) -> float:
    """1 + max|R|; relative tolerances throughout the package use this."""
    return 1.0 + float(np.max(np.abs(m.reward)))


def expected_reward(m: Mdp) -> np.ndarray:
    """r[s, a] = E_tau[ R(s, a, S') ]."""
    return np.einsum("sap,sap->sa", m.tau, m.reward)


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under large magnitudes via max subtraction."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_sum_exp_rows(x: np.ndarray) -> np.ndarray:
    m_ = x.max(axis=-1)
    return m_ + np.log(np.exp(x - m_[..., None]).sum(axis=-1))


def _tables(m: Mdp, q: np.ndarray, v: np.ndarray) -> ValueTables:
    adv = q - v[:, None]
    j = float(m.mu0 @ v)
    return ValueTables(q=q, v=v, adv=adv, j=j)


def policy_q(m: Mdp, policy: Policy) -> ValueTables:
    """Evaluate a policy by solving (I - gamma * M) q = r directly.

    M[(s,a),(s',a')] = tau[s,a,s'] * pi[s',a'].  The solution's Bellman
    residual is verified; failure raises ConvergenceError.
    """
    nS, nA = m.n_states, m.n_actions
    r = expected_reward(m).reshape(nS * nA)
    M = (m.tau[:, :, :, None] * policy.probs[None, None, :, :]).reshape(nS * nA, nS * nA)
    q_flat = np.linalg.solve(np.eye(nS * nA) - m.gamma * M, r)
    residual = float(np.max(np.abs(q_flat - (r + m.gamma * M @ q_flat))))
    if residual >= BELLMAN_RESIDUAL_TOL * reward_scale(m):
        raise ConvergenceError(
            f"policy evaluation residual {residual:.3e} exceeds tolerance", residual, 1
        )
    q = q_flat.reshape(nS, nA)
    v = (policy.probs * q).sum(axis=1)
    return _tables(m, q, v)


def policy_q_iterative(m: Mdp, policy: Policy, params: SolverParams = SolverParams()) -> ValueTables:
    """Iterative policy evaluation; independent cross-check for policy_q."""
    r = expected_reward(m)
    q = np.zeros_like(r)
    threshold = params.epsilon * (1.0 - m.gamma) / (2.0 * m.gamma)
    for i in range(params.max_iters):
        v = (policy.probs * q).sum(axis=1)
        q_next = r + m.gamma * np.einsum("sap,p->sa", m.tau, v)
        delta = float(np.max(np.abs(q_next - q)))
        q = q_next
        if delta < threshold:
            v = (policy.probs * q).sum(axis=1)
            return _tables(m, q, v)
    raise ConvergenceError(
        f"policy evaluation did not converge in {params.max_iters} sweeps", delta, params.max_iters
    )


def _value_iteration(m: Mdp, params: SolverParams, backup) -> ValueTables:
    r = expected_reward(m)
    q = np.zeros_like(r)
    threshold = params.epsilon * (1.0 - m.gamma) / (2.0 * m.gamma)
    delta = np.inf
    for _ in range(params.max_iters):
        v = backup(q)
        q_next = r + m.gamma * np.einsum("sap,p->sa", m.tau, v)
        delta = float(np.max(np.abs(q_next - q)))
        q = q_next
        if delta < threshold:
            return _tables(m, q, backup(q))
    raise ConvergenceError(
        f"value iteration did not converge in {params.max_iters} sweeps", delta, params.max_iters
    )


def optimal_q(m: Mdp, params: SolverParams = SolverParams()) -> ValueTables:
    """Optimal action values by value iteration with the max backup."""
    return _value_iteration(m, params, lambda q: q.max(axis=1))


def soft_q(m: Mdp, params: SolverParams = SolverParams()) -> ValueTables:
    """Maximum-causal-entropy action values: the max is softened to (1/beta) LSE."""
    beta = params.beta
    return _value_iteration(m, params, lambda q: log_sum_exp_rows(beta * q) / beta)


def boltzmann_rational_policy(m: Mdp, params: SolverParams = SolverParams()) -> Policy:
    """pi(a|s) proportional to exp(beta * optimal advantage)."""
    tables = optimal_q(m, params)
    return Policy(softmax_rows(params.beta * tables.adv))


def mce_policy(m: Mdp, params: SolverParams = SolverParams()) -> Policy:
    """pi(a|s) proportional to exp(beta * soft Q)."""
    tables = soft_q(m, params)
    return Policy(softmax_rows(params.beta * tables.q))


def tie_tolerance(m: Mdp, tol: float | None = None) -> float:
    return DEFAULT_TIE_RTOL * reward_scale(m) if tol is None else tol


def optimal_action_sets(
    m: Mdp, params: SolverParams = SolverParams(), tol: float | None = None
) -> list[tuple[int, ...]]:
    """Per state, the actions whose advantage is within tie tolerance of zero."""
    tables = optimal_q(m, params)
    tt = tie_tolerance(m, tol)
    return [tuple(int(a) for a in np.flatnonzero(tables.adv[s] >= -tt)) for s in range(m.n_states)]


def maximally_supportive_optimal_policy(
    m: Mdp, params: SolverParams = SolverParams(), tol: float | None = None
) -> Policy:
    """Uniform over every optimal action in each state."""
    sets = optimal_action_sets(m, params, tol)
    probs = np.zeros((m.n_states, m.n_actions))
    for s, acts in enumerate(sets):
        probs[s, list(acts)] = 1.0 / len(acts)
    return Policy(probs)


def policy_value(m: Mdp, policy: Policy) -> float:
    """J(pi) = E_mu0[ V^pi(S0) ]."""
    return policy_q(m, policy).j
