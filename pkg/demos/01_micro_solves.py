#!/usr/bin/env python3
"""Solve the bundled micro MDPs and print every reward-derived table.

The micro MDPs are small enough to check by hand:

  - loop_mdp: one state, one action, reward 1, gamma 0.9, so the optimal
    value is 1 / (1 - 0.9) = 10.
  - two_action_loop_mdp: one state, two actions paying 1 and 1.5 at
    gamma 0.5, so Q* = (2.5, 3.0) and V* = 3.
  - chain_mdp: two states where s1 is terminal; the only reward is the
    step into s1, so V* = (1, 0).

Run it to see the linear-solve policy evaluation, optimal and soft value
tables, and the rational policies they induce.
"""

import numpy as np

from ril import (
    SolverParams,
    boltzmann_rational_policy,
    maximally_supportive_optimal_policy,
    optimal_action_sets,
    optimal_q,
    policy_q,
    soft_q,
    uniform_policy,
)
from ril.micro import chain_mdp, loop_mdp, two_action_loop_mdp


def describe(m, name):
    print(f"== {name} ==")
    print(f"states {m.states}, actions {m.actions}, gamma {m.gamma}")

    uniform = policy_q(m, uniform_policy(m))
    star = optimal_q(m)
    soft = soft_q(m, SolverParams(beta=1.0))

    with np.printoptions(precision=4, suppress=True):
        print("Q under the uniform policy:")
        print(uniform.q)
        print(f"optimal Q (start value J* = {star.j:.4f}):")
        print(star.q)
        print("soft Q at beta = 1:")
        print(soft.q)

    sets = optimal_action_sets(m)
    print("optimal action sets:", [tuple(m.actions[a] for a in row) for row in sets])
    print("maximally supportive optimal policy:")
    print(maximally_supportive_optimal_policy(m).probs)
    print("Boltzmann-rational policy at beta = 1:")
    print(np.round(boltzmann_rational_policy(m, SolverParams(beta=1.0)).probs, 4))
    print()


if __name__ == "__main__":
    describe(loop_mdp(), "single loop")
    describe(two_action_loop_mdp(), "two-action loop")
    describe(chain_mdp(), "two-state chain")
