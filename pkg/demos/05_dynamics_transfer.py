#!/usr/bin/env python3
"""Exploit reward ambiguity to steer behaviour under changed dynamics.

Expected-reward-preserving redistribution leaves every policy value, and
therefore all rational behaviour, untouched as long as the transition
function stays put. The slack is per-successor: only the row averages
tau(s, a) . R(s, a, .) are pinned. This demo solves for a second reward
that keeps those averages under the training dynamics while hitting an
attacker-chosen average L = 5 for the row (s0, a) under deployment
dynamics tau'.

With tau(s0, a) = (0.5, 0.5), tau'(s0, a) = (0.3, 0.7) and original
row average 1, the unique solution is R2(s0, a, .) = (-9, 11). Under
tau' the planted bonus makes action a overtake the honestly better b:
an agent trained on R2 behaves identically in training and defects at
deployment.
"""

import numpy as np

from ril import make_mdp, optimal_action_sets, transfer_redistribution, with_reward
from ril.micro import transfer_mdp, transfer_target


def names(m, sets):
    return [tuple(m.actions[a] for a in row) for row in sets]


def main():
    m = transfer_mdp()
    target = transfer_target()
    r2 = transfer_redistribution(m, target)

    print(f"original row  R1(s0, a, .) = {m.reward[0, 0]}")
    print(f"recovered row R2(s0, a, .) = {np.round(r2[0, 0], 6)}")

    old_gap = np.max(np.abs(np.einsum("sat,sat->sa", m.tau, r2 - m.reward)))
    new_avg = target.tau_prime[0, 0] @ r2[0, 0]
    print(f"max row-average change under tau : {old_gap:.2e}")
    print(f"row average under tau'           : {new_avg:.6f} (required 5)")

    print(f"optimal actions under tau,  R1 vs R2: "
          f"{names(m, optimal_action_sets(m))} vs "
          f"{names(m, optimal_action_sets(with_reward(m, r2)))}")

    m_new = make_mdp(m.states, m.actions, target.tau_prime, m.mu0, m.reward, m.gamma)
    before = optimal_action_sets(m_new)
    after = optimal_action_sets(with_reward(m_new, r2))
    print(f"optimal actions under tau', R1 vs R2: {names(m_new, before)} vs {names(m_new, after)}")
    flips = [m.states[s] for s in range(m.n_states) if before[s] != after[s]]
    print(f"states whose optimal set flips at deployment: {flips}")


if __name__ == "__main__":
    main()
