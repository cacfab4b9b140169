#!/usr/bin/env python3
"""Assemble the ambiguity-refinement order over a subset of object kinds.

One object kind refines another when every reward transformation that
preserves the first also preserves the second: knowing the finer object
pins the reward down at least as tightly. The order is assembled
empirically from pairwise verdicts, each backed either by exhausted
counterexample searches (equivalence or one-way refinement) or by two
replayable witnesses (incomparability).

The demo compares five kinds, prints the groups of interchangeable kinds
with the cover arrows between them, and emits Graphviz source. The
headline pair is Q* versus episode returns, which turn out incomparable:
redistributing reward across successor states keeps every expectation,
hence every value table, yet moves the return of individual realized
trajectories; shaping by a potential that vanishes on initial states
shifts each episode return by phi(start) = 0 yet moves Q* wherever the
potential is nonzero. The search surfaces one witness on each side.
"""

from ril import CheckConfig, build_refinement_order, order_to_dot, refinement_compare, render_order

KINDS = (
    "q_star",
    "boltzmann_policy",
    "return_fragments",
    "return_trajectories",
    "optimal_policy_set",
)


def main():
    cfg = CheckConfig(trials=12, budget=120, refine_trials=16)
    order = build_refinement_order(cfg, kinds=KINDS)
    print(render_order(order))

    verdict = refinement_compare("q_star", "return_trajectories", cfg)
    print(f"q_star vs return_trajectories: {verdict.relation}")
    if verdict.witness_preserves_a is not None:
        w = verdict.witness_preserves_a
        print(f"  kept q_star, changed returns:  {w['transform_class']}")
    if verdict.witness_preserves_b is not None:
        w = verdict.witness_preserves_b
        print(f"  kept returns, changed q_star:  {w['transform_class']}")

    print()
    print(order_to_dot(order))


if __name__ == "__main__":
    main()
