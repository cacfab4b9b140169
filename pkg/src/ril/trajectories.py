"""State-action fragments and lasso trajectories, with their discounted returns.

A fragment is a finite path: a start state plus a sequence of (action,
next_state) steps.  An infinite trajectory is represented exactly as a lasso:
a finite prefix followed by a cycle repeated forever, whose return is a
geometric series and therefore computable in closed form.

Enumeration order is deterministic: fragments sort by (length, start state,
step sequence) with steps compared as (action, next_state) index pairs; lassos
sort by (prefix, cycle) in that fragment order.  Enumeration raises rather
than silently truncating when it would exceed the configured cap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, EnumerationCapError
from .mdp import Mdp, initial_states, possible_mask

# Hard ceiling on enumerated items; exceeding it is an error, not a truncation.
DEFAULT_ENUMERATION_CAP = 50_000


@dataclass(frozen=True)
class Fragment:
    """A finite path: start state and (action, next_state) steps."""

    start: int
    steps: tuple[tuple[int, int], ...] = ()

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> int:
        return self.steps[-1][1] if self.steps else self.start

    def state_sequence(self) -> tuple[int, ...]:
        return (self.start,) + tuple(s2 for _, s2 in self.steps)

    def transitions(self) -> tuple[tuple[int, int, int], ...]:
        out = []
        s = self.start
        for a, s2 in self.steps:
            out.append((s, a, s2))
            s = s2
        return tuple(out)

    def concat(self, other: "Fragment") -> "Fragment":
        if other.start != self.end:
            raise ContractError(
                f"cannot concatenate: fragment ends at {self.end}, next starts at {other.start}"
            )
        return Fragment(self.start, self.steps + other.steps)

    def sort_key(self):
        return (self.length, self.start, self.steps)


@dataclass(frozen=True)
class LassoTrajectory:
    """An infinite trajectory: finite prefix, then a cycle repeated forever."""

    prefix: Fragment
    cycle: Fragment

    def __post_init__(self):
        if self.cycle.length < 1:
            raise ContractError("lasso cycle must contain at least one step")
        if self.cycle.start != self.prefix.end:
            raise ContractError("lasso cycle must start where the prefix ends")
        if self.cycle.end != self.cycle.start:
            raise ContractError("lasso cycle must return to its start state")

    @property
    def start(self) -> int:
        return self.prefix.start

    def sort_key(self):
        return (self.prefix.sort_key(), self.cycle.sort_key())


def is_possible_fragment(m: Mdp, frag: Fragment) -> bool:
    poss = possible_mask(m)
    return all(poss[s, a, s2] for s, a, s2 in frag.transitions())


def is_initial_fragment(m: Mdp, frag: Fragment) -> bool:
    return m.mu0[frag.start] > 0.0


def fragment_return(m: Mdp, frag: Fragment) -> float:
    """Discounted return sum_t gamma^t * reward along the fragment."""
    total = 0.0
    g = 1.0
    for s, a, s2 in frag.transitions():
        total += g * m.reward[s, a, s2]
        g *= m.gamma
    return total


def lasso_return(m: Mdp, lasso: LassoTrajectory) -> float:
    """Exact return of the infinite trajectory via the geometric series.

    G = G(prefix) + gamma^len(prefix) * G(cycle) / (1 - gamma^len(cycle)).
    """
    g_prefix = fragment_return(m, lasso.prefix)
    g_cycle = fragment_return(m, lasso.cycle)
    n = lasso.prefix.length
    c = lasso.cycle.length
    return g_prefix + (m.gamma ** n) * g_cycle / (1.0 - m.gamma ** c)


def unroll_lasso(m: Mdp, lasso: LassoTrajectory, n_steps: int) -> Fragment:
    """First n_steps of the lasso as a plain fragment."""
    steps = list(lasso.prefix.steps)
    for a, s2 in itertools.cycle(lasso.cycle.steps):
        if len(steps) >= n_steps:
            break
        steps.append((a, s2))
    return Fragment(lasso.prefix.start, tuple(steps[:n_steps]))


def truncation_bound(m: Mdp, n_steps: int) -> float:
    """Upper bound on |G(trajectory) - G(first n steps)|: gamma^n max|R|/(1-gamma)."""
    max_r = float(np.max(np.abs(m.reward))) if m.reward.size else 0.0
    return (m.gamma ** n_steps) * max_r / (1.0 - m.gamma)


def enumerate_fragments(
    m: Mdp,
    max_len: int,
    *,
    possible_only: bool = True,
    initial_only: bool = False,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[Fragment]:
    """All fragments of length 0..max_len in deterministic order.

    possible_only keeps fragments whose every step has tau > 0; initial_only
    restricts start states to support(mu0).  Raises EnumerationCapError when
    the output would exceed cap.
    """
    if max_len < 0:
        raise ContractError("max_len must be >= 0")
    poss = possible_mask(m)
    if initial_only:
        starts = list(initial_states(m))
    else:
        starts = list(range(m.n_states))

    def successors(s: int):
        for a in range(m.n_actions):
            for s2 in range(m.n_states):
                if not possible_only or poss[s, a, s2]:
                    yield (a, s2)

    out: list[Fragment] = []
    layer = [Fragment(s) for s in starts]
    for n in range(max_len + 1):
        out.extend(layer)
        if len(out) > cap:
            raise EnumerationCapError(
                f"fragment enumeration exceeds cap of {cap} at length {n}", cap
            )
        if n == max_len:
            break
        layer = [
            Fragment(f.start, f.steps + (step,)) for f in layer for step in successors(f.end)
        ]
    return out


def enumerate_lassos(
    m: Mdp,
    prefix_cap: int,
    cycle_cap: int,
    *,
    possible_only: bool = True,
    initial_only: bool = True,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[LassoTrajectory]:
    """All lassos with prefix length <= prefix_cap and cycle length <= cycle_cap.

    Prefixes start from initial states by default (these stand in for whole
    trajectories, which begin at mu0).  Order: (prefix, cycle) lexicographic
    in fragment order.  Raises EnumerationCapError beyond cap.
    """
    if cycle_cap < 1:
        raise ContractError("cycle_cap must be >= 1")
    prefixes = enumerate_fragments(
        m, prefix_cap, possible_only=possible_only, initial_only=initial_only, cap=cap
    )

    loops = [
        f
        for f in enumerate_fragments(
            m, cycle_cap, possible_only=possible_only, initial_only=False, cap=cap
        )
        if f.length >= 1 and f.start == f.end
    ]
    cycles_from: dict[int, list[Fragment]] = {}

    def cycles_at(s: int) -> list[Fragment]:
        if s not in cycles_from:
            cycles_from[s] = [f for f in loops if f.start == s]
        return cycles_from[s]

    out: list[LassoTrajectory] = []
    for prefix in prefixes:
        for cycle in cycles_at(prefix.end):
            out.append(LassoTrajectory(prefix, cycle))
            if len(out) > cap:
                raise EnumerationCapError(
                    f"lasso enumeration exceeds cap of {cap}", cap
                )
    return out


def fragment_returns(m: Mdp, frags: list[Fragment]) -> np.ndarray:
    return np.array([fragment_return(m, f) for f in frags], dtype=float)


def lasso_returns(m: Mdp, lassos: list[LassoTrajectory]) -> np.ndarray:
    return np.array([lasso_return(m, l) for l in lassos], dtype=float)
