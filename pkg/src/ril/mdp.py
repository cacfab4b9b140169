"""Finite Markov decision processes in tabular form.

An MDP here is a tuple (states, actions, tau, mu0, reward, gamma) where
``tau[s, a, s']`` is the probability of moving to ``s'`` after taking action
``a`` in state ``s``, ``mu0`` is the initial-state distribution, and
``reward[s, a, s']`` is received on that transition.  Everything downstream
(solvers, transformations, fingerprints) consumes this one structure.

Derived notions live here as plain functions rather than cached attributes:

* terminal states: every action self-loops with probability one and pays zero;
* possible transitions: ``tau > 0`` exactly;
* reachable states: breadth-first closure of ``support(mu0)`` over possible
  transitions;
* unreachable transitions: triples that no trajectory started from ``mu0``
  can traverse, i.e. impossible triples plus all triples leaving an
  unreachable state.

The JSON layout is ``{"states", "actions", "gamma", "mu0", "tau", "reward"}``
with ``tau`` and ``reward`` indexed ``[s][a][s']``.  The parser rejects
non-finite numbers and probability rows whose sums stray beyond 1e-9, then
renormalizes the small float noise away.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

# Probability rows are renormalized on construction; afterwards sums hold to
# this tolerance, which downstream solvers rely on.
ROW_SUM_TOL = 1e-12
# The parser accepts this much drift in input documents before renormalizing.
PARSE_ROW_SUM_TOL = 1e-9

from .errors import ContractError, MdpFormatError


@dataclass(frozen=True, eq=False)
class Mdp:
    """Immutable tabular MDP.  Arrays are read-only views; build via make_mdp."""

    states: tuple[str, ...]
    actions: tuple[str, ...]
    tau: np.ndarray      # (S, A, S) transition probabilities
    mu0: np.ndarray      # (S,) initial-state distribution
    reward: np.ndarray   # (S, A, S) rewards
    gamma: float

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def state_index(self, name: str) -> int:
        return self.states.index(name)

    def action_index(self, name: str) -> int:
        return self.actions.index(name)


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def make_mdp(states, actions, tau, mu0, reward, gamma, renormalize: bool = False) -> Mdp:
    """Construct an Mdp, copying arrays and validating the result.

    With renormalize=True, probability rows within PARSE_ROW_SUM_TOL of one
    are rescaled to sum to one exactly (up to float rounding); used by the
    parser and the random sampler.  Raises ContractError on violations.
    """
    states = tuple(str(s) for s in states)
    actions = tuple(str(a) for a in actions)
    tau_arr = np.array(tau, dtype=float)
    mu0_arr = np.array(mu0, dtype=float)
    reward_arr = np.array(reward, dtype=float)

    if renormalize:
        sums = tau_arr.sum(axis=2)
        if np.all(np.abs(sums - 1.0) <= PARSE_ROW_SUM_TOL) and np.all(sums > 0):
            tau_arr = tau_arr / sums[:, :, None]
        mu_sum = mu0_arr.sum()
        if abs(mu_sum - 1.0) <= PARSE_ROW_SUM_TOL and mu_sum > 0:
            mu0_arr = mu0_arr / mu_sum

    m = Mdp(states, actions, _frozen(tau_arr), _frozen(mu0_arr), _frozen(reward_arr), float(gamma))
    violations = validate_mdp(m)
    if violations:
        raise ContractError("invalid MDP: " + "; ".join(violations), violations)
    return m


def with_reward(m: Mdp, reward: np.ndarray) -> Mdp:
    """Same dynamics and discount, different reward table."""
    reward = np.asarray(reward, dtype=float)
    if reward.shape != m.reward.shape:
        raise ContractError(f"reward shape {reward.shape} != {m.reward.shape}")
    if not np.all(np.isfinite(reward)):
        raise ContractError("reward contains non-finite entries")
    return Mdp(m.states, m.actions, m.tau, m.mu0, _frozen(reward), m.gamma)


def validate_mdp(m: Mdp) -> list[str]:
    """Return a list of violation messages; empty means the MDP is well formed."""
    out: list[str] = []
    nS, nA = m.n_states, m.n_actions
    if nS == 0:
        out.append("no states")
    if nA == 0:
        out.append("no actions")
    if len(set(m.states)) != nS:
        out.append("duplicate state names")
    if len(set(m.actions)) != nA:
        out.append("duplicate action names")
    if m.tau.shape != (nS, nA, nS):
        out.append(f"tau shape {m.tau.shape}, expected {(nS, nA, nS)}")
        return out
    if m.reward.shape != (nS, nA, nS):
        out.append(f"reward shape {m.reward.shape}, expected {(nS, nA, nS)}")
        return out
    if m.mu0.shape != (nS,):
        out.append(f"mu0 shape {m.mu0.shape}, expected {(nS,)}")
        return out
    if not np.all(np.isfinite(m.tau)):
        out.append("tau contains non-finite entries")
    if not np.all(np.isfinite(m.reward)):
        out.append("reward contains non-finite entries")
    if not np.all(np.isfinite(m.mu0)):
        out.append("mu0 contains non-finite entries")
    if out:
        return out
    if np.any(m.tau < 0):
        out.append("tau has negative entries")
    if np.any(m.mu0 < 0):
        out.append("mu0 has negative entries")
    bad = np.abs(m.tau.sum(axis=2) - 1.0) > PARSE_ROW_SUM_TOL
    if np.any(bad):
        s, a = np.argwhere(bad)[0]
        out.append(f"tau row (s={m.states[s]}, a={m.actions[a]}) sums to {m.tau[s, a].sum():.12g}")
    if abs(m.mu0.sum() - 1.0) > PARSE_ROW_SUM_TOL:
        out.append(f"mu0 sums to {m.mu0.sum():.12g}")
    if not (0.0 < m.gamma < 1.0):
        out.append(f"gamma {m.gamma} outside (0, 1)")
    return out


# ---------------------------------------------------------------------------
# Derived structure


class Possibility(enum.Enum):
    POSSIBLE = "possible"
    IMPOSSIBLE = "impossible"


@dataclass(frozen=True)
class Transition:
    state: int
    action: int
    next_state: int
    possibility: Possibility


def terminal_mask(m: Mdp) -> np.ndarray:
    """Boolean (S,): states where every action self-loops w.p. 1 and pays 0."""
    idx = np.arange(m.n_states)
    self_loop = np.all(m.tau[idx, :, idx] == 1.0, axis=1)
    zero_pay = np.all(m.reward[idx, :, idx] == 0.0, axis=1)
    return self_loop & zero_pay


def terminal_states(m: Mdp) -> tuple[int, ...]:
    return tuple(int(s) for s in np.flatnonzero(terminal_mask(m)))


def possible_mask(m: Mdp) -> np.ndarray:
    """Boolean (S,A,S): transitions with strictly positive probability."""
    return m.tau > 0.0


def classify_transitions(m: Mdp) -> list[Transition]:
    """All (s, a, s') triples tagged possible/impossible, in index order."""
    poss = possible_mask(m)
    out = []
    for s in range(m.n_states):
        for a in range(m.n_actions):
            for s2 in range(m.n_states):
                tag = Possibility.POSSIBLE if poss[s, a, s2] else Possibility.IMPOSSIBLE
                out.append(Transition(s, a, s2, tag))
    return out


def initial_states(m: Mdp) -> tuple[int, ...]:
    return tuple(int(s) for s in np.flatnonzero(m.mu0 > 0.0))


@dataclass(frozen=True)
class ReachabilitySummary:
    reachable_states: tuple[int, ...]
    reachable_transitions: tuple[tuple[int, int, int], ...]
    # Closure restricted to a policy's support; None when no policy was given.
    supported_states: tuple[int, ...] | None = None


def _closure(m: Mdp, keep: np.ndarray) -> np.ndarray:
    """BFS from support(mu0) over transitions with keep[s,a,s'] True."""
    seen = m.mu0 > 0.0
    frontier = list(np.flatnonzero(seen))
    while frontier:
        s = frontier.pop()
        nxt = np.flatnonzero(keep[s].any(axis=0))
        for s2 in nxt:
            if not seen[s2]:
                seen[s2] = True
                frontier.append(int(s2))
    return seen


def reachable_state_mask(m: Mdp) -> np.ndarray:
    return _closure(m, possible_mask(m))


def reachability(m: Mdp, policy_probs: np.ndarray | None = None) -> ReachabilitySummary:
    """Reachable states/transitions; optionally the closure under a policy.

    A transition is reachable when its source state is reachable and it is
    possible.  With policy_probs (S,A), supported_states is the closure using
    only actions the policy assigns positive probability.
    """
    poss = possible_mask(m)
    reach = _closure(m, poss)
    triples = []
    for s in np.flatnonzero(reach):
        for a, s2 in zip(*np.nonzero(poss[s])):
            triples.append((int(s), int(a), int(s2)))
    supported = None
    if policy_probs is not None:
        keep = poss & (np.asarray(policy_probs) > 0.0)[:, :, None]
        supported = tuple(int(s) for s in np.flatnonzero(_closure(m, keep)))
    return ReachabilitySummary(
        reachable_states=tuple(int(s) for s in np.flatnonzero(reach)),
        reachable_transitions=tuple(triples),
        supported_states=supported,
    )


def unreachable_transition_mask(m: Mdp) -> np.ndarray:
    """Boolean (S,A,S): triples no trajectory from mu0 can traverse."""
    poss = possible_mask(m)
    reach = _closure(m, poss)
    out = ~poss
    out[~reach, :, :] = True
    return out


def impossible_transition_mask(m: Mdp) -> np.ndarray:
    return ~possible_mask(m)


# ---------------------------------------------------------------------------
# JSON serialization


def mdp_to_obj(m: Mdp) -> dict:
    return {
        "states": list(m.states),
        "actions": list(m.actions),
        "gamma": m.gamma,
        "mu0": m.mu0.tolist(),
        "tau": m.tau.tolist(),
        "reward": m.reward.tolist(),
    }


def dump_mdp(m: Mdp) -> str:
    return json.dumps(mdp_to_obj(m), indent=2, sort_keys=True)


def _reject_nonfinite(value):
    # json.loads hook: the format forbids NaN/Infinity literals outright.
    raise MdpFormatError(f"non-finite number {value!r} in MDP document", [f"non-finite number {value!r}"])


def mdp_from_obj(obj: dict) -> Mdp:
    violations = []
    if not isinstance(obj, dict):
        raise MdpFormatError("MDP document must be a JSON object", ["not an object"])
    for key in ("states", "actions", "gamma", "mu0", "tau", "reward"):
        if key not in obj:
            violations.append(f"missing key {key!r}")
    if violations:
        raise MdpFormatError("malformed MDP document: " + "; ".join(violations), violations)

    def scan(x):
        if isinstance(x, bool):
            violations.append("boolean where number expected")
        elif isinstance(x, (int, float)):
            if not math.isfinite(x):
                violations.append(f"non-finite number {x!r}")
        elif isinstance(x, list):
            for y in x:
                scan(y)
        else:
            violations.append(f"non-numeric entry {x!r}")

    for key in ("gamma", "mu0", "tau", "reward"):
        scan(obj[key])
    if violations:
        raise MdpFormatError("malformed MDP document: " + "; ".join(violations), violations)

    try:
        return make_mdp(
            obj["states"], obj["actions"], obj["tau"], obj["mu0"], obj["reward"],
            obj["gamma"], renormalize=True,
        )
    except ContractError as e:
        raise MdpFormatError(str(e), e.violations) from e
    except (TypeError, ValueError) as e:
        raise MdpFormatError(f"malformed MDP document: {e}", [str(e)]) from e


def parse_mdp(text: str) -> Mdp:
    try:
        obj = json.loads(text, parse_constant=_reject_nonfinite)
    except MdpFormatError:
        raise
    except json.JSONDecodeError as e:
        raise MdpFormatError(f"invalid JSON: {e}", [str(e)]) from e
    return mdp_from_obj(obj)


def load_mdp(path) -> Mdp:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mdp(fh.read())
