"""Random MDP generation and deterministic seed derivation.

Every random draw in the package flows through numpy Generators seeded by
`derive_seed`, which hashes a root seed together with string/int components
via numpy's SeedSequence.  Identical inputs give identical streams regardless
of execution order or thread count, so experiment verdicts are replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError
from .mdp import Mdp, make_mdp

_MAX_SEED = 2**63 - 1


def derive_seed(root: int, *components) -> int:
    """Deterministic sub-seed from a root seed and hashable path components."""
    entropy = [int(root) & _MAX_SEED]
    for c in components:
        if isinstance(c, str):
            entropy.extend(ord(ch) for ch in c)
            entropy.append(0x1F)  # separator so ("ab","c") != ("a","bc")
        else:
            entropy.append(int(c) & _MAX_SEED)
            entropy.append(0x2F)
    words = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)
    return int(words[0] ^ (words[1] << 1)) & _MAX_SEED


@dataclass(frozen=True)
class SamplerConfig:
    """Shape and sparsity of randomly drawn MDPs.

    sparsity is the probability of zeroing a transition-probability entry
    (each row keeps at least one); orphan_prob is the chance of carving out
    states that nothing outside can reach, which gives the unreachable-mask
    transformations something to act on.
    """

    n_states: tuple[int, int] = (2, 6)
    n_actions: tuple[int, int] = (2, 4)
    gammas: tuple[float, ...] = (0.5, 0.9)
    sparsity: float = 0.35
    orphan_prob: float = 0.25
    reward_low: float = -1.0
    reward_high: float = 1.0
    min_initial_states: int = 1
    max_initial_states: int | None = None

    def __post_init__(self):
        if self.n_states[0] < 1 or self.n_states[0] > self.n_states[1]:
            raise ContractError(f"bad n_states range {self.n_states}")
        if self.n_actions[0] < 1 or self.n_actions[0] > self.n_actions[1]:
            raise ContractError(f"bad n_actions range {self.n_actions}")
        if not 0.0 <= self.sparsity < 1.0:
            raise ContractError(f"sparsity {self.sparsity} outside [0, 1)")
        if self.min_initial_states < 1:
            raise ContractError("min_initial_states must be >= 1")


def sample_mdp(cfg: SamplerConfig, seed: int) -> Mdp:
    """Draw a random MDP; identical (cfg, seed) pairs give identical MDPs."""
    rng = np.random.default_rng(seed)
    nS = int(rng.integers(cfg.n_states[0], cfg.n_states[1] + 1))
    nA = int(rng.integers(cfg.n_actions[0], cfg.n_actions[1] + 1))
    gamma = float(cfg.gammas[int(rng.integers(0, len(cfg.gammas)))])

    # Orphan states receive no probability from outside and none from mu0.
    orphans = np.zeros(nS, dtype=bool)
    if nS > cfg.min_initial_states and rng.random() < cfg.orphan_prob:
        n_orph = int(rng.integers(1, max(2, nS - cfg.min_initial_states)))
        orphans[rng.choice(nS, size=min(n_orph, nS - cfg.min_initial_states), replace=False)] = True

    tau = rng.uniform(0.05, 1.0, (nS, nA, nS))
    drop = rng.random((nS, nA, nS)) < cfg.sparsity
    tau[drop] = 0.0
    tau[:, :, orphans] = 0.0
    # Rows from orphan states may go anywhere, including other orphans.
    orphan_rows = rng.uniform(0.05, 1.0, (nS, nA, nS))
    orphan_drop = rng.random((nS, nA, nS)) < cfg.sparsity
    orphan_rows[orphan_drop] = 0.0
    tau[orphans] = orphan_rows[orphans]
    # Every row needs some support; re-seed empty rows deterministically.
    fallback = rng.uniform(0.5, 1.0, (nS, nA))
    for s in range(nS):
        allowed = np.ones(nS, dtype=bool) if orphans[s] else ~orphans
        allowed_idx = np.flatnonzero(allowed)
        for a in range(nA):
            if tau[s, a].sum() <= 0.0:
                pick = allowed_idx[int(rng.integers(0, len(allowed_idx)))]
                tau[s, a, pick] = fallback[s, a]
    tau = tau / tau.sum(axis=2, keepdims=True)

    candidates = np.flatnonzero(~orphans)
    lo = min(cfg.min_initial_states, len(candidates))
    hi = len(candidates) if cfg.max_initial_states is None else min(cfg.max_initial_states, len(candidates))
    hi = max(lo, hi)
    n_init = int(rng.integers(lo, hi + 1))
    chosen = rng.choice(candidates, size=n_init, replace=False)
    mu0 = np.zeros(nS)
    mu0[chosen] = rng.uniform(0.2, 1.0, n_init)
    mu0 = mu0 / mu0.sum()

    reward = rng.uniform(cfg.reward_low, cfg.reward_high, (nS, nA, nS))
    states = tuple(f"s{i}" for i in range(nS))
    actions = tuple(f"a{i}" for i in range(nA))
    return make_mdp(states, actions, tau, mu0, reward, gamma, renormalize=True)


def sample_mdp_where(cfg: SamplerConfig, seed: int, predicate, max_tries: int = 200) -> Mdp | None:
    """First sampled MDP satisfying predicate, scanning deterministic sub-seeds."""
    for i in range(max_tries):
        m = sample_mdp(cfg, derive_seed(seed, "reject", i))
        if predicate(m):
            return m
    return None


def with_overrides(cfg: SamplerConfig, **kwargs) -> SamplerConfig:
    return replace(cfg, **kwargs)
