"""Reward transformations: families, application, sampling, and membership tests.

Each family is a small frozen dataclass describing one transformation of the
reward table of a fixed-dynamics MDP:

* Identity: no change (optionally carrying a note explaining why a sampler
  degenerated to it).
* PotentialShaping: R'(s,a,s') = R + gamma*phi(s') - phi(s), with phi zero at
  terminal states; k_initial pins phi to a common value on initial states
  (0.0 for the zero-initial subfamily, None for unconstrained).
* SPrimeRedistribution: R' = R + delta where every (s,a) row of delta has
  zero expectation under tau; entries on impossible transitions are free.
* PositiveLinearScaling: R' = c * R with c > 0.
* ZeroPreservingMonotone: R' = f(R) for a strictly increasing piecewise
  linear f through the origin, extended past its breakpoints by the edge
  slopes.
* Mask: replace rewards on an explicit transition set, leaving the rest.
* OptimalityPreserving: rewrite rewards so that prescribed action sets O(s)
  become exactly the optimal actions, via a new potential psi and positive
  optimality gaps off O; expected rewards become constant over each (s,a)
  support and off-support entries keep their original values.

`sample_transform` draws a member of a named class for a given MDP.  The
optional constraints dict steers samples away from degenerate members (for
counterexample searches): see _CONSTRAINT_KEYS below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .mdp import (
    Mdp,
    impossible_transition_mask,
    initial_states,
    possible_mask,
    terminal_mask,
    unreachable_transition_mask,
)
from .solvers import SolverParams, optimal_q, optimal_action_sets, reward_scale

# Expectation of an S'-redistribution row must vanish to this absolute level.
REDISTRIBUTION_EXPECTATION_TOL = 1e-10
# Exactness required of declared potential/breakpoint structure.
STRUCT_TOL = 1e-12

# Transformation classes in directory-table column order.
CLASS_TAGS = (
    "identity",
    "shaping_zero_initial",
    "shaping_k_initial",
    "shaping",
    "sprime_redistribution",
    "positive_scaling",
    "zpmt",
    "opt_all_states",
    "opt_supported_states",
    "mask_impossible",
    "mask_unreachable",
)

# Constraint keys accepted by sample_transform (all optional):
#   phi_nonzero_on: list[int]   force a clearly nonzero potential on one of these states
#   phi_spread_on: list[int]    force two of these states to get distinct potentials
#   phi_spike: (state, value)   potential is exactly value * e_state
#   k_nonzero: bool             force |k| away from zero (k-initial family)
#   away_from_one: bool         scaling factor c kept outside [0.75, 1.33]
#   nonlinear: bool             ZPMT slopes alternate by a factor >= 1.6 between
#                               breakpoints placed at every distinct reward value
#   push: (s, a, s_hi, value)   redistribution moves value onto tau-possible
#                               (s,a,s_hi), compensated on another support state
#   extreme_possible_sign: +-1  mask replaces one possible masked triple by a
#                               value beyond every attainable return
#   boost_action: (s, a, bonus) mask adds bonus to possible rewards of (s, a)
#   diff_outside_supported: bool  opt family prescribes non-optimal action sets
#                               outside the supported set
_CONSTRAINT_KEYS = frozenset(
    [
        "phi_nonzero_on",
        "phi_spread_on",
        "phi_spike",
        "k_nonzero",
        "away_from_one",
        "nonlinear",
        "push",
        "extreme_possible_sign",
        "boost_action",
        "diff_outside_supported",
    ]
)


@dataclass(frozen=True)
class Identity:
    note: str = ""


@dataclass(frozen=True)
class PotentialShaping:
    phi: np.ndarray
    k_initial: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", _freeze(self.phi))


@dataclass(frozen=True)
class SPrimeRedistribution:
    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delta", _freeze(self.delta))


@dataclass(frozen=True)
class PositiveLinearScaling:
    c: float


@dataclass(frozen=True)
class ZeroPreservingMonotone:
    breakpoints: np.ndarray  # (n, 2) rows (x, y), x strictly increasing

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _freeze(self.breakpoints))


@dataclass(frozen=True)
class Mask:
    transitions: tuple[tuple[int, int, int], ...]
    replacement: np.ndarray
    which: str = ""  # informational: "impossible" / "unreachable" when sampled

    def __post_init__(self):
        object.__setattr__(
            self, "transitions", tuple((int(s), int(a), int(p)) for s, a, p in self.transitions)
        )
        object.__setattr__(self, "replacement", _freeze(self.replacement))


@dataclass(frozen=True)
class OptimalityPreserving:
    opt_sets: tuple[tuple[int, ...], ...]  # prescribed optimal actions per state
    psi: np.ndarray                        # new optimal state values
    gaps: np.ndarray                       # (S, A), 0 on opt_sets, > 0 elsewhere

    def __post_init__(self):
        object.__setattr__(
            self, "opt_sets", tuple(tuple(sorted(int(a) for a in acts)) for acts in self.opt_sets)
        )
        object.__setattr__(self, "psi", _freeze(self.psi))
        object.__setattr__(self, "gaps", _freeze(self.gaps))


TransformSpec = (
    Identity
    | PotentialShaping
    | SPrimeRedistribution
    | PositiveLinearScaling
    | ZeroPreservingMonotone
    | Mask
    | OptimalityPreserving
)


def _freeze(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Validation and application


def piecewise_linear(x: np.ndarray, breakpoints: np.ndarray) -> np.ndarray:
    """Evaluate the piecewise-linear function, extrapolating with edge slopes."""
    xs, ys = breakpoints[:, 0], breakpoints[:, 1]
    x = np.asarray(x, dtype=float)
    y = np.interp(x, xs, ys)
    if len(xs) >= 2:
        lo = x < xs[0]
        hi = x > xs[-1]
        if np.any(lo):
            slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
            y = np.where(lo, ys[0] + (x - xs[0]) * slope, y)
        if np.any(hi):
            slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            y = np.where(hi, ys[-1] + (x - xs[-1]) * slope, y)
    return y


def validate_transform(m: Mdp, t: TransformSpec) -> list[str]:
    """Family-specific preconditions; empty list means t is well formed for m."""
    out: list[str] = []
    nS, nA = m.n_states, m.n_actions
    if isinstance(t, Identity):
        return out
    if isinstance(t, PotentialShaping):
        if t.phi.shape != (nS,):
            return [f"phi shape {t.phi.shape}, expected {(nS,)}"]
        term = terminal_mask(m)
        if np.any(np.abs(t.phi[term]) > STRUCT_TOL):
            out.append("potential must vanish at terminal states")
        if t.k_initial is not None:
            init = list(initial_states(m))
            if np.any(np.abs(t.phi[init] - t.k_initial) > STRUCT_TOL):
                out.append("potential must equal k_initial on every initial state")
        return out
    if isinstance(t, SPrimeRedistribution):
        if t.delta.shape != (nS, nA, nS):
            return [f"delta shape {t.delta.shape}, expected {(nS, nA, nS)}"]
        exp = np.einsum("sap,sap->sa", m.tau, t.delta)
        if np.any(np.abs(exp) > REDISTRIBUTION_EXPECTATION_TOL):
            s, a = np.unravel_index(np.argmax(np.abs(exp)), exp.shape)
            out.append(
                f"delta expectation {exp[s, a]:.3e} at (s={m.states[s]}, a={m.actions[a]})"
            )
        return out
    if isinstance(t, PositiveLinearScaling):
        if not (np.isfinite(t.c) and t.c > 0):
            out.append(f"scale factor must be positive, got {t.c}")
        return out
    if isinstance(t, ZeroPreservingMonotone):
        b = t.breakpoints
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 2:
            return ["breakpoints must be an (n, 2) array with n >= 2"]
        if np.any(np.diff(b[:, 0]) <= 0):
            out.append("breakpoint x values must be strictly increasing")
        if np.any(np.diff(b[:, 1]) <= 0):
            out.append("breakpoint y values must be strictly increasing")
        if abs(float(piecewise_linear(np.array([0.0]), b)[0])) > STRUCT_TOL:
            out.append("function must map 0 to 0")
        return out
    if isinstance(t, Mask):
        if len(t.transitions) != len(t.replacement):
            out.append("one replacement value per masked transition required")
        if len(set(t.transitions)) != len(t.transitions):
            out.append("masked transitions must be unique")
        for s, a, s2 in t.transitions:
            if not (0 <= s < nS and 0 <= a < nA and 0 <= s2 < nS):
                out.append(f"transition index ({s}, {a}, {s2}) out of range")
                break
        if not np.all(np.isfinite(t.replacement)):
            out.append("replacement values must be finite")
        return out
    if isinstance(t, OptimalityPreserving):
        if len(t.opt_sets) != nS:
            return [f"opt_sets has {len(t.opt_sets)} entries, expected {nS}"]
        if t.psi.shape != (nS,):
            return [f"psi shape {t.psi.shape}, expected {(nS,)}"]
        if t.gaps.shape != (nS, nA):
            return [f"gaps shape {t.gaps.shape}, expected {(nS, nA)}"]
        for s, acts in enumerate(t.opt_sets):
            if not acts:
                out.append(f"opt_sets[{s}] is empty")
            if any(a < 0 or a >= nA for a in acts):
                out.append(f"opt_sets[{s}] has out-of-range actions")
        for s in range(nS):
            for a in range(nA):
                if a in t.opt_sets[s]:
                    if t.gaps[s, a] != 0.0:
                        out.append(f"gap must be zero on prescribed optimal ({s}, {a})")
                elif not t.gaps[s, a] > 0.0:
                    out.append(f"gap must be positive off prescribed optimal ({s}, {a})")
        return out
    return [f"unknown transformation {type(t).__name__}"]


def apply_transform(m: Mdp, t: TransformSpec) -> np.ndarray:
    """New reward table R' for m under t.  Raises ContractError if t is invalid."""
    violations = validate_transform(m, t)
    if violations:
        raise ContractError(
            f"invalid {type(t).__name__}: " + "; ".join(violations), violations
        )
    r = np.array(m.reward, dtype=float)
    if isinstance(t, Identity):
        return r
    if isinstance(t, PotentialShaping):
        return r + m.gamma * t.phi[None, None, :] - t.phi[:, None, None]
    if isinstance(t, SPrimeRedistribution):
        return r + t.delta
    if isinstance(t, PositiveLinearScaling):
        return t.c * r
    if isinstance(t, ZeroPreservingMonotone):
        return piecewise_linear(r, t.breakpoints)
    if isinstance(t, Mask):
        for (s, a, s2), value in zip(t.transitions, t.replacement):
            r[s, a, s2] = value
        return r
    if isinstance(t, OptimalityPreserving):
        # Expected new reward per (s,a): psi(s) - gamma E[psi(S')] - gap(s,a),
        # spread constantly over the transition support.
        e = t.psi[:, None] - m.gamma * np.einsum("sap,p->sa", m.tau, t.psi) - t.gaps
        supp = possible_mask(m)
        out = np.where(supp, e[:, :, None], r)
        return out
    raise ContractError(f"unknown transformation {type(t).__name__}")


# ---------------------------------------------------------------------------
# Sampling class members


def extreme_reward_value(m: Mdp, depth: int = 3) -> float:
    """A reward magnitude that dominates any return difference at shallow depth."""
    return 4.0 * reward_scale(m) / ((1.0 - m.gamma) * m.gamma ** depth)


def _sample_potential(m: Mdp, rng, magnitude: float, k_mode: str, cons: dict) -> PotentialShaping:
    scale = magnitude * reward_scale(m)
    term = terminal_mask(m)
    init = np.array(m.mu0 > 0.0)
    phi = rng.uniform(-scale, scale, m.n_states)

    spike = cons.get("phi_spike")
    if spike is not None:
        state, value = spike
        phi = np.zeros(m.n_states)
        phi[state] = value

    k: float | None
    if k_mode == "zero":
        phi[init] = 0.0
        k = 0.0
    elif k_mode == "k":
        if spike is not None:
            # Keep the spike: the shared initial value is whatever it left there.
            k = float(phi[np.flatnonzero(init)[0]]) if init.any() else 0.0
        else:
            k = float(rng.uniform(-scale, scale))
            if cons.get("k_nonzero"):
                sign = 1.0 if rng.random() < 0.5 else -1.0
                k = sign * scale * float(rng.uniform(0.3, 1.0))
        if np.any(init & term):
            k = 0.0  # an initial terminal state pins the shared value to zero
        phi[init] = k
    else:
        k = None
    phi[term] = 0.0

    free = ~term if k is None else ~(term | init)
    for target in cons.get("phi_nonzero_on", []):
        if free[target] and abs(phi[target]) < 0.25 * scale:
            sign = 1.0 if rng.random() < 0.5 else -1.0
            phi[target] = sign * scale * float(rng.uniform(0.3, 1.0))
            break
        if abs(phi[target]) >= 0.25 * scale:
            break
    spread = [s for s in cons.get("phi_spread_on", []) if not term[s]]
    if len(spread) >= 2 and abs(phi[spread[0]] - phi[spread[1]]) < 0.25 * scale:
        phi[spread[0]] = 0.6 * scale * float(rng.uniform(0.8, 1.2))
        phi[spread[1]] = -0.6 * scale * float(rng.uniform(0.8, 1.2))
    return PotentialShaping(phi=phi, k_initial=k)


def _sample_redistribution(m: Mdp, rng, magnitude: float, cons: dict) -> SPrimeRedistribution:
    scale = magnitude * reward_scale(m)
    delta = rng.uniform(-scale, scale, m.tau.shape)
    push = cons.get("push")
    if push is not None:
        s, a, s_hi, value = push
        row_supp = np.flatnonzero(m.tau[s, a] > 0)
        others = [p for p in row_supp if p != s_hi]
        if s_hi not in row_supp or not others:
            raise ContractError("push needs a stochastic row containing the pushed transition")
        delta = np.zeros(m.tau.shape)
        s_lo = others[0]
        delta[s, a, s_hi] = value
        delta[s, a, s_lo] = -value * m.tau[s, a, s_hi] / m.tau[s, a, s_lo]
        return SPrimeRedistribution(delta=delta)
    supp = possible_mask(m)
    exp = np.einsum("sap,sap->sa", m.tau, delta)
    delta = delta - np.where(supp, exp[:, :, None], 0.0)
    return SPrimeRedistribution(delta=delta)


def _sample_zpmt(m: Mdp, rng, magnitude: float, cons: dict) -> ZeroPreservingMonotone:
    values = np.unique(np.concatenate([[0.0], m.reward.ravel()]))
    pad = 1.0 + magnitude * reward_scale(m)
    if cons.get("nonlinear"):
        # Breakpoints at every distinct reward value; slopes strictly alternate
        # by a factor >= 1.6, so the function is genuinely non-linear across
        # every breakpoint (and in particular on the attained reward set).
        xs = np.concatenate([[values[0] - pad], values, [values[-1] + pad]])
        base = float(rng.uniform(0.4, 2.0))
        factor = float(rng.uniform(1.6, 2.6))
        start_high = int(rng.integers(0, 2))
        slopes = np.array(
            [base * (factor if (i + start_high) % 2 == 0 else 1.0) for i in range(len(xs) - 1)]
        )
    else:
        n_extra = int(rng.integers(2, 6))
        extras = rng.uniform(values[0] - pad, values[-1] + pad, n_extra)
        xs = np.unique(np.concatenate([[0.0], extras]))
        slopes = rng.uniform(0.3, 3.0, len(xs) - 1)
    i0 = int(np.searchsorted(xs, 0.0))
    assert xs[i0] == 0.0
    ys = np.zeros_like(xs)
    for j in range(i0 + 1, len(xs)):
        ys[j] = ys[j - 1] + slopes[j - 1] * (xs[j] - xs[j - 1])
    for j in range(i0 - 1, -1, -1):
        ys[j] = ys[j + 1] - slopes[j] * (xs[j + 1] - xs[j])
    return ZeroPreservingMonotone(breakpoints=np.column_stack([xs, ys]))


def _sample_mask(m: Mdp, rng, magnitude: float, which: str, cons: dict) -> TransformSpec:
    if which == "impossible":
        mask = impossible_transition_mask(m)
    else:
        mask = unreachable_transition_mask(m)
    triples = [tuple(int(v) for v in t) for t in np.argwhere(mask)]
    if not triples:
        return Identity(note=f"no {which} transitions to mask")
    scale = magnitude * reward_scale(m)
    original = np.array([m.reward[t] for t in triples])
    replacement = rng.uniform(-2 * scale, 2 * scale, len(triples))

    sign = cons.get("extreme_possible_sign")
    if sign is not None:
        poss = possible_mask(m)
        candidates = [i for i, t in enumerate(triples) if poss[t]]
        if not candidates:
            return Identity(note=f"no possible {which} transitions to perturb")
        replacement = original.copy()
        replacement[candidates[0]] = sign * extreme_reward_value(m)
    boost = cons.get("boost_action")
    if boost is not None:
        s, a, bonus = boost
        poss = possible_mask(m)
        replacement = original.copy()
        hit = False
        for i, t in enumerate(triples):
            if t[0] == s and t[1] == a and poss[t]:
                replacement[i] = original[i] + bonus
                hit = True
        if not hit:
            return Identity(note="boost target is not a masked possible transition")
    return Mask(transitions=tuple(triples), replacement=replacement, which=which)


def _supported_state_mask(m: Mdp, params: SolverParams) -> np.ndarray:
    # Closure of support(mu0) under optimal-policy-supported possible moves.
    from .solvers import maximally_supportive_optimal_policy  # local to avoid cycle noise
    from .mdp import reachability

    pi = maximally_supportive_optimal_policy(m, params)
    summary = reachability(m, pi.probs)
    out = np.zeros(m.n_states, dtype=bool)
    out[list(summary.supported_states)] = True
    return out


def _sample_opt(
    m: Mdp, rng, magnitude: float, scope: str, cons: dict, params: SolverParams
) -> OptimalityPreserving:
    tables = optimal_q(m, params)
    sets = optimal_action_sets(m, params)
    if scope == "supported":
        supported = _supported_state_mask(m, params)
        new_sets = []
        for s in range(m.n_states):
            if supported[s]:
                new_sets.append(sets[s])
                continue
            if cons.get("diff_outside_supported") and m.n_actions >= 2:
                # Any nonempty action set differing from the current optimal one.
                choices = [a for a in range(m.n_actions) if (a,) != tuple(sets[s])]
                new_sets.append((int(rng.choice(choices)),))
            else:
                size = int(rng.integers(1, m.n_actions + 1))
                acts = sorted(rng.choice(m.n_actions, size=size, replace=False).tolist())
                new_sets.append(tuple(int(a) for a in acts))
        sets = new_sets
    scale = max(magnitude, 0.25) * reward_scale(m)
    gaps = np.zeros((m.n_states, m.n_actions))
    for s in range(m.n_states):
        for a in range(m.n_actions):
            if a not in sets[s]:
                gaps[s, a] = scale * float(rng.uniform(0.2, 1.0))
    return OptimalityPreserving(opt_sets=tuple(tuple(x) for x in sets), psi=tables.v, gaps=gaps)


def sample_transform(
    class_tag: str,
    m: Mdp,
    seed: int,
    magnitude: float = 1.0,
    constraints: dict | None = None,
    params: SolverParams = SolverParams(),
) -> TransformSpec:
    """Draw a member of the named transformation class for m.

    Degenerate cases (e.g. masking an empty transition set) return Identity
    carrying an explanatory note.  Unknown constraint keys are rejected so
    callers cannot silently misspell them.
    """
    cons = dict(constraints or {})
    unknown = set(cons) - _CONSTRAINT_KEYS
    if unknown:
        raise ContractError(f"unknown constraint keys {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    if class_tag == "identity":
        return Identity()
    if class_tag == "shaping_zero_initial":
        return _sample_potential(m, rng, magnitude, "zero", cons)
    if class_tag == "shaping_k_initial":
        return _sample_potential(m, rng, magnitude, "k", cons)
    if class_tag == "shaping":
        return _sample_potential(m, rng, magnitude, "free", cons)
    if class_tag == "sprime_redistribution":
        return _sample_redistribution(m, rng, magnitude, cons)
    if class_tag == "positive_scaling":
        if cons.get("away_from_one"):
            c = float(rng.uniform(1.4, 3.0))
            if rng.random() < 0.5:
                c = 1.0 / c
        else:
            c = float(np.exp(rng.uniform(np.log(1.0 / 3.0), np.log(3.0))))
        return PositiveLinearScaling(c=c)
    if class_tag == "zpmt":
        return _sample_zpmt(m, rng, magnitude, cons)
    if class_tag == "opt_all_states":
        return _sample_opt(m, rng, magnitude, "all", cons, params)
    if class_tag == "opt_supported_states":
        return _sample_opt(m, rng, magnitude, "supported", cons, params)
    if class_tag == "mask_impossible":
        return _sample_mask(m, rng, magnitude, "impossible", cons)
    if class_tag == "mask_unreachable":
        return _sample_mask(m, rng, magnitude, "unreachable", cons)
    raise ContractError(f"unknown transformation class {class_tag!r}")


# ---------------------------------------------------------------------------
# Membership tests and reward-function recovery helpers


def is_sprime_redistribution(m: Mdp, r1: np.ndarray, r2: np.ndarray, tol: float | None = None) -> bool:
    """Do r1 and r2 differ only by a tau-expectation-preserving delta?"""
    if tol is None:
        tol = 1e-8 * (1.0 + float(np.max(np.abs(r1))))
    exp = np.einsum("sap,sap->sa", m.tau, np.asarray(r2) - np.asarray(r1))
    return bool(np.all(np.abs(exp) <= tol))


@dataclass(frozen=True)
class ShapingDecomposition:
    phi: np.ndarray
    k_initial: float | None
    max_residual: float
    # Triples outside the requested scope where the potential does not explain
    # the difference; nonempty means "shaping plus a mask on these".
    off_scope_mismatch: tuple[tuple[int, int, int], ...]


def decompose_shaping(
    m: Mdp,
    r1: np.ndarray,
    r2: np.ndarray,
    scope: str = "all",
    tol: float | None = None,
) -> ShapingDecomposition | None:
    """Fit a potential with gamma*phi(s') - phi(s) = r2 - r1 on scoped triples.

    scope "all" uses every (s,a,s'); "possible" and "reachable" restrict the
    constraint set accordingly (differences elsewhere are reported as
    off-scope mismatches rather than failures).  Returns None if no potential
    fits the scoped constraints within tolerance.
    """
    d = np.asarray(r2, dtype=float) - np.asarray(r1, dtype=float)
    if tol is None:
        tol = 1e-8 * (1.0 + float(np.max(np.abs(r1))))
    if scope == "all":
        in_scope = np.ones(m.tau.shape, dtype=bool)
    elif scope == "possible":
        in_scope = possible_mask(m)
    elif scope == "reachable":
        in_scope = ~unreachable_transition_mask(m)
    else:
        raise ContractError(f"unknown scope {scope!r}")

    rows = []
    rhs = []
    for s, a, s2 in np.argwhere(in_scope):
        row = np.zeros(m.n_states)
        row[s2] += m.gamma
        row[s] -= 1.0
        rows.append(row)
        rhs.append(d[s, a, s2])
    for t in np.flatnonzero(terminal_mask(m)):
        row = np.zeros(m.n_states)
        row[t] = 1.0
        rows.append(row)
        rhs.append(0.0)
    if not rows:
        return None
    A = np.array(rows)
    b = np.array(rhs)
    phi, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.max(np.abs(A @ phi - b))) if len(b) else 0.0
    if residual > tol:
        return None

    predicted = m.gamma * phi[None, None, :] - phi[:, None, None]
    mism = np.abs(d - predicted) > tol
    mism &= ~in_scope
    off = tuple(tuple(int(v) for v in t) for t in np.argwhere(mism))

    init = list(initial_states(m))
    k: float | None = None
    if init:
        k_vals = phi[init]
        if np.max(np.abs(k_vals - k_vals[0])) <= tol:
            k = float(k_vals[0])
    return ShapingDecomposition(phi=phi, k_initial=k, max_residual=residual, off_scope_mismatch=off)


def is_optimality_preserving(
    m: Mdp,
    r2: np.ndarray,
    opt_sets: tuple[tuple[int, ...], ...],
    params: SolverParams = SolverParams(),
    tol: float | None = None,
) -> bool:
    """Does r2 make exactly the prescribed action sets optimal in every state?"""
    from .mdp import with_reward

    sets2 = optimal_action_sets(with_reward(m, r2), params, tol)
    return all(tuple(sorted(a)) == tuple(sorted(b)) for a, b in zip(sets2, opt_sets))


@dataclass(frozen=True)
class TransferTarget:
    """New dynamics tau_prime plus desired expected rewards L under them.

    L is an (S, A) array; NaN entries mean "no requirement".  Requirements are
    only allowed on rows whose dynamics actually changed.
    """

    tau_prime: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau_prime", _freeze(self.tau_prime))
        L = np.array(self.L, dtype=float)
        L.setflags(write=False)
        object.__setattr__(self, "L", L)


def transfer_redistribution(m: Mdp, target: TransferTarget) -> np.ndarray:
    """Reward table r2 matching m's expected rewards under tau and L under tau_prime.

    Rows with unchanged dynamics keep r1.  Each changed row with a requirement
    solves the two-constraint system  tau_row . r = tau_row . r1  and
    tau_prime_row . r = L  by least squares (minimum-norm when the system is
    underdetermined).  Raises ContractError for requirements on unchanged rows,
    unreachable requirements, or non-distribution tau_prime rows.
    """
    tp = np.asarray(target.tau_prime, dtype=float)
    L = np.asarray(target.L, dtype=float)
    nS, nA = m.n_states, m.n_actions
    if tp.shape != m.tau.shape:
        raise ContractError(f"tau_prime shape {tp.shape}, expected {m.tau.shape}")
    if L.shape != (nS, nA):
        raise ContractError(f"L shape {L.shape}, expected {(nS, nA)}")
    if np.any(tp < 0) or np.any(np.abs(tp.sum(axis=2) - 1.0) > 1e-9):
        raise ContractError("tau_prime rows must be probability distributions")

    r2 = np.array(m.reward, dtype=float)
    for s in range(nS):
        for a in range(nA):
            changed = not np.array_equal(m.tau[s, a], tp[s, a])
            has_req = np.isfinite(L[s, a])
            if not changed:
                if has_req:
                    raise ContractError(
                        f"L specified at (s={m.states[s]}, a={m.actions[a]}) but dynamics are unchanged"
                    )
                continue
            if not has_req:
                continue
            A = np.vstack([m.tau[s, a], tp[s, a]])
            b = np.array([float(m.tau[s, a] @ m.reward[s, a]), L[s, a]])
            row, residuals, rank, _ = np.linalg.lstsq(A, b, rcond=None)
            if np.max(np.abs(A @ row - b)) > 1e-9 * (1.0 + np.max(np.abs(b))):
                raise ContractError(
                    f"no reward row satisfies both expectation requirements at "
                    f"(s={m.states[s]}, a={m.actions[a]})"
                )
            r2[s, a] = row
    return r2


# ---------------------------------------------------------------------------
# JSON serialization


def transform_to_obj(t: TransformSpec) -> dict:
    if isinstance(t, Identity):
        out: dict = {"family": "identity"}
        if t.note:
            out["note"] = t.note
        return out
    if isinstance(t, PotentialShaping):
        return {"family": "potential_shaping", "phi": t.phi.tolist(), "k_initial": t.k_initial}
    if isinstance(t, SPrimeRedistribution):
        return {"family": "sprime_redistribution", "delta": t.delta.tolist()}
    if isinstance(t, PositiveLinearScaling):
        return {"family": "positive_scaling", "c": t.c}
    if isinstance(t, ZeroPreservingMonotone):
        return {"family": "zpmt", "breakpoints": t.breakpoints.tolist()}
    if isinstance(t, Mask):
        return {
            "family": "mask",
            "transitions": [list(x) for x in t.transitions],
            "replacement": t.replacement.tolist(),
            "which": t.which,
        }
    if isinstance(t, OptimalityPreserving):
        return {
            "family": "opt_preserving",
            "opt_sets": [list(x) for x in t.opt_sets],
            "psi": t.psi.tolist(),
            "gaps": t.gaps.tolist(),
        }
    raise ContractError(f"unknown transformation {type(t).__name__}")


def transform_from_obj(obj: dict) -> TransformSpec:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ContractError("transformation document must be an object with a 'family' key")
    fam = obj["family"]
    try:
        if fam == "identity":
            return Identity(note=obj.get("note", ""))
        if fam == "potential_shaping":
            k = obj.get("k_initial")
            return PotentialShaping(phi=np.array(obj["phi"], dtype=float),
                                    k_initial=None if k is None else float(k))
        if fam == "sprime_redistribution":
            return SPrimeRedistribution(delta=np.array(obj["delta"], dtype=float))
        if fam == "positive_scaling":
            return PositiveLinearScaling(c=float(obj["c"]))
        if fam == "zpmt":
            return ZeroPreservingMonotone(breakpoints=np.array(obj["breakpoints"], dtype=float))
        if fam == "mask":
            return Mask(
                transitions=tuple(tuple(int(v) for v in t) for t in obj["transitions"]),
                replacement=np.array(obj["replacement"], dtype=float),
                which=obj.get("which", ""),
            )
        if fam == "opt_preserving":
            return OptimalityPreserving(
                opt_sets=tuple(tuple(int(a) for a in acts) for acts in obj["opt_sets"]),
                psi=np.array(obj["psi"], dtype=float),
                gaps=np.array(obj["gaps"], dtype=float),
            )
    except (KeyError, TypeError, ValueError) as e:
        raise ContractError(f"malformed {fam} document: {e}") from e
    raise ContractError(f"unknown transformation family {fam!r}")
