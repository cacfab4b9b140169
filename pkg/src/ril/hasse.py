"""Ambiguity-refinement order over the reward-derived object kinds.

Kind A refines kind B when every reward transformation preserving A's object
also preserves B's: determining A pins the reward down at least as much as
determining B.  refinement_compare decides one pair empirically by hunting
for refuting witnesses in both directions; this module assembles all pairs
into the induced order:

* kinds with no refuting witness either way merge into equivalence groups,
* groups are ordered by the strict verdicts of their member pairs,
* the reduced cover relation (the diagram's edges) drops every ordered pair
  implied by transitivity.

Member pairs of two groups must all agree on the groups' relation and the
group order must be transitively consistent; violations are reported on the
result rather than silently patched, since each would falsify the order
itself.  All iteration follows the fixed kind roster, so results are
deterministic given the configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError
from .invariance import (
    RELATION_A_REFINES_B,
    RELATION_B_REFINES_A,
    RELATION_EQUIVALENT,
    RELATION_INCOMPARABLE,
    CheckConfig,
    RefinementVerdict,
    refinement_compare,
)
from .objects import KIND_LABELS, KIND_TAGS


@dataclass(frozen=True)
class RefinementOrder:
    verdicts: tuple[RefinementVerdict, ...]
    groups: tuple[tuple[str, ...], ...]
    # Reduced cover edges between group representatives, finer -> coarser.
    edges: tuple[tuple[str, str], ...]
    issues: tuple[str, ...]

    @property
    def consistent(self) -> bool:
        return not self.issues

    def group_of(self, kind: str) -> tuple[str, ...]:
        for g in self.groups:
            if kind in g:
                return g
        raise ContractError(f"unknown object kind {kind!r}")

    def relation(self, kind_a: str, kind_b: str) -> str:
        for v in self.verdicts:
            if (v.kind_a, v.kind_b) == (kind_a, kind_b):
                return v.relation
            if (v.kind_a, v.kind_b) == (kind_b, kind_a):
                return _flip(v.relation)
        raise ContractError(f"no verdict recorded for ({kind_a!r}, {kind_b!r})")

    def to_obj(self, include_witnesses: bool = False) -> dict:
        pairs = {}
        for v in self.verdicts:
            obj = v.to_obj() if include_witnesses else {"relation": v.relation}
            pairs[f"{v.kind_a}|{v.kind_b}"] = obj
        return {
            "kinds": [k for g in self.groups for k in g],
            "groups": [list(g) for g in self.groups],
            "edges": [list(e) for e in self.edges],
            "pairs": pairs,
            "issues": list(self.issues),
            "consistent": self.consistent,
        }


def _flip(relation: str) -> str:
    if relation == RELATION_A_REFINES_B:
        return RELATION_B_REFINES_A
    if relation == RELATION_B_REFINES_A:
        return RELATION_A_REFINES_B
    return relation


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # Keep the earlier roster entry as the representative.
            if KIND_TAGS.index(ry) < KIND_TAGS.index(rx):
                rx, ry = ry, rx
            self.parent[ry] = rx


def _transitive_reduction(nodes: list[str], reaches: dict[tuple[str, str], bool]) -> list[tuple[str, str]]:
    edges = []
    for u in nodes:
        for v in nodes:
            if u == v or not reaches[(u, v)]:
                continue
            implied = any(
                w not in (u, v) and reaches[(u, w)] and reaches[(w, v)] for w in nodes
            )
            if not implied:
                edges.append((u, v))
    return edges


def build_refinement_order(cfg: CheckConfig, kinds: tuple[str, ...] = KIND_TAGS) -> RefinementOrder:
    """Compare every pair of kinds and assemble the refinement diagram."""
    for k in kinds:
        if k not in KIND_TAGS:
            raise ContractError(f"unknown object kind {k!r}")
    verdicts = []
    for i, a in enumerate(kinds):
        for b in kinds[i + 1:]:
            verdicts.append(refinement_compare(a, b, cfg))

    uf = _UnionFind(kinds)
    for v in verdicts:
        if v.relation == RELATION_EQUIVALENT:
            uf.union(v.kind_a, v.kind_b)
    reps = []
    members: dict[str, list[str]] = {}
    for k in kinds:
        r = uf.find(k)
        if r not in members:
            members[r] = []
            reps.append(r)
        members[r].append(k)
    groups = tuple(tuple(members[r]) for r in reps)

    by_pair = {(v.kind_a, v.kind_b): v.relation for v in verdicts}

    def pair_relation(a: str, b: str) -> str:
        if (a, b) in by_pair:
            return by_pair[(a, b)]
        return _flip(by_pair[(b, a)])

    issues = []
    finer: dict[tuple[str, str], bool] = {}
    for ra in reps:
        for rb in reps:
            if ra == rb:
                continue
            rels = {pair_relation(a, b) for a in members[ra] for b in members[rb]}
            if len(rels) > 1:
                issues.append(
                    f"groups {ra} and {rb} have conflicting member verdicts: {sorted(rels)}"
                )
            rel = rels.pop() if len(rels) == 1 else RELATION_INCOMPARABLE
            if rel == RELATION_EQUIVALENT:
                issues.append(
                    f"member pairs of distinct groups {ra} and {rb} compare as equivalent"
                )
            finer[(ra, rb)] = rel == RELATION_A_REFINES_B

    # The pairwise strict relation should already be transitively closed;
    # gaps would mean some witness search failed where one must exist.
    for ra in reps:
        for rb in reps:
            for rc in reps:
                if len({ra, rb, rc}) == 3 and finer.get((ra, rb)) and finer.get((rb, rc)):
                    if not finer.get((ra, rc)):
                        issues.append(
                            f"order is not transitive across {ra} -> {rb} -> {rc}"
                        )
    for ra in reps:
        for rb in reps:
            if ra != rb and finer.get((ra, rb)) and finer.get((rb, ra)):
                issues.append(f"order has a two-cycle between {ra} and {rb}")

    edges = _transitive_reduction(reps, {k: bool(v) for k, v in finer.items()})
    return RefinementOrder(
        verdicts=tuple(verdicts), groups=groups, edges=tuple(edges), issues=tuple(issues)
    )


def render_order(order: RefinementOrder) -> str:
    lines = ["Ambiguity refinement order (finer -> coarser)", ""]
    lines.append("Groups of equivalent kinds:")
    for i, g in enumerate(order.groups, start=1):
        lines.append(f"  G{i}: " + ", ".join(g))
    lines.append("")
    lines.append("Cover edges:")
    rep_index = {g[0]: i + 1 for i, g in enumerate(order.groups)}
    for u, v in order.edges:
        lines.append(f"  G{rep_index[u]} ({u}) -> G{rep_index[v]} ({v})")
    if order.issues:
        lines.append("")
        lines.append("Consistency issues:")
        for issue in order.issues:
            lines.append(f"  ! {issue}")
    else:
        lines.append("")
        lines.append(f"{len(order.groups)} groups, {len(order.edges)} cover edges, order consistent")
    return "\n".join(lines)


def order_to_dot(order: RefinementOrder) -> str:
    """Graphviz rendering of the diagram; nodes list each group's members."""
    rep_index = {g[0]: i for i, g in enumerate(order.groups)}
    lines = ["digraph refinement {", "  rankdir=TB;", "  node [shape=box];"]
    for i, g in enumerate(order.groups):
        label = "\\n".join(KIND_LABELS.get(k, k) for k in g)
        lines.append(f'  g{i} [label="{label}"];')
    for u, v in order.edges:
        lines.append(f"  g{rep_index[u]} -> g{rep_index[v]};")
    lines.append("}")
    return "\n".join(lines)
